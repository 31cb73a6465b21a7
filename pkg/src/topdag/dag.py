"""Minimal dags of trees: shared-subtree construction and exact unfolding.

The minimal dag keeps one node per distinct subtree. Child lists are ordered
and may contain repeated entries (parallel edges), which preserves both child
order and multiplicity of shared subtrees.
"""

from .tree import Tree


class Dag:
    """Rooted dag with ordered child lists; parallel edges allowed."""

    __slots__ = ("labels", "children", "root")

    def __init__(self, labels: list[str], children: list[list[int]], root: int):
        self.labels = labels
        self.children = children
        self.root = root

    @property
    def node_count(self) -> int:
        return len(self.labels)

    @property
    def edge_count(self) -> int:
        return sum(len(c) for c in self.children)

    def __repr__(self) -> str:
        return f"Dag(nodes={self.node_count}, edges={self.edge_count}, root={self.root})"


def build_min_dag(t: Tree) -> Dag:
    """Minimal dag of t: one node per distinct subtree, built bottom-up by
    interning (label, child-id list) signatures. Linear amortized time.

    Relies on preorder-dense ids (children have larger ids than parents), so a
    reverse-id sweep visits children first. Deterministic: equal trees get
    identical dag node ids.
    """
    labels, children = t.labels, t.children
    index: dict = {}
    d_labels: list[str] = []
    d_children: list[list[int]] = []
    mapped = [0] * len(labels)
    for v in range(len(labels) - 1, -1, -1):
        kid_ids = [mapped[c] for c in children[v]]
        sig = (labels[v], tuple(kid_ids))
        nid = index.get(sig)
        if nid is None:
            nid = len(d_labels)
            index[sig] = nid
            d_labels.append(labels[v])
            d_children.append(kid_ids)
        mapped[v] = nid
    return Dag(d_labels, d_children, mapped[0])


def unfold(d: Dag, node_limit: int = 100_000_000) -> Tree:
    """Expand shared nodes back into the unique tree the dag denotes.

    Refuses to build results beyond `node_limit` nodes (sharing can make the
    unfolding exponentially larger than the dag).
    """
    sizes = _unfolded_sizes(d)
    if sizes[d.root] > node_limit:
        raise ValueError(
            f"unfolded size {sizes[d.root]} exceeds limit {node_limit}"
        )
    labels: list[str] = [d.labels[d.root]]
    children: list[list[int]] = [[]]
    stack = [(d.root, 0, 0)]
    while stack:
        node, tid, pos = stack.pop()
        kids = d.children[node]
        if pos < len(kids):
            stack.append((node, tid, pos + 1))
            c = kids[pos]
            nid = len(labels)
            labels.append(d.labels[c])
            children.append([])
            children[tid].append(nid)
            stack.append((c, nid, 0))
    return Tree(labels, children)


def _unfolded_sizes(d: Dag) -> list[int]:
    """Node count of each dag node's unfolding (exact, big ints)."""
    sizes: list[int] = [0] * d.node_count
    done = [False] * d.node_count
    stack = [(d.root, False)]
    while stack:
        node, ready = stack.pop()
        if done[node]:
            continue
        if ready:
            sizes[node] = 1 + sum(sizes[c] for c in d.children[node])
            done[node] = True
        else:
            stack.append((node, True))
            for c in d.children[node]:
                if not done[c]:
                    stack.append((c, False))
    return sizes


def dag_stats(d: Dag) -> tuple[int, int]:
    """(node count, edge count) as stored."""
    return d.node_count, d.edge_count


def dag_size(d: Dag) -> int:
    """Size metric used in compression ratios: nodes plus edges."""
    return d.node_count + d.edge_count
