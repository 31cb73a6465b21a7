"""Shared test oracles, independent of the library's own code paths.

Clusters are represented here as (nested, path): `nested` is a recursive
(label, (child, ...)) tuple and `path` is the tuple of child indices from the
root down to the bottom boundary leaf, or None for rank 0. Merges on this
representation are implemented directly from their definitions and never
touch the store, so they can sit on the other side of equivalence checks.
"""

import math

from topdag.clusters import BoundedTree, ConsStore, LabelMismatch, RankViolation
from topdag.tree import Tree


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def check_tree_invariants(t: Tree) -> None:
    """Single root, one parent per non-root, preorder-dense ids."""
    n = t.node_count
    assert len(t.children) == n
    assert t.edge_count == n - 1
    parent_seen = [0] * n
    for u in range(n):
        for c in t.children[u]:
            assert 0 <= c < n
            assert c > u, "child ids must exceed the parent's (preorder)"
            parent_seen[c] += 1
    assert parent_seen[0] == 0, "root must not appear as a child"
    assert all(parent_seen[v] == 1 for v in range(1, n)), "exactly one parent each"
    # preorder: a DFS from the root visits 0..n-1 in order
    order = []
    stack = [0]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(reversed(t.children[u]))
    assert order == list(range(n))


def tree_to_nested(t: Tree, node: int = 0) -> tuple:
    return (t.labels[node], tuple(tree_to_nested(t, c) for c in t.children[node]))


def nested_canon(nested: tuple, path: tuple | None) -> str:
    """Serialization with '*' appended to the bottom boundary's label."""
    label, kids = nested
    mark = "*" if path == () else ""
    if not kids:
        return label + mark
    parts = []
    for i, sub in enumerate(kids):
        sub_path = path[1:] if path and path[0] == i else None
        parts.append(nested_canon(sub, sub_path))
    return label + mark + "(" + ",".join(parts) + ")"


def bounded_canon(bt: BoundedTree) -> str:
    """Canonical string of an evaluated cluster, bottom marked with '*'."""

    def walk(node: int) -> str:
        label = bt.tree.labels[node]
        if node == bt.bottom:
            label += "*"
        kids = bt.tree.children[node]
        if not kids:
            return label
        return label + "(" + ",".join(walk(c) for c in kids) + ")"

    return walk(bt.tree.root)


def bounded_to_cluster(bt: BoundedTree) -> tuple:
    """(nested, path) view of an evaluated cluster."""
    path = None
    if bt.bottom is not None:
        parent = {}
        stack = [0]
        while stack:
            u = stack.pop()
            for i, c in enumerate(bt.tree.children[u]):
                parent[c] = (u, i)
                stack.append(c)
        rev = []
        node = bt.bottom
        while node != 0:
            node, idx = parent[node]
            rev.append(idx)
        path = tuple(reversed(rev))
    return tree_to_nested(bt.tree), path


def oracle_vmerge(s: tuple, t: tuple) -> tuple:
    """Direct vertical merge on (nested, path) clusters."""
    (s_tree, s_path), (t_tree, t_path) = s, t
    if s_path is None:
        raise RankViolation("left operand has rank 0")

    def graft(nested: tuple, path: tuple) -> tuple:
        label, kids = nested
        if not path:
            if label != t_tree[0]:
                raise LabelMismatch("boundary and root labels differ")
            return t_tree
        i = path[0]
        return (
            label,
            kids[:i] + (graft(kids[i], path[1:]),) + kids[i + 1 :],
        )

    merged = graft(s_tree, s_path)
    new_path = s_path + t_path if t_path is not None else None
    return merged, new_path


def oracle_hmerge(s: tuple, t: tuple) -> tuple:
    """Direct horizontal merge on (nested, path) clusters."""
    (s_tree, s_path), (t_tree, t_path) = s, t
    if s_path is not None and t_path is not None:
        raise RankViolation("both operands have rank 1")
    if s_tree[0] != t_tree[0]:
        raise LabelMismatch("root labels differ")
    merged = (s_tree[0], s_tree[1] + t_tree[1])
    if s_path is not None:
        new_path = s_path
    elif t_path is not None:
        new_path = (len(s_tree[1]) + t_path[0],) + t_path[1:]
    else:
        new_path = None
    return merged, new_path


def cluster_expr(store: ConsStore, nested: tuple, path: tuple | None) -> int:
    """Build some expression that evaluates to the given cluster."""
    label, kids = nested
    assert kids, "clusters have at least one edge"
    if len(kids) >= 2:
        left = (label, kids[:1])
        right = (label, kids[1:])
        if path is None:
            lp, rp = None, None
        elif path[0] == 0:
            lp, rp = path, None
        else:
            lp, rp = None, (path[0] - 1,) + path[1:]
        return store.hmerge(
            cluster_expr(store, left, lp), cluster_expr(store, right, rp)
        )
    child = kids[0]
    if not child[1]:
        return store.atomic(label, child[0], 1 if path == (0,) else 0)
    lower_path = path[1:] if path is not None else None
    return store.vmerge(
        store.atomic(label, child[0], 1),
        cluster_expr(store, child, lower_path),
    )


def all_clusters(t: Tree) -> list[tuple]:
    """Every cluster of t as (nested, path): the whole tree at rank 0 plus one
    rank-1 variant per non-root leaf."""
    nested = tree_to_nested(t)
    out = [(nested, None)]
    paths: list[tuple] = []

    def collect(node: int, prefix: tuple) -> None:
        kids = t.children[node]
        if not kids and prefix:
            paths.append(prefix)
        for i, c in enumerate(kids):
            collect(c, prefix + (i,))

    collect(0, ())
    out.extend((nested, p) for p in paths)
    return out


def all_subclusters(t: Tree) -> set[str]:
    """Canonical strings of every subcluster of t: a node v, a consecutive run
    of its child subtrees, optionally punctured at one node inside the run
    (which becomes the marked bottom leaf)."""

    def subtree(node: int) -> tuple:
        return (
            t.labels[node],
            tuple(subtree(c) for c in t.children[node]),
        )

    def truncate(nested: tuple, path: tuple) -> tuple:
        label, kids = nested
        if not path:
            return (label + "*", ())
        i = path[0]
        return (
            label,
            kids[:i] + (truncate(kids[i], path[1:]),) + kids[i + 1 :],
        )

    def render(nested: tuple) -> str:
        label, kids = nested
        if not kids:
            return label
        return label + "(" + ",".join(render(s) for s in kids) + ")"

    def paths_within(nested: tuple, prefix: tuple, acc: list) -> None:
        acc.append(prefix)
        for i, sub in enumerate(nested[1]):
            paths_within(sub, prefix + (i,), acc)

    out: set[str] = set()
    nodes = list(range(t.node_count))
    for v in nodes:
        kids = t.children[v]
        d = len(kids)
        for i in range(d):
            for j in range(i, d):
                run = tuple(subtree(kids[s]) for s in range(i, j + 1))
                frag = (t.labels[v], run)
                out.add(render(frag))
                inner: list[tuple] = []
                for off, sub in enumerate(run):
                    paths_within(sub, (off,), inner)
                for p in inner:
                    out.add(render(truncate(frag, p)))
    return out


def replay_shrink(t: Tree, trace: list, shrunk) -> None:
    """Re-run a contraction trace on explicit edge sets and require every
    skeleton edge's handle to evaluate to exactly the accumulated fragment."""
    parent = [-1] * t.node_count
    for u in range(t.node_count):
        for c in t.children[u]:
            parent[c] = u
    edge_sets: dict[int, set] = {
        v: {(parent[v], v)} for v in range(1, t.node_count)
    }
    for _case, _u, v, w in trace:
        edge_sets[w] |= edge_sets[v]
        del edge_sets[v]

    sk = shrunk.skeleton
    sk_parent = [-1] * sk.node_count
    for u in range(sk.node_count):
        for c in sk.children[u]:
            sk_parent[c] = u
    assert set(shrunk.node_ids[v] for v in range(1, sk.node_count)) == set(
        edge_sets
    ), "skeleton edges and surviving clusters must coincide"

    for sv in range(1, sk.node_count):
        orig_child = shrunk.node_ids[sv]
        orig_parent = shrunk.node_ids[sk_parent[sv]]
        edges = edge_sets[orig_child]
        bottom = orig_child if sk.children[sv] else None

        def build(node: int) -> str:
            label = t.labels[node]
            if node == bottom:
                label += "*"
            kids = [c for c in t.children[node] if (node, c) in edges]
            if not kids:
                return label
            return label + "(" + ",".join(build(c) for c in kids) + ")"

        expected = build(orig_parent)
        actual = bounded_canon(shrunk.store.evaluate(shrunk.handle[sv]))
        assert actual == expected, (
            f"edge {orig_parent}->{orig_child}: handle evaluates to "
            f"{actual}, trace says {expected}"
        )
        assert shrunk.store.weight[shrunk.handle[sv]] == len(edges)
        assert shrunk.weight[sv] == len(edges)
