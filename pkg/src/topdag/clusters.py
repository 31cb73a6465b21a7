"""Cluster algebra: single-boundary tree fragments and their two merges.

A cluster is a tree fragment whose root is its top boundary; a rank-1 cluster
additionally distinguishes one non-root leaf as its bottom boundary. An atomic
cluster is a single edge, written (parent label, child label, rank bit). Two
partial merges combine clusters:

  vertical   v(s, t): glue t's root onto s's bottom boundary leaf. Defined
             when s has rank 1 and the labels at the glue point agree. The
             result keeps s's root on top and inherits t's rank and boundary.
  horizontal h(s, t): glue s and t at a shared root label. Defined when at
             most one operand has rank 1. s's children precede t's children;
             the boundary comes from whichever operand has one.

Expressions over atomic clusters are held in a ConsStore, an append-only
table that interns every node by structural signature, so each distinct
subexpression gets exactly one id and the stored expression is a dag. Rank,
boundary label, weight (edge count of the evaluated fragment) and expression
height are cached per node, which makes merge validity an O(1) check and
evaluation total on store-produced ids.
"""

from dataclasses import dataclass

from .tree import Tree

LEAF, VMERGE, HMERGE = 0, 1, 2

_KIND_TAG = {LEAF: "L", VMERGE: "V", HMERGE: "H"}


class RankViolation(ValueError):
    """Merge attempted with an operand of inadmissible rank."""


class LabelMismatch(ValueError):
    """Merge attempted where the glued boundary labels differ."""


@dataclass
class BoundedTree:
    """Evaluation result: a tree, its rank, and the bottom boundary leaf.

    `bottom` is a node id of `tree`, present exactly when rank is 1; it is
    always a non-root leaf. The top boundary is always the root.
    """

    tree: Tree
    rank: int
    bottom: int | None


class ConsStore:
    """Append-only, structurally deduplicated store of cluster expressions.

    Single-writer while building; `sealed` stores reject further inserts and
    are safe to share across threads.
    """

    __slots__ = (
        "kind",
        "left",
        "right",
        "rank",
        "root_label",
        "bottom_label",
        "weight",
        "height",
        "_index",
        "sealed",
    )

    def __init__(self):
        self.kind: list[int] = []
        self.left: list = []  # parent label for leaves, left child id for merges
        self.right: list = []  # child label for leaves, right child id for merges
        self.rank: list[int] = []
        self.root_label: list[str] = []
        self.bottom_label: list = []
        self.weight: list[int] = []
        self.height: list[int] = []
        self._index: dict = {}
        self.sealed = False

    def __len__(self) -> int:
        return len(self.kind)

    def _check_id(self, nid: int) -> None:
        if not isinstance(nid, int) or not 0 <= nid < len(self.kind):
            raise ValueError(f"unknown top tree id {nid!r}")

    def _guard_insert(self) -> None:
        if self.sealed:
            raise ValueError("store is sealed")

    def signature(self, nid: int) -> tuple:
        """Structural key of a node: ('L', a, b, i) or ('V'|'H', left, right)."""
        self._check_id(nid)
        kd = self.kind[nid]
        if kd == LEAF:
            return ("L", self.left[nid], self.right[nid], self.rank[nid])
        return (_KIND_TAG[kd], self.left[nid], self.right[nid])

    def atomic(self, a: str, b: str, i: int) -> int:
        """Intern the single-edge cluster a -> b with rank bit i."""
        key = (LEAF, a, b, i)
        nid = self._index.get(key)
        if nid is not None:
            return nid
        self._guard_insert()
        nid = len(self.kind)
        self._index[key] = nid
        self.kind.append(LEAF)
        self.left.append(a)
        self.right.append(b)
        self.rank.append(i)
        self.root_label.append(a)
        self.bottom_label.append(b if i else None)
        self.weight.append(1)
        self.height.append(1)
        return nid

    def vmerge(self, s: int, t: int) -> int:
        """Intern the vertical merge of s and t."""
        size = len(self.kind)
        if not (0 <= s < size and 0 <= t < size):
            raise ValueError(f"unknown top tree id {s if not 0 <= s < size else t!r}")
        rank = self.rank
        if rank[s] != 1:
            raise RankViolation("vertical merge needs a rank-1 left operand")
        bottom_label, root_label = self.bottom_label, self.root_label
        if bottom_label[s] != root_label[t]:
            raise LabelMismatch(
                f"cannot glue root {root_label[t]!r} onto boundary "
                f"{bottom_label[s]!r}"
            )
        key = (VMERGE, s, t)
        nid = self._index.get(key)
        if nid is not None:
            return nid
        self._guard_insert()
        self._index[key] = size
        self.kind.append(VMERGE)
        self.left.append(s)
        self.right.append(t)
        rank.append(rank[t])
        root_label.append(root_label[s])
        bottom_label.append(bottom_label[t])
        weight = self.weight
        weight.append(weight[s] + weight[t])
        height = self.height
        hs, ht = height[s], height[t]
        height.append(1 + (hs if hs > ht else ht))
        return size

    def hmerge(self, s: int, t: int) -> int:
        """Intern the horizontal merge of s and t (s's children first)."""
        size = len(self.kind)
        if not (0 <= s < size and 0 <= t < size):
            raise ValueError(f"unknown top tree id {s if not 0 <= s < size else t!r}")
        rank = self.rank
        rs, rt = rank[s], rank[t]
        if rs + rt > 1:
            raise RankViolation("horizontal merge needs rank sum <= 1")
        root_label = self.root_label
        if root_label[s] != root_label[t]:
            raise LabelMismatch(
                f"cannot share roots {root_label[s]!r} and {root_label[t]!r}"
            )
        key = (HMERGE, s, t)
        nid = self._index.get(key)
        if nid is not None:
            return nid
        self._guard_insert()
        self._index[key] = size
        self.kind.append(HMERGE)
        self.left.append(s)
        self.right.append(t)
        rank.append(rs + rt)
        root_label.append(root_label[s])
        bottom_label = self.bottom_label
        bottom_label.append(bottom_label[s] if rs else bottom_label[t])
        weight = self.weight
        weight.append(weight[s] + weight[t])
        height = self.height
        hs, ht = height[s], height[t]
        height.append(1 + (hs if hs > ht else ht))
        return size

    def evaluate(self, nid: int) -> BoundedTree:
        """Evaluate an expression to its fragment, expanding shared nodes.

        Work is driven by explicit stacks so neither expression height nor
        output size bounds recursion depth. Output node ids are preorder
        dense. Never fails on ids produced by atomic/vmerge/hmerge (validity
        was checked eagerly at merge time).
        """
        self._check_id(nid)
        kind, left, right, rank = self.kind, self.left, self.right, self.rank
        out_labels: list[str] = []
        out_children: list[list[int]] = []
        vals: list[tuple] = []
        work = [(nid, False)]
        while work:
            node, ready = work.pop()
            kd = kind[node]
            if kd == LEAF:
                u = len(out_labels)
                out_labels.append(left[node])
                out_children.append([u + 1])
                out_labels.append(right[node])
                out_children.append([])
                vals.append((u, u + 1 if rank[node] else None))
            elif not ready:
                work.append((node, True))
                work.append((right[node], False))
                work.append((left[node], False))
            else:
                rroot, rbot = vals.pop()
                lroot, lbot = vals.pop()
                if kd == VMERGE:
                    # graft: the right fragment's root dissolves into the
                    # left fragment's boundary leaf (labels agree)
                    out_children[lbot] = out_children[rroot]
                    vals.append((lroot, rbot))
                else:
                    out_children[lroot].extend(out_children[rroot])
                    vals.append((lroot, lbot if lbot is not None else rbot))
        root, bottom = vals.pop()
        labels2, children2, bottom2 = _compact(out_labels, out_children, root, bottom)
        return BoundedTree(Tree(labels2, children2), 0 if bottom is None else 1, bottom2)

    def reachable(self, nid: int) -> int:
        """Number of store nodes reachable from nid (nid included)."""
        self._check_id(nid)
        kind, left, right = self.kind, self.left, self.right
        seen = {nid}
        todo = [nid]
        while todo:
            x = todo.pop()
            if kind[x] != LEAF:
                for c in (left[x], right[x]):
                    if c not in seen:
                        seen.add(c)
                        todo.append(c)
        return len(seen)

    def top_stats(self, nid: int) -> tuple[int, int, int, int]:
        """(reachable store nodes, height, weight, rank) of an expression."""
        return (
            self.reachable(nid),
            self.height[nid],
            self.weight[nid],
            self.rank[nid],
        )


def _compact(labels, children, root, bottom):
    """Renumber a built fragment to preorder-dense ids, dropping dead nodes."""
    new_labels: list[str] = []
    new_children: list[list[int]] = []
    new_bottom = None
    stack = [(root, -1)]
    while stack:
        old, parent = stack.pop()
        nid = len(new_labels)
        new_labels.append(labels[old])
        new_children.append([])
        if parent >= 0:
            new_children[parent].append(nid)
        if old == bottom:
            new_bottom = nid
        for c in reversed(children[old]):
            stack.append((c, nid))
    return new_labels, new_children, new_bottom
