"""Ordered labelled trees: text format, equality, generators, enumeration.

A tree is stored as two parallel arrays indexed by node id: a label per node
and an ordered list of child ids per node. Ids are dense integers assigned in
preorder, so node 0 is always the root and every child id is larger than its
parent's. All values are immutable by convention once built.
"""

import itertools
import random
import re
from typing import Iterator

_LABEL_RE = re.compile(r"[A-Za-z0-9_]+")
_WS = " \t\r\n"

SHAPES = ("uniform", "path", "star", "caterpillar", "full_binary")


class TreeParseError(ValueError):
    """Malformed tree text; `offset` is the byte position of the fault."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte {offset})")
        self.offset = offset


class Tree:
    """Ordered, unranked, node-labelled tree with preorder-dense node ids."""

    __slots__ = ("labels", "children")

    def __init__(self, labels: list[str], children: list[list[int]]):
        self.labels = labels
        self.children = children

    @property
    def root(self) -> int:
        return 0

    @property
    def node_count(self) -> int:
        return len(self.labels)

    @property
    def edge_count(self) -> int:
        return len(self.labels) - 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, Tree):
            return NotImplemented
        return tree_equal(self, other)

    __hash__ = None  # mutable arrays

    def __repr__(self) -> str:
        text = serialize_tree(self)
        if len(text) > 64:
            text = text[:61] + "..."
        return f"Tree({text!r})"


def parse_tree(text: str) -> Tree:
    """Parse `LABEL` or `LABEL(TREE,TREE,...)` text, whitespace tolerated.

    Labels are nonempty runs of [A-Za-z0-9_]. Raises TreeParseError with the
    byte offset of the first offending position.
    """
    labels: list[str] = []
    children: list[list[int]] = []
    stack: list[int] = []
    cur = -1
    need_label = True
    i, n = 0, len(text)
    while True:
        while i < n and text[i] in _WS:
            i += 1
        if i >= n:
            break
        ch = text[i]
        if need_label:
            m = _LABEL_RE.match(text, i)
            if not m:
                raise TreeParseError("expected label", i)
            nid = len(labels)
            labels.append(m.group())
            children.append([])
            if stack:
                children[stack[-1]].append(nid)
            cur = nid
            need_label = False
            i = m.end()
        elif ch == "(":
            stack.append(cur)
            need_label = True
            i += 1
        elif ch == ",":
            if not stack:
                raise TreeParseError("',' outside parentheses", i)
            need_label = True
            i += 1
        elif ch == ")":
            if not stack:
                raise TreeParseError("unmatched ')'", i)
            cur = stack.pop()
            i += 1
        else:
            raise TreeParseError("unexpected character", i)
    if not labels:
        raise TreeParseError("empty input", i)
    if need_label:
        raise TreeParseError("expected label", i)
    if stack:
        raise TreeParseError("unclosed '('", i)
    return Tree(labels, children)


def serialize_tree(t: Tree) -> str:
    """Canonical text form: no whitespace, children in order.

    parse_tree(serialize_tree(t)) == t. Iterative, safe for very deep trees.
    """
    labels, children = t.labels, t.children
    out: list[str] = []
    stack = [(t.root, 0)]
    while stack:
        node, idx = stack.pop()
        kids = children[node]
        if idx == 0:
            out.append(labels[node])
            if not kids:
                continue
            out.append("(")
        elif idx < len(kids):
            out.append(",")
        else:
            out.append(")")
            continue
        stack.append((node, idx + 1))
        stack.append((kids[idx], 0))
    return "".join(out)


def tree_equal(s: Tree, t: Tree) -> bool:
    """True iff s and t are isomorphic as ordered labelled trees."""
    if s.node_count != t.node_count:
        return False
    sl, tl = s.labels, t.labels
    sc, tc = s.children, t.children
    stack = [(s.root, t.root)]
    while stack:
        a, b = stack.pop()
        if sl[a] != tl[b]:
            return False
        ca, cb = sc[a], tc[b]
        if len(ca) != len(cb):
            return False
        stack.extend(zip(ca, cb))
    return True


def _symbols(alphabet: int) -> list[str]:
    syms = [chr(ord("a") + i) for i in range(min(alphabet, 26))]
    syms.extend(f"L{i}" for i in range(26, alphabet))
    return syms


def _uniform_children(edges: int, rng: random.Random) -> list[list[int]]:
    # Random arrangement of edges+1 up-steps and edges down-steps; the cycle
    # lemma gives exactly one rotation whose proper prefixes stay positive.
    # Cutting after the last minimum and dropping the leading up-step leaves a
    # uniformly random balanced string, read as descend/ascend moves.
    seq = [1] * (edges + 1) + [-1] * edges
    rng.shuffle(seq)
    total = 0
    low = 0
    cut = 0
    for i, step in enumerate(seq):
        total += step
        if total <= low:
            low = total
            cut = i + 1
    seq = seq[cut:] + seq[:cut]
    children: list[list[int]] = [[]]
    stack = [0]
    for step in seq[1:]:
        if step > 0:
            nid = len(children)
            children.append([])
            children[stack[-1]].append(nid)
            stack.append(nid)
        else:
            stack.pop()
    return children


def _path_children(edges: int) -> list[list[int]]:
    return [[i + 1] for i in range(edges)] + [[]]


def _star_children(edges: int) -> list[list[int]]:
    return [list(range(1, edges + 1))] + [[] for _ in range(edges)]


def _caterpillar_children(edges: int) -> list[list[int]]:
    # Spine of floor(edges/2) edges; the remaining edges hang one pendant
    # leaf off each spine node from the root down.
    spine = edges // 2
    leaves = edges - spine
    children: list[list[int]] = [[] for _ in range(edges + 1)]
    cur = 0
    next_id = 1
    for i in range(spine + 1):
        if i < leaves:
            children[cur].append(next_id)
            next_id += 1
        if i < spine:
            children[cur].append(next_id)
            cur = next_id
            next_id += 1
    return children


def _full_binary_children(edges: int) -> list[list[int]]:
    nodes = edges + 1
    if nodes & (nodes + 1):
        raise ValueError(
            f"full_binary needs 2**h - 2 edges for some h >= 1, got {edges}"
        )
    children: list[list[int]] = [[] for _ in range(nodes)]
    height = (nodes + 1).bit_length() - 1
    stack = [(0, height)]
    while stack:
        node, d = stack.pop()
        if d > 1:
            left = node + 1
            right = node + (1 << (d - 1))
            children[node] = [left, right]
            stack.append((right, d - 1))
            stack.append((left, d - 1))
    return children


def random_tree(edges: int, alphabet: int, seed: int, shape: str = "uniform") -> Tree:
    """Deterministic random tree with `edges` edges.

    Shapes: uniform (ordered tree shapes sampled uniformly), path, star,
    caterpillar, full_binary (requires edges = 2**h - 2). Labels are drawn
    independently and uniformly from the first `alphabet` symbols.
    """
    if edges < 0:
        raise ValueError("edges must be >= 0")
    if alphabet < 1:
        raise ValueError("alphabet must be >= 1")
    if shape not in SHAPES:
        raise ValueError(f"unknown shape {shape!r}")
    rng = random.Random(seed)
    if shape == "uniform":
        children = _uniform_children(edges, rng)
    elif shape == "path":
        children = _path_children(edges)
    elif shape == "star":
        children = _star_children(edges)
    elif shape == "caterpillar":
        children = _caterpillar_children(edges)
    else:
        children = _full_binary_children(edges)
    syms = _symbols(alphabet)
    labels = rng.choices(syms, k=edges + 1)
    return Tree(labels, children)


def _forest_shapes(total: int, memo: dict) -> list[tuple]:
    """All ordered forests whose trees cost `total` edges in all (each tree
    costs its own edges plus one attaching edge). A shape is the tuple of its
    roots' child shapes."""
    got = memo.get(total)
    if got is not None:
        return got
    if total == 0:
        out = [()]
    else:
        out = []
        for first_cost in range(1, total + 1):
            for first in _forest_shapes(first_cost - 1, memo):
                for rest in _forest_shapes(total - first_cost, memo):
                    out.append((first,) + rest)
    memo[total] = out
    return out


def _shape_children(shape: tuple) -> list[list[int]]:
    children: list[list[int]] = []
    stack = [(shape, -1)]
    while stack:
        node_shape, parent = stack.pop()
        nid = len(children)
        children.append([])
        if parent >= 0:
            children[parent].append(nid)
        for sub in reversed(node_shape):
            stack.append((sub, nid))
    return children


def enumerate_trees(max_edges: int, alphabet: int) -> Iterator[Tree]:
    """Yield every ordered labelled tree with 1..max_edges edges exactly once.

    Guarded at max_edges <= 8; the count is sum of Catalan(j) * alphabet**(j+1)
    over j, which explodes quickly beyond that.
    """
    if max_edges > 8:
        raise ValueError("refusing to enumerate beyond 8 edges")
    if alphabet < 1:
        raise ValueError("alphabet must be >= 1")
    syms = _symbols(alphabet)
    memo: dict = {}
    for e in range(1, max_edges + 1):
        for shape in _forest_shapes(e, memo):
            template = _shape_children(shape)
            for labs in itertools.product(syms, repeat=e + 1):
                yield Tree(list(labs), [list(c) for c in template])
