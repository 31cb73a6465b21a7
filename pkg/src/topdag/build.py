"""Assembly of a balanced expression over the contracted skeleton, the
compress/decompress pipeline, and the file codec.

Assembly runs in rounds over the skeleton; every edge takes part in at most
one merge per round, so each round adds at most one expression level. A round
first sweeps every node's child edges left to right, folding adjacent
unmarked pairs where at least one side ends in a skeleton leaf (horizontal
merges), then splits maximal chains of unmarked edges through single-child
interior nodes into consecutive pairs and folds those (vertical merges).
While more than one edge remains, some pair always qualifies, and round
counts come out logarithmic in practice.

File format (UTF-8 text, one record per line, ids dense and ascending,
children before parents):

    TOPDAG v1 mode=<tree|dag> n=<int> sigma=<int> k=<int>
    root <id>                 | NODE <label>   (zero-edge input sentinel)
    <id> L <a> <b> <0|1>
    <id> V <leftId> <rightId>
    <id> H <leftId> <rightId>
"""

import math
import re
from dataclasses import dataclass

from .clusters import HMERGE, LEAF, VMERGE, ConsStore
from .dag import build_min_dag
from .shrink import ShrunkenTree, compute_k, shrink_dag, shrink_tree, unfold_shrunken
from .tree import Tree
from .tree import _LABEL_RE

_HEADER_RE = re.compile(
    r"TOPDAG v1 mode=(tree|dag) n=(\d+) sigma=(\d+) k=(\d+)$"
)


class TopDagFormatError(ValueError):
    """Rejected top-dag file: bad header, ids, or inconsistent records."""


@dataclass
class TopDag:
    """Sealed compression result.

    `store` holds exactly the nodes reachable from `root`, deduplicated, with
    ids dense in first-use order (children before parents). A zero-edge input
    is carried as `label` with no root. `rounds` is known for freshly built
    dags and None after deserialization.
    """

    store: ConsStore
    root: int | None
    label: str | None
    mode: str
    n: int
    sigma: int
    k: int
    rounds: int | None


def single_node(label: str, mode: str = "dag") -> TopDag:
    """Sentinel for a tree with no edges (outside the cluster formalism)."""
    store = ConsStore()
    store.sealed = True
    return TopDag(store, None, label, mode, 0, 2, 1, 0)


def build_top_tree(shrunk: ShrunkenTree) -> tuple[int, int]:
    """Assemble one expression covering the whole skeleton.

    Returns (root handle, rounds). The per-edge handles of `shrunk` become the
    operands of the added structure; a single-edge skeleton returns its handle
    untouched with zero rounds.
    """
    t = shrunk.skeleton
    size = t.node_count
    edges = size - 1
    if edges == 0:
        raise ValueError("empty skeleton")
    store = shrunk.store
    rank = store.rank
    vmerge = store.vmerge
    hmerge = store.hmerge
    handle = list(shrunk.handle)
    par = [-1] * size
    prev_s = [-1] * size
    next_s = [-1] * size
    head_c = [-1] * size
    deg = [0] * size
    alive = [True] * size
    mark = [0] * size  # round in which the edge keyed by this child last merged
    for u in range(size):
        cs = t.children[u]
        deg[u] = len(cs)
        if not cs:
            continue
        head_c[u] = cs[0]
        prev = -1
        for v in cs:
            par[v] = u
            prev_s[v] = prev
            if prev >= 0:
                next_s[prev] = v
            prev = v

    rounds = 0
    # contraction never reorders survivors, so live nodes in id order stay in
    # preorder; refiltering the previous order costs linear total work
    order = list(range(size))
    while edges > 1:
        rounds += 1
        merged = 0
        order = [u for u in order if alive[u]]

        for u in order:
            c = head_c[u]
            while c >= 0:
                nx = next_s[c]
                if nx < 0:
                    break
                if (
                    mark[c] != rounds
                    and mark[nx] != rounds
                    and (rank[handle[c]] == 0 or rank[handle[nx]] == 0)
                ):
                    h = hmerge(handle[c], handle[nx])
                    if rank[handle[c]] == 0 and rank[handle[nx]] == 1:
                        survivor, other = nx, c
                        prev_s[nx] = prev_s[c]
                        if prev_s[c] >= 0:
                            next_s[prev_s[c]] = nx
                        else:
                            head_c[u] = nx
                    else:
                        survivor, other = c, nx
                        next_s[c] = next_s[nx]
                        if next_s[nx] >= 0:
                            prev_s[next_s[nx]] = c
                    handle[survivor] = h
                    mark[survivor] = rounds
                    alive[other] = False
                    deg[u] -= 1
                    edges -= 1
                    merged += 1
                    c = next_s[survivor]
                else:
                    c = nx

        chains = []
        for u in order:
            if not alive[u]:
                continue
            # a chain starts where it cannot extend upward
            if par[u] >= 0 and deg[u] == 1 and mark[u] != rounds:
                continue
            c = head_c[u]
            while c >= 0:
                if mark[c] != rounds and deg[c] == 1:
                    chain = [c]
                    bottom = c
                    while deg[bottom] == 1:
                        nxt = head_c[bottom]
                        if mark[nxt] == rounds:
                            break
                        chain.append(nxt)
                        bottom = nxt
                    if len(chain) >= 2:
                        chains.append(chain)
                c = next_s[c]
        for chain in chains:
            for j in range(0, len(chain) - 1, 2):
                e1, e2 = chain[j], chain[j + 1]
                h = vmerge(handle[e1], handle[e2])
                x = par[e1]
                handle[e2] = h
                mark[e2] = rounds
                par[e2] = x
                p, nx = prev_s[e1], next_s[e1]
                prev_s[e2] = p
                next_s[e2] = nx
                if p >= 0:
                    next_s[p] = e2
                else:
                    head_c[x] = e2
                if nx >= 0:
                    prev_s[nx] = e2
                alive[e1] = False
                edges -= 1
                merged += 1
        if merged == 0:
            raise AssertionError("assembly round made no progress")
    return handle[head_c[0]], rounds


def _seal(store: ConsStore, root: int) -> tuple[ConsStore, int]:
    """Copy the nodes reachable from root into a fresh sealed store with ids
    dense in first-completion order (children before parents)."""
    out = ConsStore()
    kind, left, right = store.kind, store.left, store.right

    def copy_meta(src: int) -> None:
        out.rank.append(store.rank[src])
        out.root_label.append(store.root_label[src])
        out.bottom_label.append(store.bottom_label[src])
        out.weight.append(store.weight[src])
        out.height.append(store.height[src])

    remap = [-1] * len(store.kind)
    expanded = bytearray(len(store.kind))
    stack = [root + len(store.kind)]  # offset marks the not-yet-expanded phase
    offset = len(store.kind)
    while stack:
        frame = stack.pop()
        if frame >= offset:
            node = frame - offset
            if expanded[node]:
                continue
            expanded[node] = 1
            if kind[node] == LEAF:
                nid = len(out.kind)
                out.kind.append(LEAF)
                out.left.append(left[node])
                out.right.append(right[node])
                out._index[(LEAF, left[node], right[node], store.rank[node])] = nid
                copy_meta(node)
                remap[node] = nid
            else:
                stack.append(node)
                stack.append(right[node] + offset)
                stack.append(left[node] + offset)
        else:
            node = frame
            nid = len(out.kind)
            kd = kind[node]
            l = remap[left[node]]
            r = remap[right[node]]
            out.kind.append(kd)
            out.left.append(l)
            out.right.append(r)
            out._index[(kd, l, r)] = nid
            copy_meta(node)
            remap[node] = nid
    out.sealed = True
    return out, remap[root]


def compress(t: Tree, mode: str = "dag", k_override: int | None = None) -> TopDag:
    """Full pipeline: contract (directly or on the minimal dag), assemble,
    seal. decompress(compress(t)) == t for every tree with at least one edge;
    zero-edge trees are the caller's sentinel case."""
    n = t.edge_count
    if n < 1:
        raise ValueError("tree has no edges; use the single-node sentinel")
    if mode not in ("tree", "dag"):
        raise ValueError(f"unknown mode {mode!r}")
    sigma = max(2, len(set(t.labels)))
    if k_override is not None:
        if k_override < 1:
            raise ValueError("k override must be >= 1")
        k = k_override
    else:
        k = compute_k(n, sigma)
    store = ConsStore()
    if mode == "tree":
        shrunk = shrink_tree(store, t, k)
    else:
        shrunk = unfold_shrunken(shrink_dag(store, build_min_dag(t), k))
    root, rounds = build_top_tree(shrunk)
    sealed, new_root = _seal(store, root)
    return TopDag(sealed, new_root, None, mode, n, sigma, k, rounds)


def decompress(top: TopDag) -> Tree:
    """Evaluate back to the original tree, exactly."""
    if top.label is not None:
        return Tree([top.label], [[]])
    return top.store.evaluate(top.root).tree


def topdag_stats(top: TopDag, dag_total: int | None = None) -> dict:
    """Size and shape readout. Ratios compare the store node count against
    n/log_sigma(n) and against dag_total * log2(n); `dag_total` is the
    node-plus-edge size of the input's minimal dag (ratio omitted as None
    when not supplied)."""
    if top.label is not None:
        nodes = edges = height = 0
    else:
        st = top.store
        nodes = len(st)
        edges = 2 * sum(1 for kd in st.kind if kd != LEAF)
        height = st.height[top.root]
    n = top.n
    if n >= 2:
        log_sigma = math.log(n) / math.log(top.sigma)
        ratio_nlog = nodes * log_sigma / n
        ratio_daglog = (
            nodes / (dag_total * math.log2(n)) if dag_total else None
        )
    else:
        ratio_nlog = 0.0
        ratio_daglog = None
    return {
        "nodes": nodes,
        "edges": edges,
        "height": height,
        "rounds": top.rounds,
        "n": n,
        "sigma": top.sigma,
        "k": top.k,
        "mode": top.mode,
        "ratio_nlog": ratio_nlog,
        "ratio_daglog": ratio_daglog,
    }


def sharing_is_optimal(store: ConsStore) -> bool:
    """True iff no two store nodes share a structural signature."""
    seen = set()
    for nid in range(len(store)):
        sig = store.signature(nid)
        if sig in seen:
            return False
        seen.add(sig)
    return True


def serialize_topdag(top: TopDag) -> bytes:
    """Text encoding per the module docstring; byte-exact round trip."""
    lines = [
        f"TOPDAG v1 mode={top.mode} n={top.n} sigma={top.sigma} k={top.k}"
    ]
    if top.label is not None:
        lines.append(f"NODE {top.label}")
    else:
        lines.append(f"root {top.root}")
        st = top.store
        kind, left, right, rank = st.kind, st.left, st.right, st.rank
        for i in range(len(st)):
            kd = kind[i]
            if kd == LEAF:
                lines.append(f"{i} L {left[i]} {right[i]} {rank[i]}")
            elif kd == VMERGE:
                lines.append(f"{i} V {left[i]} {right[i]}")
            else:
                lines.append(f"{i} H {left[i]} {right[i]}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _load_label(token: str, lineno: int) -> str:
    if not _LABEL_RE.fullmatch(token):
        raise TopDagFormatError(f"line {lineno}: invalid label {token!r}")
    return token


def deserialize_topdag(data: bytes) -> TopDag:
    """Parse and validate a top-dag file.

    All cached metadata is recomputed while rebuilding, so rank violations,
    label mismatches, dangling child ids, and duplicate or out-of-order ids
    are rejected. Duplicate signatures (distinct ids, identical content) are
    tolerated here; the verify command reports them as a sharing failure.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise TopDagFormatError("not UTF-8 text") from e
    lines = text.splitlines()
    if not lines or not _HEADER_RE.fullmatch(lines[0]):
        raise TopDagFormatError(
            "bad header: expected 'TOPDAG v1 mode=... n=... sigma=... k=...'"
        )
    m = _HEADER_RE.fullmatch(lines[0])
    mode = m.group(1)
    n, sigma, k = int(m.group(2)), int(m.group(3)), int(m.group(4))
    if len(lines) < 2:
        raise TopDagFormatError("missing root record")
    if lines[1].startswith("NODE "):
        label = _load_label(lines[1][5:], 2)
        if len(lines) > 2:
            raise TopDagFormatError("records after NODE sentinel")
        top = single_node(label, mode)
        top.n, top.sigma, top.k, top.rounds = n, sigma, k, None
        return top
    rm = re.fullmatch(r"root (\d+)", lines[1])
    if not rm:
        raise TopDagFormatError("line 2: expected 'root <id>' or 'NODE <label>'")
    root = int(rm.group(1))

    store = ConsStore()
    kind, left, right = store.kind, store.left, store.right
    rank, root_label = store.rank, store.root_label
    bottom_label, weight, height = store.bottom_label, store.weight, store.height
    for lineno, line in enumerate(lines[2:], start=3):
        parts = line.split()
        if len(parts) < 4:
            raise TopDagFormatError(f"line {lineno}: malformed record")
        nid = len(kind)
        if parts[0] != str(nid):
            raise TopDagFormatError(
                f"line {lineno}: expected id {nid}, got {parts[0]!r} "
                "(ids must be dense and ascending)"
            )
        tag = parts[1]
        if tag == "L":
            if len(parts) != 5 or parts[4] not in ("0", "1"):
                raise TopDagFormatError(f"line {lineno}: malformed leaf record")
            a = _load_label(parts[2], lineno)
            b = _load_label(parts[3], lineno)
            bit = int(parts[4])
            kind.append(LEAF)
            left.append(a)
            right.append(b)
            rank.append(bit)
            root_label.append(a)
            bottom_label.append(b if bit else None)
            weight.append(1)
            height.append(1)
            store._index.setdefault((LEAF, a, b, bit), nid)
        elif tag in ("V", "H"):
            if len(parts) != 4:
                raise TopDagFormatError(f"line {lineno}: malformed merge record")
            try:
                l, r = int(parts[2]), int(parts[3])
            except ValueError:
                raise TopDagFormatError(f"line {lineno}: non-numeric child id")
            if not (0 <= l < nid and 0 <= r < nid):
                raise TopDagFormatError(f"line {lineno}: dangling child id")
            if tag == "V":
                if rank[l] != 1:
                    raise TopDagFormatError(
                        f"line {lineno}: rank violation in vertical merge"
                    )
                if bottom_label[l] != root_label[r]:
                    raise TopDagFormatError(
                        f"line {lineno}: label mismatch in vertical merge"
                    )
                kind.append(VMERGE)
                rank.append(rank[r])
                root_label.append(root_label[l])
                bottom_label.append(bottom_label[r])
                store._index.setdefault((VMERGE, l, r), nid)
            else:
                if rank[l] + rank[r] > 1:
                    raise TopDagFormatError(
                        f"line {lineno}: rank violation in horizontal merge"
                    )
                if root_label[l] != root_label[r]:
                    raise TopDagFormatError(
                        f"line {lineno}: label mismatch in horizontal merge"
                    )
                kind.append(HMERGE)
                rank.append(rank[l] + rank[r])
                root_label.append(root_label[l])
                bottom_label.append(bottom_label[l] if rank[l] else bottom_label[r])
                store._index.setdefault((HMERGE, l, r), nid)
            left.append(l)
            right.append(r)
            weight.append(weight[l] + weight[r])
            height.append(1 + max(height[l], height[r]))
        else:
            raise TopDagFormatError(f"line {lineno}: unknown record tag {tag!r}")
    if not 0 <= root < len(kind):
        raise TopDagFormatError("dangling root id")
    store.sealed = True
    return TopDag(store, root, None, mode, n, sigma, k, None)
