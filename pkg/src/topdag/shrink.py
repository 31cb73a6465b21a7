"""Bottom-up weighted contraction of a tree or of its minimal dag.

Every edge carries a weight (how many original edges it stands for) and a
cluster-expression handle that evaluates to exactly that fragment. Three local
moves contract the structure, each allowed only while both involved edges
weigh at most a threshold k:

  chain move    edges (u,v),(v,w) with w the only child of v collapse to
                (u,w); the handles merge vertically.
  left sibling  a leaf edge (u,v) folds into its right neighbour (u,w); the
                handles merge horizontally, v's cluster first.
  right sibling a leaf edge (u,v) folds into its left neighbour (u,w); the
                handles merge horizontally, w's cluster first.

Candidates sit in a FIFO queue seeded in preorder of child endpoints; an edge
is queued when its weight is at most k and its child endpoint has at most one
child. Entries are revalidated when popped, so stale pointers (deleted edges,
grown weights, grown degrees) are skipped in O(1). On a pop the moves are
tried in the order above. After a move the surviving edge is re-queued if
still eligible, and when a sibling fold drops a node's degree to one its
parent edge is re-queued. The loop stops when no move applies anywhere; every
surviving weight is then at most 2k and the skeleton has at most 8n/k edges.

The dag variant runs the same moves per edge slot (a parent node and child
position), so parallel edges contract independently while their handles share
subexpressions through the store. Nodes left without incoming edges are
garbage collected. Unfolding the contracted dag yields a contracted tree that
the tree variant could have produced itself.
"""

from dataclasses import dataclass

from .clusters import ConsStore
from .dag import Dag
from .tree import Tree


def compute_k(n: int, sigma: int) -> int:
    """Weight threshold for an n-edge tree over sigma labels.

    Exact integer arithmetic: the largest k with (64*(sigma**2+1)**2)**(2k)
    <= n, clamped into [1, n].
    """
    if n < 1:
        raise ValueError("need at least one edge")
    sigma = max(2, sigma)
    r = 64 * (sigma * sigma + 1) ** 2
    k = 0
    step = r * r
    bound = step
    while bound <= n:
        k += 1
        bound *= step
    return min(max(1, k), n)


def count_bound(k: int, sigma: int) -> int:
    """Upper bound on distinct cluster expressions of size at most 2k over
    sigma labels: 2k * (64*(sigma**2+1)**2)**k."""
    if k < 1:
        raise ValueError("threshold must be >= 1")
    sigma = max(2, sigma)
    return 2 * k * (64 * (sigma * sigma + 1) ** 2) ** k


@dataclass
class ShrunkenTree:
    """Contracted tree skeleton with per-edge weights and handles.

    Edge data is indexed by the child endpoint's skeleton node id; index 0
    (the root, which has no parent edge) holds 0 and -1. `node_ids` maps
    skeleton nodes back to input node ids. `pops` and `merges` count queue
    activity of the run that produced this.
    """

    skeleton: Tree
    weight: list[int]
    handle: list[int]
    store: ConsStore
    node_ids: list[int]
    pops: int
    merges: int


@dataclass
class ShrunkenDag:
    """Contracted dag skeleton; weights and handles parallel the child lists."""

    skeleton: Dag
    weight: list[list[int]]
    handle: list[list[int]]
    store: ConsStore
    node_ids: list[int]
    pops: int
    merges: int


def shrink_tree(
    store: ConsStore, t: Tree, k: int, trace: list | None = None
) -> ShrunkenTree:
    """Contract t with threshold k, building cluster handles in `store`.

    If `trace` is a list, every move is appended as (case, u, v, w) in input
    node ids: case 1 replaces (u,v),(v,w) by (u,w); cases 2 and 3 fold the
    leaf edge (u,v) into its right or left sibling edge (u,w).
    """
    n = t.edge_count
    if n < 1:
        raise ValueError("tree has no edges")
    if k < 1:
        raise ValueError("threshold must be >= 1")
    labels, kids = t.labels, t.children
    size = n + 1
    par = [-1] * size
    prev_s = [-1] * size
    next_s = [-1] * size
    head_c = [-1] * size
    deg = [0] * size
    wt = [0] * size
    hdl = [-1] * size
    alive = [True] * size
    atomic = store.atomic
    for u in range(size):
        cs = kids[u]
        deg[u] = len(cs)
        if not cs:
            continue
        head_c[u] = cs[0]
        prev = -1
        lab_u = labels[u]
        for v in cs:
            par[v] = u
            prev_s[v] = prev
            if prev >= 0:
                next_s[prev] = v
            prev = v
            wt[v] = 1
            hdl[v] = atomic(lab_u, labels[v], 1 if kids[v] else 0)

    # FIFO as a list with a read head; total pushes are linear in n
    queue = [v for v in range(1, size) if deg[v] <= 1]
    push = queue.append
    qi = 0
    vmerge = store.vmerge
    hmerge = store.hmerge
    merges = 0
    while qi < len(queue):
        v = queue[qi]
        qi += 1
        if not alive[v] or wt[v] > k:
            continue
        dv = deg[v]
        if dv > 1:
            continue
        u = par[v]
        if dv == 1:
            w = head_c[v]
            if wt[w] <= k:
                hdl[w] = vmerge(hdl[v], hdl[w])
                wt[w] += wt[v]
                par[w] = u
                p, nx = prev_s[v], next_s[v]
                prev_s[w] = p
                next_s[w] = nx
                if p >= 0:
                    next_s[p] = w
                else:
                    head_c[u] = w
                if nx >= 0:
                    prev_s[nx] = w
                alive[v] = False
                merges += 1
                if trace is not None:
                    trace.append((1, u, v, w))
                if wt[w] <= k and deg[w] <= 1:
                    push(w)
            continue
        w = next_s[v]
        if w >= 0 and wt[w] <= k:
            hdl[w] = hmerge(hdl[v], hdl[w])
            case = 2
        else:
            w = prev_s[v]
            if w >= 0 and wt[w] <= k:
                hdl[w] = hmerge(hdl[w], hdl[v])
                case = 3
            else:
                continue
        wt[w] += wt[v]
        p, nx = prev_s[v], next_s[v]
        if p >= 0:
            next_s[p] = nx
        else:
            head_c[u] = nx
        if nx >= 0:
            prev_s[nx] = p
        alive[v] = False
        deg[u] -= 1
        merges += 1
        if trace is not None:
            trace.append((case, u, v, w))
        if wt[w] <= k and deg[w] <= 1:
            push(w)
        if deg[u] == 1 and par[u] >= 0 and wt[u] <= k:
            push(u)
    pops = qi

    sk_labels: list[str] = []
    sk_children: list[list[int]] = []
    s_weight: list[int] = []
    s_handle: list[int] = []
    node_ids: list[int] = []
    stack = [(t.root, -1)]
    while stack:
        old, parent = stack.pop()
        nid = len(sk_labels)
        sk_labels.append(labels[old])
        sk_children.append([])
        node_ids.append(old)
        if parent >= 0:
            sk_children[parent].append(nid)
            s_weight.append(wt[old])
            s_handle.append(hdl[old])
        else:
            s_weight.append(0)
            s_handle.append(-1)
        cs = []
        c = head_c[old]
        while c >= 0:
            cs.append(c)
            c = next_s[c]
        for c in reversed(cs):
            stack.append((c, nid))
    return ShrunkenTree(
        Tree(sk_labels, sk_children), s_weight, s_handle, store, node_ids, pops, merges
    )


def shrink_dag(store: ConsStore, d: Dag, k: int) -> ShrunkenDag:
    """Contract a minimal dag with threshold k, sharing handles across the
    parents of shared nodes."""
    if d.edge_count < 1:
        raise ValueError("dag has no edges")
    if k < 1:
        raise ValueError("threshold must be >= 1")
    labels, kids = d.labels, d.children
    nn = d.node_count

    # one slot per (parent, child position); slots are the mergeable objects
    total = d.edge_count
    sp = [0] * total
    st = [0] * total
    sw = [1] * total
    sh = [0] * total
    s_prev = [-1] * total
    s_next = [-1] * total
    s_alive = [True] * total
    head_s = [-1] * nn
    odeg = [0] * nn
    in_slots: list[set] = [set() for _ in range(nn)]
    atomic = store.atomic
    sid = 0
    for u in range(nn):
        cs = kids[u]
        odeg[u] = len(cs)
        prev = -1
        lab_u = labels[u]
        for v in cs:
            sp[sid] = u
            st[sid] = v
            sh[sid] = atomic(lab_u, labels[v], 1 if kids[v] else 0)
            s_prev[sid] = prev
            if prev >= 0:
                s_next[prev] = sid
            else:
                head_s[u] = sid
            prev = sid
            in_slots[v].add(sid)
            sid += 1

    # seed in depth-first order from the root, slots left to right
    queue: list[int] = []
    push = queue.append
    seen = [False] * nn
    seen[d.root] = True
    walk = [d.root]
    emit: list[int] = []
    while walk:
        u = walk.pop()
        emit.append(u)
        for v in reversed(kids[u]):
            if not seen[v]:
                seen[v] = True
                walk.append(v)
    for u in emit:
        s = head_s[u]
        while s >= 0:
            if odeg[st[s]] <= 1:
                push(s)
            s = s_next[s]

    qi = 0
    vmerge = store.vmerge
    hmerge = store.hmerge
    merges = 0
    while qi < len(queue):
        s = queue[qi]
        qi += 1
        if not s_alive[s] or sw[s] > k:
            continue
        v = st[s]
        dv = odeg[v]
        if dv > 1:
            continue
        u = sp[s]
        if dv == 1:
            f = head_s[v]
            if sw[f] <= k:
                sh[s] = vmerge(sh[s], sh[f])
                sw[s] += sw[f]
                w = st[f]
                in_slots[v].discard(s)
                st[s] = w
                in_slots[w].add(s)
                if not in_slots[v]:
                    # v unreachable: drop it and its last outgoing slot
                    s_alive[f] = False
                    in_slots[w].discard(f)
                    head_s[v] = -1
                    odeg[v] = 0
                merges += 1
                if sw[s] <= k and odeg[w] <= 1:
                    push(s)
            continue
        r = s_next[s]
        if r >= 0 and sw[r] <= k:
            sh[r] = hmerge(sh[s], sh[r])
            survivor = r
        else:
            l = s_prev[s]
            if l >= 0 and sw[l] <= k:
                sh[l] = hmerge(sh[l], sh[s])
                survivor = l
            else:
                continue
        sw[survivor] += sw[s]
        p, nx = s_prev[s], s_next[s]
        if p >= 0:
            s_next[p] = nx
        else:
            head_s[u] = nx
        if nx >= 0:
            s_prev[nx] = p
        s_alive[s] = False
        odeg[u] -= 1
        in_slots[v].discard(s)
        merges += 1
        if sw[survivor] <= k and odeg[st[survivor]] <= 1:
            push(survivor)
        if odeg[u] == 1:
            for g in in_slots[u]:
                if sw[g] <= k:
                    push(g)
    pops = qi

    # rebuild a dense skeleton from whatever the root still reaches
    new_id = {d.root: 0}
    sk_labels = [labels[d.root]]
    sk_children: list[list[int]] = [[]]
    s_weight: list[list[int]] = [[]]
    s_handle: list[list[int]] = [[]]
    node_ids = [d.root]
    walk = [d.root]
    while walk:
        u = walk.pop()
        uid = new_id[u]
        s = head_s[u]
        order = []
        while s >= 0:
            order.append(s)
            s = s_next[s]
        for s in order:
            v = st[s]
            vid = new_id.get(v)
            if vid is None:
                vid = len(sk_labels)
                new_id[v] = vid
                sk_labels.append(labels[v])
                sk_children.append([])
                s_weight.append([])
                s_handle.append([])
                node_ids.append(v)
                walk.append(v)
            sk_children[uid].append(vid)
            s_weight[uid].append(sw[s])
            s_handle[uid].append(sh[s])
    return ShrunkenDag(
        Dag(sk_labels, sk_children, 0), s_weight, s_handle, store, node_ids, pops, merges
    )


def unfold_shrunken(sd: ShrunkenDag) -> ShrunkenTree:
    """Expand a contracted dag into the contracted tree it denotes; tree edges
    inherit the weight and handle of the dag slot they came from."""
    d = sd.skeleton
    d_labels, d_children = d.labels, d.children
    labels: list[str] = [d_labels[d.root]]
    children: list[list[int]] = [[]]
    weight = [0]
    handle = [-1]
    node_ids = [d.root]
    # one frame per tree edge: (dag node, parent tree id, slot position)
    root_kids = d_children[d.root]
    stack = [
        (root_kids[pos], 0, pos) for pos in range(len(root_kids) - 1, -1, -1)
    ]
    while stack:
        node, ptid, pos = stack.pop()
        pnode = node_ids[ptid]
        nid = len(labels)
        labels.append(d_labels[node])
        children.append([])
        children[ptid].append(nid)
        weight.append(sd.weight[pnode][pos])
        handle.append(sd.handle[pnode][pos])
        node_ids.append(node)
        kids = d_children[node]
        for p in range(len(kids) - 1, -1, -1):
            stack.append((kids[p], nid, p))
    return ShrunkenTree(
        Tree(labels, children), weight, handle, sd.store, node_ids, sd.pops, sd.merges
    )


def is_fixpoint(shrunk: ShrunkenTree | ShrunkenDag, k: int) -> bool:
    """Exhaustive scan: true iff no contraction move applies at threshold k.

    Independent of the queue bookkeeping; used as the stopping oracle.
    """
    if isinstance(shrunk, ShrunkenTree):
        t = shrunk.skeleton
        w = shrunk.weight
        kids = t.children
        for u in range(t.node_count):
            cs = kids[u]
            for idx, v in enumerate(cs):
                if w[v] > k:
                    continue
                vkids = kids[v]
                if len(vkids) == 1 and w[vkids[0]] <= k:
                    return False
                if idx + 1 < len(cs):
                    nxt = cs[idx + 1]
                    if w[nxt] <= k and (not vkids or not kids[nxt]):
                        return False
        return True
    d = shrunk.skeleton
    kids = d.children
    for u in range(d.node_count):
        cs = kids[u]
        ws = shrunk.weight[u]
        for idx, v in enumerate(cs):
            if ws[idx] > k:
                continue
            vkids = kids[v]
            if len(vkids) == 1 and shrunk.weight[v][0] <= k:
                return False
            if idx + 1 < len(cs):
                nxt = cs[idx + 1]
                if ws[idx + 1] <= k and (not vkids or not kids[nxt]):
                    return False
    return True
