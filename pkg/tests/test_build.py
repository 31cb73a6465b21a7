"""Assembly, pipeline round-trips, sealing, stats, and the file codec."""

from collections import Counter

import pytest

from topdag.build import (
    TopDagFormatError,
    build_top_tree,
    compress,
    decompress,
    deserialize_topdag,
    serialize_topdag,
    sharing_is_optimal,
    single_node,
    topdag_stats,
)
from topdag.clusters import HMERGE, LEAF, VMERGE, ConsStore
from topdag.dag import build_min_dag, dag_size
from topdag.shrink import ShrunkenTree, shrink_tree
from topdag.tree import enumerate_trees, parse_tree, random_tree, serialize_tree, tree_equal

from helpers import all_subclusters, bounded_canon


def atoms_for(store: ConsStore, t) -> ShrunkenTree:
    """ShrunkenTree with weight-1 atomic handles (no contraction)."""
    handle = [-1]
    for v in range(1, t.node_count):
        parent = next(u for u in range(t.node_count) if v in t.children[u])
        handle.append(
            store.atomic(t.labels[parent], t.labels[v], 1 if t.children[v] else 0)
        )
    return ShrunkenTree(
        t, [0] + [1] * t.edge_count, handle, store, list(range(t.node_count)), 0, 0
    )


class TestBuildTopTree:
    def test_single_edge_passthrough(self):
        store = ConsStore()
        shrunk = atoms_for(store, parse_tree("a(b)"))
        root, rounds = build_top_tree(shrunk)
        assert root == shrunk.handle[1]
        assert rounds == 0

    def test_sibling_pair_one_horizontal(self):
        store = ConsStore()
        shrunk = atoms_for(store, parse_tree("a(b,c)"))
        root, rounds = build_top_tree(shrunk)
        assert rounds == 1
        assert store.kind[root] == HMERGE
        assert store.signature(store.left[root]) == ("L", "a", "b", 0)
        assert store.signature(store.right[root]) == ("L", "a", "c", 0)

    def test_chain_one_vertical(self):
        store = ConsStore()
        shrunk = atoms_for(store, parse_tree("a(b(c))"))
        root, rounds = build_top_tree(shrunk)
        assert rounds == 1
        assert store.kind[root] == VMERGE
        assert store.signature(store.left[root]) == ("L", "a", "b", 1)
        assert store.signature(store.right[root]) == ("L", "b", "c", 0)

    def test_rejects_empty_skeleton(self):
        store = ConsStore()
        with pytest.raises(ValueError):
            build_top_tree(
                ShrunkenTree(parse_tree("a"), [0], [-1], store, [0], 0, 0)
            )

    def test_height_bounded_by_threshold_plus_rounds(self):
        for seed in range(20):
            t = random_tree(150, 2, seed=seed)
            for k in (1, 2, 3):
                store = ConsStore()
                shrunk = shrink_tree(store, t, k)
                root, rounds = build_top_tree(shrunk)
                assert store.height[root] <= 2 * k + rounds

    def test_operands_are_exactly_the_contraction_handles(self):
        # wide alphabet keeps assembly nodes from colliding with handles
        for seed in range(10):
            t = random_tree(120, 8, seed=seed)
            store = ConsStore()
            shrunk = shrink_tree(store, t, 2)
            expected = Counter(shrunk.handle[1:])
            root, _ = build_top_tree(shrunk)
            cut = set(expected)

            leaves: dict[int, Counter] = {}

            def frontier(nid: int) -> Counter:
                if nid in cut:
                    return Counter({nid: 1})
                got = leaves.get(nid)
                if got is None:
                    got = frontier(store.left[nid]) + frontier(store.right[nid])
                    leaves[nid] = got
                return got

            assert frontier(root) == expected


class TestCompressDecompress:
    def test_trivial_roundtrip(self):
        t = parse_tree("a(b,b)")
        for mode in ("tree", "dag"):
            assert tree_equal(decompress(compress(t, mode)), t)

    def test_exhaustive_small(self):
        for t in enumerate_trees(4, 2):
            for k in (1, 2, 3):
                for mode in ("tree", "dag"):
                    assert tree_equal(decompress(compress(t, mode, k)), t)

    def test_traced_example_reproduced(self):
        top = compress(parse_tree("a(b(a,a))"), "dag", k_override=2)
        st = top.store
        root = top.root
        assert st.weight[root] == 3
        assert st.kind[root] == VMERGE
        assert st.signature(st.left[root]) == ("L", "a", "b", 1)
        inner = st.right[root]
        assert st.kind[inner] == HMERGE
        assert st.left[inner] == st.right[inner]
        assert st.signature(st.left[inner]) == ("L", "b", "a", 0)
        assert len(st) == 4

    def test_deep_path_roundtrip(self):
        t = random_tree(30000, 1, seed=0, shape="path")
        top = compress(t)
        assert tree_equal(decompress(top), t)

    def test_rejects_edgeless_and_bad_args(self):
        with pytest.raises(ValueError):
            compress(parse_tree("a"))
        with pytest.raises(ValueError):
            compress(parse_tree("a(b)"), mode="zip")
        with pytest.raises(ValueError):
            compress(parse_tree("a(b)"), k_override=0)

    def test_deterministic(self):
        t = random_tree(200, 3, seed=4)
        a = serialize_topdag(compress(t, "dag"))
        b = serialize_topdag(compress(t, "dag"))
        assert a == b

    def test_sigma_from_observed_labels(self):
        assert compress(parse_tree("a(a)")).sigma == 2
        t = random_tree(100, 16, seed=0)
        assert compress(t).sigma == len(set(t.labels))


class TestSealedStore:
    def test_sharing_is_optimal_on_outputs(self):
        for seed in range(10):
            t = random_tree(300, 2, seed=seed)
            for mode in ("tree", "dag"):
                top = compress(t, mode)
                assert sharing_is_optimal(top.store)
                assert top.store.sealed

    def test_children_precede_parents(self):
        top = compress(random_tree(100, 2, seed=1))
        st = top.store
        for nid in range(len(st)):
            if st.kind[nid] != LEAF:
                assert st.left[nid] < nid and st.right[nid] < nid

    def test_every_node_evaluates_to_a_subcluster(self):
        for t in enumerate_trees(5, 2):
            legal = all_subclusters(t)
            for mode in ("tree", "dag"):
                top = compress(t, mode, k_override=2)
                st = top.store
                for nid in range(len(st)):
                    assert bounded_canon(st.evaluate(nid)) in legal


class TestRepetitiveInputs:
    def test_dag_mode_never_larger_on_full_binary(self):
        for h in (3, 5, 8, 10):
            t = random_tree(2**h - 2, 1, seed=0, shape="full_binary")
            assert len(compress(t, "dag").store) <= len(compress(t, "tree").store)

    def test_dag_mode_never_larger_on_periodic_path(self):
        labels = [("a", "b", "c")[i % 3] for i in range(61)]
        children = [[i + 1] for i in range(60)] + [[]]
        from topdag.tree import Tree

        t = Tree(labels, children)
        assert len(compress(t, "dag").store) <= len(compress(t, "tree").store)


class TestStats:
    def test_single_edge(self):
        top = compress(parse_tree("a(b)"))
        s = topdag_stats(top)
        assert s["nodes"] == 1 and s["height"] == 1 and s["edges"] == 0
        assert s["rounds"] == 0 and s["k"] == 1

    def test_traced_expression_counts(self):
        top = compress(parse_tree("a(b(a,a))"), "dag", k_override=2)
        s = topdag_stats(top, dag_total=dag_size(build_min_dag(parse_tree("a(b(a,a))"))))
        assert s["nodes"] == 4
        assert s["edges"] == 4  # two merge nodes, two pointers each
        assert s["height"] == 3
        assert s["ratio_daglog"] is not None

    def test_ratio_requires_dag_total(self):
        top = compress(parse_tree("a(b)"))
        assert topdag_stats(top)["ratio_daglog"] is None


class TestSentinel:
    def test_roundtrip(self):
        top = single_node("hello_1")
        data = serialize_topdag(top)
        assert data.split(b"\n")[1] == b"NODE hello_1"
        back = deserialize_topdag(data)
        assert back.label == "hello_1"
        assert serialize_tree(decompress(back)) == "hello_1"

    def test_stats(self):
        s = topdag_stats(single_node("a"))
        assert s["nodes"] == 0 and s["height"] == 0


class TestCodec:
    def test_byte_roundtrip_random(self):
        for seed in range(25):
            t = random_tree(5 + seed * 11, (seed % 3) + 1, seed=seed)
            mode = "dag" if seed % 2 else "tree"
            data = serialize_topdag(compress(t, mode))
            assert serialize_topdag(deserialize_topdag(data)) == data

    def test_decompress_after_roundtrip(self):
        t = random_tree(80, 2, seed=3)
        top = compress(t)
        back = deserialize_topdag(serialize_topdag(top))
        assert tree_equal(decompress(back), t)
        assert back.rounds is None
        assert (back.mode, back.n, back.sigma, back.k) == (
            top.mode,
            top.n,
            top.sigma,
            top.k,
        )

    def test_header_fields_survive(self):
        top = compress(parse_tree("a(b,b)"), "tree", k_override=3)
        back = deserialize_topdag(serialize_topdag(top))
        assert back.mode == "tree" and back.k == 3 and back.n == 2

    @pytest.mark.parametrize(
        "data,match",
        [
            (b"", "header"),
            (b"TOPDAG v2 mode=dag n=1 sigma=2 k=1\nroot 0\n0 L a b 0\n", "header"),
            (b"garbage\n", "header"),
            (
                b"TOPDAG v1 mode=dag n=2 sigma=2 k=1\nroot 1\n0 L a b 0\n1 V 0 5\n",
                "dangling",
            ),
            (
                b"TOPDAG v1 mode=dag n=2 sigma=2 k=1\nroot 5\n0 L a b 0\n",
                "dangling",
            ),
            (
                b"TOPDAG v1 mode=dag n=2 sigma=2 k=1\nroot 2\n"
                b"0 L a b 1\n1 L a c 1\n2 H 0 1\n",
                "rank",
            ),
            (
                b"TOPDAG v1 mode=dag n=2 sigma=2 k=1\nroot 2\n"
                b"0 L a b 0\n1 L b c 0\n2 H 0 1\n",
                "label mismatch",
            ),
            (
                b"TOPDAG v1 mode=dag n=2 sigma=2 k=1\nroot 1\n"
                b"0 L a b 0\n0 L a c 0\n",
                "dense",
            ),
            (
                b"TOPDAG v1 mode=dag n=2 sigma=2 k=1\nroot 1\n"
                b"0 L a b 0\n2 L a c 0\n",
                "dense",
            ),
            (
                b"TOPDAG v1 mode=dag n=1 sigma=2 k=1\nroot 0\n0 X a b 0\n",
                "tag",
            ),
            (
                b"TOPDAG v1 mode=dag n=1 sigma=2 k=1\nroot 0\n0 L a* b 0\n",
                "label",
            ),
            (
                b"TOPDAG v1 mode=dag n=2 sigma=2 k=1\nroot 1\n"
                b"0 L a b 1\n1 V 0 0\n",
                "label mismatch",
            ),
            (b"TOPDAG v1 mode=dag n=0 sigma=2 k=1\n", "root"),
            (b"\xff\xfe", "UTF-8"),
        ],
    )
    def test_malformed_rejected(self, data, match):
        with pytest.raises(TopDagFormatError, match=match):
            deserialize_topdag(data)

    def test_rank_violation_in_vertical(self):
        data = (
            b"TOPDAG v1 mode=dag n=2 sigma=2 k=1\nroot 2\n"
            b"0 L a b 0\n1 L b c 0\n2 V 0 1\n"
        )
        with pytest.raises(TopDagFormatError, match="rank"):
            deserialize_topdag(data)

    def test_duplicate_signature_loads_but_fails_sharing(self):
        data = (
            b"TOPDAG v1 mode=dag n=2 sigma=2 k=1\nroot 1\n"
            b"0 L a b 0\n1 L a b 0\n"
        )
        top = deserialize_topdag(data)
        assert not sharing_is_optimal(top.store)

    def test_sentinel_trailing_records_rejected(self):
        data = b"TOPDAG v1 mode=dag n=0 sigma=2 k=1\nNODE a\n0 L a b 0\n"
        with pytest.raises(TopDagFormatError):
            deserialize_topdag(data)
