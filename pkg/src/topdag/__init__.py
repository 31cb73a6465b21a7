"""Top-dag compression of ordered labelled trees.

Compresses any ordered node-labelled tree into a deduplicated expression over
single-edge clusters and two merge operations, in linear time, and evaluates
it back exactly. Two pipelines: contraction directly on the tree, or on its
minimal dag to inherit shared-subtree repetition.
"""

from .build import (
    TopDag,
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
from .clusters import (
    BoundedTree,
    ConsStore,
    LabelMismatch,
    RankViolation,
)
from .dag import Dag, build_min_dag, dag_size, dag_stats, unfold
from .shrink import (
    ShrunkenDag,
    ShrunkenTree,
    compute_k,
    count_bound,
    is_fixpoint,
    shrink_dag,
    shrink_tree,
    unfold_shrunken,
)
from .tree import (
    SHAPES,
    Tree,
    TreeParseError,
    enumerate_trees,
    parse_tree,
    random_tree,
    serialize_tree,
    tree_equal,
)

__version__ = "0.1.0"

__all__ = [
    "BoundedTree",
    "ConsStore",
    "Dag",
    "LabelMismatch",
    "RankViolation",
    "SHAPES",
    "ShrunkenDag",
    "ShrunkenTree",
    "TopDag",
    "TopDagFormatError",
    "Tree",
    "TreeParseError",
    "build_min_dag",
    "build_top_tree",
    "compress",
    "compute_k",
    "count_bound",
    "dag_size",
    "dag_stats",
    "decompress",
    "deserialize_topdag",
    "enumerate_trees",
    "is_fixpoint",
    "parse_tree",
    "random_tree",
    "serialize_topdag",
    "serialize_tree",
    "sharing_is_optimal",
    "shrink_dag",
    "shrink_tree",
    "single_node",
    "top_stats",
    "topdag_stats",
    "tree_equal",
    "unfold",
    "unfold_shrunken",
]


def top_stats(store: ConsStore, nid: int):
    """(reachable nodes, height, weight, rank) of a stored expression."""
    return store.top_stats(nid)
