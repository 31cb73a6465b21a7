"""Command-line surface: compress, decompress, verify, gen, bench.

Payload (tree text, top-dag text, CSV) goes to standard output or -o;
diagnostics go to standard error. Exit codes: 0 ok, 1 tree parse error or
invalid flags, 2 I/O or generation failure, 3 malformed top-dag file,
4 failed verification check.
"""

import argparse
import gc
import sys
import time

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
    _seal,
)
from .clusters import ConsStore
from .dag import build_min_dag, dag_size, dag_stats
from .shrink import compute_k, is_fixpoint, shrink_dag, shrink_tree, unfold_shrunken
from .tree import SHAPES, Tree, TreeParseError, parse_tree, random_tree, serialize_tree, tree_equal

BENCH_HEADER = (
    "shape,sigma,n,k,mode,topdag_nodes,topdag_height,dag_nodes,"
    "ratio_nlog,ratio_daglog,rounds,wall_ms"
)


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _read_bytes(path: str) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write_bytes(path: str | None, data: bytes) -> None:
    if path is None:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def cmd_compress(args) -> int:
    t = parse_tree(_read_text(args.input))
    if t.edge_count == 0:
        top = single_node(t.labels[0], args.mode)
    else:
        top = compress(t, args.mode, args.k)
    _write_bytes(args.output, serialize_topdag(top))
    dag_total = dag_size(build_min_dag(t)) if t.edge_count else None
    stats = topdag_stats(top, dag_total)
    ratio_dag = stats["ratio_daglog"]
    print(
        "compress: n={n} sigma={sigma} k={k} mode={mode} nodes={nodes} "
        "edges={edges} height={height} rounds={rounds} "
        "ratio_nlog={rn:.4f} ratio_daglog={rd}".format(
            rn=stats["ratio_nlog"],
            rd=f"{ratio_dag:.4f}" if ratio_dag is not None else "-",
            **{k: stats[k] for k in ("n", "sigma", "k", "mode", "nodes", "edges", "height", "rounds")},
        ),
        file=sys.stderr,
    )
    return 0


def cmd_decompress(args) -> int:
    top = deserialize_topdag(_read_bytes(args.input))
    text = serialize_tree(decompress(top)) + "\n"
    _write_bytes(args.output, text.encode("utf-8"))
    return 0


def _verify_tree(t: Tree, k_override: int | None) -> list[tuple[str, bool]]:
    n = t.edge_count
    sigma = max(2, len(set(t.labels)))
    k = k_override if k_override is not None else compute_k(n, sigma)
    results: list[tuple[str, bool]] = []
    for mode in ("tree", "dag"):
        store = ConsStore()
        if mode == "tree":
            shrunk = shrink_tree(store, t, k)
            fix = is_fixpoint(shrunk, k)
        else:
            sd = shrink_dag(store, build_min_dag(t), k)
            shrunk = unfold_shrunken(sd)
            fix = is_fixpoint(sd, k) and is_fixpoint(shrunk, k)
        weights = shrunk.weight[1:]
        results.append((f"weight_cap[{mode}]", max(weights) <= 2 * k))
        results.append((f"weight_sum[{mode}]", sum(weights) == n))
        results.append(
            (f"skeleton_bound[{mode}]", shrunk.skeleton.edge_count * k <= 8 * n)
        )
        results.append((f"fixpoint[{mode}]", fix))
        root, _rounds = build_top_tree(shrunk)
        sealed, new_root = _seal(store, root)
        top = TopDag(sealed, new_root, None, mode, n, sigma, k, _rounds)
        results.append((f"roundtrip[{mode}]", tree_equal(decompress(top), t)))
        results.append((f"sharing[{mode}]", sharing_is_optimal(sealed)))
    return results


def cmd_verify(args) -> int:
    raw = _read_bytes(args.input)
    if raw.startswith(b"TOPDAG"):
        # verify a compressed file instead: format validity plus sharing
        results = []
        try:
            top = deserialize_topdag(raw)
        except TopDagFormatError as e:
            print(f"format error: {e}", file=sys.stderr)
            results = [("format", False), ("sharing", False)]
        else:
            results = [("format", True), ("sharing", sharing_is_optimal(top.store))]
    else:
        t = parse_tree(raw.decode("utf-8"))
        if t.edge_count == 0:
            results = [("single_node", True)]
        else:
            results = _verify_tree(t, args.k)
    ok = True
    for name, passed in results:
        print(f"{'PASS' if passed else 'FAIL'} {name}")
        ok = ok and passed
    return 0 if ok else 4


def cmd_gen(args) -> int:
    t = random_tree(args.edges, args.alphabet, args.seed, args.shape)
    _write_bytes(args.output, (serialize_tree(t) + "\n").encode("utf-8"))
    return 0


def cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s]
        if not sizes:
            raise ValueError("empty sizes list")
        cells = []
        for n in sizes:
            cells.append(random_tree(n, args.alphabet, args.seed + n, args.shape))
    except ValueError as e:
        print(f"generation failed: {e}", file=sys.stderr)
        return 2
    out = [BENCH_HEADER]
    for t in cells:
        d = build_min_dag(t)
        d_nodes, _ = dag_stats(d)
        d_total = dag_size(d)
        for mode in ("tree", "dag"):
            gc_was_on = gc.isenabled()
            gc.disable()
            t0 = time.perf_counter()
            top = compress(t, mode)
            wall_ms = (time.perf_counter() - t0) * 1000.0
            if gc_was_on:
                gc.enable()
            s = topdag_stats(top, d_total)
            out.append(
                f"{args.shape},{s['sigma']},{s['n']},{s['k']},{mode},"
                f"{s['nodes']},{s['height']},{d_nodes},"
                f"{s['ratio_nlog']:.6f},{s['ratio_daglog']:.6f},"
                f"{s['rounds']},{wall_ms:.3f}"
            )
    _write_bytes(None, ("\n".join(out) + "\n").encode("utf-8"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topdag",
        description="Compress ordered labelled trees into top dags and back.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="tree text file -> top-dag file")
    p.add_argument("input")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--mode", choices=("tree", "dag"), default="dag")
    p.add_argument("--k", type=int, default=None, help="override the weight threshold")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="top-dag file -> canonical tree text")
    p.add_argument("input")
    p.add_argument("-o", "--output", default=None)
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("verify", help="run all invariant checks on a tree file")
    p.add_argument("input")
    p.add_argument("--k", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="emit a deterministic random tree")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--edges", type=int, required=True)
    p.add_argument("--alphabet", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shape", choices=SHAPES, default="uniform")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="compression metrics as CSV on stdout")
    p.add_argument("--sizes", required=True, help="comma-separated edge counts")
    p.add_argument("--alphabet", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--shape", choices=SHAPES, default="uniform")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TreeParseError as e:
        print(f"parse error: {e}", file=sys.stderr)
        return 1
    except TopDagFormatError as e:
        print(f"malformed top dag: {e}", file=sys.stderr)
        return 3
    except OSError as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
