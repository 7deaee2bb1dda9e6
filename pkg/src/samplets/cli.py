"""Command-line front end for the transform / compression / sampling pipelines.

Subcommands: transform, compress, detect, kernel-compress, grf, bench, info.
Exit codes: 0 on success, 1 on numerical failure (non-positive pivot), 2 on
I/O or validation errors.  All data artifacts are deterministic given the
same inputs, flags, and seed; metric sidecars additionally carry wall times.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import io as sio
from .basis import MomentSpec, build_samplet_basis
from .cluster_tree import PointCloud
from .errors import InvalidInput, NonPositivePivot, ResourceLimit
from .h2 import assemble_compressed_kernel, dense_compressed_oracle
from .kernels import KernelConfig, SCALED_EXPONENTIAL
from .sparse import (
    add_ridge,
    anz,
    basis_support_boxes,
    factorization_residual,
    fill_reducing_order,
    normal_stream,
    sample_grf,
    sparse_cholesky,
)
from .transform import (
    POINT_BASIS,
    SAMPLET_BASIS,
    CoefficientVector,
    detect_singularities,
    forward_transform,
    inverse_transform,
    reconstruction_error,
    relative_threshold,
    threshold_coefficients,
)

SCHEMA_VERSION = 1


def _json_dump(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def _write_vector(path: str, values: np.ndarray, fmt: str) -> None:
    if fmt == "bin":
        sio.write_vector_binary(path, values)
    else:
        sio.write_vector_csv(path, values)


def generate_points(kind: str, n: int, dim: int, seed: int | None) -> PointCloud:
    """Built-in generators for benchmarks: seeded uniform cube or regular grid."""
    if n < 1 or dim < 1:
        raise InvalidInput("generator needs --n >= 1 and --dim >= 1")
    if kind == "uniform-cube":
        if seed is None:
            raise InvalidInput("--gen uniform-cube requires --seed")
        bits = np.random.Generator(np.random.Philox(key=np.array([seed, 0x5EED], dtype=np.uint64)))
        return PointCloud(bits.random((n, dim)) * 2.0 - 1.0)
    if kind == "grid":
        side = max(2, round(n ** (1.0 / dim))) if dim > 1 else n
        axes = [np.linspace(-1.0, 1.0, side) for _ in range(dim)]
        grids = np.meshgrid(*axes, indexing="ij")
        return PointCloud(np.stack([g.ravel() for g in grids], axis=1))
    raise InvalidInput(f"unknown generator {kind!r}; use uniform-cube or grid")


def _load_points(args) -> PointCloud:
    if getattr(args, "gen", None):
        return generate_points(args.gen, args.n, args.dim, args.seed)
    if not getattr(args, "points", None):
        raise InvalidInput("provide --points FILE or --gen KIND with --n/--dim")
    return sio.read_points(args.points)


def _build_basis(cloud: PointCloud, args):
    return build_samplet_basis(cloud, q=args.q, q_leaf=args.q_leaf,
                               leaf_size=args.leaf_size)


def _load_kernel(args) -> KernelConfig:
    if not args.kernel:
        raise InvalidInput("provide --kernel FILE (JSON kernel config)")
    path = Path(args.kernel)
    if not path.exists():
        raise InvalidInput(f"{path}: no such file")
    return KernelConfig.from_json(path.read_text())


def _resolve_threshold(args, coeffs: CoefficientVector) -> float:
    if args.threshold is not None and args.threshold_rel is not None:
        raise InvalidInput("use either --threshold or --threshold-rel, not both")
    if args.threshold_rel is not None:
        return relative_threshold(coeffs, args.threshold_rel)
    if args.threshold is not None:
        if args.threshold < 0:
            raise InvalidInput("--threshold must be nonnegative")
        return args.threshold
    return 0.0


def _basis_flags(parser) -> None:
    parser.add_argument("--q", type=int, default=2, help="vanishing moments minus one")
    parser.add_argument("--q-leaf", dest="q_leaf", type=int, default=None,
                        help="enriched polynomial degree at leaves")
    parser.add_argument("--leaf-size", dest="leaf_size", type=int, default=None)


def _generator_flags(parser) -> None:
    parser.add_argument("--points", help="point file (CSV or SMPLPTS1 binary)")
    parser.add_argument("--gen", choices=("uniform-cube", "grid"),
                        help="generate points instead of reading a file")
    parser.add_argument("--n", type=int, default=1024, help="generated point count")
    parser.add_argument("--dim", type=int, default=2, help="generated dimension")


def _threshold_flags(parser) -> None:
    parser.add_argument("--threshold", type=float, default=None,
                        help="absolute coefficient threshold")
    parser.add_argument("--threshold-rel", dest="threshold_rel", type=float, default=None,
                        help="exponent i for the relative threshold 1e-i * max|coeff|")
    parser.add_argument("--no-protect-scaling", dest="protect_scaling",
                        action="store_false", default=True,
                        help="allow thresholding of root scaling coefficients")


def cmd_transform(args) -> int:
    cloud = _load_points(args)
    data = sio.read_vector(args.data)
    basis = _build_basis(cloud, args)
    report: dict = {"schema": SCHEMA_VERSION, "command": "transform",
                    "n": cloud.count, "dim": cloud.dim,
                    "q": basis.spec.q, "q_leaf": basis.spec.q_leaf,
                    "leaf_size": basis.tree.leaf_size,
                    "direction": "inverse" if args.inverse else "forward"}
    if args.inverse:
        vec = CoefficientVector(data, SAMPLET_BASIS)
        out = inverse_transform(basis, vec)
    else:
        vec = CoefficientVector(data, POINT_BASIS)
        out = forward_transform(basis, vec)
        tau = _resolve_threshold(args, out)
        if tau > 0.0:
            out, trep = threshold_coefficients(basis, out, tau, args.protect_scaling)
            report.update(threshold=trep.threshold, kept=trep.kept,
                          ratio=trep.compression_ratio,
                          max_abs_coefficient=trep.max_abs_coefficient)
    _write_vector(args.out, out.values, args.format)
    _json_dump(report, args.report)
    return 0


def cmd_compress(args) -> int:
    cloud = _load_points(args)
    data = sio.read_vector(args.data)
    basis = _build_basis(cloud, args)
    coeffs = forward_transform(basis, CoefficientVector(data, POINT_BASIS))
    tau = _resolve_threshold(args, coeffs)
    recon, rep = reconstruction_error(basis, CoefficientVector(data, POINT_BASIS),
                                      tau, args.protect_scaling)
    if args.out:
        _write_vector(args.out, recon.values, args.format)
    line = {"threshold": rep.threshold, "kept": rep.kept,
            "ratio": rep.compression_ratio, "l2_error": rep.l2_error,
            "linf_error": rep.linf_error}
    text = json.dumps(line, sort_keys=True) + "\n"
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_detect(args) -> int:
    cloud = _load_points(args)
    data = sio.read_vector(args.data)
    basis = _build_basis(cloud, args)
    coeffs = forward_transform(basis, CoefficientVector(data, POINT_BASIS))
    tau = _resolve_threshold(args, coeffs)
    hits = detect_singularities(basis, coeffs, tau)
    lines = []
    for hit in hits:
        lines.append(json.dumps({
            "level": hit.level,
            "is_leaf": hit.cluster.is_leaf,
            "lo": [float(v) for v in hit.cluster.bbox.lo],
            "hi": [float(v) for v in hit.cluster.bbox.hi],
            "size": hit.cluster.size,
            "max_abs_coefficient": hit.max_abs_coefficient,
        }, sort_keys=True))
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_kernel_compress(args) -> int:
    cloud = _load_points(args)
    cfg = _load_kernel(args)
    basis = _build_basis(cloud, args)
    compressed = assemble_compressed_kernel(basis, cfg, eta=args.eta, p=args.p,
                                            epsilon=args.epsilon)
    matrix = compressed.matrix
    if args.ridge is not None:
        matrix = add_ridge(matrix, args.ridge)
    sio.write_matrix_market(args.out, matrix)
    metrics = {
        "schema": SCHEMA_VERSION, "command": "kernel-compress",
        "N": cloud.count, "d": cloud.dim, "eta": args.eta, "p": args.p,
        "q": basis.spec.q, "q_leaf": basis.spec.q_leaf, "epsilon": args.epsilon,
        "ridge": args.ridge, "anz": anz(matrix),
        "nnz": matrix.nnz_full,
        "assembly_seconds": compressed.stats.assembly_seconds,
        "peak_block_bytes": compressed.stats.peak_block_bytes,
        "visited_pairs": compressed.stats.visited_pairs,
        "kernel": json.loads(cfg.to_json()),
    }
    if args.dense_oracle:
        oracle = dense_compressed_oracle(cfg, basis)
        if args.ridge is not None:
            oracle = oracle + args.ridge * np.eye(cloud.count)
        delta = matrix.to_dense() - oracle
        metrics["rel_frobenius_error"] = float(
            np.linalg.norm(delta) / np.linalg.norm(oracle))
    _json_dump(metrics, args.metrics)
    return 0


def cmd_grf(args) -> int:
    cloud = _load_points(args)
    cfg = _load_kernel(args)
    if args.seed is None:
        raise InvalidInput("grf requires --seed for reproducible sampling")
    basis = _build_basis(cloud, args)
    t0 = time.perf_counter()
    compressed = assemble_compressed_kernel(basis, cfg, eta=args.eta, p=args.p,
                                            epsilon=args.epsilon)
    assembly_seconds = time.perf_counter() - t0
    ridged = add_ridge(compressed.matrix, args.ridge)
    supports = basis_support_boxes(basis) if args.ordering == "geometric" else None
    perm = fill_reducing_order(ridged, method=args.ordering, supports=supports)
    t1 = time.perf_counter()
    factor = sparse_cholesky(ridged, perm, rho=args.ridge)
    chol_seconds = time.perf_counter() - t1
    fields = sample_grf(factor, basis, seed=args.seed, n_samples=args.samples)
    ext = "bin" if args.format == "bin" else "csv"
    paths = []
    for s in range(args.samples):
        path = f"{args.out_prefix}_{s:03d}.{ext}"
        _write_vector(path, fields[s], args.format)
        paths.append(path)
    if args.factor_out:
        sio.write_factor(args.factor_out, factor)
    metrics = {
        "schema": SCHEMA_VERSION, "command": "grf",
        "N": cloud.count, "d": cloud.dim, "eta": args.eta, "p": args.p,
        "q": basis.spec.q, "epsilon": args.epsilon, "ridge": args.ridge,
        "seed": args.seed, "samples": args.samples, "ordering": args.ordering,
        "anz_K": anz(ridged), "anz_L": anz(factor),
        "nnz_K": ridged.nnz_full, "nnz_L": factor.nnz,
        "assembly_seconds": assembly_seconds, "cholesky_seconds": chol_seconds,
        "fields": paths,
    }
    _json_dump(metrics, args.metrics)
    return 0


def cmd_bench(args) -> int:
    sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()] if args.sizes else []
    dims = [int(tok) for tok in args.dims.split(",") if tok.strip()] if args.dims else []
    rows = ["N,d,assembly_time,anz_K,chol_time,anz_L"]
    for d in dims:
        for n in sizes:
            cloud = generate_points("uniform-cube", n, d, args.seed + n + 1000 * d)
            basis = build_samplet_basis(cloud, q=args.q, q_leaf=args.q_leaf,
                                        leaf_size=args.leaf_size)
            cfg = KernelConfig(SCALED_EXPONENTIAL, distance_scale=10.0 / np.sqrt(d))
            t0 = time.perf_counter()
            compressed = assemble_compressed_kernel(basis, cfg, eta=args.eta,
                                                    p=args.p, epsilon=args.epsilon)
            assembly_time = time.perf_counter() - t0
            ridged = add_ridge(compressed.matrix, args.ridge)
            perm = fill_reducing_order(ridged)
            t1 = time.perf_counter()
            factor = sparse_cholesky(ridged, perm, rho=args.ridge)
            chol_time = time.perf_counter() - t1
            rows.append(f"{n},{d},{assembly_time:.6f},{anz(ridged):.3f},"
                        f"{chol_time:.6f},{anz(factor):.3f}")
    text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_info(args) -> int:
    cloud = _load_points(args)
    basis = _build_basis(cloud, args)
    spec = basis.spec
    payload = {
        "schema": SCHEMA_VERSION, "command": "info",
        "n": cloud.count, "dim": cloud.dim,
        "tree_depth": basis.tree.depth,
        "clusters": len(basis.tree.clusters),
        "leaves": len(basis.tree.leaves),
        "leaf_size": basis.tree.leaf_size,
        "q": spec.q, "q_leaf": spec.q_leaf,
        "m_q": spec.m_q, "m_q_leaf": spec.m_q_leaf,
        "root_scaling_functions": basis.n_root_scaling,
        "samplets": cloud.count - basis.n_root_scaling,
    }
    _json_dump(payload, args.report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="samplets",
        description="Multiresolution scattered-data analysis and kernel matrix compression",
    )
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for stages that allow them (currently 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_tr = sub.add_parser("transform", help="forward or inverse samplet transform")
    _generator_flags(p_tr)
    _basis_flags(p_tr)
    _threshold_flags(p_tr)
    p_tr.add_argument("--data", required=True, help="data vector file")
    p_tr.add_argument("--out", required=True, help="output vector file")
    p_tr.add_argument("--inverse", action="store_true")
    p_tr.add_argument("--format", choices=("csv", "bin"), default="csv")
    p_tr.add_argument("--report", help="metrics JSON path (stdout if omitted)")
    p_tr.set_defaults(func=cmd_transform)

    p_cp = sub.add_parser("compress", help="threshold coefficients and report errors")
    _generator_flags(p_cp)
    _basis_flags(p_cp)
    _threshold_flags(p_cp)
    p_cp.add_argument("--data", required=True)
    p_cp.add_argument("--out", help="reconstruction output vector")
    p_cp.add_argument("--format", choices=("csv", "bin"), default="csv")
    p_cp.add_argument("--report", help="JSON-lines report path (stdout if omitted)")
    p_cp.set_defaults(func=cmd_compress)

    p_dt = sub.add_parser("detect", help="list clusters with large coefficients")
    _generator_flags(p_dt)
    _basis_flags(p_dt)
    _threshold_flags(p_dt)
    p_dt.add_argument("--data", required=True)
    p_dt.add_argument("--out", help="JSON-lines output (stdout if omitted)")
    p_dt.set_defaults(func=cmd_detect)

    p_kc = sub.add_parser("kernel-compress", help="assemble the compressed kernel matrix")
    _generator_flags(p_kc)
    _basis_flags(p_kc)
    p_kc.add_argument("--kernel", required=True, help="kernel config JSON file")
    p_kc.add_argument("--out", required=True, help="Matrix Market output path")
    p_kc.add_argument("--metrics", help="metrics JSON path (stdout if omitted)")
    p_kc.add_argument("--eta", type=float, default=1.25)
    p_kc.add_argument("--p", type=int, default=3)
    p_kc.add_argument("--epsilon", type=float, default=1e-3)
    p_kc.add_argument("--ridge", type=float, default=None)
    p_kc.add_argument("--dense-oracle", dest="dense_oracle", action="store_true",
                      help="also compare against the dense transform oracle")
    p_kc.add_argument("--seed", type=int, default=None)
    p_kc.set_defaults(func=cmd_kernel_compress)

    p_gr = sub.add_parser("grf", help="sample Gaussian random fields")
    _generator_flags(p_gr)
    _basis_flags(p_gr)
    p_gr.add_argument("--kernel", required=True)
    p_gr.add_argument("--out-prefix", dest="out_prefix", required=True)
    p_gr.add_argument("--metrics")
    p_gr.add_argument("--samples", type=int, default=4)
    p_gr.add_argument("--seed", type=int, default=None)
    p_gr.add_argument("--eta", type=float, default=1.25)
    p_gr.add_argument("--p", type=int, default=3)
    p_gr.add_argument("--epsilon", type=float, default=1e-3)
    p_gr.add_argument("--ridge", type=float, default=1.0)
    p_gr.add_argument("--ordering", choices=("amd", "geometric", "natural"), default="amd")
    p_gr.add_argument("--format", choices=("csv", "bin"), default="csv")
    p_gr.add_argument("--factor-out", dest="factor_out", help="save the factor (binary)")
    p_gr.set_defaults(func=cmd_grf)

    p_bn = sub.add_parser("bench", help="sweep sizes and emit a timing table")
    _basis_flags(p_bn)
    p_bn.add_argument("--sizes", default="", help="comma-separated point counts")
    p_bn.add_argument("--dims", default="", help="comma-separated dimensions")
    p_bn.add_argument("--seed", type=int, default=0)
    p_bn.add_argument("--eta", type=float, default=1.25)
    p_bn.add_argument("--p", type=int, default=3)
    p_bn.add_argument("--epsilon", type=float, default=1e-3)
    p_bn.add_argument("--ridge", type=float, default=1.0)
    p_bn.add_argument("--out", help="CSV output path (stdout if omitted)")
    p_bn.set_defaults(func=cmd_bench)

    p_in = sub.add_parser("info", help="report tree and basis statistics")
    _generator_flags(p_in)
    _basis_flags(p_in)
    p_in.add_argument("--seed", type=int, default=None)
    p_in.add_argument("--report", help="JSON output path (stdout if omitted)")
    p_in.set_defaults(func=cmd_info)

    for cmd in (p_tr, p_cp, p_dt):
        cmd.add_argument("--seed", type=int, default=None)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except NonPositivePivot as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InvalidInput, ResourceLimit, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
