"""Benchmark harness and CLI: compression studies for the footprint and
samplet methods, the symmetric-preconditioner study, and a 2D implicit
curve reconstruction from signed-distance samples.

All experiments run at desk scale (N up to a few 10^4) and emit CSV
records with one row per sweep point.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import lagrange, precond, samplets
from .errors import DualkernError
from .kernels import KernelSpec, assemble, parse_kernel_spec
from .linalg import pcg, power_iteration_spectral_error
from .pointset import DataSiteSet, build_cluster_tree, generate_uniform, geometry_summary

__all__ = [
    "ExperimentConfig",
    "ExperimentRecord",
    "run_compression_study",
    "run_preconditioner_study",
    "reconstruct_implicit_curve",
    "emit",
    "read_records",
    "main",
]


@dataclass
class ExperimentConfig:
    """Knobs for one experiment family; defaults follow the benchmark
    conventions (lambda = 1e-6 N, solver tolerance 1e-9, 200 power
    iterations)."""

    method: str = "footprint"  # "footprint" or "samplet"
    n: int = 1000
    dim: int = 2
    seed: int = 7
    kernel: KernelSpec = field(default_factory=lambda: KernelSpec("matern_half", 0.5, 0.1))
    lam: float | None = None  # default 1e-6 * n
    sweep: list = field(default_factory=list)  # kappa values or thresholds
    tol: float = 1e-9
    power_iters: int = 200
    moments: int = 6  # q + 1 vanishing moments for the samplet method
    leaf_capacity: int = 32
    probe_resolution: int = 64
    baseline_max_iter: int = 1500
    max_iter: int = 20000

    def effective_lambda(self) -> float:
        return 1e-6 * self.n if self.lam is None else self.lam


@dataclass
class ExperimentRecord:
    """One benchmark row; ``param`` is the sweep value (kappa/threshold)."""

    method: str
    n: int
    nu: float
    param: float
    compression_rate: float
    spectral_error: float
    iterations: int
    assembly_ms: float
    solve_ms: float
    failed: bool = False


def _regularized(spec: KernelSpec, sites: DataSiteSet, lam: float):
    a = assemble(spec, sites, 0.0).entries
    areg = a.copy()
    areg[np.diag_indices_from(areg)] += lam
    return a, areg


def _spectral_error(areg, apply_b, apply_bt, n, iters):
    e = lambda x: areg @ apply_b(x) - x
    et = lambda x: apply_bt(areg @ x) - x
    return power_iteration_spectral_error(e, n, iters, apply_et=et)


def run_compression_study(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """Error-vs-compression-rate sweep for one method.

    Footprint method: sweep values are kappa; B is the localized Lagrange
    matrix. Samplet method: sweep values are a-posteriori thresholds; the
    reported compression rate is the one of the sparse factor.
    """
    if not cfg.sweep:
        raise ValueError("sweep must be nonempty")
    sites = generate_uniform(cfg.n, cfg.dim, cfg.seed)
    lam = cfg.effective_lambda()
    t0 = time.perf_counter()
    a, areg = _regularized(cfg.kernel, sites, lam)
    base_ms = 1000 * (time.perf_counter() - t0)
    records = []

    if cfg.method == "footprint":
        summary = geometry_summary(sites, cfg.probe_resolution)
        for kappa in cfg.sweep:
            t0 = time.perf_counter()
            try:
                fps = lagrange.build_footprints(sites, summary, kappa)
                basis = lagrange.localized_lagrange(
                    cfg.kernel, sites, fps, lam, kappa, dense_a=a)
            except DualkernError:
                records.append(ExperimentRecord(
                    cfg.method, cfg.n, cfg.kernel.nu, kappa, np.nan, np.nan,
                    0, base_ms, 0.0, failed=True))
                continue
            asm_ms = 1000 * (time.perf_counter() - t0)
            t0 = time.perf_counter()
            err = _spectral_error(
                areg, lambda x: basis.b.csc @ x, lambda x: basis.b.csc.T @ x,
                cfg.n, cfg.power_iters)
            records.append(ExperimentRecord(
                cfg.method, cfg.n, cfg.kernel.nu, kappa,
                basis.b.compression_rate(), err, 0, base_ms + asm_ms,
                1000 * (time.perf_counter() - t0)))
    elif cfg.method == "samplet":
        tree = build_cluster_tree(sites, cfg.leaf_capacity)
        t = samplets.build_transform(tree, sites, cfg.moments - 1)
        for threshold in cfg.sweep:
            t0 = time.perf_counter()
            cm = samplets.compress_kernel_matrix(
                t, cfg.kernel, sites, lam, threshold, dense_a=a)
            try:
                rate = cm.factor_compression_rate()
            except DualkernError:
                records.append(ExperimentRecord(
                    cfg.method, cfg.n, cfg.kernel.nu, threshold, np.nan,
                    np.nan, 0, base_ms, 0.0, failed=True))
                continue
            asm_ms = 1000 * (time.perf_counter() - t0)
            t0 = time.perf_counter()
            err = _spectral_error(areg, cm.apply_inverse, cm.apply_inverse,
                                  cfg.n, cfg.power_iters)
            records.append(ExperimentRecord(
                cfg.method, cfg.n, cfg.kernel.nu, threshold, rate, err, 0,
                base_ms + asm_ms, 1000 * (time.perf_counter() - t0)))
    else:
        raise ValueError(f"unknown method {cfg.method!r}")
    return records


def run_preconditioner_study(cfg: ExperimentConfig) -> list[ExperimentRecord]:
    """PCG iteration counts for both symmetric variants over a kappa
    sweep, plus an unpreconditioned baseline (method column "none")."""
    if not cfg.sweep:
        raise ValueError("sweep must be nonempty")
    sites = generate_uniform(cfg.n, cfg.dim, cfg.seed)
    lam = cfg.effective_lambda()
    summary = geometry_summary(sites, cfg.probe_resolution)
    t0 = time.perf_counter()
    a, areg = _regularized(cfg.kernel, sites, lam)
    base_ms = 1000 * (time.perf_counter() - t0)
    rhs = np.ones(cfg.n)
    records = []
    for kappa in cfg.sweep:
        fps = lagrange.build_footprints(sites, summary, kappa)
        rate = sum(f.member_indices.size for f in fps) / cfg.n**2
        for variant, builder in (
                ("cholesky", precond.build_cholesky_preconditioner),
                ("sqrt", precond.build_sqrt_preconditioner)):
            t0 = time.perf_counter()
            try:
                p = builder(cfg.kernel, sites, fps, lam, kappa, dense_a=a)
            except DualkernError:
                records.append(ExperimentRecord(
                    variant, cfg.n, cfg.kernel.nu, kappa, rate, np.nan, 0,
                    base_ms, 0.0, failed=True))
                continue
            asm_ms = 1000 * (time.perf_counter() - t0)
            t0 = time.perf_counter()
            _, rep = pcg(lambda x: areg @ x,
                         rhs, lambda x: precond.apply_preconditioner(p, x),
                         tol=cfg.tol, max_iter=cfg.max_iter)
            records.append(ExperimentRecord(
                variant, cfg.n, cfg.kernel.nu, kappa, rate,
                rep.final_relative_residual, rep.iterations,
                base_ms + asm_ms, 1000 * rep.wall_time,
                failed=not rep.converged))
    t0 = time.perf_counter()
    _, rep = pcg(lambda x: areg @ x, rhs, None, tol=cfg.tol,
                 max_iter=cfg.baseline_max_iter)
    records.append(ExperimentRecord(
        "none", cfg.n, cfg.kernel.nu, 0.0, 1.0,
        rep.final_relative_residual, rep.iterations, base_ms,
        1000 * rep.wall_time, failed=not rep.converged))
    return records


@dataclass
class ReconstructionResult:
    """Signed-distance fit on a grid plus the recovered zero levelset."""

    grid_x: np.ndarray
    grid_y: np.ndarray
    values: np.ndarray          # (n_grid, n_grid) fitted signed distance
    contours: list[np.ndarray]  # zero-levelset polylines in xy coordinates
    max_boundary_deviation: float
    grid_spacing: float
    pcg_iterations: int
    pcg_converged: bool


def _shape_boundary(shape: str, t: np.ndarray) -> np.ndarray:
    if shape == "circle":
        return np.stack([np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)], axis=1)
    if shape == "star":
        r = 1.0 + 0.3 * np.cos(10 * np.pi * t)
        return np.stack([r * np.cos(2 * np.pi * t), r * np.sin(2 * np.pi * t)], axis=1)
    raise ValueError(f"unknown shape {shape!r}")


def _signed_distance(shape: str, pts: np.ndarray) -> np.ndarray:
    if shape == "circle":
        return np.linalg.norm(pts, axis=1) - 1.0
    # generic: distance to a fine boundary polyline, sign by radius rule
    dense = _shape_boundary(shape, np.linspace(0, 1, 20000, endpoint=False))
    from scipy.spatial import cKDTree
    dist = cKDTree(dense).query(pts)[0]
    theta = np.mod(np.arctan2(pts[:, 1], pts[:, 0]) / (2 * np.pi), 1.0)
    r_bound = np.linalg.norm(_shape_boundary(shape, theta), axis=1)
    inside = np.linalg.norm(pts, axis=1) < r_bound
    return np.where(inside, -dist, dist)


def reconstruct_implicit_curve(shape: str = "circle", n_surface: int = 2000,
                               n_offsurface: int = 1000, delta: float = 0.05,
                               n_grid: int = 200, kappa: float = 0.25,
                               seed: int = 11, lam: float | None = None,
                               tol: float = 1e-9,
                               probe_resolution: int = 64) -> ReconstructionResult:
    """Fit a signed-distance function with the exponential kernel and a
    Cholesky-variant preconditioned CG, then extract the zero levelset by
    marching squares."""
    if n_offsurface < 1:
        raise ValueError("signed-distance fitting needs off-surface samples "
                         "carrying both signs")
    from skimage import measure

    lo, hi = -1.5, 1.5
    rng = np.random.default_rng(seed)
    boundary = _shape_boundary(shape, np.linspace(0, 1, n_surface, endpoint=False))
    off = rng.uniform(lo, hi, size=(n_offsurface, 2))
    pts = np.vstack([boundary, off])
    values = np.concatenate([np.zeros(n_surface), _signed_distance(shape, off)])
    if not (np.any(values > 0) and np.any(values < 0)):
        raise ValueError("off-surface samples must include both signs")

    box = np.array([[lo, lo], [hi, hi]])
    sites = DataSiteSet(pts, box)
    n = sites.n
    lam = 1e-8 * n if lam is None else lam
    spec = KernelSpec("matern_half", 0.5, delta)

    summary = geometry_summary(sites, probe_resolution)
    _, areg = _regularized(spec, sites, lam)
    fps = lagrange.build_footprints(sites, summary, kappa)
    p = precond.build_cholesky_preconditioner(spec, sites, fps, lam)
    alpha, rep = pcg(lambda x: areg @ x, values,
                     lambda x: precond.apply_preconditioner(p, x), tol=tol)

    axis = np.linspace(lo, hi, n_grid)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    queries = np.stack([gx.ravel(), gy.ravel()], axis=1)
    from .kernels import _pairwise
    fitted = np.empty(queries.shape[0])
    chunk = 4000
    for s0 in range(0, queries.shape[0], chunk):
        s1 = min(s0 + chunk, queries.shape[0])
        fitted[s0:s1] = _pairwise(spec, queries[s0:s1], pts) @ alpha
    grid = fitted.reshape(n_grid, n_grid)

    spacing = axis[1] - axis[0]
    contours = []
    max_dev = np.inf
    cs = measure.find_contours(grid, 0.0)
    if cs:
        devs = []
        for c in cs:
            xy = np.stack([lo + c[:, 0] * spacing, lo + c[:, 1] * spacing], axis=1)
            contours.append(xy)
            devs.append(np.max(np.abs(_signed_distance(shape, xy))))
        max_dev = float(max(devs))
    return ReconstructionResult(gx, gy, grid, contours, max_dev, spacing,
                                rep.iterations, rep.converged)


CSV_HEADER = ["method", "N", "nu", "param", "compression_rate",
              "spectral_error", "iterations", "assembly_ms", "solve_ms"]


def emit(records: list[ExperimentRecord], path) -> None:
    """Write records as CSV (and nothing else; plotting is out of scope)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([r.method, r.n, r.nu, r.param, r.compression_rate,
                        r.spectral_error, r.iterations, r.assembly_ms,
                        r.solve_ms])


def read_records(path) -> list[ExperimentRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(ExperimentRecord(
                row["method"], int(row["N"]), float(row["nu"]),
                float(row["param"]), float(row["compression_rate"]),
                float(row["spectral_error"]), int(row["iterations"]),
                float(row["assembly_ms"]), float(row["solve_ms"])))
    return out


def check_monotonicity(records: list[ExperimentRecord]) -> list[str]:
    """Flag non-monotone error-vs-rate or iteration-vs-kappa trends."""
    flags = []
    by_method: dict[str, list[ExperimentRecord]] = {}
    for r in records:
        if not r.failed:
            by_method.setdefault(r.method, []).append(r)
    for method, recs in by_method.items():
        if method in ("footprint", "samplet"):
            recs = sorted(recs, key=lambda r: r.compression_rate)
            errs = [r.spectral_error for r in recs]
            if any(b > a for a, b in zip(errs, errs[1:])):
                flags.append(f"{method}: error not monotone in compression rate")
        elif method in ("cholesky", "sqrt"):
            recs = sorted(recs, key=lambda r: r.param)
            its = [r.iterations for r in recs]
            if any(b >= a for a, b in zip(its, its[1:])):
                flags.append(f"{method}: iterations not strictly decreasing in kappa")
    return flags


def _load_config(path: str | None, overrides: list[str]) -> dict:
    cfg: dict[str, str] = {}
    if path:
        with open(path) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, _, val = line.partition("=")
                cfg[key.strip()] = val.strip()
    for item in overrides:
        key, _, val = item.partition("=")
        cfg[key.strip()] = val.strip()
    return cfg


def _build_experiment_config(raw: dict, method: str) -> ExperimentConfig:
    cfg = ExperimentConfig(method=method)
    if "n" in raw:
        cfg.n = int(raw["n"])
    if "seed" in raw:
        cfg.seed = int(raw["seed"])
    if "kernel" in raw:
        cfg.kernel = parse_kernel_spec(raw["kernel"])
    if "lambda" in raw:
        cfg.lam = float(raw["lambda"])
    if "sweep" in raw:
        cfg.sweep = [float(v) for v in raw["sweep"].split(",") if v]
    if "kappa" in raw and not cfg.sweep:
        cfg.sweep = [float(raw["kappa"])]
    if "threshold" in raw and not cfg.sweep:
        cfg.sweep = [float(raw["threshold"])]
    if "tol" in raw:
        cfg.tol = float(raw["tol"])
    if "power_iters" in raw:
        cfg.power_iters = int(raw["power_iters"])
    if "moments" in raw:
        cfg.moments = int(raw["moments"])
    if "leaf_capacity" in raw:
        cfg.leaf_capacity = int(raw["leaf_capacity"])
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dualkern-bench",
        description="benchmarks for dual-basis kernel approximation")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("compression", "precond", "reconstruct"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None,
                        help="key=value file with experiment settings")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VAL",
                        help="override a config entry")
        sp.add_argument("--out", default=None, help="CSV output path")
    args = parser.parse_args(argv)
    raw = _load_config(args.config, getattr(args, "set"))

    if args.command == "compression":
        cfg = _build_experiment_config(raw, raw.get("method", "footprint"))
        if not cfg.sweep:
            cfg.sweep = ([0.8, 1.2, 1.6, 2.0, 2.4, 2.8]
                         if cfg.method == "footprint"
                         else [1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
        records = run_compression_study(cfg)
    elif args.command == "precond":
        cfg = _build_experiment_config(raw, "precond")
        if not cfg.sweep:
            cfg.sweep = [0.4, 0.7, 1.0, 1.3]
        records = run_preconditioner_study(cfg)
    else:
        res = reconstruct_implicit_curve(
            shape=raw.get("shape", "circle"),
            n_surface=int(raw.get("n_surface", 2000)),
            n_offsurface=int(raw.get("n_offsurface", 1000)),
            delta=float(raw.get("delta", 0.05)),
            n_grid=int(raw.get("n_grid", 200)),
            kappa=float(raw.get("kappa", 0.25)),
            seed=int(raw.get("seed", 11)))
        print(f"zero levelset deviation: {res.max_boundary_deviation:.4g} "
              f"(grid spacing {res.grid_spacing:.4g}); "
              f"pcg iterations: {res.pcg_iterations}")
        ok = (res.pcg_converged
              and res.max_boundary_deviation <= 2 * res.grid_spacing)
        return 0 if ok else 1

    for r in records:
        print(f"{r.method} N={r.n} nu={r.nu} param={r.param:g} "
              f"rate={r.compression_rate:.6g} error={r.spectral_error:.6g} "
              f"iters={r.iterations}" + ("  [FAILED]" if r.failed else ""))
    if args.out:
        emit(records, args.out)
    flags = check_monotonicity(records)
    for f in flags:
        print("WARNING:", f, file=sys.stderr)
    return 1 if flags or any(r.failed for r in records) else 0


if __name__ == "__main__":
    sys.exit(main())
