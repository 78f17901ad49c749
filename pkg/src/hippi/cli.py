"""Command-line surface: generate, solve, eval, bench, verify.

Every run is driven by one :class:`RunConfig`, assembled from an optional
JSON config file (sections "kernel", "solver", "generate", "run") overridden
by command-line flags.  All randomness flows through the single seed, and the
data outputs (problem/assignment JSON, trace CSV) are byte-identical across
reruns of the same configuration; wall-clock numbers appear only in report
rows and logs.

Exit codes: 0 success, 1 usage error, 2 data error (bad files, invalid
configuration, failed strict PSD check, inconsistent matchings under
``verify``), 3 solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from hippi import io
from hippi.baselines import BASELINE_METHODS, greedy_init, random_init, run_baseline
from hippi.core import ProblemInstance, expand
from hippi.kernels import KernelConfig, assert_psd, build_adjacency, build_similarity
from hippi.metrics import cycle_error, fscore, verify_cycle_consistency
from hippi.solver import (
    SolverConfig,
    SolverTrace,
    WbarOperator,
    hippi_solve,
    hippi_step,
    objective,
    universe_size,
)
from hippi.synth import GenConfig, generate

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3

METHODS = ("hippi",) + BASELINE_METHODS
INIT_METHODS = ("random", "greedy")


class UsageError(Exception):
    """Bad command line; maps to exit code 1."""


@dataclass(frozen=True)
class RunConfig:
    """Everything one command needs, after merging config file and flags."""

    command: str
    problem: str | None = None
    assignment: str | None = None
    pairwise: str | None = None
    external: str | None = None
    out: str = "."
    method: str = "hippi"
    init: str = "random"
    d: int | None = None
    universe_rule: str = "twice-average"
    seed: int | None = None
    strict_psd: bool = False
    sizes: tuple[int, ...] = (500, 1000, 2000)
    points_per_object: int = 20
    bench_iters: int = 3
    full_solve: bool = False
    kernel: KernelConfig = field(default_factory=KernelConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    generator: GenConfig | None = None

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.init not in INIT_METHODS:
            raise ValueError(f"init must be one of {INIT_METHODS}, got {self.init!r}")


def _build_dataclass(factory, section: dict, overrides: dict):
    merged = dict(section)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return factory(**merged)
    except TypeError as exc:
        raise ValueError(f"bad {factory.__name__} settings: {exc}") from exc


def _config_file(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: config file must hold a JSON object")
    return doc


def build_run_config(args: argparse.Namespace) -> RunConfig:
    doc = _config_file(getattr(args, "config", None))
    run_section = dict(doc.get("run", {}))

    kernel = _build_dataclass(
        KernelConfig,
        doc.get("kernel", {}),
        {
            "sigma": getattr(args, "sigma", None),
            "mu": getattr(args, "mu", None),
            "weight_mode": getattr(args, "weight_mode", None),
            "knn_sparsify": getattr(args, "knn", None),
        },
    )
    solver = _build_dataclass(
        SolverConfig,
        doc.get("solver", {}),
        {
            "max_iters": getattr(args, "max_iters", None),
            "f_tol": getattr(args, "f_tol", None),
            "projection_method": getattr(args, "projection", None),
        },
    )
    generator = None
    if args.command == "generate" or "generate" in doc:
        generator = _build_dataclass(
            GenConfig,
            doc.get("generate", {}),
            {
                "k": getattr(args, "k", None),
                "d_true": getattr(args, "d_true", None),
                "visibility": getattr(args, "visibility", None),
                "coord_noise_sigma": getattr(args, "coord_noise", None),
                "feature_noise_sigma": getattr(args, "feature_noise", None),
                "outlier_fraction": getattr(args, "outlier_fraction", None),
                "occlusion_rect": (
                    tuple(args.occlusion) if getattr(args, "occlusion", None) else None
                ),
                "transform_family": getattr(args, "transform", None),
                "feature_dim": getattr(args, "feature_dim", None),
                "feature_prototypes": getattr(args, "prototypes", None),
                "seed": getattr(args, "seed", None),
            },
        )

    def pick(flag, key, default):
        value = getattr(args, flag, None)
        if value is None:
            value = run_section.get(key, default)
        return value

    return RunConfig(
        command=args.command,
        problem=getattr(args, "problem", None),
        assignment=getattr(args, "assignment", None),
        pairwise=getattr(args, "pairwise", None),
        external=pick("external", "external", None),
        out=pick("out", "out", "."),
        method=pick("method", "method", "hippi"),
        init=pick("init", "init", "random"),
        d=pick("d", "d", None),
        universe_rule=pick("universe_rule", "universe_rule", "twice-average"),
        seed=pick("seed", "seed", None),
        strict_psd=bool(getattr(args, "strict_psd", False) or run_section.get("strict_psd", False)),
        sizes=tuple(pick("sizes", "sizes", (500, 1000, 2000))),
        points_per_object=pick("points_per_object", "points_per_object", 20),
        bench_iters=pick("bench_iters", "bench_iters", 3),
        full_solve=bool(getattr(args, "full", False) or run_section.get("full_solve", False)),
        kernel=kernel,
        solver=solver,
        generator=generator,
    )


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_generate(cfg: RunConfig) -> int:
    if cfg.generator is None:
        raise ValueError("generate needs --k/--d-true flags or a config file section")
    p = generate(cfg.generator)
    out = _out_dir(cfg)
    io.save_problem(p, out / "problem.json")
    outliers = [int(np.sum(g < 0)) for g in p.ground_truth]
    print(
        f"generated k={p.k} m={p.m} d_true={cfg.generator.d_true} "
        f"sizes={list(p.sizes)} outliers={outliers}"
    )
    print(f"wrote {out / 'problem.json'}")
    return EXIT_OK


def _prepare_operator(cfg: RunConfig, p: ProblemInstance):
    w = build_similarity(p, cfg.kernel)
    a = build_adjacency(p, cfg.kernel)
    psd = assert_psd(a, repair=not cfg.strict_psd)
    if not psd.ok:
        if cfg.strict_psd:
            raise ValueError(
                "adjacency failed the PSD check in strict mode "
                f"(min eigenvalue {float(np.min(psd.min_eigenvalues)):.3e})"
            )
        log.warning("adjacency repaired: negative eigenvalues clamped to zero")
        a = psd.repaired
    return w, a


def _initial_assignment(cfg: RunConfig, w, index, d):
    if cfg.init == "greedy":
        return greedy_init(w, d)
    return random_init(index, d, cfg.seed)


def cmd_solve(cfg: RunConfig) -> int:
    p = io.load_problem(cfg.problem)
    w, a = _prepare_operator(cfg, p)
    d = universe_size(p.index, cfg.universe_rule, cfg.d)
    op = WbarOperator.from_kernels(w, a)
    started = time.perf_counter()
    if cfg.method == "hippi":
        u0 = _initial_assignment(cfg, w, p.index, d)
        u, trace = hippi_solve(op, u0, cfg.solver)
    else:
        u = run_baseline(
            cfg.method, index=p.index, d=d, similarity=w, seed=cfg.seed, path=cfg.external
        )
        trace = SolverTrace(
            objectives=np.array([objective(op, u)]),
            wall_times=np.array([time.perf_counter() - started]),
            converged=True,
        )
    runtime = time.perf_counter() - started
    out = _out_dir(cfg)
    io.save_assignment(u, out / "assignment.json")
    io.save_trace(trace, out / "trace.csv")
    summary = (
        f"method={cfg.method} d={d} iterations={trace.iterations} "
        f"converged={trace.converged} objective={float(trace.objectives[-1])!r}"
    )
    if p.ground_truth is not None:
        report = fscore(u, p.ground_truth, runtime_seconds=runtime)
        io.save_report(
            report,
            out / "report.csv",
            method=cfg.method,
            index=p.index,
            d=d,
            iterations=trace.iterations,
            converged=trace.converged,
        )
        summary += f" fscore={report.fscore:.4f}"
    print(summary)
    print(f"wrote {out / 'assignment.json'} and {out / 'trace.csv'}")
    return EXIT_OK


def cmd_eval(cfg: RunConfig) -> int:
    p = io.load_problem(cfg.problem)
    if p.ground_truth is None:
        raise ValueError("problem file has no ground truth to evaluate against")
    started = time.perf_counter()
    if cfg.pairwise is not None:
        predicted = io.load_pairwise(cfg.pairwise)
        d = 0  # not defined for a raw pairwise set
    elif cfg.assignment is not None:
        predicted = io.load_assignment(cfg.assignment)
        if predicted.index.sizes != p.index.sizes:
            raise ValueError("assignment objects do not match the problem")
        d = predicted.d
    else:
        raise ValueError("eval needs --assignment or --pairwise")
    report = fscore(
        predicted, p.ground_truth, runtime_seconds=time.perf_counter() - started
    )
    out = _out_dir(cfg)
    io.save_report(
        report,
        out / "report.csv",
        method=cfg.method,
        index=p.index,
        d=d,
        iterations=0,
        converged=True,
    )
    print(
        f"precision={report.precision:.4f} recall={report.recall:.4f} "
        f"fscore={report.fscore:.4f} cycle_error={report.cycle_error:.4f}"
    )
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.pairwise is not None:
        ms = io.load_pairwise(cfg.pairwise)
    elif cfg.assignment is not None:
        ms = expand(io.load_assignment(cfg.assignment))
    else:
        raise ValueError("verify needs --assignment or --pairwise")
    report = verify_cycle_consistency(ms)
    err = cycle_error(ms)
    print(
        f"identity={report.identity} symmetry={report.symmetry} "
        f"transitivity={report.transitivity} cycle_error={err!r}"
    )
    if report.ok:
        print("consistent")
        return EXIT_OK
    print("inconsistent")
    return EXIT_DATA


def bench_instance(m: int, points_per_object: int, seed) -> ProblemInstance:
    """A ladder rung: m/points objects of fixed size with mild jitter."""
    if m % points_per_object:
        raise ValueError(f"m={m} is not a multiple of {points_per_object}")
    cfg = GenConfig(
        k=m // points_per_object,
        d_true=points_per_object,
        visibility=1.0,
        coord_noise_sigma=0.01,
        feature_dim=8,
        feature_noise_sigma=0.1,
        transform_family="rigid",
        seed=seed,
    )
    return generate(cfg)


def bench_ladder(cfg: RunConfig) -> list[dict]:
    """Time the per-iteration cost over the size ladder; optionally full solves."""
    rows = []
    d = cfg.d or 40
    for idx, m in enumerate(cfg.sizes):
        p = bench_instance(m, cfg.points_per_object, (cfg.seed or 0) + idx)
        w, a = _prepare_operator(cfg, p)
        op = WbarOperator.from_kernels(w, a)
        u = random_init(p.index, d, cfg.seed)
        u, _ = hippi_step(op, u, cfg.solver.projection_method)  # warm-up
        tic = time.perf_counter()
        for _ in range(cfg.bench_iters):
            u, _ = hippi_step(op, u, cfg.solver.projection_method)
        per_iter = (time.perf_counter() - tic) / cfg.bench_iters
        row = {
            "m": m,
            "k": p.k,
            "d": d,
            "seconds_per_iteration": per_iter,
        }
        if cfg.full_solve:
            u0 = random_init(p.index, d, cfg.seed)
            tic = time.perf_counter()
            _, trace = hippi_solve(op, u0, cfg.solver)
            row["solve_seconds"] = time.perf_counter() - tic
            row["iterations"] = trace.iterations
        rows.append(row)
    return rows


def fit_scaling_exponent(ms, seconds) -> float:
    """Least-squares slope of log t against log m."""
    slope, _ = np.polyfit(np.log(np.asarray(ms, float)), np.log(np.asarray(seconds)), 1)
    return float(slope)


def cmd_bench(cfg: RunConfig) -> int:
    rows = bench_ladder(cfg)
    out = _out_dir(cfg)
    columns = list(rows[0].keys())
    with open(out / "bench.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in columns) + "\n")
    for row in rows:
        print(" ".join(f"{key}={row[key]}" for key in columns))
    if len(rows) >= 2:
        exponent = fit_scaling_exponent(
            [r["m"] for r in rows], [r["seconds_per_iteration"] for r in rows]
        )
        print(f"fitted exponent={exponent:.3f}")
    print(f"wrote {out / 'bench.csv'}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _sizes_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hippi", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--out", help="output directory (default: .)")
        sp.add_argument("--seed", type=int)

    gen = sub.add_parser("generate", help="write a synthetic problem file")
    common(gen)
    gen.add_argument("--k", type=int)
    gen.add_argument("--d-true", dest="d_true", type=int)
    gen.add_argument("--visibility", type=float)
    gen.add_argument("--coord-noise", dest="coord_noise", type=float)
    gen.add_argument("--feature-noise", dest="feature_noise", type=float)
    gen.add_argument("--outlier-fraction", dest="outlier_fraction", type=float)
    gen.add_argument("--occlusion", nargs=4, type=float, metavar=("X", "Y", "W", "H"))
    gen.add_argument("--transform", choices=("rigid", "similarity", "none"))
    gen.add_argument("--feature-dim", dest="feature_dim", type=int)
    gen.add_argument("--prototypes", type=int)

    slv = sub.add_parser("solve", help="solve a problem file")
    common(slv)
    slv.add_argument("--problem", required=True)
    slv.add_argument("--method", choices=METHODS)
    slv.add_argument("--init", choices=INIT_METHODS)
    slv.add_argument("--d", type=int)
    slv.add_argument("--universe-rule", dest="universe_rule",
                     choices=("twice-average", "max-block"))
    slv.add_argument("--sigma", type=float)
    slv.add_argument("--mu", type=float)
    slv.add_argument("--weight-mode", dest="weight_mode",
                     choices=("constant", "intra-ratio"))
    slv.add_argument("--knn", type=int)
    slv.add_argument("--max-iters", dest="max_iters", type=int)
    slv.add_argument("--f-tol", dest="f_tol", type=float)
    slv.add_argument("--projection", choices=("exact", "auction"))
    slv.add_argument("--strict-psd", dest="strict_psd", action="store_true")
    slv.add_argument("--external", help="assignment file for the external-file method")

    ev = sub.add_parser("eval", help="score an assignment against ground truth")
    common(ev)
    ev.add_argument("--problem", required=True)
    ev.add_argument("--assignment")
    ev.add_argument("--pairwise")
    ev.add_argument("--method", choices=METHODS, help="label for the report row")

    ben = sub.add_parser("bench", help="per-iteration scaling ladder")
    common(ben)
    ben.add_argument("--sizes", type=_sizes_list, help="comma list of m values")
    ben.add_argument("--d", type=int)
    ben.add_argument("--points-per-object", dest="points_per_object", type=int)
    ben.add_argument("--iters", dest="bench_iters", type=int)
    ben.add_argument("--full", action="store_true", help="also time full solves")
    ben.add_argument("--projection", choices=("exact", "auction"))

    ver = sub.add_parser("verify", help="check cycle consistency of a matching")
    common(ver)
    ver.add_argument("--assignment")
    ver.add_argument("--pairwise")

    return parser


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = build_run_config(args)
        return COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
