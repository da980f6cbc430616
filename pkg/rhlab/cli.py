from __future__ import annotations

import argparse
import asyncio
import dataclasses
import hashlib
import json
import logging
import math
import sys
from collections.abc import Callable
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

import numpy as np

from rhlab import __version__
from rhlab import asyncio as rhlab_asyncio
from rhlab.config import COMMANDS, DEFAULTS, ExperimentPlan, parse_complex, parse_config, parse_int
from rhlab.cz import (
    CZBlock,
    commutator_sweep,
    cz_profile,
    measured_gamma,
    random_block,
    rho_k_sweep,
)
from rhlab.errors import ConsistencyError, PreconditionError, ReportError, RhlabError
from rhlab.kernel import Kernel, convolve, convolve_at, op_norm, symbol_at
from rhlab.params import CUTOFF_VERSION, MODES, ScaleGrid
from rhlab.report import emit_report
from rhlab.resolvent import (
    AlgebraElement,
    algebra_norm,
    algebra_product,
    asymptotics_sweep,
    fit_expansion,
    neumann_series,
    neumann_tail_bound,
    resolvent_kernel,
)
from rhlab.table import SweepTable, Table
from rhlab.transform import cached_assemble, supports_disjoint
from rhlab.weaktype import FAMILIES, cz_decompose, growth_rate, mixed_signal, weak_sweep

logger = logging.getLogger(__name__)

CODE_VERSION = f"rhlab-{__version__}+{CUTOFF_VERSION}"
MANIFEST_NAME = "manifest.json"
PARTIAL_SUFFIX = ".partial"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_ERROR = 3

IDENTITY_TOL = 1e-8
NEUMANN_SLACK = 1e-9
STRUCTURAL_RTOL = 1e-12
ALGEBRA_RATIO_MAX = 200.0
WEAK_RATIO_MAX = 3.0
SCALED_RATIO_MAX = 10.0
DIAG_SLOPE_TOL = 0.15
SEPARATED_RATIO = 1 / 8
TREND_INVERSIONS = 1
COMB_ATOL = 1e-12
H2_SLOPE_SLACK = 0.1
WEAK_GROWTH_DOUBLINGS = 4


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, ScaleGrid)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, complex):
        return [_jsonable(value.real), _jsonable(value.imag)]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, Path):
        return str(value)
    return value


def run_id_of(plan: ExperimentPlan) -> str:
    return hashlib.sha256(plan.canonical_bytes() + CODE_VERSION.encode()).hexdigest()


@dataclasses.dataclass
class RunManifest:
    run_id: str
    command: str
    config: dict
    code_version: str
    started: str
    finished: str | None = None
    status: str = "running"
    checks: dict[str, bool] = dataclasses.field(default_factory=dict)
    metrics: dict[str, Any] = dataclasses.field(default_factory=dict)
    artifacts: list[dict] = dataclasses.field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "ok" and all(self.checks.values())

    @property
    def exit_code(self) -> int:
        if self.status != "ok":
            return EXIT_ERROR
        return EXIT_OK if self.passed else EXIT_CHECK_FAILED

    def check(self, name: str, ok: bool):
        self.checks[name] = bool(ok)
        if not ok:
            logger.warning("check %s failed", name)

    def to_dict(self) -> dict:
        return _jsonable(dataclasses.asdict(self))

    def write(self, folder: str | Path) -> Path:
        path = Path(folder) / MANIFEST_NAME
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


class RunOutputs:
    """Output files of one run, written under a .partial name until the run succeeds."""

    def __init__(self, folder: Path):
        self.folder = folder
        self.artifacts: list[dict] = []

    def path(self, name: str, plot: dict | None = None) -> Path:
        artifact = {"path": name}
        if plot:
            artifact["plot"] = plot
        self.artifacts.append(artifact)
        return self.folder / (name + PARTIAL_SUFFIX)

    def table(self, table: Table, name: str, plot: dict | None = None) -> Path:
        return table.to_csv(self.path(name, plot))

    def commit(self):
        for artifact in self.artifacts:
            partial = self.folder / (artifact["path"] + PARTIAL_SUFFIX)
            partial.replace(self.folder / artifact["path"])

    def abandon(self):
        kept = []
        for artifact in self.artifacts:
            if (self.folder / (artifact["path"] + PARTIAL_SUFFIX)).exists():
                kept.append(artifact | {"path": artifact["path"] + PARTIAL_SUFFIX})
        self.artifacts = kept


def _slope(x, y) -> float:
    x, y = np.asarray(x, dtype=float), np.abs(np.asarray(y, dtype=float))
    keep = (x > 0) & (y > 0) & np.isfinite(y)
    if keep.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log2(x[keep]), np.log2(y[keep]), 1)[0])


def _ratio(values) -> float:
    values = [v for v in values if v is not None and math.isfinite(v) and v > 0]
    return max(values) / min(values) if values else math.nan


def run_build_kernel(plan: ExperimentPlan, outputs: RunOutputs, manifest: RunManifest):
    params = plan.params
    assembly = cached_assemble(params, plan.cache)
    H = assembly.H
    table = Table(
        ("name", "lo", "hi", "length", "l1", "l2", "sup", "op_norm", "at_zero", "symbol_0", "symbol_half"),
        name="kernels",
    )
    for name, kernel in zip(("H", "Hminus", "Hplus"), assembly):
        kernel.save(outputs.path(f"{name}.txt"), binary=False)
        table.append(
            {
                "name": name,
                "lo": kernel.lo,
                "hi": kernel.hi,
                "length": len(kernel),
                "l1": kernel.l1(),
                "l2": kernel.l2(),
                "sup": kernel.sup(),
                "op_norm": op_norm(kernel),
                "at_zero": kernel(0),
                "symbol_0": abs(symbol_at(kernel, 0.0)),
                "symbol_half": abs(symbol_at(kernel, 0.5)),
            }
        )
    outputs.table(table, "kernels.csv")

    scale = STRUCTURAL_RTOL * max(H.l1(), 1.0)
    manifest.check("H_at_zero", H(0) == 0)
    manifest.check("H_odd", H.is_odd())
    manifest.check("symbol_zeros", abs(symbol_at(H, 0.0)) <= scale and abs(symbol_at(H, 0.5)) <= scale)
    if params.mode == "gap":
        manifest.check("supports_disjoint", supports_disjoint(assembly.Hminus, assembly.Hplus))
        manifest.check("cross_at_zero", convolve_at(assembly.Hplus, assembly.Hminus, 0) == 0)
    manifest.metrics.update(
        support_radius=H.radius(),
        scales=list(params.scales),
        h2_at_zero=convolve_at(H, H, 0),
        op_norm=table.rows[0]["op_norm"],
    )


def run_check_cz(plan: ExperimentPlan, outputs: RunOutputs, manifest: RunManifest):
    params = plan.params
    if plan.kernel is not None:
        K = Kernel.load(plan.kernel)
    else:
        K = cached_assemble(params, plan.cache).Hminus
    if plan.J is not None:
        J = plan.J
    elif params.mode == "gap" and params.minus_scales:
        J = params.minus_scales.bottom
    else:
        J = params.first_scale
    profile = cz_profile(K, J, params.omega)

    table = Table(("s", "D_iii", "D_iv", "worst_h", "mean", "D_min", "mean_free", "gamma", "passed"), name="cz_blocks")
    supported, mean_free = True, True
    for block in profile.blocks:
        report = block.checked()
        supported &= report.pass_ii
        mean_free &= report.pass_i or not block.mean_free
        table.append(
            report.row()
            | {
                "D_min": report.D_min,
                "mean_free": block.mean_free,
                "gamma": measured_gamma(block.kernel, block.scale, params.omega),
                "passed": report.pass_i and report.pass_ii,
            }
        )
    outputs.table(table, "cz_blocks.csv", plot={"x": "s", "y": ["D_iii", "D_iv"], "loglog": True})

    error = profile.kernel().max_abs_diff(K)
    manifest.check("blocks_supported", supported)
    manifest.check("blocks_mean_free", mean_free)
    manifest.check("reconstruction", error <= STRUCTURAL_RTOL * max(K.l1(), 1.0))
    manifest.metrics.update(
        cz_norm=profile.cz_norm,
        tail_mass=profile.tail_mass,
        blocks=len(profile.blocks),
        gamma_resc=params.gamma_resc,
    )


def run_resolvent(plan: ExperimentPlan, outputs: RunOutputs, manifest: RunManifest):
    params = plan.params
    lam, beta = plan.lam, plan.beta
    H = cached_assemble(params, plan.cache).H
    result = resolvent_kernel(lam, H=H, beta=beta, tol=plan.tol, full_output=True)
    R = result.kernel
    R.save(outputs.path("resolvent.txt"), binary=False)

    identity = (convolve(Kernel.delta(0, lam) + beta * H, R) - Kernel.delta(0, 1.0)).sup()
    expansion = fit_expansion(R, params)
    row = {
        "M": params.M,
        "N": result.N,
        "margin": result.margin,
        "aliasing_error": result.aliasing_error,
        "truncated_mass": result.truncated_mass,
        "identity_error": identity,
        "gram_cond": expansion.fit_gram_cond,
        "cz_norm_residual": expansion.residual_profile.cz_norm,
    }
    for name, value in zip(("lambda_prime", "beta", "gamma"), expansion.coefficients):
        row[f"{name}_re"], row[f"{name}_im"] = complex(value).real, complex(value).imag
    if expansion.point is not None:
        for name in ("lambda_prime", "beta", "gamma"):
            value = complex(getattr(expansion.point, name))
            row[f"point_{name}_re"], row[f"point_{name}_im"] = value.real, value.imag

    norm = abs(beta) * op_norm(H)
    if norm < abs(lam):
        neumann = neumann_series(lam, H, plan.order, beta)
        row["neumann_error"] = (R - neumann).sup()
        row["neumann_bound"] = neumann_tail_bound(lam, norm, plan.order) + NEUMANN_SLACK
        manifest.check("neumann_within_bound", row["neumann_error"] <= row["neumann_bound"])

    outputs.table(SweepTable(row.keys(), [row], name="expansion"), "expansion.csv")
    residual = Table(("s", "D_iii", "D_iv", "worst_h", "mean", "mean_free"), expansion.residual_profile.rows(),
                     name="residual_profile")
    outputs.table(residual, "residual_profile.csv")
    manifest.check("resolvent_identity", identity <= IDENTITY_TOL)
    manifest.metrics.update(identity_error=identity, margin=result.margin, cz_norm_residual=row["cz_norm_residual"])


def _random_element(rng: np.random.Generator, scales: list[int], omega: float) -> AlgebraElement:
    lam, beta, gamma = rng.uniform(-1.0, 1.0, size=3)
    picked = sorted(int(s) for s in rng.choice(scales, size=min(2, len(scales)), replace=False))
    blocks = [CZBlock.measure(rng.uniform(0.1, 1.0) * random_block(rng, s, omega), s, omega) for s in picked]
    return AlgebraElement.build(float(lam), float(beta), float(gamma), blocks)


def run_algebra(plan: ExperimentPlan, outputs: RunOutputs, manifest: RunManifest):
    params = plan.params
    rng = np.random.default_rng(plan.seed)
    J = params.first_scale
    scales = list(ScaleGrid.between(J, 8 * J))
    table = Table(("case", "norm_a", "norm_b", "norm_product", "ratio", "gram_cond", "status"), name="algebra")
    worst, failures = 0.0, 0
    for case in range(plan.cases):
        a = _random_element(rng, scales, params.omega)
        b = _random_element(rng, scales, params.omega)
        row = {"case": case, "norm_a": algebra_norm(a), "norm_b": algebra_norm(b)}
        try:
            product = algebra_product(a, b, params)
        except RhlabError as error:
            failures += 1
            logger.warning("algebra case %d failed: %s", case, error)
            table.append(row | {"status": f"failed: {type(error).__name__}: {error}"})
            continue
        ratio = product.diagnostics["ratio"]
        worst = max(worst, ratio)
        table.append(
            row
            | {
                "norm_product": algebra_norm(product),
                "ratio": ratio,
                "gram_cond": product.diagnostics["gram_cond"],
                "status": "ok",
            }
        )
    outputs.table(table, "algebra.csv")
    manifest.check("all_fits_ok", failures == 0)
    manifest.check("product_bound", worst <= ALGEBRA_RATIO_MAX)
    manifest.metrics.update(worst_ratio=worst, cases=plan.cases)


def _sweep(plan: ExperimentPlan, sync: Callable, concurrent: Callable, *args) -> SweepTable:
    if plan.jobs > 1:
        return asyncio.run(concurrent(*args, jobs=plan.jobs))
    return sync(*args)


def run_sweep_weak(plan: ExperimentPlan, outputs: RunOutputs, manifest: RunManifest):
    family = plan.family
    if family not in FAMILIES:
        raise PreconditionError(f"unknown family {family!r}, expected one of {sorted(set(FAMILIES))}")
    table = _sweep(plan, weak_sweep, rhlab_asyncio.weak_sweep, family, plan.lam, plan.params, plan.M_list)
    plot = {"x": "M", "y": ["weak_l1", "l1"], "loglog": True}
    outputs.table(table, f"weak_{FAMILIES[family]}.csv", plot=plot)

    ok = table.ok_rows()
    manifest.check("all_rows_ok", len(ok) == len(table))
    if FAMILIES[family] == "H":
        manifest.check("weak_l1_bounded", _ratio(r["weak_l1"] for r in ok) <= WEAK_RATIO_MAX)
    if FAMILIES[family] == "Hsquared":
        if len(ok) > WEAK_GROWTH_DOUBLINGS:
            manifest.check("weak_l1_grows", table.longest_rise("weak_l1") >= WEAK_GROWTH_DOUBLINGS)
        else:
            logger.info("weak_l1 growth needs more than %d rows, got %d", WEAK_GROWTH_DOUBLINGS, len(ok))
    manifest.metrics.update(
        growth_rate=growth_rate(table, "weak_l1"),
        weak_l1_ratio=_ratio(r["weak_l1"] for r in ok),
        longest_rise=table.longest_rise("weak_l1"),
    )


def run_cz_decompose(plan: ExperimentPlan, outputs: RunOutputs, manifest: RunManifest):
    params = plan.params
    rng = np.random.default_rng(plan.seed)
    s = plan.s if plan.s is not None else params.first_scale
    lam = plan.level
    table = Table(
        ("case", "cubes", "parent_mass", "parent_bound", "B_mass_ratio", "g_sup", "reconstruction_error", "status"),
        name="cz_decompose",
    )
    worst, failures = 0.0, 0
    for case in range(plan.cases):
        f = mixed_signal(rng, plan.length)
        row = {"case": case, "parent_bound": 2 * f.l1() / lam}
        try:
            dec = cz_decompose(f, lam, s, params)
        except ConsistencyError as error:
            failures += 1
            logger.error("cz decomposition case %d failed: %s", case, error)
            table.append(row | {"status": f"failed: {error}"})
            continue
        if case == 0:
            outputs.path("cz_decomposition.txt").write_text(dec.dump(), encoding="utf-8")
        worst = max(worst, dec.B_mass_ratio)
        table.append(
            row
            | {
                "cubes": len(dec.cubes),
                "parent_mass": dec.parent_mass(),
                "B_mass_ratio": dec.B_mass_ratio,
                "g_sup": dec.g.sup(),
                "reconstruction_error": dec.reconstruct().max_abs_diff(f),
                "status": "ok",
            }
        )
    outputs.table(table, "cz_decompose.csv")
    manifest.check("all_cases_verified", failures == 0)
    manifest.metrics.update(worst_B_mass_ratio=worst, level=lam, s=s)


def _default_pairs(params) -> list[tuple[int, int]]:
    grid = list(ScaleGrid.between(params.first_scale, params.M))
    return [(s, s) for s in grid] + [(s, params.M) for s in grid[:-1]]


def run_rho_k(plan: ExperimentPlan, outputs: RunOutputs, manifest: RunManifest):
    params = plan.params
    pairs = plan.pair_list or _default_pairs(params)
    splits = rho_k_sweep(pairs, params, plan.c_split)
    table = Table(
        ("s1", "s2", "diag", "rho_sup_scaled", "k_sup_scaled", "rho_support_ratio", "rho_holder", "window"),
        name="rho_k",
    )
    for split in splits:
        table.append(split.row() | {"window": split.window})
    outputs.table(table, "rho_k.csv")

    separated = [sp for sp in splits if sp.s1 / sp.s2 <= SEPARATED_RATIO]
    manifest.check("k_vanishes_when_separated", all(sp.k.is_zero for sp in separated))
    diagonal = [sp for sp in splits if sp.s1 == sp.s2]
    slope = _slope([sp.s1 for sp in diagonal], [sp.diag for sp in diagonal])
    if len(diagonal) >= 3:
        manifest.check("diag_slope", abs(slope + 1 / params.alpha) <= DIAG_SLOPE_TOL)
    manifest.metrics.update(
        diag_slope=slope,
        rho_sup_ratio=_ratio(sp.rho_sup_scaled for sp in splits),
        c_split=plan.c_split,
    )


def run_asymptotics(plan: ExperimentPlan, outputs: RunOutputs, manifest: RunManifest):
    table = _sweep(
        plan, asymptotics_sweep, rhlab_asyncio.asymptotics_sweep, plan.lam, plan.beta, plan.M_list, plan.params
    )
    plot = {"x": "M", "y": ["comb1", "comb2", "comb3", "h2_at_zero"], "loglog": True}
    outputs.table(table, "asymptotics.csv", plot=plot)

    params = plan.params
    ok = table.ok_rows()
    manifest.check("all_rows_ok", len(ok) == len(table))
    gammas = [abs(complex(r["gamma_re"], r["gamma_im"])) for r in ok]
    metrics = {"min_abs_gamma": min(gammas) if gammas else math.nan}
    if plan.beta != 0:
        manifest.check("gamma_nonzero", bool(gammas) and min(gammas) > 0)
    if len(ok) >= 2:
        for name in ("comb1", "comb2", "comb3"):
            # a combination that vanishes at every M has nothing left to decrease
            vanished = max(table.trend(name)) <= COMB_ATOL
            manifest.check(f"{name}_decreasing", vanished or table.decreases(name, TREND_INVERSIONS))
            metrics[f"{name}_decreased"] = ok[-1][name] < ok[0][name]
    slope = _slope([r["M"] for r in ok], [r["h2_at_zero"] for r in ok])
    if len(ok) >= 3:
        bound = -(params.alpha - 1 - params.delta) / params.alpha + H2_SLOPE_SLACK
        manifest.check("h2_at_zero_decay", slope <= bound)
    metrics["h2_at_zero_slope"] = slope
    manifest.metrics.update(metrics)


def run_commutator(plan: ExperimentPlan, outputs: RunOutputs, manifest: RunManifest):
    sweep = commutator_sweep(plan.params)
    table = Table(("s", "norm_sq", "scaled", "mean"), name="commutator")
    for c in sweep:
        table.append({"s": c.s, "norm_sq": c.norm_sq, "scaled": c.scaled, "mean": c.mean})
    outputs.table(table, "commutator.csv", plot={"x": "s", "y": ["norm_sq", "scaled"], "loglog": True})

    norms = [c.norm_sq for c in sweep]
    manifest.check("norm_decreasing", all(a > b for a, b in zip(norms, norms[1:])))
    if len(sweep) >= 2:
        manifest.check("scaled_bounded", _ratio(c.scaled for c in sweep) <= SCALED_RATIO_MAX)
    manifest.metrics.update(scaled_ratio=_ratio(c.scaled for c in sweep))


RUNNERS: dict[str, Callable[[ExperimentPlan, RunOutputs, RunManifest], None]] = {
    "build-kernel": run_build_kernel,
    "check-cz": run_check_cz,
    "resolvent": run_resolvent,
    "algebra": run_algebra,
    "sweep-weak": run_sweep_weak,
    "cz-decompose": run_cz_decompose,
    "rho-k": run_rho_k,
    "asymptotics": run_asymptotics,
    "commutator": run_commutator,
}


def run_folder(plan: ExperimentPlan, run_id: str) -> Path:
    return Path(plan.out) / f"{plan.command}-{run_id[:12]}"


def run_experiment(plan: ExperimentPlan) -> RunManifest:
    """Run one subcommand, write its outputs and manifest, and return the manifest."""
    if plan.command not in RUNNERS:
        raise PreconditionError(f"plan has no runnable command (got {plan.command!r})")
    run_id = run_id_of(plan)
    folder = run_folder(plan, run_id)
    folder.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(run_id, plan.command, plan.record(), CODE_VERSION, _now())
    outputs = RunOutputs(folder)
    logger.info("run %s: %s with %s", run_id[:12], plan.command, plan.params)

    try:
        RUNNERS[plan.command](plan, outputs, manifest)
    except Exception as error:
        if isinstance(error, RhlabError):
            logger.error("%s failed: %s", plan.command, error)
        else:
            logger.exception("%s stopped on an unexpected error", plan.command)
        manifest.status = f"failed: {type(error).__name__}: {error}"
        outputs.abandon()
    else:
        outputs.commit()
        manifest.status = "ok"

    manifest.artifacts = outputs.artifacts
    manifest.finished = _now()
    path = manifest.write(folder)
    logger.info("run %s %s, manifest %s", run_id[:12], "passed" if manifest.passed else "did not pass", path)
    return manifest


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", type=Path, default=None, help="key = value configuration file")
    parser.add_argument("--M", type=parse_int, default=None, help="truncation parameter, e.g. 4096 or 2^12")
    parser.add_argument("--alpha", type=float, default=None)
    parser.add_argument("--delta", type=float, default=None)
    parser.add_argument("--mode", choices=MODES, default=None)
    parser.add_argument("--lambda", dest="lam", type=parse_complex, default=None, help="re or re,im")
    parser.add_argument("--beta", type=parse_complex, default=None)
    parser.add_argument("--family", choices=sorted(FAMILIES), default=None)
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument("--jobs", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--cases", type=int, default=None)
    parser.add_argument("--kernel", type=Path, default=None, help="kernel file for check-cz")
    parser.add_argument("--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rhlab", description="Discrete rough Hilbert transform experiments.")
    commands = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        _add_common(commands.add_parser(command))
    report = commands.add_parser("report", help="summary text and SVG charts from run manifests")
    report.add_argument("manifests", nargs="*", type=Path)
    report.add_argument("--out", type=Path, default=None)
    report.add_argument("--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)

    if args.command == "report":
        try:
            bundle = emit_report(args.manifests, args.out or DEFAULTS["out"])
        except ReportError as error:
            logger.error("%s", error)
            return EXIT_ERROR
        logger.info("report written to %s", bundle.text)
        return EXIT_OK

    overrides = {
        "command": args.command,
        "M": args.M,
        "alpha": args.alpha,
        "delta": args.delta,
        "mode": args.mode,
        "lambda": args.lam,
        "beta": args.beta,
        "family": args.family,
        "out": args.out,
        "jobs": args.jobs,
        "seed": args.seed,
        "cases": args.cases,
        "kernel": args.kernel,
    }
    try:
        plan = parse_config(args.config, overrides)
    except RhlabError as error:
        logger.error("%s", error)
        return EXIT_USAGE
    except OSError as error:
        logger.error("cannot read configuration: %s", error)
        return EXIT_USAGE
    return run_experiment(plan).exit_code


if __name__ == "__main__":
    sys.exit(main())
