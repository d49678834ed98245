"""Sweeps over perturbation strength: tracked shifts, rate fits, verdicts.

A sweep evaluates one model at a geometric schedule of eps values.  Each row
records the tracked perturbed eigenvalue, the first-order prediction from the
corrector, and the remainder diagnostics.  ``fit_rate`` regresses log-log
convergence slopes and ``verify_expansion`` turns a table into a pass/fail
verdict: a remainder bound with a constant calibrated on the coarse rows plus
one model-specific law (leading coefficient, superlinear decay, or the
capacity law).
"""
from __future__ import annotations

import concurrent.futures
import csv
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .core import EigenSolution, restrict_to_subspace, solve_generalized_eigenpairs
from .errors import (
    DegeneracyError,
    InsufficientDataError,
    MassDefectError,
    SolverError,
    SweepError,
    TrackingError,
    UndefinedRatioError,
    ValidationError,
)
from .models import (
    EXTRA_MODES,
    ModelProblem,
    ModelSpec,
    leading_coefficient,
    prepare,
    weighted_capacity,
)
from .perturbation import (
    eigenfunction_diagnostics,
    first_order_shift,
    smallness_ratio,
    solve_corrector,
)

CSV_COLUMNS = (
    "eps",
    "lambda_eps",
    "lambda0",
    "shift",
    "predicted_shift",
    "corrector_energy",
    "corrector_mass_norm",
    "smallness_ratio",
    "eigenfunction_ratio",
    "capacity",
)

TRACKING_OVERLAP = 0.5
MAX_FAILURE_FRACTION = 0.2
NOISE_FLOOR_FACTOR = 1e2


def thread_budget(task_count: int) -> int:
    """Worker count for sweep parallelism, capped by SPECTRAL_SHIFT_THREADS."""
    cap = os.cpu_count() or 1
    raw = os.environ.get("SPECTRAL_SHIFT_THREADS", "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ValidationError(
                f"SPECTRAL_SHIFT_THREADS must be an integer, got {raw!r}"
            )
        if cap < 1:
            raise ValidationError("SPECTRAL_SHIFT_THREADS must be positive")
    return max(1, min(cap, task_count))


def geometric_schedule(start: float, ratio: float, count: int) -> np.ndarray:
    """Decreasing eps schedule start * ratio^k, k = 0..count-1."""
    if start <= 0 or count < 1:
        raise ValidationError("schedule needs start > 0 and count >= 1")
    if not 0 < ratio < 1:
        raise ValidationError("schedule ratio must lie in (0, 1)")
    return start * ratio ** np.arange(count)


@dataclass(frozen=True)
class SweepRow:
    """One evaluated perturbation strength."""

    eps: float
    lambda_eps: float
    lambda0: float
    shift: float
    predicted_shift: float
    corrector_energy: float
    corrector_mass_norm: float
    smallness_ratio: float
    eigenfunction_ratio: float
    capacity: float | None = None
    remainder_scale: float = 0.0
    l2_over_energy: float = 0.0

    @property
    def remainder(self) -> float:
        return self.shift - self.predicted_shift


@dataclass(frozen=True)
class SweepTable:
    """Rows of a sweep in decreasing-eps order, plus failure bookkeeping."""

    spec: ModelSpec
    lambda0: float
    rows: tuple[SweepRow, ...]
    failures: tuple[tuple[float, str], ...] = ()

    def column(self, name: str) -> np.ndarray:
        return np.array(
            [math.nan if (v := getattr(r, name)) is None else v for r in self.rows]
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.rows:
            writer.writerow(
                [
                    repr(getattr(r, c)) if getattr(r, c) is not None else ""
                    for c in CSV_COLUMNS
                ]
            )
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())


def track_eigenvalue(
    problem: ModelProblem,
    solution: EigenSolution,
    mass_weights: np.ndarray,
    free: np.ndarray,
) -> int:
    """Index of the perturbed eigenpair continuing the base one.

    Candidates need mass-inner-product overlap with phi0 of at least
    ``TRACKING_OVERLAP`` (both sides normalized in the perturbed mass,
    whose restricted weights are ``mass_weights``); among candidates the
    eigenvalue closest to lambda0 wins.
    """
    vecs = solution.eigenvectors  # restricted coordinates, perturbed-mass normalized
    phi0_r = problem.phi0[free]
    norm0 = math.sqrt(float(np.dot(phi0_r, mass_weights * phi0_r)))
    if norm0 == 0.0:
        raise TrackingError("base eigenfunction vanishes on the free indices")
    overlaps = np.abs(vecs.T @ (mass_weights * phi0_r)) / norm0
    candidates = np.flatnonzero(overlaps >= TRACKING_OVERLAP)
    if len(candidates) == 0:
        raise TrackingError(
            f"no perturbed eigenpair overlaps phi0 above {TRACKING_OVERLAP}"
            f" (best {overlaps.max():.3f})"
        )
    return int(candidates[np.argmin(np.abs(solution.eigenvalues[candidates] - problem.lambda0))])


def evaluate_row(problem: ModelProblem, eps: float) -> SweepRow:
    """Full pipeline for one eps: instance, corrector, tracking, diagnostics."""
    instance = problem.instance(eps)
    corrector = solve_corrector(instance)
    report = first_order_shift(instance, corrector)
    restricted = restrict_to_subspace(instance.perturbed, instance.subspace)
    k = min(problem.spec.mode_index + EXTRA_MODES, restricted.dim)
    solution = solve_generalized_eigenpairs(restricted, k)
    free = instance.free_indices()
    idx = track_eigenvalue(problem, solution, restricted.space.mass_weights, free)
    lam_eps = float(solution.eigenvalues[idx])
    diag = eigenfunction_diagnostics(instance, corrector, solution, idx)
    try:
        small = smallness_ratio(corrector)
    except UndefinedRatioError:
        small = 0.0
    capacity = None
    if problem.spec.kind == "dirichlet_hole":
        capacity = weighted_capacity(instance, corrector)
    return SweepRow(
        eps=eps,
        lambda_eps=lam_eps,
        lambda0=problem.lambda0,
        shift=lam_eps - problem.lambda0,
        predicted_shift=report.predicted_shift,
        corrector_energy=corrector.energy,
        corrector_mass_norm=corrector.mass_norm,
        smallness_ratio=small,
        eigenfunction_ratio=diag.energy_ratio,
        capacity=capacity,
        remainder_scale=report.remainder_scale,
        l2_over_energy=diag.l2_over_energy,
    )


_ROW_ERRORS = (
    TrackingError,
    DegeneracyError,
    SolverError,
    MassDefectError,
    ValidationError,
)


def run_sweep(spec: ModelSpec, eps_values) -> SweepTable:
    """Evaluate every eps; tolerate isolated failures, merged in schedule order."""
    eps_values = [float(e) for e in eps_values]
    if not eps_values:
        raise ValidationError("empty eps schedule")
    problem = prepare(spec)  # shared base solve before fanning out
    workers = thread_budget(len(eps_values))

    def worker(eps):
        return evaluate_row(problem, eps)

    results: list[SweepRow | None] = [None] * len(eps_values)
    failures: list[tuple[float, str]] = []
    if workers == 1:
        outcomes = []
        for eps in eps_values:
            try:
                outcomes.append(worker(eps))
            except _ROW_ERRORS as exc:
                outcomes.append(exc)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(worker, eps) for eps in eps_values]
            outcomes = []
            for fut in futures:
                try:
                    outcomes.append(fut.result())
                except _ROW_ERRORS as exc:
                    outcomes.append(exc)
    for pos, (eps, out) in enumerate(zip(eps_values, outcomes)):
        if isinstance(out, Exception):
            failures.append((eps, f"{type(out).__name__}: {out}"))
        else:
            results[pos] = out
    rows = tuple(r for r in results if r is not None)
    if len(failures) > MAX_FAILURE_FRACTION * len(eps_values):
        detail = "; ".join(f"eps={e:g}: {msg}" for e, msg in failures[:4])
        raise SweepError(
            f"{len(failures)}/{len(eps_values)} sweep rows failed ({detail})"
        )
    return SweepTable(spec, problem.lambda0, rows, tuple(failures))


@dataclass(frozen=True)
class RateFit:
    """Least-squares slope of log|y| against log(eps)."""

    slope: float
    intercept: float
    used: int
    excluded: int

    def predict(self, eps: np.ndarray) -> np.ndarray:
        return np.exp(self.intercept) * np.asarray(eps) ** self.slope


def fit_rate(
    eps: np.ndarray, values: np.ndarray, residual_tol: float = 1e-8
) -> RateFit:
    """OLS rate fit with a noise floor at NOISE_FLOOR_FACTOR * residual_tol."""
    eps = np.asarray(eps, dtype=float)
    values = np.asarray(values, dtype=float)
    if eps.shape != values.shape:
        raise ValidationError("eps and values must have matching shapes")
    floor = NOISE_FLOOR_FACTOR * residual_tol
    mask = (eps > 0) & np.isfinite(values) & (np.abs(values) >= floor)
    if mask.sum() < 3:
        raise InsufficientDataError(
            f"rate fit needs at least 3 usable points, got {int(mask.sum())}"
        )
    slope, intercept = np.polyfit(np.log(eps[mask]), np.log(np.abs(values[mask])), 1)
    return RateFit(float(slope), float(intercept), int(mask.sum()), int((~mask).sum()))


@dataclass(frozen=True)
class ExpansionVerdict:
    """Outcome of verify_expansion: named checks with measured values."""

    spec: ModelSpec
    checks: tuple[dict, ...]
    passed: bool

    def as_dict(self) -> dict:
        return {
            "model": {
                "kind": self.spec.kind,
                "grid": self.spec.grid,
                "dimension": self.spec.dimension,
                "mode_index": self.spec.mode_index,
            },
            "checks": list(self.checks),
            "passed": self.passed,
        }


def _check(name, expected, measured, tolerance, ok) -> dict:
    return {
        "check": name,
        "expected": expected,
        "measured": measured,
        "tolerance": tolerance,
        "pass": bool(ok),
    }


REMAINDER_STABILITY = 2.0


def _remainder_check(table: SweepTable) -> dict:
    """Calibrate |shift - predicted| <= C ||V||^2 on the two coarsest rows,
    then demand the remaining rows stay within a factor-of-two allowance."""
    rows = table.rows
    if len(rows) < 3:
        raise InsufficientDataError("remainder check needs at least 3 rows")
    coarse, rest = rows[:2], rows[2:]
    ratios_c = [
        abs(r.remainder) / r.remainder_scale for r in coarse if r.remainder_scale > 0
    ]
    if not ratios_c:
        # zero corrector everywhere: the prediction must already be exact
        worst = max(abs(r.remainder) for r in rows)
        return _check("remainder_bound", 0.0, worst, 1e-10, worst <= 1e-10)
    c = max(ratios_c)
    ratios_r = [
        abs(r.remainder) / r.remainder_scale for r in rest if r.remainder_scale > 0
    ]
    worst = max(ratios_r) if ratios_r else 0.0
    allowance = REMAINDER_STABILITY * c
    return _check(
        "remainder_bound",
        f"|shift - predicted| <= {REMAINDER_STABILITY:g} * C * ||V||^2 with "
        f"C = {c:.6g} from the two coarsest rows",
        worst,
        allowance,
        worst <= allowance or math.isclose(worst, allowance, rel_tol=1e-12),
    )


def verify_expansion(table: SweepTable, tolerance: float = 0.05) -> ExpansionVerdict:
    """Remainder-bound check plus the model family's first-order law."""
    spec = table.spec
    checks = [_remainder_check(table)]
    finest = table.rows[-1]
    if spec.kind in ("robin", "pseudo"):
        coeff = leading_coefficient(spec)
        measured = finest.shift / finest.eps
        ok = abs(measured - coeff) <= tolerance * abs(coeff)
        checks.append(_check("leading_coefficient", coeff, measured, tolerance, ok))
    elif spec.kind == "conformal" and spec.dimension == 2:
        fit = fit_rate(table.column("eps"), table.column("shift"))
        checks.append(
            _check("superlinear_decay_slope", ">= 1.5", fit.slope, 1.5, fit.slope >= 1.5)
        )
    elif spec.kind == "conformal":
        rel = abs(finest.remainder) / max(abs(finest.shift), 1e-300)
        checks.append(
            _check("first_order_agreement", 0.0, rel, tolerance, rel <= tolerance)
        )
    elif spec.kind == "dirichlet_hole":
        ratios = [
            r.shift / r.capacity for r in table.rows if r.capacity and r.capacity > 0
        ]
        if not ratios:
            raise InsufficientDataError("no rows with positive capacity")
        measured = ratios[-1]
        ok = 0.9 <= measured <= 1.1
        checks.append(
            _check("capacity_law_ratio", "in [0.9, 1.1]", measured, 0.1, ok)
        )
    return ExpansionVerdict(spec, tuple(checks), all(c["pass"] for c in checks))
