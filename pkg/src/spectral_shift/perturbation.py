"""Defect functionals, variational correctors, and first-order shift predictions.

The central objects: a base eigenpair (lambda0, phi0), a perturbed form with
an admissible subspace Z, and the defect vector l with

    u^T A phi0 = lambda0 u^T M phi0 + u^T l       for every u in Z.

The corrector V minimizes J(u) = E(u)/2 - L(u) over the affine set Z + phi0
and drives the predicted eigenvalue shift lambda0 <phi0, V> / <phi0, phi0>.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .core import (
    DENSE_EIG_LIMIT,
    EigenSolution,
    FormSystem,
    SubspaceSpec,
)
from .errors import (
    DegeneracyError,
    MassDefectError,
    SolverError,
    TrackingError,
    UndefinedRatioError,
    ValidationError,
)

DEFAULT_GAP_THRESHOLD = 1e-6
DEFECT_IDENTITY_TOL = 1e-10


@dataclass(frozen=True)
class PerturbationInstance:
    """Base eigenpair, perturbed form, admissible subspace, and defect vector.

    ``base_eigenfunction`` is expressed in perturbed-space coordinates (the
    restriction map has already been applied by the builder) but is
    mass-normalized in the *base* space.
    """

    base_eigenvalue: float
    base_eigenfunction: np.ndarray
    perturbed: FormSystem
    subspace: SubspaceSpec
    defect: np.ndarray
    restriction_map: np.ndarray | None = None
    tag: str = ""

    def __post_init__(self):
        phi = np.asarray(self.base_eigenfunction, dtype=float)
        ell = np.asarray(self.defect, dtype=float)
        object.__setattr__(self, "base_eigenfunction", phi)
        object.__setattr__(self, "defect", ell)
        n = self.perturbed.dim
        if phi.shape != (n,) or ell.shape != (n,):
            raise ValidationError("eigenfunction/defect length must match the form")
        if self.base_eigenvalue <= 0:
            raise ValidationError("base eigenvalue must be positive")
        self.subspace.validate(n)

    def free_indices(self) -> np.ndarray:
        return self.subspace.free_indices(self.perturbed.dim)

    def defect_identity_residual(self) -> float:
        """Max relative violation of the defect identity over the Z basis."""
        free = self.free_indices()
        lhs = self.perturbed.apply(self.base_eigenfunction)
        rhs = (
            self.base_eigenvalue
            * self.perturbed.space.mass_weights
            * self.base_eigenfunction
            + self.defect
        )
        scale = max(np.max(np.abs(lhs[free])), np.max(np.abs(rhs[free])), 1.0)
        return float(np.max(np.abs(lhs[free] - rhs[free])) / scale)

    def phi0_in_subspace(self, tol: float = 0.0) -> bool:
        if self.subspace.is_full:
            return True
        idx = list(self.subspace.constrained)
        return bool(np.max(np.abs(self.base_eigenfunction[idx])) <= tol)


@dataclass(frozen=True)
class CorrectorResult:
    """Corrector vector with its energy, mass norm, and torsion value."""

    V: np.ndarray
    energy: float
    mass_norm: float
    torsion: float
    duality_residual: float


@dataclass(frozen=True)
class ShiftReport:
    """First-order eigenvalue-shift prediction and its bookkeeping terms."""

    predicted_shift: float   # quotient form lambda0 <phi0,V> / <phi0,phi0>
    simple_shift: float      # un-normalized lambda0 <phi0,V>
    mass_defect: float       # 1 - <phi0,phi0> in the perturbed space
    remainder_scale: float   # ||V||^2 in the perturbed mass norm


@dataclass(frozen=True)
class EigenfunctionDiagnostics:
    """Remainder quantities comparing phi0, the corrector, and phi_eps."""

    energy_projected_residual: float   # E(phi0 - V - P(phi0 - V))
    mass_projected_residual: float     # ||phi0 - P(phi0 - V)||
    energy_difference: float           # E(phi0 - phi_eps)
    energy_ratio: float                # E(phi0 - phi_eps) / E(V)
    l2_over_energy: float              # ||phi0 - phi_eps||^2 / E(V)


def defect_functional(
    base: EigenSolution,
    index: int,
    perturbed: FormSystem,
    subspace: SubspaceSpec,
    base_eigenfunction: np.ndarray | None = None,
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
) -> np.ndarray:
    """Generic defect l = A phi0 - lambda0 M phi0, projected onto Z.

    ``base_eigenfunction`` overrides the eigenvector column when the base
    eigenpair lives in different coordinates (restriction already applied).
    """
    if base.relative_gap(index) < gap_threshold:
        raise DegeneracyError(
            f"eigenvalue {index} relative gap below {gap_threshold:.1e}"
        )
    lam0, phi0 = base.pair(index)
    if base_eigenfunction is not None:
        phi0 = np.asarray(base_eigenfunction, dtype=float)
    ell = perturbed.apply(phi0) - lam0 * perturbed.space.mass_weights * phi0
    if not subspace.is_full:
        ell = ell.copy()
        ell[list(subspace.constrained)] = 0.0
    return ell


class _SubspaceSolver:
    """Factorized solve of the stiffness restricted to the free indices."""

    def __init__(self, form: FormSystem, free: np.ndarray):
        self.free = free
        a = form.stiffness[free][:, free]
        try:
            if len(free) <= DENSE_EIG_LIMIT:
                self._cho = scipy.linalg.cho_factor(a.toarray())
                self._lu = None
            else:
                self._cho = None
                self._lu = scipy.sparse.linalg.splu(a.tocsc())
        except (scipy.linalg.LinAlgError, RuntimeError, ValueError) as exc:
            raise SolverError(f"restricted stiffness factorization failed: {exc}")

    def solve(self, rhs_free: np.ndarray) -> np.ndarray:
        if self._cho is not None:
            return scipy.linalg.cho_solve(self._cho, rhs_free)
        return self._lu.solve(rhs_free)


def solve_corrector(instance: PerturbationInstance) -> CorrectorResult:
    """Minimize J over Z + phi0: solve (B^T A B) y = B^T(l - A phi0)."""
    phi0 = instance.base_eigenfunction
    form = instance.perturbed
    free = instance.free_indices()
    solver = _SubspaceSolver(form, free)
    rhs = (instance.defect - form.apply(phi0))[free]
    y = solver.solve(rhs)
    v = phi0.copy()
    v[free] = phi0[free] + y
    mass_norm = form.space.norm(v)
    if mass_norm <= 1e-12 * form.space.norm(phi0):
        # pure roundoff: snap to the exact-corrector convention V = 0
        return CorrectorResult(np.zeros_like(v), 0.0, 0.0, 0.0, 0.0)
    energy = form.energy(v)
    torsion = 0.5 * energy - float(np.dot(instance.defect, v))
    duality = _duality_value(instance, solver)
    residual = abs(torsion - duality) / (1.0 + abs(torsion))
    return CorrectorResult(v, energy, mass_norm, torsion, residual)


def _duality_value(instance: PerturbationInstance, solver: _SubspaceSolver) -> float:
    """Torsion value through the dual sup formula (one restricted solve)."""
    phi0 = instance.base_eigenfunction
    form = instance.perturbed
    ell = instance.defect
    free = solver.free
    if instance.phi0_in_subspace():
        r = ell[free]
        return -0.5 * float(np.dot(r, solver.solve(r)))
    r = (form.apply(phi0) - ell)[free]
    sup = float(np.dot(r, solver.solve(r)))
    return -0.5 * sup + 0.5 * form.energy(phi0) - float(np.dot(ell, phi0))


def torsion_duality_check(
    instance: PerturbationInstance, corrector: CorrectorResult
) -> float:
    """Relative discrepancy between J(V) and its dual representation."""
    solver = _SubspaceSolver(instance.perturbed, instance.free_indices())
    dual = _duality_value(instance, solver)
    return abs(corrector.torsion - dual) / (1.0 + abs(corrector.torsion))


def first_order_shift(
    instance: PerturbationInstance, corrector: CorrectorResult
) -> ShiftReport:
    """Predicted shift lambda0 <phi0, V> / <phi0, phi0> in the perturbed space."""
    w = instance.perturbed.space.mass_weights
    phi0 = instance.base_eigenfunction
    denom = float(np.dot(phi0, w * phi0))
    if denom <= 0.5:
        raise MassDefectError(
            f"perturbed mass of phi0 is {denom:.3f} <= 0.5; expansion regime violated"
        )
    simple = instance.base_eigenvalue * float(np.dot(phi0, w * corrector.V))
    return ShiftReport(
        predicted_shift=simple / denom,
        simple_shift=simple,
        mass_defect=1.0 - denom,
        remainder_scale=corrector.mass_norm**2,
    )


def eigenfunction_diagnostics(
    instance: PerturbationInstance,
    corrector: CorrectorResult,
    perturbed_solution: EigenSolution,
    index: int,
) -> EigenfunctionDiagnostics:
    """Remainder diagnostics against the tracked perturbed eigenfunction.

    ``perturbed_solution`` is the eigensolution of the subspace-restricted
    problem; its vectors are extended by zero onto the constrained indices.
    """
    form = instance.perturbed
    w = form.space.mass_weights
    phi0 = instance.base_eigenfunction
    free = instance.free_indices()
    phi_eps = np.zeros(form.dim)
    phi_eps[free] = perturbed_solution.eigenvectors[:, index]
    overlap = float(np.dot(phi0, w * phi_eps))
    if overlap == 0.0:
        raise TrackingError("base and perturbed eigenfunctions are orthogonal")
    if overlap < 0.0:
        phi_eps = -phi_eps

    if corrector.mass_norm == 0.0:
        # Trivial branch: zero corrector means the eigenpair is exact.
        return EigenfunctionDiagnostics(0.0, 0.0, 0.0, 1.0, 0.0)

    target = phi0 - corrector.V
    proj = float(np.dot(target, w * phi_eps)) * phi_eps
    diff_energy = target - proj
    diff_pair = phi0 - phi_eps
    ev = corrector.energy
    return EigenfunctionDiagnostics(
        energy_projected_residual=form.energy(diff_energy),
        mass_projected_residual=form.space.norm(phi0 - proj),
        energy_difference=form.energy(diff_pair),
        energy_ratio=form.energy(diff_pair) / ev,
        l2_over_energy=form.space.norm(diff_pair) ** 2 / ev,
    )


def smallness_ratio(corrector: CorrectorResult) -> float:
    """||V||^2 / E(V); bounded by 1/lambda_1 via the Poincare inequality."""
    if corrector.energy <= 0.0:
        raise UndefinedRatioError("zero-energy corrector: shift is exact")
    return corrector.mass_norm**2 / corrector.energy
