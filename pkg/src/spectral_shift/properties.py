"""Randomized invariant checks on small dense systems.

Each property draws a random positive form system (dimension 4-40, seeded
generator) and asserts one structural guarantee of the solver stack: Poincare
smallness, eigenpair residuals, min-max monotonicity under constraints,
torsion duality, corrector optimality/uniqueness, and the two spectral
distance bounds.  The suite backs both the test suite and the CLI ``check``
subcommand.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse

from .core import (
    DiscreteSpace,
    FormSystem,
    SubspaceSpec,
    resolvent_gap_eigenvalue_bound,
    restrict_to_subspace,
    solve_generalized_eigenpairs,
    spectral_distance_bound,
)
from .perturbation import (
    PerturbationInstance,
    smallness_ratio,
    solve_corrector,
    torsion_duality_check,
)

DIM_RANGE = (4, 40)
DUALITY_TOL = 1e-8
UNIQUENESS_TOL = 1e-10


def random_form(rng: np.random.Generator, dim: int | None = None) -> FormSystem:
    """Random positive-definite form with a random lumped mass."""
    if dim is None:
        dim = int(rng.integers(DIM_RANGE[0], DIM_RANGE[1] + 1))
    b = rng.standard_normal((dim, dim))
    a = b @ b.T + 0.1 * np.eye(dim)
    mass = rng.uniform(0.5, 2.0, dim)
    space = DiscreteSpace(dim, mass)
    return FormSystem(space, scipy.sparse.csr_matrix(a))


def random_subspace(rng: np.random.Generator, dim: int) -> SubspaceSpec:
    """Random proper subspace constraining up to a third of the indices."""
    count = int(rng.integers(1, max(2, dim // 3)))
    idx = rng.choice(dim, size=count, replace=False)
    return SubspaceSpec.zero_on(idx)


def random_instance(rng: np.random.Generator) -> PerturbationInstance:
    """Random base eigenpair plus a small random diagonal perturbation."""
    form = random_form(rng)
    dim = form.dim
    sol = solve_generalized_eigenpairs(form, min(4, dim))
    index = int(rng.integers(0, min(2, dim)))
    lam0, phi0 = sol.pair(index)
    eps = float(rng.uniform(1e-3, 1e-1))
    a_eps = form.stiffness + eps * scipy.sparse.diags(rng.uniform(0.0, 1.0, dim))
    perturbed = FormSystem(form.space, a_eps)
    if rng.random() < 0.5:
        subspace = SubspaceSpec.full()
    else:
        subspace = random_subspace(rng, dim)
    defect = perturbed.apply(phi0) - lam0 * form.space.mass_weights * phi0
    if not subspace.is_full:
        defect = defect.copy()
        defect[list(subspace.constrained)] = 0.0
    return PerturbationInstance(lam0, phi0, perturbed, subspace, defect)


# ---------------------------------------------------------------------------
# individual properties (raise AssertionError on violation)

def prop_poincare_smallness(rng: np.random.Generator) -> None:
    """||V||^2 / E(V) never exceeds 1/lambda_1 of the perturbed problem.

    V lives in the affine set Z + phi0, so the bound uses the unrestricted
    ground eigenvalue (the restricted one is larger by min-max).
    """
    inst = random_instance(rng)
    corrector = solve_corrector(inst)
    if corrector.energy <= 0.0:
        return
    lam1 = solve_generalized_eigenpairs(inst.perturbed, 1).eigenvalues[0]
    ratio = smallness_ratio(corrector)
    assert ratio <= (1.0 + 1e-9) / lam1, f"ratio {ratio} > 1/lambda_1 {1/lam1}"


def prop_eigen_residuals(rng: np.random.Generator) -> None:
    """Returned eigenpairs satisfy A v = lambda M v to the residual tolerance."""
    form = random_form(rng)
    k = min(5, form.dim)
    sol = solve_generalized_eigenpairs(form, k)
    a = form.dense()
    m = form.space.mass_weights
    for i in range(k):
        lam, v = sol.pair(i)
        res = np.linalg.norm(a @ v - lam * m * v)
        scale = max(np.linalg.norm(a @ v), abs(lam) * np.linalg.norm(m * v), 1.0)
        assert res <= sol.residual_tol * scale, f"pair {i}: residual {res/scale}"


def prop_constraint_monotonicity(rng: np.random.Generator) -> None:
    """Adding zero constraints never lowers an eigenvalue (min-max)."""
    form = random_form(rng)
    sub = random_subspace(rng, form.dim)
    k = min(3, form.dim - len(sub.constrained))
    free_sol = solve_generalized_eigenpairs(form, k)
    con_sol = solve_generalized_eigenpairs(restrict_to_subspace(form, sub), k)
    slack = 1e-8 * max(1.0, float(np.max(np.abs(con_sol.eigenvalues))))
    for i in range(k):
        assert con_sol.eigenvalues[i] >= free_sol.eigenvalues[i] - slack, (
            f"mode {i}: {con_sol.eigenvalues[i]} < {free_sol.eigenvalues[i]}"
        )


def prop_torsion_duality(rng: np.random.Generator) -> None:
    """J(V) matches its dual representation to DUALITY_TOL."""
    inst = random_instance(rng)
    corrector = solve_corrector(inst)
    res = torsion_duality_check(inst, corrector)
    assert res <= DUALITY_TOL, f"duality residual {res}"
    assert corrector.duality_residual <= DUALITY_TOL


def prop_corrector_optimality(rng: np.random.Generator) -> None:
    """J(V) <= J(V + t w) for random admissible directions w."""
    inst = random_instance(rng)
    corrector = solve_corrector(inst)
    form = inst.perturbed

    def j(u):
        return 0.5 * form.energy(u) - float(np.dot(inst.defect, u))

    jv = j(corrector.V)
    free = inst.free_indices()
    for _ in range(3):
        w = np.zeros(form.dim)
        w[free] = rng.standard_normal(len(free))
        t = float(rng.uniform(-1.0, 1.0))
        assert jv <= j(corrector.V + t * w) + 1e-9 * (1.0 + abs(jv))


def prop_corrector_uniqueness(rng: np.random.Generator) -> None:
    """The factorized solve agrees with an independent dense solve."""
    inst = random_instance(rng)
    corrector = solve_corrector(inst)
    free = inst.free_indices()
    a = inst.perturbed.dense()[np.ix_(free, free)]
    phi0 = inst.base_eigenfunction
    rhs = (inst.defect - inst.perturbed.apply(phi0))[free]
    y = np.linalg.solve(a, rhs)
    ref = phi0.copy()
    ref[free] = phi0[free] + y
    gap = np.max(np.abs(ref - corrector.V)) / max(1.0, np.max(np.abs(ref)))
    assert gap <= UNIQUENESS_TOL, f"corrector mismatch {gap}"


def prop_distance_bound(rng: np.random.Generator) -> None:
    """spectral_distance_bound dominates the true distance to the spectrum."""
    form = random_form(rng)
    w = rng.standard_normal(form.dim)
    mu = float(rng.uniform(0.0, 2.0))
    bound = spectral_distance_bound(form, w, mu)
    lams = scipy.linalg.eigh(
        form.dense(), np.diag(form.space.mass_weights), eigvals_only=True
    )
    dist = float(np.min(np.abs(mu - 1.0 / lams)))
    assert bound >= dist - 1e-9 * (1.0 + dist), f"bound {bound} < distance {dist}"


def prop_resolvent_gap(rng: np.random.Generator) -> None:
    """Per-mode resolvent eigenvalue gaps stay below the operator-norm bound."""
    form1 = random_form(rng)
    eps = float(rng.uniform(1e-3, 1e-1))
    a2 = form1.stiffness + eps * scipy.sparse.diags(
        rng.uniform(0.0, 1.0, form1.dim)
    )
    form2 = FormSystem(form1.space, a2)
    report = resolvent_gap_eigenvalue_bound(form1, form2)
    assert report.passed, (
        f"gap {np.max(report.gaps)} exceeds bound {report.norm_bound}"
    )
    m = np.diag(form1.space.mass_weights)
    l1 = scipy.linalg.eigh(form1.dense(), m, eigvals_only=True)
    l2 = scipy.linalg.eigh(form2.dense(), m, eigvals_only=True)
    gaps = np.abs(np.sort(1.0 / l1) - np.sort(1.0 / l2))
    slack = report.relative_slack * (1.0 + report.norm_bound)
    assert np.max(gaps) <= report.norm_bound + slack, (
        f"gap {np.max(gaps)} exceeds bound {report.norm_bound}"
    )


PROPERTIES = {
    "poincare_smallness": prop_poincare_smallness,
    "eigen_residuals": prop_eigen_residuals,
    "constraint_monotonicity": prop_constraint_monotonicity,
    "torsion_duality": prop_torsion_duality,
    "corrector_optimality": prop_corrector_optimality,
    "corrector_uniqueness": prop_corrector_uniqueness,
    "distance_bound": prop_distance_bound,
    "resolvent_gap": prop_resolvent_gap,
}


@dataclass(frozen=True)
class PropertyOutcome:
    name: str
    instances: int
    failures: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failures


def run_property_suite(
    seed: int = 20240817, instances_per_property: int = 15
) -> list[PropertyOutcome]:
    """Run every property on fresh seeded draws; collect failures."""
    outcomes = []
    for name, prop in PROPERTIES.items():
        rng = np.random.default_rng([seed, zlib.crc32(name.encode())])
        failures = []
        for i in range(instances_per_property):
            try:
                prop(rng)
            except AssertionError as exc:
                failures.append(f"instance {i}: {exc}")
        outcomes.append(PropertyOutcome(name, instances_per_property, tuple(failures)))
    return outcomes
