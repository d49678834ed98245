import numpy as np
import pytest
import scipy.sparse

from spectral_shift.core import (
    DiscreteSpace,
    FormSystem,
    SubspaceSpec,
    solve_generalized_eigenpairs,
)
from spectral_shift.errors import (
    DegeneracyError,
    MassDefectError,
    UndefinedRatioError,
    ValidationError,
)
from spectral_shift.perturbation import (
    DEFECT_IDENTITY_TOL,
    PerturbationInstance,
    defect_functional,
    eigenfunction_diagnostics,
    first_order_shift,
    smallness_ratio,
    solve_corrector,
    torsion_duality_check,
)
from spectral_shift.properties import random_instance


def small_instance(eps=0.05, seed=0, constrained=()):
    """Dense SPD base problem with a diagonal perturbation of strength eps."""
    rng = np.random.default_rng(seed)
    n = 8
    b = rng.standard_normal((n, n))
    a0 = b @ b.T + np.eye(n)
    mass = rng.uniform(0.5, 1.5, n)
    form0 = FormSystem(DiscreteSpace(n, mass), a0)
    sol = solve_generalized_eigenpairs(form0, 4)
    lam0, phi0 = sol.pair(0)
    a_eps = a0 + eps * np.diag(rng.uniform(0.0, 1.0, n))
    perturbed = FormSystem(form0.space, a_eps)
    sub = SubspaceSpec.zero_on(constrained) if constrained else SubspaceSpec.full()
    ell = defect_functional(sol, 0, perturbed, sub)
    return PerturbationInstance(lam0, phi0, perturbed, sub, ell), sol


def test_defect_identity_residual_machine_small():
    inst, _ = small_instance()
    assert inst.defect_identity_residual() <= DEFECT_IDENTITY_TOL


def test_defect_identity_residual_with_constraints():
    inst, _ = small_instance(constrained=(2, 5))
    assert inst.defect_identity_residual() <= DEFECT_IDENTITY_TOL


def test_zero_perturbation_gives_zero_corrector():
    inst, _ = small_instance(eps=0.0)
    corrector = solve_corrector(inst)
    assert np.max(np.abs(corrector.V)) <= 1e-10
    report = first_order_shift(inst, corrector)
    assert report.predicted_shift == pytest.approx(0.0, abs=1e-10)


def test_corrector_satisfies_euler_lagrange():
    inst, _ = small_instance(constrained=(1,))
    corrector = solve_corrector(inst)
    free = inst.free_indices()
    residual = (inst.perturbed.apply(corrector.V) - inst.defect)[free]
    assert np.max(np.abs(residual)) <= 1e-10 * max(1.0, np.max(np.abs(inst.defect)))
    # constrained entries carry phi0 values (affine set Z + phi0)
    assert corrector.V[1] == inst.base_eigenfunction[1]


def test_torsion_duality_both_paths():
    # phi0 in Z (full subspace) and phi0 not in Z (constrained) branches
    for constrained in ((), (3,)):
        inst, _ = small_instance(constrained=constrained)
        corrector = solve_corrector(inst)
        assert corrector.duality_residual <= 1e-8
        assert torsion_duality_check(inst, corrector) <= 1e-8


def test_defect_functional_rejects_degenerate_eigenvalue():
    form = FormSystem(DiscreteSpace(3, np.ones(3)), np.diag([1.0, 1.0, 2.0]))
    sol = solve_generalized_eigenpairs(form, 3)
    with pytest.raises(DegeneracyError):
        defect_functional(sol, 0, form, SubspaceSpec.full())


def test_mass_defect_error():
    inst, _ = small_instance()
    shrunk = FormSystem(
        DiscreteSpace(8, 1e-3 * inst.perturbed.space.mass_weights),
        inst.perturbed.stiffness,
    )
    bad = PerturbationInstance(
        inst.base_eigenvalue, inst.base_eigenfunction, shrunk, inst.subspace,
        inst.defect,
    )
    corrector = solve_corrector(bad)
    with pytest.raises(MassDefectError):
        first_order_shift(bad, corrector)


def test_smallness_ratio_undefined_for_zero_corrector():
    inst, _ = small_instance(eps=0.0)
    corrector = solve_corrector(inst)
    with pytest.raises(UndefinedRatioError):
        smallness_ratio(corrector)


def test_shift_prediction_first_order_accuracy():
    # predicted shift approaches the true shift linearly in eps
    errors = []
    for eps in (1e-2, 1e-3):
        inst, _ = small_instance(eps=eps, seed=4)
        corrector = solve_corrector(inst)
        report = first_order_shift(inst, corrector)
        sol_eps = solve_generalized_eigenpairs(inst.perturbed, 4)
        true_shift = sol_eps.eigenvalues[0] - inst.base_eigenvalue
        errors.append(abs(true_shift - report.predicted_shift))
    assert errors[1] <= errors[0] * 1e-1


def test_eigenfunction_diagnostics_trivial_convention():
    inst, _ = small_instance(eps=0.0)
    corrector = solve_corrector(inst)
    sol = solve_generalized_eigenpairs(inst.perturbed, 4)
    diag = eigenfunction_diagnostics(inst, corrector, sol, 0)
    assert diag.energy_ratio == 1.0
    assert diag.energy_difference == 0.0
    assert diag.l2_over_energy == 0.0


def test_eigenfunction_diagnostics_scale():
    inst, _ = small_instance(eps=1e-3, seed=9)
    corrector = solve_corrector(inst)
    sol = solve_generalized_eigenpairs(inst.perturbed, 4)
    diag = eigenfunction_diagnostics(inst, corrector, sol, 0)
    # remainder energies are higher order than the corrector energy
    assert diag.energy_difference <= 10.0 * corrector.energy
    assert diag.mass_projected_residual <= 10.0 * corrector.mass_norm


def test_instance_validation():
    form = FormSystem(DiscreteSpace(2, np.ones(2)), np.eye(2))
    with pytest.raises(ValidationError):
        PerturbationInstance(1.0, np.ones(3), form, SubspaceSpec.full(), np.zeros(2))
    with pytest.raises(ValidationError):
        PerturbationInstance(-1.0, np.ones(2), form, SubspaceSpec.full(), np.zeros(2))


def test_random_instances_have_consistent_defects():
    rng = np.random.default_rng(123)
    for _ in range(10):
        inst = random_instance(rng)
        assert inst.defect_identity_residual() <= DEFECT_IDENTITY_TOL
