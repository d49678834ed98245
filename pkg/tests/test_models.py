import numpy as np
import pytest

from spectral_shift.errors import KindError, ValidationError
from spectral_shift.models import (
    ModelSpec,
    SymbolFamily,
    _pseudo_operator,
    build_conformal,
    build_dirichlet_hole,
    build_instance,
    build_pseudo,
    build_robin,
    conformal_analytic_defect,
    defect_discrepancy,
    hole_indices,
    leading_coefficient,
    prepare,
    robin_trace_constant,
    weighted_capacity,
)
from spectral_shift.perturbation import solve_corrector
from spectral_shift.core import restrict_to_subspace, solve_generalized_eigenpairs


class TestModelSpecValidation:
    def test_unknown_kind(self):
        with pytest.raises(ValidationError):
            ModelSpec(kind="heat")

    def test_grid_too_coarse(self):
        with pytest.raises(ValidationError):
            ModelSpec(kind="robin", grid=7)

    def test_robin_dimension(self):
        with pytest.raises(ValidationError):
            ModelSpec(kind="robin", dimension=3)

    def test_conformal_dimension(self):
        with pytest.raises(ValidationError):
            ModelSpec(kind="conformal", dimension=1)

    def test_pseudo_power_of_two(self):
        with pytest.raises(ValidationError):
            ModelSpec(kind="pseudo", grid=100)

    def test_pseudo_mask_proper(self):
        with pytest.raises(ValidationError):
            ModelSpec(kind="pseudo", grid=16, mask_fraction=1.0)

    def test_kind_dispatch_guard(self):
        spec = ModelSpec(kind="robin", grid=16)
        with pytest.raises(KindError):
            build_pseudo(spec, 0.1)
        with pytest.raises(KindError):
            build_conformal(spec, 0.1)


class TestRobin:
    def test_base_eigenpair_is_constant(self):
        p = prepare(ModelSpec(kind="robin", grid=33, dimension=1))
        assert p.lambda0 == pytest.approx(1.0, abs=1e-12)
        assert np.ptp(p.phi0) <= 1e-10  # constant eigenfunction

    def test_interior_stencil_row(self):
        spec = ModelSpec(kind="robin", grid=17, dimension=1)
        p = prepare(spec)
        h = 1.0 / 16
        row = p.base_form.dense()[8]
        assert row[7] == pytest.approx(-1.0 / h)
        assert row[8] == pytest.approx(2.0 / h + h)
        assert row[9] == pytest.approx(-1.0 / h)

    def test_boundary_term_scales_with_eps(self):
        spec = ModelSpec(kind="robin", grid=17, dimension=1)
        p = prepare(spec)
        inst = build_robin(spec, 0.25)
        diff = inst.perturbed.dense() - p.base_form.dense()
        expected = np.zeros((17, 17))
        expected[0, 0] = expected[16, 16] = 0.25
        np.testing.assert_allclose(diff, expected, atol=1e-14)

    def test_leading_coefficient_interval(self):
        # boundary quadrature of phi0^2 = 1 over two endpoints
        assert leading_coefficient(
            ModelSpec(kind="robin", grid=33, dimension=1)
        ) == pytest.approx(2.0, rel=1e-10)

    def test_leading_coefficient_square(self):
        # perimeter of the unit square
        assert leading_coefficient(
            ModelSpec(kind="robin", grid=17, dimension=2)
        ) == pytest.approx(4.0, rel=1e-10)

    def test_minmax_sandwich_with_trace_constant(self):
        spec = ModelSpec(kind="robin", grid=41, dimension=1)
        p = prepare(spec)
        c = robin_trace_constant(p)
        for eps in (0.05, 0.2, 0.8):
            inst = build_robin(spec, eps)
            lam = solve_generalized_eigenpairs(inst.perturbed, 1).eigenvalues[0]
            assert p.lambda0 - 1e-12 <= lam
            assert lam <= (1.0 + eps * c) * p.lambda0 + 1e-12

    def test_negative_strength_rejected(self):
        with pytest.raises(ValidationError):
            build_robin(ModelSpec(kind="robin", grid=17), -0.1)

    def test_2d_mass_sums_to_area(self):
        p = prepare(ModelSpec(kind="robin", grid=9, dimension=2))
        assert p.base_form.space.mass_weights.sum() == pytest.approx(1.0)


class TestConformal:
    def test_exact_scaling_relations_uniform_3d(self):
        spec = ModelSpec(kind="conformal", grid=9, dimension=3)
        p = prepare(spec)
        eps = 0.07
        inst = build_conformal(spec, eps)
        np.testing.assert_allclose(
            inst.perturbed.dense(), np.exp(eps) * p.base_form.dense(), rtol=1e-12
        )
        np.testing.assert_allclose(
            inst.perturbed.space.mass_weights,
            np.exp(3 * eps) * p.base_form.space.mass_weights,
            rtol=1e-12,
        )

    def test_metric_sandwich(self):
        spec = ModelSpec(kind="conformal", grid=17, dimension=2, psi_profile="sine_x")
        p = prepare(spec)
        eps = 0.1
        inst = build_conformal(spec, eps)
        restricted = restrict_to_subspace(inst.perturbed, inst.subspace)
        lam = solve_generalized_eigenpairs(restricted, 1).eigenvalues[0]
        phi = eps * p.extras["psi"]
        n = spec.dimension
        lo = np.exp((n - 2) * phi.min() - n * phi.max()) * p.lambda0
        hi = np.exp((n - 2) * phi.max() - n * phi.min()) * p.lambda0
        assert lo - 1e-10 <= lam <= hi + 1e-10

    def test_first_order_coefficient_vanishes_in_2d(self):
        spec = ModelSpec(kind="conformal", grid=17, dimension=2, psi_profile="sine_x")
        assert leading_coefficient(spec) == 0.0

    def test_eps_range_guard(self):
        spec = ModelSpec(kind="conformal", grid=9, dimension=3)
        with pytest.raises(ValidationError):
            build_conformal(spec, 0.9)

    def test_analytic_defect_differs_by_mass_term(self):
        # the gradient-only defect misses the first-order mass change
        spec = ModelSpec(kind="conformal", grid=9, dimension=3)
        gap = defect_discrepancy(spec, 0.05)
        assert gap > 1e-6
        d = conformal_analytic_defect(prepare(spec), 0.05)
        assert d.shape == (9**3,)


class TestDirichletHole:
    spec = ModelSpec(kind="dirichlet_hole", grid=32, dimension=2)

    def test_empty_hole_at_zero(self):
        inst = build_dirichlet_hole(self.spec, 0.0)
        assert inst.subspace.is_full
        corrector = solve_corrector(inst)
        assert np.max(np.abs(corrector.V)) <= 1e-10

    def test_hole_selection_radius(self):
        p = prepare(self.spec)
        h = 1.0 / 31
        idx = hole_indices(p, 8 * h)  # two-cell radius
        coords = p.base_form.space.labels[idx]
        assert len(idx) > 0
        assert np.all(np.linalg.norm(coords - 0.5, axis=1) <= 2 * h + 1e-9)

    def test_too_small_radius_rejected(self):
        with pytest.raises(ValidationError):
            build_dirichlet_hole(self.spec, 1e-4)

    def test_hole_touching_boundary_rejected(self):
        with pytest.raises(ValidationError):
            build_dirichlet_hole(self.spec, 2.0)

    def test_capacity_identity(self):
        h = 1.0 / 31
        inst = build_dirichlet_hole(self.spec, 8 * h)
        corrector = solve_corrector(inst)
        cap = weighted_capacity(inst, corrector)
        cross = inst.base_eigenvalue * inst.perturbed.space.inner(
            corrector.V, inst.base_eigenfunction
        )
        assert cap == pytest.approx(corrector.energy)
        assert abs(cap - cross) <= 1e-10 * abs(cap)

    def test_capacity_requires_hole_kind(self):
        robin = build_robin(ModelSpec(kind="robin", grid=17), 0.1)
        corrector = solve_corrector(robin)
        with pytest.raises(KindError):
            weighted_capacity(robin, corrector)

    def test_corrector_matches_phi0_on_hole(self):
        h = 1.0 / 31
        inst = build_dirichlet_hole(self.spec, 8 * h)
        corrector = solve_corrector(inst)
        hole = list(inst.subspace.constrained)
        np.testing.assert_array_equal(
            corrector.V[hole], inst.base_eigenfunction[hole]
        )

    def test_shift_positive(self):
        # removing capacity raises the eigenvalue (min-max)
        h = 1.0 / 31
        inst = build_dirichlet_hole(self.spec, 8 * h)
        restricted = restrict_to_subspace(inst.perturbed, inst.subspace)
        lam = solve_generalized_eigenpairs(restricted, 1).eigenvalues[0]
        assert lam > inst.base_eigenvalue


class TestPseudo:
    def test_two_point_lattice_operator(self):
        # unitary 2-point transform: F^H diag(1, 3) F = [[2, -1], [-1, 2]]
        a = _pseudo_operator(2, np.array([1.0, 3.0]))
        np.testing.assert_allclose(a, [[2.0, -1.0], [-1.0, 2.0]], atol=1e-12)

    def test_full_lattice_spectrum_is_symbol(self):
        spec = ModelSpec(kind="pseudo", grid=16, mask_fraction=0.5)
        p = prepare(spec)
        # masked operator eigenvalues interlace within [min f, max f]
        f = p.extras["family"].evaluate(0.0, p.extras["xi"])
        sol = p.base_solution
        assert np.all(sol.eigenvalues >= f.min() - 1e-10)
        assert np.all(sol.eigenvalues <= f.max() + 1e-10)

    def test_odd_symbol_rejected(self):
        odd = SymbolFamily(
            "odd",
            lambda eps, xi: 1.0 + np.abs(xi) ** 2 + 0.1 * xi,
            lambda xi: np.zeros_like(xi),
        )
        with pytest.raises(ValidationError):
            odd.validate_on_lattice(2 * np.pi * np.fft.fftfreq(8) * 8, 0.0)

    def test_symbol_below_one_rejected(self):
        low = SymbolFamily(
            "low", lambda eps, xi: np.full_like(np.asarray(xi, float), 0.5),
            lambda xi: np.zeros_like(xi),
        )
        with pytest.raises(ValidationError):
            low.validate_on_lattice(np.array([0.0, 1.0, -1.0]), 0.0)

    def test_defect_matches_symbol_route(self):
        spec = ModelSpec(kind="pseudo", grid=32)
        gap = defect_discrepancy(spec, 0.05)
        # generic and frequency-space defects agree up to eigensolver residual
        assert gap <= 1e-8

    def test_instance_stiffness_symmetric_real(self):
        inst = build_pseudo(ModelSpec(kind="pseudo", grid=32), 0.3)
        a = inst.perturbed.dense()
        np.testing.assert_allclose(a, a.T, atol=1e-12)


def test_prepare_caches_problem():
    spec = ModelSpec(kind="robin", grid=17)
    assert prepare(spec) is prepare(spec)


def test_build_instance_dispatch():
    inst = build_instance(ModelSpec(kind="robin", grid=17), 0.1)
    assert inst.tag == "robin"
