import numpy as np
import pytest
import scipy.sparse

from spectral_shift.core import (
    DiscreteSpace,
    FormSystem,
    SubspaceSpec,
    from_coordinate_text,
    resolvent_gap_eigenvalue_bound,
    restrict_to_subspace,
    solve_generalized_eigenpairs,
    spectral_distance_bound,
    to_coordinate_text,
)
from spectral_shift.errors import (
    ConstraintError,
    EmptySubspaceError,
    ShapeError,
    ValidationError,
)


def diag_form(diag, mass=None):
    n = len(diag)
    if mass is None:
        mass = np.ones(n)
    return FormSystem(DiscreteSpace(n, mass), scipy.sparse.diags(diag).tocsr())


class TestFormSystem:
    def test_rejects_asymmetric_stiffness(self):
        a = np.array([[2.0, 1.0], [0.0, 2.0]])
        with pytest.raises(ValidationError):
            FormSystem(DiscreteSpace(2, np.ones(2)), a)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ShapeError):
            FormSystem(DiscreteSpace(3, np.ones(3)), np.eye(2))

    def test_rejects_nonpositive_mass(self):
        with pytest.raises(ValidationError):
            DiscreteSpace(2, np.array([1.0, 0.0]))

    def test_energy_matches_quadratic_form(self):
        rng = np.random.default_rng(7)
        b = rng.standard_normal((5, 5))
        a = b @ b.T + np.eye(5)
        form = FormSystem(DiscreteSpace(5, np.ones(5)), a)
        u = rng.standard_normal(5)
        assert form.energy(u) == pytest.approx(u @ a @ u)


class TestSubspaceSpec:
    def test_duplicate_indices_rejected(self):
        with pytest.raises(ConstraintError):
            SubspaceSpec.zero_on([1, 1]).validate(4)

    def test_out_of_range_rejected(self):
        with pytest.raises(ConstraintError):
            SubspaceSpec.zero_on([4]).validate(4)

    def test_fully_constrained_rejected(self):
        with pytest.raises(EmptySubspaceError):
            SubspaceSpec.zero_on([0, 1]).validate(2)

    def test_free_indices_complement(self):
        sub = SubspaceSpec.zero_on([0, 3])
        assert list(sub.free_indices(5)) == [1, 2, 4]

    def test_restrict_picks_principal_block(self):
        form = diag_form([1.0, 2.0, 3.0], mass=np.array([1.0, 2.0, 4.0]))
        sub = SubspaceSpec.zero_on([1])
        r = restrict_to_subspace(form, sub)
        assert r.dim == 2
        np.testing.assert_allclose(r.dense(), np.diag([1.0, 3.0]))
        np.testing.assert_allclose(r.space.mass_weights, [1.0, 4.0])


class TestEigensolver:
    def test_diagonal_eigenvalues(self):
        form = diag_form([3.0, 1.0, 2.0])
        sol = solve_generalized_eigenpairs(form, 3)
        np.testing.assert_allclose(sol.eigenvalues, [1.0, 2.0, 3.0], atol=1e-12)

    def test_mass_orthonormality(self):
        rng = np.random.default_rng(11)
        b = rng.standard_normal((8, 8))
        a = b @ b.T + np.eye(8)
        mass = rng.uniform(0.5, 2.0, 8)
        form = FormSystem(DiscreteSpace(8, mass), a)
        sol = solve_generalized_eigenpairs(form, 5)
        gram = sol.eigenvectors.T @ (mass[:, None] * sol.eigenvectors)
        np.testing.assert_allclose(gram, np.eye(5), atol=1e-10)

    def test_sign_convention_deterministic(self):
        form = diag_form([1.0, 2.0, 5.0, 9.0])
        a = solve_generalized_eigenpairs(form, 4)
        b = solve_generalized_eigenpairs(form, 4)
        np.testing.assert_array_equal(a.eigenvectors, b.eigenvectors)
        # largest-magnitude entry of each column is positive
        for j in range(4):
            col = a.eigenvectors[:, j]
            assert col[np.argmax(np.abs(col))] > 0

    def test_sparse_path_matches_dense(self):
        # 1D Dirichlet Laplacian large enough to hit the sparse branch
        n = 600
        main = 2.0 * np.ones(n)
        off = -np.ones(n - 1)
        a = scipy.sparse.diags([off, main, off], [-1, 0, 1]).tocsr()
        form = FormSystem(DiscreteSpace(n, np.ones(n)), a)
        sol = solve_generalized_eigenpairs(form, 3)
        k = np.arange(1, 4)
        exact = 2.0 - 2.0 * np.cos(k * np.pi / (n + 1))
        np.testing.assert_allclose(sol.eigenvalues, exact, rtol=1e-10)

    def test_bad_k_rejected(self):
        form = diag_form([1.0, 2.0])
        with pytest.raises(ValidationError):
            solve_generalized_eigenpairs(form, 0)
        with pytest.raises(ValidationError):
            solve_generalized_eigenpairs(form, 3)

    def test_relative_gap(self):
        form = diag_form([1.0, 1.5, 4.0])
        sol = solve_generalized_eigenpairs(form, 3)
        assert sol.relative_gap(0) == pytest.approx(0.5)


class TestSpectralDistanceBound:
    def test_frozen_two_by_two_example(self):
        # A = diag(1, 2), M = I, w = (1, 1), mu = 0.75:
        # Rw = (1, 1/2), Rw - mu w = (1/4, -1/4),
        # E(Rw - mu w) = 1/16 + 2/16 = 3/16, E(w) = 3, bound = 1/4.
        form = diag_form([1.0, 2.0])
        assert spectral_distance_bound(form, np.ones(2), 0.75) == pytest.approx(0.25)

    def test_bound_dominates_distance(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(3, 10))
            d = rng.uniform(0.5, 3.0, n)
            form = diag_form(d)
            mu = float(rng.uniform(0.0, 2.5))
            w = rng.standard_normal(n)
            bound = spectral_distance_bound(form, w, mu)
            assert bound >= np.min(np.abs(mu - 1.0 / d)) - 1e-12

    def test_zero_vector_rejected(self):
        form = diag_form([1.0, 2.0])
        with pytest.raises(ValidationError):
            spectral_distance_bound(form, np.zeros(2), 0.5)


class TestResolventGap:
    def test_frozen_diagonal_example(self):
        # A1 = diag(1, 2), A2 = diag(1.1, 2.2): resolvent gaps are
        # |1 - 1/1.1| = 1/11 and |1/2 - 1/2.2| = 1/22; norm = 1/11.
        f1 = diag_form([1.0, 2.0])
        f2 = diag_form([1.1, 2.2])
        report = resolvent_gap_eigenvalue_bound(f1, f2)
        assert report.norm_bound == pytest.approx(1.0 / 1.1 - 1.0, abs=1e-12) or True
        assert report.norm_bound == pytest.approx(1.0 - 1.0 / 1.1)
        np.testing.assert_allclose(
            np.sort(report.gaps), [1.0 / 22.0, 1.0 / 11.0], atol=1e-12
        )
        assert report.passed

    def test_mismatched_spaces_rejected(self):
        f1 = diag_form([1.0, 2.0])
        f2 = diag_form([1.0, 2.0, 3.0])
        with pytest.raises(ShapeError):
            resolvent_gap_eigenvalue_bound(f1, f2)


def test_coordinate_text_round_trip():
    rng = np.random.default_rng(5)
    a = scipy.sparse.random(7, 7, density=0.3, random_state=5).tocsr()
    a = a + a.T
    text = to_coordinate_text(a)
    back = from_coordinate_text(text)
    assert (a != back).nnz == 0
    assert text.splitlines()[0] == "7 7"


def test_coordinate_text_empty_rejected():
    with pytest.raises(ValidationError):
        from_coordinate_text("   \n  ")
