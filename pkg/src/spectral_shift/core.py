"""Finite-dimensional symmetric positive forms and generalized eigenproblems.

A ``FormSystem`` couples a symmetric positive stiffness matrix with a diagonal
mass matrix (quadrature weights).  All spectral quantities are taken with
respect to the mass inner product ``<u, v> = u^T M v``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import (
    ConstraintError,
    EmptySubspaceError,
    ShapeError,
    SolverError,
    ValidationError,
)

# Dense reference eigensolver below this dimension; sparse shift-invert above.
DENSE_EIG_LIMIT = 500


@dataclass(frozen=True)
class DiscreteSpace:
    """Degrees of freedom plus quadrature weights realizing the measure.

    ``labels`` optionally carries per-node coordinates (shape ``(dim, d)``)
    for model builders; it plays no role in the linear algebra.
    """

    dim: int
    mass_weights: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        w = np.asarray(self.mass_weights, dtype=float)
        object.__setattr__(self, "mass_weights", w)
        if self.dim <= 0:
            raise ValidationError("dimension must be positive")
        if w.shape != (self.dim,):
            raise ValidationError(
                f"mass_weights has length {w.shape}, expected ({self.dim},)"
            )
        if not np.all(w > 0):
            raise ValidationError("all mass weights must be strictly positive")
        if self.labels is not None:
            object.__setattr__(self, "labels", np.asarray(self.labels, dtype=float))

    def inner(self, u, v):
        """Mass inner product."""
        return float(np.dot(u, self.mass_weights * v))

    def norm(self, u):
        return float(np.sqrt(max(self.inner(u, u), 0.0)))


def _as_csr(matrix) -> scipy.sparse.csr_matrix:
    if scipy.sparse.issparse(matrix):
        return matrix.tocsr()
    return scipy.sparse.csr_matrix(np.asarray(matrix, dtype=float))


@dataclass(frozen=True)
class FormSystem:
    """Symmetric positive bilinear form over a discrete space."""

    space: DiscreteSpace
    stiffness: scipy.sparse.csr_matrix
    symmetry_tol: float = -1.0  # negative means "use the default"

    def __post_init__(self):
        a = _as_csr(self.stiffness)
        object.__setattr__(self, "stiffness", a)
        if a.shape != (self.space.dim, self.space.dim):
            raise ShapeError(
                f"stiffness shape {a.shape} does not match space dim {self.space.dim}"
            )
        amax = abs(a).max() if a.nnz else 0.0
        tol = self.symmetry_tol
        if tol < 0:
            tol = 1e-12 * max(amax, 1.0)
            object.__setattr__(self, "symmetry_tol", tol)
        asym = abs(a - a.T)
        asym_max = asym.max() if asym.nnz else 0.0
        if asym_max > tol:
            raise ValidationError(
                f"stiffness asymmetry {asym_max:.3e} exceeds tolerance {tol:.3e}"
            )

    @property
    def dim(self) -> int:
        return self.space.dim

    def dense(self) -> np.ndarray:
        return self.stiffness.toarray()

    def energy(self, u, v=None) -> float:
        """Bilinear form value u^T A v (quadratic form when v is omitted)."""
        if v is None:
            v = u
        return float(np.dot(u, self.stiffness @ v))

    def apply(self, u) -> np.ndarray:
        return self.stiffness @ u

    def check_positive_definite(self, shift: float = 1e-12) -> None:
        """Attempt a (dense) Cholesky of A + shift*scale*I; raise on failure.

        Only meaningful for moderate dimensions; large systems are validated
        through their eigensolves instead.
        """
        a = self.dense()
        scale = max(np.abs(a).max(), 1.0)
        try:
            np.linalg.cholesky(0.5 * (a + a.T) + shift * scale * np.eye(self.dim))
        except np.linalg.LinAlgError as exc:
            raise ValidationError("stiffness is not positive definite") from exc


@dataclass(frozen=True)
class SubspaceSpec:
    """Admissible subspace: the full space or zero-on-an-index-set."""

    constrained: tuple[int, ...] = ()

    @staticmethod
    def full() -> "SubspaceSpec":
        return SubspaceSpec(())

    @staticmethod
    def zero_on(indices) -> "SubspaceSpec":
        return SubspaceSpec(tuple(int(i) for i in indices))

    @property
    def is_full(self) -> bool:
        return len(self.constrained) == 0

    def validate(self, dim: int) -> None:
        idx = self.constrained
        if len(set(idx)) != len(idx):
            raise ConstraintError("constrained indices must be distinct")
        for i in idx:
            if i < 0 or i >= dim:
                raise ConstraintError(f"constrained index {i} out of range [0, {dim})")
        if len(idx) == dim:
            raise EmptySubspaceError("every degree of freedom is constrained")

    def free_indices(self, dim: int) -> np.ndarray:
        self.validate(dim)
        mask = np.ones(dim, dtype=bool)
        mask[list(self.constrained)] = False
        return np.flatnonzero(mask)


@dataclass(frozen=True)
class EigenSolution:
    """Ascending eigenvalues with mass-orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual_tol: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", np.asarray(self.eigenvalues, float))
        object.__setattr__(self, "eigenvectors", np.asarray(self.eigenvectors, float))

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    def pair(self, index: int) -> tuple[float, np.ndarray]:
        return float(self.eigenvalues[index]), self.eigenvectors[:, index]

    def relative_gap(self, index: int) -> float:
        """Relative gap between eigenvalue ``index`` and its nearest neighbor."""
        lam = self.eigenvalues
        if len(lam) < 2:
            return np.inf
        mine = lam[index]
        others = np.delete(lam, index)
        return float(np.min(np.abs(others - mine)) / max(abs(mine), 1.0))


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Largest-magnitude entry positive; ties broken by lowest index."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        i = int(np.argmax(np.abs(col)))
        if col[i] < 0:
            out[:, j] = -col
    return out


def _order_degenerate(eigenvalues, vectors, rel_tol=1e-12):
    """Within numerically equal eigenvalue groups, sort columns lexicographically."""
    lam = eigenvalues
    n = len(lam)
    start = 0
    while start < n:
        stop = start + 1
        scale = max(abs(lam[start]), 1.0)
        while stop < n and abs(lam[stop] - lam[start]) <= rel_tol * scale:
            stop += 1
        if stop - start > 1:
            cols = sorted(range(start, stop), key=lambda j: tuple(vectors[:, j]))
            vectors[:, start:stop] = vectors[:, cols]
        start = stop
    return vectors


def solve_generalized_eigenpairs(
    form: FormSystem, k: int, residual_tol: float = 1e-8
) -> EigenSolution:
    """k smallest eigenpairs of A v = lambda M v with diagonal mass M.

    Reduced to standard form by the exact symmetric scaling M^{-1/2}.  Dense
    path for small systems; sparse shift-invert (deterministic start vector)
    above ``DENSE_EIG_LIMIT``.
    """
    n = form.dim
    if k <= 0 or k > n:
        raise ValidationError(f"requested {k} eigenpairs from a dim-{n} system")
    w = form.space.mass_weights
    inv_sqrt_m = 1.0 / np.sqrt(w)
    if n <= DENSE_EIG_LIMIT:
        a = form.dense()
        b = inv_sqrt_m[:, None] * a * inv_sqrt_m[None, :]
        b = 0.5 * (b + b.T)
        try:
            lam, y = scipy.linalg.eigh(b)
        except scipy.linalg.LinAlgError as exc:
            raise SolverError(f"dense eigensolver failed: {exc}") from exc
        lam, y = lam[:k], y[:, :k]
        vecs = inv_sqrt_m[:, None] * y
    else:
        a = form.stiffness.tocsc()
        m = scipy.sparse.diags(w).tocsc()
        v0 = np.ones(n)
        try:
            lam, vecs = scipy.sparse.linalg.eigsh(
                a, k=k, M=m, sigma=0.0, which="LM", v0=v0
            )
        except Exception as exc:  # eigsh raises several distinct types
            raise SolverError(f"sparse eigensolver failed: {exc}") from exc
        order = np.argsort(lam)
        lam, vecs = lam[order], vecs[:, order]
        # eigsh returns M-orthonormal vectors already; renormalize defensively
        norms = np.sqrt(np.einsum("ij,i,ij->j", vecs, w, vecs))
        vecs = vecs / norms[None, :]

    vecs = _fix_signs(vecs)
    vecs = _order_degenerate(lam.copy(), vecs)
    sol = EigenSolution(lam, vecs, residual_tol=residual_tol)
    _check_residuals(form, sol)
    if sol.eigenvalues[0] < -residual_tol * max(abs(sol.eigenvalues[-1]), 1.0):
        raise ValidationError(
            f"negative eigenvalue {sol.eigenvalues[0]:.3e}: stiffness not PSD"
        )
    return sol


def _check_residuals(form: FormSystem, sol: EigenSolution) -> None:
    w = form.space.mass_weights
    for j in range(sol.count):
        lam, v = sol.pair(j)
        res = form.apply(v) - lam * (w * v)
        bound = sol.residual_tol * (1.0 + abs(lam)) * form.space.norm(v)
        if np.linalg.norm(res) > bound:
            raise SolverError(
                f"eigenpair {j} residual {np.linalg.norm(res):.3e} exceeds {bound:.3e}"
            )


def restrict_to_subspace(form: FormSystem, sub: SubspaceSpec) -> FormSystem:
    """Principal subsystem on the unconstrained indices."""
    if sub.is_full:
        sub.validate(form.dim)
        return form
    free = sub.free_indices(form.dim)
    a = form.stiffness[free][:, free]
    space = DiscreteSpace(
        dim=len(free),
        mass_weights=form.space.mass_weights[free],
        labels=None if form.space.labels is None else form.space.labels[free],
    )
    return FormSystem(space, a, symmetry_tol=form.symmetry_tol)


def _solve_spd(form: FormSystem, rhs: np.ndarray) -> np.ndarray:
    """Solve A x = rhs for the (assumed SPD) stiffness."""
    n = form.dim
    try:
        if n <= DENSE_EIG_LIMIT:
            c, low = scipy.linalg.cho_factor(form.dense())
            return scipy.linalg.cho_solve((c, low), rhs)
        lu = scipy.sparse.linalg.splu(form.stiffness.tocsc())
        return lu.solve(rhs)
    except (scipy.linalg.LinAlgError, RuntimeError, ValueError) as exc:
        raise SolverError(f"linear solve failed: {exc}") from exc


def spectral_distance_bound(form: FormSystem, w: np.ndarray, mu: float) -> float:
    """Upper bound for dist(mu, spectrum(R)), R = A^{-1} M the resolvent.

    Returns ``sqrt(E(Rw - mu w) / E(w))``, which dominates the distance from
    ``mu`` to the inverse-eigenvalue set for any nonzero ``w``.
    """
    w = np.asarray(w, dtype=float)
    if np.linalg.norm(w) == 0.0:
        raise ValidationError("test vector must be nonzero")
    rw = _solve_spd(form, form.space.mass_weights * w)
    diff = rw - mu * w
    ew = form.energy(w)
    if ew <= 0.0:
        raise SolverError("form is not positive on the test vector")
    return float(np.sqrt(max(form.energy(diff), 0.0) / ew))


@dataclass(frozen=True)
class ResolventGapReport:
    """Per-index resolvent eigenvalue gaps against the operator-norm bound."""

    gaps: np.ndarray
    norm_bound: float
    passed: bool
    relative_slack: float = 1e-10


def resolvent_gap_eigenvalue_bound(
    form1: FormSystem, form2: FormSystem, relative_slack: float = 1e-10
) -> ResolventGapReport:
    """Check |mu_{n,1} - mu_{n,2}| <= ||R1 - R2|| for all n, mu = 1/lambda.

    The operator norm is taken in the mass inner product, i.e. the spectral
    norm of M^{1/2} (A1^{-1} - A2^{-1}) M^{1/2}.  Dense evaluation; intended
    for desk-scale systems.
    """
    if form1.dim != form2.dim:
        raise ShapeError(f"dimension mismatch: {form1.dim} vs {form2.dim}")
    if not np.allclose(form1.space.mass_weights, form2.space.mass_weights):
        raise ShapeError("forms must share the same discrete space")
    w = form1.space.mass_weights
    sqrt_m = np.sqrt(w)
    try:
        r1 = np.linalg.inv(form1.dense())
        r2 = np.linalg.inv(form2.dense())
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"resolvent inversion failed: {exc}") from exc
    s = sqrt_m[:, None] * (r1 - r2) * sqrt_m[None, :]
    norm_bound = float(np.linalg.norm(0.5 * (s + s.T), 2))
    k = form1.dim
    sol1 = solve_generalized_eigenpairs(form1, k)
    sol2 = solve_generalized_eigenpairs(form2, k)
    mu1 = np.sort(1.0 / sol1.eigenvalues)[::-1]
    mu2 = np.sort(1.0 / sol2.eigenvalues)[::-1]
    gaps = np.abs(mu1 - mu2)
    passed = bool(np.all(gaps <= norm_bound * (1.0 + relative_slack) + 1e-300))
    return ResolventGapReport(gaps, norm_bound, passed, relative_slack)


def to_coordinate_text(matrix) -> str:
    """Serialize a matrix as 'row col value' triplets (one per line)."""
    coo = _as_csr(matrix).tocoo()
    lines = [f"{coo.shape[0]} {coo.shape[1]}"]
    order = np.lexsort((coo.col, coo.row))
    for i in order:
        lines.append(f"{coo.row[i]} {coo.col[i]} {float(coo.data[i])!r}")
    return "\n".join(lines) + "\n"


def from_coordinate_text(text: str) -> scipy.sparse.csr_matrix:
    """Inverse of :func:`to_coordinate_text`."""
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise ValidationError("empty coordinate text")
    nrow, ncol = (int(t) for t in lines[0].split())
    rows, cols, vals = [], [], []
    for ln in lines[1:]:
        r, c, v = ln.split()
        rows.append(int(r))
        cols.append(int(c))
        vals.append(float(v))
    return scipy.sparse.csr_matrix(
        (vals, (rows, cols)), shape=(nrow, ncol)
    )
