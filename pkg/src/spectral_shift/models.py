"""Model builders: four families of perturbed eigenproblems on grids.

Each builder discretizes one application family into a PerturbationInstance
parameterized by eps:

* ``robin``          - Neumann problem -Delta u + u = lambda u with a Robin
                       boundary term of strength eps (interval or square);
* ``conformal``      - Dirichlet Laplacian under the conformally deformed
                       metric exp(2*eps*Psi) on a box in dimension 2 or 3;
* ``dirichlet_hole`` - Dirichlet form with an additional zero constraint on a
                       shrinking interior ball (capacity model);
* ``pseudo``         - Fourier-multiplier operator on a periodic lattice,
                       restricted to a sub-domain mask, with an eps-dependent
                       symbol.

Lumped (diagonal) mass everywhere; boundary integrals by trapezoid weights.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse

from .core import (
    DiscreteSpace,
    EigenSolution,
    FormSystem,
    SubspaceSpec,
    restrict_to_subspace,
    solve_generalized_eigenpairs,
)
from .errors import DegeneracyError, KindError, ValidationError
from .perturbation import DEFAULT_GAP_THRESHOLD, PerturbationInstance

KINDS = ("robin", "conformal", "dirichlet_hole", "pseudo")

# Extra eigenpairs computed beyond the tracked mode, for gap checks/tracking.
EXTRA_MODES = 6


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of one model family instance."""

    kind: str
    grid: int = 64
    dimension: int = 1
    mode_index: int = 0
    psi_profile: str = "uniform"       # conformal: "uniform" or "sine_x"
    hole_center: tuple[float, ...] = (0.5, 0.5)
    hole_radius_factor: float = 0.25   # r(eps) = factor * eps * domain width
    mask_fraction: float = 0.5         # pseudo: |Omega| / lattice size
    symbol: str = "fractional"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown model kind {self.kind!r}")
        if self.grid < 8:
            raise ValidationError("grid resolution must be at least 8 per axis")
        if self.mode_index < 0:
            raise ValidationError("mode index must be nonnegative")
        if self.kind == "robin" and self.dimension not in (1, 2):
            raise ValidationError("robin domain is the unit interval or square")
        if self.kind == "conformal" and self.dimension not in (2, 3):
            raise ValidationError("conformal dimension must be 2 or 3")
        if self.kind == "conformal" and self.psi_profile not in ("uniform", "sine_x"):
            raise ValidationError(f"unknown profile {self.psi_profile!r}")
        if self.kind == "dirichlet_hole":
            if not all(0.0 < c < 1.0 for c in self.hole_center):
                raise ValidationError("hole center must be strictly interior")
        if self.kind == "pseudo":
            m = self.grid
            if m & (m - 1) != 0:
                raise ValidationError("pseudo lattice size must be a power of two")
            count = round(self.mask_fraction * m)
            if count <= 0 or count >= m:
                raise ValidationError("mask must be a nonempty proper subset")


@dataclass(frozen=True)
class SymbolFamily:
    """Frequency-space multiplier family f(eps, xi) with eps-derivative h."""

    name: str
    evaluate: callable
    derivative_at_zero: callable
    c0: float = 1.0
    c1: float = 1.0

    def validate_on_lattice(self, xi: np.ndarray, eps: float) -> None:
        f = self.evaluate(eps, xi)
        if np.any(f < 1.0 - 1e-12):
            raise ValidationError("symbol must satisfy f >= 1 on the lattice")
        nonzero = xi != 0.0
        if np.any(f[nonzero] <= 1.0):
            raise ValidationError("symbol must be > 1 away from frequency zero")
        if 0.0 <= eps <= 1.0:
            f0 = self.evaluate(0.0, xi)
            f1 = self.evaluate(1.0, xi)
            slack = 1e-12 * np.maximum(np.abs(f), 1.0)
            if np.any(f > self.c0 * f0 + slack) or np.any(self.c1 * f1 > f + slack):
                raise ValidationError("symbol violates its two-sided dominance bounds")
        # evenness: required so the lattice operator is real
        order = np.argsort(xi)
        fs = self.evaluate(eps, xi[order])
        if not np.allclose(fs, self.evaluate(eps, -xi[order]), rtol=1e-12, atol=0.0):
            raise ValidationError("symbol must be even in frequency")


def _fractional_eval(eps: float, xi: np.ndarray) -> np.ndarray:
    xi = np.abs(np.asarray(xi, dtype=float))
    out = np.ones_like(xi)
    nz = xi > 0
    out[nz] = 1.0 + xi[nz] ** (2.0 - 2.0 * eps)
    return out


def _fractional_h(xi: np.ndarray) -> np.ndarray:
    xi = np.abs(np.asarray(xi, dtype=float))
    out = np.zeros_like(xi)
    nz = xi > 0
    out[nz] = -2.0 * np.log(xi[nz]) * xi[nz] ** 2
    return out


SYMBOL_FAMILIES = {
    "fractional": SymbolFamily("fractional", _fractional_eval, _fractional_h),
}


@dataclass(frozen=True)
class ModelProblem:
    """Prepared base problem for one ModelSpec (cached by :func:`prepare`)."""

    spec: ModelSpec
    base_form: FormSystem          # ambient form at eps = 0
    base_subspace: SubspaceSpec    # constraints present already at eps = 0
    base_solution: EigenSolution   # eigenpairs of the restricted base problem
    lambda0: float
    phi0: np.ndarray               # ambient coordinates, zero on constraints
    extras: dict = field(default_factory=dict, compare=False)

    def instance(self, eps: float) -> PerturbationInstance:
        return _INSTANCE_BUILDERS[self.spec.kind](self, eps)


# ---------------------------------------------------------------------------
# grid assembly helpers

def _grid_edges(shape: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs of nearest-neighbor edges of a structured grid."""
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    firsts, seconds = [], []
    for axis in range(len(shape)):
        a = np.moveaxis(idx, axis, 0)
        firsts.append(a[:-1].ravel())
        seconds.append(a[1:].ravel())
    return np.concatenate(firsts), np.concatenate(seconds)


def _edge_stiffness(n: int, i: np.ndarray, j: np.ndarray, w: np.ndarray):
    """Assemble sum_e w_e (u_i - u_j)(v_i - v_j) as a sparse matrix."""
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    vals = np.concatenate([w, w, -w, -w])
    return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _boundary_mask(shape: tuple[int, ...]) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for axis in range(len(shape)):
        a = np.moveaxis(mask, axis, 0)
        a[0] = True
        a[-1] = True
    return mask.ravel()


def _trapezoid(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


# ---------------------------------------------------------------------------
# Robin

def _prepare_robin(spec: ModelSpec) -> ModelProblem:
    m = spec.grid
    h = 1.0 / (m - 1)
    if spec.dimension == 1:
        n = m
        coords = np.linspace(0.0, 1.0, m)[:, None]
        i, j = _grid_edges((m,))
        stiff = _edge_stiffness(n, i, j, np.full(len(i), 1.0 / h))
        mass = h * _trapezoid(m)
        bweights = np.zeros(n)
        bweights[0] = bweights[-1] = 1.0
    else:
        n = m * m
        xs = np.linspace(0.0, 1.0, m)
        gx, gy = np.meshgrid(xs, xs, indexing="ij")
        coords = np.column_stack([gx.ravel(), gy.ravel()])
        tw = _trapezoid(m)
        i, j = _grid_edges((m, m))
        # transverse trapezoid factor: boundary-line edges carry half a strip
        trans = np.where(
            np.isclose(coords[i, 1], coords[j, 1]),
            tw[(coords[i, 1] * (m - 1)).round().astype(int)],
            tw[(coords[i, 0] * (m - 1)).round().astype(int)],
        )
        stiff = _edge_stiffness(n, i, j, trans)
        mass = h * h * np.outer(tw, tw).ravel()
        bweights = np.zeros(n)
        gi = (coords[:, 0] * (m - 1)).round().astype(int)
        gj = (coords[:, 1] * (m - 1)).round().astype(int)
        for fixed, run in ((gi, gj), (gj, gi)):
            for side in (0, m - 1):
                on = fixed == side
                bweights[on] += h * tw[run[on]]
    space = DiscreteSpace(n, mass, labels=coords)
    a0 = stiff + scipy.sparse.diags(mass)
    base_form = FormSystem(space, a0)
    k = min(spec.mode_index + EXTRA_MODES, n)
    sol = solve_generalized_eigenpairs(base_form, k)
    lam0, phi0 = sol.pair(spec.mode_index)
    _require_simple(sol, spec.mode_index)
    return ModelProblem(
        spec, base_form, SubspaceSpec.full(), sol, lam0, phi0,
        extras={"boundary_weights": bweights},
    )


def _robin_instance(problem: ModelProblem, eps: float) -> PerturbationInstance:
    if eps < 0:
        raise ValidationError("robin strength must be nonnegative")
    b = problem.extras["boundary_weights"]
    a_eps = problem.base_form.stiffness + eps * scipy.sparse.diags(b)
    form = FormSystem(problem.base_form.space, a_eps)
    defect = (
        form.apply(problem.phi0)
        - problem.lambda0 * form.space.mass_weights * problem.phi0
    )
    return PerturbationInstance(
        problem.lambda0, problem.phi0, form, SubspaceSpec.full(), defect,
        tag="robin",
    )


def robin_analytic_defect(problem: ModelProblem, eps: float) -> np.ndarray:
    """eps * (boundary quadrature) * phi0 on the boundary nodes."""
    return eps * problem.extras["boundary_weights"] * problem.phi0


def robin_trace_constant(problem: ModelProblem) -> float:
    """Discrete trace constant: largest eigenvalue of the pencil (B, A0).

    Certifies int_boundary u^2 da <= C * E1(u) for every grid function, so
    the min-max sandwich lambda0 <= lambda_eps <= (1 + eps C) lambda0 holds.
    """
    b = problem.extras["boundary_weights"]
    bd = np.flatnonzero(b)
    a = problem.base_form.dense()
    # Schur reduction to the boundary block: C = lambda_max(B^{1/2} A^{-1} B^{1/2})
    ainv_bd = np.linalg.solve(a, np.eye(len(b))[:, bd])[bd]
    s = np.sqrt(b[bd])[:, None] * ainv_bd * np.sqrt(b[bd])[None, :]
    return float(np.max(np.linalg.eigvalsh(0.5 * (s + s.T))))


# ---------------------------------------------------------------------------
# conformal

def _psi_values(spec: ModelSpec, coords: np.ndarray) -> np.ndarray:
    if spec.psi_profile == "uniform":
        return np.ones(len(coords))
    return np.sin(2.0 * np.pi * coords[:, 0])


def _conformal_matrices(problem_extras: dict, dim: int, eps: float):
    h = problem_extras["h"]
    psi = problem_extras["psi"]
    i, j = problem_extras["edges"]
    phi = eps * psi
    conf = np.exp((dim - 2) * phi)
    wts = h ** (dim - 2) * 0.5 * (conf[i] + conf[j])
    stiff = _edge_stiffness(len(psi), i, j, wts)
    mass = h**dim * np.exp(dim * phi)
    return stiff, mass


def _prepare_conformal(spec: ModelSpec) -> ModelProblem:
    m, dim = spec.grid, spec.dimension
    h = 1.0 / (m - 1)
    shape = (m,) * dim
    n = m**dim
    axes = [np.linspace(0.0, 1.0, m)] * dim
    coords = np.stack(
        [g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1
    )
    i, j = _grid_edges(shape)
    psi = _psi_values(spec, coords)
    extras = {"h": h, "psi": psi, "edges": (i, j)}
    stiff, mass = _conformal_matrices(extras, dim, 0.0)
    space = DiscreteSpace(n, mass, labels=coords)
    base_form = FormSystem(space, stiff)
    boundary = np.flatnonzero(_boundary_mask(shape))
    subspace = SubspaceSpec.zero_on(boundary)
    restricted = restrict_to_subspace(base_form, subspace)
    k = min(spec.mode_index + EXTRA_MODES, restricted.dim)
    sol = solve_generalized_eigenpairs(restricted, k)
    lam0, phi_r = sol.pair(spec.mode_index)
    _require_simple(sol, spec.mode_index)
    phi0 = np.zeros(n)
    phi0[subspace.free_indices(n)] = phi_r
    return ModelProblem(spec, base_form, subspace, sol, lam0, phi0, extras=extras)


def _conformal_instance(problem: ModelProblem, eps: float) -> PerturbationInstance:
    spec = problem.spec
    if abs(eps) * np.max(np.abs(problem.extras["psi"])) > 0.5:
        raise ValidationError("eps * ||Psi||_inf must not exceed 0.5")
    stiff, mass = _conformal_matrices(problem.extras, spec.dimension, eps)
    space = DiscreteSpace(problem.base_form.dim, mass, labels=problem.base_form.space.labels)
    form = FormSystem(space, stiff)
    defect = form.apply(problem.phi0) - problem.lambda0 * mass * problem.phi0
    defect[list(problem.base_subspace.constrained)] = 0.0
    return PerturbationInstance(
        problem.lambda0, problem.phi0, form, problem.base_subspace, defect,
        tag="conformal",
    )


def conformal_analytic_defect(problem: ModelProblem, eps: float) -> np.ndarray:
    """Gradient-only defect (A_eps - A_0) phi0; differs from the consistent
    generic defect by the mass-change term, which is reported upstream."""
    stiff, _ = _conformal_matrices(problem.extras, problem.spec.dimension, eps)
    d = (stiff - problem.base_form.stiffness) @ problem.phi0
    d[list(problem.base_subspace.constrained)] = 0.0
    return d


# ---------------------------------------------------------------------------
# Dirichlet hole

def _prepare_hole(spec: ModelSpec) -> ModelProblem:
    m = spec.grid
    h = 1.0 / (m - 1)
    inner = m - 2
    n = inner * inner
    xs = np.linspace(h, 1.0 - h, inner)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    coords = np.column_stack([gx.ravel(), gy.ravel()])
    i, j = _grid_edges((inner, inner))
    stiff = _edge_stiffness(n, i, j, np.ones(len(i)))
    # edges to the eliminated Dirichlet boundary contribute to the diagonal
    diag_extra = np.zeros(n)
    gi = ((coords[:, 0] - h) / h).round().astype(int)
    gj = ((coords[:, 1] - h) / h).round().astype(int)
    for g in (gi, gj):
        diag_extra += (g == 0) + (g == inner - 1)
    mass = np.full(n, h * h)
    a0 = stiff + scipy.sparse.diags(diag_extra + mass)
    space = DiscreteSpace(n, mass, labels=coords)
    base_form = FormSystem(space, a0)
    k = min(spec.mode_index + EXTRA_MODES, n)
    sol = solve_generalized_eigenpairs(base_form, k)
    lam0, phi0 = sol.pair(spec.mode_index)
    _require_simple(sol, spec.mode_index)
    return ModelProblem(
        spec, base_form, SubspaceSpec.full(), sol, lam0, phi0, extras={"h": h}
    )


def hole_indices(problem: ModelProblem, eps: float) -> np.ndarray:
    """Nodes inside the ball of radius r(eps) around the hole center."""
    spec = problem.spec
    if eps == 0.0:
        return np.array([], dtype=int)
    r = spec.hole_radius_factor * eps
    center = np.asarray(spec.hole_center[: 2], dtype=float)
    d = np.linalg.norm(problem.base_form.space.labels - center, axis=1)
    idx = np.flatnonzero(d <= r + 1e-12)
    if len(idx) == 0:
        raise ValidationError(
            f"hole radius {r:.3e} selects no grid nodes (eps too small for grid)"
        )
    h = problem.extras["h"]
    labels = problem.base_form.space.labels[idx]
    if np.any(labels <= h + 1e-12) or np.any(labels >= 1.0 - h - 1e-12):
        raise ValidationError("hole touches the domain boundary")
    return idx


def _hole_instance(problem: ModelProblem, eps: float) -> PerturbationInstance:
    idx = hole_indices(problem, eps)
    subspace = SubspaceSpec.zero_on(idx) if len(idx) else SubspaceSpec.full()
    defect = np.zeros(problem.base_form.dim)
    return PerturbationInstance(
        problem.lambda0, problem.phi0, problem.base_form, subspace, defect,
        tag="dirichlet_hole",
    )


def weighted_capacity(instance: PerturbationInstance, corrector) -> float:
    """Cap_phi0(K) = E(V, V), cross-checked against lambda0 (V, phi0)_M."""
    if instance.tag != "dirichlet_hole":
        raise KindError("weighted capacity is defined for the hole model only")
    energy = corrector.energy
    w = instance.perturbed.space.mass_weights
    cross = instance.base_eigenvalue * float(
        np.dot(corrector.V, w * instance.base_eigenfunction)
    )
    scale = max(abs(energy), abs(cross), 1e-300)
    if abs(energy - cross) > 1e-10 * scale:
        raise ValidationError(
            f"capacity evaluations disagree: E(V)={energy!r}, "
            f"lambda0(V,phi0)={cross!r}"
        )
    return energy


# ---------------------------------------------------------------------------
# pseudo-differential

def _lattice_frequencies(m: int) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(m) * m


def _pseudo_operator(m: int, f_values: np.ndarray) -> np.ndarray:
    """Dense matrix of F^H diag(f) F on the full lattice."""
    a = np.fft.ifft(f_values[:, None] * np.fft.fft(np.eye(m), axis=0), axis=0)
    if np.max(np.abs(a.imag)) > 1e-10 * max(np.max(np.abs(a.real)), 1.0):
        raise ValidationError("symbol produced a non-real lattice operator")
    return 0.5 * (a.real + a.real.T)


def _mask_indices(spec: ModelSpec) -> np.ndarray:
    count = round(spec.mask_fraction * spec.grid)
    return np.arange(count)


def _prepare_pseudo(spec: ModelSpec) -> ModelProblem:
    m = spec.grid
    family = SYMBOL_FAMILIES[spec.symbol]
    xi = _lattice_frequencies(m)
    family.validate_on_lattice(xi, 0.0)
    mask = _mask_indices(spec)
    a_full = _pseudo_operator(m, family.evaluate(0.0, xi))
    a0 = a_full[np.ix_(mask, mask)]
    space = DiscreteSpace(len(mask), np.ones(len(mask)), labels=mask[:, None].astype(float))
    base_form = FormSystem(space, a0)
    k = min(spec.mode_index + EXTRA_MODES, len(mask))
    sol = solve_generalized_eigenpairs(base_form, k)
    lam0, phi0 = sol.pair(spec.mode_index)
    _require_simple(sol, spec.mode_index)
    if sol.eigenvalues[0] <= 1.0:
        raise ValidationError("pseudo operator must have spectrum above 1")
    return ModelProblem(
        spec, base_form, SubspaceSpec.full(), sol, lam0, phi0,
        extras={"xi": xi, "mask": mask, "family": family},
    )


def _pseudo_instance(problem: ModelProblem, eps: float) -> PerturbationInstance:
    spec = problem.spec
    family = problem.extras["family"]
    xi = problem.extras["xi"]
    mask = problem.extras["mask"]
    family.validate_on_lattice(xi, eps)
    a_full = _pseudo_operator(spec.grid, family.evaluate(eps, xi))
    a = a_full[np.ix_(mask, mask)]
    form = FormSystem(problem.base_form.space, a)
    defect = form.apply(problem.phi0) - problem.lambda0 * problem.phi0
    return PerturbationInstance(
        problem.lambda0, problem.phi0, form, SubspaceSpec.full(), defect,
        tag="pseudo",
    )


def pseudo_analytic_defect(problem: ModelProblem, eps: float) -> np.ndarray:
    """Defect through the symbol difference: hat(l) = (f_eps - f_0) hat(phi0)."""
    spec = problem.spec
    family = problem.extras["family"]
    xi = problem.extras["xi"]
    mask = problem.extras["mask"]
    ext = np.zeros(spec.grid)
    ext[mask] = problem.phi0
    df = family.evaluate(eps, xi) - family.evaluate(0.0, xi)
    d = np.fft.ifft(df * np.fft.fft(ext)).real
    return d[mask]


def pseudo_spectral_mass(problem: ModelProblem) -> np.ndarray:
    """|hat(phi0)|^2 on the frequency lattice (orthonormal transform)."""
    spec = problem.spec
    ext = np.zeros(spec.grid)
    ext[problem.extras["mask"]] = problem.phi0
    hat = np.fft.fft(ext) / np.sqrt(spec.grid)
    return np.abs(hat) ** 2


# ---------------------------------------------------------------------------
# dispatch

_PREPARERS = {
    "robin": _prepare_robin,
    "conformal": _prepare_conformal,
    "dirichlet_hole": _prepare_hole,
    "pseudo": _prepare_pseudo,
}

_INSTANCE_BUILDERS = {
    "robin": _robin_instance,
    "conformal": _conformal_instance,
    "dirichlet_hole": _hole_instance,
    "pseudo": _pseudo_instance,
}

_ANALYTIC_DEFECTS = {
    "robin": robin_analytic_defect,
    "conformal": conformal_analytic_defect,
    "pseudo": pseudo_analytic_defect,
}


def _require_simple(sol: EigenSolution, index: int) -> None:
    if sol.relative_gap(index) < DEFAULT_GAP_THRESHOLD:
        raise DegeneracyError(
            f"tracked eigenvalue {index} is not simple "
            f"(relative gap {sol.relative_gap(index):.2e})"
        )


@functools.lru_cache(maxsize=32)
def prepare(spec: ModelSpec) -> ModelProblem:
    """Assemble and solve the base problem; cached per spec."""
    return _PREPARERS[spec.kind](spec)


def build_instance(spec: ModelSpec, eps: float) -> PerturbationInstance:
    return prepare(spec).instance(eps)


def build_robin(spec: ModelSpec, eps: float) -> PerturbationInstance:
    _require_kind(spec, "robin")
    return build_instance(spec, eps)


def build_conformal(spec: ModelSpec, eps: float) -> PerturbationInstance:
    _require_kind(spec, "conformal")
    return build_instance(spec, eps)


def build_dirichlet_hole(spec: ModelSpec, eps: float) -> PerturbationInstance:
    _require_kind(spec, "dirichlet_hole")
    return build_instance(spec, eps)


def build_pseudo(spec: ModelSpec, eps: float) -> PerturbationInstance:
    _require_kind(spec, "pseudo")
    return build_instance(spec, eps)


def _require_kind(spec: ModelSpec, kind: str) -> None:
    if spec.kind != kind:
        raise KindError(f"expected a {kind} spec, got {spec.kind}")


def analytic_defect(spec: ModelSpec, eps: float) -> np.ndarray | None:
    """Closed-form defect when the model has one (None for the hole model)."""
    fn = _ANALYTIC_DEFECTS.get(spec.kind)
    if fn is None:
        return None
    return fn(prepare(spec), eps)


def defect_discrepancy(spec: ModelSpec, eps: float) -> float | None:
    """Norm gap between the generic (identity-consistent) and analytic defects."""
    analytic = analytic_defect(spec, eps)
    if analytic is None:
        return None
    inst = build_instance(spec, eps)
    return float(np.linalg.norm(inst.defect - analytic))


def leading_coefficient(spec: ModelSpec) -> float | str:
    """First-order coefficient of the eigenvalue shift in eps.

    The hole model follows a capacity law rather than a slope; a descriptor
    string is returned for it.
    """
    problem = prepare(spec)
    if spec.kind == "robin":
        b = problem.extras["boundary_weights"]
        return float(np.dot(b, problem.phi0**2))
    if spec.kind == "conformal":
        dim = spec.dimension
        psi = problem.extras["psi"]
        i, j = problem.extras["edges"]
        h = problem.extras["h"]
        wts = (dim - 2) * h ** (dim - 2) * 0.5 * (psi[i] + psi[j])
        d = problem.phi0[i] - problem.phi0[j]
        return float(np.dot(wts, d * d))
    if spec.kind == "dirichlet_hole":
        return "capacity_law: shift ~ Cap_phi0(K_eps)"
    if spec.kind == "pseudo":
        family = problem.extras["family"]
        xi = problem.extras["xi"]
        return float(np.dot(family.derivative_at_zero(xi), pseudo_spectral_mass(problem)))
    raise KindError(spec.kind)
