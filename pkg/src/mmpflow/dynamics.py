"""Right-hand side of the magneto-micropolar system on the torus.

    du/dt = P[-(u.grad)u + (b.grad)b] + chi curl w + (mu+chi) lap u
    dw/dt = -(u.grad)w + gamma lap w + kappa grad div w - 2 chi w + chi curl u
    db/dt = P[-(u.grad)b + (b.grad)u] + nu lap b

P is the Leray projector; it removes the gradient of the total pressure so
neither p nor |b|^2 is ever formed. Every quadratic term is evaluated in
divergence form ``(f.grad)g = div(g (x) f)`` from 2/3-truncated factors, which
makes it the exact Galerkin truncation of the continuous product.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .errors import ConsistencyViolation, GridMismatch
from .spectral import (
    Grid,
    SpectralField,
    curl,
    divergence,
    fft,
    gradient,
    ifft,
    inner,
    l2_norm,
    laplacian,
    leray_coeffs,
    leray_project,
    outer_product,
)

# Levi-Civita symbol
EPS = np.zeros((3, 3, 3))
EPS[0, 1, 2] = EPS[1, 2, 0] = EPS[2, 0, 1] = 1.0
EPS[0, 2, 1] = EPS[2, 1, 0] = EPS[1, 0, 2] = -1.0


@dataclass(frozen=True)
class MMPParams:
    """Material coefficients.

    mu: kinematic viscosity, chi: vortex viscosity, kappa and gamma: spin
    viscosities, nu: magnetic diffusivity (inverse magnetic Reynolds number).
    chi and kappa may be zero so that the reduced systems are reachable.
    """

    mu: float
    chi: float
    kappa: float
    gamma: float
    nu: float

    def __post_init__(self):
        for name in ("mu", "gamma", "nu"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive")
        for name in ("chi", "kappa"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be non-negative")

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.mu, self.chi, self.kappa, self.gamma, self.nu)


@dataclass(frozen=True, eq=False)
class MMPState:
    u: SpectralField
    omega: SpectralField
    b: SpectralField
    time: float = 0.0

    def __post_init__(self):
        g = self.u.grid
        if self.omega.grid != g or self.b.grid != g:
            raise GridMismatch("u, omega and b must share one grid")
        for name in ("u", "omega", "b"):
            if getattr(self, name).rank != (3,):
                raise ValueError(f"{name} must be a vector field")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def zeros(cls, grid: Grid, time: float = 0.0) -> "MMPState":
        z = SpectralField.zeros(grid)
        return cls(z, z, z, time)

    @classmethod
    def from_stack(cls, grid: Grid, arr: np.ndarray, time: float = 0.0) -> "MMPState":
        return cls(SpectralField(grid, arr[0]), SpectralField(grid, arr[1]), SpectralField(grid, arr[2]), time)

    def stack(self) -> np.ndarray:
        """Coefficients as one (3, 3, n, n, n) array: field, component, lattice."""
        return np.stack([self.u.coeffs, self.omega.coeffs, self.b.coeffs])

    def divergence_defect(self) -> float:
        """max over modes of |k.u| and |k.b| (omega is unconstrained)."""
        du = np.abs(divergence(self.u).coeffs)
        db = np.abs(divergence(self.b).coeffs)
        return float(max(du.max(), db.max()))

    def fields(self):
        return (self.u, self.omega, self.b)


@dataclass(frozen=True, eq=False)
class Tendency:
    du: SpectralField
    domega: SpectralField
    db: SpectralField

    def stack(self) -> np.ndarray:
        return np.stack([self.du.coeffs, self.domega.coeffs, self.db.coeffs])

    def __add__(self, other: "Tendency") -> "Tendency":
        return Tendency(self.du + other.du, self.domega + other.domega, self.db + other.db)


# ----------------------------------------------------------------------------
# quadratic terms


def advect(a: SpectralField, c: SpectralField) -> SpectralField:
    """(a.grad) c as div(c (x) a); exact for divergence-free a."""
    return divergence(outer_product(c, a))


def cross_gradient(a: SpectralField, c: SpectralField) -> SpectralField:
    """sum_l grad(a_l) x d_l c, dealiased.

    This is the commutator curl((a.grad)c) - (a.grad)curl(c) for
    divergence-free a.
    """
    grid = a.grid
    mask = grid.dealias_mask
    ga = ifft(gradient(SpectralField(grid, a.coeffs * mask)).coeffs)  # [l, m] = d_m a_l
    gc = ifft(gradient(SpectralField(grid, c.coeffs * mask)).coeffs)  # [n, l] = d_l c_n
    prod = np.einsum("imn,lmxyz,nlxyz->ixyz", EPS, ga, gc)
    return SpectralField(grid, fft(prod) * mask)


def nonlinear_terms(state: MMPState) -> Tendency:
    """Projected quadratic part of the tendency.

    Shares one physical-space evaluation of u, omega, b and uses the symmetry
    of u(x)u, b(x)b and the antisymmetry of the induction flux to cut the FFT
    count; :func:`advect` computes the same terms one at a time.
    """
    grid = state.grid
    mask = grid.dealias_mask
    kd = grid.k_deriv
    phys = ifft(state.stack() * mask)
    u, w, b = phys
    iu, ju = np.triu_indices(3)
    sym = np.stack([u[iu] * u[ju] - b[iu] * b[ju]])[0]  # 6 entries of u(x)u - b(x)b
    flux_w = w[:, None] * u[None, :]  # [j, k] = w_j u_k
    ind = np.stack([u[1] * b[2] - b[1] * u[2], u[2] * b[0] - b[2] * u[0], u[0] * b[1] - b[0] * u[1]])
    prods = fft(np.concatenate([sym, flux_w.reshape((9,) + grid.shape), ind])) * mask
    sym_hat = np.empty((3, 3) + grid.shape, dtype=np.complex128)
    sym_hat[iu, ju] = prods[:6]
    sym_hat[ju, iu] = prods[:6]
    flux_w_hat = prods[6:15].reshape((3, 3) + grid.shape)
    e_hat = prods[15:]  # u x b

    du = -1j * np.einsum("jkxyz,kxyz->jxyz", sym_hat, kd)
    dw = -1j * np.einsum("jkxyz,kxyz->jxyz", flux_w_hat, kd)
    # -(u.grad)b + (b.grad)u = div(u_j b_k - b_j u_k) = curl(u x b)
    kx, ky, kz = kd
    ex, ey, ez = e_hat
    db = 1j * np.stack([ky * ez - kz * ey, kz * ex - kx * ez, kx * ey - ky * ex])
    return Tendency(
        SpectralField(grid, leray_coeffs(du, grid)),
        SpectralField(grid, dw),
        SpectralField(grid, leray_coeffs(db, grid)),
    )


def nonlinear_terms_reference(state: MMPState) -> Tendency:
    """Term-by-term version of :func:`nonlinear_terms` built from :func:`advect`."""
    u, w, b = state.fields()
    du = leray_project(-advect(u, u) + advect(b, b))
    dw = -advect(u, w)
    db = leray_project(-advect(u, b) + advect(b, u))
    return Tendency(du, dw, db)


def linear_terms(state: MMPState, params: MMPParams) -> Tendency:
    mu, chi, kappa, gamma, nu = params.as_tuple()
    u, w, b = state.fields()
    du = chi * curl(w) + (mu + chi) * laplacian(u)
    grad_div = gradient(divergence(w))
    dw = gamma * laplacian(w) + kappa * grad_div - 2.0 * chi * w + chi * curl(u)
    db = nu * laplacian(b)
    return Tendency(du, dw, db)


def rhs(state: MMPState, params: MMPParams) -> Tendency:
    return nonlinear_terms(state) + linear_terms(state, params)


def curl_rhs(
    H: SpectralField,
    I: SpectralField,
    J: SpectralField,
    state: MMPState,
    params: MMPParams,
    tol: float = 1e-8,
) -> tuple[SpectralField, SpectralField, SpectralField]:
    """Tendencies of H = curl u, I = curl omega, J = curl b.

    The velocity-curl equation is the classical one,
    ``-(u.grad)H + (H.grad)u + (b.grad)J - (J.grad)b``. For I and J the
    stretching terms are the full commutators ``cross_gradient``: omega and
    the pair (u, b) are distinct fields, so ``curl((u.grad)omega)`` is not
    ``(u.grad)I - (H.grad)omega`` in general.
    """
    u, w, b = state.fields()
    for name, given, field in (("H", H, u), ("I", I, w), ("J", J, b)):
        if given.grid != u.grid:
            raise GridMismatch(f"{name} lives on a different grid")
        expect = curl(field)
        err = l2_norm(given - expect)
        if err > tol * max(1.0, l2_norm(expect)):
            raise ConsistencyViolation(f"{name} differs from the curl of the state by {err:.3e}")
    mu, chi, kappa, gamma, nu = params.as_tuple()
    dH = (
        -advect(u, H)
        + advect(H, u)
        + advect(b, J)
        - advect(J, b)
        + chi * curl(I)
        + (mu + chi) * laplacian(H)
    )
    dI = -advect(u, I) - cross_gradient(u, w) - 2.0 * chi * I + chi * curl(H) + gamma * laplacian(I)
    dJ = -advect(u, J) - cross_gradient(u, b) + advect(b, H) + cross_gradient(b, u) + nu * laplacian(J)
    return dH, dI, dJ


# ----------------------------------------------------------------------------
# energy identities


def energy_rate(state: MMPState, params: MMPParams) -> float:
    """Closed form of <rhs(state), state>; all transport terms cancel.

    -(mu+chi)|grad u|^2 - gamma|grad w|^2 - nu|grad b|^2 - kappa|div w|^2
    - 2 chi |w|^2 + 2 chi <curl u, w>
    """
    from .spectral import grad_norm_sq

    mu, chi, kappa, gamma, nu = params.as_tuple()
    u, w, b = state.fields()
    return (
        -(mu + chi) * grad_norm_sq(u)
        - gamma * grad_norm_sq(w)
        - nu * grad_norm_sq(b)
        - kappa * l2_norm(divergence(w)) ** 2
        - 2.0 * chi * l2_norm(w) ** 2
        + 2.0 * chi * inner(curl(u), w)
    )


def power(state: MMPState, params: MMPParams) -> float:
    """<rhs(state), state> evaluated directly."""
    t = rhs(state, params)
    return inner(t.du, state.u) + inner(t.domega, state.omega) + inner(t.db, state.b)


# ----------------------------------------------------------------------------
# reduced systems

ReductionMode = Literal["none", "navier_stokes", "mhd", "micropolar"]


@dataclass(frozen=True)
class Reduction:
    """Invariant subspace of a reduced system: these fields stay identically zero."""

    mode: str
    zero_fields: tuple[str, ...]

    def apply(self, state: MMPState) -> MMPState:
        if not self.zero_fields:
            return state
        z = SpectralField.zeros(state.grid)
        return replace(state, **{name: z for name in self.zero_fields})

    def violation(self, state: MMPState) -> float:
        return max((l2_norm(getattr(state, f)) for f in self.zero_fields), default=0.0)


_REDUCTIONS = {
    "none": (False, ()),
    "navier_stokes": (True, ("omega", "b")),
    "mhd": (True, ("omega",)),
    "micropolar": (False, ("b",)),
}


def reduce_mode(params: MMPParams, mode: str) -> tuple[MMPParams, Reduction]:
    """Parameters and state constraint of a reduced system.

    navier_stokes: chi = 0 with omega = b = 0; mhd: chi = 0 with omega = 0;
    micropolar: b = 0. Each constraint defines a subspace the full dynamics
    leaves invariant, so callers only need to zero the fields at t = 0.
    """
    try:
        zero_chi, fields = _REDUCTIONS[mode]
    except KeyError:
        raise ValueError(f"unknown reduction {mode!r}") from None
    if zero_chi:
        params = replace(params, chi=0.0)
    return params, Reduction(mode, fields)
