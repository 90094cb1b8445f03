"""Time integration: integrating-factor IMEX stepper and Picard successive approximation.

Both solvers share one exact per-mode propagator for the linear part. In each
Fourier mode the (u, omega) pair obeys a 6x6 system

    d/dt [u; w] = [[A, B], [B, C]] [u; w]
    A = -(mu+chi)|k|^2 I,  B = chi * i [k]_x,  C = -(gamma|k|^2 + 2 chi) I - kappa k k^T

which is Hermitian, so its exponential is formed from one batched
eigendecomposition. b decouples and decays by exp(-nu |k|^2 t).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .dynamics import MMPParams, MMPState, nonlinear_terms
from .errors import ConfigValidationError, Instability, NoConvergence
from .littlewood_paley import DyadicProfile, build_profile, lowpass
from .monitors import DiagnosticsRecord, DiagnosticsSeries
from .spectral import Grid, SpectralField, leray_coeffs, sup_norm

#: any field norm above this aborts the integration
OVERFLOW_GUARD = 1e12


class LinearPropagator:
    """Exact solution operator exp(L dt) of the linear part, one matrix per mode."""

    def __init__(self, grid: Grid, params: MMPParams, dt: float):
        self.grid = grid
        self.params = params
        self.dt = dt
        mu, chi, kappa, gamma, nu = params.as_tuple()
        n3 = grid.n**3
        k2 = grid.k2.reshape(n3)
        kd = grid.k_deriv.reshape(3, n3).T  # (modes, 3)
        eye = np.eye(3)
        C = -(gamma * k2 + 2.0 * chi)[:, None, None] * eye - kappa * kd[:, :, None] * kd[:, None, :]
        self.b_factor = np.exp(-nu * k2 * dt).reshape(grid.shape)
        if chi == 0.0:
            # decoupled: keep the off-diagonal blocks exactly zero
            self.uu = np.exp(-mu * k2 * dt)[:, None, None] * eye
            self.uw = self.wu = None
            self.ww = _expm_hermitian(C.astype(np.complex128), dt)
            return
        cross = np.zeros((n3, 3, 3))
        cross[:, 0, 1], cross[:, 0, 2] = -kd[:, 2], kd[:, 1]
        cross[:, 1, 0], cross[:, 1, 2] = kd[:, 2], -kd[:, 0]
        cross[:, 2, 0], cross[:, 2, 1] = -kd[:, 1], kd[:, 0]
        L = np.zeros((n3, 6, 6), dtype=np.complex128)
        L[:, :3, :3] = -((mu + chi) * k2)[:, None, None] * eye
        L[:, :3, 3:] = L[:, 3:, :3] = 1j * chi * cross
        L[:, 3:, 3:] = C
        E = _expm_hermitian(L, dt)
        self.uu, self.uw = E[:, :3, :3], E[:, :3, 3:]
        self.wu, self.ww = E[:, 3:, :3], E[:, 3:, 3:]

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Propagate a stacked (3, 3, n, n, n) coefficient array by dt."""
        n3 = self.grid.n**3
        u = v[0].reshape(3, n3)
        w = v[1].reshape(3, n3)
        out = np.empty_like(v)
        mv = lambda M, x: np.einsum("mab,bm->am", M, x)  # noqa: E731
        if self.uw is None:
            out[0] = (self.uu[:, 0, 0] * u).reshape(v[0].shape)
            out[1] = mv(self.ww, w).reshape(v[1].shape)
        else:
            out[0] = (mv(self.uu, u) + mv(self.uw, w)).reshape(v[0].shape)
            out[1] = (mv(self.wu, u) + mv(self.ww, w)).reshape(v[1].shape)
        out[2] = self.b_factor * v[2]
        return out


def _expm_hermitian(L: np.ndarray, dt: float) -> np.ndarray:
    lam, V = np.linalg.eigh(L)
    return np.einsum("mij,mj,mkj->mik", V, np.exp(lam * dt), V.conj())


@lru_cache(maxsize=16)
def propagator(grid: Grid, params: MMPParams, dt: float) -> LinearPropagator:
    return LinearPropagator(grid, params, dt)


# ----------------------------------------------------------------------------
# shared helpers


def _nonlinear_stack(grid: Grid, v: np.ndarray) -> np.ndarray:
    return nonlinear_terms(MMPState.from_stack(grid, v)).stack()


def _project(grid: Grid, v: np.ndarray) -> np.ndarray:
    v = v.copy()
    v[0] = leray_coeffs(v[0], grid)
    v[2] = leray_coeffs(v[2], grid)
    return v


def _guard(v: np.ndarray, t: float, last: MMPState):
    if not np.all(np.isfinite(v)):
        raise Instability("non-finite coefficients", time=t, last_state=last)
    peak = float(np.sqrt(np.max(np.sum(np.abs(v) ** 2, axis=(1, 2, 3, 4)))))
    if peak > OVERFLOW_GUARD:
        raise Instability(f"field norm {peak:.3e} exceeds overflow guard", time=t, last_state=last)


def hs_norm_stack(grid: Grid, v: np.ndarray, s: float) -> float:
    """H^s norm of the triple (u, omega, b) given as a stacked coefficient array."""
    w = (1.0 + grid.k2) ** s
    return float(np.sqrt(np.sum(w * np.abs(v) ** 2)))


def cfl_dt(state: MMPState, courant: float = 0.5) -> float:
    """Advective step bound courant * dx / max|u| (diffusion is integrated exactly)."""
    umax = max(sup_norm(state.u), sup_norm(state.b))
    return float("inf") if umax == 0 else courant * state.grid.dx / umax


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: tuple[MMPState, ...]

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        if len(times) != len(self.states) or len(times) == 0:
            raise ValueError("need one state per time node")
        if np.any(np.diff(times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", tuple(self.states))

    def __len__(self) -> int:
        return len(self.states)

    @property
    def final(self) -> MMPState:
        return self.states[-1]


# ----------------------------------------------------------------------------
# IMEX


def imex_step(state: MMPState, params: MMPParams, dt: float, nonlinear: bool = True) -> MMPState:
    """One integrating-factor Heun step.

    With E = exp(L dt) and N the projected quadratic terms:
        v*      = E (v + dt N(v))
        v_next  = E v + dt/2 (E N(v) + N(v*))
    ``nonlinear=False`` drops N, leaving the exact linear propagation.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    grid = state.grid
    E = propagator(grid, params, float(dt))
    v = state.stack()
    if nonlinear:
        n0 = _nonlinear_stack(grid, v)
        pred = E.apply(v + dt * n0)
        n1 = _nonlinear_stack(grid, pred)
        out = E.apply(v + 0.5 * dt * n0) + 0.5 * dt * n1
        out = _project(grid, out)
    else:
        out = E.apply(v)
    t = state.time + dt
    _guard(out, t, state)
    return MMPState.from_stack(grid, out, t)


Monitor = Callable[[MMPState], object]


def imex_integrate(
    state: MMPState,
    params: MMPParams,
    T: float,
    dt: float,
    monitors: Sequence[Monitor] = (),
    cadence: int = 10,
    stride: int = 1,
    on_step: Optional[Callable[[int, MMPState], None]] = None,
):
    """Fixed-step integration from ``state.time`` to ``state.time + T``.

    Monitors are called with the current state at step 0, every ``cadence``
    steps and at the final step. Every DiagnosticsRecord a monitor returns is
    collected, in order, into the returned DiagnosticsSeries, so at most one
    monitor should produce records; other return values are ignored. The trajectory keeps every
    ``stride``-th state plus the final one.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    if cadence < 1 or stride < 1:
        raise ValueError("cadence and stride must be positive")
    steps = int(round(T / dt)) if T > 0 else 0
    if steps and abs(steps * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T={T} is not a multiple of dt={dt}")

    records = []

    def observe(s: MMPState):
        for m in monitors:
            rec = m(s)
            if isinstance(rec, DiagnosticsRecord):
                records.append(rec)

    t0 = state.time
    times, states = [t0], [state]
    observe(state)
    for i in range(1, steps + 1):
        new = imex_step(state, params, dt)
        # recompute time from the step count so long runs do not drift
        state = MMPState(new.u, new.omega, new.b, t0 + i * dt)
        if on_step is not None:
            on_step(i, state)
        if i % cadence == 0 or i == steps:
            observe(state)
        if i % stride == 0 or i == steps:
            times.append(state.time)
            states.append(state)
    return Trajectory(np.array(times), tuple(states)), DiagnosticsSeries(tuple(records), params, state.grid)


# ----------------------------------------------------------------------------
# Picard successive approximation


@dataclass(frozen=True)
class PicardConfig:
    T: float
    M: int
    s: float = 2.0
    max_iters: int = 30
    cauchy_tol: float = 1e-10
    truncation_offset: int = 2

    def __post_init__(self):
        if not self.s > 1.5:
            raise ConfigValidationError("s must exceed 3/2")
        if not self.T > 0:
            raise ConfigValidationError("T must be positive")
        if self.M < 1:
            raise ConfigValidationError("M must be a positive integer")
        if self.max_iters < 1:
            raise ConfigValidationError("max_iters must be a positive integer")
        if not self.cauchy_tol > 0:
            raise ConfigValidationError("cauchy_tol must be positive")

    @property
    def dt(self) -> float:
        return self.T / self.M


@dataclass
class PicardReport:
    differences: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.differences)

    @property
    def ratios(self) -> list[float]:
        d = self.differences
        return [d[i] / d[i - 1] if d[i - 1] > 0 else 0.0 for i in range(1, len(d))]


def truncate_initial_data(
    u0: SpectralField,
    omega0: SpectralField,
    b0: SpectralField,
    n: int,
    profile: DyadicProfile,
    offset: int = 2,
) -> MMPState:
    """Apply the low-pass S_{n+offset} to all three fields."""
    j = n + offset
    if j > profile.j_max:
        return MMPState(u0, omega0, b0)
    return MMPState(lowpass(u0, j, profile), lowpass(omega0, j, profile), lowpass(b0, j, profile))


def estimate_T0(
    u0: SpectralField,
    omega0: SpectralField,
    b0: SpectralField,
    s: float,
    C0: float = 1.0,
    C1: float = 1.0,
) -> float:
    """Advisory existence horizon 1 / (4 C0 C1 ||(u0, omega0, b0)||_{H^s}^2)."""
    if not (C0 > 0 and C1 > 0):
        raise ValueError("C0 and C1 must be positive")
    v = np.stack([u0.coeffs, omega0.coeffs, b0.coeffs])
    norm2 = hs_norm_stack(u0.grid, v, s) ** 2
    return float("inf") if norm2 == 0 else 1.0 / (4.0 * C0 * C1 * norm2)


def picard_solve(
    u0: SpectralField,
    omega0: SpectralField,
    b0: SpectralField,
    params: MMPParams,
    config: PicardConfig,
    profile: Optional[DyadicProfile] = None,
    C0: float = 1.0,
    C1: float = 1.0,
) -> tuple[Trajectory, PicardReport]:
    """Successive approximations with frozen quadratic forcing.

    Iterate 0 is identically zero. Iterate n+1 starts from the low-passed data
    S_{n+offset} and solves the linear system exactly in time, with the
    quadratic terms of iterate n integrated by the trapezoid rule against the
    propagator:

        v_{m+1} = E v_m + dt/2 (E F_m + F_{m+1}),   F_m = N(iterate n at t_m).

    Stops once the sup over time nodes of the H^{s-1} distance between
    successive iterates drops below ``cauchy_tol``.
    """
    grid = u0.grid
    profile = profile or build_profile(grid)
    T0 = estimate_T0(u0, omega0, b0, config.s, C0, C1)
    if config.T > T0:
        warnings.warn(f"T={config.T} exceeds the estimated existence horizon {T0:.3g}", stacklevel=2)
    M, dt = config.M, config.dt
    E = propagator(grid, params, dt)
    prev = np.zeros((M + 1, 3, 3) + grid.shape, dtype=np.complex128)
    report = PicardReport()
    zero_prev = True
    for it in range(config.max_iters):
        data = truncate_initial_data(u0, omega0, b0, it, profile, config.truncation_offset)
        if zero_prev:
            forcing = np.zeros_like(prev)
        else:
            forcing = np.stack([_nonlinear_stack(grid, prev[m]) for m in range(M + 1)])
        new = np.empty_like(prev)
        new[0] = data.stack()
        for m in range(M):
            new[m + 1] = E.apply(new[m] + 0.5 * dt * forcing[m]) + 0.5 * dt * forcing[m + 1]
            new[m + 1] = _project(grid, new[m + 1])
            try:
                _guard(new[m + 1], (m + 1) * dt, MMPState.from_stack(grid, new[m], m * dt))
            except Instability as exc:
                report.differences.append(float("inf"))
                raise NoConvergence(f"iterate {it + 1} diverged: {exc}", report) from exc
        diff = max(hs_norm_stack(grid, new[m] - prev[m], config.s - 1.0) for m in range(M + 1))
        report.differences.append(diff)
        prev, zero_prev = new, False
        if diff < config.cauchy_tol:
            report.converged = True
            break
    if not report.converged and report.ratios and report.ratios[-1] >= 1.0:
        raise NoConvergence(
            f"successive differences stopped contracting after {report.iterations} iterations "
            f"(last ratio {report.ratios[-1]:.3g}); T is likely too large for the data",
            report,
        )
    times = np.arange(M + 1) * dt
    states = tuple(MMPState.from_stack(grid, prev[m], times[m]) for m in range(M + 1))
    return Trajectory(times, states), report
