"""Runtime diagnostics and regularity-criterion integrals.

A :class:`Diagnostics` monitor turns states into :class:`DiagnosticsRecord`
snapshots of norms; the analysis functions below operate on the resulting
time series. All time integrals use the trapezoid rule on the piecewise-linear
interpolant of the recorded values, so integrals over adjacent windows add up
exactly when the windows meet at a record time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .dynamics import MMPParams, MMPState
from .errors import ExponentOutOfRange, InsufficientData, WindowUnderflow
from .littlewood_paley import DyadicProfile, build_profile, delta_j
from .spectral import (
    Grid,
    curl,
    divergence,
    grad_norm_sq,
    gradient,
    inner,
    l2_norm,
    lp_norm,
    oversampled_sup,
    sup_norm,
)

#: slack for window endpoints that coincide with record times up to rounding
TIME_SLACK = 1e-12


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Norms of one state.

    l2_energy:   (|u|^2, |w|^2, |b|^2)
    dissipation: (|grad u|^2, |grad w|^2, |grad b|^2, |div w|^2, |w|^2)
    production:  <curl u, w>, the only sign-indefinite term of the energy balance
    hs_norms:    s -> H^s norm of the triple (u, w, b)
    curl_l2:     (|H|, |I|, |J|) with H, I, J the curls of u, w, b
    curl_sup:    (max|H|, max|J|) on the grid
    block_sups:  j -> max|Delta_j H| on the grid
    grad_lp:     p -> L^p norm of grad u
    """

    time: float
    l2_energy: tuple[float, float, float]
    dissipation: tuple[float, float, float, float, float]
    production: float = 0.0
    hs_norms: Mapping[float, float] = field(default_factory=dict)
    curl_l2: tuple[float, float, float] = (0.0, 0.0, 0.0)
    curl_sup: tuple[float, float] = (0.0, 0.0)
    block_sups: Mapping[int, float] = field(default_factory=dict)
    grad_lp: Mapping[float, float] = field(default_factory=dict)

    def __post_init__(self):
        values = [
            *self.l2_energy,
            *self.dissipation,
            *self.hs_norms.values(),
            *self.curl_l2,
            *self.curl_sup,
            *self.block_sups.values(),
            *self.grad_lp.values(),
        ]
        if not all(math.isfinite(v) and v >= 0 for v in values):
            raise ValueError(f"record at t={self.time} has negative or non-finite entries")
        if not math.isfinite(self.production):
            raise ValueError(f"record at t={self.time} has a non-finite production term")

    @property
    def energy(self) -> float:
        return float(sum(self.l2_energy))


class Diagnostics:
    """Monitor callable: state -> DiagnosticsRecord.

    ``hs`` lists the Sobolev indices to record, ``lp`` the exponents of
    the velocity-gradient L^p norms.
    """

    def __init__(self, profile: DyadicProfile, hs: Sequence[float] = (1.0, 2.0), lp: Sequence[float] = ()):
        self.profile = profile
        self.hs = tuple(float(s) for s in hs)
        self.lp = tuple(float(p) for p in lp)

    def __call__(self, state: MMPState) -> DiagnosticsRecord:
        u, w, b = state.fields()
        H, I, J = curl(u), curl(w), curl(b)
        grid = state.grid
        v = state.stack()
        hs = {s: float(np.sqrt(np.sum((1.0 + grid.k2) ** s * np.abs(v) ** 2))) for s in self.hs}
        grad_u = gradient(u) if self.lp else None
        return DiagnosticsRecord(
            time=float(state.time),
            l2_energy=(l2_norm(u) ** 2, l2_norm(w) ** 2, l2_norm(b) ** 2),
            dissipation=(
                grad_norm_sq(u),
                grad_norm_sq(w),
                grad_norm_sq(b),
                l2_norm(divergence(w)) ** 2,
                l2_norm(w) ** 2,
            ),
            production=inner(H, w),
            hs_norms=hs,
            curl_l2=(l2_norm(H), l2_norm(I), l2_norm(J)),
            curl_sup=(sup_norm(H), sup_norm(J)),
            block_sups={j: sup_norm(delta_j(H, j, self.profile)) for j in self.profile.blocks},
            grad_lp={p: lp_norm(grad_u, p) for p in self.lp},
        )


@dataclass(frozen=True, eq=False)
class DiagnosticsSeries:
    records: tuple[DiagnosticsRecord, ...]
    params: MMPParams
    grid: Grid

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        t = self.times
        if np.any(np.diff(t) <= 0):
            raise ValueError("diagnostics times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.records)

    @property
    def times(self) -> np.ndarray:
        return np.array([r.time for r in self.records], dtype=np.float64)

    def column(self, getter) -> np.ndarray:
        return np.array([getter(r) for r in self.records], dtype=np.float64)


# ----------------------------------------------------------------------------
# quadrature helpers


def _check_window(times: np.ndarray, t0: float, t1: float):
    if len(times) == 0:
        raise InsufficientData("empty diagnostics series")
    if t1 < t0:
        raise ValueError("window end precedes its start")
    slack = TIME_SLACK * max(1.0, abs(times[-1]))
    if t0 < times[0] - slack or t1 > times[-1] + slack:
        raise WindowUnderflow(f"window [{t0}, {t1}] is outside the covered span [{times[0]}, {times[-1]}]")


def window_integral(times: np.ndarray, values: np.ndarray, t0: float, t1: float) -> float:
    """Integral over [t0, t1] of the piecewise-linear interpolant (trapezoid on the nodes)."""
    _check_window(times, t0, t1)
    t0 = max(t0, times[0])
    t1 = min(t1, times[-1])
    if t1 <= t0:
        return 0.0
    inside = (times > t0) & (times < t1)
    t = np.concatenate([[t0], times[inside], [t1]])
    f = np.concatenate([[np.interp(t0, times, values)], values[inside], [np.interp(t1, times, values)]])
    return float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(t)))


def _cumulative_trapezoid(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    out = np.zeros_like(values)
    out[1:] = np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(times))
    return out


# ----------------------------------------------------------------------------
# energy ledger


@dataclass(frozen=True)
class EnergyLedgerReport:
    """Discrete energy bookkeeping for a series.

    ``residual`` is the exact balance E(t) - E(0) + 2 int D dt', whose
    dissipation D includes the sign-indefinite production term; it vanishes
    for the exact solution and measures quadrature plus time-stepping error.
    ``violation`` is the one-sided form E(t) + 2 int D_lower dt' - E(0), where
    D_lower <= D after Young's inequality on the production term; it should be
    non-positive up to ``tolerance``.
    """

    times: np.ndarray
    residual: np.ndarray
    violation: np.ndarray
    tolerance: float

    @property
    def max_abs_residual(self) -> float:
        return float(np.max(np.abs(self.residual)))

    @property
    def worst_violation(self) -> float:
        return float(np.max(self.violation))

    @property
    def holds(self) -> bool:
        return self.worst_violation <= self.tolerance


def energy_ledger(series: DiagnosticsSeries, c: float = 1.0) -> EnergyLedgerReport:
    if len(series) < 2:
        raise InsufficientData("energy ledger needs at least two records")
    mu, chi, kappa, gamma, nu = series.params.as_tuple()
    t = series.times
    E = series.column(lambda r: r.energy)
    d = np.array([r.dissipation for r in series.records])
    prod = series.column(lambda r: r.production)
    lower = mu * d[:, 0] + gamma * d[:, 1] + nu * d[:, 2] + kappa * d[:, 3] + chi * d[:, 4]
    exact = (mu + chi) * d[:, 0] + gamma * d[:, 1] + nu * d[:, 2] + kappa * d[:, 3] + 2 * chi * d[:, 4] - 2 * chi * prod
    residual = E - E[0] + 2.0 * _cumulative_trapezoid(t, exact)
    violation = E - E[0] + 2.0 * _cumulative_trapezoid(t, lower)
    h = float(np.max(np.diff(t)))
    tolerance = c * h**2 * (t[-1] - t[0]) * float(np.max(exact))
    return EnergyLedgerReport(t, residual, violation, tolerance)


# ----------------------------------------------------------------------------
# frequency-localized blow-up indicator and classical criteria


class BlowupReport(NamedTuple):
    delta: float
    argmax_j: int
    block_range: tuple[int, int]


def blowup_indicator(
    series: DiagnosticsSeries,
    epsilon: float,
    profile: Optional[DyadicProfile] = None,
    blocks: Optional[Iterable[int]] = None,
) -> BlowupReport:
    """sup over blocks j of int_{T-eps}^{T} max|Delta_j curl u| dt, T the last record time.

    The supremum runs over the grid-resolvable blocks of ``profile`` (or the
    explicit ``blocks``), and the report states that range.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if len(series) == 0:
        raise InsufficientData("empty diagnostics series")
    t = series.times
    T = t[-1]
    if blocks is None:
        profile = profile or build_profile(series.grid)
        blocks = profile.blocks
    blocks = sorted(blocks)
    if not blocks:
        raise ValueError("no blocks to scan")
    _check_window(t, T - epsilon, T)
    best, best_j = -1.0, blocks[0]
    for j in blocks:
        vals = series.column(lambda r: r.block_sups.get(j, 0.0))
        val = window_integral(t, vals, T - epsilon, T)
        if val > best:
            best, best_j = val, j
    return BlowupReport(best, best_j, (blocks[0], blocks[-1]))


class BKMIntegral(NamedTuple):
    velocity: float
    magnetic: float


def bkm_integral(series: DiagnosticsSeries, t0: float, t1: float) -> BKMIntegral:
    """Trapezoid integrals of max|curl u| and max|curl b| over [t0, t1]."""
    t = series.times
    _check_window(t, t0, t1)
    vel = window_integral(t, series.column(lambda r: r.curl_sup[0]), t0, t1)
    mag = window_integral(t, series.column(lambda r: r.curl_sup[1]), t0, t1)
    return BKMIntegral(vel, mag)


def zhou_exponent(p: float) -> float:
    """Time exponent q = 2p/(2p - 3) on the scaling line 2/q + 3/p = 2."""
    if not (1.5 < p < math.inf):
        raise ExponentOutOfRange(f"p={p} must lie in (3/2, inf)")
    return 2.0 * p / (2.0 * p - 3.0)


def zhou_integral(series: DiagnosticsSeries, p: float, t0: float, t1: float) -> float:
    """Trapezoid integral of ||grad u||_p^q, q = 2p/(2p-3), over [t0, t1]."""
    q = zhou_exponent(p)
    t = series.times
    _check_window(t, t0, t1)
    try:
        vals = series.column(lambda r: r.grad_lp[float(p)] ** q)
    except KeyError:
        raise InsufficientData(f"records carry no L^{p} gradient norm; add p={p} to the monitor") from None
    return window_integral(t, vals, t0, t1)


def zeta_sup(series: DiagnosticsSeries, t0: float, t1: float) -> float:
    """max over records in [t0, t1] of |H| + |I| + |J|."""
    t = series.times
    _check_window(t, t0, t1)
    sel = [sum(r.curl_l2) for r in series.records if t0 - TIME_SLACK <= r.time <= t1 + TIME_SLACK]
    return float(max(sel, default=0.0))


def adaptive_cutoff_N(H_l2: float, I_l2: float, J_l2: float, params: MMPParams, C: float = 1.0) -> int:
    """floor((2/log 2) log+(C (|H| + |I| + |J|) / min(mu, gamma, nu))) + 1, log+(x) = log(x + e)."""
    if not C > 0:
        raise ValueError("C must be positive")
    if min(H_l2, I_l2, J_l2) < 0:
        raise ValueError("curl norms must be non-negative")
    visc = min(params.mu, params.gamma, params.nu)
    x = C * (H_l2 + I_l2 + J_l2) / visc
    return int(math.floor(2.0 / math.log(2.0) * math.log(x + math.e))) + 1


# ----------------------------------------------------------------------------
# sampling bias


def sampling_bias(state: MMPState, profile: DyadicProfile, factor: int = 4) -> dict[int, tuple[float, float]]:
    """Per block: (grid max, oversampled max) of |Delta_j curl u|.

    The ratio quantifies how much the grid maxima used by the monitors
    underestimate the sup norm of each block.
    """
    H = curl(state.u)
    out = {}
    for j in profile.blocks:
        B = delta_j(H, j, profile)
        out[j] = (sup_norm(B), oversampled_sup(B, factor))
    return out
