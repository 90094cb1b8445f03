"""Self-test suites behind ``mmpflow verify``.

Each suite evaluates module invariants on small grids and returns one
:class:`Check` per invariant with its measured value and tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dynamics import (
    MMPParams,
    MMPState,
    advect,
    curl_rhs,
    energy_rate,
    power,
    rhs,
)
from .integrate import PicardConfig, hs_norm_stack, imex_integrate, picard_solve
from .initial import random_seeded, taylor_green
from .littlewood_paley import bernstein_scaling_check, build_profile, decompose, partition_defect
from .monitors import Diagnostics, adaptive_cutoff_N, bkm_integral
from .spectral import (
    Grid,
    SpectralField,
    curl,
    divergence,
    fft,
    grad_norm_sq,
    ifft,
    inner,
    l2_norm,
    leray_project,
    outer_product,
)

GRID_SIZES = (8, 16)
PARAMS = MMPParams(mu=0.05, chi=0.02, kappa=0.03, gamma=0.04, nu=0.05)


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    tolerance: float
    passed: bool

    @classmethod
    def below(cls, name: str, measured: float, tolerance: float) -> "Check":
        return cls(name, float(measured), float(tolerance), bool(measured < tolerance))

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<48s} measured={self.measured:.3e}  tol={self.tolerance:.1e}"


def _random_state(grid: Grid, seed: int) -> MMPState:
    return random_seeded(grid, seed, kmax=grid.n / 3, amp_u=1.0, amp_omega=0.7, amp_b=0.5)


def suite_spectral() -> list[Check]:
    out = []
    for n in GRID_SIZES:
        g = Grid(n)
        rng = np.random.default_rng(n)
        f = rng.standard_normal((3,) + g.shape)
        F = SpectralField(g, fft(f))
        out.append(Check.below(f"n={n} round trip", np.max(np.abs(ifft(F.coeffs) - f)), 1e-12))
        out.append(Check.below(f"n={n} Parseval", abs(np.mean(f**2) * 3 - l2_norm(F) ** 2), 1e-12))
        P = leray_project(F)
        out.append(Check.below(f"n={n} Leray divergence", np.max(np.abs(divergence(P).coeffs)), 1e-12))
        out.append(Check.below(f"n={n} Leray idempotent", np.max(np.abs(leray_project(P).coeffs - P.coeffs)), 1e-14))
        # factors supported in |i| < n/6 have products that fit the 2/3 band: no truncation acts
        keep = 6 * np.abs(g.index_axis) < n
        band = keep[:, None, None] & keep[None, :, None] & keep[None, None, :]
        A = SpectralField(g, F.coeffs * band)
        B = SpectralField(g, fft(rng.standard_normal((3,) + g.shape)) * band)
        exact = fft(ifft(A.coeffs)[:, None] * ifft(B.coeffs)[None, :])
        err = np.max(np.abs(outer_product(A, B).coeffs - exact))
        out.append(Check.below(f"n={n} dealiased product (band-limited)", err, 1e-13))
    return out


def suite_lp() -> list[Check]:
    out = []
    radii = np.concatenate([np.geomspace(1e-3, 1e3, 10_000), np.linspace(0.5, 4.0, 10_000)])
    low, full = partition_defect(radii)
    out.append(Check.below("partition of unity (low-pass + blocks)", low, 1e-12))
    out.append(Check.below("partition of unity (all blocks)", full, 1e-12))
    for n in GRID_SIZES:
        g = Grid(n)
        prof = build_profile(g)
        F = SpectralField(g, fft(np.random.default_rng(n).standard_normal(g.shape)))
        err = np.max(np.abs(decompose(F, prof).reconstruct().coeffs - F.coeffs))
        out.append(Check.below(f"n={n} block reconstruction", err, 1e-12))
    prof = build_profile(Grid(32))
    for p, q in ((2, 2), (2, np.inf)):
        rep = bernstein_scaling_check(prof, p, q)
        out.append(Check.below(f"n=32 Bernstein slope (p={p}, q={q}) rel. error", rep.relative_error, 0.05))
    return out


def suite_dynamics() -> list[Check]:
    out = []
    for n in GRID_SIZES:
        g = Grid(n)
        st = _random_state(g, n)
        t = rhs(st, PARAMS)
        div = max(np.max(np.abs(divergence(t.du).coeffs)), np.max(np.abs(divergence(t.db).coeffs)))
        out.append(Check.below(f"n={n} solenoidal tendency", div, 1e-10))
        out.append(Check.below(f"n={n} energy identity", abs(power(st, PARAMS) - energy_rate(st, PARAMS)), 1e-10))
        u, w, b = st.fields()
        out.append(Check.below(f"n={n} curl cross-term symmetry", abs(inner(curl(w), u) - inner(curl(u), w)), 1e-12))
        mag = inner(advect(b, b), u) + inner(advect(b, u), b)
        out.append(Check.below(f"n={n} magnetic cancellation", abs(mag), 1e-11))
        dH, dI, dJ = curl_rhs(curl(u), curl(w), curl(b), st, PARAMS)
        err = max(
            np.max(np.abs(dH.coeffs - curl(t.du).coeffs)),
            np.max(np.abs(dI.coeffs - curl(t.domega).coeffs)),
            np.max(np.abs(dJ.coeffs - curl(t.db).coeffs)),
        )
        out.append(Check.below(f"n={n} curl system = curl of rhs", err, 1e-10))
    return out


def suite_picard() -> list[Check]:
    g = Grid(16)
    st = taylor_green(g, 0.5, 0.15, 0.25)
    cfg = PicardConfig(T=0.05, M=25, s=2.0, cauchy_tol=1e-12)
    traj, report = picard_solve(st.u, st.omega, st.b, PARAMS, cfg)
    out = [Check.below("picard converged (0 = yes)", 0.0 if report.converged else 1.0, 0.5)]
    tail = report.ratios[1:]
    out.append(Check.below("picard contraction ratio after iteration 2", max(tail, default=0.0), 0.5))
    ref, _ = imex_integrate(st, PARAMS, cfg.T, cfg.dt)
    gap = max(hs_norm_stack(g, a.stack() - b.stack(), cfg.s - 1) for a, b in zip(traj.states, ref.states))
    out.append(Check.below("picard vs imex H^(s-1) gap", gap, max(10 * cfg.dt**2, 10 * cfg.cauchy_tol)))
    return out


def suite_monitors() -> list[Check]:
    out = [Check.below("adaptive cutoff at zero curl minus 3", abs(adaptive_cutoff_N(0, 0, 0, MMPParams(1, 0, 0, 1, 1)) - 3), 0.5)]
    g = Grid(16)
    st = _random_state(g, 3)
    out.append(
        Check.below("|grad u| - |curl u| (divergence-free u)", abs(np.sqrt(grad_norm_sq(st.u)) - l2_norm(curl(st.u))), 1e-12)
    )
    _, series = imex_integrate(st, PARAMS, 0.04, 0.004, monitors=[Diagnostics(build_profile(g))], cadence=1)
    t = series.times
    parts = bkm_integral(series, t[0], t[4]).velocity + bkm_integral(series, t[4], t[-1]).velocity
    whole = bkm_integral(series, t[0], t[-1]).velocity
    out.append(Check.below("BKM integral additivity", abs(parts - whole), 1e-12))
    return out


SUITES: dict[str, Callable[[], list[Check]]] = {
    "spectral": suite_spectral,
    "lp": suite_lp,
    "dynamics": suite_dynamics,
    "picard": suite_picard,
    "monitors": suite_monitors,
}


def run_suite(name: str) -> list[Check]:
    if name == "all":
        return [c for suite in SUITES.values() for c in suite()]
    try:
        return SUITES[name]()
    except KeyError:
        raise ValueError(f"unknown suite {name!r}") from None
