"""Tests for diagnostics records, the energy ledger and regularity-criterion integrals."""

from dataclasses import replace

import numpy as np
import pytest

import oracles
from conftest import random_state, random_vector
from mmpflow.dynamics import MMPParams, MMPState
from mmpflow.errors import ExponentOutOfRange, InsufficientData, WindowUnderflow
from mmpflow.initial import single_mode, taylor_green
from mmpflow.integrate import imex_integrate
from mmpflow.littlewood_paley import build_profile, delta_j
from mmpflow.monitors import (
    Diagnostics,
    DiagnosticsRecord,
    DiagnosticsSeries,
    adaptive_cutoff_N,
    bkm_integral,
    blowup_indicator,
    energy_ledger,
    sampling_bias,
    window_integral,
    zeta_sup,
    zhou_exponent,
    zhou_integral,
)
from mmpflow.spectral import Grid, curl, grad_norm_sq, l2_norm, sup_norm


def run_series(state, params, T, dt, cadence=1, lp=(2.0,)):
    diag = Diagnostics(build_profile(state.grid), lp=lp)
    _, series = imex_integrate(state, params, T, dt, monitors=[diag], cadence=cadence)
    return series


def frozen_series(state, params, times, lp=(2.0,)):
    """Artificial series repeating the record of one state at several times."""
    rec = Diagnostics(build_profile(state.grid), lp=lp)(state)
    return DiagnosticsSeries(tuple(replace(rec, time=float(t)) for t in times), params, state.grid)


@pytest.fixture
def decaying(params):
    return run_series(taylor_green(Grid(16), 1.0, 0.3, 0.5), params, 0.2, 0.005)


class TestRecords:
    def test_fields_match_direct_norms(self, grid16, rng, params):
        st = random_state(grid16, rng)
        rec = Diagnostics(build_profile(grid16), hs=(1.0,), lp=(2.0, 3.0))(st)
        assert rec.l2_energy[2] == pytest.approx(l2_norm(st.b) ** 2)
        assert rec.dissipation[1] == pytest.approx(grad_norm_sq(st.omega))
        assert rec.curl_l2[0] == pytest.approx(l2_norm(curl(st.u)))
        assert rec.curl_sup[1] == pytest.approx(sup_norm(curl(st.b)))
        assert rec.grad_lp[2.0] == pytest.approx(np.sqrt(rec.dissipation[0]), rel=1e-12)
        prof = build_profile(grid16)
        assert rec.block_sups[2] == pytest.approx(sup_norm(delta_j(curl(st.u), 2, prof)))

    def test_rejects_negative_entries(self):
        with pytest.raises(ValueError):
            DiagnosticsRecord(0.0, (1.0, -1.0, 0.0), (0.0,) * 5)
        DiagnosticsRecord(0.0, (1.0, 1.0, 0.0), (0.0,) * 5, production=-3.0)

    def test_series_times_strictly_increasing(self, grid8, params):
        rec = DiagnosticsRecord(0.0, (0.0,) * 3, (0.0,) * 5)
        with pytest.raises(ValueError):
            DiagnosticsSeries((rec, rec), params, grid8)

    def test_gradient_equals_curl_for_solenoidal(self, grid16, rng):
        """|grad u| = |curl u| for divergence-free u without Nyquist-plane content."""
        u = random_vector(grid16, rng, dealiased=True)
        assert abs(np.sqrt(grad_norm_sq(u)) - l2_norm(curl(u))) < 1e-12


class TestEnergyLedger:
    def test_zero_trajectory(self, grid8, params):
        series = frozen_series(MMPState.zeros(grid8), params, [0.0, 0.5, 1.0])
        rep = energy_ledger(series)
        assert rep.max_abs_residual == 0.0 and rep.worst_violation == 0.0 and rep.holds

    def test_needs_two_records(self, grid8, params):
        with pytest.raises(InsufficientData):
            energy_ledger(frozen_series(MMPState.zeros(grid8), params, [0.0]))

    def test_pure_diffusion_closes(self, grid8):
        """Single-mode decay: trapezoid error h^2/12 * E'' * T stays below 1e-10."""
        params = MMPParams(mu=0.01, chi=0.0, kappa=0.0, gamma=0.01, nu=0.01)
        st = single_mode(grid8, (1, 0, 0), 1.0, 0.0, 0.0)
        rep = energy_ledger(run_series(st, params, 0.1, 1e-3))
        assert rep.max_abs_residual < 1e-10
        assert rep.holds

    def test_inequality_holds_on_coupled_run(self, params):
        series = run_series(taylor_green(Grid(16), 1.0, 0.3, 0.5), params, 0.1, 1e-3, cadence=1)
        rep = energy_ledger(series)
        assert rep.worst_violation < 1e-8 * 0.1
        assert rep.max_abs_residual < 1e-7


class TestBlowupIndicator:
    def test_zero_trajectory(self, grid8, params):
        rep = blowup_indicator(frozen_series(MMPState.zeros(grid8), params, [0, 1, 2]), 1.0)
        assert rep.delta == 0.0

    def test_frozen_single_mode(self, grid16, params):
        st = single_mode(grid16, (0, 2, 0), 1.0)
        times = np.linspace(0, 1, 11)
        series = frozen_series(st, params, times)
        prof = build_profile(grid16)
        endpoint = sup_norm(delta_j(curl(st.u), 1, prof))
        for eps in (0.1, 0.35, 1.0):
            rep = blowup_indicator(series, eps, prof)
            assert rep.argmax_j == 1
            assert rep.delta == pytest.approx(eps * endpoint, rel=1e-14)
            assert rep.block_range == (prof.j_min, prof.j_max)

    def test_window_underflow(self, decaying):
        with pytest.raises(WindowUnderflow):
            blowup_indicator(decaying, 0.3)

    def test_monotone_in_epsilon(self, decaying):
        eps = np.linspace(0.001, 0.2, 40)
        deltas = [blowup_indicator(decaying, e).delta for e in eps]
        assert np.all(np.diff(deltas) >= 0)

    def test_split_range_equals_full(self, decaying):
        prof = build_profile(decaying.grid)
        full = blowup_indicator(decaying, 0.1, prof).delta
        js = list(prof.blocks)
        lo = blowup_indicator(decaying, 0.1, blocks=js[: len(js) // 2]).delta
        hi = blowup_indicator(decaying, 0.1, blocks=js[len(js) // 2 :]).delta
        assert max(lo, hi) == full

    def test_ratio_tends_to_endpoint(self, decaying):
        prof = build_profile(decaying.grid)
        rec = decaying.records[-1]
        eps = np.array([0.04, 0.02, 0.01])
        ratios = np.array([blowup_indicator(decaying, e, prof).delta for e in eps]) / eps
        j_star = blowup_indicator(decaying, 0.01, prof).argmax_j
        limit = np.polyval(np.polyfit(eps, ratios, 2), 0.0)
        assert limit == pytest.approx(rec.block_sups[j_star], rel=0.02)


class TestClassicalIntegrals:
    def test_bkm_zero_and_constant(self, grid16, params):
        z = frozen_series(MMPState.zeros(grid16), params, [0, 1])
        assert bkm_integral(z, 0, 1) == (0.0, 0.0)
        st = taylor_green(grid16, 1.0, 0.0, 0.5)
        series = frozen_series(st, params, np.linspace(0, 2, 5))
        vel, mag = bkm_integral(series, 0.25, 1.75)
        assert vel == pytest.approx(1.5 * sup_norm(curl(st.u)), rel=1e-14)
        assert mag == pytest.approx(1.5 * sup_norm(curl(st.b)), rel=1e-14)

    def test_bkm_against_simpson(self, params):
        series = run_series(random_state(Grid(16), np.random.default_rng(5)), params, 0.2, 0.005, cadence=2)
        t = series.times
        vals = series.column(lambda r: r.curl_sup[0])
        assert bkm_integral(series, t[0], t[-1]).velocity == pytest.approx(oracles.simpson(t, vals), rel=0.01)

    def test_bkm_additivity(self, decaying):
        t = decaying.times
        a = bkm_integral(decaying, t[0], t[7]).velocity + bkm_integral(decaying, t[7], t[-1]).velocity
        assert abs(a - bkm_integral(decaying, t[0], t[-1]).velocity) < 1e-12

    def test_window_outside_span(self, decaying):
        with pytest.raises(WindowUnderflow):
            bkm_integral(decaying, -0.1, 0.1)

    def test_zhou_exponent(self):
        assert zhou_exponent(2.0) == 4.0
        assert zhou_exponent(3.0) == 2.0
        for p in (1.5, 1.0, np.inf):
            with pytest.raises(ExponentOutOfRange):
                zhou_exponent(p)

    def test_zhou_p2_is_fourth_power_of_gradient(self, decaying):
        t = decaying.times
        direct = window_integral(t, decaying.column(lambda r: r.dissipation[0] ** 2), t[0], t[-1])
        assert zhou_integral(decaying, 2.0, t[0], t[-1]) == pytest.approx(direct, rel=1e-12)

    def test_zhou_amplitude_scaling(self, grid16, params):
        st = single_mode(grid16, (1, 1, 0), 1.0)
        base = zhou_integral(frozen_series(st, params, [0, 1]), 2.0, 0, 1)
        scaled = zhou_integral(frozen_series(MMPState(st.u * 3, st.omega, st.b), params, [0, 1]), 2.0, 0, 1)
        assert scaled == pytest.approx(81 * base, rel=1e-12)

    def test_zhou_zero_and_missing_exponent(self, grid8, params):
        z = frozen_series(MMPState.zeros(grid8), params, [0, 1])
        assert zhou_integral(z, 2.0, 0, 1) == 0.0
        with pytest.raises(InsufficientData):
            zhou_integral(z, 3.0, 0, 1)


class TestAdaptiveCutoff:
    def test_zero_curl(self):
        assert adaptive_cutoff_N(0, 0, 0, MMPParams(1, 0, 0, 1, 1), C=1.0) == 3

    def test_monotone(self, params):
        grid = np.linspace(0, 50, 101)
        Ns = [adaptive_cutoff_N(x, 1.0, 2.0, params) for x in grid]
        assert all(a <= b for a, b in zip(Ns, Ns[1:]))
        visc = [adaptive_cutoff_N(3, 1, 2, MMPParams(m, 0, 0, m, m)) for m in (0.01, 0.1, 1, 10)]
        assert all(a >= b for a, b in zip(visc, visc[1:]))

    def test_slope_two_per_doubling(self, params):
        base = adaptive_cutoff_N(1e3, 1e3, 1e3, params)
        top = adaptive_cutoff_N(1e3 * 2**20, 1e3 * 2**20, 1e3 * 2**20, params)
        assert abs((top - base) - 40) <= 1


class TestZeta:
    def test_zero(self, grid8, params):
        assert zeta_sup(frozen_series(MMPState.zeros(grid8), params, [0, 1]), 0, 1) == 0.0

    def test_decaying_run_peaks_at_start(self, decaying):
        t = decaying.times
        assert zeta_sup(decaying, t[3], t[-1]) == pytest.approx(sum(decaying.records[3].curl_l2))

    def test_brute_force_scan(self, grid8, params, rng):
        recs = []
        for i, t in enumerate(np.sort(rng.uniform(0, 1, 30))):
            recs.append(DiagnosticsRecord(float(t), (0,) * 3, (0,) * 5, curl_l2=tuple(rng.uniform(0, 5, 3))))
        series = DiagnosticsSeries(tuple(recs), params, grid8)
        lo, hi = recs[4].time, recs[20].time
        assert zeta_sup(series, lo, hi) == max(sum(r.curl_l2) for r in recs[4:21])


def test_sampling_bias_grid_max_is_lower_bound(grid16, rng):
    st = random_state(grid16, rng)
    for j, (grid_max, fine_max) in sampling_bias(st, build_profile(grid16)).items():
        assert grid_max <= fine_max * (1 + 1e-12)
