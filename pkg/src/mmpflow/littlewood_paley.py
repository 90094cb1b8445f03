"""Dyadic frequency decomposition on the periodic lattice.

The radial profile pair is built from the C-infinity transition
``theta(t) = exp(-1/t)``:

    ramp(t) = theta(t) / (theta(t) + theta(1 - t))
    chi(r)  = 1 - ramp((r - 3/4) / (1/4))          # 1 on [0, 3/4], 0 from r = 1
    phi(r)  = chi(r / 2) - chi(r)                   # support [3/4, 2], equal to 1 on [1, 3/2]

Telescoping gives ``chi(r) + sum_{j>=0} phi(2^-j r) = 1`` identically, and the
annulus of block j sits inside ``3/4 * 2^j <= |k| <= 8/3 * 2^j``.

Blocks are Fourier multipliers ``phi(2^-j |k|)``. On a 2*pi box the lowest
nonempty block is j = 0 (phi(1) = 1, so the |k| = 1 shell belongs entirely to
block 0) and the low-pass below it, ``S_0``, retains only the mean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import BlockOutOfRange, InsufficientRange, UnsupportedExponent
from .spectral import (
    Grid,
    SpectralField,
    gradient,
    l2_norm,
    oversampled_sup,
    sup_norm,
    symmetrize,
)

CHI_INNER = 0.75
CHI_OUTER = 1.0


def smooth_ramp(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=np.float64)
    pos = t > 0
    below = t < 1
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(pos, np.exp(-1.0 / np.where(pos, t, 1.0)), 0.0)
        b = np.where(below, np.exp(-1.0 / np.where(below, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def chi(r):
    """Low-pass radial profile, support ``|xi| <= 1`` (inside the ball of radius 4/3)."""
    return 1.0 - smooth_ramp((np.asarray(r, dtype=np.float64) - CHI_INNER) / (CHI_OUTER - CHI_INNER))


def phi(r):
    """Annular radial profile, support ``3/4 <= |xi| <= 2``."""
    r = np.asarray(r, dtype=np.float64)
    return chi(0.5 * r) - chi(r)


@dataclass(frozen=True, eq=False)
class DyadicProfile:
    """Partition of unity bound to one grid, with its resolvable block range.

    ``j_min`` is the lowest block holding a nonzero lattice wavenumber and
    ``j_max`` the highest; every block outside ``[j_min, j_max]`` vanishes on
    the lattice. ``j_full`` is the highest block whose annulus lies entirely
    inside the Nyquist cube (blocks above it are clipped by the cube corners).
    """

    grid: Grid
    j_min: int
    j_max: int
    j_full: int
    _cache: dict = field(default_factory=dict, repr=False)

    chi = staticmethod(chi)
    phi = staticmethod(phi)

    @property
    def blocks(self) -> range:
        return range(self.j_min, self.j_max + 1)

    def block_multiplier(self, j: int) -> np.ndarray:
        key = ("phi", j)
        if key not in self._cache:
            self._cache[key] = phi(self.grid.kmag * 2.0**-j)
        return self._cache[key]

    def lowpass_multiplier(self, j: int) -> np.ndarray:
        key = ("chi", j)
        if key not in self._cache:
            self._cache[key] = chi(self.grid.kmag * 2.0**-j)
        return self._cache[key]

    def check_block(self, j: int):
        if not self.j_min <= j <= self.j_max:
            raise BlockOutOfRange(f"block {j} outside resolvable range [{self.j_min}, {self.j_max}]")


def build_profile(grid: Grid) -> DyadicProfile:
    unit = grid.unit
    j_min = int(np.floor(np.log2(unit)))
    # block j+1 is empty once its inner edge 3/4 * 2^(j+1) clears the cube corner
    j_max = j_min
    while CHI_INNER * 2.0 ** (j_max + 1) < grid.kmax:
        j_max += 1
    j_full = j_min - 1
    while 2.0 * 2.0 ** (j_full + 1) <= grid.kmax_inf:
        j_full += 1
    return DyadicProfile(grid, j_min, j_max, j_full)


def partition_defect(radii, j_lo: int = -64, j_hi: int = 64) -> tuple[float, float]:
    """Max deviations of ``chi + sum_{j>=0} phi_j`` and ``sum_j phi_j`` from 1.

    The annulus sum is truncated to ``[j_lo, j_hi]``; both ends are far
    outside the support for any radius in ``[2^j_lo, 2^j_hi]``.
    """
    r = np.asarray(radii, dtype=np.float64)
    low = chi(r) + sum(phi(r * 2.0**-j) for j in range(0, j_hi + 1))
    full = sum(phi(r * 2.0**-j) for j in range(j_lo, j_hi + 1))
    return float(np.max(np.abs(low - 1.0))), float(np.max(np.abs(full - 1.0)))


def delta_j(F: SpectralField, j: int, profile: DyadicProfile) -> SpectralField:
    profile.check_block(j)
    return SpectralField(F.grid, F.coeffs * profile.block_multiplier(j))


def lowpass(F: SpectralField, j: int, profile: DyadicProfile) -> SpectralField:
    """S_j = sum of blocks below j, multiplier chi(2^-j |k|). Defined for every integer j."""
    return SpectralField(F.grid, F.coeffs * profile.lowpass_multiplier(j))


@dataclass(frozen=True)
class BlockDecomposition:
    profile: DyadicProfile
    blocks: Mapping[int, SpectralField]
    lowpass_j0: SpectralField

    def reconstruct(self) -> SpectralField:
        out = self.lowpass_j0
        for j in sorted(self.blocks):
            out = out + self.blocks[j]
        return out


def decompose(F: SpectralField, profile: DyadicProfile) -> BlockDecomposition:
    blocks = {j: delta_j(F, j, profile) for j in profile.blocks}
    return BlockDecomposition(profile, blocks, lowpass(F, profile.j_min, profile))


def block_sup_norm(F: SpectralField, j: int, profile: DyadicProfile) -> float:
    """Grid max of |Delta_j F|."""
    return sup_norm(delta_j(F, j, profile))


def _block_norm(B: SpectralField, p) -> float:
    if p == 2:
        return l2_norm(B)
    return sup_norm(B)


def besov_norm(F: SpectralField, s: float, p, q, profile: DyadicProfile) -> float:
    """Homogeneous Besov norm over the resolvable blocks; p, q in {2, inf}."""
    for name, e in (("p", p), ("q", q)):
        if e != 2 and not np.isinf(e):
            raise UnsupportedExponent(f"{name}={e} not supported (use 2 or inf)")
    terms = np.array([2.0 ** (j * s) * _block_norm(delta_j(F, j, profile), p) for j in profile.blocks])
    if np.isinf(q):
        return float(np.max(terms, initial=0.0))
    return float(np.sqrt(np.sum(terms**2)))


def sobolev_hs(F: SpectralField, s: float) -> float:
    """(sum (1+|k|^2)^s |fhat|^2)^(1/2)."""
    w = (1.0 + F.grid.k2) ** s
    return float(np.sqrt(np.sum(w * np.abs(F.coeffs) ** 2)))


def sobolev_hs_dot(F: SpectralField, s: float) -> float:
    """Homogeneous version, k = 0 excluded."""
    k2 = F.grid.k2
    w = np.where(k2 > 0, np.where(k2 > 0, k2, 1.0) ** s, 0.0)
    return float(np.sqrt(np.sum(w * np.abs(F.coeffs) ** 2)))


# ----------------------------------------------------------------------------
# Bernstein scaling


@dataclass(frozen=True)
class BernsteinReport:
    p: float
    q: float
    order: int
    blocks: tuple[int, ...]
    slopes: tuple[float, ...]  # one fitted slope per trial
    expected: float

    @property
    def slope(self) -> float:
        return float(np.mean(self.slopes))

    @property
    def relative_error(self) -> float:
        return abs(self.slope - self.expected) / abs(self.expected)


def _template(grid: Grid, j: int, amps, shifts) -> SpectralField:
    """Fixed template spectrum rescaled into block j.

    ``G(xi) = phi(|xi|) * sum_m a_m exp(i xi.c_m)`` evaluated at ``xi = 2^-j k``:
    a sum of shifted copies of the block kernel, concentrated within 2^-j of
    the origin in physical space.
    """
    xi = grid.k * 2.0**-j
    phase = np.einsum("mi,ixyz->mxyz", shifts, xi)
    bump = phi(np.sqrt(np.sum(xi**2, axis=0))) * np.einsum("m,mxyz->xyz", amps, np.exp(1j * phase))
    return SpectralField(grid, symmetrize(bump))


def bernstein_scaling_check(
    profile: DyadicProfile,
    p=2,
    q=np.inf,
    trials: int = 3,
    order: int = 1,
    seed: int = 0,
    oversample: int = 4,
) -> BernsteinReport:
    """Fit the log2-slope of ``sup_|a|=order ||d^a Delta_j f||_q / ||Delta_j f||_p`` in j.

    Blocks ``1 .. j_full`` are used (annuli fully inside the Nyquist cube).
    Sup norms are taken on an ``oversample``-times refined grid so the fit is
    not dominated by sampling bias of narrow peaks. The expected slope is
    ``order + 3 (1/p - 1/q)``.
    """
    for name, e in (("p", p), ("q", q)):
        if e != 2 and not np.isinf(e):
            raise UnsupportedExponent(f"{name}={e} not supported (use 2 or inf)")
    if 1.0 / q > 1.0 / p:
        raise UnsupportedExponent("Bernstein inequality needs p <= q")
    js = tuple(range(max(1, profile.j_min), profile.j_full + 1))
    if len(js) < 3:
        raise InsufficientRange(f"only {len(js)} fully resolved blocks; need 3 (use a larger grid)")

    def norm(G: SpectralField, e) -> float:
        if np.isinf(e):
            return oversampled_sup(G, oversample) if oversample > 1 else sup_norm(G)
        return l2_norm(G)

    rng = np.random.default_rng(seed)
    grid = profile.grid
    slopes = []
    for _ in range(trials):
        amps = rng.normal(size=4)
        shifts = rng.uniform(-0.5, 0.5, size=(4, 3))
        ratios = []
        for j in js:
            block = delta_j(_template(grid, j, amps, shifts), j, profile)
            if order == 0:
                top = norm(block, q)
            else:
                grad = gradient(block)
                top = max(norm(grad[l], q) for l in range(3))
            ratios.append(top / norm(block, p))
        slopes.append(float(np.polyfit(js, np.log2(ratios), 1)[0]))
    expected = order + 3.0 * (1.0 / p - 1.0 / q)
    return BernsteinReport(float(p), float(q), order, js, tuple(slopes), expected)
