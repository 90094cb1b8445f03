"""Initial-condition presets."""

from __future__ import annotations

import numpy as np

from .dynamics import MMPState
from .spectral import Grid, SpectralField, fft, l2_norm, leray_project


def taylor_green(grid: Grid, amp_u: float = 1.0, amp_omega: float = 0.0, amp_b: float = 0.0) -> MMPState:
    """Taylor-Green velocity with a matching divergence-free magnetic field.

    u = A (sin x cos y cos z, -cos x sin y cos z, 0)
    b = A_b (cos x sin y cos z, -sin x cos y cos z, 0)
    w = A_w (sin y cos z, sin z cos x, sin x cos y)
    """
    x, y, z = grid.coords
    zero = np.zeros_like(x)
    u = np.stack([np.sin(x) * np.cos(y) * np.cos(z), -np.cos(x) * np.sin(y) * np.cos(z), zero])
    b = np.stack([np.cos(x) * np.sin(y) * np.cos(z), -np.sin(x) * np.cos(y) * np.cos(z), zero])
    w = np.stack([np.sin(y) * np.cos(z), np.sin(z) * np.cos(x), np.sin(x) * np.cos(y)])
    return MMPState(
        SpectralField(grid, fft(amp_u * u)),
        SpectralField(grid, fft(amp_omega * w)),
        SpectralField(grid, fft(amp_b * b)),
    )


def _transverse(k: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Two unit vectors spanning the plane orthogonal to k."""
    ref = np.eye(3)[int(np.argmin(np.abs(k)))]
    e1 = np.cross(k, ref)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(k, e1)
    e2 /= np.linalg.norm(e2)
    return e1, e2


def single_mode(
    grid: Grid,
    mode: tuple[int, int, int] = (1, 0, 0),
    amp_u: float = 1.0,
    amp_omega: float = 0.0,
    amp_b: float = 0.0,
) -> MMPState:
    """Transverse plane waves along ``mode``: u ~ sin(k.x) e1, b ~ sin(k.x) e2, w ~ cos(k.x) e1."""
    k = np.asarray(mode, dtype=np.float64)
    if not np.any(k):
        raise ValueError("mode must be a nonzero wavevector")
    if np.max(np.abs(k)) >= grid.n / 2:
        raise ValueError(f"mode {mode} is not resolved on n={grid.n}")
    e1, e2 = _transverse(k)
    phase = np.einsum("i,ixyz->xyz", k * grid.unit, grid.coords)
    s, c = np.sin(phase), np.cos(phase)
    return MMPState(
        SpectralField(grid, fft(amp_u * e1[:, None, None, None] * s)),
        SpectralField(grid, fft(amp_omega * e1[:, None, None, None] * c)),
        SpectralField(grid, fft(amp_b * e2[:, None, None, None] * s)),
    )


def random_seeded(
    grid: Grid,
    seed: int = 0,
    kmax: float = 4.0,
    amp_u: float = 1.0,
    amp_omega: float = 0.0,
    amp_b: float = 0.0,
) -> MMPState:
    """Band-limited random fields: white noise, cut to 0 < |k| <= kmax, u and b projected.

    Each field is rescaled so its L^2 norm equals its amplitude.
    """
    rng = np.random.default_rng(seed)
    band = (grid.kmag <= kmax) & (grid.kmag > 0)

    def field(amp: float, solenoidal: bool) -> SpectralField:
        F = SpectralField(grid, fft(rng.standard_normal((3,) + grid.shape)) * band)
        if solenoidal:
            F = leray_project(F)
        norm = l2_norm(F)
        return F * (amp / norm) if norm > 0 else F

    u = field(amp_u, True)
    w = field(amp_omega, False)
    b = field(amp_b, True)
    return MMPState(u, w, b)
