"""Periodic grid, Fourier transforms and Fourier-multiplier operators.

Fields live on the cubic torus ``[0, L)^3`` sampled at ``n`` points per axis.
Spectral coefficients are stored in FFT index order with the normalization

    f(x) = sum_k fhat(k) exp(i k.x),      fhat(0) = mean of f,

so Parseval reads ``mean(|f|^2) = sum |fhat|^2`` and every L^2 quantity in the
package is a box average. The integer lattice per axis is
``{-n/2+1, ..., n/2}``: the Nyquist index carries wavenumber ``+n/2``.

First-derivative multipliers (gradient, divergence, curl, Leray) use a copy of
the wavenumbers with the Nyquist component zeroed, which keeps their output
Hermitian. Even multipliers (Laplacian, Bessel potential) use the full lattice.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Union

import numpy as np

from .errors import GridMismatch, HermitianViolation

AXES = (-3, -2, -1)

#: relative tolerance used when discarding the imaginary residue of an inverse FFT
HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Cubic periodic lattice with ``n`` points per axis and side ``box_length``."""

    n: int
    box_length: float = 2 * np.pi

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"grid n must be an even integer >= 8, got {self.n}")
        if not self.box_length > 0:
            raise ValueError("box_length must be positive")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "box_length", float(self.box_length))

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.n, self.n, self.n)

    @property
    def unit(self) -> float:
        """Wavenumber spacing 2*pi/L."""
        return 2 * np.pi / self.box_length

    @property
    def dx(self) -> float:
        return self.box_length / self.n

    @cached_property
    def index_axis(self) -> np.ndarray:
        """Integer lattice label of each FFT index, Nyquist mapped to +n/2."""
        i = np.arange(self.n)
        return np.where(i <= self.n // 2, i, i - self.n)

    @cached_property
    def k_axis(self) -> np.ndarray:
        return self.index_axis * self.unit

    @cached_property
    def k(self) -> np.ndarray:
        """Wavenumber vectors, shape (3, n, n, n)."""
        return np.stack(np.meshgrid(self.k_axis, self.k_axis, self.k_axis, indexing="ij"))

    @cached_property
    def k_deriv(self) -> np.ndarray:
        """Wavenumbers for odd multipliers: Nyquist components set to zero."""
        kd = self.k_axis.copy()
        kd[self.n // 2] = 0.0
        return np.stack(np.meshgrid(kd, kd, kd, indexing="ij"))

    @cached_property
    def k2(self) -> np.ndarray:
        return np.sum(self.k**2, axis=0)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.k2)

    @cached_property
    def kd2_safe(self) -> np.ndarray:
        """|k_deriv|^2 with zeros replaced by one (for projector denominators)."""
        kd2 = np.sum(self.k_deriv**2, axis=0)
        return np.where(kd2 == 0, 1.0, kd2)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True where every axis index satisfies 3|i| < n (2/3 rule)."""
        keep = 3 * np.abs(self.index_axis) < self.n
        return keep[:, None, None] & keep[None, :, None] & keep[None, None, :]

    @property
    def kmax_inf(self) -> float:
        """Largest resolvable |k|_inf, (n/2) * 2pi/L."""
        return self.n // 2 * self.unit

    @property
    def kmax(self) -> float:
        """Largest Euclidean |k| on the lattice (cube corner)."""
        return float(np.sqrt(3.0) * self.kmax_inf)

    @cached_property
    def coords(self) -> np.ndarray:
        """Physical coordinates, shape (3, n, n, n)."""
        x = np.arange(self.n) * self.dx
        return np.stack(np.meshgrid(x, x, x, indexing="ij"))


def _same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatch(f"grid mismatch: n={a.grid.n} vs n={b.grid.n}")


def _readonly(arr):
    view = arr.view()
    view.flags.writeable = False
    return view


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real field; shape ``(*rank, n, n, n)``.

    Rank () is a scalar, (3,) a vector, (3, 3) a tensor. The coefficient array
    is exposed read-only.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape[-3:] != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} does not end with {self.grid.shape}")
        object.__setattr__(self, "coeffs", _readonly(c))

    @classmethod
    def zeros(cls, grid: Grid, rank: tuple[int, ...] = (3,)) -> "SpectralField":
        return cls(grid, np.zeros(rank + grid.shape, dtype=np.complex128))

    @property
    def rank(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-3]

    def __getitem__(self, idx) -> "SpectralField":
        out = self.coeffs[idx]
        if out.shape[-3:] != self.grid.shape:
            raise IndexError("indexing must keep the three lattice axes")
        return SpectralField(self.grid, out)

    def __add__(self, other):
        _same_grid(self, other)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _same_grid(self, other)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        if isinstance(scalar, SpectralField):
            return NotImplemented
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return SpectralField(self.grid, self.coeffs / scalar)


@dataclass(frozen=True, eq=False)
class PhysicalField:
    """Real grid values; shape ``(*rank, n, n, n)``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape[-3:] != self.grid.shape:
            raise ValueError(f"value shape {v.shape} does not end with {self.grid.shape}")
        object.__setattr__(self, "values", _readonly(v))

    @property
    def rank(self) -> tuple[int, ...]:
        return self.values.shape[:-3]


# ----------------------------------------------------------------------------
# transforms


def fft(values: np.ndarray) -> np.ndarray:
    """Normalized forward DFT over the last three axes (coeff(0) = mean)."""
    n3 = values.shape[-1] * values.shape[-2] * values.shape[-3]
    return np.fft.fftn(values, axes=AXES) / n3


def ifft(coeffs: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Inverse of :func:`fft`; raises HermitianViolation on a complex result."""
    n3 = coeffs.shape[-1] * coeffs.shape[-2] * coeffs.shape[-3]
    out = np.fft.ifftn(coeffs, axes=AXES) * n3
    scale = max(1.0, float(np.max(np.abs(out.real), initial=0.0)))
    residue = float(np.max(np.abs(out.imag), initial=0.0))
    if residue > tol * scale:
        raise HermitianViolation(
            f"imaginary residue {residue:.3e} exceeds {tol:.1e} (relative to {scale:.3e})"
        )
    return out.real


def forward_transform(f: PhysicalField) -> SpectralField:
    return SpectralField(f.grid, fft(f.values))


def inverse_transform(F: SpectralField, tol: float = HERMITIAN_TOL) -> PhysicalField:
    return PhysicalField(F.grid, ifft(F.coeffs, tol))


def conjugate_reflection(coeffs: np.ndarray) -> np.ndarray:
    """conj(c(-k)) laid out on the same index grid as c(k)."""
    flipped = np.flip(coeffs, axis=AXES)
    return np.conj(np.roll(flipped, 1, axis=AXES))


def hermitian_defect(F: SpectralField) -> float:
    """max_k |F(k) - conj F(-k)|; zero for real fields."""
    return float(np.max(np.abs(F.coeffs - conjugate_reflection(F.coeffs)), initial=0.0))


def symmetrize(coeffs: np.ndarray) -> np.ndarray:
    """Project arbitrary coefficients onto the Hermitian (real-field) subspace."""
    return 0.5 * (coeffs + conjugate_reflection(coeffs))


# ----------------------------------------------------------------------------
# multipliers


def gradient(F: SpectralField, component: int | None = None) -> SpectralField:
    """ik fhat. For rank-r input the new index is appended last: out[..., l] = d_l F."""
    G = F if component is None else F[component]
    return SpectralField(F.grid, 1j * G.coeffs[..., None, :, :, :] * F.grid.k_deriv)


def divergence(F: SpectralField) -> SpectralField:
    """ik . fhat, contracting the last rank index."""
    if not F.rank or F.rank[-1] != 3:
        raise ValueError("divergence needs a trailing vector index")
    kd = F.grid.k_deriv
    return SpectralField(F.grid, 1j * np.einsum("...lxyz,lxyz->...xyz", F.coeffs, kd))


def curl(F: SpectralField) -> SpectralField:
    if F.rank != (3,):
        raise ValueError("curl needs a vector field")
    kx, ky, kz = F.grid.k_deriv
    fx, fy, fz = F.coeffs
    out = 1j * np.stack([ky * fz - kz * fy, kz * fx - kx * fz, kx * fy - ky * fx])
    return SpectralField(F.grid, out)


def laplacian(F: SpectralField) -> SpectralField:
    return SpectralField(F.grid, -F.grid.k2 * F.coeffs)


def lambda_s(F: SpectralField, s: float) -> SpectralField:
    """Bessel potential (1 + |k|^2)^(s/2)."""
    return SpectralField(F.grid, (1.0 + F.grid.k2) ** (0.5 * s) * F.coeffs)


_OPERATORS = {
    "gradient": gradient,
    "divergence": divergence,
    "curl": curl,
    "laplacian": laplacian,
}


def apply_operator(F: SpectralField, op: str, s: float | None = None, component: int | None = None):
    """Dispatch one of: gradient, divergence, curl, laplacian, lambda_s."""
    if op == "lambda_s":
        if s is None:
            raise ValueError("lambda_s needs an exponent s")
        return lambda_s(F, s)
    if op == "gradient":
        return gradient(F, component)
    try:
        return _OPERATORS[op](F)
    except KeyError:
        raise ValueError(f"unknown operator {op!r}") from None


def leray_coeffs(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    kd = grid.k_deriv
    kdotf = np.einsum("i...,i...->...", kd, coeffs)
    return coeffs - kd * (kdotf / grid.kd2_safe)


def leray_project(F: SpectralField) -> SpectralField:
    """Remove the gradient part: f - k (k.f)/|k|^2 per mode, k = 0 untouched."""
    if F.rank != (3,):
        raise ValueError("Leray projection needs a vector field")
    return SpectralField(F.grid, leray_coeffs(F.coeffs, F.grid))


def dealias(F: SpectralField) -> SpectralField:
    """Zero every mode with some axis index |i| >= n/3."""
    return SpectralField(F.grid, F.coeffs * F.grid.dealias_mask)


def outer_product(F: SpectralField, G: SpectralField) -> SpectralField:
    """Dealiased pseudo-spectral product out[a..., b...] = F[a...] G[b...].

    Both factors are truncated by the 2/3 rule before the product and the
    result is truncated again, so the output equals the exact convolution of
    the truncated inputs restricted to retained modes.
    """
    _same_grid(F, G)
    mask = F.grid.dealias_mask
    f = ifft(F.coeffs * mask)
    g = ifft(G.coeffs * mask)
    fr, gr = len(F.rank), len(G.rank)
    prod = f[(...,) + (None,) * gr + (slice(None),) * 3] * g[(None,) * fr]
    return SpectralField(F.grid, fft(prod) * mask)


# ----------------------------------------------------------------------------
# inner products and norms (box-averaged)


def inner(F: SpectralField, G: SpectralField) -> float:
    """Real L^2 inner product <F, G> = mean over the box of F.G."""
    _same_grid(F, G)
    return float(np.sum((np.conj(F.coeffs) * G.coeffs).real))


def l2_norm(F: SpectralField) -> float:
    return float(np.sqrt(np.sum(np.abs(F.coeffs) ** 2)))


def grad_norm_sq(F: SpectralField) -> float:
    """||grad F||_2^2 = sum |k|^2 |fhat|^2."""
    return float(np.sum(F.grid.k2 * np.abs(F.coeffs) ** 2))


def sup_norm(f: Union[PhysicalField, SpectralField]) -> float:
    """Grid maximum of the pointwise Euclidean magnitude."""
    if isinstance(f, SpectralField):
        f = inverse_transform(f)
    v = f.values
    mag = np.sqrt(np.sum(v.reshape((-1,) + f.grid.shape) ** 2, axis=0))
    return float(np.max(mag))


def lp_norm(f: Union[PhysicalField, SpectralField], p: float) -> float:
    """Box-averaged L^p norm of the pointwise Euclidean (Frobenius) magnitude."""
    if np.isinf(p):
        return sup_norm(f)
    if isinstance(f, SpectralField):
        f = inverse_transform(f)
    v = f.values
    mag = np.sqrt(np.sum(v.reshape((-1,) + f.grid.shape) ** 2, axis=0))
    return float(np.mean(mag**p) ** (1.0 / p))


def oversampled_sup(F: SpectralField, factor: int = 4) -> float:
    """Sup of the trigonometric interpolant sampled on a ``factor``-times finer grid."""
    n = F.grid.n
    m = n * factor
    idx = F.grid.index_axis
    big = np.zeros(F.rank + (m, m, m), dtype=np.complex128)
    pos = np.where(idx >= 0, idx, idx + m)
    half = n // 2
    big[np.ix_(*([np.arange(s) for s in F.rank] + [pos, pos, pos]))] = F.coeffs
    # split each Nyquist plane between +n/2 and -n/2 so the interpolant stays real
    for ax in range(3):
        a = len(F.rank) + ax
        nyq_src = [slice(None)] * big.ndim
        nyq_src[a] = half
        nyq_dst = list(nyq_src)
        nyq_dst[a] = m - half
        big[tuple(nyq_src)] *= 0.5
        big[tuple(nyq_dst)] = big[tuple(nyq_src)]
    # the padded spectrum is Hermitian, so the real inverse on the half spectrum suffices
    vals = np.fft.irfftn(big[..., : m // 2 + 1], s=(m, m, m), axes=AXES) * m**3
    mag = np.sqrt(np.sum(vals.reshape((-1, m, m, m)) ** 2, axis=0))
    return float(np.max(mag))
