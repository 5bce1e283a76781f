"""Closed planar curves on a uniform periodic grid and the difference calculus.

A curve is sampled at theta_j = -pi + 2*pi*j/N and kept in sync with its
Fourier coefficients.  All shifts f(theta + alpha) are realized spectrally
(phase factor exp(i*k*alpha)), which is exact for band-limited data.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "Curve",
    "DifferenceField",
    "ArcChord",
    "theta_grid",
    "wavenumbers",
    "fft_coeffs",
    "grid_values",
    "spectral_shift",
    "shift_many",
    "spectral_derivative",
    "spectral_antiderivative",
    "difference",
    "arc_chord",
    "read_curve",
    "write_curve",
]

MIN_NODES = 16


def theta_grid(n: int) -> np.ndarray:
    """Uniform grid theta_j = -pi + 2*pi*j/n, j = 0..n-1."""
    return -np.pi + 2.0 * np.pi * np.arange(n) / n


def wavenumbers(n: int) -> np.ndarray:
    """Integer wavenumbers in FFT order; index n//2 holds -n//2."""
    return np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)


def _phase(n: int) -> np.ndarray:
    # grid starts at -pi, so true coefficients pick up (-1)^k relative to FFT
    k = wavenumbers(n)
    return np.where(k % 2 == 0, 1.0, -1.0)


def fft_coeffs(values: np.ndarray) -> np.ndarray:
    """True Fourier coefficients c_k of grid samples, FFT wavenumber order.

    values has shape (n,) or (n, c); the transform acts along axis 0 and the
    reconstruction is f(theta) = sum_k c_k exp(i*k*theta).
    """
    values = np.asarray(values)
    n = values.shape[0]
    out = np.fft.fft(values, axis=0) / n
    ph = _phase(n)
    return out * (ph.reshape((n,) + (1,) * (values.ndim - 1)))


def grid_values(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of fft_coeffs; returns real grid samples."""
    coeffs = np.asarray(coeffs)
    n = coeffs.shape[0]
    ph = _phase(n).reshape((n,) + (1,) * (coeffs.ndim - 1))
    return np.fft.ifft(coeffs * ph, axis=0).real * n


def spectral_shift(values: np.ndarray, alpha: float) -> np.ndarray:
    """Samples of f(theta + alpha) from samples of f, exact for band-limited f."""
    values = np.asarray(values)
    n = values.shape[0]
    k = wavenumbers(n).reshape((n,) + (1,) * (values.ndim - 1))
    c = fft_coeffs(values) * np.exp(1j * k * alpha)
    return grid_values(c)


def shift_many(values: np.ndarray, alphas: np.ndarray) -> np.ndarray:
    """Batched spectral shifts: result[m] = samples of f(theta + alphas[m]).

    Returns shape (len(alphas),) + values.shape.
    """
    values = np.asarray(values)
    alphas = np.asarray(alphas, dtype=float)
    n = values.shape[0]
    k = wavenumbers(n)
    c = fft_coeffs(values)
    phase = np.exp(1j * np.multiply.outer(alphas, k))  # (m, n)
    shifted = phase.reshape(phase.shape + (1,) * (values.ndim - 1)) * c[None]
    ph = _phase(n).reshape((1, n) + (1,) * (values.ndim - 1))
    return np.fft.ifft(shifted * ph, axis=1).real * n


def spectral_derivative(values: np.ndarray, order: int = 1) -> np.ndarray:
    """Derivative d^order/dtheta^order via the ik multiplier.

    The Nyquist mode is zeroed for odd orders (its derivative is not
    representable on the grid).
    """
    values = np.asarray(values)
    n = values.shape[0]
    k = wavenumbers(n).astype(float)
    mult = (1j * k) ** order
    if order % 2 == 1:
        mult[n // 2] = 0.0
    c = fft_coeffs(values) * mult.reshape((n,) + (1,) * (values.ndim - 1))
    return grid_values(c)


def spectral_antiderivative(values: np.ndarray) -> np.ndarray:
    """Mean-zero antiderivative; the input's k=0 mode is discarded."""
    values = np.asarray(values)
    n = values.shape[0]
    k = wavenumbers(n).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        mult = np.where(k == 0, 0.0, 1.0 / (1j * np.where(k == 0, 1.0, k)))
    c = fft_coeffs(values) * mult.reshape((n,) + (1,) * (values.ndim - 1))
    return grid_values(c)


@dataclass(frozen=True)
class Curve:
    """Closed curve X: T -> R^2 as nodal values plus Fourier coefficients.

    nodes[j] = X(theta_j) with theta_j = -pi + 2*pi*j/N; coeffs are the true
    coefficients c_k in FFT order; the two stay in sync by construction.
    """

    nodes: np.ndarray
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        if nodes.ndim != 2 or nodes.shape[1] != 2:
            raise ValueError("nodes must have shape (N, 2)")
        n = nodes.shape[0]
        if n < MIN_NODES or n % 2 != 0:
            raise ValueError(f"grid size must be even and >= {MIN_NODES}, got {n}")
        coeffs = np.ascontiguousarray(np.asarray(self.coeffs, dtype=complex))
        if coeffs.shape != nodes.shape:
            raise ValueError("coeffs shape must match nodes shape")
        # the two representations must agree through the transform
        back = grid_values(coeffs)
        scale = max(1.0, float(np.max(np.abs(nodes))))
        if float(np.max(np.abs(back - nodes))) > 1e-12 * scale:
            raise ValueError("nodes and coeffs disagree beyond 1e-12")
        nodes.flags.writeable = False
        coeffs.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def from_nodes(cls, nodes: np.ndarray) -> "Curve":
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes=nodes, coeffs=fft_coeffs(nodes))

    @classmethod
    def from_coeffs(cls, coeffs: np.ndarray) -> "Curve":
        coeffs = np.asarray(coeffs, dtype=complex)
        return cls(nodes=grid_values(coeffs), coeffs=coeffs)

    @classmethod
    def circle(cls, n: int, radius: float = 1.0, center=(0.0, 0.0)) -> "Curve":
        th = theta_grid(n)
        nodes = np.stack(
            [center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)], axis=1
        )
        return cls.from_nodes(nodes)

    @classmethod
    def ellipse(cls, n: int, a: float = 2.0, b: float = 1.0, center=(0.0, 0.0)) -> "Curve":
        th = theta_grid(n)
        nodes = np.stack([center[0] + a * np.cos(th), center[1] + b * np.sin(th)], axis=1)
        return cls.from_nodes(nodes)

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    @property
    def mean(self) -> np.ndarray:
        """The k = 0 mode (curve average), tracked as a plain point."""
        return self.coeffs[0].real.copy()

    def with_mean(self, mean) -> "Curve":
        c = self.coeffs.copy()
        c[0] = np.asarray(mean, dtype=float)
        return Curve.from_coeffs(c)

    def derivative(self, order: int = 1) -> "Curve":
        """X' (or higher) via the ik multiplier; mean of X' is zero."""
        return Curve.from_nodes(spectral_derivative(self.nodes, order))

    def shifted(self, alpha: float) -> np.ndarray:
        return spectral_shift(self.nodes, alpha)

    def resampled(self, n_new: int) -> "Curve":
        """Same trigonometric polynomial sampled on an n_new grid."""
        if n_new < self.n:
            raise ValueError("refinement only")
        if n_new == self.n:
            return self
        k_old = wavenumbers(self.n)
        c_new = np.zeros((n_new, 2), dtype=complex)
        half = self.n // 2
        for i, k in enumerate(k_old):
            # split the old Nyquist mode symmetrically onto +-N/2
            if k == -half:
                c_new[half] = self.coeffs[i] / 2.0
                c_new[n_new - half] = self.coeffs[i] / 2.0
            else:
                c_new[k % n_new] = self.coeffs[i]
        return Curve.from_coeffs(c_new)


@dataclass(frozen=True)
class DifferenceField:
    """Samples of a difference operator applied to a periodic field.

    variant "plain" is f(theta+alpha) - f(theta); "divided" is that over
    alpha; "plus" is X'(theta+alpha) - D_alpha X; "minus" is X'(theta) -
    D_alpha X.  base keeps the sampled field the operator acted on.
    """

    alpha: float
    variant: str
    values: np.ndarray
    base: np.ndarray | None = None


_VARIANTS = ("plain", "divided", "plus", "minus")


def difference(values: np.ndarray, alpha: float, variant: str = "plain",
               primitive: np.ndarray | None = None) -> DifferenceField:
    """Apply one of the difference operators on the theta grid.

    For the "plus"/"minus" variants, values must hold the derivative field
    X' and primitive the position samples X (the divided difference
    D_alpha X is formed from it).
    """
    if alpha == 0.0:
        raise ValueError("offset alpha must be nonzero")
    if variant not in _VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    values = np.asarray(values, dtype=float)
    if variant == "plain":
        out = spectral_shift(values, alpha) - values
    elif variant == "divided":
        out = (spectral_shift(values, alpha) - values) / alpha
    else:
        if primitive is None:
            raise ValueError("plus/minus variants need the primitive samples")
        primitive = np.asarray(primitive, dtype=float)
        divided = (spectral_shift(primitive, alpha) - primitive) / alpha
        if variant == "plus":
            out = spectral_shift(values, alpha) - divided
        else:
            out = values - divided
    return DifferenceField(alpha=alpha, variant=variant, values=out, base=values)


class ArcChord(NamedTuple):
    """Grid approximation of the arc-chord number with a refinement estimate."""

    value: float
    estimate: float


def _arc_chord_level(curve: Curve, m: int) -> float:
    """Min over grid theta and half-offset alpha of |delta_alpha X| / |alpha|.

    m must be a multiple of the curve grid size.
    """
    n = curve.n
    if m % n != 0:
        raise ValueError("alpha grid size must be a multiple of N")
    r = m // n
    # integer refined grid and half-offset refined grid
    fine = curve.resampled(m)
    x_int = fine.nodes
    x_half = shift_many(fine.nodes, np.array([np.pi / m]))[0]
    alphas = -np.pi + (np.arange(m) + 0.5) * 2.0 * np.pi / m
    j_idx = np.arange(n) * r
    base = x_int[j_idx]
    offset = np.arange(m) - m // 2
    best = np.inf
    chunk = max(1, int(2.0e6 / max(n, 1)))
    for start in range(0, m, chunk):
        off = offset[start : start + chunk]
        # theta_j + alpha_m lands on half-offset slot (j*r + offset_m) mod m
        idx = (j_idx[None, :] + off[:, None]) % m
        d = x_half[idx] - base[None]
        mags = np.min(np.hypot(d[..., 0], d[..., 1]), axis=1)
        val = np.min(mags / np.abs(alphas[start : start + chunk]))
        best = min(best, float(val))
    return best


def arc_chord(curve: Curve, m: int | None = None) -> ArcChord:
    """Arc-chord number: grid infimum of |X(theta+alpha)-X(theta)|/|alpha|.

    Sampled over theta on the N-grid and alpha on a half-offset grid of
    size m >= 4N, with one refinement level (2m); estimate reports the
    level difference.  Returns 0 exactly for degenerate curves.
    """
    n = curve.n
    if m is None:
        m = 4 * n
    m = max(m, 4 * n)
    v1 = _arc_chord_level(curve, m)
    v2 = _arc_chord_level(curve, 2 * m)
    # first-order refinement: the level difference matches the remaining
    # error asymptotically, so report it with a safety factor of two
    return ArcChord(value=v2, estimate=2.0 * abs(v2 - v1))


# ---------------------------------------------------------------------------
# curve snapshot files: header "peskin-curve v1 N=<n>", then N lines "x y",
# optionally followed by Fourier lines "k re_x im_x re_y im_y"

_HEADER = "peskin-curve v1"


def write_curve(curve: Curve, path, fourier: bool = False) -> None:
    buf = io.StringIO()
    buf.write(f"{_HEADER} N={curve.n}\n")
    for x, y in curve.nodes:
        buf.write(f"{float(x)!r} {float(y)!r}\n")
    if fourier:
        ks = wavenumbers(curve.n)
        order = np.argsort(ks)
        for i in order:
            c = curve.coeffs[i]
            buf.write(f"{int(ks[i])} {float(c[0].real)!r} {float(c[0].imag)!r} "
                      f"{float(c[1].real)!r} {float(c[1].imag)!r}\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def read_curve(path) -> Curve:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or not lines[0].startswith(_HEADER):
        raise ValueError(f"{path}: not a curve snapshot file")
    try:
        n = int(lines[0].split("N=")[1])
    except (IndexError, ValueError) as exc:
        raise ValueError(f"{path}: malformed header {lines[0]!r}") from exc
    if len(lines) < 1 + n:
        raise ValueError(f"{path}: expected {n} node lines")
    nodes = np.array(
        [[float(tok) for tok in ln.split()] for ln in lines[1 : 1 + n]]
    )
    if nodes.shape != (n, 2):
        raise ValueError(f"{path}: node lines must be 'x y'")
    return Curve.from_nodes(nodes)
