"""Fractional Laplacians on the torus and Littlewood-Paley projections.

Three realizations of the half-Laplacian family live here: the Fourier
multiplier |k|^s, the sine-kernel singular integral (exact eigenvalue |k|
on pure modes), and the 1/alpha^2 quadrature variant whose eigenvalues
lam_tilde_k are cached per grid.  Singular integrals are discretized on a
half-offset alpha grid, so alpha = 0 never appears and odd parts cancel
by symmetric pairing.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .curve import fft_coeffs, grid_values, wavenumbers

__all__ = [
    "OperatorSymbol",
    "symbol",
    "half_offset_grid",
    "lambda_fourier",
    "lambda_sine",
    "lambda_tilde",
    "half_lambda_norm",
    "lambda_tilde_eigenvalue_exact",
    "lambda_s_lattice_eigenvalue",
    "LPFamily",
    "lp_family",
    "lp_project",
    "lp_block_norms",
]


def half_offset_grid(m: int) -> np.ndarray:
    """Half-offset quadrature nodes alpha = -pi + (i + 1/2) 2 pi / m."""
    return -np.pi + (np.arange(m) + 0.5) * 2.0 * np.pi / m


@dataclass(frozen=True)
class OperatorSymbol:
    """Per-wavenumber eigenvalue tables for grid size n.

    lam_sine and lam_tilde are the half-offset quadrature eigenvalues of
    the sine-kernel and 1/alpha^2 operators at m nodes; lam_sine equals
    |k| to rounding whenever m exceeds the bandwidth.
    """

    n: int
    m: int
    abs_k: np.ndarray
    lam_sine: np.ndarray
    lam_tilde: np.ndarray

    def lam_s(self, s: float) -> np.ndarray:
        return self.abs_k**s


@lru_cache(maxsize=64)
def symbol(n: int, m: int) -> OperatorSymbol:
    """Build (and cache) the quadrature symbol tables for grid size n."""
    k = np.abs(wavenumbers(n)).astype(float)
    al = half_offset_grid(m)
    s2 = (2.0 * np.sin(al / 2.0)) ** 2
    one_minus_cos = 1.0 - np.cos(np.multiply.outer(k, al))  # (n, m)
    lam_sine = (2.0 / m) * one_minus_cos @ (1.0 / s2)
    lam_tilde = (0.5 / m) * one_minus_cos @ (1.0 / al**2)
    lam_sine.flags.writeable = False
    lam_tilde.flags.writeable = False
    return OperatorSymbol(n=n, m=m, abs_k=k, lam_sine=lam_sine, lam_tilde=lam_tilde)


def _apply_symbol(values: np.ndarray, sym: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    c = fft_coeffs(values)
    return grid_values(c * sym.reshape((len(sym),) + (1,) * (values.ndim - 1)))


def lambda_fourier(values: np.ndarray, s: float) -> np.ndarray:
    """Apply the |k|^s multiplier to grid samples; constants map to zero."""
    n = np.asarray(values).shape[0]
    return _apply_symbol(values, np.abs(wavenumbers(n)).astype(float) ** s)


def lambda_sine(values: np.ndarray, m: int | None = None) -> np.ndarray:
    """Sine-kernel half-Laplacian by half-offset quadrature (m >= 8N nodes)."""
    n = np.asarray(values).shape[0]
    if m is None:
        m = 8 * n
    return _apply_symbol(values, symbol(n, m).lam_sine)


def lambda_tilde(values: np.ndarray, m: int | None = None) -> np.ndarray:
    """1/alpha^2-kernel variant; eigenvalues lam_tilde_k from the cached symbol."""
    n = np.asarray(values).shape[0]
    if m is None:
        m = 8 * n
    return _apply_symbol(values, symbol(n, m).lam_tilde)


def half_lambda_norm(values: np.ndarray, m: int | None = None) -> float:
    """Square root of the double integral (1/8pi) iint |delta_a f|^2 / a^2.

    Equals the quadratic form <f, lam_tilde f> of the quadrature operator,
    so it matches lambda_tilde applied with the same m exactly.
    """
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if m is None:
        m = 8 * n
    c = fft_coeffs(values)
    weights = symbol(n, m).lam_tilde
    power = np.abs(c) ** 2
    if power.ndim > 1:
        power = power.sum(axis=tuple(range(1, power.ndim)))
    return float(np.sqrt(2.0 * np.pi * np.sum(weights * power)))


def lambda_tilde_eigenvalue_exact(k: int) -> float:
    """Closed form for (1/4pi) int (1 - cos k a)/a^2 da via the sine integral."""
    from scipy.special import sici

    if k == 0:
        return 0.0
    k = abs(int(k))
    si, _ = sici(k * np.pi)
    return float((k * si - (1.0 - np.cos(k * np.pi)) / np.pi) / (2.0 * np.pi))


def lambda_s_lattice_eigenvalue(k: int, s: float, m_trunc: int = 1000) -> float:
    """Validation-only: |k|^s recovered from the periodized lattice kernel.

    Sums |alpha + 2 pi m|^(-1-s) over |m| <= m_trunc with a midpoint tail
    correction, then integrates 2 C_s (1 - cos k alpha) against it.
    """
    from scipy.integrate import quad
    from scipy.special import gamma

    if not (0.0 < s < 2.0):
        raise ValueError("s must lie in (0, 2)")
    c_s = 2.0**s * gamma((1.0 + s) / 2.0) / (2.0 * np.sqrt(np.pi)
                                             * abs(gamma(-s / 2.0)))
    ms = 2.0 * np.pi * np.arange(1, m_trunc + 1)
    edge = 2.0 * np.pi * (m_trunc + 0.5)

    def kernel(alpha: float) -> float:
        main = np.abs(alpha) ** (-1.0 - s) \
            + np.sum((ms + alpha) ** (-1.0 - s) + (ms - alpha) ** (-1.0 - s))
        tail = ((edge + alpha) ** (-s) + (edge - alpha) ** (-s)) / (2.0 * np.pi * s)
        return main + tail

    val, _ = quad(lambda a: 2.0 * c_s * (1.0 - np.cos(k * a)) * kernel(a),
                  0.0, np.pi, limit=200)
    return float(2.0 * val)  # even integrand, both half-lines


# ---------------------------------------------------------------------------
# Littlewood-Paley blocks

_LO, _HI = 1.5, 8.0 / 3.0


def _smooth_step(t: np.ndarray) -> np.ndarray:
    # C^inf ramp: 0 for t <= 0, 1 for t >= 1, built from exp(-1/t)
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0.0, np.exp(-1.0 / np.where(t > 0.0, t, 1.0)), 0.0)
        b = np.where(t < 1.0, np.exp(-1.0 / np.where(t < 1.0, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def phi_profile(x: np.ndarray) -> np.ndarray:
    """Radial cutoff: 1 below 3/2, 0 above 8/3, smooth and non-increasing."""
    x = np.abs(np.asarray(x, dtype=float))
    return 1.0 - _smooth_step((x - _LO) / (_HI - _LO))


@dataclass(frozen=True)
class LPFamily:
    """Cached dyadic block multipliers phi(k/2^j) - phi(k/2^(j-1)) for a grid.

    blocks[i] covers j = j_min + i; each row is supported on the annulus
    3*2^(j-2) <= |k| < 2^(j+3)/3 and the rows sum to 1 at every nonzero
    wavenumber on the grid.
    """

    n: int
    j_min: int
    j_max: int
    blocks: np.ndarray

    @property
    def js(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1)

    def block(self, j: int) -> np.ndarray:
        if not (self.j_min <= j <= self.j_max):
            return np.zeros(self.n)
        return self.blocks[j - self.j_min]


@lru_cache(maxsize=64)
def lp_family(n: int) -> LPFamily:
    k = np.abs(wavenumbers(n)).astype(float)
    j_min = -1
    j_max = j_min
    while 2.0**j_max <= (n / 2) / _LO:
        j_max += 1
    rows = []
    for j in range(j_min, j_max + 1):
        rows.append(phi_profile(k / 2.0**j) - phi_profile(k / 2.0 ** (j - 1)))
    blocks = np.array(rows)
    blocks.flags.writeable = False
    return LPFamily(n=n, j_min=j_min, j_max=j_max, blocks=blocks)


def lp_project(values: np.ndarray, j: int) -> np.ndarray:
    """Frequency-localized piece of f at dyadic band 2^j."""
    values = np.asarray(values, dtype=float)
    fam = lp_family(values.shape[0])
    return _apply_symbol(values, fam.block(j))


def lp_block_norms(values: np.ndarray, p: float) -> tuple[np.ndarray, np.ndarray]:
    """L^p norms of every active block; returns (js, norms)."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    fam = lp_family(n)
    norms = np.empty(len(fam.js))
    for i, j in enumerate(fam.js):
        piece = lp_project(values, j)
        mag = np.abs(piece) if piece.ndim == 1 else np.hypot(piece[:, 0], piece[:, 1])
        if np.isinf(p):
            norms[i] = mag.max()
        else:
            norms[i] = (2.0 * np.pi * np.mean(mag**p)) ** (1.0 / p)
    return fam.js.copy(), norms
