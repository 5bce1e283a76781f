"""Scalar tension laws, the vector tension map and its Jacobian.

A law maps stretch r = |X'| to a positive tension T(r) with T' > 0 on a
trusted window; the vector map is T(|z|) * z/|z| and its Jacobian has
eigenvalues T'(|z|) and T(|z|)/|z|.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

__all__ = [
    "TensionLaw",
    "hookean",
    "power_law",
    "arctan_law",
    "table_law",
    "tension_map",
    "tension_jacobian",
    "globalize",
]


@dataclass(frozen=True)
class TensionLaw:
    """Scalar tension with derivatives and quantitative constants.

    eval/d1 must accept numpy arrays.  lam is the ellipticity floor
    inf T' > 0 on the window; c1..c3 bound |DT|, |D^2 T|, |D^3 T| (None
    means "local only", finite values are computed for globalized laws).
    window is the stretch interval on which the law is trusted.
    """

    name: str
    eval: Callable[[np.ndarray], np.ndarray]
    d1: Callable[[np.ndarray], np.ndarray]
    d2: Optional[Callable[[np.ndarray], np.ndarray]] = None
    d3: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lam: float = 0.0
    c1: Optional[float] = None
    c2: Optional[float] = None
    c3: Optional[float] = None
    window: Tuple[float, float] = (0.0, np.inf)
    vanishes_at_zero: bool = True

    def __call__(self, r):
        return self.eval(r)

    def deriv(self, r, order: int = 1):
        if order == 1:
            return self.d1(r)
        if order == 2:
            return self.d2(r) if self.d2 is not None else _fd(self.d1, r)
        if order == 3:
            if self.d3 is not None:
                return self.d3(r)
            base = self.d2 if self.d2 is not None else (lambda s: _fd(self.d1, s))
            return _fd(base, r)
        raise ValueError("order must be 1, 2 or 3")


def _fd(fn, r, h: float = 1e-5):
    r = np.asarray(r, dtype=float)
    return (fn(r + h) - fn(r - h)) / (2.0 * h)


def hookean(k0: float = 1.0) -> TensionLaw:
    """Simple linear tension T(r) = k0*r."""
    if k0 <= 0:
        raise ValueError("k0 must be positive")
    return TensionLaw(
        name=f"hookean(k0={k0})",
        eval=lambda r: k0 * np.asarray(r, dtype=float),
        d1=lambda r: np.full_like(np.asarray(r, dtype=float), k0),
        d2=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        d3=lambda r: np.zeros_like(np.asarray(r, dtype=float)),
        lam=k0,
        c1=k0,
        c2=0.0,
        c3=0.0,
        window=(0.0, np.inf),
    )


def power_law(coef: float = 1.0, p: float = 2.0,
              window: Tuple[float, float] = (0.5, 2.0)) -> TensionLaw:
    """Power tension T(r) = coef * r**p, trusted on the given window."""
    if coef <= 0 or p <= 0:
        raise ValueError("coef and p must be positive")
    a, b = window
    if not (0 < a < b):
        raise ValueError("window must satisfy 0 < a < b")
    d1 = lambda r: coef * p * np.asarray(r, dtype=float) ** (p - 1.0)
    # Jacobian eigenvalues are T'(r) and T(r)/r; both are monotone in r
    # for a power law, so the window floor sits at an endpoint
    lam = float(min(d1(a), d1(b), coef * a ** (p - 1.0), coef * b ** (p - 1.0)))
    return TensionLaw(
        name=f"power(coef={coef},p={p})",
        eval=lambda r: coef * np.asarray(r, dtype=float) ** p,
        d1=d1,
        d2=lambda r: coef * p * (p - 1.0) * np.asarray(r, dtype=float) ** (p - 2.0),
        d3=lambda r: coef * p * (p - 1.0) * (p - 2.0)
        * np.asarray(r, dtype=float) ** (p - 3.0),
        lam=lam,
        window=window,
    )


def arctan_law(window: Tuple[float, float] = (0.5, 2.0)) -> TensionLaw:
    """Bounded tension T(r) = arctan(r)."""
    a, b = window
    # both T' = 1/(1+r^2) and T/r are decreasing, so the floor is at r = b
    lam = float(min(1.0 / (1.0 + b * b), np.arctan(b) / b))
    return TensionLaw(
        name="arctan",
        eval=lambda r: np.arctan(np.asarray(r, dtype=float)),
        d1=lambda r: 1.0 / (1.0 + np.asarray(r, dtype=float) ** 2),
        d2=lambda r: -2.0 * np.asarray(r, dtype=float)
        / (1.0 + np.asarray(r, dtype=float) ** 2) ** 2,
        lam=lam,
        window=window,
    )


def table_law(r_values, t_values) -> TensionLaw:
    """Monotone tension interpolated from (r, T) samples (PCHIP)."""
    from scipy.interpolate import PchipInterpolator

    r_values = np.asarray(r_values, dtype=float)
    t_values = np.asarray(t_values, dtype=float)
    if np.any(np.diff(r_values) <= 0) or np.any(np.diff(t_values) <= 0):
        raise ValueError("table must be strictly increasing in r and T")
    interp = PchipInterpolator(r_values, t_values)
    d1 = interp.derivative()
    rs = np.linspace(r_values[0], r_values[-1], 2049)
    lam = float(min(np.min(d1(rs)), np.min(interp(rs) / rs)))
    if lam <= 0:
        raise ValueError("interpolated tension is not uniformly increasing")
    return TensionLaw(
        name="table",
        eval=lambda r: np.asarray(interp(r), dtype=float),
        d1=lambda r: np.asarray(d1(r), dtype=float),
        d2=lambda r: np.asarray(interp.derivative(2)(r), dtype=float),
        lam=lam,
        window=(float(r_values[0]), float(r_values[-1])),
        vanishes_at_zero=False,
    )


def tension_map(law: TensionLaw, z: np.ndarray) -> np.ndarray:
    """Vector tension T(|z|) * zhat; z has shape (..., 2)."""
    z = np.asarray(z, dtype=float)
    r = np.hypot(z[..., 0], z[..., 1])
    if np.any(r == 0.0):
        if not law.vanishes_at_zero:
            raise ValueError("tension map undefined at z = 0 for this law")
        out = np.zeros_like(z)
        mask = r > 0.0
        out[mask] = (law.eval(r[mask]) / r[mask])[..., None] * z[mask]
        return out
    return (law.eval(r) / r)[..., None] * z


def tension_jacobian(law: TensionLaw, z: np.ndarray) -> np.ndarray:
    """Jacobian of the tension map: T'(|z|) zhat@zhat + (T/|z|) zperp@zperp."""
    z = np.asarray(z, dtype=float)
    r = np.hypot(z[..., 0], z[..., 1])
    if np.any(r == 0.0):
        raise ValueError("tension Jacobian undefined at z = 0")
    zh = z / r[..., None]
    zp = np.stack([-zh[..., 1], zh[..., 0]], axis=-1)
    tang = np.einsum("...i,...j->...ij", zh, zh)
    norm = np.einsum("...i,...j->...ij", zp, zp)
    return law.d1(r)[..., None, None] * tang + (law.eval(r) / r)[..., None, None] * norm


def _blend_slope(law: TensionLaw, a: float) -> float:
    # quadratic blend on [a/2, a] with a linear piece through the origin
    # below a/2; C^1 matching forces the linear slope
    return (4.0 * float(law.eval(a)) - a * float(law.d1(a))) / (3.0 * a)


def globalize(law: TensionLaw, a: float, b: float) -> TensionLaw:
    """Extend a locally trusted law to [0, inf) with global bounds.

    Returns a law equal to the input on [a, b], linear with slope T'(b)
    above b, and below a a quadratic blend on [a/2, a] joined to a linear
    piece through the origin (so the extension is C^1 with T(0) = 0).
    """
    if not (0 < a < b):
        raise ValueError("need 0 < a < b")
    rs = np.linspace(a, b, 4097)
    d1_window = np.asarray(law.d1(rs), dtype=float)
    if np.any(d1_window <= 0):
        raise ValueError("law is not strictly increasing on [a, b]")
    ta, tb = float(law.eval(a)), float(law.eval(b))
    da, db = float(law.d1(a)), float(law.d1(b))
    s0 = _blend_slope(law, a)
    if s0 <= 0:
        raise ValueError("blend slope is not positive; shrink the window")
    # quadratic q(r) = ta + da*(r-a) + q2*(r-a)^2 matching value+slope at a
    # and slope s0 at a/2
    q2 = (da - s0) / a

    def _ev(fun_mid, r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        lo = r < 0.5 * a
        bl = (r >= 0.5 * a) & (r < a)
        mid = (r >= a) & (r <= b)
        hi = r > b
        out[lo] = s0 * r[lo]
        out[bl] = ta + da * (r[bl] - a) + q2 * (r[bl] - a) ** 2
        out[mid] = fun_mid(r[mid])
        out[hi] = tb + db * (r[hi] - b)
        return out

    def _ev1(r):
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        lo = r < 0.5 * a
        bl = (r >= 0.5 * a) & (r < a)
        mid = (r >= a) & (r <= b)
        hi = r > b
        out[lo] = s0
        out[bl] = da + 2.0 * q2 * (r[bl] - a)
        out[mid] = law.d1(r[mid])
        out[hi] = db
        return out

    lam = float(min(s0, np.min(d1_window), db))
    # eigenvalues of DT are T' and T/r; T(0)=0 makes T/r an average of T'
    c1 = float(max(s0, np.max(d1_window), db))
    d2_window = np.abs(np.asarray(law.deriv(rs, 2), dtype=float))
    c2 = float(max(np.max(d2_window), abs(2.0 * q2)))
    return TensionLaw(
        name=f"globalized[{law.name};{a},{b}]",
        eval=lambda r: _ev(law.eval, r),
        d1=_ev1,
        lam=lam,
        c1=c1,
        c2=c2,
        window=(0.0, np.inf),
        vanishes_at_zero=True,
    )
