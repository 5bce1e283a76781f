import numpy as np
import pytest

from peskin_lab.curve import Curve, theta_grid


def random_trig_field(rng, n, modes, decay=1.5, components=2):
    """Random real trig polynomial with |k|^-decay coefficient envelope."""
    th = theta_grid(n)
    shape = (n, components) if components > 1 else (n,)
    f = np.zeros(shape)
    for k in range(1, modes + 1):
        s = k**-decay
        cols = range(components) if components > 1 else [None]
        for c in cols:
            term = s * (rng.standard_normal() * np.cos(k * th)
                        + rng.standard_normal() * np.sin(k * th))
            if c is None:
                f += term
            else:
                f[:, c] += term
    return f


def random_bandlimited_curve(rng, n, modes=16, amp=0.2):
    """Circle plus a smooth random perturbation, safely non-degenerate."""
    return Curve.from_nodes(Curve.circle(n).nodes
                            + random_trig_field(rng, n, modes, decay=3.0) * amp)


def grid_lp(values, p):
    mag = np.abs(values) if values.ndim == 1 else np.hypot(values[:, 0],
                                                           values[:, 1])
    if np.isinf(p):
        return float(mag.max())
    return float((2.0 * np.pi * np.mean(mag**p)) ** (1.0 / p))


def l2_field(values):
    return grid_lp(values, 2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
