"""Right-hand sides of the boundary-integral evolution and time stepping.

Three equivalent evaluators are provided: the position form driven by the
full Stokeslet, the first-derivatives-only position form, and the
derivative-equation form driven by the matrix kernel.  All alpha
integrals run over a shared half-offset grid, so the odd 1/alpha parts
cancel by symmetric pairing; shifted samples of band-limited fields
(X, X', X'') are spectrally exact, and nonlinear functions of them are
evaluated pointwise at the shifted values.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .curve import (
    Curve,
    arc_chord,
    fft_coeffs,
    grid_values,
    shift_many,
    spectral_antiderivative,
    wavenumbers,
)
from .besov import BesovParams, MuWeight, besov_diff
from .operators import half_offset_grid, symbol
from .tension import TensionLaw, tension_jacobian, tension_map, hookean, power_law, arctan_law, globalize

__all__ = [
    "SimulationAbort",
    "SimConfig",
    "SimState",
    "Trajectory",
    "rhs_position_bi",
    "rhs_position_reduced",
    "rhs_derivative",
    "remainder_V",
    "dissipation_term",
    "step",
    "simulate",
    "cfl_limit",
    "make_initial_curve",
    "law_from_config",
]

FOUR_PI = 4.0 * np.pi
CFL_CONSTANT = 2.5  # classical four-stage explicit stability with margin


class SimulationAbort(RuntimeError):
    """Raised when the arc-chord floor is breached or values go non-finite."""

    def __init__(self, t: float, reason: str):
        super().__init__(f"aborted at t={t:.6g}: {reason}")
        self.t = t
        self.reason = reason


@dataclass(frozen=True)
class SimState:
    """Immutable snapshot of the evolution at one time."""

    t: float
    curve: Curve
    deriv: Curve
    law: TensionLaw
    m: int
    rho_floor: float

    @classmethod
    def make(cls, curve: Curve, law: TensionLaw, t: float = 0.0,
             m: Optional[int] = None, rho_floor: Optional[float] = None) -> "SimState":
        if m is None:
            m = 4 * curve.n
        deriv = curve.derivative()
        if rho_floor is None:
            rho_floor = 0.5 * arc_chord(curve).value
        return cls(t=t, curve=curve, deriv=deriv, law=law, m=m,
                   rho_floor=rho_floor)

    def advanced(self, t: float, curve: Curve) -> "SimState":
        return replace(self, t=t, curve=curve, deriv=curve.derivative())


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("PESKIN_LAB_THREADS", "1")))
    except ValueError:
        return 1


_CHUNK_BUDGET = 4.0e6  # samples per alpha chunk; caps temporaries at tens of MB


def _alpha_chunks(m: int, n: int):
    chunk = max(64, min(m, int(_CHUNK_BUDGET / max(n, 1))))
    return [slice(i, min(i + chunk, m)) for i in range(0, m, chunk)]


def _perp(v):
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def _dot(u, v):
    return np.einsum("...i,...i->...", u, v)


def _floor_check(state: SimState, r2: np.ndarray, alphas: np.ndarray):
    divided = np.sqrt(r2) / np.abs(alphas)[:, None]
    worst = float(divided.min())
    if worst < state.rho_floor:
        raise SimulationAbort(state.t, f"arc-chord {worst:.3e} below floor "
                                       f"{state.rho_floor:.3e}")


def _accumulate(state: SimState, contribution, pieces: int = 1):
    """Sum a per-alpha contribution over the half-offset grid, chunked.

    contribution(alphas_chunk) returns one (n, 2) array per piece (already
    summed over the chunk).  Runs chunks on a thread pool when
    PESKIN_LAB_THREADS > 1.
    """
    m = state.m
    n = state.curve.n
    chunks = _alpha_chunks(m, n)
    alphas = half_offset_grid(m)
    outs = [np.zeros((n, 2)) for _ in range(pieces)]
    nthreads = _threads()
    if nthreads > 1 and len(chunks) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            for parts in pool.map(lambda sl: contribution(alphas[sl]), chunks):
                for acc, part in zip(outs, parts):
                    acc += part
    else:
        for sl in chunks:
            for acc, part in zip(outs, contribution(alphas[sl])):
                acc += part
    weight = 2.0 * np.pi / m
    outs = [acc * weight for acc in outs]
    return outs[0] if pieces == 1 else outs


def rhs_position_bi(state: SimState) -> np.ndarray:
    """Position velocity from the full Stokeslet against the force derivative.

    The log part of the kernel is split into log(|delta X| / |2 sin(a/2)|)
    (smooth, quadrature) plus the periodic log kernel handled by its exact
    Fourier weights -pi/|k| acting on the force samples.  The force
    D T(X') X'' is rational in X', so it is sampled on a doubled grid
    before being treated spectrally (padding factor 2; exact dealiasing is
    impossible for non-polynomial nonlinearities).
    """
    n = state.curve.n
    x = state.curve.nodes
    x1_fine = state.deriv.resampled(2 * n).nodes
    x2_fine = state.deriv.derivative().resampled(2 * n).nodes
    jac = tension_jacobian(state.law, x1_fine)
    force_fine = np.einsum("...ij,...j->...i", jac, x2_fine)

    def contribution(al):
        xs = shift_many(x, al)
        # force samples at theta_j + alpha from the padded grid; the coarse
        # nodes are the even slots of the doubled grid
        fs = shift_many(force_fine, al)[:, ::2]
        dx = xs - x[None]
        r2 = np.sum(dx * dx, axis=-1)
        _floor_check(state, r2, al)
        r = np.sqrt(r2)
        s_al = np.abs(2.0 * np.sin(al / 2.0))[:, None]
        smooth_log = np.log(r / s_al)
        g1 = -(smooth_log[..., None] * fs)
        dhat = dx / r[..., None]
        g2 = _dot(dhat, fs)[..., None] * dhat
        return ((g1 + g2).sum(axis=0),)

    quad_part = _accumulate(state, contribution)
    # exact product quadrature for the periodic log kernel
    k = wavenumbers(2 * n).astype(float)
    w = np.where(k == 0.0, 0.0, -np.pi / np.where(k == 0.0, 1.0, np.abs(k)))
    log_part = -grid_values(fft_coeffs(force_fine) * w[:, None])[::2]
    return (quad_part + log_part) / FOUR_PI


def rhs_position_reduced(state: SimState) -> np.ndarray:
    """First-derivatives-only position velocity (the working form)."""
    x = state.curve.nodes
    law = state.law

    def contribution(al):
        xs = shift_many(x, al)
        x1s = shift_many(state.deriv.nodes, al)
        dx = xs - x[None]
        r2 = np.sum(dx * dx, axis=-1)
        _floor_check(state, r2, al)
        dhat = dx / np.sqrt(r2)[..., None]
        quad_form = _dot(x1s, dhat) ** 2 - _dot(x1s, _perp(dhat)) ** 2
        mag = np.sqrt(np.sum(x1s * x1s, axis=-1))
        if float(mag.min()) == 0.0:
            raise SimulationAbort(state.t, "tangent vector vanished")
        coef = quad_form / r2 * (law.eval(mag) / mag)
        return ((coef[..., None] * dx).sum(axis=0),)

    return _accumulate(state, contribution) / FOUR_PI


def _kernel_apply(x1s, x1, d, dhat, inv_q2, vec, which: str):
    """K or A applied to vec without materializing 2x2 matrices.

    d is the signed divided difference, dhat a unit vector along it (the
    matrices are even in the sign), inv_q2 is 1/|d|^2.  The matrix basis
    is I, R(d), P(d) with R v = (dhat.v) dperp + (dperp.v) dhat and
    P v = (dhat.v) dhat - (dperp.v) dperp.
    """
    dperp = _perp(dhat)
    if which == "K":
        u, w = x1s, np.broadcast_to(x1, x1s.shape)
        c_p = (_dot(u, dhat) * _dot(w, dhat) - _dot(u, dperp) * _dot(w, dperp)) * inv_q2
        c_r = (_dot(u, dhat) * _dot(w, dperp) + _dot(u, dperp) * _dot(w, dhat)) * inv_q2
        c_pi = c_p - _dot(u, w) * inv_q2
        coef_i, coef_r, coef_pp = c_p, -c_r, c_pi
    elif which == "A":
        dp = x1s - d
        dm = np.broadcast_to(x1, x1s.shape) - d
        dsum = dp + dm
        t1 = (_dot(dp, dhat) * _dot(dm, dhat) - _dot(dp, dperp) * _dot(dm, dperp)) * inv_q2
        t2 = (_dot(dsum, dhat) * _dot(d, dhat)
              - _dot(dsum, dperp) * _dot(d, dperp)) * inv_q2
        t3 = (_dot(dp, dhat) * _dot(dm, dperp) + _dot(dp, dperp) * _dot(dm, dhat)) * inv_q2
        t4 = (_dot(dsum, dhat) * _dot(d, dperp) + _dot(dsum, dperp) * _dot(d, dhat)) * inv_q2
        t5 = t1 - _dot(dp, dm) * inv_q2
        coef_i, coef_r, coef_pp = t1 + t2, -(t3 + t4), t5
    else:
        raise ValueError(which)
    v_t = _dot(vec, dhat)
    v_n = _dot(vec, dperp)
    r_vec = v_t[..., None] * dperp + v_n[..., None] * dhat
    p_vec = v_t[..., None] * dhat - v_n[..., None] * dperp
    return (coef_i[..., None] * vec + coef_r[..., None] * r_vec
            + coef_pp[..., None] * p_vec) / FOUR_PI


def _derivative_integrand(state: SimState, which: str):
    x = state.curve.nodes
    x1 = state.deriv.nodes
    t_grid = tension_map(state.law, x1)

    def contribution(al):
        xs = shift_many(x, al)
        x1s = shift_many(x1, al)
        dx = xs - x[None]
        r2 = np.sum(dx * dx, axis=-1)
        _floor_check(state, r2, al)
        q2 = r2 / (al**2)[:, None]  # |D_alpha X|^2
        d = dx / al[:, None, None]
        dhat = dx / np.sqrt(r2)[..., None]
        d_t = tension_map(state.law, x1s) - t_grid[None]
        applied = _kernel_apply(x1s, x1, d, dhat, 1.0 / q2, d_t, which)
        return ((applied / (al**2)[:, None, None]).sum(axis=0),)

    return contribution


def rhs_derivative(state: SimState, project: bool = True) -> np.ndarray:
    """Tangent-field velocity from the matrix-kernel equation.

    The output is projected to mean zero by default (the continuum
    operator annihilates constants; quadrature leaves a tiny drift).
    """
    out = _accumulate(state, _derivative_integrand(state, "K"))
    if project:
        out = out - out.mean(axis=0)
    return out


def remainder_V(state: SimState) -> np.ndarray:
    """Bounded remainder: the A-kernel part of the derivative equation."""
    return _accumulate(state, _derivative_integrand(state, "A"))


def dissipation_term(state: SimState) -> np.ndarray:
    """The quadrature realization of the half-Laplacian of the tension field.

    Evaluated with pointwise-exact shifted samples on the same alpha grid
    as the kernels, so rhs_derivative == -dissipation_term + remainder_V
    holds to rounding.
    """
    x1 = state.deriv.nodes
    t_grid = tension_map(state.law, x1)

    def contribution(al):
        x1s = shift_many(x1, al)
        d_t = tension_map(state.law, x1s) - t_grid[None]
        return ((d_t / (al**2)[:, None, None]).sum(axis=0),)

    return -_accumulate(state, contribution) / FOUR_PI


def _cbar(state: SimState) -> float:
    x1 = state.deriv.nodes
    mag = np.hypot(x1[:, 0], x1[:, 1])
    return float(np.max(np.maximum(state.law.d1(mag), state.law.eval(mag) / mag)))


def cfl_limit(state: SimState) -> float:
    """Largest stable explicit step: c_cfl / (cbar * max lam_tilde)."""
    lam_max = float(symbol(state.curve.n, state.m).lam_tilde.max())
    return CFL_CONSTANT / (_cbar(state) * lam_max)


def _check_finite(state: SimState, nodes: np.ndarray):
    if not np.all(np.isfinite(nodes)):
        raise SimulationAbort(state.t, "non-finite values")


def step(state: SimState, dt: float, scheme: str = "imex") -> SimState:
    """Advance one step with the classical four-stage explicit scheme or
    the stabilized semi-implicit scheme (stiff half-Laplacian implicit)."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if scheme == "rk4":
        if dt > cfl_limit(state):
            raise ValueError(
                f"dt={dt:.3e} exceeds the explicit stability limit "
                f"{cfl_limit(state):.3e}")
        return _step_rk4(state, dt)
    if scheme == "imex":
        return _step_imex(state, dt)
    raise ValueError(f"unknown scheme {scheme!r}")


def _step_rk4(state: SimState, dt: float) -> SimState:
    x0 = state.curve.nodes

    def rhs_at(nodes, t):
        st = state.advanced(t, Curve.from_nodes(nodes))
        return rhs_position_reduced(st)

    k1 = rhs_at(x0, state.t)
    k2 = rhs_at(x0 + 0.5 * dt * k1, state.t + 0.5 * dt)
    k3 = rhs_at(x0 + 0.5 * dt * k2, state.t + 0.5 * dt)
    k4 = rhs_at(x0 + dt * k3, state.t + dt)
    new_nodes = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_finite(state, new_nodes)
    return state.advanced(state.t + dt, Curve.from_nodes(new_nodes))


def _imex_increments(state: SimState):
    """Derivative-equation RHS and the averaged position velocity in one
    pass over the alpha grid (the shifted frames are shared)."""
    x = state.curve.nodes
    x1 = state.deriv.nodes
    law = state.law
    t_grid = tension_map(law, x1)

    def contribution(al):
        xs = shift_many(x, al)
        x1s = shift_many(x1, al)
        dx = xs - x[None]
        r2 = np.sum(dx * dx, axis=-1)
        _floor_check(state, r2, al)
        q2 = r2 / (al**2)[:, None]
        d = dx / al[:, None, None]
        dhat = dx / np.sqrt(r2)[..., None]
        d_t = tension_map(law, x1s) - t_grid[None]
        deriv_part = (_kernel_apply(x1s, x1, d, dhat, 1.0 / q2, d_t, "K")
                      / (al**2)[:, None, None]).sum(axis=0)
        quad_form = _dot(x1s, dhat) ** 2 - _dot(x1s, _perp(dhat)) ** 2
        mag = np.sqrt(np.sum(x1s * x1s, axis=-1))
        if float(mag.min()) == 0.0:
            raise SimulationAbort(state.t, "tangent vector vanished")
        coef = quad_form / r2 * (law.eval(mag) / mag)
        pos_part = (coef[..., None] * dx).sum(axis=0) / FOUR_PI
        return deriv_part, pos_part

    deriv_rhs, pos_rhs = _accumulate(state, contribution, pieces=2)
    return deriv_rhs - deriv_rhs.mean(axis=0), pos_rhs.mean(axis=0)


def _step_imex(state: SimState, dt: float) -> SimState:
    # cbar is refreshed every step from the current tension Jacobian range
    cbar = _cbar(state)
    lam = symbol(state.curve.n, state.m).lam_tilde
    explicit, mean_velocity = _imex_increments(state)
    c1 = fft_coeffs(state.deriv.nodes)
    numer = c1 * (1.0 + dt * cbar * lam)[:, None] + dt * fft_coeffs(explicit)
    c1_new = numer / (1.0 + dt * cbar * lam)[:, None]
    c1_new[0] = 0.0
    # rebuild the curve: non-mean modes from the tangent field, mean advanced
    # by the averaged position velocity (the derivative equation cannot see
    # translations)
    deriv_nodes = grid_values(c1_new)
    new_nodes = spectral_antiderivative(deriv_nodes) \
        + (state.curve.mean + dt * mean_velocity)[None]
    _check_finite(state, new_nodes)
    return state.advanced(state.t + dt, Curve.from_nodes(new_nodes))


# ---------------------------------------------------------------------------
# configuration-driven runs

@dataclass(frozen=True)
class SimConfig:
    """Run configuration (mirrors the flat config-file keys)."""

    n: int = 128
    m: Optional[int] = None
    dt: float = 1e-3
    horizon: float = 0.1
    scheme: str = "imex"
    init_kind: str = "circle"
    init_radius: float = 1.0
    init_a: float = 2.0
    init_b: float = 1.0
    init_perturb_mode: int = 0
    init_perturb_amp: float = 0.0
    init_rough_exponent: float = 1.4
    init_rough_amp: float = 0.05
    init_file: Optional[str] = None
    tension_kind: str = "hookean"
    tension_k0: float = 1.0
    tension_coef: float = 1.0
    tension_p: float = 2.0
    tension_window: tuple = (0.5, 2.0)
    tension_globalize: bool = False
    tension_table: Optional[str] = None
    output_stride: int = 10
    output_dir: Optional[str] = None
    seed: int = 0
    rho_floor: Optional[float] = None
    mu_kind: str = "log"
    diag_beta_points: int = 1024


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled snapshots with per-snapshot diagnostics records."""

    times: np.ndarray
    curves: tuple
    records: tuple
    scheme: str
    config: Optional[SimConfig] = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if len(t) != len(self.curves) or len(t) != len(self.records):
            raise ValueError("times, curves and records must align")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("output times must be strictly increasing")
        t.flags.writeable = False
        object.__setattr__(self, "times", t)

    @property
    def derivs(self):
        return tuple(c.derivative() for c in self.curves)


def make_initial_curve(cfg: SimConfig) -> Curve:
    n = cfg.n
    if cfg.init_kind == "circle":
        base = Curve.circle(n, radius=cfg.init_radius)
        if cfg.init_perturb_amp == 0.0 or cfg.init_perturb_mode == 0:
            return base
        th = -np.pi + 2.0 * np.pi * np.arange(n) / n
        radial = cfg.init_radius * (1.0 + cfg.init_perturb_amp
                                    * np.cos(cfg.init_perturb_mode * th))
        return Curve.from_nodes(np.stack([radial * np.cos(th),
                                          radial * np.sin(th)], axis=1))
    if cfg.init_kind == "ellipse":
        return Curve.ellipse(n, a=cfg.init_a, b=cfg.init_b)
    if cfg.init_kind == "fourier-file":
        from .curve import read_curve

        if cfg.init_file is None:
            raise ValueError("init.kind=fourier-file requires init.file")
        return read_curve(cfg.init_file)
    if cfg.init_kind == "random-sobolev":
        return _rough_curve(n, cfg.init_rough_exponent, cfg.init_rough_amp,
                            cfg.init_radius, cfg.seed)
    raise ValueError(f"unknown init.kind {cfg.init_kind!r}")


def _rough_curve(n: int, sigma: float, amp: float, radius: float,
                 seed: int) -> Curve:
    """Circle plus a perturbation whose tangent spectrum decays like |k|^-sigma
    with random phases; amp sets the relative tangent-field L2 size."""
    rng = np.random.default_rng(seed)
    c1 = np.zeros((n, 2), dtype=complex)
    for k in range(1, n // 2):  # positive modes, mirrored for a real field
        mag = float(k) ** (-sigma)
        c1[k] = mag * np.exp(2j * np.pi * rng.random(2))
        c1[n - k] = np.conj(c1[k])
    pert_deriv = grid_values(c1)
    base = Curve.circle(n, radius=radius)
    base_l2 = np.sqrt(2.0 * np.pi) * radius
    pert_l2 = np.sqrt(2.0 * np.pi * np.mean(np.sum(pert_deriv**2, axis=-1)))
    scale = amp * base_l2 / pert_l2 if pert_l2 > 0 else 0.0
    pert = spectral_antiderivative(pert_deriv * scale)
    return Curve.from_nodes(base.nodes + pert)


def law_from_config(cfg: SimConfig) -> TensionLaw:
    if cfg.tension_kind == "hookean":
        law = hookean(cfg.tension_k0)
    elif cfg.tension_kind == "power":
        law = power_law(cfg.tension_coef, cfg.tension_p, tuple(cfg.tension_window))
    elif cfg.tension_kind == "arctan":
        law = arctan_law(tuple(cfg.tension_window))
    elif cfg.tension_kind == "table":
        from .tension import table_law

        if cfg.tension_table is None:
            raise ValueError("tension.kind=table requires tension.table")
        data = np.loadtxt(cfg.tension_table)
        law = table_law(data[:, 0], data[:, 1])
    else:
        raise ValueError(f"unknown tension.kind {cfg.tension_kind!r}")
    if cfg.tension_globalize and cfg.tension_kind != "hookean":
        a, b = cfg.tension_window
        law = globalize(law, a, b)
    return law


def _mu_for_diag(cfg: SimConfig, deriv_nodes: np.ndarray) -> MuWeight:
    if cfg.mu_kind == "one":
        return MuWeight.one()
    if cfg.mu_kind == "log":
        return MuWeight.log4()
    if cfg.mu_kind == "construct":
        from .besov import construct_mu

        return construct_mu(deriv_nodes)
    raise ValueError(f"unknown mu kind {cfg.mu_kind!r}")


def _diag_record(state: SimState, mu: MuWeight, scheme: str,
                 beta_points: int) -> dict:
    x1 = state.deriv.nodes
    c = fft_coeffs(x1)
    power = np.sum(np.abs(c) ** 2, axis=-1)
    k = np.abs(wavenumbers(state.curve.n)).astype(float)
    l2 = float(np.sqrt(2.0 * np.pi * power.sum()))
    h_half = float(np.sqrt(2.0 * np.pi * np.sum(k * power)))
    h1 = float(np.sqrt(2.0 * np.pi * np.sum(k**2 * power)))
    bes = besov_diff(x1, BesovParams(0.5, 2, 1, mu), beta_points=beta_points)
    return {
        "schema": "peskin-lab/diag-v1",
        "t": float(state.t),
        "arc_chord": arc_chord(state.curve).value,
        "l2": l2,
        "h_half": h_half,
        "h1": h1,
        "besov_half_mu": float(bes),
        "step_scheme": scheme,
    }


def simulate(cfg: SimConfig, initial: Optional[Curve] = None,
             law: Optional[TensionLaw] = None) -> Trajectory:
    """Run the configured evolution; deterministic given the config."""
    curve = initial if initial is not None else make_initial_curve(cfg)
    the_law = law if law is not None else law_from_config(cfg)
    m = cfg.m if cfg.m is not None else 4 * cfg.n
    state = SimState.make(curve, the_law, t=0.0, m=m, rho_floor=cfg.rho_floor)
    mu = _mu_for_diag(cfg, state.deriv.nodes)
    n_steps = int(round(cfg.horizon / cfg.dt))
    times = [state.t]
    curves = [state.curve]
    records = [_diag_record(state, mu, cfg.scheme, cfg.diag_beta_points)]
    for i in range(1, n_steps + 1):
        state = step(state, cfg.dt, cfg.scheme)
        if i % cfg.output_stride == 0 or i == n_steps:
            times.append(state.t)
            curves.append(state.curve)
            records.append(_diag_record(state, mu, cfg.scheme,
                                        cfg.diag_beta_points))
    return Trajectory(times=np.array(times), curves=tuple(curves),
                      records=tuple(records), scheme=cfg.scheme, config=cfg)
