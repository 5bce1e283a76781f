import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import peskin_lab.kernels as kern
from peskin_lab.kernels import (
    KernelInput,
    a_beta_bound_audit,
    a_bound_audit,
    a_pair_bound_audit,
    cancellation_residual,
    kernel_A,
    kernel_K,
    kernel_K0,
    perp,
    projection,
    reflection,
    stokeslet,
    stokeslet_derivatives,
)

FOUR_PI = 4.0 * np.pi


def rotation(phi):
    return np.array([[np.cos(phi), -np.sin(phi)], [np.sin(phi), np.cos(phi)]])


# --- Stokeslet -------------------------------------------------------------

def test_stokeslet_unit_x():
    z = np.array([1.0, 0.0])
    assert np.max(np.abs(stokeslet(z, "G1"))) < 1e-15  # log 1 = 0
    assert np.max(np.abs(stokeslet(z, "G2") - np.diag([1.0, 0.0]) / FOUR_PI)) < 1e-15


def test_stokeslet_diagonal_case():
    z = np.array([1.0, 1.0])
    expected = -(0.5 * np.log(2.0) / FOUR_PI) * np.eye(2) \
        + np.full((2, 2), 1.0 / (8.0 * np.pi))
    assert np.max(np.abs(stokeslet(z, "G") - expected)) < 1e-15


def test_stokeslet_rejects_zero():
    with pytest.raises(ValueError):
        stokeslet(np.zeros(2))


def fd_stokeslet_dir(u, z, part, h=1e-6):
    return (stokeslet(z + h * u, part) - stokeslet(z - h * u, part)) / (2 * h)


def fd_stokeslet_dir2(u, v, z, part, h=1e-4):
    return (fd_stokeslet_dir(u, z + h * v, part)
            - fd_stokeslet_dir(u, z - h * v, part)) / (2 * h)


def test_derivative_orthogonal_case():
    out = stokeslet_derivatives(np.array([0.0, 1.0]), None,
                                np.array([2.0, 0.0]), "d_u G1")
    assert np.max(np.abs(out)) < 1e-15


def test_derivative_aligned_case():
    out = stokeslet_derivatives(np.array([1.0, 0.0]), None,
                                np.array([1.0, 0.0]), "d_u G1")
    assert np.max(np.abs(out + np.eye(2) / FOUR_PI)) < 1e-15


def test_derivatives_match_finite_differences(rng):
    for _ in range(30):
        u = rng.standard_normal(2)
        v = rng.standard_normal(2)
        z = rng.standard_normal(2)
        if np.hypot(*z) < 0.3:
            continue
        for part, which in (("G1", "d_u G1"), ("G2", "d_u G2")):
            exact = stokeslet_derivatives(u, None, z, which)
            assert np.max(np.abs(exact - fd_stokeslet_dir(u, z, part))) < 1e-6
        for part, which in (("G1", "d_u d_v G1"), ("G2", "d_u d_v G2")):
            exact = stokeslet_derivatives(u, v, z, which)
            assert np.max(np.abs(exact - fd_stokeslet_dir2(u, v, z, part))) < 1e-6


# --- cancellation ----------------------------------------------------------

def test_cancellation_orthogonal():
    assert cancellation_residual(np.array([0.0, 1.0]), np.array([2.0, 0.0])) < 1e-16


def test_cancellation_diagonal_hand_case():
    u = z = np.array([1.0, 1.0])
    du_g1 = stokeslet_derivatives(u, None, z, "d_u G1")
    term1 = du_g1 @ z
    term2 = stokeslet(z, "G2") @ u
    assert np.max(np.abs(term1 + np.array([1.0, 1.0]) / FOUR_PI)) < 1e-15
    assert np.max(np.abs(term2 - np.array([1.0, 1.0]) / FOUR_PI)) < 1e-15
    assert cancellation_residual(u, z) < 1e-15


def test_cancellation_sweep(rng):
    z = rng.standard_normal((1000, 2))
    z *= (10.0 ** rng.uniform(-3, 3, 1000) / np.hypot(z[:, 0], z[:, 1]))[:, None]
    u = rng.standard_normal((1000, 2))
    assert float(np.max(cancellation_residual(u, z))) <= 1e-12


# --- matrix kernels ---------------------------------------------------------

def test_kernel_identity_when_all_equal(rng):
    for _ in range(10):
        v = rng.standard_normal(2)
        if np.hypot(*v) < 0.1:
            continue
        k = kernel_K(v, v, v)
        assert np.max(np.abs(k - np.eye(2) / FOUR_PI)) < 1e-14
        assert np.max(np.abs(kernel_A(v, v, v))) < 1e-14


def test_kernel_hand_case_both_forms():
    a = b = np.array([0.0, 1.0])
    d = np.array([1.0, 0.0])
    expected = np.diag([-3.0, 1.0]) / FOUR_PI
    assert np.max(np.abs(kernel_K(a, b, d, "direct") - expected)) < 1e-15
    assert np.max(np.abs(kernel_K(a, b, d, "split") - expected)) < 1e-15
    # P(d) = diag(1, -1): a.P b = -1, R-term 0, (P - I)-term -2
    p = projection(d)
    assert np.allclose(p, np.diag([1.0, -1.0]), atol=1e-15)
    assert abs(a @ p @ b + 1.0) < 1e-15
    assert abs(a @ reflection(d) @ b) < 1e-15


def _random_inputs(rng, size, spread=1.0):
    d = rng.standard_normal((size, 2))
    nd = np.hypot(d[:, 0], d[:, 1])
    d = d / nd[:, None] * (0.1 + 10.0 ** rng.uniform(-2, 1, size))[:, None]
    a = d + spread * rng.standard_normal((size, 2))
    b = d + spread * rng.standard_normal((size, 2))
    return a, b, d


def test_kernel_direct_vs_split_sweep(rng):
    a, b, d = _random_inputs(rng, 1000)
    direct = kernel_K(a, b, d, "direct")
    split = kernel_K(a, b, d, "split")
    assert float(np.max(np.abs(direct - split))) <= 1e-12


def test_kernel_symmetry_in_endpoints(rng):
    a, b, d = _random_inputs(rng, 1000)
    kab = kernel_K(a, b, d)
    kba = kernel_K(b, a, d)
    scale = max(1.0, float(np.max(np.abs(kab))))
    assert float(np.max(np.abs(kab - kba))) / scale <= 1e-14


def test_kernel_orientation_independence(rng, monkeypatch):
    a, b, d = _random_inputs(rng, 500)
    base_k = kernel_K(a, b, d)
    base_k0 = kernel_K0(a, b, d, np.full(500, 0.7))
    base_p = projection(d)
    original = kern.perp
    monkeypatch.setattr(kern, "perp", lambda z: -original(z))
    assert float(np.max(np.abs(kernel_K(a, b, d) - base_k))) <= 1e-14
    assert float(np.max(np.abs(kernel_K0(a, b, d, np.full(500, 0.7)) - base_k0))) <= 1e-14
    assert float(np.max(np.abs(projection(d) - base_p))) <= 1e-15


def test_basis_mutually_orthogonal(rng):
    for _ in range(50):
        z = rng.standard_normal(2)
        if np.hypot(*z) < 0.1:
            continue
        eye = np.eye(2)
        r = reflection(z)
        p = projection(z)
        assert abs(np.sum(eye * r)) < 1e-14
        assert abs(np.sum(eye * p)) < 1e-14
        assert abs(np.sum(r * p)) < 1e-14


def test_kernel_rotation_equivariance(rng):
    a, b, d = _random_inputs(rng, 100)
    for phi in (0.3, 1.9):
        q = rotation(phi)
        lhs = kernel_K(a @ q.T, b @ q.T, d @ q.T)
        rhs = np.einsum("ij,...jk,lk->...il", q, kernel_K(a, b, d), q)
        assert float(np.max(np.abs(lhs - rhs))) < 1e-13


def test_kernel_scaling_invariance(rng):
    a, b, d = _random_inputs(rng, 100)
    for r in (0.01, 7.3):
        assert float(np.max(np.abs(kernel_K(r * a, r * b, r * d)
                                   - kernel_K(a, b, d)))) < 1e-12


def test_kernel_k0_scaling_identities(rng):
    a, b, d = _random_inputs(rng, 200)
    # alpha = 1: K0 = K with d = delta X
    assert np.max(np.abs(kernel_K0(a, b, d, np.ones(200)) - kernel_K(a, b, d))) < 1e-14
    # alpha = 2 with delta X = 2 d: K0 = K(a, b, d) / 4
    assert np.max(np.abs(kernel_K0(a, b, 2.0 * d, np.full(200, 2.0))
                         - kernel_K(a, b, d) / 4.0)) < 1e-14
    alphas = rng.uniform(0.2, np.pi, 200) * rng.choice([-1.0, 1.0], 200)
    k0 = kernel_K0(a, b, d, alphas)
    rebuilt = kernel_K(a, b, d / alphas[:, None])
    assert np.max(np.abs(k0 * (alphas**2)[:, None, None] - rebuilt)) < 1e-12


def test_kernel_rejects_degenerate():
    with pytest.raises(ValueError):
        kernel_K(np.ones(2), np.ones(2), np.zeros(2))
    with pytest.raises(ValueError):
        kernel_K0(np.ones(2), np.ones(2), np.ones(2), 0.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3),
       st.floats(0.3, 3), st.floats(0, 2 * np.pi))
def test_kernel_split_property(ax, ay, bx, by, dr, dphi):
    a = np.array([ax, ay])
    b = np.array([bx, by])
    d = dr * np.array([np.cos(dphi), np.sin(dphi)])
    direct = kernel_K(a, b, d, "direct")
    split = kernel_K(a, b, d, "split")
    assert np.max(np.abs(direct - split)) < 1e-12
    assert np.max(np.abs(direct - direct.T)) < 1e-13  # symmetric matrix


# --- pointwise bound audits --------------------------------------------------

def test_a_bound_zero_difference():
    v = np.array([0.5, 0.2])
    rep = a_bound_audit(KernelInput(a=v, b=v, d=v), rho=0.1)
    assert rep.passed and rep.max_ratio == 0.0


def test_a_bound_hand_case():
    inp = KernelInput(a=np.array([0.0, 1.0]), b=np.array([0.0, 1.0]),
                      d=np.array([1.0, 0.0]))
    rep = a_bound_audit(inp, rho=1.0)
    assert rep.passed
    # |A|_F = |diag(-4, 0)| / 4 pi = 1/pi; bound C (2 + 2 sqrt 2)
    amat = kernel_A(inp.a, inp.b, inp.d)
    assert abs(np.sqrt(np.sum(amat**2)) - 1.0 / np.pi) < 1e-14


def test_a_bound_sweep(rng):
    a, b, d = _random_inputs(rng, 10_000)
    rep = a_bound_audit(KernelInput(a=a, b=b, d=d), rho=0.1)
    assert rep.n_violations == 0
    assert rep.max_ratio <= 1.0


def test_a_bound_rejects_floor_violation():
    inp = KernelInput(a=np.ones(2), b=np.ones(2), d=np.array([0.05, 0.0]))
    with pytest.raises(ValueError):
        a_bound_audit(inp, rho=0.1)


def test_a_beta_bound_sweep(rng):
    a1, b1, d1 = _random_inputs(rng, 10_000, spread=0.5)
    a2, b2, d2 = _random_inputs(rng, 10_000, spread=0.5)
    rep = a_beta_bound_audit(KernelInput(a=a1, b=b1, d=d1),
                             KernelInput(a=a2, b=b2, d=d2), rho=0.1)
    assert rep.n_violations == 0


def test_a_pair_bound_sweep(rng):
    ax, bx, dx = _random_inputs(rng, 10_000, spread=0.5)
    ay, by, dy = _random_inputs(rng, 10_000, spread=0.5)
    rep = a_pair_bound_audit(KernelInput(a=ax, b=bx, d=dx),
                             KernelInput(a=ay, b=by, d=dy), rho=0.1)
    assert rep.n_violations == 0


def test_kernel_input_derived_fields(rng):
    a, b, d = _random_inputs(rng, 10)
    inp = KernelInput(a=a, b=b, d=d)
    assert np.allclose(inp.delta_plus, a - d)
    assert np.allclose(inp.delta_minus, b - d)
    with pytest.raises(ValueError):
        KernelInput(a=a, b=b, d=np.zeros_like(d))
