"""Command-line harness: simulate, verify, norms, audit, compare.

Exit codes: 0 all checks passed / run finished; 1 a check failed; 2 bad
configuration or input; 3 numerical abort (failing time printed).
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys

import numpy as np

from . import __version__
from .besov import BesovParams, MuWeight, besov_diff, besov_lp
from .config import config_from_file, write_manifest, write_ndjson
from .curve import Curve, read_curve, spectral_derivative, write_curve
from .evolution import SimulationAbort, simulate, law_from_config
from . import diagnostics as diag
from . import kernels
from . import operators as ops


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="peskin-lab",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a configured evolution")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", help="override output.dir")

    p_ver = sub.add_parser("verify", help="identity sweeps for kernels and operators")
    p_ver.add_argument("--suite", default="all",
                       choices=["kernels", "operators", "formulation", "all"])
    p_ver.add_argument("--samples", type=int, default=1000)
    p_ver.add_argument("--seed", type=int, default=0)

    p_nrm = sub.add_parser("norms", help="Besov norms of a curve file")
    p_nrm.add_argument("--in", dest="infile", required=True)
    p_nrm.add_argument("--s", type=float, default=0.5)
    p_nrm.add_argument("--p", type=float, default=2.0)
    p_nrm.add_argument("--r", type=float, default=1.0)
    p_nrm.add_argument("--mu", default="one", help="one, log, or file:PATH")
    p_nrm.add_argument("--method", default="diff", choices=["diff", "lp"])
    p_nrm.add_argument("--field", default="derivative",
                       choices=["derivative", "position"])

    p_aud = sub.add_parser("audit", help="run a trajectory audit")
    p_aud.add_argument("--audit", required=True,
                       choices=["apriori", "smoothing", "stability",
                                "equilibrium", "kernels", "operators"])
    p_aud.add_argument("--config")
    p_aud.add_argument("--samples", type=int, default=1000)
    p_aud.add_argument("--seed", type=int, default=0)

    p_cmp = sub.add_parser("compare", help="stability audit on two curve files")
    p_cmp.add_argument("--in-a", dest="in_a", required=True)
    p_cmp.add_argument("--in-b", dest="in_b", required=True)
    p_cmp.add_argument("--config", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "verify":
            return _cmd_verify(args)
        if args.command == "norms":
            return _cmd_norms(args)
        if args.command == "audit":
            return _cmd_audit(args)
        if args.command == "compare":
            return _cmd_compare(args)
    except SimulationAbort as exc:
        print(f"numerical abort at t={exc.t:.6g}: {exc.reason}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


def _cmd_simulate(args) -> int:
    cfg = config_from_file(args.config)
    out_dir = args.out or cfg.output_dir
    if out_dir is None:
        raise ValueError("no output directory (set output.dir or --out)")
    os.makedirs(out_dir, exist_ok=True)
    traj = simulate(cfg)
    stride = cfg.output_stride
    names = []
    for i, curve in enumerate(traj.curves):
        name = f"snap_{i * stride:06d}.curve"
        write_curve(curve, os.path.join(out_dir, name))
        names.append(name)
    write_ndjson(os.path.join(out_dir, "diag.ndjson"), traj.records)
    write_manifest(out_dir, cfg, names + ["diag.ndjson"])
    print(f"wrote {len(traj.curves)} snapshots to {out_dir}")
    return 0


@contextlib.contextmanager
def _flipped_perp():
    original = kernels.perp
    kernels.perp = lambda z: -original(z)
    try:
        yield
    finally:
        kernels.perp = original


def _verify_kernels(samples: int, seed: int):
    rng = np.random.default_rng(seed)
    checks = {}
    z = rng.standard_normal((samples, 2))
    z *= (10.0 ** rng.uniform(-3, 3, samples) / np.hypot(z[:, 0], z[:, 1]))[:, None]
    u = rng.standard_normal((samples, 2))
    checks["cancellation_max"] = (float(np.max(kernels.cancellation_residual(u, z))),
                                  1e-12)
    a = rng.standard_normal((samples, 2))
    b = rng.standard_normal((samples, 2))
    d = rng.standard_normal((samples, 2))
    d += np.sign(d) * 0.1  # keep |d| away from zero
    direct = kernels.kernel_K(a, b, d, form="direct")
    split = kernels.kernel_K(a, b, d, form="split")
    scale = max(1.0, float(np.max(np.abs(direct))))
    checks["K_direct_vs_split"] = (float(np.max(np.abs(direct - split))), 1e-12)
    swapped = kernels.kernel_K(b, a, d, form="direct")
    # symmetry and orientation independence measured relative to the
    # kernel magnitude (entries grow like 1/|d|^2)
    checks["K_symmetry"] = (float(np.max(np.abs(direct - swapped))) / scale, 1e-14)
    with _flipped_perp():
        flipped = kernels.kernel_K(a, b, d, form="direct")
    checks["K_orientation"] = (float(np.max(np.abs(direct - flipped))) / scale,
                               1e-14)
    return checks


def _verify_operators(samples: int, seed: int):
    rng = np.random.default_rng(seed)
    checks = {}
    n = 256
    th = -np.pi + 2.0 * np.pi * np.arange(n) / n
    worst = 0.0
    for k in range(1, 65):
        f = np.cos(k * th)
        worst = max(worst, float(np.max(np.abs(ops.lambda_sine(f) - k * f))))
    checks["sine_eigenvalue_max_err"] = (worst, 1e-7)
    lam = ops.symbol(n, 8 * n).lam_tilde
    ks = np.abs(np.fft.fftfreq(n, 1.0 / n))
    mask = ks >= 1
    ratio = lam[mask] / ks[mask]
    ok = float(np.max(np.abs(ratio - np.clip(ratio, 1.0 / np.pi**2, 0.25))))
    checks["tilde_ratio_bracket_excess"] = (ok, 0.0)
    f = rng.standard_normal(n)
    f -= f.mean()
    total = np.zeros(n)
    fam = ops.lp_family(n)
    for j in fam.js:
        total += ops.lp_project(f, j)
    checks["lp_reconstruction"] = (float(np.max(np.abs(total - f))), 1e-10)
    return checks


def _verify_formulation(seed: int):
    from .curve import Curve
    from .evolution import (SimState, remainder_V, rhs_derivative,
                            rhs_position_bi, rhs_position_reduced,
                            dissipation_term)
    from .tension import hookean

    rng = np.random.default_rng(seed)
    n, m = 128, 512
    checks = {"bi_vs_reduced_rel": (0.0, 1e-6),
              "deriv_vs_deriv_of_reduced_rel": (0.0, 1e-6),
              "split_identity": (0.0, 1e-10)}
    for _ in range(3):
        curve = _random_bandlimited_curve(rng, n, modes=16, amp=0.2)
        st = SimState.make(curve, hookean(1.0), m=m)
        rb = rhs_position_bi(st)
        rr = rhs_position_reduced(st)
        rel = _rel_l2(rb - rr, rr)
        checks["bi_vs_reduced_rel"] = (max(checks["bi_vs_reduced_rel"][0], rel), 1e-6)
        rd = rhs_derivative(st)
        rds = spectral_derivative(rr)
        rds -= rds.mean(axis=0)
        rel = _rel_l2(rd - rds, rds)
        checks["deriv_vs_deriv_of_reduced_rel"] = (
            max(checks["deriv_vs_deriv_of_reduced_rel"][0], rel), 1e-6)
        resid = rhs_derivative(st, project=False) \
            - (-dissipation_term(st) + remainder_V(st))
        checks["split_identity"] = (
            max(checks["split_identity"][0], float(np.max(np.abs(resid)))), 1e-10)
    return checks


def _random_bandlimited_curve(rng, n: int, modes: int, amp: float) -> Curve:
    th = -np.pi + 2.0 * np.pi * np.arange(n) / n
    pert = np.zeros((n, 2))
    for k in range(1, modes + 1):
        scale = amp * k**-3.0
        for c in range(2):
            pert[:, c] += scale * (rng.standard_normal() * np.cos(k * th)
                                   + rng.standard_normal() * np.sin(k * th))
    return Curve.from_nodes(Curve.circle(n).nodes + pert)


def _rel_l2(diff: np.ndarray, ref: np.ndarray) -> float:
    num = np.sqrt(np.mean(np.sum(diff**2, axis=-1)))
    den = np.sqrt(np.mean(np.sum(ref**2, axis=-1)))
    return float(num / den) if den > 0 else float(num)


def _cmd_verify(args) -> int:
    suites = ["kernels", "operators", "formulation"] if args.suite == "all" \
        else [args.suite]
    failed = False
    for suite in suites:
        if suite == "kernels":
            checks = _verify_kernels(args.samples, args.seed)
        elif suite == "operators":
            checks = _verify_operators(args.samples, args.seed)
        else:
            checks = _verify_formulation(args.seed)
        for name, (value, tol) in checks.items():
            ok = value <= tol
            failed |= not ok
            print(f"[{suite}] {name}: {value:.3e} <= {tol:.0e} "
                  f"{'PASS' if ok else 'FAIL'}")
    return 1 if failed else 0


def _mu_from_arg(arg: str) -> MuWeight | None:
    if arg == "one":
        return None
    if arg == "log":
        return MuWeight.log4()
    if arg.startswith("file:"):
        table = np.loadtxt(arg[5:])
        return MuWeight(table=np.atleast_1d(table))
    raise ValueError(f"unknown mu weight {arg!r}")


def _cmd_norms(args) -> int:
    curve = read_curve(args.infile)
    values = curve.derivative().nodes if args.field == "derivative" else curve.nodes
    params = BesovParams(args.s, args.p, args.r, _mu_from_arg(args.mu))
    value = besov_diff(values, params) if args.method == "diff" \
        else besov_lp(values, params)
    print(json.dumps({"file": args.infile, "field": args.field, "s": args.s,
                      "p": args.p, "r": args.r, "mu": args.mu,
                      "method": args.method, "value": value}, sort_keys=True))
    return 0


def _cmd_audit(args) -> int:
    if args.audit in ("kernels", "operators"):
        checks = _verify_kernels(args.samples, args.seed) \
            if args.audit == "kernels" else _verify_operators(args.samples, args.seed)
        passed = all(v <= tol for v, tol in checks.values())
        print(json.dumps({"audit": args.audit, "passed": passed,
                          "measured": {k: v for k, (v, _) in checks.items()}},
                         sort_keys=True))
        return 0 if passed else 1
    if args.config is None:
        raise ValueError(f"audit {args.audit} requires --config")
    cfg = config_from_file(args.config)
    if args.audit == "stability":
        from .evolution import make_initial_curve

        report = diag.stability_audit(make_initial_curve(cfg),
                                      law_from_config(cfg), cfg.horizon,
                                      cfg=cfg)
    else:
        traj = simulate(cfg)
        if args.audit == "apriori":
            report = diag.apriori_audit(traj, MuWeight.log4(),
                                        law_from_config(cfg).lam)
        elif args.audit == "smoothing":
            mode = "rough" if cfg.init_kind == "random-sobolev" else "smooth"
            report = diag.smoothing_audit(traj, mode=mode)
        else:
            report = diag.equilibrium_audit(traj)
    print(json.dumps({"audit": report.name, "passed": report.passed,
                      "measured": report.measured,
                      "thresholds": report.thresholds,
                      "digest": report.inputs_digest}, sort_keys=True))
    return 0 if report.passed else 1


def _cmd_compare(args) -> int:
    from .besov import sqrt_weight

    cfg = config_from_file(args.config)
    x0 = read_curve(args.in_a)
    y0 = read_curve(args.in_b)
    report = diag.stability_audit(x0, law_from_config(cfg), cfg.horizon,
                                  cfg=cfg, y0=y0,
                                  omega=sqrt_weight(MuWeight.log4()))
    print(json.dumps({"audit": report.name, "passed": report.passed,
                      "measured": report.measured}, sort_keys=True))
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
