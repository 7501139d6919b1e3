"""Command line: ``paraunion {run,validate,estimate-delta,report}``.

Exit codes
----------
0  run converged / all validations passed / estimate produced
1  usage or configuration error (including kappa, lambda or x0 out of range)
2  run stopped at max_iter
3  an assumption validator found a violation
"""
from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .analysis import (certificate_to_json, certify_run, estimate_delta,
                       format_certificate, q_bound)
from .config import (ConfigError, build_instance, iteration_config, load_config,
                     override_seed, problem_seeds, starting_point)
from .engine import IterationError, encode_key, read_trace, run, write_trace
from .operators import FixedPointNotFound, find_fixed_point, validate_paracontraction
from .space import grid_points, sample_set
from .union import check_A3

EXIT_OK, EXIT_ERROR, EXIT_MAX_ITER, EXIT_ASSUMPTION = 0, 1, 2, 3

DEFAULT_EPS = (0.5, 0.1, 0.01)


def _eps_levels(cfg):
    return tuple(cfg.get("analysis", {}).get("epsilon", DEFAULT_EPS))


def _grid(inst, M, n):
    C = inst.union.C
    if C.dim > 2:
        raise ConfigError("grid sampling is limited to dimensions 1 and 2")
    return grid_points(C, C.theta, M, max(2, round(n ** (1.0 / C.dim))))


def _delta_map(cfg, inst, M, levels):
    """A-priori delta estimates per epsilon, when requested and meaningful."""
    an = cfg.get("analysis", {})
    n = an.get("delta_samples", 0)
    if n <= 0 or inst.z_star is None or inst.z_scope != "common" or M <= 0:
        return None
    points = _grid(inst, M, n) if an.get("delta_sampling") == "grid" else None
    out = {}
    for eps in levels:
        est = estimate_delta(inst.union, inst.z_star, eps, M, n_samples=n,
                             seed=an.get("seed", 0), points=points)
        out[eps] = est.delta_hat
    return out


def _certify(cfg, inst, r):
    levels = _eps_levels(cfg)
    theta = inst.union.C.theta
    M = float(np.linalg.norm(r.x0 - theta))
    if inst.z_star is not None:
        M = max(M, float(np.linalg.norm(inst.z_star - theta)))
    deltas = _delta_map(cfg, inst, M, levels)
    return certify_run(r, inst.union, inst.z_star, levels, inst.name,
                       delta_hat=deltas, M_apriori=M)


def _run_one(cfg, seed, out_dir, formats):
    inst = build_instance(cfg, seed)
    ic = iteration_config(cfg)
    x0 = starting_point(cfg, inst)
    r = run(inst.union, x0, ic, inst.z_star)
    cert = _certify(cfg, inst, r)
    os.makedirs(out_dir, exist_ok=True)
    stem = os.path.join(out_dir, inst.name)
    if "csv" in formats:
        write_trace(r, stem + ".trace.csv")
    if "txt" in formats:
        with open(stem + ".certificate.txt", "w") as f:
            f.write(format_certificate(cert))
    if "json" in formats:
        with open(stem + ".certificate.json", "w") as f:
            f.write(certificate_to_json(cert) + "\n")
    st = cert.stabilization
    t0 = st.t0 if st is not None and st.stabilized else "-"
    table = " ".join(f"{lv.epsilon:g}:{lv.large_steps}" for lv in cert.levels)
    summary = (f"{inst.name}: {r.termination} steps={cert.n_steps} "
               f"final_residual={cert.final_residual:.3e} t0={t0} large_steps=[{table}]")
    return r.termination, summary


def _run_task(args):
    cfg, seed, out_dir, formats = args
    try:
        return _run_one(cfg, seed, out_dir, formats)
    except (ConfigError, ValueError, IterationError) as e:
        return "error", f"error: {e}"


def cmd_run(args):
    cfg = _load(args)
    out = cfg.get("output", {})
    out_dir = args.out or out.get("dir", "out")
    formats = out.get("formats", ["csv", "txt", "json"])
    tasks = [(cfg, s, out_dir, formats) for s in problem_seeds(cfg)]
    # fail fast on configuration problems before any iteration starts
    iteration_config(cfg)
    if args.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    for _, line in results:
        print(line)
    outcomes = [o for o, _ in results]
    if "error" in outcomes:
        return EXIT_ERROR
    return EXIT_MAX_ITER if "max_iter" in outcomes else EXIT_OK


def cmd_validate(args):
    cfg = _load(args)
    val = cfg.get("validate", {})
    samples = val.get("samples", 1000)
    probes = val.get("probe_points", 100)
    seed = val.get("seed", 0)
    radii = tuple(val.get("radii", (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)))
    ok = True
    for s in problem_seeds(cfg):
        inst = build_instance(cfg, s)
        U = inst.union
        C = U.C
        M = val.get("M")
        if M is None:
            pts = [C.theta] + list(inst.x0s) + ([inst.z_star] if inst.z_star is not None else [])
            M = max(1.0, max(float(np.linalg.norm(p - C.theta)) for p in pts))
        for key in U.family.keys():
            T = U.family[key]
            try:
                z = find_fixed_point(T, C.theta)
            except FixedPointNotFound as e:
                print(f"{inst.name}: operator {encode_key(key)}: {e}")
                return EXIT_ERROR
            rep = validate_paracontraction(T, C, M, samples, seed, z=z,
                                           name=f"{inst.name}[{encode_key(key)}]")
            status = "pass" if rep.passed else f"FAIL ({len(rep.violations)} violations)"
            print(f"A2 {rep.operator} ({T.kind}): {status}, samples={rep.samples}, "
                  f"max_slack={rep.max_slack:.3e}")
            ok &= rep.passed
        rng = np.random.default_rng(seed)
        points = sample_set(C, C.theta, M, probes, rng)
        fails = 0
        for i, x in enumerate(points):
            rep = check_A3(U, x, n_probe=probes, radii=radii, seed=seed + i)
            if not rep.passed:
                fails += 1
                print(f"A3 {inst.name}: violation near point {i}, witness "
                      f"{np.array2string(rep.witness, precision=6)}")
        print(f"A3 {inst.name} ({U.selection.kind}): "
              f"{'pass' if not fails else 'FAIL'} at {len(points)} points")
        ok &= not fails
    return EXIT_OK if ok else EXIT_ASSUMPTION


def cmd_estimate_delta(args):
    cfg = _load(args)
    inst = build_instance(cfg, problem_seeds(cfg)[0])
    if inst.z_star is None:
        print("estimate-delta needs a problem with a known common fixed point z_star")
        return EXIT_ERROR
    if inst.z_scope != "common":
        print("estimate-delta needs z_star fixed by every operator; this problem's "
              "reference point is only fixed by the branches selected at it")
        return EXIT_ERROR
    an = cfg.get("analysis", {})
    n = an.get("delta_samples", 10_000)
    points = _grid(inst, args.M, n) if an.get("delta_sampling") == "grid" else None
    est = estimate_delta(inst.union, inst.z_star, args.epsilon, args.M, n_samples=n,
                         seed=an.get("seed", 0), points=points)
    kappa = float(cfg.get("iteration", {}).get("kappa", 0.25))
    print(f"problem: {inst.name}")
    print(f"epsilon: {args.epsilon!r}")
    print(f"M: {args.M!r}")
    print(f"samples: {est.n_samples} ({'grid' if points is not None else 'random'}, seed={est.seed})")
    print(f"active_samples: {est.n_active}")
    if est.empty:
        print("delta_hat: inf (empty active region: no sampled move exceeds epsilon)")
        return EXIT_OK
    print(f"delta_hat: {est.delta_hat!r}")
    print(f"argmin: operator={encode_key(est.argmin[0])} x={';'.join(repr(float(v)) for v in est.argmin[1])}")
    print(f"Q_plain: {q_bound(args.M, est.delta_hat, 'plain')}")
    print(f"Q_km: {q_bound(args.M, est.delta_hat, 'km', kappa)} (kappa={kappa!r})")
    return EXIT_OK


def cmd_report(args):
    cfg = _load(args)
    if not args.trace:
        raise ConfigError("report needs --trace PATH")
    r = read_trace(args.trace)
    inst = build_instance(cfg, problem_seeds(cfg)[0])
    cert = _certify(cfg, inst, r)
    print(certificate_to_json(cert) + "\n" if args.json else format_certificate(cert), end="")
    return EXIT_OK


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = override_seed(cfg, args.seed)
    return cfg


def build_parser():
    p = argparse.ArgumentParser(prog="paraunion", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, metavar="PATH")
        sp.add_argument("--seed", type=int, default=None, help="replace every seed in the config")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--out", default=None, metavar="DIR")
        return sp

    common(sub.add_parser("run", help="iterate and certify")).set_defaults(func=cmd_run)
    common(sub.add_parser("validate", help="check the operator and selection assumptions")
           ).set_defaults(func=cmd_validate)
    sp = common(sub.add_parser("estimate-delta", help="sampled uniform decrease and Q bounds"))
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--M", type=float, required=True)
    sp.set_defaults(func=cmd_estimate_delta)
    sp = common(sub.add_parser("report", help="re-certify a trace file"))
    sp.add_argument("--trace", metavar="PATH")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "epsilon", None) is not None and not (args.epsilon > 0 and args.M > 0):
        print("error: --epsilon and --M must be positive", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except (ConfigError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
