"""Acceptance criteria. Each test prints one PASS/FAIL line, then asserts."""
import filecmp
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from benchmarks import benchmark_cases, operator_zoo, run_case
from paraunion.analysis import (certify_run, detect_stabilization,
                                estimate_delta, q_bound)
from paraunion.cli import main as cli_main
from paraunion.engine import residual_identity_check, run_plain
from paraunion.operators import Scaling, validate_paracontraction
from paraunion.problems import make_sparse_affine_feasibility, make_toy_1d
from paraunion.space import WholeSpace, grid_points
from paraunion.union import check_A3

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
EPS_LEVELS = (0.5, 0.1, 0.01)


@pytest.fixture(scope="module")
def runs():
    """Every benchmark case with its run, plus the wall time of all runs."""
    cases = benchmark_cases()
    t = time.perf_counter()
    out = [(c, run_case(c)) for c in cases]
    return out, time.perf_counter() - t


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok
    return emit


def common_runs(runs):
    return [(c, r) for c, r in runs[0] if c[0] in ("halving", "convex")]


def test_1_fejer_monotone(runs, report):
    rs = common_runs(runs)
    n_inst = len({id(c[1]) for c, _ in rs})
    modes = {c[3].mode for c, _ in rs}
    worst = -np.inf
    for (fam, inst, x0, cfg), r in rs:
        d = np.array([np.linalg.norm(inst.z_star - rec.x) for rec in r.trace])
        worst = max(worst, np.max(np.diff(d)))
    ok = worst <= 1e-10 and n_inst >= 20 and modes == {"plain", "km"} and runs[1] < 10
    report(1, ok, f"{n_inst} instances, {len(rs)} runs ({'/'.join(sorted(modes))}), "
                  f"max distance increase {worst:.2e}, runtime {runs[1]:.2f}s")
    assert ok


def test_2_envelope(runs, report):
    worst, ratio = -np.inf, 0.0
    for (fam, inst, x0, cfg), r in runs[0]:
        theta = inst.union.C.theta
        M = max(np.linalg.norm(x0 - theta), np.linalg.norm(inst.z_star - theta))
        dist = max(np.linalg.norm(rec.x - theta) for rec in r.trace)
        worst = max(worst, dist - 3 * M)
        ratio = max(ratio, dist / M)
    ok = worst <= 1e-8
    report(2, ok, f"{len(runs[0])} runs, max dist(x_t, theta) / M = {ratio:.4f} (limit 3)")
    assert ok


def test_3_residual_decay(runs, report):
    rs = common_runs(runs)
    bad = [(c[1].name, r.termination, r.final_residual) for c, r in rs
           if not (r.final_residual <= 1e-9 and len(r.steps) <= 10_000)]
    worst = max(r.final_residual for _, r in rs)
    longest = max(len(r.steps) for _, r in rs)
    report(3, not bad, f"{len(rs)} runs, max final residual {worst:.2e}, "
                       f"longest run {longest} iterations")
    assert not bad, bad[:3]


def test_4_counting_identity(runs, report):
    checked, bad = 0, []
    for (fam, inst, x0, cfg), r in runs[0]:
        cert = certify_run(r, inst.union, inst.z_star, EPS_LEVELS)
        d0 = Fraction(float(np.linalg.norm(inst.z_star - r.x0)))
        for lv in cert.levels:
            if lv.delta_run is None or lv.delta_run <= 0:
                continue
            checked += 1
            # recount from the raw trace, independent of the certificate fields
            big = [rec for rec in r.steps if rec.residual > lv.epsilon]
            if len(big) != lv.large_steps:
                bad.append((inst.name, lv.epsilon, "count"))
            if not Fraction(lv.large_steps) * Fraction(lv.delta_run) <= d0:
                bad.append((inst.name, lv.epsilon, lv.large_steps, lv.delta_run))
    report(4, not bad, f"{checked} (run, epsilon) pairs with delta_run > 0, "
                       f"{len(bad)} violations, exact rational arithmetic")
    assert not bad and checked > 0


def test_5_apriori_q(report):
    toy = make_toy_1d("halving")
    C = toy.union.C
    pts = grid_points(C, C.theta, 4.0, 100_000)
    est = estimate_delta(toy.union, toy.z_star, 1.0, 4.0, points=pts)
    q_plain = q_bound(4.0, est.delta_hat)
    q_km = q_bound(4.0, est.delta_hat, "km", 0.25)
    r = run_plain(toy.union, [8.0])
    count = int(np.sum(r.residuals > 1.0))
    ok = (len(pts) == 100_000 and 0.99 <= est.delta_hat <= 2.0 and q_plain <= 9
          and count == 2 and count <= q_plain and q_km == 4 * q_plain)
    report(5, ok, f"delta_hat={est.delta_hat!r} on {len(pts)} grid points, "
                  f"Q_plain={q_plain}, observed count={count}, Q_km={q_km}")
    assert ok


def test_6_km_identity(runs, report):
    worst, n, bad = 0.0, 0, []
    for (fam, inst, x0, cfg), r in runs[0]:
        if cfg.mode != "km":
            continue
        n += 1
        chk = residual_identity_check(r, inst.union, tol=1e-10)
        worst = max(worst, chk.max_error)
        if not chk.passed:
            bad.append(inst.name)
    report(6, not bad, f"{n} KM runs, max |residual - lam * move| = {worst:.2e}")
    assert not bad and n > 0


def sparse_instances():
    out = []
    for seed in range(12):
        n, s = 6 + seed % 7, 2 + seed % 2
        out.append(make_sparse_affine_feasibility(n, n // 2, s, 1000 + seed))
    return out


def test_7_stabilization(report):
    insts = sparse_instances()
    bad, t0s = [], []
    for inst in insts:
        U = inst.union
        x0 = inst.x0s[-1]
        assert np.linalg.norm(x0 - inst.z_star) <= 0.1 + 1e-12
        r = run_plain(U, x0)
        st = detect_stabilization(r, U)
        if not st.stabilized:
            bad.append((inst.name, st.reason))
            continue
        t0s.append(st.t0)
        phi_star = set(U.select(st.x_star))
        for rec in r.trace[st.t0:]:
            if not set(U.select(rec.x)) <= phi_star:
                bad.append((inst.name, rec.t, "selection"))
            if rec.active_index is not None:
                T = U.family[rec.active_index]
                if np.linalg.norm(T(st.x_star) - st.x_star) > 1e-8:
                    bad.append((inst.name, rec.t, "operator does not fix x*"))
    dims = sorted({i.dim for i in insts})
    report(7, not bad and len(insts) >= 10,
           f"{len(insts)} instances (n={dims[0]}..{dims[-1]}, s=2..3), t0 in "
           f"[{min(t0s, default='-')}, {max(t0s, default='-')}], {len(bad)} violations")
    assert not bad and len(insts) >= 10


def test_8_validators(report):
    zoo = operator_zoo()
    a2 = {name: validate_paracontraction(T, C, 10.0, 1000, seed=0) for name, T, C in zoo}
    zoo_ok = all(rep.passed and rep.samples == 1000 for rep in a2.values())
    C = WholeSpace(theta=np.zeros(2))
    exp = validate_paracontraction(Scaling(1.1, [0.0, 0.0]), C, 10.0, 1000, seed=0)
    expansion_caught = len(exp.violations) >= 1

    inst = make_sparse_affine_feasibility(8, 4, 2, 0)
    U = inst.union
    rng = np.random.default_rng(0)
    points, a3_fail = [], 0
    while len(points) < 100:
        x = rng.normal(size=8)
        mags = np.sort(np.abs(x))[::-1]
        # non-tie: clear gap between the s-th and (s+1)-th magnitudes
        if mags[1] - mags[2] > 1e-3:
            points.append(x)
    for i, x in enumerate(points):
        a3_fail += not check_A3(U, x, n_probe=100, seed=i).passed
    ok = zoo_ok and expansion_caught and a3_fail == 0
    report(8, ok, f"A2 zoo {sum(r.passed for r in a2.values())}/{len(a2)} pass at 1000 samples, "
                  f"expansion violations={len(exp.violations)}, A3 failures {a3_fail}/100")
    assert ok


def test_9_determinism(tmp_path, report, capsys):
    configs = sorted(p for p in CONFIGS.glob("*.json") if p.name != "bad_kappa.json")
    mismatched, n_files = [], 0
    for cfg in configs:
        for seed_args in ([], ["--seed", "17"]):
            root = tmp_path / cfg.stem / ("seed17" if seed_args else "default")
            for d in ("a", "b"):
                cli_main(["run", "--config", str(cfg), *seed_args, "--out", str(root / d)])
            capsys.readouterr()
            traces = sorted(p.name for p in (root / "a").glob("*.trace.csv"))
            n_files += len(traces)
            match, mis, err = filecmp.cmpfiles(root / "a", root / "b", traces, shallow=False)
            mismatched += mis + err
    ok = not mismatched and n_files > 0
    report(9, ok, f"{len(configs)} configs, {n_files} trace files compared byte for byte, "
                  f"{len(mismatched)} differ")
    assert ok
