"""Run-time certificates for union-operator iterations.

The quantities here come in two flavours. A-priori ones (the sampled uniform
decrease `delta_hat` and the step-count bound Q built from it) are estimates:
sampling an infimum over-estimates it, so Q computed from `delta_hat` can
only under-estimate the guaranteed bound. Run-exact ones are read off a
finished trace and are hard inequalities: when every step is Fejer monotone
toward z, the distance decreases telescope to at most ||z - x0||, so the
number of steps longer than eps is at most ||z - x0|| / delta_run.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .operators import TOL_FIX
from .space import as_point, sample_set


__all__ = [
    "DeltaEstimate", "estimate_delta", "q_bound", "LevelStats", "Certificate",
    "Stabilization", "certify_run", "detect_stabilization",
    "count_large_steps", "format_certificate", "certificate_to_dict",
    "FEJER_TOL", "ENVELOPE_TOL",
]

FEJER_TOL = 1e-10
ENVELOPE_TOL = 1e-8


@dataclass
class DeltaEstimate:
    epsilon: float
    M: float
    z_star: np.ndarray
    delta_hat: float          # math.inf when no sample moved by more than epsilon
    argmin: tuple             # (operator key, x) attaining delta_hat, or None
    n_samples: int
    n_active: int             # samples with a move larger than epsilon
    seed: int

    @property
    def empty(self):
        return self.n_active == 0


def estimate_delta(U_or_family, z_star, epsilon, M, C=None, n_samples=10_000,
                   seed=0, points=None, tol_fix=TOL_FIX):
    """Smallest sampled decrease ||z - x|| - ||z - T_s x|| over operators s and
    points x of C within M of theta whose move ||x - T_s x|| exceeds epsilon.

    `points` replaces random sampling with an explicit point set (e.g. a grid).
    """
    family = getattr(U_or_family, "family", U_or_family)
    C = getattr(U_or_family, "C", C) if C is None else C
    if C is None:
        raise ValueError("a constraint set is needed for sampling")
    if epsilon <= 0 or M <= 0:
        raise ValueError("epsilon and M must be positive")
    z = as_point(z_star, family.dim)
    keys = family.keys()
    for k in keys:
        if not family[k].is_fixed(z, tol_fix):
            raise ValueError(f"z_star is not fixed by operator {k!r}")
    if points is None:
        xs = sample_set(C, C.theta, M, n_samples, np.random.default_rng(seed))
    else:
        xs = np.atleast_2d(np.asarray(points, dtype=float))
        if xs.shape[1] != family.dim:
            xs = xs.reshape(-1, family.dim)
    best, arg, active = math.inf, None, 0
    dz = np.linalg.norm(z - xs, axis=1)
    for k in keys:
        tx = family[k].apply_rows(xs)
        big = np.flatnonzero(np.linalg.norm(xs - tx, axis=1) > epsilon)
        if not big.size:
            continue
        active += big.size
        dec = dz[big] - np.linalg.norm(z - tx[big], axis=1)
        i = int(np.argmin(dec))
        if dec[i] < best:
            best, arg = float(dec[i]), (k, xs[big[i]].copy())
    return DeltaEstimate(float(epsilon), float(M), z, best, arg, len(xs), active, seed)


def q_bound(M, delta, mode="plain", kappa=None):
    """Smallest natural Q with Q >= 2M/delta (plain) or Q >= 2M/(delta kappa) (km)."""
    if M <= 0 or delta <= 0:
        raise ValueError("M and delta must be positive")
    if mode == "plain":
        ratio = Fraction(2) * Fraction(M) / Fraction(delta)
    elif mode == "km":
        if kappa is None or not 0.0 < kappa < 0.5:
            raise ValueError("kappa must lie in (0, 0.5)")
        ratio = Fraction(2) * Fraction(M) / (Fraction(delta) * Fraction(kappa))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return max(1, math.ceil(ratio))


def count_large_steps(residuals, epsilon):
    """Number of steps with residual strictly greater than epsilon."""
    return int(np.sum(np.asarray(residuals) > epsilon))


@dataclass
class LevelStats:
    epsilon: float
    large_steps: int
    delta_run: float = None       # min decrease over eps-large steps
    run_exact_bound: int = None   # floor(||z - x0|| / delta_run)
    identity_holds: bool = None   # large_steps * delta_run <= ||z - x0||, exactly
    q_apriori: int = None


@dataclass
class Stabilization:
    stabilized: bool
    x_star: np.ndarray = None
    t0: int = None
    phi_star: tuple = ()
    fixing: tuple = ()       # I1: keys of phi(x*) whose operator fixes x*
    non_fixing: tuple = ()   # I2: the rest of phi(x*)
    reason: str = ""


@dataclass
class Certificate:
    run_id: str
    mode: str
    termination: str
    n_steps: int
    final_residual: float
    M: float
    theta: np.ndarray
    z_star: np.ndarray = None
    envelope_ok: bool = None
    max_dist_theta: float = None
    fejer_violations: int = None
    max_fejer_increase: float = None
    levels: list = field(default_factory=list)
    stabilization: Stabilization = None

    @property
    def counting_ok(self):
        return all(lv.identity_holds is not False for lv in self.levels)


def _decreases(run, z):
    d = np.array([np.linalg.norm(z - r.x) for r in run.trace])
    return d, d[:-1] - d[1:]


def certify_run(run, U, z_star=None, epsilon_levels=(0.5, 0.1, 0.01), run_id="run",
                delta_hat=None, M_apriori=None, tol_fix=TOL_FIX):
    """Large-step counts per epsilon and, with a reference fixed point z_star,
    Fejer monotonicity, the 3M envelope around theta and the run-exact count
    bound. Converged runs also get a stabilization verdict.

    `delta_hat` (a mapping epsilon -> estimate) and `M_apriori` add the
    a-priori Q next to the run-exact one.
    """
    res = run.residuals
    theta = run.theta if run.theta is not None else U.C.theta
    M = float(np.linalg.norm(run.x0 - theta))
    z = None
    if z_star is not None:
        z = as_point(z_star, U.dim)
        M = max(M, float(np.linalg.norm(z - theta)))
    cert = Certificate(run_id, run.config.mode, run.termination, len(res),
                       float(run.final_residual), M, np.asarray(theta))
    xs = np.array([r.x for r in run.trace])
    dist_theta = np.linalg.norm(xs - theta, axis=1)
    cert.max_dist_theta = float(dist_theta.max())
    if z is not None:
        cert.z_star = z
        cert.envelope_ok = bool(np.all(dist_theta <= 3.0 * M + ENVELOPE_TOL))
        d, dec = _decreases(run, z)
        cert.fejer_violations = int(np.sum(-dec > FEJER_TOL))
        cert.max_fejer_increase = float(max(0.0, (-dec).max())) if dec.size else 0.0
    for eps in epsilon_levels:
        lv = LevelStats(float(eps), count_large_steps(res, eps))
        if z is not None and lv.large_steps:
            big = dec[res > eps]
            lv.delta_run = float(big.min())
            if lv.delta_run > 0:
                lv.run_exact_bound = math.floor(d[0] / lv.delta_run)
                lv.identity_holds = (Fraction(lv.large_steps) * Fraction(lv.delta_run)
                                     <= Fraction(float(d[0])))
        if delta_hat is not None and M_apriori is not None:
            est = delta_hat.get(eps)
            if est is not None and math.isfinite(est) and est > 0:
                lv.q_apriori = q_bound(M_apriori, est, run.config.mode,
                                       run.config.kappa if run.config.mode == "km" else None)
        cert.levels.append(lv)
    if run.termination == "converged":
        cert.stabilization = detect_stabilization(run, U, tol_fix)
    return cert


def detect_stabilization(run, U, tol_fix=TOL_FIX):
    """Locate the epoch t0 after which phi(x_t) stays inside phi(x*) and every
    operator actually used fixes x*, taking x* as the final iterate.

    Keys of phi(x*) are split into those whose operator fixes x* within
    `tol_fix` and the rest.
    """
    if run.termination != "converged":
        return Stabilization(False, reason="not stabilized: run did not converge")
    x_star = run.x_final
    phi_star = tuple(U.select(x_star))
    fixing = tuple(k for k in phi_star if U.family[k].is_fixed(x_star, tol_fix))
    non_fixing = tuple(k for k in phi_star if k not in fixing)
    allowed, fix_set = set(phi_star), set(fixing)
    t0 = len(run.trace)
    for rec in reversed(run.trace):
        inside = set(U.select(rec.x)) <= allowed
        used_ok = rec.active_index is None or rec.active_index in fix_set
        if not (inside and used_ok):
            break
        t0 = rec.t
    if t0 >= len(run.trace):
        return Stabilization(False, x_star, None, phi_star, fixing, non_fixing,
                             "not stabilized: final iterate violates the inclusion")
    return Stabilization(True, x_star, t0, phi_star, fixing, non_fixing)


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [float(a) for a in v]
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        return v.item()
    if isinstance(v, tuple):
        return [_jsonable(a) for a in v]
    if isinstance(v, list):
        return [_jsonable(a) for a in v]
    if isinstance(v, dict):
        return {k: _jsonable(a) for k, a in v.items()}
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def certificate_to_dict(cert):
    d = asdict(cert)
    return _jsonable(d)


def certificate_to_json(cert):
    return json.dumps(certificate_to_dict(cert), indent=2, sort_keys=True)


def format_certificate(cert):
    """Human-readable report: key: value lines followed by a per-epsilon table."""
    out = [f"run: {cert.run_id}", f"mode: {cert.mode}",
           f"termination: {cert.termination}", f"steps: {cert.n_steps}",
           f"final_residual: {cert.final_residual!r}", f"M: {cert.M!r}",
           f"max_dist_theta: {cert.max_dist_theta!r}"]
    if cert.z_star is not None:
        out += [f"z_star: {';'.join(repr(float(v)) for v in cert.z_star)}",
                f"envelope_3M: {'ok' if cert.envelope_ok else 'VIOLATED'}",
                f"fejer_violations: {cert.fejer_violations}",
                f"max_fejer_increase: {cert.max_fejer_increase!r}"]
    st = cert.stabilization
    if st is not None:
        out.append(f"stabilized: {'yes' if st.stabilized else 'no'}")
        if st.stabilized:
            out += [f"t0: {st.t0}", f"phi_star: {list(st.phi_star)}",
                    f"fixing_indices: {list(st.fixing)}",
                    f"non_fixing_indices: {list(st.non_fixing)}"]
        else:
            out.append(f"reason: {st.reason}")
    out.append("")
    out.append(f"{'epsilon':>10} {'large':>7} {'delta_run':>12} {'run_bound':>10} "
               f"{'identity':>9} {'Q_apriori':>10}")
    for lv in cert.levels:
        def cell(v, w):
            return f"{'-' if v is None else v:>{w}}"
        dr = None if lv.delta_run is None else f"{lv.delta_run:.6g}"
        idt = None if lv.identity_holds is None else ("ok" if lv.identity_holds else "FAIL")
        out.append(f"{lv.epsilon:>10g} {lv.large_steps:>7} {cell(dr, 12)} "
                   f"{cell(lv.run_exact_bound, 10)} {cell(idt, 9)} {cell(lv.q_apriori, 10)}")
    return "\n".join(out) + "\n"
