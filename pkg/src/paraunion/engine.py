"""Iteration drivers for union operators.

Plain mode follows x_{t+1} = T_s(x_t) with s chosen from phi(x_t).
Krasnosel'skii-Mann (KM) mode follows
x_{t+1} = (1 - lam_t) x_t + lam_t T_s(x_t) with every lam_t strictly inside
(kappa, 1 - kappa).
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .space import as_point
from .union import SelectionPolicy, choose_next


__all__ = [
    "LambdaSchedule", "IterationConfig", "TraceRecord", "IterationRun",
    "IterationError", "run_plain", "run_km", "run", "residual_identity_check",
    "IdentityCheck", "write_trace", "read_trace", "trace_to_csv",
    "trace_from_csv", "encode_key", "decode_key",
]


class IterationError(RuntimeError):
    """Raised when iterates leave the finite reals; carries the trace so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class LambdaSchedule:
    """Relaxation parameters for KM mode.

    kind is 'constant' (uses `value`), 'periodic' (cycles through `values`)
    or 'seeded-uniform' (i.i.d. uniform on (kappa, 1 - kappa) from `seed`).
    """

    kind: str = "constant"
    value: float = 0.5
    values: tuple = ()
    seed: int = 0

    def generator(self, kappa):
        if self.kind == "constant":
            while True:
                yield self.value
        elif self.kind == "periodic":
            if not self.values:
                raise ValueError("periodic schedule needs at least one value")
            while True:
                yield from self.values
        elif self.kind == "seeded-uniform":
            rng = np.random.default_rng(self.seed)
            while True:
                lam = rng.uniform(kappa, 1.0 - kappa)
                if kappa < lam < 1.0 - kappa:
                    yield lam
        else:
            raise ValueError(f"unknown lambda schedule {self.kind!r}")

    def check(self, kappa):
        vals = {"constant": (self.value,), "periodic": self.values}.get(self.kind, ())
        if self.kind == "periodic" and not vals:
            raise ValueError("periodic schedule needs at least one value")
        for lam in vals:
            if not kappa < lam < 1.0 - kappa:
                raise ValueError(f"lambda {lam} must lie in (kappa, 1 - kappa) = "
                                 f"({kappa}, {1.0 - kappa})")


@dataclass(frozen=True)
class IterationConfig:
    mode: str = "plain"
    kappa: float = 0.25
    lambda_schedule: LambdaSchedule = field(default_factory=LambdaSchedule)
    policy: SelectionPolicy = field(default_factory=SelectionPolicy)
    max_iter: int = 10_000
    tol_residual: float = 1e-10
    stall_window: int = 10

    def validate(self):
        if self.mode not in ("plain", "km"):
            raise ValueError(f"unknown iteration mode {self.mode!r}")
        if self.mode == "km":
            if not 0.0 < self.kappa < 0.5:
                raise ValueError("kappa must lie in (0, 0.5)")
            self.lambda_schedule.check(self.kappa)
        if self.max_iter < 1 or self.stall_window < 1:
            raise ValueError("max_iter and stall_window must be positive")
        if self.tol_residual < 0:
            raise ValueError("tol_residual must be nonnegative")

    def to_dict(self):
        d = asdict(self)
        d["lambda_schedule"]["values"] = list(self.lambda_schedule.values)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        lam = dict(d.pop("lambda_schedule", {}))
        lam["values"] = tuple(lam.get("values", ()))
        return cls(lambda_schedule=LambdaSchedule(**lam),
                   policy=SelectionPolicy(**d.pop("policy", {})), **d)


@dataclass
class TraceRecord:
    """Iterate x_t and the step leaving it. The final record of a run has no
    outgoing step, so its index, residual and lambda are None."""

    t: int
    x: np.ndarray
    active_index: object = None
    residual: float = None
    lam: float = None
    dist_to_zstar: float = None


@dataclass
class IterationRun:
    config: IterationConfig
    x0: np.ndarray
    trace: list
    termination: str
    theta: np.ndarray = None

    @property
    def steps(self):
        return [r for r in self.trace if r.residual is not None]

    @property
    def x_final(self):
        return self.trace[-1].x

    @property
    def residuals(self):
        return np.array([r.residual for r in self.steps])

    @property
    def final_residual(self):
        steps = self.steps
        return steps[-1].residual if steps else 0.0

    @property
    def radius(self):
        """||x0 - theta||, the M of the boundedness statements."""
        if self.theta is None:
            return None
        return float(np.linalg.norm(self.x0 - self.theta))


def _iterate(U, x0, cfg, z_star):
    cfg.validate()
    x = as_point(x0, U.dim)
    if not U.C.contains(x):
        raise ValueError("starting point x0 must lie in C")
    if cfg.mode == "km" and not U.C.is_convex:
        raise ValueError("KM iterations require a convex constraint set")
    z = None if z_star is None else as_point(z_star, U.dim)
    rng = cfg.policy.make_rng()
    lams = cfg.lambda_schedule.generator(cfg.kappa) if cfg.mode == "km" else None

    trace = []
    quiet = 0
    termination = "max_iter"
    for t in range(cfg.max_iter):
        cands = U.apply(x)
        img, key = choose_next(U, cfg.policy, x, rng, candidates=cands)
        lam = None
        if lams is None:
            x_next = img
        else:
            lam = next(lams)
            if not cfg.kappa < lam < 1.0 - cfg.kappa:
                raise ValueError(f"schedule produced lambda {lam} outside (kappa, 1 - kappa)")
            x_next = (1.0 - lam) * x + lam * img
        dist = None if z is None else float(np.linalg.norm(z - x))
        if not np.all(np.isfinite(x_next)):
            raise IterationError(f"non-finite iterate at t={t + 1}", trace)
        res = float(np.linalg.norm(x_next - x))
        trace.append(TraceRecord(t, x, key, res, lam, dist))
        stationary = all(np.array_equal(c, x) for _, c in cands)
        x = x_next
        if stationary:
            termination = "converged"
            break
        quiet = quiet + 1 if res <= cfg.tol_residual else 0
        if quiet >= cfg.stall_window:
            termination = "converged"
            break
    dist = None if z is None else float(np.linalg.norm(z - x))
    trace.append(TraceRecord(len(trace), x, None, None, None, dist))
    return IterationRun(cfg, as_point(x0, U.dim), trace, termination, U.C.theta.copy())


def run_plain(U, x0, cfg=None, z_star=None):
    """Plain fixed-point iteration x_{t+1} = T_s(x_t), s from the policy.

    Stops when every image in T(x_t) equals x_t, when the residual stays at
    or below `tol_residual` for `stall_window` consecutive steps, or at `max_iter`.
    """
    cfg = IterationConfig() if cfg is None else cfg
    if cfg.mode != "plain":
        raise ValueError("run_plain needs mode='plain'")
    return _iterate(U, x0, cfg, z_star)


def run_km(U, x0, cfg, z_star=None):
    """KM iteration x_{t+1} = (1 - lam_t) x_t + lam_t T_s(x_t); same stopping
    rules as :func:`run_plain`."""
    if cfg.mode != "km":
        raise ValueError("run_km needs mode='km'")
    return _iterate(U, x0, cfg, z_star)


def run(U, x0, cfg, z_star=None):
    return _iterate(U, x0, cfg, z_star)


@dataclass
class IdentityCheck:
    passed: bool
    failures: list  # step indices t where the identity broke
    max_error: float


def residual_identity_check(run, U, tol=1e-10):
    """Recompute each KM step: ||x_{t+1} - x_t|| = lam_t ||T_s(x_t) - x_t||."""
    failures, worst = [], 0.0
    for rec in run.steps:
        move = np.linalg.norm(U.family[rec.active_index]._apply(rec.x) - rec.x)
        err = abs(rec.residual - rec.lam * move)
        worst = max(worst, err)
        if err > tol:
            failures.append(rec.t)
    return IdentityCheck(not failures, failures, float(worst))


# --- trace files ---------------------------------------------------------

COLUMNS = ("t", "x", "active_index", "residual", "lambda", "dist_to_zstar")


def encode_key(key):
    if key is None:
        return ""
    if isinstance(key, tuple):
        return "{" + ",".join(str(j) for j in key) + "}"
    return str(key)


def decode_key(s):
    if s == "":
        return None
    if s.startswith("{"):
        body = s[1:-1]
        return tuple(int(j) for j in body.split(",")) if body else ()
    return int(s)


def _fmt(v):
    return "" if v is None else repr(float(v))


def _parse(s):
    return None if s == "" else float(s)


def trace_to_csv(run):
    """CSV text: two '#' metadata lines, a header, then one row per record.
    Floats use the shortest round-tripping repr, so reading back is exact."""
    buf = io.StringIO()
    meta = {"termination": run.termination, "x0": [repr(float(v)) for v in run.x0],
            "theta": None if run.theta is None else [repr(float(v)) for v in run.theta]}
    buf.write("# config " + json.dumps(run.config.to_dict(), sort_keys=True) + "\n")
    buf.write("# run " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in run.trace:
        w.writerow([r.t, ";".join(repr(float(v)) for v in r.x), encode_key(r.active_index),
                    _fmt(r.residual), _fmt(r.lam), _fmt(r.dist_to_zstar)])
    return buf.getvalue()


def trace_from_csv(text):
    lines = text.splitlines()
    cfg = meta = None
    body = []
    for line in lines:
        if line.startswith("# config "):
            cfg = IterationConfig.from_dict(json.loads(line[len("# config "):]))
        elif line.startswith("# run "):
            meta = json.loads(line[len("# run "):])
        else:
            body.append(line)
    if cfg is None or meta is None:
        raise ValueError("trace file lacks its metadata lines")
    rows = csv.reader(body)
    header = next(rows)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected trace header {header}")
    trace = []
    for row in rows:
        t, x, key, res, lam, dist = row
        trace.append(TraceRecord(int(t), np.array([float(v) for v in x.split(";")]),
                                 decode_key(key), _parse(res), _parse(lam), _parse(dist)))
    theta = None if meta["theta"] is None else np.array([float(v) for v in meta["theta"]])
    return IterationRun(cfg, np.array([float(v) for v in meta["x0"]]), trace,
                        meta["termination"], theta)


def write_trace(run, path):
    with open(path, "w", newline="") as f:
        f.write(trace_to_csv(run))


def read_trace(path):
    with open(path) as f:
        return trace_from_csv(f.read())
