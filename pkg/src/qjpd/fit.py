"""Weighted least-squares fit of saturation curves p2(P, t) = n2_sat (1 - exp(-b P t))."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, FitError, FitRankError

MAX_ITER = 200
STEP_TOL = 1e-8

_HEADER = ["sun_power_nW", "exposure_ms", "p2", "stderr"]


@dataclass(frozen=True)
class SaturationPoint:
    sun_power: float  # W
    exposure: float  # s
    p2_hat: float
    stderr: float


@dataclass(frozen=True)
class SaturationDataset:
    points: tuple[SaturationPoint, ...]
    label: str = ""

    def __post_init__(self):
        pts = tuple(p if isinstance(p, SaturationPoint) else SaturationPoint(*map(float, p)) for p in self.points)
        object.__setattr__(self, "points", pts)
        for i, p in enumerate(pts):
            if not p.stderr > 0:
                raise DomainError(f"point {i}: stderr must be > 0 (got {p.stderr})")
            if not 0 <= p.p2_hat <= 1:
                raise DomainError(f"point {i}: p2 must lie in [0, 1]")
            if p.sun_power < 0 or p.exposure < 0:
                raise DomainError(f"point {i}: sun power and exposure must be >= 0")

    def arrays(self):
        a = np.array([(p.sun_power * p.exposure, p.p2_hat, p.stderr) for p in self.points], dtype=float)
        if a.size == 0:
            return np.empty(0), np.empty(0), np.empty(0)
        return a[:, 0], a[:, 1], a[:, 2]


@dataclass(frozen=True)
class FitParams:
    n2_sat: float
    b: float  # s^-1 W^-1
    cov: np.ndarray = field(default_factory=lambda: np.zeros((2, 2)), compare=False)
    chi2: float = 0.0
    dof: int = 0
    iterations: int = 0

    @property
    def stderr(self):
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    def to_report(self):
        s = self.stderr
        return {
            "n2_sat": self.n2_sat,
            "b_per_nW_per_s": self.b * 1e-9,
            "stderr_n2sat": float(s[0]),
            "stderr_b": float(s[1]) * 1e-9,
            "chi2": self.chi2,
            "dof": self.dof,
        }


def predict(params, sun_power, t):
    """Saturation model evaluated at sun power (W) and exposure (s)."""
    if np.any(np.asarray(sun_power) < 0) or np.any(np.asarray(t) < 0):
        raise DomainError("sun_power and t must be >= 0")
    out = params.n2_sat * -np.expm1(-params.b * np.asarray(sun_power, float) * np.asarray(t, float))
    return float(out) if np.ndim(out) == 0 else out


def _model(theta, x):
    n, b = theta
    e = np.exp(-b * x)
    return n * (1 - e), np.column_stack([1 - e, n * x * e])


def _initial(x, y):
    n0 = float(np.clip(y.max(), 1e-3, 1.0))
    order = np.argsort(x)
    for i in order:
        if x[i] > 0 and 0 < y[i] < n0:
            return np.array([n0, -math.log1p(-y[i] / n0) / x[i]])
    return np.array([n0, 1.0 / x[x > 0].min()])


def fit_saturation(data, init=None):
    """Damped Gauss-Newton fit.

    The covariance is (J^T W J)^-1 multiplied by max(1, chi2/dof).

    Parameters are internally rescaled so that b x is O(1). Raises
    :class:`FitRankError` when the abscissae P t cannot constrain the
    exponent and :class:`FitError` (with the best iterate) after
    ``MAX_ITER`` iterations.
    """
    x, y, s = data.arrays()
    if len(x) < 3:
        raise FitRankError("need at least 3 points")
    pos = x[x > 0]
    if pos.size == 0 or np.unique(x).size < 2 or pos.max() < 3 * pos.min():
        raise FitRankError("sun_power x exposure must span at least a factor 3")
    scale = float(np.median(pos))
    xs = x / scale
    w = 1.0 / s
    theta = _initial(xs, y) if init is None else np.array([init.n2_sat, init.b * scale])

    def chi2_of(th):
        f, _ = _model(th, xs)
        return float(np.sum(((y - f) * w) ** 2))

    lam = 1e-3
    chi2 = chi2_of(theta)
    converged = False
    it = 0
    for it in range(1, MAX_ITER + 1):
        f, J = _model(theta, xs)
        Jw = J * w[:, None]
        r = (y - f) * w
        A = Jw.T @ Jw
        g = Jw.T @ r
        if np.linalg.matrix_rank(A) < 2:
            raise FitRankError("Jacobian is rank-deficient at the current iterate")
        while True:
            step = np.linalg.solve(A + lam * np.diag(np.diag(A)), g)
            trial = theta + step
            if trial[0] > 0 and trial[1] > 0:
                c = chi2_of(trial)
                if c <= chi2:
                    break
            lam *= 10
            if lam > 1e16:
                step = np.zeros(2)
                trial, c = theta, chi2
                break
        theta, chi2 = trial, c
        lam = max(lam / 10, 1e-12)
        if np.all(np.abs(step) <= STEP_TOL * np.abs(theta)):
            converged = True
            break
    dof = len(x) - 2
    if not converged:
        best = FitParams(float(theta[0]), float(theta[1] / scale), np.full((2, 2), np.nan), chi2, dof, it)
        raise FitError(f"no convergence after {MAX_ITER} iterations", best)
    _, J = _model(theta, xs)
    Jw = J * w[:, None]
    cov = np.linalg.inv(Jw.T @ Jw)
    if dof > 0:
        # inflate only; never shrink below the quoted per-point errors
        cov = cov * max(1.0, chi2 / dof)
    unscale = np.array([1.0, 1.0 / scale])
    cov = cov * np.outer(unscale, unscale)
    cov = 0.5 * (cov + cov.T)
    return FitParams(float(theta[0]), float(theta[1] / scale), cov, chi2, dof, it)


def residual_jacobian(params, data):
    """Analytic Jacobian of the model in (n2_sat, b) at each point, unweighted."""
    x, _, _ = data.arrays()
    return _model((params.n2_sat, params.b), x)[1]


def dataset_from_estimates(conditions, estimates, label="monte-carlo"):
    """Build a dataset from (sun_power, exposure) pairs and ExperimentEstimates.

    Points with zero standard error (p2_hat of exactly 0 or 1) are dropped.
    """
    pts = [
        SaturationPoint(float(P), float(t), float(e.p2_hat), float(e.stderr))
        for (P, t), e in zip(conditions, estimates)
        if e.stderr > 0
    ]
    return SaturationDataset(tuple(pts), label)


def read_dataset_csv(text, label=""):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != _HEADER:
        raise DomainError(f"dataset CSV header must be {','.join(_HEADER)}")
    pts = []
    for n, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        try:
            P, t, p, s = (float(c) for c in row)
        except ValueError:
            raise DomainError(f"line {n}: expected 4 numeric fields") from None
        pts.append(SaturationPoint(P * 1e-9, t * 1e-3, p, s))
    return SaturationDataset(tuple(pts), label)


def write_dataset_csv(data):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(_HEADER)
    for p in data.points:
        w.writerow([repr(float(v)) for v in (p.sun_power * 1e9, p.exposure * 1e3, p.p2_hat, p.stderr)])
    return buf.getvalue()


def report_json(params):
    return json.dumps(params.to_report(), sort_keys=True, indent=2) + "\n"
