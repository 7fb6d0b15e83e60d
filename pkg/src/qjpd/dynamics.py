"""Ground-manifold population dynamics: closed form, ODE oracle, shot emulator."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import kernels
from .errors import DomainError, IntegrationError

ONE, TWO = "one", "two"
_LABEL = (ONE, TWO)
MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class PopulationState:
    n2: float
    time: float

    def __post_init__(self):
        if not -1e-12 <= self.n2 <= 1 + 1e-12:
            raise DomainError(f"population {self.n2} outside [0, 1]")

    @property
    def n1(self):
        return 1.0 - self.n2


@dataclass(frozen=True)
class ShotRecord:
    trial_index: int
    end_state: str
    readout: str
    jump_count: int
    seed_stream_id: int


@dataclass(frozen=True)
class ShotBatch:
    """Column-oriented shots; what the kernels produce."""

    first_trial: int
    end_state: np.ndarray  # int8, 0 = one, 1 = two
    readout: np.ndarray
    jumps: np.ndarray

    def __len__(self):
        return len(self.end_state)

    def records(self):
        return [
            ShotRecord(self.first_trial + i, _LABEL[e], _LABEL[r], int(j), self.first_trial + i)
            for i, (e, r, j) in enumerate(zip(self.end_state.tolist(), self.readout.tolist(), self.jumps.tolist()))
        ]


@dataclass(frozen=True)
class ExperimentEstimate:
    p2_hat: float
    stderr: float
    trials: int


def _check_initial(n2_initial, t):
    if not 0 <= n2_initial <= 1:
        raise DomainError("n2_initial must lie in [0, 1]")
    if t < 0:
        raise DomainError("t must be >= 0")


def n2_closed_form(rates, t, n2_initial=0.0):
    """Exact solution of the two-level rate equation."""
    _check_initial(n2_initial, t)
    k = rates.up + rates.down
    if k == 0:
        return PopulationState(n2_initial, t)
    n_ss = rates.up / k
    n2 = n_ss + (n2_initial - n_ss) * math.exp(-k * t)
    return PopulationState(min(max(n2, 0.0), 1.0), t)


def n2_closed_form_array(up, down, t, n2_initial=0.0):
    """Vectorised closed form over broadcastable arrays of rates and times."""
    up, down, t = np.broadcast_arrays(np.asarray(up, float), np.asarray(down, float), np.asarray(t, float))
    k = up + down
    with np.errstate(invalid="ignore", divide="ignore"):
        n_ss = np.where(k > 0, up / np.where(k > 0, k, 1.0), n2_initial)
    return n_ss + (n2_initial - n_ss) * np.exp(-k * t)


def n2_ode(rates, t, n2_initial=0.0, tol=1e-10):
    """Integrate dN2/dt = R12 (1 - N2) - R21 N2 with adaptive steps (DOP853)."""
    _check_initial(n2_initial, t)
    if not 0 < tol <= 1e-3:
        raise DomainError("tol must lie in (0, 1e-3]")
    if t == 0:
        return PopulationState(n2_initial, 0.0)
    up, down = rates.up, rates.down

    def rhs(_, y):
        return [up * (1.0 - y[0]) - down * y[0]]

    sol = solve_ivp(rhs, (0.0, t), [n2_initial], method="DOP853", rtol=tol, atol=tol * 1e-2)
    if not sol.success:
        raise IntegrationError(f"rate-equation integration failed: {sol.message}", achieved_tolerance=None)
    return PopulationState(min(max(float(sol.y[0, -1]), 0.0), 1.0), t)


def _validate_shot_args(trials, seed, readout_errors):
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if not (0 <= seed <= MAX_SEED):
        raise DomainError("seed must be an unsigned 64-bit integer")
    eps12, eps21 = readout_errors
    for e in (eps12, eps21):
        if not 0 <= e < 0.5:
            raise DomainError("readout error probabilities must lie in [0, 0.5)")
    return float(eps12), float(eps21)


def simulate_batch(rates, t_exposure, trials, seed, readout_errors=(0.0, 0.0),
                   first_trial=0, workers=1, backend=None):
    """Run ``trials`` event-driven trajectories starting in |1>.

    Trials ``first_trial .. first_trial + trials - 1`` each use their own
    random substream, so splitting the range across ``workers`` threads
    changes nothing in the output.
    """
    eps12, eps21 = _validate_shot_args(trials, seed, readout_errors)
    if t_exposure < 0:
        raise DomainError("t_exposure must be >= 0")
    kern = kernels.get_kernel(backend)
    end = np.zeros(trials, dtype=np.int8)
    read = np.zeros(trials, dtype=np.int8)
    jumps = np.zeros(trials, dtype=np.int64)
    up, down = float(rates.up), float(rates.down)

    def run(lo, hi):
        kern.run_trials(up, down, float(t_exposure), int(seed), int(first_trial + lo),
                        eps12, eps21, end[lo:hi], read[lo:hi], jumps[lo:hi])

    if workers is None or workers <= 1 or trials < 2 * workers:
        run(0, trials)
    else:
        bounds = np.linspace(0, trials, workers + 1).astype(int)
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(lambda ab: run(*ab), zip(bounds[:-1], bounds[1:])))
    return ShotBatch(first_trial, end, read, jumps)


def simulate_shots(rates, t_exposure, trials, seed, readout_errors=(0.0, 0.0), workers=1, backend=None):
    """Shot-level emulation of the expose-then-read sequence; returns ShotRecords."""
    return simulate_batch(rates, t_exposure, trials, seed, readout_errors, 0, workers, backend).records()


def estimate(shots):
    """Fraction of shots read out in |2> with its binomial standard error."""
    if isinstance(shots, ShotBatch):
        n = len(shots)
        k = int(np.count_nonzero(shots.readout))
    else:
        n = len(shots)
        k = sum(1 for s in shots if s.readout == TWO)
    if n == 0:
        raise DomainError("no shots to estimate from")
    p = k / n
    return ExperimentEstimate(p, math.sqrt(p * (1 - p) / n), n)


def shots_to_csv(shots):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["trial", "end_state", "readout", "jump_count"])
    for s in shots:
        w.writerow([s.trial_index, s.end_state, s.readout, s.jump_count])
    return buf.getvalue()


def shots_from_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ["trial", "end_state", "readout", "jump_count"]:
        raise DomainError("bad shot CSV header")
    return [ShotRecord(int(t), e, r, int(j), int(t)) for t, e, r, j in rows[1:]]
