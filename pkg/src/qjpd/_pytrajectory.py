"""Pure-Python two-state jump-process kernel (fallback for ``_trajectory``).

Random numbers come from a counter-based SplitMix64 stream keyed on
(seed, trial index): draw ``k`` of trial ``i`` depends on nothing else, so any
partitioning of trials across workers reproduces the same shots. Draw 0 is
reserved for readout; jump waiting times use draws 1, 2, ...
"""

import math

_M = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_INV53 = 1.0 / 9007199254740992.0


def _fmix(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M
    return z ^ (z >> 31)


def _splitmix(x):
    return _fmix((x + _GOLDEN) & _M)


def _unit(key, k):
    return (_fmix((key + (k + 1) * _GOLDEN) & _M) >> 11) * _INV53


def trial_key(seed, trial):
    return _splitmix(_splitmix(seed & _M) ^ _splitmix(trial & _M))


def uniforms(seed, trial, n):
    key = trial_key(seed, trial)
    return [_unit(key, k) for k in range(n)]


def run_trials(up, down, t_exp, seed, first_trial, eps12, eps21, end_state, readout, jumps):
    seed_key = _splitmix(seed & _M)
    log1p = math.log1p
    for i in range(len(end_state)):
        key = _splitmix(seed_key ^ _splitmix((first_trial + i) & _M))
        state = 0
        t = 0.0
        count = 0
        k = 1
        while True:
            rate = up if state == 0 else down
            if rate <= 0.0:
                break
            u = _unit(key, k)
            k += 1
            t += -log1p(-u) / rate
            if t > t_exp:
                break
            state ^= 1
            count += 1
        u = _unit(key, 0)
        end_state[i] = state
        if state == 0:
            readout[i] = 1 if u < eps12 else 0
        else:
            readout[i] = 0 if u < eps21 else 1
        jumps[i] = count
