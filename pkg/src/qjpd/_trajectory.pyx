# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled two-state jump-process kernel.

Mirrors qjpd._pytrajectory exactly; both must produce bit-identical output.
"""

from libc.math cimport log1p
from libc.stdint cimport int8_t, int64_t, uint64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t fmix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t splitmix(uint64_t x) noexcept nogil:
    return fmix(x + GOLDEN)


cdef inline double unit(uint64_t key, uint64_t k) noexcept nogil:
    return <double>(fmix(key + (k + 1) * GOLDEN) >> 11) * (1.0 / 9007199254740992.0)


def trial_key(uint64_t seed, uint64_t trial):
    return splitmix(splitmix(seed) ^ splitmix(trial))


def uniforms(uint64_t seed, uint64_t trial, int n):
    cdef uint64_t key = splitmix(splitmix(seed) ^ splitmix(trial))
    return [unit(key, k) for k in range(n)]


def run_trials(double up, double down, double t_exp, uint64_t seed,
               int64_t first_trial, double eps12, double eps21,
               int8_t[::1] end_state, int8_t[::1] readout, int64_t[::1] jumps):
    cdef Py_ssize_t i, n = end_state.shape[0]
    cdef uint64_t seed_key = splitmix(seed)
    cdef uint64_t key, k
    cdef double t, rate, u
    cdef int state
    cdef int64_t count
    with nogil:
        for i in range(n):
            key = splitmix(seed_key ^ splitmix(<uint64_t>(first_trial + i)))
            state = 0
            t = 0.0
            count = 0
            k = 1
            while True:
                rate = up if state == 0 else down
                if rate <= 0.0:
                    break
                u = unit(key, k)
                k += 1
                t += -log1p(-u) / rate
                if t > t_exp:
                    break
                state ^= 1
                count += 1
            u = unit(key, 0)
            end_state[i] = state
            if state == 0:
                readout[i] = 1 if u < eps12 else 0
            else:
                readout[i] = 0 if u < eps21 else 1
            jumps[i] = count
