"""Counter-based uniform draws.

Every random number used by the sampler is a pure function of
``(seed, sample_index, step, lane)``.  Sample ``i`` therefore owns its own
substream, and any partition of the sample indices over workers reproduces
the same trajectories bit for bit.

The mixer is the SplitMix64 finalizer applied in a chain over the four
counter words.
"""

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S12 = np.uint64(12)
_TWO_M52 = 2.0 ** -52

LANE_HOLD = 0
LANE_JUMP = 1


def _mix(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def seed_key(seed):
    """Reduce an arbitrary Python int seed to the 64-bit stream key."""
    s = np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
    with np.errstate(over="ignore"):
        return _mix(s + _GOLDEN)


def uniform(key, sample_index, step, lane):
    """Uniform draws in the open interval (0, 1).

    ``sample_index`` is an integer array; ``step`` and ``lane`` are scalars.
    The result never equals 0 or 1, so ``-log(u)`` is finite and positive.
    """
    idx = np.asarray(sample_index, dtype=np.uint64)
    ctr = np.uint64((int(step) << 2) | int(lane))
    with np.errstate(over="ignore"):
        h = _mix(key ^ (idx * _GOLDEN + _M1))
        h = _mix(h + ctr * _M2 + _GOLDEN)
    # 52 random bits keep k + 0.5 exactly representable
    return ((h >> _S12).astype(np.float64) + 0.5) * _TWO_M52


def exponential(key, sample_index, step):
    """Exp(1) variates by inverse CDF."""
    return -np.log(uniform(key, sample_index, step, LANE_HOLD))
