"""Counter-based deterministic randomness.

Trial coins are a pure function of (base_seed, trial, u, v): there is no
shared mutable stream, so any evaluation order (or worker count) sees the
same coins. The mixer is the splitmix64 finalizer applied to each absorbed
word in turn; output is a uniform float in [0, 1) built from the top 53 bits.
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = float(2.0**-53)


def _mix(x: np.uint64 | np.ndarray) -> np.uint64 | np.ndarray:
    with np.errstate(over="ignore"):  # wraparound is the point
        x = (x ^ (x >> _S30)) * _M1
        x = (x ^ (x >> _S27)) * _M2
    return x ^ (x >> _S31)


def _absorb(h, word):
    return _mix(h ^ word)


def counter_hash(seed: int, trial, u, v):
    """Raw 64-bit hash of (seed, trial, u, v); accepts scalars or arrays."""
    h = _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) ^ _GOLDEN)
    h = _absorb(h, np.asarray(trial, dtype=np.uint64))
    h = _absorb(h, np.asarray(u, dtype=np.uint64))
    h = _absorb(h, np.asarray(v, dtype=np.uint64))
    return h


def coin(seed: int, trial, u, v):
    """Uniform [0, 1) coin for edge (u, v) in the given trial.

    Broadcasts over array arguments; a scalar call returns a Python float.
    """
    h = counter_hash(seed, trial, u, v)
    out = (h >> _S11).astype(np.float64) * _INV53
    if out.ndim == 0:
        return float(out)
    return out
