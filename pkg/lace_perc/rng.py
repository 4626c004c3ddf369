"""Counter-based per-bond uniforms.

A bond's uniform is a pure function of (seed, stream, sample, bond key), so
the same bond gets the same value whichever worker asks, in whatever order,
and at whatever p. A bond is occupied at density p when its uniform is < p,
which couples all p monotonically.

All arguments are uint64; callers convert with ``np.uint64``.
"""

import numba as nb
import numpy as np

__all__ = ["bond_uniform", "mix_key", "splitmix64", "uniform_array"]

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MUL2 = np.uint64(0x94D049BB133111EB)
_SEED_SALT = np.uint64(0x243F6A8885A308D3)
_TO_UNIT = 1.0 / 9007199254740992.0  # 2^-53


@nb.njit(nb.uint64(nb.uint64), nogil=True, cache=True)
def splitmix64(x):
    """One splitmix64 finaliser step."""
    z = x + _GAMMA
    z = (z ^ (z >> np.uint64(30))) * _MUL1
    z = (z ^ (z >> np.uint64(27))) * _MUL2
    return z ^ (z >> np.uint64(31))


@nb.njit(nb.uint64(nb.uint64, nb.uint64, nb.uint64, nb.uint64), nogil=True, cache=True)
def mix_key(seed, stream, sample, bond):
    h = splitmix64(seed ^ _SEED_SALT)
    h = splitmix64(h ^ stream)
    h = splitmix64(h ^ sample)
    return splitmix64(h ^ bond)


@nb.njit(nb.float64(nb.uint64, nb.uint64, nb.uint64, nb.uint64), nogil=True, cache=True)
def bond_uniform(seed, stream, sample, bond):
    """Uniform in [0, 1) with 53 random bits."""
    return (mix_key(seed, stream, sample, bond) >> np.uint64(11)) * _TO_UNIT


@nb.njit(nogil=True, cache=True)
def uniform_array(seed, stream, sample, keys):
    """Uniforms for an int64 array of bond keys (eager configurations)."""
    out = np.empty(keys.shape[0], dtype=np.float64)
    s = np.uint64(seed)
    t = np.uint64(stream)
    c = np.uint64(sample)
    for i in range(keys.shape[0]):
        out[i] = bond_uniform(s, t, c, np.uint64(keys[i]))
    return out
