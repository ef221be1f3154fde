"""SplitMix64 streams usable from numba kernels.

Each walk (and each training walk visit) gets its own stream whose initial
state is a hash of the master seed and the walk coordinates::

    key(seed, a, b) = mix(mix(mix(seed) ^ a) ^ b)

so output does not depend on the order in which walks are processed.
A stream advances by adding the golden-ratio increment to its state and
returns ``mix(state)``; uniforms use the top 53 bits.
"""

import numpy as np
from numba import njit

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

MASK64 = (1 << 64) - 1


@njit(cache=True)
def mix64(z):
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


@njit(cache=True)
def stream_key(seed, a, b):
    h = mix64(np.uint64(seed) + _GAMMA)
    h = mix64((h ^ np.uint64(a)) + _GAMMA)
    return mix64((h ^ np.uint64(b)) + _GAMMA)


@njit(cache=True)
def next_uniform(state):
    """Advance ``state`` and return ``(new_state, u)`` with ``u`` in [0, 1)."""
    state = state + _GAMMA
    return state, float(mix64(state) >> _S11) * _INV53


def py_stream_key(seed: int, a: int, b: int) -> int:
    """Pure-Python reference of :func:`stream_key`, used by tests."""

    def mix(z: int) -> int:
        z &= MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    g = 0x9E3779B97F4A7C15
    h = mix(seed + g)
    h = mix((h ^ a) + g)
    return mix((h ^ b) + g)
