"""Counter-based random streams.

Every variate is a pure function of ``(seed, stream, index, component)``: a
SplitMix64 sequence is keyed per sample index and read at the component
position. Results therefore do not depend on how the work is chunked or
scheduled. Normals use the inverse-CDF transform, so each one consumes exactly one
uniform.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_MASK64 = (1 << 64) - 1

# stream tags separate independent uses of one seed
STREAM_NOISE = 1
STREAM_SCENARIO = 2
STREAM_USER = 3


def _mix(x: np.ndarray) -> np.ndarray:
    x = x ^ (x >> _S30)
    x = x * _M1
    x = x ^ (x >> _S27)
    x = x * _M2
    return x ^ (x >> _S31)


def _key(seed: int, stream: int) -> np.uint64:
    if not 0 <= int(seed) <= _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    with np.errstate(over="ignore"):
        k = _mix(np.array([int(seed)], dtype=np.uint64))
        k = _mix(k ^ np.array([(int(stream) * 0xD1B54A32D192ED03) & _MASK64], dtype=np.uint64))
    return k[0]


def _to_unit(bits: np.ndarray) -> np.ndarray:
    # 53 random mantissa bits mapped to the open interval (0, 1)
    return ((bits >> _S11).astype(np.float64) + 0.5) * (2.0 ** -53)


def uniform_block(seed: int, stream: int, start: int, count: int, width: int) -> np.ndarray:
    """Uniforms in (0, 1) of shape ``(count, width)`` for sample indices ``start .. start+count-1``."""
    key = _key(seed, stream)
    idx = np.arange(start, start + count, dtype=np.uint64)
    cols = np.arange(1, width + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        state = _mix(key + (idx + np.uint64(1)) * _GAMMA)
        bits = _mix(state[:, None] + cols[None, :] * _GAMMA)
    return _to_unit(bits)


def normal_block(seed: int, stream: int, start: int, count: int, width: int) -> np.ndarray:
    return ndtri(uniform_block(seed, stream, start, count, width))


def uniform_stream(seed: int, index: int, width: int, stream: int = STREAM_USER) -> np.ndarray:
    return uniform_block(seed, stream, index, 1, width)[0]


def standard_normal(seed: int, index: int, width: int, stream: int = STREAM_NOISE) -> np.ndarray:
    return normal_block(seed, stream, index, 1, width)[0]
