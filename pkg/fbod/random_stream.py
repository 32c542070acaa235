"""
Counter-based random numbers for neighbor sampling.

Every uniform draw is a pure function of (seed, graph_index, object_index, draw_index):
the SplitMix64 finalizer is chained over the four keys, each offset by the golden-ratio
increment, and the top 53 bits of the result become a double in [0, 1). Rows of a graph
can therefore be produced in any order, on any number of threads, with identical bits.

Changing any constant or the chaining order changes every generated graph, so bump
STREAM_VERSION along with it.
"""
import numpy as np

STREAM_VERSION = 'fbod-splitmix64-v1'

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_SHIFT_30 = np.uint64(30)
_SHIFT_27 = np.uint64(27)
_SHIFT_31 = np.uint64(31)
_SHIFT_11 = np.uint64(11)
_TO_UNIT = 2.0 ** -53


def _as_u64(values) -> np.ndarray:
    return np.asarray(values, dtype=np.uint64)


def splitmix64(values) -> np.ndarray:
    """
    SplitMix64 output function, applied elementwise with wrapping uint64 arithmetic
    """
    z = _as_u64(values)
    with np.errstate(over='ignore'):
        z = (z ^ (z >> _SHIFT_30)) * _MIX_1
        z = (z ^ (z >> _SHIFT_27)) * _MIX_2
    return z ^ (z >> _SHIFT_31)


def _absorb(state, key) -> np.ndarray:
    with np.errstate(over='ignore'):
        return splitmix64(_as_u64(state) + (_as_u64(key) + np.uint64(1)) * _GOLDEN)


def graph_key(seed: int, graph_index: int) -> np.ndarray:
    return _absorb(splitmix64(seed), graph_index)


def row_keys(seed: int, graph_index: int, object_indices) -> np.ndarray:
    """
    One 64-bit key per object; everything drawn for row i derives from row_keys(...)[i]
    """
    return _absorb(graph_key(seed, graph_index), object_indices)


def uniform(keys, draw_index: int) -> np.ndarray:
    """
    The draw_index-th uniform double in [0, 1) of every row keyed by `keys`
    """
    bits = _absorb(keys, draw_index) >> _SHIFT_11
    return bits.astype(np.float64) * _TO_UNIT


def bounded(keys, draw_index: int, bounds) -> np.ndarray:
    """
    The draw_index-th integer in [0, bound) of every row, bound given per row
    """
    bounds = np.asarray(bounds, dtype=np.int64)
    values = np.floor(uniform(keys, draw_index) * bounds).astype(np.int64)
    return np.minimum(values, bounds - 1)
