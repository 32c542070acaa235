import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from fbod import random_stream
from fbod.exceptions import DatasetError, InvalidParameterError, ShapeError

NORMALIZE_NONE = 'none'
NORMALIZE_MINMAX = 'minmax'
SUPPORTED_NORMALIZE = [
    NORMALIZE_NONE,
    NORMALIZE_MINMAX,
]
DEFAULT_GUARD = 1e-12
SPARSE_FACTOR = 8
DENSE_CHUNK_CELLS = 1 << 22


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    Feature matrix stored column per object: values[d, i] is feature d of object i.
    labels, when present, mark outliers with 1 and normal objects with 0.
    """
    values: np.ndarray
    feature_names: Optional[tuple] = None
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ShapeError(f"values must be a D x n matrix, got {values.ndim} dimension(s)")
        dims, count = values.shape
        if dims < 1:
            raise DatasetError("a dataset needs at least one feature")
        if count < 2:
            raise DatasetError(f"a dataset needs at least 2 objects, got {count}")
        if not np.isfinite(values).all():
            bad_feature, bad_object = np.argwhere(~np.isfinite(values))[0]
            raise DatasetError(f"non-finite value at feature {bad_feature}, object {bad_object}")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)

        if self.feature_names is not None:
            names = tuple(str(name) for name in self.feature_names)
            if len(names) != dims:
                raise ShapeError(f"{len(names)} feature names given for {dims} features")
            object.__setattr__(self, 'feature_names', names)

        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (count,):
                raise ShapeError(f"label vector has shape {labels.shape}, expected ({count},)")
            if not np.isin(labels, (0, 1)).all():
                raise DatasetError("labels must be 0 (normal) or 1 (outlier)")
            labels = labels.astype(np.int8)
            labels.setflags(write=False)
            object.__setattr__(self, 'labels', labels)

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def dims(self) -> int:
        return self.values.shape[0]

    @property
    def outlier_count(self) -> int:
        if self.labels is None:
            return 0
        return int(self.labels.sum())

    def with_values(self, values: np.ndarray) -> 'Dataset':
        return Dataset(values, self.feature_names, self.labels)


@dataclass(frozen=True)
class FbodParams:
    """
    k: sampled neighbors per object
    graph_count: number of generated graphs (T)
    top_p: number of objects reported as outliers
    """
    k: int
    graph_count: int = 1
    top_p: int = 0
    seed: int = 0
    denom_guard: float = DEFAULT_GUARD
    normalize: str = NORMALIZE_NONE

    def __post_init__(self):
        if self.k < 1:
            raise InvalidParameterError(f"k must be >= 1, got {self.k}")
        if self.graph_count < 1:
            raise InvalidParameterError(f"graph_count must be >= 1, got {self.graph_count}")
        if self.top_p < 0:
            raise InvalidParameterError(f"top_p must be >= 0, got {self.top_p}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvalidParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not self.denom_guard > 0:
            raise InvalidParameterError(f"denom_guard must be positive, got {self.denom_guard}")
        if self.normalize not in SUPPORTED_NORMALIZE:
            raise InvalidParameterError(f"{self.normalize} is not supported. "
                                        f"Supported normalizations: {SUPPORTED_NORMALIZE}")

    def validate(self, n: int):
        """
        Checks the bounds that depend on the object count
        """
        _check_graph_bounds(n, self.k)
        if self.top_p > n:
            raise InvalidParameterError(f"top_p must be <= n ({n}), got {self.top_p}")


@dataclass(frozen=True, eq=False)
class NeighborTable:
    """
    neighbors[i] holds the k objects linked into object i for one graph.
    Equivalent to an adjacency matrix A with A[j, i] = 1 for every j in neighbors[i]
    and a unit diagonal.
    """
    neighbors: np.ndarray

    @property
    def n(self) -> int:
        return self.neighbors.shape[0]

    @property
    def k(self) -> int:
        return self.neighbors.shape[1]


@dataclass(frozen=True, eq=False)
class FluctuationVector:
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class ScoreReport:
    """
    of: outlier factor per object, in object order
    order: object indices by descending outlier factor, ties by ascending index
    predicted: True for the first top_p entries of order
    fluctuation: fluctuation per object averaged over the generated graphs
    """
    of: np.ndarray
    order: np.ndarray
    predicted: np.ndarray
    fluctuation: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.of.shape[0]

    @property
    def ranks(self) -> np.ndarray:
        """
        1-based position of every object in `order`
        """
        ranks = np.empty(self.n, dtype=np.int64)
        ranks[self.order] = np.arange(1, self.n + 1)
        return ranks

    @property
    def top(self) -> np.ndarray:
        return self.order[:int(self.predicted.sum())]


def _check_graph_bounds(n: int, k: int):
    if n < 2:
        raise InvalidParameterError(f"n must be >= 2, got {n}")
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    if k > n - 1:
        raise InvalidParameterError(f"k must be <= n - 1 ({n - 1}), got {k}")


def _matrix(data: Union[Dataset, np.ndarray]) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.values
    return np.asarray(data, dtype=np.float64)


def _sample_sparse(keys: np.ndarray, k: int, candidates: int) -> np.ndarray:
    """
    Draws k candidates per row and redraws any value already held by an earlier column
    of the same row, until every row is distinct
    """
    columns = np.arange(k)
    picked = random_stream.bounded(keys[:, None], columns[None, :], candidates)
    next_draw = k
    while True:
        order = np.argsort(picked, axis=1, kind='stable')
        ordered = np.take_along_axis(picked, order, axis=1)
        repeated_sorted = np.zeros(picked.shape, dtype=bool)
        repeated_sorted[:, 1:] = ordered[:, 1:] == ordered[:, :-1]
        if not repeated_sorted.any():
            return picked
        repeated = np.empty_like(repeated_sorted)
        np.put_along_axis(repeated, order, repeated_sorted, axis=1)
        rows, cols = np.nonzero(repeated)
        picked[rows, cols] = random_stream.bounded(keys[rows], next_draw + cols, candidates)
        next_draw += k


def _sample_dense(keys: np.ndarray, k: int, candidates: int) -> np.ndarray:
    """
    Gives every candidate of a row a random sort key and keeps the k smallest
    """
    picked = np.empty((keys.shape[0], k), dtype=np.int64)
    positions = np.arange(candidates)[None, :]
    chunk = max(1, DENSE_CHUNK_CELLS // candidates)
    for start in range(0, keys.shape[0], chunk):
        stop = min(start + chunk, keys.shape[0])
        sort_keys = random_stream.uniform(keys[start:stop, None], positions)
        picked[start:stop] = np.argsort(sort_keys, axis=1, kind='stable')[:, :k]
    return picked


def generate_graph(n: int, k: int, graph_index: int, seed: int) -> NeighborTable:
    """
    Samples k distinct neighbors for every object, never the object itself.

    Each row picks a uniform k-subset of the n - 1 candidates {0, ..., n - 2} and shifts
    every value v >= i to v + 1. Small k redraws collisions, which stay rare while
    k * SPARSE_FACTOR <= n - 1; larger k sorts random keys of all candidates, a chunk of
    rows at a time. Both draw from the row's counter-based stream only.
    """
    _check_graph_bounds(n, k)
    candidates = n - 1
    objects = np.arange(n, dtype=np.int64)
    keys = random_stream.row_keys(seed, graph_index, objects)

    if k * SPARSE_FACTOR <= candidates:
        neighbors = _sample_sparse(keys, k, candidates)
    else:
        neighbors = _sample_dense(keys, k, candidates)

    neighbors += neighbors >= objects[:, None]
    neighbors.setflags(write=False)
    return NeighborTable(neighbors)


def propagate(data: Union[Dataset, np.ndarray], graph: NeighborTable) -> np.ndarray:
    """
    X' = X * A as a gather-sum: every column becomes itself plus its neighbors' columns.
    The sum runs over an object-major copy so each gathered object is one contiguous read.
    """
    values = _matrix(data)
    if values.ndim != 2 or values.shape[1] != graph.n:
        raise ShapeError(f"data has shape {values.shape} but the graph has {graph.n} rows")
    rows = np.ascontiguousarray(values.T)
    propagated = rows.copy()
    for column in range(graph.k):
        propagated += rows[graph.neighbors[:, column]]
    return np.ascontiguousarray(propagated.T)


def fluctuation(data: Union[Dataset, np.ndarray], propagated: np.ndarray,
                guard: float = DEFAULT_GUARD) -> FluctuationVector:
    """
    fluctuation(x_i) = sum over d of x_id / x'_id.

    Denominators are clamped to sign(x'_id) * max(|x'_id|, guard), an exact zero becomes
    +guard, and a zero numerator contributes nothing.
    """
    values = _matrix(data)
    propagated = np.asarray(propagated, dtype=np.float64)
    if values.shape != propagated.shape:
        raise ShapeError(f"data has shape {values.shape}, propagated data has shape {propagated.shape}")
    if not guard > 0:
        raise InvalidParameterError(f"guard must be positive, got {guard}")
    magnitude = np.maximum(np.abs(propagated), guard)
    denominators = np.where(propagated < 0, -magnitude, magnitude)
    terms = np.divide(values, denominators, out=np.zeros_like(values), where=values != 0)
    return FluctuationVector(terms.sum(axis=0))


def _graph_outlier_factor(values: np.ndarray, graph: NeighborTable) -> np.ndarray:
    if values.shape != (graph.n,):
        raise ShapeError(f"fluctuation vector has {values.shape[0]} entries, graph has {graph.n} rows")
    return np.abs(values[:, None] - values[graph.neighbors]).sum(axis=1)


def outlier_factor(fluctuations: Sequence[FluctuationVector], graphs: Sequence[NeighborTable]) -> np.ndarray:
    """
    OF(x_i) = sum over graphs t of sum over j in N_t(i) of |fluctuation_t(i) - fluctuation_t(j)|.
    Vector t is only ever compared through table t.
    """
    if len(fluctuations) != len(graphs):
        raise ShapeError(f"{len(fluctuations)} fluctuation vectors for {len(graphs)} graphs")
    if not graphs:
        raise ShapeError("at least one graph is required")
    n = graphs[0].n
    total = np.zeros(n, dtype=np.float64)
    for vector, graph in zip(fluctuations, graphs):
        if graph.n != n:
            raise ShapeError(f"graphs disagree on the object count ({graph.n} != {n})")
        total += _graph_outlier_factor(np.asarray(vector.values, dtype=np.float64), graph)
    return total


def normalize_minmax(values: np.ndarray) -> np.ndarray:
    """
    Maps every feature row affinely onto [0, 1]; constant rows become zeros
    """
    values = np.asarray(values, dtype=np.float64)
    low = values.min(axis=1, keepdims=True)
    span = values.max(axis=1, keepdims=True) - low
    shifted = values - low
    return np.divide(shifted, span, out=np.zeros_like(values), where=span > 0)


def rank_descending(of: np.ndarray) -> np.ndarray:
    """
    Object indices by descending score; equal scores keep ascending index order
    """
    return np.argsort(-of, kind='stable')


class FluctuationDetector:
    """
    Runs graph generation, propagation, fluctuation and outlier factors for a dataset.
    Graphs are scored on up to `workers` threads and reduced in graph order, so the
    result does not depend on the worker count.
    """

    def __init__(self, params: FbodParams, workers: int = 1):
        if workers < 1:
            raise InvalidParameterError(f"workers must be >= 1, got {workers}")
        self.params = params
        self.workers = workers

        # Logging
        self.logger = logging.getLogger('FluctuationDetector')
        logging.basicConfig(
            format='%(asctime)s.%(msecs)03d %(levelname)s %(module)s - %(funcName)s: %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S',
        )

    def prepare(self, data: Dataset) -> np.ndarray:
        if self.params.normalize == NORMALIZE_MINMAX:
            self.logger.debug(f"Min-max normalizing {data.dims} features")
            return normalize_minmax(data.values)
        return data.values

    def score_graph(self, values: np.ndarray, graph_index: int):
        """
        Outlier factor contribution and fluctuation vector of one generated graph
        """
        graph = generate_graph(values.shape[1], self.params.k, graph_index, self.params.seed)
        vector = fluctuation(values, propagate(values, graph), self.params.denom_guard)
        return _graph_outlier_factor(vector.values, graph), vector.values

    def detect(self, data: Dataset) -> ScoreReport:
        try:
            self.params.validate(data.n)
        except InvalidParameterError as e:
            self.logger.error(f"Invalid parameters for n={data.n}: {e}")
            raise e
        if not np.isfinite(data.values).all():
            raise DatasetError("dataset contains non-finite values")

        params = self.params
        self.logger.info(f"Scoring n={data.n}, D={data.dims} with k={params.k}, T={params.graph_count}, "
                         f"p={params.top_p}, seed={params.seed}, normalize={params.normalize}")
        values = self.prepare(data)
        graph_indices = range(params.graph_count)

        if self.workers > 1 and params.graph_count > 1:
            with ThreadPoolExecutor(max_workers=min(self.workers, params.graph_count)) as pool:
                results = list(pool.map(lambda t: self.score_graph(values, t), graph_indices))
        else:
            results = [self.score_graph(values, t) for t in graph_indices]

        of = np.zeros(data.n, dtype=np.float64)
        fluctuation_sum = np.zeros(data.n, dtype=np.float64)
        for graph_of, graph_fluctuation in results:
            of += graph_of
            fluctuation_sum += graph_fluctuation

        order = rank_descending(of)
        predicted = np.zeros(data.n, dtype=bool)
        predicted[order[:params.top_p]] = True
        self.logger.debug(f"Top {params.top_p} objects: {order[:params.top_p].tolist()}")
        return ScoreReport(of, order, predicted, fluctuation_sum / params.graph_count)


def detect(data: Dataset, params: FbodParams, workers: int = 1) -> ScoreReport:
    return FluctuationDetector(params, workers).detect(data)
