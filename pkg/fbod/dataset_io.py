"""
Reading datasets from CSV files and PGM frame directories, writing scores and tables.

Files keep one object per row; inside the package a Dataset keeps one object per column.
"""
import logging
import os
import re
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

from fbod.core import Dataset, ScoreReport
from fbod.exceptions import DatasetError, DatasetParseError
from fbod.utils import atomic_path

LABEL_HEADER = 'label'
LABELS_FILE = 'labels.csv'
SCORE_COLUMNS = ['index', 'outlier_factor', 'rank', 'predicted']
FLUCTUATION_COLUMNS = ['index', 'fluctuation']
ROUND_TRIP_FORMAT = '%.17g'
PGM_EXTENSION = '.pgm'

logger = logging.getLogger('dataset_io')


@dataclass(frozen=True)
class CsvSchema:
    """
    label_column: header name, or 0-based column position (negative counts from the end)
    """
    has_header: bool = True
    label_column: Optional[Union[str, int]] = None
    delimiter: str = ','

    def __post_init__(self):
        if len(self.delimiter) != 1:
            raise DatasetError(f"delimiter must be a single character, got {self.delimiter!r}")
        if isinstance(self.label_column, str) and not self.has_header:
            raise DatasetError(f"label column {self.label_column!r} is named but the file has no header")


@dataclass(frozen=True, eq=False)
class FrameDataset:
    """
    Grayscale frames flattened row-major into the columns of `dataset` (D = width * height)
    """
    width: int
    height: int
    dataset: Dataset

    @property
    def frame_count(self) -> int:
        return self.dataset.n

    @property
    def pixels(self) -> np.ndarray:
        return self.dataset.values

    def frame(self, index: int) -> np.ndarray:
        return self.pixels[:, index].reshape(self.height, self.width)


def _file_row(frame_row: int, schema: CsvSchema) -> int:
    return frame_row + (2 if schema.has_header else 1)


def _label_position(frame: pd.DataFrame, schema: CsvSchema, path: str) -> Optional[int]:
    if schema.label_column is None:
        return None
    if isinstance(schema.label_column, str):
        if schema.label_column not in frame.columns:
            raise DatasetParseError(f"label column {schema.label_column!r} not found in header "
                                    f"{list(frame.columns)}", path=path)
        return list(frame.columns).index(schema.label_column)
    position = schema.label_column
    if not -frame.shape[1] <= position < frame.shape[1]:
        raise DatasetParseError(f"label column {position} is out of range for {frame.shape[1]} columns",
                                path=path)
    return position % frame.shape[1]


EXTRA_FIELDS = re.compile(r'Expected (\d+) fields in line (\d+), saw (\d+)')


def _read_table(path: str, schema: CsvSchema) -> pd.DataFrame:
    """
    Every line, header included, is read as data so that a row longer than the first one
    is rejected instead of shifting into an index column
    """
    try:
        frame = pd.read_csv(
            path,
            sep=schema.delimiter,
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
        )
    except pd.errors.EmptyDataError:
        raise DatasetParseError("file is empty", path=path)
    except pd.errors.ParserError as e:
        match = EXTRA_FIELDS.search(str(e))
        if match is None:
            raise DatasetParseError(f"ragged rows: {e}", path=path)
        expected, line, seen = (int(group) for group in match.groups())
        raise DatasetParseError(f"row has {seen} fields, expected {expected}",
                                row=line, column=expected + 1, path=path)
    except OSError as e:
        raise DatasetParseError(f"cannot read file: {e}", path=path)

    if schema.has_header:
        header = frame.iloc[0].tolist()
        frame = frame.iloc[1:].reset_index(drop=True)
        frame.columns = header
    if frame.shape[0] == 0:
        raise DatasetParseError("file has no data rows", path=path)

    missing = frame.isna().to_numpy()
    if missing.any():
        row, column = np.argwhere(missing)[0]
        raise DatasetParseError(f"row has fewer fields than expected ({frame.shape[1]})",
                                row=_file_row(int(row), schema), column=int(column) + 1, path=path)
    return frame


def _first_unparsable(cells: pd.Series) -> int:
    for row, cell in enumerate(cells):
        try:
            float(cell)
        except ValueError:
            return row
    return 0


def _numeric_column(frame: pd.DataFrame, position: int, schema: CsvSchema, path: str) -> np.ndarray:
    cells = frame.iloc[:, position].str.strip()
    try:
        # correctly rounded, so %.17g output loads back bit for bit
        numbers = cells.astype(np.float64).to_numpy()
    except ValueError:
        row = _first_unparsable(cells)
        raise DatasetParseError(f"{frame.iloc[row, position]!r} is not a number",
                                row=_file_row(row, schema), column=position + 1, path=path)
    bad = ~np.isfinite(numbers)
    if bad.any():
        row = int(np.argmax(bad))
        raise DatasetParseError(f"{frame.iloc[row, position]!r} is not a finite number",
                                row=_file_row(row, schema), column=position + 1, path=path)
    return numbers


def load_csv(path: str, schema: CsvSchema = CsvSchema()) -> Dataset:
    """
    Rows become objects and columns become features; the label column, if any, becomes
    the label vector
    """
    logger.info(f"Loading CSV dataset from {path}")
    frame = _read_table(path, schema)
    label_position = _label_position(frame, schema, path)

    labels = None
    if label_position is not None:
        labels = _numeric_column(frame, label_position, schema, path)
        not_binary = ~np.isin(labels, (0, 1))
        if not_binary.any():
            row = int(np.argmax(not_binary))
            raise DatasetParseError(f"label {frame.iloc[row, label_position]!r} is not 0 or 1",
                                    row=_file_row(row, schema), column=label_position + 1, path=path)
        labels = labels.astype(np.int8)

    feature_positions = [position for position in range(frame.shape[1]) if position != label_position]
    if not feature_positions:
        raise DatasetParseError("file has no feature columns", path=path)
    columns = [_numeric_column(frame, position, schema, path) for position in feature_positions]
    feature_names = None
    if schema.has_header:
        feature_names = tuple(str(frame.columns[position]) for position in feature_positions)

    dataset = Dataset(np.vstack(columns), feature_names, labels)
    logger.info(f"Loaded n={dataset.n} objects with D={dataset.dims} features from {path}")
    return dataset


def load_labels(path: str) -> np.ndarray:
    """
    Reads a single-column label file with a header line
    """
    schema = CsvSchema()
    frame = _read_table(path, schema)
    if frame.shape[1] != 1:
        raise DatasetParseError(f"label file must have exactly one column, found {frame.shape[1]}", path=path)
    labels = _numeric_column(frame, 0, schema, path)
    not_binary = ~np.isin(labels, (0, 1))
    if not_binary.any():
        row = int(np.argmax(not_binary))
        raise DatasetParseError(f"label {frame.iloc[row, 0]!r} is not 0 or 1",
                                row=_file_row(row, schema), column=1, path=path)
    return labels.astype(np.int8)


def with_labels(dataset: Dataset, labels: Sequence[int]) -> Dataset:
    labels = np.asarray(labels)
    if labels.shape != (dataset.n,):
        raise DatasetError(f"{labels.shape[0]} labels given for {dataset.n} objects")
    return Dataset(dataset.values, dataset.feature_names, labels)


def drop_duplicates(dataset: Dataset) -> Dataset:
    """
    Removes repeated objects, keeping the first occurrence of each
    """
    _, first = np.unique(dataset.values.T, axis=0, return_index=True)
    keep = np.sort(first)
    if keep.shape[0] == dataset.n:
        return dataset
    logger.info(f"Dropped {dataset.n - keep.shape[0]} duplicate objects")
    labels = None if dataset.labels is None else dataset.labels[keep]
    return Dataset(dataset.values[:, keep], dataset.feature_names, labels)


def write_dataset(dataset: Dataset, path: str, schema: CsvSchema = CsvSchema()):
    """
    Writes one object per row; labels, if any, go to a trailing `label` column
    """
    names = dataset.feature_names or tuple(f"x{d}" for d in range(dataset.dims))
    frame = pd.DataFrame(dataset.values.T, columns=list(names))
    if dataset.labels is not None:
        frame[LABEL_HEADER] = dataset.labels.astype(int)
    with atomic_path(path) as tmp_path:
        frame.to_csv(tmp_path, sep=schema.delimiter, index=False, header=schema.has_header,
                     float_format=ROUND_TRIP_FORMAT)
    logger.info(f"Wrote n={dataset.n} objects to {path}")


def _pgm_header(data: bytes, path: str):
    """
    Returns the four header tokens and the offset just past the last one
    """
    tokens = []
    position = 0
    while len(tokens) < 4:
        while position < len(data) and data[position:position + 1].isspace():
            position += 1
        if position >= len(data):
            raise DatasetParseError("truncated header", path=path)
        if data[position:position + 1] == b'#':
            end = data.find(b'\n', position)
            position = len(data) if end < 0 else end + 1
            continue
        start = position
        while position < len(data) and not data[position:position + 1].isspace():
            position += 1
        tokens.append(data[start:position])
    return tokens, position


def read_pgm(path: str) -> np.ndarray:
    """
    Reads a P2 (ASCII) or P5 (binary) PGM image as a height x width float array scaled to [0, 255]
    """
    try:
        with open(path, 'rb') as image_file:
            data = image_file.read()
    except OSError as e:
        raise DatasetParseError(f"cannot read file: {e}", path=path)

    if data[:2] not in (b'P2', b'P5'):
        raise DatasetParseError(f"unsupported format {data[:2]!r}, expected a P2 or P5 PGM image", path=path)
    tokens, position = _pgm_header(data, path)
    try:
        width, height, max_value = (int(token) for token in tokens[1:])
    except ValueError:
        raise DatasetParseError(f"malformed header {tokens}", path=path)
    if width < 1 or height < 1 or not 0 < max_value < 65536:
        raise DatasetParseError(f"invalid header values width={width}, height={height}, "
                                f"maxval={max_value}", path=path)

    count = width * height
    if tokens[0] == b'P5':
        dtype = np.dtype(np.uint8) if max_value < 256 else np.dtype('>u2')
        raster = data[position + 1:position + 1 + count * dtype.itemsize]
        if len(raster) < count * dtype.itemsize:
            raise DatasetParseError(f"raster holds {len(raster)} bytes, expected {count * dtype.itemsize}",
                                    path=path)
        pixels = np.frombuffer(raster, dtype=dtype).astype(np.float64)
    else:
        body = re.sub(rb'#[^\n]*', b' ', data[position:]).split()
        if len(body) < count:
            raise DatasetParseError(f"raster holds {len(body)} values, expected {count}", path=path)
        try:
            pixels = np.array([int(value) for value in body[:count]], dtype=np.float64)
        except ValueError:
            raise DatasetParseError("raster contains a non-integer value", path=path)

    if pixels.max() > max_value:
        raise DatasetParseError(f"pixel value above maxval {max_value}", path=path)
    if max_value != 255:
        pixels = pixels * (255.0 / max_value)
    return pixels.reshape(height, width)


def write_pgm(path: str, image: np.ndarray):
    """
    Writes an 8-bit binary (P5) PGM image
    """
    image = np.clip(np.rint(np.asarray(image, dtype=np.float64)), 0, 255).astype(np.uint8)
    height, width = image.shape
    with atomic_path(path) as tmp_path:
        with open(tmp_path, 'wb') as image_file:
            image_file.write(f"P5\n{width} {height}\n255\n".encode('ascii'))
            image_file.write(image.tobytes())


def _frame_paths(directory: str) -> list:
    try:
        names = sorted(name for name in os.listdir(directory) if name.lower().endswith(PGM_EXTENSION))
    except OSError as e:
        raise DatasetParseError(f"cannot list directory: {e}", path=directory)
    return [os.path.join(directory, name) for name in names]


def read_frames(directory: str, labels_path: str = None) -> FrameDataset:
    """
    Flattens every .pgm file of `directory`, in lexicographic filename order, into one column.
    Labels come from `labels_path`, or from labels.csv next to the frames when it exists.
    """
    paths = _frame_paths(directory)
    if len(paths) < 2:
        raise DatasetParseError(f"found {len(paths)} PGM frame(s), at least 2 are required", path=directory)
    logger.info(f"Loading {len(paths)} frames from {directory}")

    first = read_pgm(paths[0])
    height, width = first.shape
    pixels = np.empty((width * height, len(paths)), dtype=np.float64)
    pixels[:, 0] = first.ravel()
    for column, path in enumerate(paths[1:], start=1):
        image = read_pgm(path)
        if image.shape != first.shape:
            raise DatasetParseError(f"dimension mismatch: {image.shape[1]}x{image.shape[0]} frame, "
                                    f"expected {width}x{height}", path=path)
        pixels[:, column] = image.ravel()

    if labels_path is None and os.path.isfile(os.path.join(directory, LABELS_FILE)):
        labels_path = os.path.join(directory, LABELS_FILE)
    labels = load_labels(labels_path) if labels_path is not None else None
    if labels is not None and labels.shape[0] != len(paths):
        raise DatasetError(f"{labels.shape[0]} labels given for {len(paths)} frames")
    return FrameDataset(width, height, Dataset(pixels, labels=labels))


def load_frames(directory: str, labels_path: str = None) -> Dataset:
    return read_frames(directory, labels_path).dataset


def write_frames(frames: FrameDataset, directory: str):
    """
    Writes frame_000.pgm, frame_001.pgm, ... and labels.csv when the frames are labelled
    """
    os.makedirs(directory, exist_ok=True)
    digits = max(3, len(str(frames.frame_count - 1)))
    for index in range(frames.frame_count):
        write_pgm(os.path.join(directory, f"frame_{index:0{digits}d}{PGM_EXTENSION}"), frames.frame(index))
    if frames.dataset.labels is not None:
        write_table([{LABEL_HEADER: int(label)} for label in frames.dataset.labels], [LABEL_HEADER],
                    os.path.join(directory, LABELS_FILE))
    logger.info(f"Wrote {frames.frame_count} frames to {directory}")


def write_scores(report: ScoreReport, path: str):
    """
    One row per object in object order: index,outlier_factor,rank,predicted
    """
    frame = pd.DataFrame({
        'index': np.arange(report.n),
        'outlier_factor': report.of,
        'rank': report.ranks,
        'predicted': report.predicted.astype(int),
    }, columns=SCORE_COLUMNS)
    with atomic_path(path) as tmp_path:
        frame.to_csv(tmp_path, index=False, float_format=ROUND_TRIP_FORMAT)
    logger.info(f"Wrote scores of {report.n} objects to {path}")


def write_fluctuations(report: ScoreReport, path: str):
    frame = pd.DataFrame({
        'index': np.arange(report.n),
        'fluctuation': report.fluctuation,
    }, columns=FLUCTUATION_COLUMNS)
    with atomic_path(path) as tmp_path:
        frame.to_csv(tmp_path, index=False, float_format=ROUND_TRIP_FORMAT)


def format_table(rows: Sequence[dict], columns: Sequence[str]) -> str:
    return pd.DataFrame(list(rows), columns=list(columns)).to_csv(index=False)


def write_table(rows: Sequence[dict], columns: Sequence[str], path: str):
    """
    Writes rows as CSV with a header line; no rows gives a header-only file
    """
    with atomic_path(path) as tmp_path:
        pd.DataFrame(list(rows), columns=list(columns)).to_csv(tmp_path, index=False)
