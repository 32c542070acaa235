import argparse
import os
import tempfile
from contextlib import contextmanager


def positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"{value} must be a positive integer")
    return number


def non_negative_int(value: str) -> int:
    number = int(value)
    if number < 0:
        raise argparse.ArgumentTypeError(f"{value} must be a non-negative integer")
    return number


def positive_float(value: str) -> float:
    number = float(value)
    if not number > 0:
        raise argparse.ArgumentTypeError(f"{value} must be a positive number")
    return number


def seed_int(value: str) -> int:
    number = int(value, 0)
    if not 0 <= number < 2 ** 64:
        raise argparse.ArgumentTypeError(f"{value} must be a 64-bit unsigned integer")
    return number


def parse_range(value: str) -> list:
    """
    Parses an inclusive `lo:hi:step` range. lo > hi yields an empty range.
    """
    parts = value.split(':')
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"{value} is not a lo:hi:step range")
    try:
        lo, hi, step = (int(part) for part in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value} is not a lo:hi:step range of integers")
    if step < 1:
        raise argparse.ArgumentTypeError(f"{value}: step must be a positive integer")
    if lo < 1:
        raise argparse.ArgumentTypeError(f"{value}: lower bound must be a positive integer")
    return list(range(lo, hi + 1, step))


def parse_sizes(value: str) -> list:
    try:
        sizes = [int(size) for size in value.split(',') if size.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{value} is not a comma separated list of sizes")
    if not sizes:
        raise argparse.ArgumentTypeError("at least one size is required")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise argparse.ArgumentTypeError(f"{value}: sizes must be strictly increasing")
    return sizes


def default_file_mode() -> int:
    """
    Mode a plain open() would give a new file under the current umask
    """
    umask = os.umask(0)
    os.umask(umask)
    return 0o666 & ~umask


@contextmanager
def atomic_path(path: str):
    """
    Yields a temporary sibling of `path` and moves it into place only when the block succeeds
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp_path = tempfile.mkstemp(prefix='.fbod-', dir=directory)
    os.close(fd)
    try:
        yield tmp_path
        os.chmod(tmp_path, default_file_mode())
        os.replace(tmp_path, path)
    finally:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
