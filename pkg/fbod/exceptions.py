class FbodError(Exception):
    """
    Base class for every error raised by the detector
    """


class InvalidParameterError(FbodError, ValueError):
    pass


class ShapeError(FbodError, ValueError):
    pass


class DatasetError(FbodError, ValueError):
    pass


class DatasetParseError(DatasetError):
    """
    Raised when an input file cannot be turned into a Dataset.
    CSV errors carry 1-based file coordinates, frame errors carry the path.
    """

    def __init__(self, message: str, row: int = None, column: int = None, path: str = None):
        location = []
        if path is not None:
            location.append(f"{path}")
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column}")
        if location:
            message = f"{', '.join(location)}: {message}"
        super().__init__(message)
        self.row = row
        self.column = column
        self.path = path


class UndefinedMetricError(FbodError, ValueError):
    pass
