from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional, Tuple
import csv
import logging
import math

import numpy as np

from ..util import IngestionError

STRING_FIELDS = ("rule", "task")
INTEGER_FIELDS = ("iteration", "seed")


@dataclass
class TraceRow:
    iteration: int
    rule: str
    seed: int
    task: str
    gain: float
    lr: float
    loss: float
    normalized_accuracy: float
    procrustes: Optional[float] = None
    cka: Optional[float] = None
    cca: Optional[float] = None
    grad_cosine: Optional[float] = None
    wall_time: Optional[float] = None


FIELDS = [row_field.name for row_field in fields(TraceRow)]


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _parse(name: str, value: str):
    if value == "":
        return None
    if name in STRING_FIELDS:
        return value
    if name in INTEGER_FIELDS:
        return int(value)
    return float(value)


def interpolate_at_accuracy(
    accuracies: np.ndarray, distances: np.ndarray, target: float
) -> Optional[float]:
    """Distance at the first upward crossing of ``target``, linearly interpolated.

    None if the series never reaches the target.
    """
    accuracies = np.asarray(accuracies, dtype=np.float64)
    distances = np.asarray(distances, dtype=np.float64)
    reached = np.flatnonzero(accuracies >= target)
    if reached.size == 0:
        return None
    i = reached[0]
    if i == 0 or accuracies[i] == target:
        return float(distances[i])
    a0, a1 = accuracies[i - 1], accuracies[i]
    fraction = (target - a0) / (a1 - a0)
    return float(distances[i - 1] + fraction * (distances[i] - distances[i - 1]))


@dataclass
class TrainingTrace:
    config_hash: str
    rows: List[TraceRow] = field(default_factory=list)

    def append(self, row: TraceRow) -> None:
        previous = [r for r in self.rows if (r.rule, r.seed) == (row.rule, row.seed)]
        if previous and row.iteration <= previous[-1].iteration:
            raise ValueError(
                f"iteration {row.iteration} does not increase past {previous[-1].iteration}"
            )
        if not 0.0 <= row.normalized_accuracy <= 1.0:
            raise ValueError(f"{row.normalized_accuracy=} outside [0, 1]")
        if row.procrustes is not None and not 0.0 <= row.procrustes <= math.pi / 2 + 1e-12:
            raise ValueError(f"{row.procrustes=} outside [0, pi/2]")
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        values = [getattr(row, name) for row in self.rows]
        return np.array([np.nan if value is None else value for value in values], dtype=np.float64)

    def series(self) -> Dict[Tuple[str, int, float, float], "TrainingTrace"]:
        grouped: Dict[Tuple[str, int, float, float], TrainingTrace] = {}
        for row in self.rows:
            key = (row.rule, row.seed, row.gain, row.lr)
            grouped.setdefault(key, TrainingTrace(self.config_hash)).rows.append(row)
        return grouped

    def distance_at_accuracy(self, target: float, measure: str = "procrustes") -> Optional[float]:
        distances = self.column(measure)
        if np.all(np.isnan(distances)):
            return None
        return interpolate_at_accuracy(self.column("normalized_accuracy"), distances, target)

    def first_iteration_at(self, target: float) -> Optional[int]:
        for row in self.rows:
            if row.normalized_accuracy >= target:
                return row.iteration
        return None

    def write_header(self, file_path: str, include_wall_time: bool = False) -> None:
        with open(file_path, "w", newline="", encoding="utf-8") as csvfile:
            csvfile.write(f"# config_hash={self.config_hash}\n")
            writer = csv.writer(csvfile, lineterminator="\n")
            writer.writerow(self._columns(include_wall_time))

    def append_row(self, file_path: str, row: TraceRow, include_wall_time: bool = False) -> None:
        with open(file_path, "a", newline="", encoding="utf-8") as csvfile:
            writer = csv.writer(csvfile, lineterminator="\n")
            writer.writerow([format_value(getattr(row, name)) for name in self._columns(include_wall_time)])

    def write_csv(self, file_path: str, include_wall_time: bool = False) -> None:
        self.write_header(file_path, include_wall_time)
        for row in self.rows:
            self.append_row(file_path, row, include_wall_time)

    @staticmethod
    def _columns(include_wall_time: bool) -> List[str]:
        if include_wall_time:
            return FIELDS
        return [name for name in FIELDS if name != "wall_time"]

    @classmethod
    def read_csv(cls, file_path: str) -> "TrainingTrace":
        logger = logging.getLogger(__name__)
        try:
            with open(file_path, "r", newline="", encoding="utf-8") as csvfile:
                first = csvfile.readline().rstrip("\r\n")
                if not first.startswith("# config_hash="):
                    raise IngestionError("missing '# config_hash=' line", line=1)
                trace = cls(first[len("# config_hash=") :])
                reader = csv.reader(csvfile)
                header = next(reader, None)
                if header is None or any(name not in FIELDS for name in header):
                    raise IngestionError(f"unexpected columns {header}", line=2)
                for line_number, values in enumerate(reader, start=3):
                    if len(values) != len(header):
                        raise IngestionError(
                            f"{len(values)} fields, expected {len(header)}", line=line_number
                        )
                    try:
                        parsed = {name: _parse(name, value) for name, value in zip(header, values)}
                        trace.rows.append(TraceRow(**parsed))
                    except (TypeError, ValueError) as error:
                        raise IngestionError(str(error), line=line_number)
        except OSError as error:
            raise IngestionError(f"{file_path}: {error}")
        logger.debug(f"read {len(trace.rows)} rows from {file_path}")
        return trace
