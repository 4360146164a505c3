from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple, Union
import csv
import re

import numpy as np
import torch

from ..util import DegenerateInputError, IngestionError, ShapeError

HEADER = re.compile(r"^# conditions=(\d+) steps=(\d+) units=(\d+) source=(\S+)$")


@dataclass
class ResponseMatrix:
    """Unit activity stacked condition-major: row ``c * n_steps + t``."""

    data: np.ndarray
    n_conditions: int
    n_steps: int
    source: str = "model"
    unit_labels: Optional[List[str]] = field(default=None, compare=False)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ShapeError(f"response data must be 2-D, got shape {self.data.shape}")
        if self.data.shape[0] != self.n_conditions * self.n_steps:
            raise ShapeError(
                f"{self.data.shape[0]} rows for {self.n_conditions} conditions x {self.n_steps} steps"
            )
        if not np.all(np.isfinite(self.data)):
            raise DegenerateInputError("response data contains non-finite values")

    @property
    def n_units(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    def to_array(self) -> np.ndarray:
        return self.data.reshape(self.n_conditions, self.n_steps, self.n_units)

    def with_data(self, data: np.ndarray, **changes) -> "ResponseMatrix":
        if data.shape[0] != self.data.shape[0]:
            raise ShapeError(f"{data.shape[0]} rows, expected {self.data.shape[0]}")
        labels = self.unit_labels if data.shape[1] == self.n_units else None
        return replace(self, data=data, unit_labels=labels, **changes)

    @classmethod
    def from_array(
        cls, values: Union[np.ndarray, torch.Tensor], source: str = "model"
    ) -> "ResponseMatrix":
        if isinstance(values, torch.Tensor):
            values = values.detach().cpu().numpy()
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 3:
            raise ShapeError(f"expected (conditions, steps, units), got {values.shape}")
        n_conditions, n_steps, n_units = values.shape
        return cls(values.reshape(n_conditions * n_steps, n_units), n_conditions, n_steps, source)

    def header(self) -> str:
        return (
            f"# conditions={self.n_conditions} steps={self.n_steps} "
            f"units={self.n_units} source={self.source}"
        )

    def write_csv(self, file_path: str) -> None:
        with open(file_path, "w", newline="", encoding="utf-8") as file:
            file.write(self.header() + "\n")
            writer = csv.writer(file, lineterminator="\n")
            for row in self.data:
                writer.writerow([f"{value:.17g}" for value in row])

    @classmethod
    def read_csv(cls, file_path: str) -> "ResponseMatrix":
        try:
            with open(file_path, "rb") as file:
                raw = file.read()
        except OSError as error:
            raise IngestionError(f"{file_path}: {error}")

        lines = []
        for line_number, line in enumerate(raw.splitlines(), start=1):
            try:
                lines.append(line.decode("utf-8"))
            except UnicodeDecodeError as error:
                raise IngestionError(f"{file_path}: not valid UTF-8 ({error.reason})", line=line_number)

        header = lines[0] if lines else ""
        match = HEADER.match(header)
        if match is None:
            raise IngestionError(f"malformed header {header!r}", line=1)
        n_conditions, n_steps, n_units = (int(match.group(i)) for i in range(1, 4))
        source = match.group(4)
        rows = []
        for line_number, row in enumerate(csv.reader(lines[1:]), start=2):
            if len(row) != n_units:
                raise IngestionError(f"{len(row)} values, expected {n_units}", line=line_number)
            try:
                values = [float(value) for value in row]
            except ValueError as error:
                raise IngestionError(str(error), line=line_number)
            if not np.all(np.isfinite(values)):
                raise IngestionError("non-finite value", line=line_number)
            rows.append(values)

        expected = n_conditions * n_steps
        if len(rows) != expected:
            raise IngestionError(
                f"{len(rows)} data rows, header declares {expected}", line=len(rows) + 2
            )
        data = np.asarray(rows, dtype=np.float64).reshape(expected, n_units)
        return cls(data, n_conditions, n_steps, source)
