import csv
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import pandas as pd

from wikipaths.core.exceptions import DatasetFileMissingError, DatasetFormatError


def read_tsv(path: Path, columns: int) -> List[Tuple[int, List[str]]]:
    """Read a headerless TSV into ``(line_number, fields)`` rows, every field as text."""
    path = Path(path)
    if not path.is_file():
        raise DatasetFileMissingError(str(path))
    try:
        frame = pd.read_csv(
            path,
            sep="\t",
            header=None,
            names=list(range(columns)),
            dtype=str,
            na_filter=False,
            quoting=csv.QUOTE_NONE,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        return []
    except pd.errors.ParserError as e:
        raise DatasetFormatError(path.name, 0, f"malformed TSV: {e}") from e

    rows = []
    for lineno, record in enumerate(frame.itertuples(index=False, name=None), start=1):
        fields = list(record)
        if any(not isinstance(value, str) for value in fields):
            raise DatasetFormatError(path.name, lineno, f"expected {columns} tab-separated fields")
        rows.append((lineno, fields))
    return rows


def write_tsv(path: Path, rows: Iterable[Sequence[object]]) -> None:
    """Write rows as UTF-8, LF-terminated, tab-separated text with no header."""
    lines = ["\t".join(str(value) for value in row) + "\n" for row in rows]
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.writelines(lines)


def parse_int(value: str, file: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise DatasetFormatError(file, lineno, f"expected an integer, got {value!r}") from None


def parse_int_list(value: str, file: str, lineno: int) -> List[int]:
    if value == "":
        return []
    return [parse_int(part, file, lineno) for part in value.split(",")]
