import csv
import logging
from pathlib import Path
from typing import Sequence

from core.serializer import RowSerializer
from core.settings import Settings

logger = logging.getLogger(__name__)


def format_cell(value: object) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, bool):
        return "1" if value else "0"
    return str(value)


class TableWriter:
    """Writes dataclass records as versioned CSV tables.

    The first line is a ``# schema=v<N> table=<name>`` comment. Cells are
    formatted deterministically so identical inputs give identical bytes.
    """

    def __init__(self, settings: Settings):
        self.schema_version = settings.CSV_SCHEMA_VERSION

    def write[T](self, path: Path, table: str, rows: Sequence[T], model: type[T]) -> Path:
        serializer = RowSerializer(model)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            fh.write(f"# schema=v{self.schema_version} table={table}\n")
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(serializer.fields)
            for row in serializer.dump(rows):
                writer.writerow([format_cell(row[name]) for name in serializer.fields])
        logger.info("wrote %d rows to %s", len(rows), path)
        return path

    @staticmethod
    def read[T](path: Path, model: type[T]) -> list[T]:
        serializer = RowSerializer(model)
        with path.open(newline="") as fh:
            lines = [line for line in fh if not line.startswith("#")]
        return serializer.load(csv.DictReader(lines))
