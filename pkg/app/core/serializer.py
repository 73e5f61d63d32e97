import dataclasses
from typing import Any, Iterable, get_type_hints

import numpy as np

from core.types import DTO


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    return value


class RowSerializer[Row]:
    """Flat dataclass records <-> CSV rows.

    Reading coerces string cells back to the annotated field types, so rows
    read with ``csv.DictReader`` come back as the records that were written.
    """

    def __init__(self, model: type[Row]):
        if not isinstance(model, type) or not dataclasses.is_dataclass(model):
            raise TypeError(f"Argument 'model' must be a dataclass class. Got '{model}'.")
        self.model = model
        self.fields = [f.name for f in dataclasses.fields(model)]
        self._types = get_type_hints(model)

    def to_row(self, record: Row) -> DTO:
        return {name: _plain(getattr(record, name)) for name in self.fields}

    def from_row(self, row: DTO) -> Row:
        values = {}
        for name in self.fields:
            value = row[name]
            kind = self._types.get(name)
            if isinstance(value, str) and kind in (int, float):
                value = kind(value)
            elif isinstance(value, str) and kind is bool:
                value = value.strip().lower() in ("1", "true")
            values[name] = value
        return self.model(**values)

    def dump(self, records: Iterable[Row]) -> list[DTO]:
        return [self.to_row(record) for record in records]

    def load(self, rows: Iterable[DTO]) -> list[Row]:
        return [self.from_row(row) for row in rows]
