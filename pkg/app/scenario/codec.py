"""Binary container for scenario fixtures.

Layout: magic ``SADSCN01``, uint32 array count, then per array a uint16 name
length, the UTF-8 name, a one-byte kind (``f`` real, ``c`` complex, ``b``
boolean, ``s`` scalar), uint32 ndim, uint64 dims and the payload as
little-endian doubles (complex values interleaved re/im). All integers are
little-endian.
"""

import struct
from pathlib import Path

import numpy as np

from core.errors import DomainError
from core.types import frozen
from scenario.models import ScenarioInstance

MAGIC = b"SADSCN01"

_ARRAYS = ("activities", "large_scale", "signatures", "channels", "noise", "received")


def _encode(name: str, value: np.ndarray) -> bytes:
    if np.iscomplexobj(value):
        kind, payload = b"c", np.ascontiguousarray(value).view(np.float64)
    elif value.dtype == bool:
        kind, payload = b"b", value.astype(np.float64)
    else:
        kind, payload = b"f", value.astype(np.float64)
    encoded = name.encode()
    header = struct.pack("<H", len(encoded)) + encoded + kind + struct.pack("<I", value.ndim)
    header += struct.pack(f"<{value.ndim}Q", *value.shape)
    return header + payload.astype("<f8").tobytes()


def dumps(instance: ScenarioInstance) -> bytes:
    arrays = {name: np.asarray(getattr(instance, name)) for name in _ARRAYS}
    arrays["noise_variance"] = np.array(instance.noise_variance)
    arrays["receivers"] = np.array(instance.receivers, dtype=np.float64)
    chunks = [MAGIC, struct.pack("<I", len(arrays))]
    chunks += [_encode(name, value) for name, value in arrays.items()]
    return b"".join(chunks)


def loads(blob: bytes) -> ScenarioInstance:
    if blob[:8] != MAGIC:
        raise DomainError("not a scenario container")
    offset = 8
    (count,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    arrays: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        name = blob[offset : offset + name_len].decode()
        offset += name_len
        kind = blob[offset : offset + 1]
        (ndim,) = struct.unpack_from("<I", blob, offset + 1)
        offset += 5
        shape = struct.unpack_from(f"<{ndim}Q", blob, offset)
        offset += 8 * ndim
        size = int(np.prod(shape)) * (2 if kind == b"c" else 1)
        data = np.frombuffer(blob, dtype="<f8", count=size, offset=offset).astype(np.float64)
        offset += 8 * size
        if kind == b"c":
            value = data.view(np.complex128).reshape(shape)
        elif kind == b"b":
            value = data.reshape(shape) != 0
        else:
            value = data.reshape(shape)
        arrays[name] = value
    return ScenarioInstance(
        **{name: frozen(arrays[name]) for name in _ARRAYS},
        noise_variance=float(arrays["noise_variance"]),
        receivers=tuple(int(r) for r in arrays["receivers"]),
    )


def dump_scenario(instance: ScenarioInstance, path: Path) -> None:
    path.write_bytes(dumps(instance))


def load_scenario(path: Path) -> ScenarioInstance:
    return loads(path.read_bytes())
