from typing import Any, Mapping

import numpy as np
from numpy.typing import NDArray

# CSV rows are produced from dataclasses.asdict, keys stay loosely typed
DTO = Mapping[Any, Any]

FloatArray = NDArray[np.float64]
ComplexMatrix = NDArray[np.complex128]
BoolArray = NDArray[np.bool_]


def frozen[A: np.ndarray](array: A) -> A:
    array.setflags(write=False)
    return array
