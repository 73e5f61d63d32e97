from typing import ClassVar, Type

from core import errors


class Model:
    InvalidError: ClassVar[Type[errors.DomainError]]

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)

        class InvalidError(errors.DomainError):
            def __init__(self, reason: str):
                super().__init__(f"Invalid {cls.__name__}: {reason}")

            __qualname__ = f"{cls.__qualname__}.InvalidError"  # Fix traceback name

        cls.InvalidError = InvalidError
