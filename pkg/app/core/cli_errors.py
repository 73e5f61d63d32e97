import logging
from dataclasses import dataclass

from pydantic import ValidationError

from core.errors import (
    ApplicationError,
    ConfigurationError,
    DimensionMismatchError,
    DivergenceError,
    DomainError,
    ExperimentError,
    UnknownParameterError,
    UnsupportedParameterError,
)

logger = logging.getLogger(__name__)


@dataclass
class CliError:
    exit_code: int
    error_message: str
    error_code: str

    def render(self, exc: BaseException) -> str:
        return f"error {self.error_code}: {self.error_message} ({exc})"


class CliErrors:
    CONFIGURATION = CliError(2, "Invalid configuration", "core.0001")
    DOMAIN = CliError(3, "Argument outside the model's domain", "core.0002")
    UNSUPPORTED = CliError(3, "Unsupported parameter", "core.0003")
    DIMENSIONS = CliError(3, "Dimension mismatch", "core.0004")
    DIVERGENCE = CliError(4, "Iteration diverged", "core.0005")
    UNKNOWN_PARAMETER = CliError(2, "Unknown sweep parameter", "core.0006")
    EXPERIMENT = CliError(5, "Experiment failed", "core.0007")
    INTERNAL = CliError(1, "Internal error", "core.0008")


_handlers: list[tuple[type[BaseException], CliError]] = []


def static_exception_handler(exc: type[BaseException], cli_err: CliError) -> None:
    _handlers.append((exc, cli_err))


def resolve(exc: BaseException) -> CliError:
    # first registration wins, so specific classes go before their bases
    for exc_type, cli_err in _handlers:
        if isinstance(exc, exc_type):
            return cli_err
    return CliErrors.INTERNAL


def handle(exc: BaseException) -> int:
    cli_err = resolve(exc)
    logger.error(cli_err.render(exc))
    return cli_err.exit_code


def register_exception_handlers() -> None:
    _handlers.clear()
    static_exception_handler(ValidationError, CliErrors.CONFIGURATION)
    static_exception_handler(ConfigurationError, CliErrors.CONFIGURATION)
    static_exception_handler(UnknownParameterError, CliErrors.UNKNOWN_PARAMETER)
    static_exception_handler(UnsupportedParameterError, CliErrors.UNSUPPORTED)
    static_exception_handler(DimensionMismatchError, CliErrors.DIMENSIONS)
    static_exception_handler(DivergenceError, CliErrors.DIVERGENCE)
    static_exception_handler(DomainError, CliErrors.DOMAIN)
    static_exception_handler(ExperimentError, CliErrors.EXPERIMENT)
    static_exception_handler(ApplicationError, CliErrors.INTERNAL)
