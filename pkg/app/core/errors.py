class ApplicationError(Exception):
    pass


class ConfigurationError(ApplicationError):
    pass


class DomainError(ApplicationError):
    pass


class UnsupportedParameterError(ApplicationError):
    def __init__(self, parameter: str, reason: str):
        super().__init__(f"Unsupported {parameter}: {reason}")
        self.parameter = parameter


class DimensionMismatchError(ApplicationError):
    pass


class DivergenceError(ApplicationError):
    def __init__(self, iteration: int):
        super().__init__(f"Iteration diverged at step {iteration}")
        self.iteration = iteration


class UnknownParameterError(ApplicationError):
    def __init__(self, name: str):
        super().__init__(f"Unknown parameter '{name}'")
        self.name = name


class ExperimentError(ApplicationError):
    def __init__(self, context: str, cause: Exception):
        super().__init__(f"{context}: {cause}")
        self.context = context
