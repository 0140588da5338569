"""Exception hierarchy shared by every module."""


class AtplError(Exception):
    """Base class; the CLI maps these to exit code 1."""


class DimensionError(AtplError, ValueError):
    """A primitive or block received inputs of non-conforming shape."""


class ContractError(AtplError, ValueError):
    """A documented precondition was violated."""


class TrainingError(AtplError, RuntimeError):
    pass


class GenerationLengthError(AtplError, RuntimeError):
    pass


class IngestionError(AtplError, ValueError):
    """Malformed or out-of-vocabulary input data."""


class ParseError(AtplError, ValueError):
    """Malformed bracketed tree. ``column`` is 1-based."""

    def __init__(self, message: str, column: int):
        super().__init__(f"{message} (column {column})")
        self.column = column


class StructuralError(AtplError, ValueError):
    pass


class ReconstructionError(AtplError, ValueError):
    """Layer encodings cannot be assembled into a tree."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (position {position})")
        self.position = position


class GrammarError(AtplError, RuntimeError):
    pass


class ConstructionError(AtplError, ValueError):
    pass
