"""Exception types shared across the package."""


class KripkeCellsError(Exception):
    """Base class for all errors raised by kripkecells."""


class FormulaError(KripkeCellsError, ValueError):
    """A formula is malformed or refers to symbols outside the workspace.

    ``position`` is the character offset in the source text when the error
    comes from the parser, else ``None``.
    """

    def __init__(self, message, position=None):
        super().__init__(message if position is None else f"{message} (at {position})")
        self.message = message
        self.position = position


class CapExceeded(KripkeCellsError):
    """A level cap or enumeration budget would be exceeded."""


class PreconditionError(KripkeCellsError, ValueError):
    """An operation was called outside its documented domain."""


class ConstructionError(KripkeCellsError):
    """A builder produced an object that fails its own invariants.

    ``certificate`` holds whatever data pins down the failure.
    """

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate
