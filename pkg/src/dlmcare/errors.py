"""Exception hierarchy.

Engine errors carry a stable ``code`` (the class name) which the scenario
language uses in ``EXPECT-ERROR`` lines and the reference model reproduces.
"""


class DlmError(Exception):
    """Base class for every error raised by the engine or the harness."""

    @property
    def code(self) -> str:
        return type(self).__name__


# registration / authentication
class DuplicateRegistration(DlmError):
    pass


class UnknownDevice(DlmError):
    pass


class AuthMismatch(DlmError):
    pass


# operation preconditions
class NotAPatient(DlmError):
    pass


class UnregisteredReader(DlmError):
    pass


class WrongDeviceKind(DlmError):
    pass


class NotFound(DlmError):
    pass


class StrictPreconditionFailed(DlmError):
    pass


class UnknownHospital(DlmError):
    pass


class NotStaff(DlmError):
    pass


class HospitalNotRegistered(DlmError):
    pass


class NoAccessibleData(DlmError):
    pass


# audit log
class SequenceGap(DlmError):
    pass


# harness
class ParseError(DlmError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class AssertionFailure(DlmError):
    def __init__(self, message: str, invariant: str | None = None, witness=None) -> None:
        self.invariant = invariant
        self.witness = witness
        super().__init__(message)


class DivergenceError(DlmError):
    def __init__(self, message: str, step: int | None = None) -> None:
        self.step = step
        super().__init__(message)


class FormatVersionMismatch(DlmError):
    pass


class CorruptSnapshot(DlmError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


ENGINE_ERROR_CODES = frozenset(
    cls.__name__
    for cls in (
        DuplicateRegistration,
        UnknownDevice,
        AuthMismatch,
        NotAPatient,
        UnregisteredReader,
        WrongDeviceKind,
        NotFound,
        StrictPreconditionFailed,
        UnknownHospital,
        NotStaff,
        HospitalNotRegistered,
        NoAccessibleData,
    )
)
