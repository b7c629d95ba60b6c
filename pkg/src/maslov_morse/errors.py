"""Exception hierarchy shared by every module of the package."""


class MaslovError(Exception):
    """Base class for all errors raised by maslov_morse."""

    code = "error"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


# linear algebra
class NotSymmetric(MaslovError):
    code = "NotSymmetric"


class NoConvergence(MaslovError):
    code = "NoConvergence"


class NotOrthonormal(MaslovError):
    code = "NotOrthonormal"


class Singular(MaslovError):
    code = "Singular"


class NotPositiveDefinite(MaslovError):
    code = "NotPositiveDefinite"


# boundary conditions
class RankDeficient(MaslovError):
    code = "RankDeficient"


class NotSelfAdjoint(MaslovError):
    code = "NotSelfAdjoint"

    def __init__(self, message: str, defect: float):
        super().__init__(message)
        self.defect = defect

    def to_dict(self) -> dict:
        return {**super().to_dict(), "defect": self.defect}


class DecompositionInconsistent(MaslovError):
    code = "DecompositionInconsistent"


# shooting
class StepTooCoarse(MaslovError):
    code = "StepTooCoarse"


class GridTooCoarse(MaslovError):
    code = "GridTooCoarse"


# spectral flow
class NotUnitary(MaslovError):
    code = "NotUnitary"


class DegenerateFrame(MaslovError):
    code = "DegenerateFrame"


class RefinementExhausted(MaslovError):
    code = "RefinementExhausted"


class HomotopyCheckFailed(MaslovError):
    code = "HomotopyCheckFailed"


# morse assembly
class EigenvalueOnPath(MaslovError):
    code = "EigenvalueOnPath"


class EmptyBottomShelf(MaslovError):
    code = "EmptyBottomShelf"


# oracle
class MeshSensitivity(MaslovError):
    code = "MeshSensitivity"


# configuration / expressions
class ExpressionSyntaxError(MaslovError):
    """Parse failure with the byte offset of the first bad token."""

    code = "SyntaxError"

    def __init__(self, message: str, source: str, offset: int, expected: frozenset[str]):
        self.source = source
        self.offset = offset
        self.expected = frozenset(expected)
        want = ", ".join(sorted(self.expected)) or "nothing"
        super().__init__(f"{message} at offset {offset} in {source!r} (expected one of: {want})")

    def to_dict(self) -> dict:
        return {**super().to_dict(), "offset": self.offset, "expected": sorted(self.expected)}


class ValidationError(MaslovError):
    """A configuration value broke a named invariant."""

    code = "ValidationError"

    def __init__(self, invariant: str, message: str):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")

    def to_dict(self) -> dict:
        return {**super().to_dict(), "invariant": self.invariant}
