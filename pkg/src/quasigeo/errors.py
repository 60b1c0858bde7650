"""Exception hierarchy shared across the package."""


class QuasigeoError(Exception):
    """Base class for every error raised by quasigeo."""


class MeshError(QuasigeoError):
    """The input does not describe a valid triangulated polyhedral sphere."""


class MeshFormatError(MeshError):
    pass


class TriangleInequalityViolation(MeshError):
    def __init__(self, face, lengths):
        super().__init__(f"face {face} violates the strict triangle inequality: {list(lengths)}")
        self.face = face
        self.lengths = tuple(lengths)


class GluingLengthMismatch(MeshError):
    def __init__(self, side, twin, a, b):
        super().__init__(f"glued sides {side} and {twin} have different lengths {a!r} != {b!r}")
        self.sides = (side, twin)


class GluingVertexMismatch(MeshError):
    pass


class NotASphere(MeshError):
    pass


class NonOrientable(MeshError):
    pass


class DegenerateFace(MeshError):
    def __init__(self, face):
        super().__init__(f"face {face} is degenerate (collinear corners)")
        self.face = face


class ShellingNotFound(QuasigeoError):
    pass


class NonAdjacentLetters(QuasigeoError):
    def __init__(self, position, detail=""):
        msg = f"letters at position {position} share no face"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.position = position


class NoVertexHit(QuasigeoError):
    pass


class HashMismatch(QuasigeoError):
    pass


class WordSyntaxError(QuasigeoError):
    pass
