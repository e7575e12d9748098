class KakeyaException(Exception):
    pass

class GeometryException(KakeyaException):
    pass

class ScaleMismatchException(GeometryException):
    def __init__(self, first, second):
        super().__init__(f"scale mismatch: {first} != {second}")
        self.scales = (first, second)

class ContainmentException(GeometryException):
    """Raised when solids are not inside a reference witness. The offending
    solids are kept in `offenders` (index, solid) pairs."""

    def __init__(self, offenders):
        indices = ", ".join(str(i) for i, _ in offenders)
        super().__init__(f"solids not contained in reference: [{indices}]")
        self.offenders = offenders

class VoxelException(KakeyaException):
    pass

class ShadingException(KakeyaException):
    pass

class AxiomException(KakeyaException):
    pass

class EssentialDistinctnessException(AxiomException):
    def __init__(self, pair):
        super().__init__(f"tubes {pair[0]} and {pair[1]} are not essentially distinct")
        self.pair = pair

class AssouadException(KakeyaException):
    pass

class AmplificationException(AssouadException):
    pass

class PrismLabException(KakeyaException):
    pass

class DichotomyInconclusive(PrismLabException):
    """Neither branch of the coarsening step could be certified. `trace` holds
    every measurement taken on the way."""

    def __init__(self, trace):
        super().__init__("dichotomy inconclusive")
        self.trace = trace

class ProjectionException(KakeyaException):
    pass

class GeneratorException(KakeyaException):
    pass

class LabException(KakeyaException):
    pass
