"""
Exception hierarchy for the tangled FEM library.
"""

from typing import Any, Dict, List, Optional


class TangledFEMError(Exception):
    """Base class for all library errors."""


class ConfigError(TangledFEMError, ValueError):
    """Invalid run configuration."""


# Mesh errors

class MeshError(TangledFEMError):
    """Invalid mesh data."""


class SelfIntersecting(MeshError):
    """Element connectivity produces a bow-tie quad."""

    def __init__(self, element: int, negative_corners: int = 2):
        self.element = element
        self.negative_corners = negative_corners
        super().__init__(
            f"Element {element} is self-intersecting ({negative_corners} negative corners)"
        )


class IndexOutOfRange(MeshError):
    """Connectivity references a node that does not exist."""


class ParseError(MeshError):
    """Malformed mesh file."""

    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnknownSet(MeshError, KeyError):
    """A load case references a node set or edge set missing from the mesh."""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"Unknown set: {name}")

    def __str__(self) -> str:
        return f"Unknown set: {self.name}"


# Geometry errors

class GeometryError(TangledFEMError):
    """Isoparametric map failure."""


class NoPreimage(GeometryError):
    """Point lies outside the set covered by the element map."""


class PreimageNotFound(GeometryError):
    """No positive-Jacobian preimage exists (degenerate tangling)."""

    def __init__(self, message: str = "no positive-branch preimage", element: Optional[int] = None):
        self.element = element
        if element is not None:
            message = f"element {element}: {message}"
        super().__init__(message)


class NotConcave(GeometryError):
    """Operation requires a concave element."""


class DegenerateElement(GeometryError):
    """Element with a vanishing corner cross product."""

    def __init__(self, element: int):
        self.element = element
        super().__init__(f"Element {element} is degenerate")


# Material errors

class MaterialError(TangledFEMError):
    """Constitutive evaluation failure."""


class NonPositiveJacobianState(MaterialError):
    """det F <= 0 where the energy is undefined."""

    def __init__(self, message: str = "det F <= 0", element: Optional[int] = None):
        self.element = element
        if element is not None:
            message = f"element {element}: {message}"
        super().__init__(message)


class InadmissibleModuli(MaterialError, ValueError):
    """Elastic constants outside the admissible range."""


# Solver errors

class SolverError(TangledFEMError):
    """Linear or nonlinear solve failure."""


class SingularSystem(SolverError):
    """Zero pivot or rank-deficient saddle system."""


class TooLarge(SolverError):
    """Dense computation requested above the size cap."""


class Diverged(SolverError):
    """Newton iteration failed at a load step."""

    def __init__(self, step: int, history: List[Dict[str, Any]], partial: Any = None,
                 reason: str = "max_newton reached"):
        self.step = step
        self.history = history
        self.partial = partial
        self.reason = reason
        super().__init__(f"Diverged at load step {step}: {reason}")


# Analysis errors

class AnalysisError(TangledFEMError):
    """Post-processing failure."""


class PointNotLocated(AnalysisError):
    """Point lies outside the mesh."""

    def __init__(self, point: Any):
        self.point = tuple(float(c) for c in point)
        super().__init__(f"Point {self.point} not located in mesh")
