"""Latin cubes avoiding forbidden entries."""

from .cube import (
    LatinCube,
    PermutationQuadruple,
    StructuredCube,
    apply_quadruple,
    boolean_cube,
    parse_cube,
    random_quadruple,
    serialize_cube,
    validate_latin,
)
from .forbidden import ForbiddenCube, parse_forbidden, random_forbidden, serialize_forbidden, unavoidable_half

__version__ = "0.1.0"

__all__ = [
    "ForbiddenCube",
    "LatinCube",
    "PermutationQuadruple",
    "StructuredCube",
    "apply_quadruple",
    "boolean_cube",
    "parse_cube",
    "parse_forbidden",
    "random_forbidden",
    "random_quadruple",
    "serialize_cube",
    "serialize_forbidden",
    "unavoidable_half",
    "validate_latin",
]
