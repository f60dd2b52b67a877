"""Exact combinatorial semistable reduction for maps of cone and polytope
complexes.

The package turns a map f : X -> B of rational conical (or lattice polytopal)
complexes into a projective alteration B' -> B together with a subdivision
X' of X x_B B' such that X' -> B' is semistable: cells map onto cells,
lattices map onto lattices, and both sides are regular.  All arithmetic is
exact (Python ints and fractions.Fraction); nothing here ever touches a
float.
"""

from .intlat import (
    hnf,
    snf,
    lattice_basis,
    lattice_index,
    quotient_group,
    saturation,
    kernel_basis,
    in_lattice,
)
from .cayley_moves import (
    triangulate_cayley,
    check_triangulation,
    stcan,
    confluence_probe,
)
from .box_reduction import (
    BoxPoint,
    FmTag,
    MinimalityViolation,
    CategoryViolation,
    IndexNotLowered,
    box_points,
    c_tuple,
    in_Fm,
    sigma_m,
)

__all__ = [
    "hnf",
    "snf",
    "lattice_basis",
    "lattice_index",
    "quotient_group",
    "saturation",
    "kernel_basis",
    "in_lattice",
    "triangulate_cayley",
    "check_triangulation",
    "stcan",
    "confluence_probe",
    "BoxPoint",
    "FmTag",
    "MinimalityViolation",
    "CategoryViolation",
    "IndexNotLowered",
    "box_points",
    "c_tuple",
    "in_Fm",
    "sigma_m",
]
