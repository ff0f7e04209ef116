"""Typed B-Rep solids with exact analytic evaluation."""
from .geometry import (
    DegenerateGeometryError,
    GeometryError,
    Placement,
    PrimitiveType,
    SurfaceGeom,
    classify,
)
from .solid import (
    BRepSolid,
    Face,
    Loop,
    NoShellError,
    TopoEdge,
    UnresolvedGeometryError,
    build_brep,
    eval_edge,
    eval_surface,
    invert_point,
)

__all__ = [
    "BRepSolid",
    "DegenerateGeometryError",
    "Face",
    "GeometryError",
    "Loop",
    "NoShellError",
    "Placement",
    "PrimitiveType",
    "SurfaceGeom",
    "TopoEdge",
    "UnresolvedGeometryError",
    "build_brep",
    "classify",
    "eval_edge",
    "eval_surface",
    "invert_point",
]
