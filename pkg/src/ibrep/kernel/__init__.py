"""B-rep reconstruction from indexed boundary representations."""
from .curves import CollinearArc, CurveGeom, build_curve, build_curves, vertex_positions
from .faces import DegenerateDomain, TriangulatedFace, build_face
from .solid import FaceResult, SolidModel, ValidityReport, reconstruct, sew, validate
from .surfaces import (CONE, CYLINDER, PLANE, SPHERE, SURFACE_KINDS, TORUS, Cone, Cylinder, Plane, Sphere,
                       SurfaceGeom, Torus, UnclassifiableFace, UVMap, infer_surface)
from .triangulate import TriangulationFailure, signed_area, triangulate
from .wires import INNER, OUTER, NestedAmbiguity, OpenWire, Wire, WireError, assemble_wires, extract_cycles

__all__ = [
    "CollinearArc", "CurveGeom", "build_curve", "build_curves", "vertex_positions",
    "DegenerateDomain", "TriangulatedFace", "build_face",
    "FaceResult", "SolidModel", "ValidityReport", "reconstruct", "sew", "validate",
    "CONE", "CYLINDER", "PLANE", "SPHERE", "SURFACE_KINDS", "TORUS",
    "Cone", "Cylinder", "Plane", "Sphere", "SurfaceGeom", "Torus", "UnclassifiableFace", "UVMap", "infer_surface",
    "TriangulationFailure", "signed_area", "triangulate",
    "INNER", "OUTER", "NestedAmbiguity", "OpenWire", "Wire", "WireError", "assemble_wires", "extract_cycles",
]
