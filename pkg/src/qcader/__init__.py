"""Quasi-conservative ADER-DG in primitive variables with a-posteriori subcell limiting."""
from .cases import CASE_NAMES, CaseSpec, case, exact_riemann_1d, radial_reference
from .mesh import Mesh, SubcellGrid, build_subcells, generate_rect_mesh, read_mesh, write_mesh
from .solver import RunAborted, Solver
from .system import EosClosure

__version__ = "0.1.0"

__all__ = ["CASE_NAMES", "CaseSpec", "case", "exact_riemann_1d", "radial_reference", "Mesh", "SubcellGrid",
           "build_subcells", "generate_rect_mesh", "read_mesh", "write_mesh", "Solver", "RunAborted",
           "EosClosure"]
