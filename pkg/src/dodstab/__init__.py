"""Domain-of-dependence stabilized DG for linear advection on ramp cut-cell meshes."""
from .advection import AdvectionOperator, SupportError, pos_neg_parts
from .config import ConfigError, RunConfig, load_config
from .mesh import (
    CellKind,
    CutCellMesh,
    FaceKind,
    MeshError,
    RampGeometry,
    build_mesh,
    clip_cell_to_halfplane,
    find_stabilized_cells,
)
from .quadrature import QuadRule, face_rule, gauss_legendre_1d, polygon_rule, segment_rule
from .solver import Discretization, RunResult, default_beta, run
from .space import Basis, DGFunction, MassMatrices, assemble_mass, project
from .stabilization import DoDStabilization, capacity
from .timestep import BlowUpError, Scheme, compute_dt, integrate, scheme_for_degree, step
from .verification import Bump, Constant, ConvergenceTable, ErrorNorms, RampFrame, SineWave, eoc

__all__ = [
    "AdvectionOperator", "SupportError", "pos_neg_parts",
    "ConfigError", "RunConfig", "load_config",
    "CellKind", "CutCellMesh", "FaceKind", "MeshError", "RampGeometry", "build_mesh",
    "clip_cell_to_halfplane", "find_stabilized_cells",
    "QuadRule", "face_rule", "gauss_legendre_1d", "polygon_rule", "segment_rule",
    "Discretization", "RunResult", "default_beta", "run",
    "Basis", "DGFunction", "MassMatrices", "assemble_mass", "project",
    "DoDStabilization", "capacity",
    "BlowUpError", "Scheme", "compute_dt", "integrate", "scheme_for_degree", "step",
    "Bump", "Constant", "ConvergenceTable", "ErrorNorms", "RampFrame", "SineWave", "eoc",
]
