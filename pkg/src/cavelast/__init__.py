"""Cavitation in planar nonlinear elasticity on triangle meshes.

Deformations live on conforming triangle meshes of a punctured reference
domain. The package measures stored elastic energy plus an anisotropic
perimeter of the cavity surfaces, certifies discrete minimizers through
first-variation batteries and an invertibility check, inverts deformations
numerically, and carries an independent radially symmetric solver used as
a cross-check on symmetric scenarios.
"""

from .exceptions import (CavelastError, ConfigurationError, DomainError,
                         GeometryError, InfeasibleEnergyError,
                         SolverStallError)
from .material import BulkDensity, SurfaceDensity
from .geometry import (BoundaryData, DeformationField, Mesh, TriangleLocator,
                       build_annulus_mesh, build_disk_mesh, build_square_mesh,
                       element_gradient, load_mesh, min_det, mollify,
                       trace_on_circle)
from .degree import (CavityRecord, DegreeRaster, InvReport, check_inv,
                     load_pgm, marching_squares, topological_image,
                     topological_image_point, winding_number)
from .energy import (EnergyBreakdown, SeparableTestField,
                     anisotropic_perimeter, bulk_term, detect_cavities,
                     rho_extrapolate, surface_functional_S_sum,
                     surface_functional_S_testfield, total_energy,
                     triangle_quadrature)
from .inverse import (InverseField, JumpContour, area_formula_check,
                      build_inverse_field, default_marker, extract_jump_set,
                      inverse_gradient, invert_point, jump_set_to_csv)
from .variation import (BumpField, DilationField, HatField, IterationLog,
                        VariationReport, anisotropic_tangential_divergence,
                        battery_residual, certification_battery,
                        elastic_first_variation, field_vanishes_on,
                        first_variation_residual, gamma_images, minimize,
                        outer_compose, surface_first_variation)
from .radial import (BvpReport, RadialProfile, anisotropic_circle_perimeter,
                     bvp_boundary_check, radial_energy,
                     radial_energy_breakdown, radial_lift, solve_radial,
                     sweep_lambda, sweep_to_csv)
from .cli import ScenarioConfig, compare_runs, run_scenario

__version__ = "0.1.0"

__all__ = [
    "CavelastError", "ConfigurationError", "DomainError", "GeometryError",
    "InfeasibleEnergyError", "SolverStallError",
    "BulkDensity", "SurfaceDensity",
    "BoundaryData", "DeformationField", "Mesh", "TriangleLocator",
    "build_annulus_mesh", "build_disk_mesh", "build_square_mesh",
    "element_gradient", "load_mesh", "min_det", "mollify",
    "trace_on_circle",
    "CavityRecord", "DegreeRaster", "InvReport", "check_inv", "load_pgm",
    "marching_squares", "topological_image", "topological_image_point",
    "winding_number",
    "EnergyBreakdown", "SeparableTestField", "anisotropic_perimeter",
    "bulk_term", "detect_cavities", "rho_extrapolate",
    "surface_functional_S_sum", "surface_functional_S_testfield",
    "total_energy", "triangle_quadrature",
    "InverseField", "JumpContour", "area_formula_check",
    "build_inverse_field", "default_marker", "extract_jump_set",
    "inverse_gradient", "invert_point", "jump_set_to_csv",
    "BumpField", "DilationField", "HatField", "IterationLog",
    "VariationReport", "anisotropic_tangential_divergence",
    "battery_residual", "certification_battery", "elastic_first_variation",
    "field_vanishes_on", "first_variation_residual", "gamma_images",
    "minimize", "outer_compose", "surface_first_variation",
    "BvpReport", "RadialProfile", "anisotropic_circle_perimeter",
    "bvp_boundary_check", "radial_energy", "radial_energy_breakdown",
    "radial_lift", "solve_radial", "sweep_lambda", "sweep_to_csv",
    "ScenarioConfig", "compare_runs", "run_scenario",
    "__version__",
]
