"""Monotone polytope-volume discretization of the 3D Monge-Ampere operator.

Submodules: ``lattice`` (Voronoi vectors, stencils), ``polytope`` (volume and
facet areas of symmetric halfspace intersections), ``grid`` (discretization),
``operators`` (D_V, FD and WS schemes, Jacobians), ``newton`` (damped Newton)
and ``bench`` (test cases, sphere maps, convergence tables).
"""
from .bench import (
    RunRecord,
    TestCase,
    consistency_sphere_map,
    convergence_table,
    linf_error,
    make_test_case,
)
from .grid import Domain, Grid, ball, build_grid, second_difference, second_differences, sup_step, unit_cube
from .lattice import (
    OrthogonalTripletSet,
    Stencil,
    is_consistent,
    kappa_of,
    make_kappa_stencil,
    make_table1_stencil,
    make_ws_triplets,
    strict_voronoi_vectors,
)
from .newton import NewtonConfig, SolveReport, SolverError, linear_solve, sanity_bounds, solve
from .operators import (
    DomainError,
    FiniteDifference,
    Proposed,
    SparseSystem,
    WideStencil,
    apply_DV,
    apply_DV_asymmetric,
    apply_FD,
    apply_WS,
    assemble_system,
    make_scheme,
)
from .polytope import PolytopeMeasure, measure_D_of_matrix, measure_polytope, monte_carlo_volume

__version__ = "0.1.0"
