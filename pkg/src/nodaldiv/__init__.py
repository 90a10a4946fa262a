"""Surface eigenfunctions with a prescribed dividing multicurve as nodal set.

Given a closed surface decomposed into a minus region, flat collar
cylinders around dividing circles, and a plus region, the package builds a
function u and an area form for which u is a discrete Laplace eigenfunction
at eigenvalue 1, vanishing exactly on the dividing circles with
u^2 + |du|^2 > 0, and machine-checks every claimed property.
"""

from .construct import (
    ConstructionError,
    ConstructionParams,
    ConstructionResult,
    EigenfieldBuilder,
    assemble_potential,
    compute_eigenfunction_area,
    construct,
    derive_slope,
    solve_subharmonic,
)
from .dec import (
    Cochain,
    OperatorBundle,
    assemble_pencil,
    d,
    eigen_residual,
    grad_norm_sq,
    mass_matrix,
    reference_area,
    rotate_j,
    rotate_j_dual,
    stiffness_matrix,
)
from .generate import (
    PRESET_NAMES,
    SurfaceSpec,
    build_from_spec,
    disk_mesh,
    flat_torus_mesh,
    generate_preset,
    round_sphere_mesh,
)
from .mesh import (
    COLLAR,
    MINUS,
    PLUS,
    LabeledSurfaceMesh,
    MeshError,
    TriMesh,
    swap_regions,
)
from .meshio import load_field, load_mesh, save_field, save_mesh
from .profile import ConvexProfile, ProfileError, build_profile
from .verify import (
    CheckRecord,
    VerificationReport,
    check_adaptedness_reduction,
    check_contact_condition,
    check_eigen_identity,
    check_nodal_set,
    check_positivity,
    check_potential_properties,
    convergence_sweep,
    run_all_checks,
    tolerance_schedule,
)

__version__ = "0.1.0"

__all__ = [
    "COLLAR", "MINUS", "PLUS", "PRESET_NAMES",
    "CheckRecord", "Cochain", "ConstructionError", "ConstructionParams",
    "ConstructionResult", "ConvexProfile", "EigenfieldBuilder",
    "LabeledSurfaceMesh", "MeshError", "OperatorBundle", "ProfileError",
    "SurfaceSpec", "TriMesh", "VerificationReport",
    "assemble_pencil", "assemble_potential", "build_from_spec",
    "build_profile", "check_adaptedness_reduction", "check_contact_condition",
    "check_eigen_identity", "check_nodal_set", "check_positivity",
    "check_potential_properties", "compute_eigenfunction_area", "construct",
    "convergence_sweep", "d", "derive_slope", "disk_mesh", "eigen_residual",
    "flat_torus_mesh", "generate_preset", "grad_norm_sq", "load_field",
    "load_mesh", "mass_matrix", "reference_area", "rotate_j", "rotate_j_dual",
    "round_sphere_mesh", "run_all_checks", "save_field", "save_mesh",
    "solve_subharmonic", "stiffness_matrix", "swap_regions",
    "tolerance_schedule",
]
