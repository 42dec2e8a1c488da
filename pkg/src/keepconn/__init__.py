"""Phase-field flows on P1 triangulations with a geodesic connectedness penalty.

The penalty keeps a band of values of the phase field connected: interface
elements are grouped into components on the dual graph of the mesh, and every
pair of components is charged with the weighted geodesic distance between them
times their masses.
"""
from .bands import BandConfig, band_profile
from .connectivity import (
    ComponentDecomposition,
    DualGraph,
    assign_edge_weights,
    build_dual_graph,
    component_distances,
    decompose_components,
    extract_interface,
    floyd_warshall_reference,
    shortest_distances,
)
from .flow import (
    CurvatureFlowModel,
    FlowConfig,
    FlowError,
    SegmentationModel,
    Trajectory,
    component_count_series,
    run_flow,
    semi_implicit_step,
)
from .functionals import (
    ModelParams,
    bending_energy,
    curvature_energy,
    curvature_residual,
    discrete_laplacian,
    double_well,
    fidelity,
    modica_mortola,
    optimal_profile,
    segmentation_energy,
    synthetic_image,
)
from .mesh import (
    DegenerateElementError,
    Mesh,
    P1Operators,
    assemble_p1,
    basis_element_integral,
    basis_element_mean,
    build_square_mesh,
    build_unit_square_mesh,
    element_average,
    element_averages,
)
from .penalty import (
    PenaltyResult,
    StaleDecompositionError,
    component_masses,
    dual_band_penalty,
    evaluate_penalty,
    penalty_energy,
    penalty_variation,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
