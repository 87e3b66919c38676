"""Integrable discrete nonlinear Schrodinger dynamics on metric graphs.

The lattice field lives on bonds joined at vertices (chains, stars,
trees); vertex couplings weighted by sqrt(gamma_parent/gamma_child)
make the junction reflectionless whenever the nonlinearity strengths
satisfy 1/gamma_parent = sum of 1/gamma_child.  The package builds
topologies, launches exact soliton profiles, integrates the dynamics,
audits the conserved-quantity hierarchy, and packages the standard
scattering experiments behind a CLI.
"""

from .conserved import (
    ConservedSnapshot,
    DriftReport,
    drift_audit,
    higher_constants_direct,
    higher_constants_recursive,
    norm,
    snapshot,
    universal_chain_field,
    z_quantity,
)
from .dynamics import (
    EvolveResult,
    SimConfig,
    evolve,
    local_current,
    record_trajectory,
    rhs,
    step,
)
from .errors import (
    DivergenceError,
    InconclusiveRunError,
    InvalidParameterError,
    SingularRecursionError,
    SiteRangeError,
    TopologyError,
)
from .experiments import (
    PeakSeries,
    PeakTrack,
    SweepRow,
    TransmissionReport,
    peak_tracker,
    run_bifurcation,
    run_broken_rule,
    scattering_run,
    track_broken_peaks,
    transmission_sweep,
)
from .io import (
    DEFAULT_RATIO_GRID,
    EXPERIMENTS,
    RunConfig,
    RunOutputs,
    load_config,
    parse_config,
    serialize_config,
    write_outputs,
)
from .soliton import (
    SolitonParams,
    analytic_norm,
    analytic_Z,
    derive_kinematics,
    sech,
    soliton_profile,
)
from .state import (
    FieldState,
    GhostExtendedState,
    assert_finite,
    bond_field,
    ghost_extend,
    partial_norms,
    zero_state,
)
from .topology import (
    BondSpec,
    CouplingCoefficients,
    GraphTopology,
    KIND_INCOMING,
    KIND_INTERNAL,
    KIND_LEAF,
    ROOT_LABEL,
    SUM_RULE_TOL,
    build_chain,
    build_psg,
    build_star,
    build_tree,
    check_sum_rule,
    coupling_coefficients,
    is_reflectionless,
    site_offset,
    topology_from_dict,
    topology_to_dict,
)

__version__ = "0.1.0"

__all__ = [
    "BondSpec",
    "ConservedSnapshot",
    "CouplingCoefficients",
    "DEFAULT_RATIO_GRID",
    "DivergenceError",
    "DriftReport",
    "EXPERIMENTS",
    "EvolveResult",
    "FieldState",
    "GhostExtendedState",
    "GraphTopology",
    "InconclusiveRunError",
    "InvalidParameterError",
    "KIND_INCOMING",
    "KIND_INTERNAL",
    "KIND_LEAF",
    "PeakSeries",
    "PeakTrack",
    "ROOT_LABEL",
    "RunConfig",
    "RunOutputs",
    "SUM_RULE_TOL",
    "SimConfig",
    "SingularRecursionError",
    "SiteRangeError",
    "SolitonParams",
    "SweepRow",
    "TopologyError",
    "TransmissionReport",
    "analytic_Z",
    "analytic_norm",
    "assert_finite",
    "bond_field",
    "build_chain",
    "build_psg",
    "build_star",
    "build_tree",
    "check_sum_rule",
    "coupling_coefficients",
    "derive_kinematics",
    "drift_audit",
    "evolve",
    "ghost_extend",
    "higher_constants_direct",
    "higher_constants_recursive",
    "is_reflectionless",
    "load_config",
    "local_current",
    "norm",
    "parse_config",
    "partial_norms",
    "peak_tracker",
    "record_trajectory",
    "rhs",
    "run_bifurcation",
    "run_broken_rule",
    "scattering_run",
    "sech",
    "serialize_config",
    "site_offset",
    "snapshot",
    "soliton_profile",
    "step",
    "topology_from_dict",
    "topology_to_dict",
    "track_broken_peaks",
    "transmission_sweep",
    "universal_chain_field",
    "write_outputs",
    "z_quantity",
    "zero_state",
]
