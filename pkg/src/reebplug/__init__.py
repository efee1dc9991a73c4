"""Tools for building and checking the ingredients of small-volume Reeb flows:

- C1 radial Hermite functions and deterministic quadrature/ODE kernels,
- area-preserving disk maps with their action and Calabi calculus,
- rotationally symmetric contact forms on solid tori (return systems,
  orbit enumeration, volume),
- boundary-model radial profiles with the pointwise B-condition verifier,
- plug construction, axiom verifiers, and the rotational realization,
- exact-arithmetic certificates for the systolic-ratio lower bound.
"""

from .certify import (
    AssemblyInput,
    Certificate,
    CertificationError,
    LedgerEntry,
    TminLedger,
    TraceStep,
    VolumeBudget,
    assemble,
    bound_formula,
    plan_radii,
    systolic_bound,
    tmin_ledger,
    volume_budget,
)
from .diskmap import (
    LAM0,
    ActionField,
    BumpHarmonic,
    DiskMap,
    HamiltonianStep,
    PeriodicOrbit,
    PrimitiveOneForm,
    RadialTwist,
    action,
    calabi,
    compose,
    compose_action,
    periodic_points,
    rescale,
)
from .numerics import (
    NonConvergenceError,
    OdeSpec,
    QuadratureSpec,
    RadialFunction,
    find_fixed_point_2d,
    find_root_1d,
    integrate_1d,
    integrate_disk,
    ode_flow,
)
from .plug import (
    AxiomCheck,
    PlugError,
    PlugReport,
    PlugSystem,
    make_plug,
    orbit_periods,
    realize_rotational,
    rescale_plug,
    verify_a,
    verify_b,
)
from .profile import (
    ConditionReport,
    ProfileCurve,
    ProfileError,
    ProfileParams,
    ProfileReport,
    TauProfile,
    TauReport,
    design_profile,
    tau_profile,
    to_rotform,
    verify_profile,
)
from .rotorus import (
    DISK_PERIOD,
    ContactError,
    OrbitRecord,
    ReturnSystem,
    RotForm,
    SectionError,
    TminEstimate,
    VolumeTriple,
    alpha_pairing,
    angular_rates,
    contact_check,
    dalpha_contraction,
    exact_flow,
    ode_check,
    orbit_enumerate,
    reeb_field,
    return_system,
    tmin,
    volume,
)

__version__ = "0.1.0"

__all__ = [
    "ActionField",
    "AssemblyInput",
    "AxiomCheck",
    "BumpHarmonic",
    "Certificate",
    "CertificationError",
    "ConditionReport",
    "ContactError",
    "DISK_PERIOD",
    "DiskMap",
    "HamiltonianStep",
    "LAM0",
    "LedgerEntry",
    "NonConvergenceError",
    "OdeSpec",
    "OrbitRecord",
    "PeriodicOrbit",
    "PlugError",
    "PlugReport",
    "PlugSystem",
    "PrimitiveOneForm",
    "ProfileCurve",
    "ProfileError",
    "ProfileParams",
    "ProfileReport",
    "QuadratureSpec",
    "RadialFunction",
    "RadialTwist",
    "ReturnSystem",
    "RotForm",
    "SectionError",
    "TauProfile",
    "TauReport",
    "TminEstimate",
    "TminLedger",
    "TraceStep",
    "VolumeBudget",
    "VolumeTriple",
    "action",
    "alpha_pairing",
    "angular_rates",
    "assemble",
    "bound_formula",
    "calabi",
    "compose",
    "compose_action",
    "contact_check",
    "dalpha_contraction",
    "design_profile",
    "exact_flow",
    "find_fixed_point_2d",
    "find_root_1d",
    "integrate_1d",
    "integrate_disk",
    "make_plug",
    "ode_check",
    "ode_flow",
    "orbit_enumerate",
    "orbit_periods",
    "periodic_points",
    "plan_radii",
    "realize_rotational",
    "reeb_field",
    "rescale",
    "rescale_plug",
    "return_system",
    "systolic_bound",
    "tau_profile",
    "tmin",
    "tmin_ledger",
    "to_rotform",
    "verify_a",
    "verify_b",
    "verify_profile",
    "volume",
    "volume_budget",
    "__version__",
]
