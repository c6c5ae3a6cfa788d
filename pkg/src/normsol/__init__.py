"""Normalized ground states of the (2,q)-Laplacian equation.

Numerical study of -Δu - Δ_q u = λu + |u|^(p-2) u on R^N under the mass
constraint ||u||_2 = c: regime classification and scaling exponents, sharp
Gagliardo-Nirenberg constants via shooting for the extremal profiles,
constrained descent for the subcritical global minimum m(c) and the
supercritical Pohozaev-manifold minimum sigma(c), critical-mass thresholds,
and dilation-based unboundedness certificates.
"""

from .exponents import (
    DependencyError,
    DerivedExponents,
    ParameterDomainError,
    ProblemParams,
    Regime,
    RegimeMismatchError,
    RegimeReport,
    classify_regime,
    critical_masses,
    derive_exponents,
    gn_constant_2,
    gn_constant_q,
    gn_q_prefactor,
)
from .radial_grid import (
    RadialField,
    RadialGrid,
    cell_inner,
    integrate,
    load_field,
    make_grid,
    norms,
    radial_derivative,
    resample_dilation,
    save_field,
)
from .energy import (
    DegenerateFiberError,
    EnergyBreakdown,
    FiberCoeffs,
    discrete_energy,
    evaluate,
    fiber_coeffs,
    fiber_h,
    fiber_hprime,
    fiber_hsecond,
    find_t0,
    gradient,
)
from .groundstate import (
    ExtremalProfile,
    NormalizationError,
    ResolutionError,
    ShootingBracketError,
    TruncationError,
    build_phi1,
    solve_wp,
    solve_wpq,
)
from .solver import (
    BlowdownReport,
    SolveConfig,
    SolveResult,
    descent_probe,
    detect_blowdown,
    minimize_global,
    minimize_pohozaev,
    pde_residual,
    project_mass,
)
from .experiments import (
    PowerLawFit,
    SweepRecord,
    cmd_critical,
    cmd_fiber,
    cmd_regime,
    cmd_solve,
    cmd_sweep,
    fit_power_law,
)

__version__ = "0.1.0"
