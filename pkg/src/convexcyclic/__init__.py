"""Numerical toolkit for convex-cyclic operators on finite-dimensional spaces."""

from .core import (
    LinearOperator,
    adjoint_point_spectrum,
    apply,
    build_operator,
    operator_norm,
    range_density_defect,
    spec_from_json,
    spec_to_json,
)
from .convex_poly import (
    ConvexPolynomial,
    apply_poly,
    cesaro_mean,
    eval_scalar,
    make_convex,
    pkc,
    pkc_identity_residual,
    poly_power,
    substitute_monomial,
)
from .hull import (
    HullApproximation,
    OrbitTable,
    best_convex_approximation,
    brute_force_simplex_oracle,
    compute_orbit,
    density_probe,
    family_probe,
)
from .criteria import (
    ClassifierReport,
    ProbeTrace,
    Trend,
    Verdict,
    classify_operator,
    conjugate_confinement_witness,
    diagonal_classifier,
    hahn_banach_probe,
    in_set_s,
    is_m_isometry,
    m_isometry_defect,
    misometry_seminorm_estimate,
    necessary_conditions_report,
)
from .constructions import (
    MockEpsilonOracle,
    direct_sum_pm,
    disk_touching_polynomial,
    epsilon_greedy_approximation,
    scale_operator,
)
