"""Decision procedures and witnesses for convex-cyclicity.

Negative verdicts here are rigorous whenever they rest on a necessary
condition (norm, dense range, adjoint spectrum, m-isometry, a bounded
functional). Positive verdicts only restate a sufficient spectral criterion;
nothing in this module certifies density from finite data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .core import (
    Diagonal,
    LinearOperator,
    adjoint_point_spectrum,
    as_vector,
    contains_shift,
    operator_norm,
    range_density_defect,
)
from .errors import (
    DimensionMismatch,
    EmptySpectrum,
    InvalidArgument,
    NumericalOverflow,
    ZeroCoordinateAtPair,
    ZeroFunctional,
)
from .hull import OVERFLOW_LIMIT, compute_orbit

# Spectral tolerances (relative to max(1, |lambda|) where noted).
DISTINCT_RTOL = 1e-9
CONJUGATE_RTOL = 1e-9
REAL_ATOL = 1e-12
MODULUS_ATOL = 1e-12
NORM_ATOL = 1e-9

GROWTH_FACTOR = 1e6


class Trend(str, Enum):
    BOUNDED = "Bounded"
    GROWING = "Growing"
    INCONCLUSIVE = "Inconclusive"


class Verdict(str, Enum):
    CONVEX_CYCLIC = "ConvexCyclic"
    NOT_CONVEX_CYCLIC = "NotConvexCyclic"
    CRITERION_PASSES_WITH_CAVEAT = "PaperCriterionPassesWithCaveat"
    INCONCLUSIVE = "Inconclusive"


CONJUGATE_PAIR_CAVEAT = "conjugate-pair-confinement"


# ---------------------------------------------------------------------------
# Hahn-Banach probe


@dataclass
class ProbeTrace:
    values: np.ndarray
    running_max: np.ndarray
    classification: Trend

    def to_json(self) -> dict:
        return {
            "values": [float(v) for v in self.values],
            "running_max": [float(v) for v in self.running_max],
            "classification": self.classification.value,
        }


def classify_trend(values: Sequence[float]) -> Trend:
    """Heuristic reading of ``sup Re f(T^n x)`` at a finite horizon.

    Growing: the running maximum exceeds ``1e6 * max(1, |v_0|)``, or it
    exceeds that scale and at least doubled over the second half.
    Bounded: no new maximum in the second half. Otherwise Inconclusive.
    """
    values = np.asarray(values, dtype=np.float64)
    rm = np.maximum.accumulate(values)
    N = len(values) - 1
    scale = max(1.0, abs(values[0]))
    top, mid = rm[N], rm[N // 2]
    if top > GROWTH_FACTOR * scale:
        return Trend.GROWING
    if top > scale and top >= 2.0 * max(mid, 0.0):
        return Trend.GROWING
    if top == mid:
        return Trend.BOUNDED
    return Trend.INCONCLUSIVE


def functional_values(rows: np.ndarray, f: np.ndarray) -> np.ndarray:
    """``Re <v, f>`` for each row, with ``<v, f> = sum v_j conj(f_j)``."""
    return (rows @ f.conj()).real


def hahn_banach_probe(T: LinearOperator, x, f, N: int) -> ProbeTrace:
    f = as_vector(f, "functional")
    if not np.any(f):
        raise ZeroFunctional("the functional representative must be nonzero")
    if f.shape != (T.dim,):
        raise DimensionMismatch(f"operator has dim {T.dim}, functional has dim {f.size}")
    rows = compute_orbit(T, x, N).rows
    values = functional_values(rows, f)
    return ProbeTrace(values, np.maximum.accumulate(values), classify_trend(values))


# ---------------------------------------------------------------------------
# Spectral criteria


def in_set_s(lam) -> bool:
    """Membership in C minus (closed unit disk union real line)."""
    lam = complex(lam)
    return abs(lam) > 1.0 + MODULUS_ATOL and abs(lam.imag) > REAL_ATOL


set_S_membership = in_set_s


def _close(a: complex, b: complex, rtol: float) -> bool:
    return abs(a - b) <= rtol * max(1.0, abs(a))


def conjugate_pairs(eigs: Sequence[complex]) -> list[tuple[int, int]]:
    """Index pairs ``(i, j)``, ``i < j``, with ``lambda_i = conj(lambda_j)``
    for non-real ``lambda_i``."""
    eigs = [complex(e) for e in eigs]
    out = []
    for i in range(len(eigs)):
        if abs(eigs[i].imag) <= REAL_ATOL:
            continue
        for j in range(i + 1, len(eigs)):
            if _close(eigs[i], eigs[j].conjugate(), CONJUGATE_RTOL):
                out.append((i, j))
    return out


@dataclass
class Reason:
    criterion: str
    detail: str

    def to_json(self) -> dict:
        return {"criterion": self.criterion, "detail": self.detail}


@dataclass
class ClassifierReport:
    verdict: Verdict
    reasons: list[Reason] = field(default_factory=list)
    caveats: list[str] = field(default_factory=list)
    witness: Optional[np.ndarray] = None

    def to_json(self) -> dict:
        from .core import vector_to_json

        out = {
            "verdict": self.verdict.value,
            "reasons": [r.to_json() for r in self.reasons],
            "caveats": list(self.caveats),
        }
        if self.witness is not None:
            out["witness"] = vector_to_json(self.witness)
        return out


def diagonal_classifier(eigs: Sequence, field: str = "complex") -> ClassifierReport:
    """Convex-cyclicity of a diagonal normal operator from its eigenvalues.

    Complex field: distinct eigenvalues, all of modulus > 1 and non-real.
    Real field: distinct eigenvalues, all real and < -1. A complex-field
    pass with a conjugate pair is downgraded to a caveat verdict, since real
    convex weights keep the hull inside the proper real subspace
    ``{(x_i w, x_j conj(w))}``.
    """
    eigs = [complex(e) for e in eigs]
    if not eigs:
        raise EmptySpectrum("eigenvalue list is empty")
    if field not in ("complex", "real"):
        raise InvalidArgument("field must be 'complex' or 'real'")
    reasons = []
    for i in range(len(eigs)):
        for j in range(i + 1, len(eigs)):
            if _close(eigs[i], eigs[j], DISTINCT_RTOL):
                reasons.append(
                    Reason("diagonal-spectrum", f"eigenvalues {i} and {j} coincide ({eigs[i]:.12g})")
                )
    for k, lam in enumerate(eigs):
        if field == "complex":
            if abs(lam) <= 1.0 + MODULUS_ATOL:
                reasons.append(Reason("diagonal-spectrum", f"|lambda_{k}| = {abs(lam):.12g} <= 1"))
            if abs(lam.imag) <= REAL_ATOL:
                reasons.append(Reason("diagonal-spectrum", f"lambda_{k} = {lam.real:.12g} is real"))
        else:
            if abs(lam.imag) > REAL_ATOL:
                reasons.append(Reason("diagonal-spectrum", f"lambda_{k} = {lam} is not real"))
            elif not lam.real < -1.0 - MODULUS_ATOL:
                reasons.append(Reason("diagonal-spectrum", f"lambda_{k} = {lam.real:.12g} is not < -1"))

    pairs = conjugate_pairs(eigs) if field == "complex" else []
    caveats = [CONJUGATE_PAIR_CAVEAT] if pairs else []
    if reasons:
        return ClassifierReport(Verdict.NOT_CONVEX_CYCLIC, reasons, caveats)
    if pairs:
        i, j = pairs[0]
        reasons.append(
            Reason(
                "diagonal-spectrum",
                f"spectral criterion holds, but lambda_{i} = conj(lambda_{j}) confines the hull "
                "of every orbit to a proper closed real subspace",
            )
        )
        return ClassifierReport(Verdict.CRITERION_PASSES_WITH_CAVEAT, reasons, caveats)
    reasons.append(Reason("diagonal-spectrum", "eigenvalues distinct and outside the closed disk and real line"))
    return ClassifierReport(Verdict.CONVEX_CYCLIC, reasons, caveats)


@dataclass
class NecessaryConditions:
    norm_gt_one: bool
    dense_range: bool
    adjoint_spectrum_ok: bool
    details: dict

    @property
    def passed(self) -> bool:
        return self.norm_gt_one and self.dense_range and self.adjoint_spectrum_ok

    def to_json(self) -> dict:
        return {
            "norm_gt_one": self.norm_gt_one,
            "dense_range": self.dense_range,
            "adjoint_spectrum_ok": self.adjoint_spectrum_ok,
            "details": self.details,
        }


def necessary_conditions_report(T: LinearOperator) -> NecessaryConditions:
    """Norm, dense range and adjoint point spectrum gates.

    Any failed gate proves ``T`` is not convex-cyclic; passing all three
    proves nothing.
    """
    norm = operator_norm(T)
    defect = range_density_defect(T)
    spectrum = adjoint_point_spectrum(T)
    outside = [lam for lam in spectrum if not in_set_s(lam)]
    details = {
        "operator_norm": norm,
        "range_defect": defect,
        "adjoint_spectrum": [[lam.real, lam.imag] for lam in spectrum],
        "adjoint_eigenvalues_outside_S": [[lam.real, lam.imag] for lam in outside],
    }
    return NecessaryConditions(norm > 1.0 + NORM_ATOL, defect == 0, not outside, details)


# ---------------------------------------------------------------------------
# m-isometries


def _orbit_norms(T: LinearOperator, x: np.ndarray, n: int) -> list[float]:
    norms = [float(np.linalg.norm(x))]
    v = x
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            v = T.matrix @ v
            norms.append(float(np.linalg.norm(v)))
    return norms


def m_isometry_defect(T: LinearOperator, x, m: int, p_exp: float) -> float:
    """``sum_k (-1)^(m-k) C(m, k) |T^k x|^p`` for k = 0..m."""
    if m < 1 or not p_exp > 0:
        raise InvalidArgument("need m >= 1 and p > 0")
    x = as_vector(x)
    if x.shape != (T.dim,):
        raise DimensionMismatch(f"operator has dim {T.dim}, vector has dim {x.size}")
    norms = _orbit_norms(T, x, m)
    return math.fsum((-1) ** (m - k) * math.comb(m, k) * norms[k] ** p_exp for k in range(m + 1))


@dataclass
class MIsometryReport:
    m: int
    p_exponent: float
    defects: list[float]
    is_m_isometry: bool
    threshold: float
    seminorm_estimates: Optional[list[float]] = None

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "p_exponent": self.p_exponent,
            "defects": self.defects,
            "is_m_isometry": self.is_m_isometry,
            "threshold": self.threshold,
            "seminorm_estimates": self.seminorm_estimates,
        }


def is_m_isometry(
    T: LinearOperator,
    m: int,
    p_exp: float,
    samples: int = 100,
    tol: float = 1e-9,
    *,
    seed: int = 0,
    edge_guard: Optional[bool] = None,
) -> MIsometryReport:
    """Sample the (m, p) defect on random unit vectors and basis vectors.

    Finite sections of shifts break the identity at the boundary, so for
    specs containing a shift (or ``edge_guard=True``) the samples are
    supported on the first ``dim - m`` coordinates.
    """
    if samples < 1:
        raise InvalidArgument("samples must be >= 1")
    if edge_guard is None:
        edge_guard = contains_shift(T.spec)
    support = max(T.dim - m, 1) if edge_guard else T.dim
    rng = np.random.default_rng(seed)
    vecs = []
    for _ in range(samples):
        v = np.zeros(T.dim, dtype=np.complex128)
        v[:support] = rng.standard_normal(support) + 1j * rng.standard_normal(support)
        vecs.append(v / np.linalg.norm(v))
    for k in range(support):
        e = np.zeros(T.dim, dtype=np.complex128)
        e[k] = 1.0
        vecs.append(e)
    defects = [m_isometry_defect(T, v, m, p_exp) for v in vecs]
    threshold = tol * max(1.0, operator_norm(T)) ** (m * p_exp)
    return MIsometryReport(
        m, p_exp, defects, all(abs(d) <= threshold for d in defects), threshold
    )


@dataclass
class SeminormEstimate:
    estimate: float
    spread: float
    diverged: bool

    def to_json(self) -> dict:
        return {"estimate": self.estimate, "spread": self.spread, "diverged": self.diverged}


def misometry_seminorm_estimate(T: LinearOperator, x, m: int, p_exp: float, N: int) -> SeminormEstimate:
    """``|T^N x| / N^((m-1)/p)``, the finite-horizon value of the
    m-isometry seminorm, with the relative spread of the last ten terms.

    ``diverged`` flags sustained geometric growth: every ratio between
    consecutive terms over the last ten steps is at least 1.5.
    """
    if N < 10:
        raise InvalidArgument("N must be >= 10")
    if m < 1 or not p_exp > 0:
        raise InvalidArgument("need m >= 1 and p > 0")
    x = as_vector(x)
    if x.shape != (T.dim,):
        raise DimensionMismatch(f"operator has dim {T.dim}, vector has dim {x.size}")
    norms = _orbit_norms(T, x, N)
    if not all(math.isfinite(v) and v <= OVERFLOW_LIMIT for v in norms):
        bad = next(i for i, v in enumerate(norms) if not (math.isfinite(v) and v <= OVERFLOW_LIMIT))
        raise NumericalOverflow(f"orbit norm overflowed at n = {bad}", last_safe_n=bad - 1)
    expo = (m - 1) / p_exp
    seq = np.array([norms[n] / n**expo for n in range(1, N + 1)])
    tail = seq[-10:]
    spread = float((tail.max() - tail.min()) / tail.max()) if tail.max() > 0 else 0.0
    last = seq[-11:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = last[1:] / last[:-1]
    diverged = bool(np.all(ratios >= 1.5))
    return SeminormEstimate(float(seq[-1]), spread, diverged)


# ---------------------------------------------------------------------------
# Conjugate-pair witness


def conjugate_confinement_witness(eigs: Sequence, x, *, check_horizon: int = 100) -> Optional[np.ndarray]:
    """Functional representative killing ``Re`` along the orbit.

    For a diagonal operator with ``lambda_j = conj(lambda_k)`` and seed
    ``x``, ``f(v) = i (v_j / x_j + v_k / x_k)`` is purely imaginary on every
    ``T^n x``. Its representative under ``<v, f> = sum v conj(f)`` has
    entries ``-i / conj(x_j)`` and ``-i / conj(x_k)``. Returns ``None``
    when no pair exists.
    """
    eigs = [complex(e) for e in eigs]
    x = as_vector(x, "seed vector")
    if len(eigs) != x.size:
        raise DimensionMismatch("eigenvalue list and seed have different lengths")
    pairs = conjugate_pairs(eigs)
    if not pairs:
        return None
    j, k = pairs[0]
    if x[j] == 0 or x[k] == 0:
        raise ZeroCoordinateAtPair(f"seed vanishes at the conjugate pair ({j}, {k})")
    f = np.zeros(x.size, dtype=np.complex128)
    f[j] = -1j / np.conj(x[j])
    f[k] = -1j / np.conj(x[k])
    _verify_witness(np.array(eigs), x, f, check_horizon)
    return f


def _verify_witness(eigs, x, f, horizon):
    v = x.copy()
    for n in range(horizon + 1):
        value = float((v @ f.conj()).real)
        scale = float(np.abs(v).max() * np.abs(f).max())
        if abs(value) > 1e-12 * max(scale, 1.0):
            raise AssertionError(f"witness fails at n = {n}: Re <T^n x, f> = {value}")
        v = eigs * v
        if np.abs(v).max() > OVERFLOW_LIMIT:
            break


# ---------------------------------------------------------------------------
# Whole-operator classification


def classify_operator(
    T: LinearOperator,
    x=None,
    *,
    field: str = "complex",
    m_max: int = 3,
    p_exp: float = 2.0,
    samples: int = 100,
    seed: int = 0,
) -> ClassifierReport:
    """Combine every available criterion into one verdict.

    Failed necessary gates and m-isometry detection give NotConvexCyclic.
    Diagonal operators go through :func:`diagonal_classifier`. Other
    operators with distinct eigenvalues are diagonalizable, so the
    eigenvalue criterion applies to them too; anything else is Inconclusive.
    """
    reasons: list[Reason] = []
    gates = necessary_conditions_report(T)
    d = gates.details
    if not gates.norm_gt_one:
        reasons.append(Reason("norm-gate", f"|T| = {d['operator_norm']:.12g} is not > 1"))
    if not gates.dense_range:
        reasons.append(Reason("dense-range", f"range has codimension {d['range_defect']}"))
    if not gates.adjoint_spectrum_ok:
        reasons.append(
            Reason(
                "adjoint-spectrum",
                f"adjoint eigenvalues outside S: {d['adjoint_eigenvalues_outside_S']}",
            )
        )
    for m in range(1, m_max + 1):
        rep = is_m_isometry(T, m, p_exp, samples, seed=seed)
        if rep.is_m_isometry:
            reasons.append(
                Reason("m-isometry", f"({m}, {p_exp:g})-isometry: m-isometries are never convex-cyclic")
            )
            break

    spectrum_T = [lam.conjugate() for lam in adjoint_point_spectrum(T)]
    if isinstance(T.spec, Diagonal):
        diag = diagonal_classifier(T.spec.entries, field)
    else:
        diag = diagonal_classifier(spectrum_T, field) if _distinct(spectrum_T) else None

    caveats = list(diag.caveats) if diag else ([CONJUGATE_PAIR_CAVEAT] if conjugate_pairs(spectrum_T) else [])
    witness = None
    if isinstance(T.spec, Diagonal) and caveats:
        seed_vec = np.ones(T.dim) if x is None else as_vector(x)
        try:
            witness = conjugate_confinement_witness(T.spec.entries, seed_vec)
        except ZeroCoordinateAtPair:
            witness = None

    if reasons:
        if diag and diag.verdict is Verdict.NOT_CONVEX_CYCLIC:
            reasons.extend(diag.reasons)
        return ClassifierReport(Verdict.NOT_CONVEX_CYCLIC, reasons, caveats, witness)
    if diag is None:
        return ClassifierReport(
            Verdict.INCONCLUSIVE,
            [Reason("spectrum", "repeated eigenvalues: no decisive criterion for a non-diagonal operator")],
            caveats,
        )
    return ClassifierReport(diag.verdict, diag.reasons, caveats, witness)


def _distinct(eigs) -> bool:
    return all(
        not _close(eigs[i], eigs[j], DISTINCT_RTOL)
        for i in range(len(eigs))
        for j in range(i + 1, len(eigs))
    )
