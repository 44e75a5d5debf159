"""Constructive procedures: operator combinators, the epsilon-greedy convex
combination and the disk-touching convex polynomial."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np

from .convex_poly import ConvexPolynomial, from_exponents, make_convex, substitute_monomial
from .core import DirectSum, LinearOperator, Negate, Scale, as_vector, build_operator
from .errors import (
    DimensionMismatch,
    InvalidArgument,
    InvalidScale,
    NoExponentFound,
    NotOutsideDisk,
    OracleMiss,
)
from .hull import OVERFLOW_LIMIT, compute_orbit, nearest_orbit_index

ZERO_RESIDUAL_RTOL = 1e-12


def direct_sum_pm(T: LinearOperator, sign: str = "-") -> LinearOperator:
    """``T (+) T`` or ``T (+) -T``."""
    if sign not in ("+", "-"):
        raise InvalidArgument("sign must be '+' or '-'")
    second = T.spec if sign == "+" else Negate(T.spec)
    return build_operator(DirectSum((T.spec, second)))


def scale_operator(T: LinearOperator, c: float) -> LinearOperator:
    """``cT`` for real ``c > 1``."""
    if isinstance(c, complex) or not float(c) > 1 or not math.isfinite(float(c)):
        raise InvalidScale(f"scale factor must be a finite real number > 1, got {c!r}")
    return build_operator(Scale(complex(float(c)), T.spec))


# ---------------------------------------------------------------------------
# epsilon-greedy construction


class EpsilonOracle(Protocol):
    def __call__(self, target: np.ndarray, step: int) -> tuple[int, np.ndarray]:
        """Return an exponent and the orbit point ``T^n x`` offered for ``target``."""


class OrbitOracle:
    """Exhaustive search of ``x, Tx, ..., T^horizon x`` for the nearest point."""

    def __init__(self, T: LinearOperator, x, horizon: int):
        self.rows = compute_orbit(T, x, horizon).rows

    def __call__(self, target, step):
        n, _ = nearest_orbit_index(self.rows, target)
        return n, self.rows[n]


class MockEpsilonOracle:
    """Test seam: returns a point within ``rho * eps * |target|`` of the
    target, ``rho`` uniform in ``[rho_min, 0.999)``, so the epsilon contract
    holds by construction. Steps listed in ``exact_at`` return the target
    itself. Exponents are synthetic (the step number).

    The default keeps every step near the worst allowed contraction. A
    small ``rho_min`` lets long runs shrink the residual below the
    zero-residual threshold by chance."""

    def __init__(self, eps: float, seed: int = 0, exact_at=(), rho_min: float = 0.9):
        if not 0 <= rho_min < 0.999:
            raise InvalidArgument("rho_min must lie in [0, 0.999)")
        self.eps = eps
        self.rho_min = rho_min
        self.rng = np.random.default_rng(seed)
        self.exact_at = set(exact_at)

    def __call__(self, target, step):
        target = np.asarray(target, dtype=np.complex128)
        if step in self.exact_at:
            return step, target.copy()
        u = self.rng.standard_normal(target.size) + 1j * self.rng.standard_normal(target.size)
        u /= np.linalg.norm(u)
        rho = self.rng.uniform(self.rho_min, 0.999)
        return step, target + rho * self.eps * np.linalg.norm(target) * u


@dataclass
class EpsilonGreedyResult:
    exponents: list[int]
    polynomial: ConvexPolynomial
    achieved_error: float
    bound: float
    steps: list[float]
    n_terms: int
    zero_branch_step: Optional[int] = None
    vectors: np.ndarray = field(default=None, repr=False)

    @property
    def guaranteed_error(self) -> float:
        """``eps^N |y|``, doubled when the zero-residual branch was taken."""
        return 2 * self.bound if self.zero_branch_step is not None else self.bound

    def to_json(self) -> dict:
        return {
            "exponents": self.exponents,
            "polynomial": self.polynomial.to_json(),
            "achieved_error": self.achieved_error,
            "bound": self.bound,
            "guaranteed_error": self.guaranteed_error,
            "steps": self.steps,
            "n_terms": self.n_terms,
            "zero_branch_step": self.zero_branch_step,
        }


def terms_needed(eps: float, y_norm: float, delta: float) -> int:
    """Smallest ``N >= 1`` with ``2 eps^N |y| < delta``."""
    n = max(1, math.floor(math.log(delta / (2 * y_norm)) / math.log(eps)))
    while n > 1 and 2 * eps ** (n - 1) * y_norm < delta:
        n -= 1
    while not 2 * eps**n * y_norm < delta:
        n += 1
    return n


def epsilon_greedy_approximation(
    T: Optional[LinearOperator],
    x,
    y,
    eps: float,
    horizon: int,
    delta: float,
    *,
    oracle: Optional[Callable] = None,
) -> EpsilonGreedyResult:
    """Approximate ``y`` by an average of ``N`` orbit points.

    With ``r_1 = N y``, each step asks the oracle for ``T^k x`` within
    ``eps |r_j|`` of ``r_j`` and sets ``r_{j+1} = r_j - T^k x``, so
    ``|r_{N+1}| <= eps^N N |y|`` and the average is within ``eps^N |y|`` of
    ``y``. If a residual vanishes early at step ``j``, the remaining ``N - j``
    terms all use one point approximating ``N/(N-j) eps^N y``, which keeps
    the error below ``2 eps^N |y|``.

    ``oracle(target, step) -> (exponent, vector)`` defaults to exhaustive
    search of the orbit up to ``horizon``. Raises :class:`OracleMiss` when the
    offered point violates the epsilon bound.
    """
    if not 0 < eps < 1:
        raise InvalidArgument("eps must lie in (0, 1)")
    if not delta > 0:
        raise InvalidArgument("delta must be positive")
    y = as_vector(y, "target")
    y_norm = float(np.linalg.norm(y))
    if y_norm == 0:
        raise InvalidArgument("target must be nonzero")
    if oracle is None:
        if T is None:
            raise InvalidArgument("an operator is required without an explicit oracle")
        if y.shape != (T.dim,):
            raise DimensionMismatch("target and operator dimensions differ")
        oracle = OrbitOracle(T, x, horizon)

    N = terms_needed(eps, y_norm, delta)
    r = N * y
    steps = [float(np.linalg.norm(r))]
    exponents: list[int] = []
    vectors: list[np.ndarray] = []
    zero_step = None

    def ask(target, step):
        n, v = oracle(target, step)
        v = np.asarray(v, dtype=np.complex128)
        t_norm = float(np.linalg.norm(target))
        miss = float(np.linalg.norm(v - target))
        if miss > eps * t_norm:
            raise OracleMiss(
                step,
                miss / t_norm,
                {"exponents": list(exponents), "steps": list(steps), "n_terms": N},
            )
        return int(n), v

    for j in range(1, N + 1):
        n, v = ask(r, j)
        exponents.append(n)
        vectors.append(v)
        r = r - v
        steps.append(float(np.linalg.norm(r)))
        if j < N and steps[-1] <= ZERO_RESIDUAL_RTOL * N * y_norm:
            zero_step = j
            remaining = N - j
            target = (N / remaining) * eps**N * y
            n_l, v_l = ask(target, j + 1)
            exponents.extend([n_l] * remaining)
            vectors.extend([v_l] * remaining)
            break

    V = np.array(vectors)
    achieved = float(np.linalg.norm(V.mean(axis=0) - y))
    return EpsilonGreedyResult(
        exponents=exponents,
        polynomial=from_exponents(exponents),
        achieved_error=achieved,
        bound=eps**N * y_norm,
        steps=steps,
        n_terms=N,
        zero_branch_step=zero_step,
        vectors=V,
    )


# ---------------------------------------------------------------------------
# disk-touching polynomial


@dataclass
class DiskTouching:
    n: int
    a: float
    polynomial: ConvexPolynomial

    def to_json(self) -> dict:
        return {"n": self.n, "a": self.a, "polynomial": self.polynomial.to_json()}


def disk_touching_polynomial(z0, max_n: int = 512) -> DiskTouching:
    """Convex polynomial ``a z^n + (1 - a)`` sending ``z0`` to the unit circle.

    ``n`` is the least exponent with ``Re(z0^n) < 1``; for ``zeta = z0^n`` the
    weight ``a = 2 (1 - Re zeta) / |zeta - 1|^2`` is the unique value in
    ``(0, 1]`` with ``|a zeta + 1 - a| = 1``.
    """
    z0 = complex(z0)
    if not abs(z0) > 1:
        raise NotOutsideDisk(f"|z0| = {abs(z0)} must exceed 1")
    zeta = 1 + 0j
    for n in range(1, max_n + 1):
        zeta = zeta * z0
        if not (math.isfinite(zeta.real) and math.isfinite(zeta.imag)) or abs(zeta) > OVERFLOW_LIMIT:
            break
        if zeta.real < 1:
            a = 2 * (1 - zeta.real) / abs(zeta - 1) ** 2
            a = min(a, 1.0)
            p = substitute_monomial(make_convex([1 - a, a]), n)
            return DiskTouching(n, a, p)
    raise NoExponentFound(
        f"no n <= {max_n} with Re(z0^n) < 1 for z0 = {z0}; a positive real z0 never qualifies"
    )
