"""Convex polynomials: nonnegative real coefficients summing to one.

A convex polynomial ``p`` applied to an operator ``T`` and a vector ``x``
gives a point ``p(T)x`` of the convex hull of the orbit of ``x``; every hull
point arises this way.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import LinearOperator, apply, as_vector, operator_norm
from .errors import (
    DegreeTooLarge,
    DimensionMismatch,
    InvalidArgument,
    NegativeCoefficient,
    SumNotOne,
)

SUM_TOL = 1e-9
STORAGE_TOL = 1e-12
MAX_DEGREE = 10_000


@dataclass(frozen=True)
class ConvexPolynomial:
    coeffs: tuple[float, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        return eval_scalar(self, z)

    def to_json(self) -> dict:
        return {"coeffs": list(self.coeffs)}


def make_convex(raw: Sequence[float]) -> ConvexPolynomial:
    """Validate and normalize a coefficient list ``a_0, ..., a_n``.

    Sums within ``1e-9`` of one are renormalized; trailing zeros are trimmed.
    """
    a = np.asarray(raw, dtype=np.float64).ravel()
    if a.size == 0:
        raise InvalidArgument("a convex polynomial needs at least one coefficient")
    if not np.all(np.isfinite(a)):
        raise InvalidArgument("coefficients must be finite")
    if np.any(a < 0):
        k = int(np.argmax(a < 0))
        raise NegativeCoefficient(f"coefficient a_{k} = {a[k]!r} is negative")
    total = float(np.sum(a))
    if abs(total - 1.0) > SUM_TOL:
        raise SumNotOne(f"coefficients sum to {total!r}")
    a = a / total
    a[a == 0] = 0.0  # drop negative zeros
    nz = np.flatnonzero(a)
    a = a[: nz[-1] + 1] if nz.size else a[:1]
    if a.size - 1 > MAX_DEGREE:
        raise DegreeTooLarge(f"degree {a.size - 1} exceeds {MAX_DEGREE}")
    return ConvexPolynomial(tuple(float(c) for c in a))


def from_json(d: dict) -> ConvexPolynomial:
    return make_convex(d["coeffs"])


def eval_scalar(p: ConvexPolynomial, z) -> complex:
    acc = 0j
    for a in reversed(p.coeffs):
        acc = acc * z + a
    return complex(acc)


def apply_poly(p: ConvexPolynomial, T: LinearOperator, x) -> np.ndarray:
    """``sum_k a_k T^k x`` in one sweep along the orbit of ``x``."""
    v = np.asarray(x, dtype=np.complex128)
    if v.shape != (T.dim,):
        raise DimensionMismatch(f"operator has dim {T.dim}, vector has shape {v.shape}")
    acc = np.zeros(T.dim, dtype=np.complex128)
    last = len(p.coeffs) - 1
    for k, a in enumerate(p.coeffs):
        if a:
            acc += a * v
        if k < last:
            v = apply(T, v)
    return acc


def cesaro_mean(n: int) -> ConvexPolynomial:
    """Arithmetic mean ``(1 + z + ... + z^(n-1)) / n``."""
    if n < 1:
        raise InvalidArgument("cesaro_mean needs n >= 1")
    return make_convex([1.0 / n] * n)


def pkc(k: int, c: float) -> ConvexPolynomial:
    """Geometric-weight family ``(c-1)/(c^k-1) * (c^(k-1) + c^(k-2) z + ... + z^(k-1))``.

    ``c = 1`` is the Cesaro mean of order ``k``.
    """
    if k < 1:
        raise InvalidArgument("pkc needs k >= 1")
    if not c >= 1:
        raise InvalidArgument("pkc needs c >= 1")
    if c == 1:
        return cesaro_mean(k)
    j = np.arange(k)
    # c^(k-1-j) / (c^k - 1) rewritten as c^(-1-j) / (1 - c^-k) to stay finite for large k
    coeffs = (c - 1.0) * c ** (-1.0 - j) / (1.0 - c ** (-float(k)))
    return make_convex(coeffs)


def poly_power(p: ConvexPolynomial, m: int) -> ConvexPolynomial:
    if m < 1:
        raise InvalidArgument("poly_power needs m >= 1")
    if p.degree * m > MAX_DEGREE:
        raise DegreeTooLarge(f"degree {p.degree * m} exceeds {MAX_DEGREE}")
    base = np.asarray(p.coeffs)
    out = np.ones(1)
    for _ in range(m):
        out = np.convolve(out, base)
    return make_convex(out)


def substitute_monomial(p: ConvexPolynomial, n: int) -> ConvexPolynomial:
    """``q(z) = p(z^n)``."""
    if n < 1:
        raise InvalidArgument("substitute_monomial needs n >= 1")
    if p.degree * n > MAX_DEGREE:
        raise DegreeTooLarge(f"degree {p.degree * n} exceeds {MAX_DEGREE}")
    out = np.zeros(p.degree * n + 1)
    out[::n] = p.coeffs
    return make_convex(out)


def from_exponents(exponents: Sequence[int]) -> ConvexPolynomial:
    """Average of monomials ``(z^k1 + ... + z^kN) / N``; repeats accumulate."""
    if len(exponents) == 0:
        raise InvalidArgument("need at least one exponent")
    if min(exponents) < 0:
        raise InvalidArgument("exponents must be nonnegative")
    counts = np.bincount(np.asarray(exponents, dtype=np.int64))
    return make_convex(counts / len(exponents))


def pkc_identity_residual(T: LinearOperator, x, c: float, k: int) -> float:
    """Norm of ``p_k^c(T)(cI - T)x - (c-1) c^k/(c^k-1) (x - (T/c)^k x)``.

    The two sides agree exactly in exact arithmetic; the return value
    measures floating point drift.
    """
    if not c > 1:
        raise InvalidArgument("pkc_identity_residual needs c > 1")
    x = as_vector(x)
    if x.shape != (T.dim,):
        raise DimensionMismatch(f"operator has dim {T.dim}, vector has shape {x.shape}")
    lhs = apply_poly(pkc(k, c), T, c * x - apply(T, x))
    v = x
    for _ in range(k):
        v = apply(T, v) / c
    factor = (c - 1.0) / (1.0 - c ** (-float(k)))
    rhs = factor * (x - v)
    return float(np.linalg.norm(lhs - rhs))


def pkc_identity_scale(T: LinearOperator, x, k: int) -> float:
    """Error scale ``(1 + |x|) * max(1, |T|)^k`` used to judge the residual."""
    return (1.0 + float(np.linalg.norm(x))) * max(1.0, operator_norm(T)) ** k


def parse_polynomial(text: str) -> ConvexPolynomial:
    """Read ``cesaro:n``, ``pkc:k:c`` or a comma separated coefficient list."""
    text = text.strip()
    if text.startswith("cesaro:"):
        return cesaro_mean(int(text.split(":", 1)[1]))
    if text.startswith("pkc:"):
        parts = text.split(":")
        if len(parts) != 3:
            raise InvalidArgument("expected pkc:k:c")
        return pkc(int(parts[1]), float(parts[2]))
    body = text.strip("[]")
    try:
        values = [float(s) for s in body.split(",") if s.strip()]
    except ValueError as exc:
        raise InvalidArgument(f"cannot parse polynomial {text!r}") from exc
    return make_convex(values)
