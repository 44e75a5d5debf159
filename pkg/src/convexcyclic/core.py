"""Finite-dimensional complex operators.

Every operator is materialized as a dense ``dim x dim`` complex matrix. The
declarative :class:`OperatorSpec` variants describe how to build one; the
shift variants are finite sections of the unilateral shifts on l^2, with the
first (backward) or last (forward) basis vector sent to zero.

Vectors are plain one-dimensional ``complex128`` numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, EigensolverFailure, InvalidSpec

# Relative cutoff for counting singular values in the numerical rank.
RANK_RTOL = 1e-12


def _finite_complex(value, what="value") -> complex:
    z = complex(value)
    if not (np.isfinite(z.real) and np.isfinite(z.imag)):
        raise InvalidSpec(f"{what} must be finite, got {value!r}")
    return z


def as_vector(values, what="vector") -> np.ndarray:
    """Coerce ``values`` to a finite, nonempty 1-D complex array (copy)."""
    v = np.array(values, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise InvalidSpec(f"{what} must be a nonempty one-dimensional sequence")
    if not np.all(np.isfinite(v)):
        raise InvalidSpec(f"{what} has non-finite entries")
    return v


# ---------------------------------------------------------------------------
# Operator specifications


@dataclass(frozen=True)
class Diagonal:
    entries: tuple[complex, ...]


@dataclass(frozen=True)
class Dense:
    rows: tuple[tuple[complex, ...], ...]


@dataclass(frozen=True)
class BackwardShift:
    """``e_{k+1} -> w_k e_k`` and ``e_1 -> 0``."""

    weights: tuple[complex, ...]
    dim: int


@dataclass(frozen=True)
class ForwardShift:
    """``e_k -> w_k e_{k+1}`` and ``e_dim -> 0``."""

    weights: tuple[complex, ...]
    dim: int


@dataclass(frozen=True)
class Identity:
    dim: int


@dataclass(frozen=True)
class Sum:
    """Linear combination ``sum coeff_i * spec_i``."""

    terms: tuple[tuple[complex, "OperatorSpec"], ...]


@dataclass(frozen=True)
class DirectSum:
    parts: tuple["OperatorSpec", ...]


@dataclass(frozen=True)
class Scale:
    factor: complex
    spec: "OperatorSpec"


@dataclass(frozen=True)
class Negate:
    spec: "OperatorSpec"


OperatorSpec = Union[
    Diagonal, Dense, BackwardShift, ForwardShift, Identity, Sum, DirectSum, Scale, Negate
]


def diagonal(entries) -> Diagonal:
    return Diagonal(tuple(_finite_complex(e, "diagonal entry") for e in entries))


def dense(rows) -> Dense:
    return Dense(tuple(tuple(_finite_complex(e, "matrix entry") for e in row) for row in rows))


def backward_shift(weights, dim: int) -> BackwardShift:
    return BackwardShift(tuple(_finite_complex(w, "shift weight") for w in weights), int(dim))


def forward_shift(weights, dim: int) -> ForwardShift:
    return ForwardShift(tuple(_finite_complex(w, "shift weight") for w in weights), int(dim))


def spec_dim(spec: OperatorSpec) -> int:
    """Dimension declared by ``spec``; raises on inconsistent composites."""
    if isinstance(spec, Diagonal):
        if not spec.entries:
            raise InvalidSpec("diagonal needs at least one entry")
        return len(spec.entries)
    if isinstance(spec, Dense):
        n = len(spec.rows)
        if n == 0 or any(len(r) != n for r in spec.rows):
            raise InvalidSpec("dense matrix must be square and nonempty")
        return n
    if isinstance(spec, (BackwardShift, ForwardShift)):
        if spec.dim < 1:
            raise InvalidSpec("shift dimension must be positive")
        if len(spec.weights) != spec.dim - 1:
            raise InvalidSpec(
                f"shift of dim {spec.dim} needs {spec.dim - 1} weights, got {len(spec.weights)}"
            )
        return spec.dim
    if isinstance(spec, Identity):
        if spec.dim < 1:
            raise InvalidSpec("identity dimension must be positive")
        return spec.dim
    if isinstance(spec, Sum):
        if not spec.terms:
            raise InvalidSpec("sum needs at least one term")
        dims = {spec_dim(s) for _, s in spec.terms}
        if len(dims) != 1:
            raise DimensionMismatch(f"sum terms have dimensions {sorted(dims)}")
        return dims.pop()
    if isinstance(spec, DirectSum):
        if not spec.parts:
            raise InvalidSpec("direct sum needs at least one part")
        return sum(spec_dim(p) for p in spec.parts)
    if isinstance(spec, (Scale, Negate)):
        return spec_dim(spec.spec)
    raise InvalidSpec(f"unknown operator spec {spec!r}")


def contains_shift(spec: OperatorSpec) -> bool:
    if isinstance(spec, (BackwardShift, ForwardShift)):
        return True
    if isinstance(spec, Sum):
        return any(contains_shift(s) for _, s in spec.terms)
    if isinstance(spec, DirectSum):
        return any(contains_shift(p) for p in spec.parts)
    if isinstance(spec, (Scale, Negate)):
        return contains_shift(spec.spec)
    return False


def _materialize(spec: OperatorSpec) -> np.ndarray:
    if isinstance(spec, Diagonal):
        return np.diag(np.array(spec.entries, dtype=np.complex128))
    if isinstance(spec, Dense):
        return np.array(spec.rows, dtype=np.complex128).reshape(len(spec.rows), len(spec.rows))
    if isinstance(spec, BackwardShift):
        m = np.zeros((spec.dim, spec.dim), dtype=np.complex128)
        for k, w in enumerate(spec.weights):
            m[k, k + 1] = w
        return m
    if isinstance(spec, ForwardShift):
        m = np.zeros((spec.dim, spec.dim), dtype=np.complex128)
        for k, w in enumerate(spec.weights):
            m[k + 1, k] = w
        return m
    if isinstance(spec, Identity):
        return np.eye(spec.dim, dtype=np.complex128)
    if isinstance(spec, Sum):
        out = None
        for coeff, sub in spec.terms:
            term = _finite_complex(coeff, "sum coefficient") * _materialize(sub)
            out = term if out is None else out + term
        return out
    if isinstance(spec, DirectSum):
        blocks = [_materialize(p) for p in spec.parts]
        n = sum(b.shape[0] for b in blocks)
        m = np.zeros((n, n), dtype=np.complex128)
        i = 0
        for b in blocks:
            k = b.shape[0]
            m[i : i + k, i : i + k] = b
            i += k
        return m
    if isinstance(spec, Scale):
        return _finite_complex(spec.factor, "scale factor") * _materialize(spec.spec)
    if isinstance(spec, Negate):
        return -_materialize(spec.spec)
    raise InvalidSpec(f"unknown operator spec {spec!r}")


@dataclass(frozen=True, eq=False)
class LinearOperator:
    dim: int
    matrix: np.ndarray = field(repr=False)
    spec: OperatorSpec

    def __matmul__(self, v):
        return apply(self, v)


def build_operator(spec: OperatorSpec) -> LinearOperator:
    dim = spec_dim(spec)
    m = _materialize(spec)
    if not np.all(np.isfinite(m)):
        raise InvalidSpec("operator has non-finite entries")
    m.setflags(write=False)
    return LinearOperator(dim, m, spec)


def apply(T: LinearOperator, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.complex128)
    if v.shape != (T.dim,):
        raise DimensionMismatch(f"operator has dim {T.dim}, vector has shape {v.shape}")
    return T.matrix @ v


def operator_norm(T: LinearOperator) -> float:
    """Largest singular value (Euclidean operator norm)."""
    return float(np.linalg.norm(T.matrix, 2))


def _triangular_diagonal(m: np.ndarray):
    if np.all(np.triu(m, 1) == 0) or np.all(np.tril(m, -1) == 0):
        return np.diag(m).copy()
    return None


def adjoint_point_spectrum(T: LinearOperator) -> list[complex]:
    """Eigenvalues of the conjugate transpose, with multiplicity.

    Triangular matrices (every diagonal and shift-type operator) are read off
    the diagonal exactly; anything else goes through the dense eigensolver.
    """
    adj = T.matrix.conj().T
    eigs = _triangular_diagonal(adj)
    if eigs is None:
        try:
            eigs = np.linalg.eigvals(adj)
        except np.linalg.LinAlgError as exc:
            raise EigensolverFailure(str(exc)) from exc
        if not np.all(np.isfinite(eigs)):
            raise EigensolverFailure("eigensolver returned non-finite values")
    return [complex(e) for e in eigs]


def range_density_defect(T: LinearOperator, rtol: float = RANK_RTOL) -> int:
    """``dim - rank`` with rank counting singular values above ``dim * s_max * rtol``."""
    s = np.linalg.svd(T.matrix, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return T.dim
    return T.dim - int(np.sum(s > T.dim * s[0] * rtol))


# ---------------------------------------------------------------------------
# JSON form


def complex_to_json(z) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def complex_from_json(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise InvalidSpec(f"complex number must be [re, im], got {value!r}")
        return _finite_complex(complex(float(value[0]), float(value[1])))
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return _finite_complex(value)
    raise InvalidSpec(f"cannot read a complex number from {value!r}")


def vector_to_json(v) -> list[list[float]]:
    return [complex_to_json(z) for z in np.asarray(v)]


def vector_from_json(values) -> np.ndarray:
    if not isinstance(values, (list, tuple)):
        raise InvalidSpec("vector must be a JSON list")
    return as_vector([complex_from_json(z) for z in values])


def _require(d: dict, key: str):
    if key not in d:
        raise InvalidSpec(f"operator spec of type {d.get('type')!r} is missing {key!r}")
    return d[key]


def spec_from_json(d: dict[str, Any]) -> OperatorSpec:
    if not isinstance(d, dict) or "type" not in d:
        raise InvalidSpec("operator spec must be an object with a 'type' field")
    kind = d["type"]
    if kind == "diagonal":
        return Diagonal(tuple(complex_from_json(e) for e in _require(d, "entries")))
    if kind == "dense":
        return Dense(tuple(tuple(complex_from_json(e) for e in row) for row in _require(d, "rows")))
    if kind in ("backward_shift", "forward_shift"):
        cls = BackwardShift if kind == "backward_shift" else ForwardShift
        return cls(tuple(complex_from_json(w) for w in _require(d, "weights")), int(_require(d, "dim")))
    if kind == "identity":
        return Identity(int(_require(d, "dim")))
    if kind == "sum":
        return Sum(
            tuple(
                (complex_from_json(_require(t, "coeff")), spec_from_json(_require(t, "spec")))
                for t in _require(d, "terms")
            )
        )
    if kind == "direct_sum":
        return DirectSum(tuple(spec_from_json(p) for p in _require(d, "parts")))
    if kind == "scale":
        return Scale(complex_from_json(_require(d, "factor")), spec_from_json(_require(d, "spec")))
    if kind == "negate":
        return Negate(spec_from_json(_require(d, "spec")))
    raise InvalidSpec(f"unknown operator type {kind!r}")


def _real_or_pair(w: complex):
    return w.real if w.imag == 0 else complex_to_json(w)


def spec_to_json(spec: OperatorSpec) -> dict[str, Any]:
    if isinstance(spec, Diagonal):
        return {"type": "diagonal", "entries": [complex_to_json(e) for e in spec.entries]}
    if isinstance(spec, Dense):
        return {"type": "dense", "rows": [[complex_to_json(e) for e in row] for row in spec.rows]}
    if isinstance(spec, (BackwardShift, ForwardShift)):
        kind = "backward_shift" if isinstance(spec, BackwardShift) else "forward_shift"
        return {"type": kind, "weights": [_real_or_pair(w) for w in spec.weights], "dim": spec.dim}
    if isinstance(spec, Identity):
        return {"type": "identity", "dim": spec.dim}
    if isinstance(spec, Sum):
        return {
            "type": "sum",
            "terms": [{"coeff": complex_to_json(c), "spec": spec_to_json(s)} for c, s in spec.terms],
        }
    if isinstance(spec, DirectSum):
        return {"type": "direct_sum", "parts": [spec_to_json(p) for p in spec.parts]}
    if isinstance(spec, Scale):
        return {"type": "scale", "factor": complex_to_json(spec.factor), "spec": spec_to_json(spec.spec)}
    if isinstance(spec, Negate):
        return {"type": "negate", "spec": spec_to_json(spec.spec)}
    raise InvalidSpec(f"unknown operator spec {spec!r}")


def operator_from_matrix(matrix: Sequence[Sequence[complex]] | np.ndarray) -> LinearOperator:
    """Wrap an explicit square matrix as a ``Dense`` operator."""
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidSpec("matrix must be square")
    return build_operator(dense(m.tolist()))
