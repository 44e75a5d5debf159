"""Orbits and distances to the convex hull of an orbit segment.

Complex vectors in C^d are treated as real vectors in R^(2d) with the
Euclidean norm; every reported distance is a distance in that norm.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .convex_poly import ConvexPolynomial, apply_poly, cesaro_mean, make_convex, pkc
from .core import LinearOperator, OperatorSpec, as_vector
from .errors import DimensionMismatch, InvalidArgument, NumericalOverflow, TooManyPoints

MAX_ORBIT_LENGTH = 100_000
OVERFLOW_LIMIT = 1e300


@dataclass(frozen=True, eq=False)
class OrbitTable:
    """Rows ``x, Tx, ..., T^N x`` stacked as an ``(N+1, dim)`` array."""

    rows: np.ndarray = field(repr=False)
    operator_spec: Optional[OperatorSpec]
    seed: np.ndarray = field(repr=False)

    @property
    def N(self) -> int:
        return self.rows.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def __len__(self):
        return self.rows.shape[0]

    def prefix(self, n: int) -> "OrbitTable":
        return OrbitTable(self.rows[: n + 1], self.operator_spec, self.seed)


def compute_orbit(T: LinearOperator, x, N: int) -> OrbitTable:
    if N < 0 or N > MAX_ORBIT_LENGTH:
        raise InvalidArgument(f"orbit length must be in [0, {MAX_ORBIT_LENGTH}], got {N}")
    x = as_vector(x, "seed vector")
    if x.shape != (T.dim,):
        raise DimensionMismatch(f"operator has dim {T.dim}, seed has dim {x.size}")
    rows = np.empty((N + 1, T.dim), dtype=np.complex128)
    rows[0] = x
    for n in range(1, N + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            rows[n] = T.matrix @ rows[n - 1]
            peak = np.max(np.abs(rows[n]))
        if not np.isfinite(peak) or peak > OVERFLOW_LIMIT:
            raise NumericalOverflow(
                f"orbit left the double range at n = {n}", last_safe_n=n - 1
            )
    rows.setflags(write=False)
    return OrbitTable(rows, T.spec, x)


def _realify(points: np.ndarray) -> np.ndarray:
    """``(m, d)`` complex -> ``(m, 2d)`` real."""
    return np.concatenate([points.real, points.imag], axis=1)


def _as_points(orbit) -> np.ndarray:
    if isinstance(orbit, OrbitTable):
        return orbit.rows
    pts = np.array([as_vector(p, "point") for p in orbit])
    if pts.ndim != 2:
        raise DimensionMismatch("all points must share one dimension")
    return pts


@dataclass
class HullApproximation:
    coefficients: np.ndarray
    distance: float
    gap: float
    iterations: int

    @property
    def lower_bound(self) -> float:
        """Certified lower bound on the true distance to the hull.

        ``gap`` bounds the suboptimality of the squared distance, so the
        optimum lies in ``[sqrt(distance^2 - gap), distance]``.
        """
        return math.sqrt(max(self.distance**2 - self.gap, 0.0))

    def polynomial(self) -> ConvexPolynomial:
        return make_convex(self.coefficients)

    def to_json(self) -> dict:
        return {
            "coefficients": [float(a) for a in self.coefficients],
            "distance": self.distance,
            "gap": self.gap,
            "iterations": self.iterations,
            "lower_bound": self.lower_bound,
        }


def _affine_minimizer(Q: np.ndarray, weights: np.ndarray):
    """Minimize ``|Q w|`` subject to ``sum w = 1`` (no sign constraint).

    Columns are equilibrated before the least-squares solve because orbit
    points routinely span dozens of orders of magnitude.
    """
    b = int(np.argmax(weights))
    others = [k for k in range(Q.shape[1]) if k != b]
    w = np.zeros(Q.shape[1])
    if not others:
        w[b] = 1.0
        return w
    M = Q[:, others] - Q[:, [b]]
    scale = np.linalg.norm(M, axis=0)
    scale[scale == 0] = 1.0
    z, *_ = np.linalg.lstsq(M / scale, -Q[:, b], rcond=None)
    z = z / scale
    w[others] = z
    w[b] = 1.0 - z.sum()
    return w


def _fully_corrective(Q: np.ndarray, a: np.ndarray, max_rounds: int = 50) -> np.ndarray:
    """Wolfe minor cycles on the support of ``a``: the simplex-constrained
    least-squares optimum of ``|Q a|`` restricted to the current support."""
    a = a.copy()
    for _ in range(max_rounds):
        S = np.flatnonzero(a > 0)
        w_s = _affine_minimizer(Q[:, S], a[S])
        if np.all(w_s > 0):
            a = np.zeros_like(a)
            a[S] = w_s
            return a
        # move from a toward the affine minimizer until a weight hits zero
        cur = a[S]
        ratios = np.full(len(S), np.inf)
        neg = w_s <= 0
        ratios[neg] = cur[neg] / (cur[neg] - w_s[neg])
        hit = int(np.argmin(ratios))
        new = cur + ratios[hit] * (w_s - cur)
        new[hit] = 0.0
        a = np.zeros_like(a)
        a[S] = np.maximum(new, 0.0)
        a /= a.sum()
    return a


def _improve(Q: np.ndarray, a: np.ndarray):
    a = a / a.sum()
    r = Q @ a
    b = _fully_corrective(Q, a)
    rb = Q @ b
    if float(rb @ rb) < float(r @ r):
        return b, rb
    return a, r


def best_convex_approximation(
    orbit,
    y,
    tol: float = 1e-8,
    max_iter: int = 10_000,
    *,
    refine: bool = True,
    correct_every: int = 16,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> HullApproximation:
    """Nearest point to ``y`` in the convex hull of the orbit rows.

    Away-step Frank-Wolfe with exact line search on ``|sum a_k rows_k - y|^2``
    over the probability simplex, stopped when the Frank-Wolfe gap drops to
    ``tol**2`` or after ``max_iter`` iterations. With ``refine``, every
    ``correct_every`` iterations and once at the end the weights are
    re-optimized over their current support (Wolfe minor cycles), kept only
    when that lowers the objective. Orbits spanning many orders of magnitude
    make plain away-steps crawl; the corrective steps fix that.
    ``callback(iteration, weights)`` sees every iterate. Running out of iterations is not an error; the ``gap`` field
    reports what is left.
    """
    if not tol > 0:
        raise InvalidArgument("tol must be positive")
    pts = _as_points(orbit)
    y = as_vector(y, "target")
    if y.shape != (pts.shape[1],):
        raise DimensionMismatch(f"points have dim {pts.shape[1]}, target has dim {y.size}")

    P = _realify(pts)  # (m, D)
    yr = np.concatenate([y.real, y.imag])
    Q = (P - yr).T  # shifted points as columns; Q a = x - y on the simplex
    m = P.shape[0]

    start = int(np.argmin(np.linalg.norm(Q, axis=0)))
    a = np.zeros(m)
    a[start] = 1.0
    r = Q[:, start].copy()
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        scores = Q.T @ r  # <q_k, r>; gradient of |r|^2/2 in the weights
        s = int(np.argmin(scores))
        rx = float(r @ r)
        gap = 2.0 * (rx - scores[s])
        if gap <= tol**2:
            it -= 1
            break
        active = np.flatnonzero(a > 0)
        v = int(active[np.argmax(scores[active])])
        g_fw = rx - scores[s]
        g_away = scores[v] - rx
        if g_fw >= g_away or a[v] >= 1.0:
            d = Q[:, s] - r
            gmax = 1.0
            fw = True
        else:
            d = r - Q[:, v]
            gmax = a[v] / (1.0 - a[v])
            fw = False
        dd = float(d @ d)
        if dd == 0.0:
            break
        gamma = min(max(-float(r @ d) / dd, 0.0), gmax)
        if gamma == 0.0:
            break
        if fw:
            a *= 1.0 - gamma
            a[s] += gamma
        else:
            a *= 1.0 + gamma
            a[v] -= gamma
            if gamma == gmax:
                a[v] = 0.0
        a[a < 0] = 0.0
        if refine and it % correct_every == 0:
            a, r = _improve(Q, a)
        elif it % 64 == 0:
            a /= a.sum()
            r = Q @ a
        else:
            r = r + gamma * d
        if callback is not None:
            callback(it, a)

    if refine:
        a, r = _improve(Q, a)
        if callback is not None:
            callback(it + 1, a)
    else:
        a /= a.sum()
        r = Q @ a

    scores = Q.T @ r
    gap = max(2.0 * (float(r @ r) - float(scores.min())), 0.0)
    point = pts.T @ a
    distance = float(np.linalg.norm(point - y))
    return HullApproximation(a, distance, gap, it)


def lattice_resolution(points, y, grid: int) -> float:
    """Worst-case gap between the lattice minimum and the true minimum.

    Any simplex point has a lattice neighbour within l1 distance ``k/grid``,
    which moves the combination by at most ``k/grid * max |p_k - y|``.
    """
    pts = _as_points(points)
    y = as_vector(y)
    return len(pts) / grid * float(np.max(np.linalg.norm(pts - y, axis=1)))


def brute_force_simplex_oracle(points, y, grid: int) -> float:
    """Minimum of ``|sum a_k p_k - y|`` over the simplex lattice ``a_k = m_k/grid``.

    Exhaustive enumeration; at most six points and ``grid <= 200``.
    """
    pts = _as_points(points)
    if len(pts) > 6:
        raise TooManyPoints(f"brute force handles at most 6 points, got {len(pts)}")
    if not 1 <= grid <= 200:
        raise InvalidArgument("grid must be in [1, 200]")
    y = as_vector(y, "target")
    if y.shape != (pts.shape[1],):
        raise DimensionMismatch("points and target dimensions differ")
    k = len(pts)
    shifted = pts - y
    if k == 1:
        return float(np.linalg.norm(shifted[0]))
    best = np.inf
    # stars and bars: choose k-1 bar positions among grid+k-1 slots
    combos = itertools.combinations(range(grid + k - 1), k - 1)
    chunk = 200_000
    while True:
        block = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos, chunk)), dtype=np.int64
        )
        if block.size == 0:
            break
        bars = block.reshape(-1, k - 1)
        edges = np.concatenate(
            [np.full((len(bars), 1), -1), bars, np.full((len(bars), 1), grid + k - 1)], axis=1
        )
        counts = np.diff(edges, axis=1) - 1
        vals = (counts / grid) @ shifted
        best = min(best, float(np.min(np.linalg.norm(vals, axis=1))))
    return best


@dataclass
class DensityProbeResult:
    score: float
    residuals: list[float]
    approximations: list[HullApproximation]

    def to_json(self) -> dict:
        return {
            "score": self.score,
            "residuals": self.residuals,
            "approximations": [h.to_json() for h in self.approximations],
        }


def density_probe(
    T: LinearOperator,
    x,
    targets: Sequence,
    N: int,
    tol: float,
    *,
    solver_tol: float = 1e-10,
    max_iter: int = 10_000,
    workers: int = 1,
) -> DensityProbeResult:
    """Fraction of ``targets`` within ``tol`` of the hull of ``x, ..., T^N x``.

    Evidence only: a finite orbit segment can never certify density.
    """
    orbit = compute_orbit(T, x, N)
    ys = [as_vector(t, "target") for t in targets]

    def solve(y):
        return best_convex_approximation(orbit, y, solver_tol, max_iter)

    if workers > 1 and len(ys) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            approx = list(pool.map(solve, ys))
    else:
        approx = [solve(y) for y in ys]
    residuals = [h.distance for h in approx]
    score = sum(d <= tol for d in residuals) / len(residuals) if residuals else 0.0
    return DensityProbeResult(score, residuals, approx)


def nearest_orbit_index(rows: np.ndarray, target: np.ndarray) -> tuple[int, float]:
    """Index of the orbit row closest to ``target`` and its distance."""
    d = np.linalg.norm(rows - target, axis=1)
    n = int(np.argmin(d))
    return n, float(d[n])


def greedy_exponents(rows: np.ndarray, y: np.ndarray, n_terms: int) -> list[int]:
    """Greedy support-``n_terms`` average: start from ``n_terms * y`` and
    repeatedly subtract the nearest orbit point from the residual."""
    r = n_terms * np.asarray(y, dtype=np.complex128)
    out = []
    for _ in range(n_terms):
        n, _ = nearest_orbit_index(rows, r)
        out.append(n)
        r = r - rows[n]
    return out


@dataclass
class FamilyProbeResult:
    family: str
    best_k: int
    distance: float
    distances: list[float]
    exponents: Optional[list[int]] = None

    def to_json(self) -> dict:
        out = {
            "family": self.family,
            "best_k": self.best_k,
            "distance": self.distance,
            "distances": self.distances,
        }
        if self.exponents is not None:
            out["exponents"] = self.exponents
        return out


def family_probe(
    T: LinearOperator,
    x,
    y,
    family: str,
    max_k: int,
    *,
    c: float = 2.0,
    n_terms: int = 2,
) -> FamilyProbeResult:
    """Best approximation of ``y`` within one named polynomial family.

    ``family`` is ``"cesaro"`` (``M_k``, k = 1..max_k), ``"pkc"`` (geometric
    weights with ratio ``c``) or ``"monomial_average"`` (greedy average of
    ``n_terms`` orbit points with exponents up to ``max_k``).
    """
    if max_k < 1:
        raise InvalidArgument("max_k must be >= 1")
    x = as_vector(x, "seed vector")
    y = as_vector(y, "target")
    if x.shape != (T.dim,) or y.shape != (T.dim,):
        raise DimensionMismatch("seed, target and operator dimensions differ")
    if family == "monomial_average":
        if n_terms < 1:
            raise InvalidArgument("n_terms must be >= 1")
        rows = compute_orbit(T, x, max_k).rows
        exps = greedy_exponents(rows, y, n_terms)
        point = rows[exps].mean(axis=0)
        dist = float(np.linalg.norm(point - y))
        return FamilyProbeResult(family, n_terms, dist, [dist], exps)
    if family == "cesaro":
        make = cesaro_mean
    elif family == "pkc":
        def make(k):
            return pkc(k, c)
    else:
        raise InvalidArgument(f"unknown family {family!r}")
    distances = [float(np.linalg.norm(apply_poly(make(k), T, x) - y)) for k in range(1, max_k + 1)]
    best = int(np.argmin(distances))
    return FamilyProbeResult(family, best + 1, distances[best], distances)
