"""Batch experiments: configuration, presets, dispatch and report output."""

from __future__ import annotations

import csv
import io
import json
import math
import platform
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Optional

import numpy as np

from . import constructions, convex_poly, criteria, hull
from .core import (
    BackwardShift,
    Identity,
    LinearOperator,
    Sum,
    build_operator,
    diagonal,
    forward_shift,
    spec_dim,
    spec_from_json,
    spec_to_json,
    vector_from_json,
    vector_to_json,
)
from .errors import ConfigError, InvalidArgument

COMMANDS = ("classify", "probe", "approx", "epsilon", "defect", "orbit", "preset")


# ---------------------------------------------------------------------------
# presets


@dataclass(frozen=True)
class Preset:
    name: str
    spec_json: dict
    seed_vector: list
    source: str
    note: str = ""


def dirichlet_weights(d: int) -> list[float]:
    """Forward-shift weights ``sqrt((n+1)/n)``, n = 1..d-1, so ``|T^n e_1|^2 = n + 1``."""
    return [math.sqrt((n + 1) / n) for n in range(1, d)]


def _preset(name: str) -> Preset:
    base, _, arg = name.partition(":")
    if base == "diag-2i-minus-2i":
        if arg:
            raise ConfigError("preset", "diag-2i-minus-2i takes no dimension")
        return Preset(
            name,
            spec_to_json(diagonal([2j, -2j])),
            [1.0, 1.0],
            "2x2 diagonal with eigenvalues 2i and -2i, stated to be convex-cyclic",
            "real convex weights keep every hull point in {(w, conj(w))}; "
            "the functional (-i, -i) is a bounded Hahn-Banach witness",
        )
    if not arg:
        raise ConfigError("preset", f"preset {base!r} needs a dimension, e.g. {base}:8")
    try:
        d = int(arg)
    except ValueError as exc:
        raise ConfigError("preset", f"bad dimension {arg!r}") from exc
    if d < 2:
        raise ConfigError("preset", "dimension must be at least 2")
    if base == "2I-plus-B":
        spec = Sum(((2 + 0j, Identity(d)), (1 + 0j, BackwardShift((1 + 0j,) * (d - 1), d))))
        return Preset(
            name,
            spec_to_json(spec),
            [1.0] * d,
            "adjoint multiplier M*_{2+z} = 2I + B on H^2, convex-cyclic but not 1-weakly hypercyclic",
            "finite sections are upper triangular with the real eigenvalue 2, so every "
            "truncation fails the adjoint-spectrum gate even though the operator on H^2 passes",
        )
    if base == "twice-backward-shift":
        spec = BackwardShift((2 + 0j,) * (d - 1), d)
        return Preset(
            name,
            spec_to_json(spec),
            [1.0] * d,
            "Rolewicz operator 2B, hypercyclic on l^2",
            "finite sections are nilpotent, so the truncation fails every gate",
        )
    if base == "unimodular-diagonal":
        entries = [np.exp(1j * np.pi * (k + 1) / (d + 1)) for k in range(d)]
        return Preset(
            name,
            spec_to_json(diagonal(entries)),
            [1.0] * d,
            "isometries (1-isometries) are never convex-cyclic",
        )
    if base == "dirichlet-shift":
        weights = dirichlet_weights(d)
        seed = [0.0] * d
        seed[0] = 1.0
        return Preset(
            name,
            spec_to_json(forward_shift(weights, d)),
            seed,
            "Dirichlet-type forward shift, a strict 2-isometry with |T^n e_1|^2 = n + 1",
            "boundary coordinates of the finite section break the identity; samples avoid them",
        )
    raise ConfigError("preset", f"unknown preset {name!r}")


PRESET_NAMES = ("diag-2i-minus-2i", "2I-plus-B:d", "twice-backward-shift:d", "unimodular-diagonal:d", "dirichlet-shift:d")


# ---------------------------------------------------------------------------
# configuration and report


@dataclass
class ExperimentConfig:
    command: str
    operator: Optional[dict] = None
    seed_vector: Optional[list] = None
    parameters: dict = field(default_factory=dict)
    preset: Optional[str] = None
    rng_seed: int = 0

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "operator": self.operator,
            "seed_vector": self.seed_vector,
            "parameters": self.parameters,
            "preset": self.preset,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ExperimentConfig":
        return cls(
            d["command"],
            d.get("operator"),
            d.get("seed_vector"),
            dict(d.get("parameters") or {}),
            d.get("preset"),
            int(d.get("rng_seed", 0)),
        )


def _versions() -> dict:
    try:
        version = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        version = "unknown"
    return {"convexcyclic": version, "numpy": np.__version__, "python": platform.python_version()}


@dataclass
class Report:
    config: dict
    results: dict
    versions: dict
    rng_seed: int
    wall_time: float = field(default=0.0, compare=False)

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "results": self.results,
            "versions": self.versions,
            "rng_seed": self.rng_seed,
            "wall_time": self.wall_time,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Report":
        return cls(d["config"], d["results"], d["versions"], d["rng_seed"], d.get("wall_time", 0.0))


# ---------------------------------------------------------------------------
# dispatch


class _Ctx:
    """Resolved operator, seed and parameter accessors for one config."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.params = config.parameters
        self.preset = _preset(config.preset) if config.preset else None
        spec_json = config.operator
        if spec_json is None and self.preset is not None:
            spec_json = self.preset.spec_json
        self.spec_json = spec_json
        self.T: Optional[LinearOperator] = None
        if spec_json is not None:
            try:
                self.T = build_operator(spec_from_json(spec_json))
            except InvalidArgument as exc:
                raise ConfigError("operator", str(exc)) from exc
        seed = config.seed_vector
        if seed is None and self.preset is not None:
            seed = self.preset.seed_vector
        self.x = None
        if seed is not None:
            self.x = self.vector(seed, "seed_vector")
        elif self.T is not None:
            self.x = np.ones(self.T.dim, dtype=np.complex128)

    def operator(self) -> LinearOperator:
        if self.T is None:
            raise ConfigError("operator", "this command needs --spec or --preset")
        return self.T

    def vector(self, value, name: str) -> np.ndarray:
        try:
            v = vector_from_json(value)
        except InvalidArgument as exc:
            raise ConfigError(name, str(exc)) from exc
        if self.T is not None and v.size != self.T.dim:
            raise ConfigError(name, f"has dimension {v.size}, operator has dimension {self.T.dim}")
        return v

    def get(self, key, default=None, kind=None):
        value = self.params.get(key, default)
        if value is None:
            return None
        if kind is not None:
            try:
                value = kind(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(key, f"expected {kind.__name__}, got {value!r}") from exc
        return value

    def require(self, key, kind):
        if self.params.get(key) is None:
            raise ConfigError(key, f"required for command {self.config.command!r}")
        return self.get(key, kind=kind)


def _cmd_classify(ctx: _Ctx) -> dict:
    T = ctx.operator()
    field_ = ctx.get("field", "complex", str)
    if field_ not in ("complex", "real"):
        raise ConfigError("field", "must be 'complex' or 'real'")
    report = criteria.classify_operator(T, ctx.x, field=field_, seed=ctx.config.rng_seed)
    gates = criteria.necessary_conditions_report(T)
    out = {"classifier": report.to_json(), "necessary_conditions": gates.to_json()}
    if report.witness is not None:
        trace = criteria.hahn_banach_probe(T, ctx.x, report.witness, ctx.get("N", 200, int))
        out["witness_probe"] = trace.to_json()
    return out


def _cmd_probe(ctx: _Ctx) -> dict:
    T = ctx.operator()
    N = ctx.get("N", 100, int)
    f = ctx.params.get("functional")
    if f is None:
        raise ConfigError("functional", "required for command 'probe'")
    trace = criteria.hahn_banach_probe(T, ctx.x, ctx.vector(f, "functional"), N)
    return {"trace": trace.to_json()}


def _targets(ctx: _Ctx) -> list[np.ndarray]:
    raw = ctx.params.get("targets")
    if raw is None:
        raise ConfigError("targets", "at least one target vector is required")
    if not isinstance(raw, list) or not raw:
        raise ConfigError("targets", "must be a nonempty list of vectors")
    return [ctx.vector(t, "targets") for t in raw]


def _cmd_approx(ctx: _Ctx) -> dict:
    T = ctx.operator()
    N = ctx.get("N", 64, int)
    tol = ctx.get("tol", 1e-6, float)
    max_iter = ctx.get("max_iter", 10_000, int)
    targets = _targets(ctx)
    family = ctx.params.get("family")
    if family:
        name, c, n_terms = _parse_family(family)
        results = [
            hull.family_probe(T, ctx.x, y, name, N, c=c, n_terms=n_terms).to_json() for y in targets
        ]
        return {"family": results}
    probe = hull.density_probe(
        T, ctx.x, targets, N, tol, max_iter=max_iter, workers=ctx.get("workers", 1, int)
    )
    return {"density": probe.to_json()}


def _parse_family(text: str):
    name, _, arg = str(text).partition(":")
    try:
        if name == "cesaro":
            return "cesaro", 2.0, 2
        if name == "pkc":
            return "pkc", float(arg or 2.0), 2
        if name in ("monomial", "monomial_average"):
            return "monomial_average", 2.0, int(arg or 2)
    except ValueError as exc:
        raise ConfigError("family", f"bad family argument {arg!r}") from exc
    raise ConfigError("family", f"unknown family {text!r} (cesaro, pkc:c, monomial:N)")


def _cmd_epsilon(ctx: _Ctx) -> dict:
    eps = ctx.require("eps", float)
    delta = ctx.require("delta", float)
    horizon = ctx.get("horizon", 256, int)
    mock = bool(ctx.params.get("mock", False))
    if not 0 < eps < 1:
        raise ConfigError("eps", "must lie in (0, 1)")
    if not delta > 0:
        raise ConfigError("delta", "must be positive")
    rng = np.random.default_rng(ctx.config.rng_seed)
    raw = ctx.params.get("targets")
    if raw:
        y = ctx.vector(raw[0], "targets")
    else:
        dim = ctx.T.dim if ctx.T is not None else ctx.get("dim", 3, int)
        y = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        y /= np.linalg.norm(y)
    if mock:
        oracle = constructions.MockEpsilonOracle(eps, seed=ctx.config.rng_seed)
        res = constructions.epsilon_greedy_approximation(None, None, y, eps, horizon, delta, oracle=oracle)
    else:
        res = constructions.epsilon_greedy_approximation(ctx.operator(), ctx.x, y, eps, horizon, delta)
    return {"target": vector_to_json(y), "epsilon": res.to_json(), "mock": mock}


def _cmd_defect(ctx: _Ctx) -> dict:
    T = ctx.operator()
    m = ctx.get("m", 1, int)
    p = ctx.get("p", 2.0, float)
    if m < 1 or not p > 0:
        raise ConfigError("m", "need m >= 1 and p > 0")
    samples = ctx.get("samples", 100, int)
    rep = criteria.is_m_isometry(T, m, p, samples, ctx.get("tol", 1e-9, float), seed=ctx.config.rng_seed)
    out = {
        "seed_defect": criteria.m_isometry_defect(T, ctx.x, m, p),
        "report": rep.to_json(),
    }
    N = ctx.get("N", None, int)
    if N is not None:
        out["seminorm"] = criteria.misometry_seminorm_estimate(T, ctx.x, m, p, N).to_json()
    return out


def _cmd_orbit(ctx: _Ctx) -> dict:
    T = ctx.operator()
    N = ctx.get("N", 10, int)
    orbit = hull.compute_orbit(T, ctx.x, N)
    out = {"rows": [vector_to_json(r) for r in orbit.rows]}
    poly = ctx.params.get("poly")
    if poly:
        try:
            p = convex_poly.parse_polynomial(str(poly))
        except InvalidArgument as exc:
            raise ConfigError("poly", str(exc)) from exc
        out["polynomial"] = p.to_json()
        out["p_of_T_x"] = vector_to_json(convex_poly.apply_poly(p, T, ctx.x))
    return out


def _cmd_preset(ctx: _Ctx) -> dict:
    if ctx.preset is None:
        raise ConfigError("preset", "command 'preset' needs a preset name")
    T = ctx.operator()
    name = ctx.preset.name.partition(":")[0]
    out = {"classify": _cmd_classify(ctx)}
    if name == "diag-2i-minus-2i":
        orbit = hull.compute_orbit(T, ctx.x, 200)
        y = np.array([1.0, -1.0], dtype=np.complex128)
        worst = 0.0

        def check(it, a):
            nonlocal worst
            v = orbit.rows.T @ a
            worst = max(worst, abs(v[1] - np.conj(v[0])) / max(np.linalg.norm(v), 1e-300))

        h = hull.best_convex_approximation(orbit, y, callback=check)
        out["confinement"] = {
            "target": vector_to_json(y),
            "approximation": h.to_json(),
            "projection_lower_bound": math.sqrt(2),
            "max_relative_confinement_violation": worst,
        }
    elif name == "dirichlet-shift":
        d = T.dim
        out["defects"] = [
            criteria.m_isometry_defect(T, np.eye(d)[k], 2, 2.0) for k in range(d - 2)
        ]
        if d > 12:
            out["seminorm"] = criteria.misometry_seminorm_estimate(T, ctx.x, 2, 2.0, min(50, d - 2)).to_json()
    elif name == "unimodular-diagonal":
        out["m_isometry"] = [
            criteria.is_m_isometry(T, m, 2.0, 100, seed=ctx.config.rng_seed).to_json() for m in (1, 2, 3)
        ]
    return out


_DISPATCH = {
    "classify": _cmd_classify,
    "probe": _cmd_probe,
    "approx": _cmd_approx,
    "epsilon": _cmd_epsilon,
    "defect": _cmd_defect,
    "orbit": _cmd_orbit,
    "preset": _cmd_preset,
}


def run_experiment(config: ExperimentConfig) -> Report:
    """Validate ``config`` and run the requested command.

    Configuration problems raise :class:`ConfigError`; numerical failures
    from the operations propagate unchanged.
    """
    if config.command not in _DISPATCH:
        raise ConfigError("command", f"unknown command {config.command!r}; choose from {COMMANDS}")
    start = time.perf_counter()
    ctx = _Ctx(config)
    results = _DISPATCH[config.command](ctx)
    if ctx.preset is not None:
        results["preset"] = {
            "name": ctx.preset.name,
            "source": ctx.preset.source,
            "note": ctx.preset.note,
        }
    if ctx.spec_json is not None:
        results.setdefault("operator_dim", spec_dim(spec_from_json(ctx.spec_json)))
    return Report(
        config.to_json(),
        _plain(results),
        _versions(),
        config.rng_seed,
        time.perf_counter() - start,
    )


def _plain(obj):
    """Recursively convert numpy scalars so the payload is pure JSON."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


# ---------------------------------------------------------------------------
# output


def _csv_rows(report: Report) -> tuple[list[str], list[list]]:
    res = report.results
    command = report.config["command"]
    if command == "probe" or "trace" in res:
        t = res["trace"]
        return ["n", "value", "running_max"], [
            [n, v, m] for n, (v, m) in enumerate(zip(t["values"], t["running_max"]))
        ]
    if command == "approx" and "density" in res:
        approx = res["density"]["approximations"]
        if len(approx) == 1:
            h = approx[0]
            rows = [[k, a] for k, a in enumerate(h["coefficients"])]
            rows += [["distance", h["distance"]], ["gap", h["gap"]]]
            return ["index", "coefficient"], rows
        return ["n", "residual", "gap", "iterations"], [
            [n, h["distance"], h["gap"], h["iterations"]] for n, h in enumerate(approx)
        ]
    if command == "approx" and "family" in res:
        return ["n", "best_k", "distance"], [
            [n, r["best_k"], r["distance"]] for n, r in enumerate(res["family"])
        ]
    if command == "epsilon":
        e = res["epsilon"]
        exps = [None] + e["exponents"][: len(e["steps"]) - 1]
        return ["step", "exponent", "residual_norm"], [
            [j, k, s] for j, (k, s) in enumerate(zip(exps, e["steps"]))
        ]
    if command == "defect":
        return ["sample", "defect"], [[i, d] for i, d in enumerate(res["report"]["defects"])]
    if command == "orbit":
        rows = res["rows"]
        dim = len(rows[0])
        header = ["n"] + [f"{part}_{j}" for j in range(dim) for part in ("re", "im")]
        return header, [[n] + [c for z in r for c in z] for n, r in enumerate(rows)]
    if command in ("classify", "preset"):
        cls = res["classify"]["classifier"] if command == "preset" else res["classifier"]
        rows = [["verdict", cls["verdict"]]]
        rows += [[r["criterion"], r["detail"]] for r in cls["reasons"]]
        rows += [["caveat", c] for c in cls["caveats"]]
        return ["criterion", "detail"], rows
    raise ConfigError("format", f"no CSV table for command {command!r}")


def emit_report(report: Report, fmt: str = "json", path=None) -> str:
    """Write ``report`` as JSON (full) or CSV (tables only); returns the text.

    ``path`` of ``None`` or ``"-"`` skips writing.
    """
    if fmt == "json":
        text = json.dumps(report.to_json(), indent=2, allow_nan=False) + "\n"
    elif fmt == "csv":
        header, rows = _csv_rows(report)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        raise ConfigError("format", f"unknown format {fmt!r}")
    if path not in (None, "-"):
        Path(path).write_text(text)
    return text


def load_report(path) -> Report:
    return Report.from_json(json.loads(Path(path).read_text()))
