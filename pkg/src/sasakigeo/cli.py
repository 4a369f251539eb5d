"""Command-line front end: ``sasakigeo {verify,scan,geodesic,report}``.

Exit status: 0 pass, 1 tolerance failure, 2 configuration error, 3 numeric
failure. Every run is driven by one JSON config holding exactly one of the
``verify``, ``scan`` or ``geodesic`` blocks; unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import base_manifold as bm
from . import conformal_fiber as cf
from . import sphere_bundle as sb
from .coordinate_oracle import InducedChart, OracleAtPoint
from .errors import (
    ConfigurationError,
    DivergenceError,
    DomainError,
    GeometryError,
    NumericError,
    PreconditionError,
    RankError,
)
from .parallel import ordered_map, worker_count
from .sasaki_core import LocalSasaki, SplitTangentVector, TangentBundlePoint, WeightedSasakiMetric
from .serialize import write_csv, write_json

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_SEED = 42
COMMANDS = ("verify", "scan", "geodesic")

NUMERIC_ERRORS = (NumericError, DomainError, GeometryError, RankError, PreconditionError, FloatingPointError)

_number = {"type": "number"}
_positive = {"type": "number", "exclusiveMinimum": 0}
_vector = {"type": "array", "items": _number, "minItems": 1}
_grid = {
    "oneOf": [
        {"type": "array", "items": _positive, "minItems": 1},
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["start", "stop", "step"],
            "properties": {"start": _positive, "stop": _positive, "step": _positive},
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["start", "stop", "num"],
            "properties": {"start": _positive, "stop": _positive, "num": {"type": "integer", "minimum": 1}},
        },
    ]
}

CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "definitions": {
        "manifold": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["euclidean", "constant_curvature", "product", "perturbed"]},
                "dim": {"type": "integer", "minimum": 1},
                "curvature_constant": _number,
                "factors": {"type": "array", "items": {"$ref": "#/definitions/manifold"}},
                "bump": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "amplitude": _number,
                        "center": {"oneOf": [_vector, {"type": "null"}]},
                        "width": _positive,
                    },
                },
            },
        },
        "phi2": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["linear", "sinusoidal"]},
                "coeffs": _vector,
                "offset": _number,
                "amplitude": _number,
            },
        },
    },
    "type": "object",
    "additionalProperties": False,
    "required": ["manifold", "weights"],
    "properties": {
        "manifold": {"$ref": "#/definitions/manifold"},
        "weights": {
            "type": "object",
            "additionalProperties": False,
            "required": ["f1"],
            "properties": {"f1": _positive, "f2": _positive, "phi2": {"$ref": "#/definitions/phi2"}},
            "oneOf": [{"required": ["f2"]}, {"required": ["phi2"]}],
        },
        "radius": _positive,
        "seed": {"type": "integer", "minimum": 0},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"path": {"type": "string", "minLength": 1}, "format": {"enum": ["json", "csv"]}},
        },
        "verify": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "samples": {"type": "integer", "minimum": 1},
                "tolerances": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "curvature": _positive,
                        "ricci": _positive,
                        "scalar": _positive,
                        "connection": _positive,
                        "srm_ricci": _positive,
                        "srm_scalar": _positive,
                    },
                },
            },
        },
        "scan": {
            "type": "object",
            "additionalProperties": False,
            "required": ["f1", "f2", "r"],
            "properties": {"f1": _grid, "f2": _grid, "r": _grid, "samples": {"type": "integer", "minimum": 1}},
        },
        "geodesic": {
            "type": "object",
            "additionalProperties": False,
            "required": ["x0", "u0", "xdot0", "udot0", "T", "dt"],
            "properties": {
                "x0": _vector,
                "u0": _vector,
                "xdot0": _vector,
                "udot0": _vector,
                "T": _positive,
                "dt": _positive,
                "convergence_study": {"type": "boolean"},
                "study_dt": _positive,
                "drift_tolerance": _positive,
            },
        },
    },
    "oneOf": [
        {"required": ["verify"], "not": {"anyOf": [{"required": ["scan"]}, {"required": ["geodesic"]}]}},
        {"required": ["scan"], "not": {"anyOf": [{"required": ["verify"]}, {"required": ["geodesic"]}]}},
        {"required": ["geodesic"], "not": {"anyOf": [{"required": ["verify"]}, {"required": ["scan"]}]}},
    ],
}


# -- configuration -------------------------------------------------------------------


def load_config(path, command: str) -> dict:
    """Read, validate and default a config file for ``command``."""
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
    blocks = [k for k in COMMANDS if isinstance(cfg, dict) and k in cfg]
    if len(blocks) != 1:
        raise ConfigurationError(f"exactly one of {', '.join(COMMANDS)} must be present, found {blocks or 'none'}")
    try:
        jsonschema.Draft7Validator(CONFIG_SCHEMA).validate(cfg)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"config error at {where}: {exc.message}") from exc
    if command not in cfg:
        raise ConfigurationError(f"the '{command}' command needs a '{command}' block in the config")
    cfg.setdefault("seed", DEFAULT_SEED)
    worker_count()  # surfaces a malformed thread setting as a config error
    return cfg


def expand_grid(spec) -> np.ndarray:
    if isinstance(spec, list):
        return np.asarray(spec, dtype=float)
    if "num" in spec:
        return np.round(np.linspace(spec["start"], spec["stop"], spec["num"]), 12)
    if spec["stop"] < spec["start"]:
        raise ConfigurationError("grid stop must not precede start")
    k = int(math.floor((spec["stop"] - spec["start"]) / spec["step"] + 1e-9))
    return np.round(spec["start"] + spec["step"] * np.arange(k + 1), 12)


def build_phi2(spec: dict, dim: int, f1: float) -> cf.ConformalFiberMetric:
    coeffs = np.zeros(dim)
    given = np.asarray(spec.get("coeffs", [0.0]), dtype=float)
    if given.size > dim:
        raise ConfigurationError(f"phi2 has {given.size} coefficients for a {dim}-dimensional base")
    coeffs[: given.size] = given
    offset = float(spec.get("offset", 0.0))
    if spec["kind"] == "linear":
        return cf.ConformalFiberMetric.linear(dim, f1, coeffs, offset)
    amp = float(spec.get("amplitude", 1.0))
    return cf.ConformalFiberMetric(
        dim,
        f1,
        phi2=lambda x: offset + amp * math.sin(float(coeffs @ x)),
        grad_phi2=lambda x: amp * math.cos(float(coeffs @ x)) * coeffs,
        hess_phi2=lambda x: -amp * math.sin(float(coeffs @ x)) * np.outer(coeffs, coeffs),
    )


def _conformal_from_weights(cfg: dict, M: bm.ChartedManifold) -> cf.ConformalFiberMetric:
    if not M.is_flat or M.label != f"euclidean({M.dim})":
        raise ConfigurationError("conformal fibre weights need a euclidean base")
    w = cfg["weights"]
    if "phi2" in w:
        return build_phi2(w["phi2"], M.dim, float(w["f1"]))
    return cf.ConformalFiberMetric.linear(M.dim, float(w["f1"]), [0.0], 0.5 * math.log(float(w["f2"])))


def _output(cfg: dict, default_name: str, default_format: str):
    out = cfg.get("output", {})
    return Path(out.get("path", default_name)), out.get("format", default_format)


def _relative(f: float, o: float) -> float:
    return abs(f - o) / max(1.0, abs(o))


# -- verify ------------------------------------------------------------------------------


def _tm_sample(M, f1, f2, draw, radius=None):
    x, u, vecs = draw
    G = WeightedSasakiMetric(M, f1, f2)
    P = TangentBundlePoint(x, u)
    L = LocalSasaki(G, P)
    o = OracleAtPoint(InducedChart(M, f1, f2), x, u)
    X, Y, Z, W, A, B = vecs
    out = [
        ("curvature", L.curvature_RG4(X, Y, Z, W), o.curvature4(X, Y, Z, W)),
        ("ricci", L.ricci_G(A, B), o.ricci_form(A, B)),
        ("scalar", L.scalar_G(), o.scalar),
    ]
    if radius is not None:
        # sphere bundle through |u| = radius: closed forms against the Gauss-equation trace
        Q = TangentBundlePoint(x, radius * u / np.sqrt(u @ M.metric_at(x) @ u))
        S = sb.LocalSphereBundle(sb.SphereBundleConfig(G, radius), Q)
        F = S.tangent_frame()
        TA = sum((c * E for c, E in zip(A.as_array()[: len(F)], F)), SplitTangentVector.zero(M.dim))
        TB = sum((c * E for c, E in zip(B.as_array()[: len(F)], F)), SplitTangentVector.zero(M.dim))
        out.append(("srm_ricci", S.ricci(TA, TB), S.ricci(TA, TB, "trace")))
        out.append(("srm_scalar", S.scalar(), S.scalar("trace")))
    return out


def _conformal_sample(Gc, draw):
    x, u, vecs = draw
    P = TangentBundlePoint(x, u)
    o = OracleAtPoint(InducedChart(Gc.base, Gc.f1, Gc.f2), x, u)
    X, Y, Z, W, A, B = vecs
    conn = cf.connection_conformal(Gc, P, A, B).as_array()
    conn_err = float(np.max(np.abs(conn - o.connection(A, B))))
    return [
        ("curvature", cf.curvature_conformal4(Gc, P, X, Y, Z, W), o.curvature4(X, Y, Z, W)),
        # connection is compared componentwise; the record keeps the worst component
        ("connection", conn_err, 0.0),
    ]


def run_verify(cfg: dict, samples: Optional[int] = None, tol: Optional[float] = None):
    """Formula versus coordinate oracle at seeded random points.

    Returns ``(report, exit_code)``.
    """
    M = bm.construct_zoo(bm.ZooSpec.from_dict(cfg["manifold"]))
    block = cfg["verify"]
    n = samples if samples is not None else block.get("samples", 20)
    if n < 1:
        raise ConfigurationError("need at least one sample")
    rng = np.random.default_rng(cfg["seed"])
    conformal = "phi2" in cfg["weights"]
    if conformal:
        Gc = _conformal_from_weights(cfg, M)
        quantities = ["curvature", "connection"]
    else:
        f1, f2 = float(cfg["weights"]["f1"]), float(cfg["weights"]["f2"])
        quantities = ["curvature", "ricci", "scalar"]
        radius = cfg.get("radius")
        if radius is not None:
            quantities += ["srm_ricci", "srm_scalar"]
    default_tol = 1e-5 if M.has_analytic else 5e-3
    tols = {q: float(block.get("tolerances", {}).get(q, default_tol)) for q in quantities}
    if tol is not None:
        tols = {q: float(tol) for q in quantities}

    m = M.dim
    draws = []
    for _ in range(n):
        x = M.sample_point(rng, margin=0.05)
        u = rng.standard_normal(m)
        vecs = [SplitTangentVector(rng.standard_normal(m), rng.standard_normal(m)) for _ in range(6)]
        draws.append((x, u, vecs))

    def work(draw):
        try:
            return _conformal_sample(Gc, draw) if conformal else _tm_sample(M, f1, f2, draw, radius)
        except NUMERIC_ERRORS as exc:
            return exc

    results = ordered_map(work, draws)
    records, error = [], None
    for i, (res, (x, u, _)) in enumerate(zip(results, draws)):
        if isinstance(res, Exception):
            error = f"sample {i}: {type(res).__name__}: {res}"
            break
        for q, f, o in res:
            rel = f if q == "connection" else _relative(f, o)
            if not (math.isfinite(f) and math.isfinite(o)):
                error = f"sample {i}: non-finite {q}"
                break
            records.append(
                {
                    "sample": i,
                    "x": x.tolist(),
                    "u": u.tolist(),
                    "quantity": q,
                    "formula": float(f),
                    "oracle": float(o),
                    "abs_residual": abs(float(f) - float(o)),
                    "rel_residual": float(rel),
                }
            )
        if error:
            break

    worst = {q: max((r["rel_residual"] for r in records if r["quantity"] == q), default=0.0) for q in quantities}
    passed = error is None and all(worst[q] <= tols[q] for q in quantities)
    report = {
        "command": "verify",
        "manifold": cfg["manifold"],
        "weights": cfg["weights"],
        "seed": cfg["seed"],
        "samples": n,
        "records": records,
        "summary": {"max_residual": worst, "tolerance": tols, "pass": passed},
    }
    if error is not None:
        report["error"] = error
        return report, EXIT_NUMERIC
    return report, EXIT_PASS if passed else EXIT_FAIL


def _write_verify(report: dict, path: Path, fmt: str) -> None:
    if fmt == "json":
        write_json(path, report)
        return
    m = len(report["records"][0]["x"]) if report["records"] else 0
    header = (
        ["sample", "quantity"]
        + [f"x{i + 1}" for i in range(m)]
        + [f"u{i + 1}" for i in range(m)]
        + ["formula", "oracle", "abs_residual", "rel_residual"]
    )
    rows = (
        [r["sample"], r["quantity"], *r["x"], *r["u"], r["formula"], r["oracle"], r["abs_residual"], r["rel_residual"]]
        for r in report["records"]
    )
    write_csv(path, header, rows)
    summary = {k: v for k, v in report.items() if k != "records"}
    write_json(path.with_suffix(".summary.json"), summary)


# -- scan -------------------------------------------------------------------------------------


def run_scan(cfg: dict) -> sb.ScanReport:
    M = bm.construct_zoo(bm.ZooSpec.from_dict(cfg["manifold"]))
    if M.dim < 2:
        raise ConfigurationError("scans need a base of dimension at least 2")
    block = cfg["scan"]
    rng = np.random.default_rng(cfg["seed"])
    samples = []
    for _ in range(block.get("samples", 20)):
        P = sb.sample_bundle_point(M, 1.0, rng)
        samples.append((P.x, P.u))
    report = sb.scan_positive_scalar(
        M, expand_grid(block["f1"]), expand_grid(block["f2"]), expand_grid(block["r"]), samples
    )
    report.summary["manifold"] = cfg["manifold"]
    report.summary["seed"] = cfg["seed"]
    return report


# -- geodesic -------------------------------------------------------------------------------------


def run_geodesic(cfg: dict, path: Path):
    """Integrate, write the trajectory CSV next to a JSON summary; return ``(summary, exit_code)``."""
    M = bm.construct_zoo(bm.ZooSpec.from_dict(cfg["manifold"]))
    Gc = _conformal_from_weights(cfg, M)
    block = cfg["geodesic"]
    parts = [np.asarray(block[k], dtype=float) for k in ("x0", "u0", "xdot0", "udot0")]
    if any(p.shape != (M.dim,) for p in parts):
        raise ConfigurationError(f"initial state vectors must have {M.dim} components")
    s0 = cf.BundleState(*parts)
    T, dt = float(block["T"]), float(block["dt"])
    summary = {"command": "geodesic", "manifold": cfg["manifold"], "weights": cfg["weights"], "T": T, "dt": dt}
    try:
        traj = cf.integrate_geodesic(Gc, s0, T, dt)
    except DivergenceError as exc:
        if exc.partial is not None and len(exc.partial):
            cf.write_trajectory_csv(path, Gc, exc.partial)
        summary["error"] = str(exc)
        write_json(path.with_suffix(".json"), summary)
        return summary, EXIT_NUMERIC
    cf.write_trajectory_csv(path, Gc, traj)
    speeds = traj.g_speed(Gc)
    steps = np.diff(speeds)
    if np.all(steps == 0):
        trend = "constant"
    elif np.all(steps >= 0):
        trend = "non-decreasing"
    elif np.all(steps <= 0):
        trend = "non-increasing"
    else:
        trend = "mixed"
    summary.update(
        {
            "states": len(traj),
            "initial_speed": float(speeds[0]),
            "relative_speed_drift": cf.speed_drift(Gc, traj),
            "speed_trend": trend,
        }
    )
    if block.get("convergence_study"):
        # a fine dt sits in roundoff, so the study has its own base step
        study_dt = float(block.get("study_dt", max(dt, T / 50)))
        summary["study_dt"] = study_dt
        summary["observed_order"] = cf.convergence_order(Gc, s0, T, study_dt)
    code = EXIT_PASS
    if "drift_tolerance" in block:
        summary["drift_tolerance"] = float(block["drift_tolerance"])
        if summary["relative_speed_drift"] > block["drift_tolerance"]:
            code = EXIT_FAIL
    write_json(path.with_suffix(".json"), summary)
    return summary, code


# -- report -----------------------------------------------------------------------------------------


def _table(header, rows) -> str:
    cells = [[str(h) for h in header]] + [[c if isinstance(c, str) else _short(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _short(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, int):
        return str(v)
    if v is None:
        return "-"
    return f"{float(v):.6g}"


def render_report(path: Path) -> str:
    if not path.exists():
        raise ConfigurationError(f"no such input file: {path}")
    if path.suffix == ".json":
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path} is not valid JSON: {exc}") from exc
        return _render_json(data)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) <= 1:
        return "no data"
    return _render_csv(rows[0], rows[1:])


def _render_json(data: dict) -> str:
    if "summary" in data and "max_residual" in data.get("summary", {}):
        s = data["summary"]
        rows = [(q, s["max_residual"][q], s["tolerance"][q], s["max_residual"][q] <= s["tolerance"][q]) for q in s["max_residual"]]
        out = _table(["quantity", "max_residual", "tolerance", "pass"], rows)
        verdict = "PASS" if s["pass"] else "FAIL"
        if "error" in data:
            verdict += f" ({data['error']})"
        return out + f"\n\noverall: {verdict}"
    if "thresholds" in data:
        lines = [f"dimension {data['dimension']}, min scalar {_short(data['min_scalar'])}"]
        if data.get("note"):
            lines.append(data["note"])
        if data["thresholds"]:
            rows = [
                (
                    t["axis"],
                    ", ".join(f"{k}={_short(v)}" for k, v in sorted(t["fixed"].items())),
                    f"[{_short(t['bracket'][0])}, {_short(t['bracket'][1])}]",
                    t["refined"],
                    t["becomes"],
                )
                for t in data["thresholds"]
            ]
            lines.append(_table(["axis", "fixed", "bracket", "refined", "becomes"], rows))
        elif data.get("message"):
            lines.append(data["message"])
        return "\n".join(lines)
    rows = [(k, v if not isinstance(v, (dict, list)) else json.dumps(v, sort_keys=True)) for k, v in sorted(data.items())]
    return _table(["key", "value"], rows)


def _render_csv(header, rows) -> str:
    if header[:4] == ["f1", "f2", "r", "min_scalar"]:
        recs = sorted(((float(r[2]), float(r[0]), float(r[1]), float(r[3]), r[-1] == "1") for r in rows))
        table = _table(["r", "f1", "f2", "min_scalar", "positive"], recs)
        # frontier: smallest r in each (f1, f2) line after which the sign flips
        flips, last = [], {}
        for r, f1, f2, v, pos in recs:
            key = (f1, f2)
            if key in last and last[key] != pos:
                flips.append((f1, f2, r, "positive" if pos else "non-positive"))
            last[key] = pos
        if flips:
            table += "\n\nfrontier\n" + _table(["f1", "f2", "r", "becomes"], flips)
        return table
    if header and header[0] == "t" and header[-1] == "g_speed":
        speeds = np.array([float(r[-1]) for r in rows])
        drift = float(np.max(np.abs(speeds - speeds[0])) / (speeds[0] if speeds[0] > 0 else 1.0))
        return _table(
            ["states", "t_end", "initial_speed", "relative_speed_drift"],
            [(len(rows), float(rows[-1][0]), float(speeds[0]), drift)],
        )
    if header[:2] == ["sample", "quantity"]:
        worst = {}
        for r in rows:
            worst[r[1]] = max(worst.get(r[1], 0.0), float(r[-1]))
        return _table(["quantity", "max_residual"], sorted(worst.items()))
    return _table(header, rows)


# -- entry point --------------------------------------------------------------------------------------


def _guard_outputs(cfg: dict, command: str, config_path: Path) -> None:
    defaults = {"verify": ("verify_report.json", "json"), "scan": ("scan.csv", "csv"), "geodesic": ("geodesic.csv", "csv")}
    path, fmt = _output(cfg, *defaults[command])
    written = {path}
    if command in ("scan", "geodesic"):
        written.add(path.with_suffix(".json"))
    elif fmt == "csv":
        written.add(path.with_suffix(".summary.json"))
    if any(p.resolve() == config_path.resolve() for p in written):
        raise ConfigurationError(f"output would overwrite the config file {config_path}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sasakigeo", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("verify", help="compare closed-form curvature with the coordinate oracle")
    v.add_argument("--config", required=True)
    v.add_argument("--samples", type=int)
    v.add_argument("--tol", type=float, help="one tolerance for every quantity")
    s = sub.add_parser("scan", help="scalar curvature of the sphere bundle over a parameter grid")
    s.add_argument("--config", required=True)
    g = sub.add_parser("geodesic", help="integrate a geodesic of the conformal fibre metric")
    g.add_argument("--config", required=True)
    r = sub.add_parser("report", help="render a stored JSON or CSV output as text")
    r.add_argument("--input", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            print(render_report(Path(args.input)))
            return EXIT_PASS
        cfg = load_config(args.config, args.command)
        _guard_outputs(cfg, args.command, Path(args.config))
        if args.command == "verify":
            if args.samples is not None and args.samples < 1:
                raise ConfigurationError("--samples must be at least 1")
            report, code = run_verify(cfg, args.samples, args.tol)
            path, fmt = _output(cfg, "verify_report.json", "json")
            _write_verify(report, path, fmt)
            print(_render_json(report))
            return code
        if args.command == "scan":
            path, _ = _output(cfg, "scan.csv", "csv")
            report = run_scan(cfg)
            report.write_csv(path)
            report.write_json(path.with_suffix(".json"))
            print(_render_json(report.summary))
            return EXIT_PASS
        path, _ = _output(cfg, "geodesic.csv", "csv")
        summary, code = run_geodesic(cfg, path)
        print(_render_json(summary))
        return code
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
