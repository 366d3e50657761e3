"""Command-line front end.

Commands::

    kleincp verify {algebra,killing,symplecto,oscillator,coulomb,shifted} [...]
    kleincp simulate [--config run.json] [...]
    kleincp audit --csv trajectory.csv [...]
    kleincp transform --from canonical --to klein --point '{"r": 1, ...}'

Settings are resolved as built-in defaults, then the JSON config file, then
explicit flags.  ``SEED`` in the environment replaces the default seed.
Exit codes: 0 success, 1 failed verification or audit, 2 invalid input,
3 trajectory left the domain.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from importlib import resources

import jsonschema
import numpy as np

from . import charts
from .charts import CanonicalXPoint, RadialCanonicalPoint
from .dynamics import IntegratorConfig, audit, flow_canonical, flow_complex
from .generators import GeneratorId, Generators, ModelParams, as_id, duality, killing_ids
from .geometry import DomainError, KleinPoint, PoincarePoint, killing_residual, sample_points
from .models import PRESETS, AngularModel, build_system, preset_angular
from .poisson import (
    AlgebraReport,
    coulomb_algebra_check,
    oscillator_algebra_check,
    shifted_system_check,
    verify_structure_constants,
)

log = logging.getLogger("kleincp")

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_DOMAIN = 0, 1, 2, 3
SUITES = ("algebra", "killing", "symplecto", "oscillator", "coulomb", "shifted")
CHARTS = ("canonical", "klein", "x", "poincare")
DEFAULT_TOL = {
    "algebra": 1e-9,
    "killing": 1e-6,
    "symplecto": 1e-10,
    "oscillator": 1e-9,
    "coulomb": 1e-9,
    "shifted": 1e-9,
    "simulate": 1e-6,
    "audit": 1e-6,
}
DEFAULT_SAMPLES = {"killing": 50}


class UsageError(ValueError):
    """Invalid configuration or arguments (exit code 2)."""


# ---------------------------------------------------------------------------
# schemas and output


def load_schema(name: str) -> dict:
    text = resources.files("kleincp").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate_config(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, load_schema("config"))
    except jsonschema.ValidationError as e:
        raise UsageError(f"config: {e.message}") from None


def validate_report(rep: dict) -> None:
    jsonschema.validate(rep, load_schema("report"))


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the target directory and rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(rep: dict, path: str | None) -> None:
    validate_report(rep)
    text = json.dumps(rep, indent=2) + "\n"
    if path:
        write_atomic(path, text)
    sys.stdout.write(text)


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# settings


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config must be a JSON object")
    validate_config(cfg)
    return cfg


def default_seed() -> int:
    raw = os.environ.get("SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"SEED must be an integer, got {raw!r}") from None


def merged(args: argparse.Namespace) -> dict:
    """Config file overlaid with every flag the user actually set."""
    cfg = load_config(getattr(args, "config", None))
    integ = dict(cfg.get("integrator", {}))
    output = dict(cfg.get("output", {}))
    flat = {
        "N": "N", "g": "g", "omega": "omega", "gamma": "gamma", "system": "system", "model": "model",
        "samples": "samples", "tol": "tol", "seed": "seed", "columns": "columns", "shifted": "shifted",
    }  # fmt: skip
    for attr, key in flat.items():
        v = getattr(args, attr, None)
        if v is not None:
            cfg[key] = v
    nested = {"scheme": "scheme", "rel_tol": "relTol", "abs_tol": "absTol", "max_step": "maxStep",
              "t_final": "tFinal", "sample_interval": "sampleInterval", "order": "order"}  # fmt: skip
    for attr, key in nested.items():
        v = getattr(args, attr, None)
        if v is not None:
            integ[key] = v
    for attr in ("csv", "report"):
        v = getattr(args, attr, None)
        if v is not None:
            output[attr] = v
    if getattr(args, "initial", None) is not None:
        cfg["initial"] = parse_json_arg(args.initial, "--initial")
    cfg["integrator"], cfg["output"] = integ, output
    cfg.setdefault("seed", default_seed())
    validate_config(cfg)
    return cfg


def parse_json_arg(text: str, flag: str) -> dict:
    try:
        out = json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"{flag}: invalid JSON ({e})") from None
    if not isinstance(out, dict):
        raise UsageError(f"{flag}: expected a JSON object")
    return out


def parse_model(model) -> AngularModel | dict | None:
    """A preset name, ``"1,2"`` style resonance vector, or config object."""
    if model is None:
        return None
    if isinstance(model, str):
        if model in PRESETS:
            return PRESETS[model]()
        return {"n": [s.strip() for s in model.split(",") if s.strip()]}
    model = dict(model)
    if "preset" in model:
        kind = model.pop("preset")
        return preset_angular(kind, **model)
    return model


def resolve_model(cfg: dict) -> tuple[AngularModel, ModelParams]:
    model = parse_model(cfg.get("model"))
    g = cfg.get("g")
    if isinstance(model, AngularModel):
        if g is not None and abs(g - model.g) > 1e-15:
            raise UsageError(f"preset {model.label} fixes g = {model.g:g}, got g = {g:g}")
    else:
        n = (model or {}).get("n")
        N = cfg.get("N", len(n) + 1 if n else 2)
        n = n or [1] * (N - 1)
        if len(n) != N - 1:
            raise UsageError(f"resonance vector has {len(n)} entries but N = {N}")
        from fractions import Fraction

        try:
            n = tuple(Fraction(str(k)) for k in n)
        except (ValueError, ZeroDivisionError):
            raise UsageError(f"invalid resonance vector {n!r}") from None
        model = AngularModel(n, 1.0 if g is None else g)
    if "N" in cfg and cfg["N"] != model.N:
        raise UsageError(f"model has N = {model.N} but N = {cfg['N']} was requested")
    system = cfg.get("system", "conformal")
    omega = cfg.get("omega", 1.0 if system == "oscillator" else 0.0)
    gamma = cfg.get("gamma", 1.0 if system == "coulomb" else 0.0)
    return model, ModelParams(g=model.g, omega=omega, gamma=gamma)


# ---------------------------------------------------------------------------
# points


def _complex_list(v) -> np.ndarray:
    out = []
    for c in v:
        if isinstance(c, (list, tuple)):
            if len(c) != 2:
                raise UsageError("complex numbers are written as [re, im]")
            out.append(complex(c[0], c[1]))
        else:
            out.append(complex(c))
    return np.array(out, dtype=complex)


def point_from_json(d: dict, chart: str, g: float):
    try:
        if chart == "canonical":
            return RadialCanonicalPoint(d["r"], d["p_r"], d.get("phi", []), d.get("pi", []))
        if chart == "x":
            return CanonicalXPoint(d["x"], d["p_x"], d.get("phi", []), d.get("pi", []))
        if chart == "klein":
            return KleinPoint(_complex_list([d["w"]])[0], _complex_list(d.get("z", [])))
        if chart == "poincare":
            return PoincarePoint(_complex_list(d["z"]))
    except KeyError as e:
        raise UsageError(f"{chart} point is missing {e}") from None
    except (TypeError, ValueError) as e:
        if isinstance(e, DomainError):
            raise
        raise UsageError(f"invalid {chart} point: {e}") from None
    raise UsageError(f"unknown chart {chart!r}")


def to_klein(pt, g: float) -> KleinPoint:
    if isinstance(pt, KleinPoint):
        return pt
    if isinstance(pt, RadialCanonicalPoint):
        return charts.canonical_to_klein(pt, g)
    if isinstance(pt, CanonicalXPoint):
        return charts.x_to_klein(pt, g)
    return charts.poincare_to_klein(pt)


def from_klein(p: KleinPoint, chart: str, g: float):
    if chart == "klein":
        return p
    if chart == "canonical":
        return charts.klein_to_canonical(p, g)
    if chart == "x":
        return charts.klein_to_x(p, g)
    return charts.klein_to_poincare(p)


def point_to_json(pt) -> dict:
    if isinstance(pt, PoincarePoint):
        return {"z": [[float(c.real), float(c.imag)] for c in pt.z]}
    return pt.as_dict()


# ---------------------------------------------------------------------------
# verify


def _killing_report(N: int, g: float, samples: int, seed: int, tol: float) -> AlgebraReport:
    p = sample_points(N, samples, np.random.default_rng(seed))
    params = ModelParams(g=g)
    rep = AlgebraReport(tol)
    for key in killing_ids(N):
        res = killing_residual(p, g, lambda q, key=key: Generators(q, params)[key])
        rep.residuals[f"killing {key}"] = float(np.max(np.abs(res)))
    return rep


def cmd_verify(args) -> int:
    cfg = merged(args)
    suite = args.suite
    N = cfg.get("N", 2)
    g = cfg.get("g", 1.0)
    samples = cfg.get("samples", DEFAULT_SAMPLES.get(suite, 100))
    seed = cfg["seed"]
    tol = cfg.get("tol", DEFAULT_TOL[suite])
    if suite in ("oscillator", "coulomb", "shifted") and N < 2:
        raise UsageError(f"verify {suite} needs N >= 2")
    params = ModelParams(g=g, omega=cfg.get("omega", 1.0), gamma=cfg.get("gamma", 1.0))
    if suite == "algebra":
        body = verify_structure_constants(N, g, samples, seed, tol).as_dict()
    elif suite == "killing":
        body = _killing_report(N, g, samples, seed, tol).as_dict()
    elif suite == "symplecto":
        body = charts.symplectomorphism_check(N, g, samples, seed, tol).as_dict()
    else:
        check = {"oscillator": oscillator_algebra_check, "coulomb": coulomb_algebra_check,
                 "shifted": shifted_system_check}[suite]  # fmt: skip
        body = check(N, params, samples, seed, tol).as_dict()
    body.setdefault("max_residual", max((r["residual"] for r in body["relations"]), default=0.0))
    rep = {"command": "verify", "suite": suite, **body}
    rep["parameters"] = {"N": N, "g": g, "omega": params.omega, "gamma": params.gamma, "samples": samples, "seed": seed}
    emit_report(rep, cfg["output"].get("report"))
    return EXIT_OK if rep["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# simulate and audit


def _integrator(cfg: dict) -> IntegratorConfig:
    i = cfg["integrator"]
    return IntegratorConfig(
        scheme=i.get("scheme", "canonical-splitting"),
        rel_tol=i.get("relTol", 1e-10),
        abs_tol=i.get("absTol", 1e-12),
        max_step=i.get("maxStep", np.inf),
        t_final=i.get("tFinal", 1.0),
        sample_interval=i.get("sampleInterval"),
        order=i.get("order", 6),
    )


def _system(cfg: dict):
    model, params = resolve_model(cfg)
    return build_system(cfg.get("system", "conformal"), model, params, shifted=cfg.get("shifted", False))


def _extra_columns(cfg: dict, system) -> list[str]:
    if "columns" in cfg:
        return list(cfg["columns"])
    return ["K", "D"] if system.kind == "conformal" else []


def _is_real(name: str) -> bool:
    try:
        return GeneratorId.parse(name.lstrip("~")).is_real
    except (KeyError, ValueError):
        return False


def column_name(name: str) -> str:
    """Integral names with ``;`` separating indices so headers need no quoting."""
    return name.replace(",", ";")


def trajectory_csv(traj, system, extra: list[str]) -> str:
    """CSV text with LF line endings and 17 significant digits."""
    klein = KleinPoint(traj.klein.w, traj.klein.z)  # re-validates every row
    c = traj.canonical
    n = system.N - 1
    G = Generators(klein, system.params)
    columns: dict[str, np.ndarray] = {"t": traj.t, "r": c.r, "p_r": c.p_r}
    for a in range(n):
        columns[f"phi_{a + 1}"] = c.phi[:, a]
    for a in range(n):
        columns[f"pi_{a + 1}"] = c.pi[:, a]
    columns["Re_w"], columns["Im_w"] = klein.w.real, klein.w.imag
    for a in range(n):
        columns[f"Re_z{a + 1}"], columns[f"Im_z{a + 1}"] = klein.z[:, a].real, klein.z[:, a].imag
    columns["E"] = system.hamiltonian(G).value.real
    values = dict(traj.values)
    for name in extra:
        values.setdefault(name, G[as_id(name)].value)
    for key, v in values.items():
        name = column_name(key)
        if _is_real(key):
            columns[name] = np.real(v)
        else:
            columns[f"Re_{name}"], columns[f"Im_{name}"] = np.real(v), np.imag(v)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns.keys())
    for row in zip(*columns.values()):
        writer.writerow(fmt(x) for x in row)
    return buf.getvalue()


def cmd_simulate(args) -> int:
    cfg = merged(args)
    system = _system(cfg)
    icfg = _integrator(cfg)
    init = cfg.get("initial", {"chart": "canonical", "r": 1.0, "p_r": 0.0})
    init = dict(init)
    chart = init.pop("chart", "canonical")
    if chart in ("canonical", "x") and system.N > 1:
        init.setdefault("phi", [0.0] * (system.N - 1))
        init.setdefault("pi", [0.0] * (system.N - 1))
    g = system.params.g
    p0 = to_klein(point_from_json(init, chart, g), g)
    if p0.N != system.N:
        raise UsageError(f"initial point has N = {p0.N}, system has N = {system.N}")
    if icfg.scheme == "canonical-splitting":
        traj = flow_canonical(system, charts.klein_to_canonical(p0, g), icfg)
    else:
        traj = flow_complex(system, p0, system.params, icfg)
    extra = _extra_columns(cfg, system)
    text = trajectory_csv(traj, system, extra)
    path = cfg["output"].get("csv", "trajectory.csv")
    write_atomic(path, text)
    tol = cfg.get("tol", DEFAULT_TOL["simulate"])
    drift = audit(traj)
    rep = {
        "command": "simulate",
        "passed": traj.status == "ok" and drift.passed(tol),
        "status": traj.status,
        "tol": tol,
        **drift.as_dict(),
        "parameters": _run_parameters(cfg, system, icfg, len(traj)),
    }
    emit_report(rep, cfg["output"].get("report"))
    if traj.status == "domain_exit":
        return EXIT_DOMAIN
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def _run_parameters(cfg, system, icfg, rows) -> dict:
    return {
        "system": system.kind,
        "shifted": system.shifted,
        "model": system.model.as_dict(),
        "g": system.params.g,
        "omega": system.params.omega,
        "gamma": system.params.gamma,
        "scheme": icfg.scheme,
        "relTol": icfg.rel_tol,
        "absTol": icfg.abs_tol,
        "tFinal": icfg.t_final,
        "rows": rows,
        "seed": cfg["seed"],
    }


def read_trajectory(path: str, N: int) -> tuple[np.ndarray, KleinPoint]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e}") from None
    if not rows:
        raise UsageError(f"{path} has no data rows")
    try:
        col = lambda k: np.array([float(r[k]) for r in rows])  # noqa: E731
        w = col("Re_w") + 1j * col("Im_w")
        z = np.stack([col(f"Re_z{a}") + 1j * col(f"Im_z{a}") for a in range(1, N)], axis=-1) if N > 1 else ()
        return col("t"), KleinPoint(w, z)
    except KeyError as e:
        raise UsageError(f"{path} lacks column {e}") from None


def cmd_audit(args) -> int:
    cfg = merged(args)
    system = _system(cfg)
    path = cfg["output"].get("csv")
    if not path:
        raise UsageError("audit needs --csv")
    t, klein = read_trajectory(path, system.N)
    from .dynamics import Trajectory

    traj = Trajectory("klein", t, klein, charts.klein_to_canonical(klein, system.params.g), system.params.g)
    tol = cfg.get("tol", DEFAULT_TOL["audit"])
    drift = audit(traj, system.integrals, system.params)
    rep = {"command": "audit", "passed": drift.passed(tol), "tol": tol, **drift.as_dict()}
    emit_report(rep, cfg["output"].get("report"))
    return EXIT_OK if rep["passed"] else EXIT_FAIL


# ---------------------------------------------------------------------------
# transform


def _echo(p: KleinPoint, g: float) -> dict:
    G = Generators(p, ModelParams(g=g))
    return {"H": float(G.value("H").real), "K": float(G.value("K").real)}


def cmd_transform(args) -> int:
    g = 1.0 if args.g is None else args.g
    if not g > 0:
        raise UsageError("g must be positive")
    pt = point_from_json(parse_json_arg(args.point, "--point"), args.source, g)
    p = to_klein(pt, g)
    echo = {"source": _echo(p, g)}
    if args.dual:
        try:
            phase = complex(args.phase.replace(" ", ""))
        except ValueError:
            raise UsageError(f"invalid phase {args.phase!r}") from None
        p = duality(p, phase)
        echo["dual"] = _echo(p, g)
    out = from_klein(p, args.target, g)
    rep = {"command": "transform", "passed": True, "point": {"chart": args.target, **point_to_json(out)}, "echo": echo}
    emit_report(rep, None)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _columns(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kleincp", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        p.add_argument("--config", help="JSON config; flags override its keys")
        p.add_argument("--n", dest="N", type=int, help="complex dimension N")
        p.add_argument("--g", type=float, help="coupling g > 0")
        p.add_argument("--omega", type=float, help="oscillator frequency")
        p.add_argument("--gamma", type=float, help="Coulomb coupling")
        p.add_argument("--seed", type=int, help="random seed (default: $SEED or 0)")
        p.add_argument("--tol", type=float, help="pass/fail tolerance")
        p.add_argument("--report", help="also write the JSON report here")
        if model:
            p.add_argument("--system", choices=("conformal", "oscillator", "coulomb"))
            p.add_argument("--model", help="preset name or resonance vector such as 1,2")
            p.add_argument("--shifted", action="store_true", default=None, help="use the g-shifted system")

    v = sub.add_parser("verify", help="check algebraic identities at random points")
    v.add_argument("suite", choices=SUITES)
    common(v, model=False)
    v.add_argument("--samples", type=int, help="number of random points")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("simulate", help="integrate a flow and write a CSV trajectory")
    common(s)
    s.add_argument("--initial", help='chart-tagged JSON point, e.g. {"chart": "canonical", "r": 1, "p_r": 0}')
    s.add_argument("--scheme", choices=("adaptive-complex", "canonical-splitting"))
    s.add_argument("--rel-tol", type=float)
    s.add_argument("--abs-tol", type=float)
    s.add_argument("--max-step", type=float)
    s.add_argument("--t-final", type=float)
    s.add_argument("--sample-interval", type=float)
    s.add_argument("--order", type=int, choices=(2, 4, 6), help="order of the splitting composition")
    s.add_argument("--columns", type=_columns, help="extra generator columns, e.g. K,D")
    s.add_argument("--csv", help="output CSV path (default trajectory.csv)")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("audit", help="recompute integral drift along a CSV trajectory")
    common(a)
    a.add_argument("--csv", help="trajectory CSV written by simulate")
    a.set_defaults(func=cmd_audit)

    t = sub.add_parser("transform", help="map a point between charts")
    t.add_argument("--from", dest="source", choices=CHARTS, required=True)
    t.add_argument("--to", dest="target", choices=CHARTS, required=True)
    t.add_argument("--point", required=True, help="JSON point in the source chart")
    t.add_argument("--g", type=float)
    t.add_argument("--dual", action="store_true", help="apply the duality map before the target chart")
    t.add_argument("--phase", default="1j", help="phase c of the duality z -> c z / w (default 1j)")
    t.set_defaults(func=cmd_transform)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except (UsageError, DomainError, ValueError, KeyError, TypeError) as e:
        print(f"kleincp: error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
