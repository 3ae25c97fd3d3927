"""Command-line front end.

Subcommands: ``constants``, ``fiber``, ``extremal``, ``nehari``, ``phase`` and
``bnlimit``. Options can also come from a JSON file given with
``--config``; explicit flags win over the file. Exit status is 0 on
success, 2 when a result carries a diagnostic flag, and 1 on invalid
input. Every failure prints a JSON error record.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from .discretize import make_mesh
from .exceptions import KirchhoffError, NehariEmptyError
from .fiber import (
    FiberInput,
    ProblemParams,
    c0_level,
    classify_fiber,
    sigma_lower_bound,
    sobolev_constant,
)
from .solvers import (
    PHASE_COLUMNS,
    PhaseCell,
    continuation_b_to_zero,
    extremal_lambda,
    extremal_lambda0,
    global_minimize,
    mesh_thresholds,
    nehari_minus_multistart,
    phase_diagram,
    second_solution_gate,
)

EXIT_OK, EXIT_INVALID, EXIT_FLAGGED = 0, 1, 2

DEFAULTS = {
    "json": False,
    "out": None,
    "seed": 0,
    "mesh_size": 256,
    "grading": "uniform",
    "workers": 1,
    "n_starts": 8,
    "N": 5,
    "a": 1.0,
    "b": 0.0,
    "lam": 0.0,
    "p": 3.0,
}

COMMAND_DEFAULTS = {
    "constants": {"a_values": "0.5,1,2"},
    "fiber": {"A": 1.0, "C": 1.0, "P": 1.0, "samples": 400, "samples_out": None},
    "extremal": {"which": "both", "direction_out": None},
    "nehari": {"gate": "p0", "minimizer_out": None},
    "phase": {"a_range": "0.5:2:4", "b_range": "0.0001:0.001:4", "lambda_policy": "sampled"},
    "bnlimit": {"b_seq": "0.0004,0.0002,0.0001,0.00004,0.00002,0", "lam": 1.0, "minimizer_out": None},
}


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


@dataclass
class RunConfig:
    """Resolved options for one invocation."""

    command: str
    options: dict

    def __getattr__(self, name):
        try:
            return self.options[name]
        except KeyError:
            raise AttributeError(name) from None

    def params(self) -> ProblemParams:
        return ProblemParams(int(self.N), float(self.a), float(self.b), float(self.lam), float(self.p))

    def mesh(self):
        return make_mesh(int(self.N), int(self.mesh_size), self.grading)


# --------------------------------------------------------------------------
# formatting helpers


def fmt(x) -> str:
    """CSV cell text: floats with 17 significant digits, booleans lowercase."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def to_csv(columns, rows) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for row in rows:
        wr.writerow([fmt(v) for v in row])
    return buf.getvalue()


def parse_cell(text: str):
    """Inverse of :func:`fmt` for the scalar types this module writes."""
    if text == "":
        return None
    if text in ("true", "false"):
        return text == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(text: str) -> list[dict]:
    return [{k: parse_cell(v) for k, v in row.items()} for row in csv.DictReader(io.StringIO(text))]


def read_phase_csv(text: str) -> list[PhaseCell]:
    cells = []
    for row in read_csv(text):
        vals = {c: row[c] for c in PHASE_COLUMNS}
        vals["a"], vals["b"] = float(vals["a"]), float(vals["b"])
        vals["hyperbola_value"] = float(vals["hyperbola_value"])
        vals["min_inf_phi0"] = float(vals["min_inf_phi0"])
        vals["error"] = vals["error"] or ""
        cells.append(PhaseCell(**vals))
    return cells


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def parse_range(spec: str) -> np.ndarray:
    """``lo:hi:count`` to ``count`` evenly spaced values (inclusive)."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise InputError(f"range must look like lo:hi:count, got {spec!r}")
    lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    if n < 1:
        raise InputError("range count must be positive")
    return np.linspace(lo, hi, n)


def parse_list(spec) -> list[float]:
    if isinstance(spec, (list, tuple)):
        return [float(x) for x in spec]
    return [float(x) for x in str(spec).split(",") if x.strip()]


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


@dataclass
class Outcome:
    """What a command produced: main text for stdout/--out, extra files, exit code."""

    text: str
    code: int = EXIT_OK
    files: tuple = ()


# --------------------------------------------------------------------------
# commands


def cmd_constants(cfg: RunConfig) -> Outcome:
    N = int(cfg.N)
    if N <= 4:
        raise InputError(f"constants need N > 4, got {N}")
    c = sobolev_constant(N)
    table = []
    for a in parse_list(cfg.a_values):
        if not a > 0:
            raise InputError("a values must be positive")
        b1, b2 = c.hyperbola_b(a)
        table.append({"a": a, "b_C1": b1, "b_C2": b2})
    record = {
        "N": N,
        "S_N": c.S_N,
        "omega_N": c.omega_N,
        "C1": c.C1,
        "C2": c.C2,
        "ratio": c.ratio,
        "hyperbolas": table,
    }
    if cfg.json:
        return Outcome(to_json(record))
    lines = [
        f"N        {N}",
        f"S_N      {fmt(c.S_N)}",
        f"omega_N  {fmt(c.omega_N)}",
        f"C1       {fmt(c.C1)}",
        f"C2       {fmt(c.C2)}",
        f"C1/C2    {fmt(c.ratio)}",
        "",
    ]
    lines.append(to_csv(["a", "b_C1", "b_C2", "ratio"], [(r["a"], r["b_C1"], r["b_C2"], r["b_C1"] / r["b_C2"]) for r in table]))
    return Outcome("\n".join(lines))


def fiber_samples(inp: FiberInput, t_ref: float, count: int) -> str:
    fm = inp.fiber()
    ts = np.geomspace(1e-3 * t_ref, 1e3 * t_ref, count)
    return to_csv(["t", "psi", "dpsi"], [(t, fm.psi(t), fm.dpsi(t)) for t in ts])


def cmd_fiber(cfg: RunConfig) -> Outcome:
    inp = FiberInput(float(cfg.A), float(cfg.C), float(cfg.P), cfg.params())
    rep = classify_fiber(inp)
    record = {"input": {"A": inp.A, "C": inp.C, "P": inp.P}, "report": rep.to_dict()}
    files = ()
    if cfg.samples_out:
        t_ref = rep.t_star or rep.t_minus or 1.0
        files = ((cfg.samples_out, fiber_samples(inp, t_ref, int(cfg.samples))),)
    if cfg.json:
        return Outcome(to_json(record), files=files)
    lines = [f"{'class':<14}{rep.fiber_class.value}"]
    for key in ("t_minus", "t_plus", "t_degenerate", "t_star", "energy_minus", "energy_plus", "margin"):
        val = getattr(rep, key)
        if val is not None:
            lines.append(f"{key:<14}{fmt(val)}")
    return Outcome("\n".join(lines) + "\n", files=files)


def cmd_extremal(cfg: RunConfig) -> Outcome:
    params, mesh = cfg.params(), cfg.mesh()
    S_h, C1h, C2h = mesh_thresholds(mesh)
    record = {"params": _params_dict(params), "mesh": _mesh_dict(cfg), "S_h": S_h, "C1_h": C1h, "C2_h": C2h}
    files = []
    code = EXIT_OK
    if cfg.which in ("lambda0", "both"):
        r0 = extremal_lambda0(params, mesh, int(cfg.n_starts), int(cfg.seed))
        record["lambda0_star_upper"] = r0.value
        record["lambda0_search"] = r0.to_dict()
        code = max(code, EXIT_OK if r0.converged else EXIT_FLAGGED)
        if cfg.direction_out:
            files.append((cfg.direction_out, r0.direction.to_csv()))
    if cfg.which in ("lambda", "both"):
        r1 = extremal_lambda(params, mesh, int(cfg.n_starts), int(cfg.seed))
        record["lambda_star_upper"] = r1.value
        record["lambda_search"] = r1.to_dict()
        code = max(code, EXIT_OK if r1.converged else EXIT_FLAGGED)
    if cfg.which not in ("lambda0", "lambda", "both"):
        raise InputError(f"--which must be lambda0, lambda or both, got {cfg.which!r}")
    return Outcome(to_json(record), code, tuple(files))


def cmd_nehari(cfg: RunConfig) -> Outcome:
    params, mesh = cfg.params(), cfg.mesh()
    S_h, C1h, C2h = mesh_thresholds(mesh)
    record = {"params": _params_dict(params), "mesh": _mesh_dict(cfg), "S_h": S_h, "C1_h": C1h, "C2_h": C2h}
    code = EXIT_OK
    files = []
    if params.b > 0:
        record["c0_bound"] = c0_level(params.a, params.b, params.N)
        record["sigma_lower_bound"] = sigma_lower_bound(params)
    try:
        res = nehari_minus_multistart(params, mesh, int(cfg.n_starts), int(cfg.seed))
        record["nehari_minus"] = res.to_dict()
        if not res.converged or res.flags:
            code = EXIT_FLAGGED
        if cfg.minimizer_out:
            files.append((cfg.minimizer_out, res.minimizer.to_csv()))
    except NehariEmptyError as exc:
        record["nehari_minus"] = {"error": "nehari-empty", "message": str(exc)}
        code = EXIT_FLAGGED
    if params.b > 0:
        g = global_minimize(params, mesh, n_starts=int(cfg.n_starts), seed=int(cfg.seed))
        record["global"] = g.to_dict()
        if not g.converged:
            code = EXIT_FLAGGED
        if cfg.gate != "none":
            gate = second_solution_gate(params, mesh, cfg.gate, int(cfg.n_starts), int(cfg.seed))
            record["gate"] = gate.to_dict()
            if any(f.startswith("inconsistent") for f in gate.flags):
                code = EXIT_FLAGGED
    return Outcome(to_json(record), code, tuple(files))


def cmd_phase(cfg: RunConfig) -> Outcome:
    mesh = cfg.mesh()
    a_vals, b_vals = parse_range(cfg.a_range), parse_range(cfg.b_range)
    if np.any(a_vals <= 0) or np.any(b_vals < 0):
        raise InputError("a must be positive and b non-negative")
    cells = phase_diagram(
        a_vals,
        b_vals,
        mesh,
        p=float(cfg.p),
        lambda_policy=cfg.lambda_policy,
        n_starts=int(cfg.n_starts),
        seed=int(cfg.seed),
        workers=int(cfg.workers),
    )
    code = EXIT_FLAGGED if any(c.error for c in cells) else EXIT_OK
    if cfg.json:
        return Outcome(to_json([dict(zip(PHASE_COLUMNS, c.row())) for c in cells]), code)
    return Outcome(to_csv(PHASE_COLUMNS, [c.row() for c in cells]), code)


BN_COLUMNS = ("index", "b", "level", "converged", "iterations", "t_projection", "grad_norm")


def cmd_bnlimit(cfg: RunConfig) -> Outcome:
    mesh = cfg.mesh()
    bs = parse_list(cfg.b_seq)
    res = continuation_b_to_zero(bs, float(cfg.lam), mesh, float(cfg.a), float(cfg.p), int(cfg.n_starts), int(cfg.seed))
    code = EXIT_OK
    if res.aborted_at is not None or not all(r.converged for r in res.results):
        code = EXIT_FLAGGED
    files = []
    if cfg.minimizer_out and res.results:
        files.append((cfg.minimizer_out, res.results[-1].minimizer.to_csv()))
    if cfg.json or res.aborted_at is not None:
        # an aborted run is reported as a full record so the failure is explicit
        record = res.to_dict()
        record["mesh"] = _mesh_dict(cfg)
        return Outcome(to_json(record), code, tuple(files))
    rows = [(k, r.params.b, r.level, r.converged, r.iterations, r.t_projection, r.grad_norm) for k, r in enumerate(res.results)]
    text = to_csv(BN_COLUMNS, rows)
    return Outcome(text, code, tuple(files))


def _params_dict(p: ProblemParams) -> dict:
    return {"N": p.N, "a": p.a, "b": p.b, "lambda": p.lam, "p": p.p}


def _mesh_dict(cfg: RunConfig) -> dict:
    return {"M": int(cfg.mesh_size), "grading": cfg.grading}


COMMANDS = {
    "constants": cmd_constants,
    "fiber": cmd_fiber,
    "extremal": cmd_extremal,
    "nehari": cmd_nehari,
    "phase": cmd_phase,
    "bnlimit": cmd_bnlimit,
}


# --------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--json", action="store_true", help="emit JSON instead of text/CSV")
    common.add_argument("--out", help="write the main output to this file")
    common.add_argument("--seed", type=int, help="seed for random start profiles (default 0)")
    common.add_argument("--mesh-size", dest="mesh_size", type=int, help="number of radial cells M (default 256)")
    common.add_argument("--grading", choices=("uniform", "graded"))
    common.add_argument("--config", help="JSON file with option values; flags override it")
    common.add_argument("--n-starts", dest="n_starts", type=int)
    common.add_argument("--workers", type=int, help="processes for parallel sweeps (default 1)")

    prob = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    prob.add_argument("--N", type=int)
    prob.add_argument("--a", type=float)
    prob.add_argument("--b", type=float)
    prob.add_argument("--lambda", dest="lam", type=float)
    prob.add_argument("--p", type=float)

    parser = _Parser(prog="kirchhoff-nehari", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("constants", parents=[common], help="Sobolev and threshold constants")
    sp.add_argument("--N", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--a-values", dest="a_values", default=argparse.SUPPRESS, help="comma list of a values")

    sp = sub.add_parser("fiber", parents=[common, prob], help="classify one fiber map")
    sp.add_argument("--A", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--C", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--P", type=float, default=argparse.SUPPRESS)
    sp.add_argument("--samples", type=int, default=argparse.SUPPRESS)
    sp.add_argument("--samples-out", dest="samples_out", default=argparse.SUPPRESS, help="CSV of t,psi,dpsi")

    sp = sub.add_parser("extremal", parents=[common, prob], help="upper bounds on lambda_0^* and lambda^*")
    sp.add_argument("--which", choices=("lambda0", "lambda", "both"), default=argparse.SUPPRESS)
    sp.add_argument("--direction-out", dest="direction_out", default=argparse.SUPPRESS)

    sp = sub.add_parser("nehari", parents=[common, prob], help="N^- level, global minimum, second-solution gate")
    sp.add_argument("--gate", choices=("none", "p0", "lambda_tilde"), default=argparse.SUPPRESS)
    sp.add_argument("--minimizer-out", dest="minimizer_out", default=argparse.SUPPRESS)

    sp = sub.add_parser("phase", parents=[common, prob], help="(a, b) phase diagram")
    sp.add_argument("--a-range", dest="a_range", default=argparse.SUPPRESS, help="lo:hi:count")
    sp.add_argument("--b-range", dest="b_range", default=argparse.SUPPRESS, help="lo:hi:count")
    sp.add_argument("--lambda-policy", dest="lambda_policy", choices=("sampled", "none"), default=argparse.SUPPRESS)

    sp = sub.add_parser("bnlimit", parents=[common, prob], help="continuation of the N^- minimizer as b -> 0")
    sp.add_argument("--b-seq", dest="b_seq", default=argparse.SUPPRESS, help="comma list, strictly decreasing")
    sp.add_argument("--minimizer-out", dest="minimizer_out", default=argparse.SUPPRESS)
    return parser


def resolve_config(argv) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    options = dict(DEFAULTS)
    options.update(COMMAND_DEFAULTS[command])
    path = args.pop("config", None)
    if path:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise InputError("config file must hold a JSON object")
        if "lambda" in loaded:
            loaded["lam"] = loaded.pop("lambda")
        options.update({k.replace("-", "_"): v for k, v in loaded.items()})
    options.update(args)
    if int(options["seed"]) < 0:
        raise InputError("seed must be non-negative")
    return RunConfig(command, options)


def run(argv=None) -> tuple[int, str]:
    """Execute a command; return ``(exit_code, stdout_text)``."""
    out_path = None
    try:
        cfg = resolve_config(argv)
        out_path = cfg.out
        outcome = COMMANDS[cfg.command](cfg)
    except (InputError, ValueError) as exc:
        return _fail(EXIT_INVALID, "invalid-input", exc, out_path)
    except KirchhoffError as exc:
        return _fail(EXIT_FLAGGED, type(exc).__name__, exc, out_path)
    for path, text in outcome.files:
        _write(path, text)
    if out_path:
        _write(out_path, outcome.text)
    return outcome.code, outcome.text


def _fail(code, kind, exc, out_path):
    text = to_json({"error": kind, "message": str(exc)})
    if out_path:
        _write(out_path, text)
    return code, text


def main(argv=None) -> int:
    code, text = run(argv)
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
