"""Command-line front end.

A problem is a JSON object::

    {"f": <function>, "p": <function>, "weight": <function>, "g": <function>,
     "options": {"tol": 1e-8, "direction": "forward", "x0": null}}

where a function is one of

    3.5                                          constant
    "one" | {"builtin": "ramp"}                  named builtin
    {"step": {"breakpoints": [...], "values": [...]}}
    {"grid": {"samples": [...]}}                 sample i covers [i/n, (i+1)/n)

Only ``f`` and ``p`` are required (``g`` only for ``pair``).  Command-line
flags override ``options``.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import ExponentField, GridFunction, StepFunction
from .duality import holder_pair
from .ode import Status, integrate_lp, notin_exponent
from .norms import lp_norm, nakano_norm
from .verify import FAMILIES, run_blowup_case, run_suite

EXIT_OK, EXIT_PARSE, EXIT_STATUS = 0, 1, 2


class SpecError(ValueError):
    pass


def _ramp(t):
    return np.asarray(t, dtype=float)


def _ramp_exponent(t):
    return 1.0 + np.asarray(t, dtype=float)


# builtin name -> (as a function, as an exponent)
BUILTINS = {
    "one": (StepFunction.constant(1.0), StepFunction.constant(1.0)),
    "ramp": (_ramp, _ramp_exponent),
    "example-notin-p": (notin_exponent, notin_exponent),
}


def parse_function(desc, where: str, exponent: bool = False):
    """Turn a JSON function description into a StepFunction or a callable."""
    if isinstance(desc, bool):
        raise SpecError(f"{where}: expected a function description, got a boolean")
    if isinstance(desc, (int, float)):
        if not math.isfinite(desc):
            raise SpecError(f"{where}: constant must be finite")
        out = StepFunction.constant(float(desc))
    elif isinstance(desc, str) or (isinstance(desc, dict) and set(desc) == {"builtin"}):
        name = desc if isinstance(desc, str) else desc["builtin"]
        if name not in BUILTINS:
            raise SpecError(f"{where}: unknown builtin {name!r}; known: {sorted(BUILTINS)}")
        out = BUILTINS[name][1 if exponent else 0]
    elif isinstance(desc, dict) and set(desc) == {"step"}:
        body = _require_keys(desc["step"], f"{where}.step", ("breakpoints", "values"))
        try:
            out = StepFunction(_numbers(body["breakpoints"], f"{where}.step.breakpoints"),
                               _numbers(body["values"], f"{where}.step.values"))
        except ValueError as exc:
            raise SpecError(f"{where}.step: {exc}") from None
    elif isinstance(desc, dict) and set(desc) == {"grid"}:
        body = _require_keys(desc["grid"], f"{where}.grid", ("samples",), optional=("n",))
        samples = _numbers(body["samples"], f"{where}.grid.samples")
        if not samples:
            raise SpecError(f"{where}.grid.samples: need at least one sample")
        if "n" in body and body["n"] != len(samples):
            raise SpecError(f"{where}.grid.n: is {body['n']} but {len(samples)} samples were given")
        out = GridFunction(samples).to_step()
    else:
        raise SpecError(f"{where}: expected a number, a builtin name, or an object with one key "
                        "'step', 'grid' or 'builtin'")
    if exponent and isinstance(out, StepFunction):
        try:
            out = ExponentField.of(out)
        except ValueError as exc:
            raise SpecError(f"{where}: {exc}") from None
    return out


def _require_keys(body, where, required, optional=()):
    if not isinstance(body, dict):
        raise SpecError(f"{where}: expected an object")
    for key in required:
        if key not in body:
            raise SpecError(f"{where}: missing field {key!r}")
    extra = set(body) - set(required) - set(optional)
    if extra:
        raise SpecError(f"{where}: unexpected field(s) {sorted(extra)}")
    return body


def _numbers(seq, where) -> list:
    if not isinstance(seq, list):
        raise SpecError(f"{where}: expected a list of numbers")
    for i, x in enumerate(seq):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise SpecError(f"{where}[{i}]: expected a number, got {x!r}")
    return [float(x) for x in seq]


@dataclass
class ProblemSpec:
    f: object
    p: object
    weight: object = None
    g: object = None
    options: dict = field(default_factory=dict)

    OPTION_KEYS = ("tol", "direction", "x0")

    @classmethod
    def from_dict(cls, data) -> ProblemSpec:
        if not isinstance(data, dict):
            raise SpecError("problem: expected a JSON object")
        _require_keys(data, "problem", ("f", "p"), optional=("weight", "g", "options"))
        spec = cls(data["f"], data["p"], data.get("weight"), data.get("g"), dict(data.get("options") or {}))
        extra = set(spec.options) - set(cls.OPTION_KEYS)
        if extra:
            raise SpecError(f"options: unexpected field(s) {sorted(extra)}")
        spec.resolve()
        return spec

    @classmethod
    def from_text(cls, text: str) -> ProblemSpec:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        out = {"f": self.f, "p": self.p}
        if self.weight is not None:
            out["weight"] = self.weight
        if self.g is not None:
            out["g"] = self.g
        if self.options:
            out["options"] = dict(self.options)
        return out

    def resolve(self) -> dict:
        """Parse every description; raises SpecError naming the offending field."""
        tol = self.options.get("tol", 1e-8)
        if isinstance(tol, bool) or not isinstance(tol, (int, float)) or not tol > 0:
            raise SpecError("options.tol: must be a positive number")
        direction = self.options.get("direction", "forward")
        if direction not in ("forward", "backward"):
            raise SpecError("options.direction: must be 'forward' or 'backward'")
        x0 = self.options.get("x0")
        if x0 is not None and (isinstance(x0, bool) or not isinstance(x0, (int, float)) or x0 < 0):
            raise SpecError("options.x0: must be a nonnegative number")
        weight = None if self.weight is None else parse_function(self.weight, "weight")
        if isinstance(weight, StepFunction) and np.any(weight.values <= 0):
            raise SpecError("weight: values must be positive")
        return {
            "f": parse_function(self.f, "f"),
            "p": parse_function(self.p, "p", exponent=True),
            "weight": weight,
            "g": None if self.g is None else parse_function(self.g, "g"),
            "tol": float(tol),
            "direction": direction,
            "x0": None if x0 is None else float(x0),
        }


def _load_spec(source: str) -> ProblemSpec:
    if source.lstrip().startswith("{"):
        return ProblemSpec.from_text(source)
    if source == "-":
        return ProblemSpec.from_text(sys.stdin.read())
    try:
        text = Path(source).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {source}: {exc.strerror}") from None
    return ProblemSpec.from_text(text)


def _apply_flags(spec: ProblemSpec, args) -> ProblemSpec:
    for key in ProblemSpec.OPTION_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            spec.options[key] = val
    if getattr(args, "weight", None) is not None:
        try:
            spec.weight = json.loads(args.weight)
        except json.JSONDecodeError:
            # a bare builtin name
            spec.weight = args.weight
    return spec


def _as_step(obj, n: int):
    if isinstance(obj, StepFunction) or obj is None:
        return obj
    return GridFunction.from_callable(obj, n).to_step()


# -- output -------------------------------------------------------------------


def _render(record: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(record, indent=2) + "\n"
    if fmt == "csv":
        keys = [k for k, v in record.items() if not isinstance(v, dict)]
        buf = io.StringIO()
        buf.write(",".join(keys) + "\n")
        buf.write(",".join(_fmt(record[k]) for k in keys) + "\n")
        return buf.getvalue()
    lines = []
    for k, v in record.items():
        if isinstance(v, dict):
            lines.extend(f"{k}.{kk} {_fmt(vv)}" for kk, vv in v.items())
        else:
            lines.append(f"{k} {_fmt(v)}")
    return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "HOLDS" if v else "FAILS"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _emit(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text)
    except OSError as exc:
        raise SpecError(f"cannot write {out}: {exc.strerror}") from None


# -- commands -----------------------------------------------------------------


def cmd_norm(args) -> int:
    spec = _apply_flags(_load_spec(args.spec), args)
    r = spec.resolve()
    rep = lp_norm(r["f"], r["p"], r["tol"], weight=r["weight"], direction=r["direction"], x0=r["x0"])
    _emit(_render(rep.as_dict(), args.format or "plain"), args.out)
    return EXIT_OK if rep.status is Status.CONVERGED else EXIT_STATUS


def cmd_profile(args) -> int:
    spec = _apply_flags(_load_spec(args.spec), args)
    r = spec.resolve()
    f, p, w = (_as_step(r[k], args.grid) for k in ("f", "p", "weight"))
    p = ExponentField.of(p)
    if r["direction"] == "backward":
        f, p, w = f.reflect(), p.reflect(), None if w is None else w.reflect()
    prof = integrate_lp(f, p, r["x0"] or 0.0, w, subdivide=args.grid)
    if (args.format or "csv") == "json":
        text = json.dumps({"t": prof.ts.tolist(), "phi": prof.phis.tolist(),
                           "x0": prof.x0, "status": prof.status.value}, indent=2) + "\n"
    else:
        text = "t,phi\n" + "".join(f"{t!r},{v!r}\n" for t, v in zip(prof.ts.tolist(), prof.phis.tolist()))
    _emit(text, args.out)
    return EXIT_OK if prof.status is Status.CONVERGED else EXIT_STATUS


def cmd_nakano(args) -> int:
    spec = _apply_flags(_load_spec(args.spec), args)
    r = spec.resolve()
    value = nakano_norm(_as_step(r["f"], args.grid), _as_step(r["p"], args.grid), tol=r["tol"])
    _emit(_render({"value": value}, args.format or "plain"), args.out)
    return EXIT_OK


def cmd_pair(args) -> int:
    spec = _apply_flags(_load_spec(args.spec), args)
    r = spec.resolve()
    if r["g"] is None:
        raise SpecError("g: required for the pair command")
    try:
        res = holder_pair(*(_as_step(r[k], args.grid) for k in ("f", "g", "p")), tol=r["tol"])
    except ValueError as exc:
        raise SpecError(f"p: {exc}") from None
    record = {"pairing": res.pairing, "bound": res.bound, "holds": res.holds}
    _emit(_render(record, args.format or "plain"), args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    families = args.families.split(",") if args.families else list(FAMILIES)
    for name in families:
        if name not in FAMILIES:
            raise SpecError(f"--families: unknown family {name!r}; known: {sorted(FAMILIES)}")
    report = run_suite(seed=args.seed, trials=args.trials, tol=args.tol or 1e-8, families=families)
    record = report.to_dict()
    ok = report.passed
    if args.blowup:
        record["blowup"] = run_blowup_case()
        ok = ok and record["blowup"]["pass"]
    record["pass"] = ok
    if (args.format or "plain") == "json":
        text = json.dumps(record, indent=2) + "\n"
    else:
        lines = [f"{name} trials={r['trials']} failures={r['failures']} worst={r['worst_violation']}"
                 for name, r in record["properties"].items()]
        if args.blowup:
            b = record["blowup"]
            lines.append(f"blowup small_x0={b['small_x0_status']} large_x0={b['large_x0_status']}")
        lines.append("PASS" if ok else "FAIL")
        text = "\n".join(lines) + "\n"
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_STATUS


# -- argument parsing -------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="odenorm", description="ODE-defined variable-exponent norms.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, formats=("json", "csv", "plain")):
        sp.add_argument("spec", help="problem JSON: a file path, '-' for stdin, or inline JSON")
        sp.add_argument("--tol", type=float, help="tolerance (default 1e-8)")
        sp.add_argument("--direction", choices=["forward", "backward"])
        sp.add_argument("--x0", type=float, help="fixed initial value instead of the 0+ limit")
        sp.add_argument("--weight", help="weight function description (JSON or builtin name)")
        sp.add_argument("--grid", type=int, default=1024,
                        help="cells used to sample builtin callables (default 1024)")
        sp.add_argument("--out", help="write output to this path instead of stdout")
        sp.add_argument("--format", choices=formats)

    common(sub.add_parser("norm", help="ODE norm with error bound and status"))
    common(sub.add_parser("profile", help="the path t -> phi(t) as CSV"), ("csv", "json"))
    common(sub.add_parser("nakano", help="Nakano (Luxemburg-type) norm"))
    common(sub.add_parser("pair", help="Hölder pairing of f and g"))

    chk = sub.add_parser("check", help="run the randomized property suite")
    chk.add_argument("--seed", type=int, default=42)
    chk.add_argument("--trials", type=int, default=200)
    chk.add_argument("--tol", type=float)
    chk.add_argument("--families", help="comma-separated family names")
    chk.add_argument("--blowup", action="store_true", help="also run the unbounded-exponent case")
    chk.add_argument("--out")
    chk.add_argument("--format", choices=["json", "plain"])
    return parser


COMMANDS = {"norm": cmd_norm, "profile": cmd_profile, "nakano": cmd_nakano,
            "pair": cmd_pair, "check": cmd_check}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "grid", 1) < 1:
        print("odenorm: error: --grid must be >= 1", file=sys.stderr)
        return EXIT_PARSE
    if getattr(args, "trials", 1) < 1:
        print("odenorm: error: --trials must be >= 1", file=sys.stderr)
        return EXIT_PARSE
    try:
        return COMMANDS[args.command](args)
    except SpecError as exc:
        print(f"odenorm: error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
