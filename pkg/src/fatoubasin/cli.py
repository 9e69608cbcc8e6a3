"""Command-line front end.

Exit codes: 0 success, 1 failed verification or certification, 2 usage
error.  Machine-readable output (JSON, CSV, PGM) goes to ``--out`` or the
standard output; human-readable messages go to the standard error stream.
Outputs embed the configuration and carry no timestamp unless ``--stamp``
is given.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import re
import sys
from typing import Optional, Sequence


DEFAULTS = {
    "eps": 0.05, "R": 100.0, "order": None, "budget": 1000, "tol": 1e-9, "out": None,
    "n_max": 100_000, "grid": "256x256", "w": "-0.02", "strict": False, "steps": None,
    "workers": None,
}
_TYPES = {"eps": float, "R": float, "order": int, "budget": int, "tol": float, "out": str,
          "n_max": int, "grid": str, "w": str, "strict": None, "steps": int, "workers": int}


class UsageError(Exception):
    """Bad command line or configuration file."""


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def read_config(path: str) -> dict:
    """Plain-text ``key=value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise UsageError(f"{path}:{no}: unknown key {key!r}")
        try:
            out[key] = _bool(val) if _TYPES[key] is None else _TYPES[key](val)
        except ValueError as exc:
            raise UsageError(f"{path}:{no}: bad value for {key}: {val!r}") from exc
    return out


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise UsageError(f"not a complex number: {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        # let values such as -1e-3 or -2+1j through as arguments, not options
        self._negative_number_matcher = re.compile(r"^-\.?\d")

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--eps", type=float, default=S, help="sector radius (default 0.05)")
    common.add_argument("--R", type=float, default=S, help="chart radius (default 100)")
    common.add_argument("--order", type=int, default=S, help="jet or curve order")
    common.add_argument("--budget", type=int, default=S, help="iteration budget (default 1000)")
    common.add_argument("--tol", type=float, default=S, help="accuracy target (default 1e-9)")
    common.add_argument("--out", default=S, help="output file (default: standard output)")
    common.add_argument("--config", default=S, help="key=value configuration file")
    common.add_argument("--stamp", action="store_true", default=S,
                        help="add a timestamp to reports")
    p = _Parser(prog="fatoubasin", parents=[common],
                description="Parabolic basin laboratory for an automorphism of C^2.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    v = sub.add_parser("verify", parents=[common], help="run the invariant suites")
    v.add_argument("--only", nargs="+", default=S, help="suite names to run")
    sub.add_parser("jet", parents=[common], help="print germ coefficients")
    o = sub.add_parser("orbit", parents=[common], help="orbit trace as CSV")
    o.add_argument("--z", required=True)
    o.add_argument("--w", required=True)
    o.add_argument("--steps", type=int, default=S, help="number of steps (default: budget)")
    sub.add_parser("curve", parents=[common], help="solve and serialize the parabolic curve")
    f = sub.add_parser("fatou", parents=[common], help="evaluate psi (and Upsilon) on a CSV")
    f.add_argument("input", help="CSV with columns re_z,im_z,re_w,im_w")
    f.add_argument("--upsilon", action="store_true", default=S, help="add fiber coordinates")
    b = sub.add_parser("basin", parents=[common], help="raster of the basin as PGM")
    b.add_argument("--grid", default=S, help="columns x rows (default 256x256)")
    b.add_argument("--w", default=S, help="w of the z-plane slice (default -0.02)")
    b.add_argument("--strict", action="store_true", default=S, help="require entry into D'")
    b.add_argument("--workers", type=int, default=S, help="worker threads")
    sub.add_parser("certify", parents=[common], help="parameter certification report")
    return p


def resolve(ns: argparse.Namespace) -> dict:
    """Defaults, then the config file, then flags."""
    cfg = dict(DEFAULTS)
    given = vars(ns)
    if "config" in given:
        cfg.update(read_config(given["config"]))
    for k, v in given.items():
        if k in _TYPES:
            cfg[k] = v
    cfg["stamp"] = bool(given.get("stamp", False))
    if cfg["budget"] is not None and cfg["budget"] < 1:
        raise UsageError("budget must be positive")
    return cfg


def _emit(cfg: dict, payload, binary: bool = False) -> None:
    out = cfg.get("out")
    if out:
        mode = "wb" if binary else "w"
        with open(out, mode, **({} if binary else {"encoding": "utf-8"})) as fh:
            fh.write(payload)
    elif binary:
        sys.stdout.buffer.write(payload)
    else:
        sys.stdout.write(payload)


def _report(cfg: dict, body: dict) -> str:
    rep = {"config": {k: cfg[k] for k in sorted(cfg) if k not in ("stamp",)}}
    rep.update(body)
    if cfg.get("stamp"):
        rep["stamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return json.dumps(rep, indent=1, sort_keys=True, default=str) + "\n"


def _params(cfg: dict):
    from .regions import CertificationError, RegionParams
    try:
        return RegionParams(eps=cfg["eps"], R=cfg["R"], n_max=cfg["n_max"])
    except CertificationError as exc:
        raise UsageError(f"parameters rejected: {exc}") from exc


def _machine(cfg: dict):
    from . import fatou
    params = _params(cfg)
    if params == fatou.default_machine().params:
        return fatou.default_machine()
    return fatou.build_machine(params=params)


# ---------------------------------------------------------------------------
# commands


def cmd_verify(cfg, ns) -> int:
    from . import analysis
    m = _machine(cfg)
    only = getattr(ns, "only", None)
    if only:
        unknown = [s for s in only if s not in analysis.SUITES]
        if unknown:
            raise UsageError(f"unknown suite(s): {', '.join(unknown)}")
    results = analysis.run_suite(m, {"order": cfg["order"] or 4}, only)
    ok = all(r.passed for r in results)
    _emit(cfg, _report(cfg, {"pass": ok, "suites": [r.to_dict() for r in results]}))
    for r in results:
        print(f"{'pass' if r.passed else 'FAIL'}  {r.name}", file=sys.stderr)
    return 0 if ok else 1


def cmd_jet(cfg, ns) -> int:
    from . import jets, mapchain
    order = cfg["order"] or 4
    if order < 2:
        raise UsageError("order must be at least 2")
    g = mapchain.germ_of_chain(mapchain.default_chain(), order, jets.RATIONAL)

    def table(j):
        return {f"z^{i} w^{k}": str(c) for (i, k), c in sorted(j.coeffs.items())}

    body = {"order": order, "first": table(g.first), "second": table(g.second)}
    _emit(cfg, _report(cfg, body))
    return 0


def cmd_orbit(cfg, ns) -> int:
    from . import mapchain
    from .curve import default_curve
    steps = cfg["steps"] if cfg["steps"] is not None else cfg["budget"]
    if steps < 0:
        raise UsageError("steps must be non-negative")
    p = (parse_complex(ns.z), parse_complex(ns.w))
    tr = mapchain.orbit(p, steps, default_curve())
    if tr.truncated:
        print(f"orbit left the numerical range after {tr.length - 1} steps", file=sys.stderr)
    _emit(cfg, tr.to_csv())
    return 0


def cmd_curve(cfg, ns) -> int:
    from . import curve
    order = cfg["order"] or 8
    if order < 3:
        raise UsageError("curve order must be at least 3")
    c = curve.solve_curve(N=order) if order != 8 else curve.default_curve()
    _emit(cfg, c.to_json() + "\n")
    return 0


def _read_points(path: str):
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    pts = []
    for i, r in enumerate(rows, 2):
        try:
            pts.append((complex(float(r["re_z"]), float(r["im_z"])),
                        complex(float(r["re_w"]), float(r["im_w"]))))
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"{path}:{i}: need numeric re_z,im_z,re_w,im_w") from exc
    return pts


def cmd_fatou(cfg, ns) -> int:
    from . import fibers
    from .fatou import NotInBasin
    m = _machine(cfg)
    budget = cfg["budget"] if cfg["budget"] else m.n_max
    ups = bool(getattr(ns, "upsilon", False))
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    head = ["re_z", "im_z", "re_w", "im_w", "re_psi", "im_psi", "err_est"]
    wr.writerow(head + (["re_upsilon", "im_upsilon", "err_upsilon"] if ups else []))
    loose = 0
    for p in _read_points(ns.input):
        row = [repr(p[0].real), repr(p[0].imag), repr(p[1].real), repr(p[1].imag)]
        try:
            psi, up = fibers.global_map(p, m, budget=budget)
        except (NotInBasin, ValueError):
            wr.writerow(row + [""] * (3 + (3 if ups else 0)))
            continue
        row += [repr(psi.value.real), repr(psi.value.imag), repr(float(psi.err))]
        if ups:
            row += [repr(up.value.real), repr(up.value.imag), repr(float(up.err))]
        loose += psi.err > cfg["tol"] or (ups and up.err > cfg["tol"])
        wr.writerow(row)
    if loose:
        print(f"{loose} value(s) with error estimate above tol={cfg['tol']}", file=sys.stderr)
    _emit(cfg, buf.getvalue())
    return 0


def _grid(text: str):
    try:
        parts = [int(v) for v in text.lower().split("x")]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}") from exc
    if len(parts) == 1:
        parts *= 2
    if len(parts) != 2 or min(parts) < 2:
        raise UsageError("grid must be at least 2x2")
    return parts


def cmd_basin(cfg, ns) -> int:
    from . import analysis
    m = _machine(cfg)
    spec = analysis.SliceSpec.at_w(parse_complex(cfg["w"]))
    r = analysis.raster(spec, _grid(cfg["grid"]), cfg["budget"], m, bool(cfg["strict"]),
                        cfg["workers"])
    out = cfg.get("out") or "basin.pgm"
    with open(out, "wb") as fh:
        fh.write(r.pgm_bytes())
    side = r.sidecar()
    side["config"] = {k: cfg[k] for k in sorted(cfg) if k != "stamp"}
    if cfg.get("stamp"):
        side["stamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    text = json.dumps(side, indent=1, sort_keys=True, default=str) + "\n"
    with open(out + ".json", "w", encoding="utf-8") as fh:
        fh.write(text)
    sys.stdout.write(text)
    print(f"wrote {out} and {out}.json", file=sys.stderr)
    return 0


def cmd_certify(cfg, ns) -> int:
    from . import regions
    rep = regions.certify_params(cfg["eps"], cfg["R"], empirical=True)
    _emit(cfg, _report(cfg, rep.to_dict() | {"pass": rep.passed}))
    return 0 if rep.passed else 1


COMMANDS = {"verify": cmd_verify, "jet": cmd_jet, "orbit": cmd_orbit, "curve": cmd_curve,
            "fatou": cmd_fatou, "basin": cmd_basin, "certify": cmd_certify}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(list(sys.argv[1:] if argv is None else argv))
        if not getattr(ns, "command", None):
            parser.print_usage(sys.stderr)
            raise UsageError("a command is required")
        cfg = resolve(ns)
        if ns.command != "certify":
            _params(cfg)
        return COMMANDS[ns.command](cfg, ns)
    except UsageError as exc:
        print(f"fatoubasin: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
