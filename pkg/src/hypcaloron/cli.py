"""Command-line entry point.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 a check failed.
Every failure also writes a machine-readable record (``error.json`` in the
output directory when one is given, and one JSON line on stderr).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings

from .errors import CaloronError, DomainError, IterativeFailure, ValidationError
from .geometry import PhysicalParams
from .grid import write_field_csv
from .pipeline import RunConfig, run_pipeline
from .solver import SolverConfig
from .sources import VortexConfig

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_DIAGNOSTIC = 0, 2, 3, 4

# key -> (type, default); the same keys are accepted in a config file
KEYS = {
    "S": (float, 2.0),
    "beta": (float, 2.0),
    "charge": (int, None),
    "vortices": (str, None),
    "nr": (int, 512),
    "nt": (int, 128),
    "rmax": (float, None),
    "tol": (float, 1e-10),
    "out": (str, None),
    "dump": (str, "fields"),
    "serial": (bool, True),
    "threads": (int, 1),
}


def _parse_bool(text):
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {text!r}")


def read_config_file(path):
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.lstrip("-")
            if key not in KEYS:
                raise ValidationError(f"{path}:{lineno}: unknown key {key!r}")
            typ = KEYS[key][0]
            try:
                out[key] = _parse_bool(val) if typ is bool else typ(val)
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return out


def parse_vortices(text, beta):
    """``"r,t;r,t;..."`` -> points; repeat a point to give it multiplicity."""
    pts = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ValidationError(f"vortex entry {chunk!r} must be 'r,t'")
        try:
            pts.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ValidationError(f"vortex entry {chunk!r} is not numeric") from exc
    return VortexConfig(tuple(pts), beta)


def build_parser():
    p = argparse.ArgumentParser(prog="hypcaloron", description="Solve the reduced vortex equations on the strip.")
    p.add_argument("--config", help="file of 'key = value' lines (flags override it)")
    p.add_argument("--S", type=float)
    p.add_argument("--beta", type=float)
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--charge", type=int, help="N vortices placed evenly at r = max(1, S/2)")
    grp.add_argument("--vortices", help='explicit positions "r,t;r,t;..."')
    p.add_argument("--nr", type=int)
    p.add_argument("--nt", type=int)
    p.add_argument("--rmax", type=float, help="outer radius (default 2 r_hi + 3 S)")
    p.add_argument("--tol", type=float, help="Newton max-norm residual target")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dump", choices=("fields", "none"))
    p.add_argument("--serial", dest="serial", action="store_true", default=None,
                   help="reference mode: single thread, deterministic (default)")
    p.add_argument("--no-serial", dest="serial", action="store_false")
    p.add_argument("--threads", type=int)
    return p


def resolve_options(argv):
    args = build_parser().parse_args(argv)
    opts = {k: d for k, (_, d) in KEYS.items()}
    if args.config:
        try:
            opts.update(read_config_file(args.config))
        except OSError as exc:
            raise ValidationError(f"cannot read config file: {exc}") from exc
    flags = {k: getattr(args, k) for k in KEYS if getattr(args, k, None) is not None}
    if "charge" in flags:
        opts["vortices"] = None
    if "vortices" in flags:
        opts["charge"] = None
    opts.update(flags)
    if opts["charge"] is not None and opts["vortices"] is not None:
        raise ValidationError("give either charge or vortices, not both")
    return opts


def make_config(opts):
    params = PhysicalParams(opts["S"], opts["beta"])
    if opts["vortices"] is not None:
        vortices = parse_vortices(opts["vortices"], params.beta)
    else:
        vortices = VortexConfig.evenly_spaced(opts["charge"] or 0, params)
    threads = 1 if opts["serial"] else opts["threads"]
    return RunConfig(params=params, vortices=vortices, Nr=opts["nr"], Nt=opts["nt"], r_max=opts["rmax"],
                     solver=SolverConfig(tol=opts["tol"]), out=opts["out"], dump=opts["dump"],
                     serial=opts["serial"], threads=threads)


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars plain Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item") and not isinstance(obj, (str, bytes)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


def summary_document(bundle):
    rep = bundle.report.as_dict()
    rep.pop("wall_time", None)
    return _clean({
        "status": "ok" if bundle.passed else "diagnostic_failure",
        "config": bundle.config.as_dict(),
        "observables": bundle.observables.as_dict(),
        "solver": rep,
        "checks": bundle.checks,
        "diagnostics": bundle.diagnostics,
    })


def summary_line(bundle):
    obs = bundle.observables
    N = bundle.config.vortices.N
    sd = max(obs.residual_sd1, obs.residual_sd2)
    return (f"N={N} flux/2pi={obs.charge:.6f} action/2pi^2={obs.action_density / (2 * math.pi**2):.6f} "
            f"sd_residual={sd:.3e}")


def write_outputs(bundle, out):
    os.makedirs(out, exist_ok=True)
    if bundle.config.dump == "fields":
        for name, fld in bundle.fields().items():
            write_field_csv(os.path.join(out, f"{name}.csv"), fld)
        bundle.ladder.limit.write_csv(os.path.join(out, "radial_w.csv"))
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary_document(bundle), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fail(code, exc, out):
    record = {"status": "error", "exit_code": code, "error": getattr(exc, "code", type(exc).__name__),
              "type": type(exc).__name__, "message": str(exc)}
    for attr in ("last_residual", "iterations"):
        if hasattr(exc, attr):
            record[attr] = getattr(exc, attr)
    record = _clean(record)
    if out:
        try:
            os.makedirs(out, exist_ok=True)
            with open(os.path.join(out, "error.json"), "w", encoding="utf-8", newline="\n") as fh:
                json.dump(record, fh, indent=2, sort_keys=True)
                fh.write("\n")
        except OSError:
            pass
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def _set_threads(n):
    if n <= 1:
        return
    try:
        import numba
    except ImportError:
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _flag_out(argv):
    """``--out`` from the raw flags, so a bad config file still gets an error record."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--out")
    return pre.parse_known_args(argv)[0].out


def main(argv=None):
    out = _flag_out(argv)
    try:
        opts = resolve_options(argv)
        out = opts["out"]
        cfg = make_config(opts)
    except (ValidationError, DomainError) as exc:
        return _fail(EXIT_VALIDATION, exc, out)
    except SystemExit as exc:  # argparse usage errors
        return EXIT_VALIDATION if exc.code else EXIT_OK
    _set_threads(cfg.threads)
    try:
        bundle = run_pipeline(cfg)
    except (ValidationError, DomainError) as exc:
        return _fail(EXIT_VALIDATION, exc, out)
    except IterativeFailure as exc:
        return _fail(EXIT_SOLVER, exc, out)
    except CaloronError as exc:
        return _fail(EXIT_DIAGNOSTIC, exc, out)
    if out:
        write_outputs(bundle, out)
    print(summary_line(bundle))
    if not bundle.passed:
        failed = sorted(k for k, ok in bundle.checks.items() if not ok)
        err = CaloronError("checks failed: " + ", ".join(failed))
        err.code = "diagnostic"
        return _fail(EXIT_DIAGNOSTIC, err, out)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
