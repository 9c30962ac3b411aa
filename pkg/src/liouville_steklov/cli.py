"""Command line front end: spectrum, sweep, verify, plot.

Exit codes: 0 success, 1 bad arguments or missing inputs, 2 solver failure or
a failed certificate.  Options can also come from a ``key = value`` config
file (``--config``); explicit flags win.  The default output directory is
``$LIOUVILLE_STEKLOV_OUT`` or ``./out``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .closed_forms import BubbleParams, validate_alpha
from .errors import AlphaOutOfRange, InvalidParameter, LiouvilleSteklovError, NotConverged
from .geometry import ELL_MAX, ELL_MIN, DiskPairDomain, normalized_domain, unit_disk
from .steklov import discretize, solve
from .verification import (
    SolverSettings,
    check_bubble_residual,
    check_eigenvalue_placement,
    check_linearized_residual,
    check_mu_alpha_identity,
    check_nondegeneracy_pipeline,
    check_regular_control,
    morse_index,
    spectrum_for,
)

ENV_OUT = "LIOUVILLE_STEKLOV_OUT"
EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

DEFAULTS = {
    "tol": 1e-6,
    "n_per_arc": 40,
    "grading": 3.0,
    "format": "json",
    "jobs": None,
    "k": None,
    "eig_tol": 1e-5,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --------------------------------------------------------------------------
# output helpers


def fmt(v) -> str:
    """17 significant digits, the CSV number format."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def atomic_write(path: str, text: str):
    """Write through a temporary file in the same directory, then rename."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        mask = os.umask(0)
        os.umask(mask)
        os.chmod(tmp, 0o666 & ~mask)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


# --------------------------------------------------------------------------
# config


def read_config(path: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment; quotes are stripped."""
    out = {}
    try:
        with open(path) as f:
            lines = f.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc.strerror}")
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if len(val) >= 2 and val[0] == val[-1] and val[0] in "\"'":
            val = val[1:-1]
        out[key.replace("-", "_")] = val
    return out


_CONVERT = {
    "tol": float,
    "eig_tol": float,
    "n_per_arc": int,
    "grading": float,
    "jobs": int,
    "k": int,
    "ell": float,
    "index": int,
    "seed": int,
}


def _apply_config(args, cfg: dict):
    for key, raw in cfg.items():
        if key not in _GLOBAL_KEYS and not hasattr(args, key):
            raise UsageError(f"unknown config key {key!r} for this command")
        if getattr(args, key, None) not in (None, False, []):
            continue
        try:
            if key == "alpha":
                val = [float(s) for s in raw.replace(",", " ").split()]
            elif key in ("disk", "svg", "regular_control"):
                val = raw.lower() in ("1", "true", "yes", "on")
            else:
                val = _CONVERT.get(key, str)(raw)
        except ValueError:
            raise UsageError(f"config value for {key!r} is not valid: {raw!r}")
        setattr(args, key, val)


_GLOBAL_KEYS = ("tol", "eig_tol", "n_per_arc", "grading", "out", "format", "jobs")


def _finalise(args):
    args.out = getattr(args, "out", None)
    for key, val in DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, val)
    if args.out is None:
        args.out = os.environ.get(ENV_OUT) or "out"
    if args.jobs is None:
        args.jobs = os.cpu_count() or 1
    if args.format not in ("json", "csv"):
        raise UsageError("--format must be json or csv")
    if not (args.tol > 0 and args.eig_tol > 0):
        raise UsageError("tolerances must be positive")
    if args.n_per_arc < 8:
        raise UsageError("--n-per-arc must be at least 8")
    if args.grading < 1:
        raise UsageError("--grading must be at least 1")
    if args.jobs < 1:
        raise UsageError("--jobs must be positive")


def _settings(args) -> SolverSettings:
    return SolverSettings(args.n_per_arc, args.grading, args.tol, args.eig_tol)


def _check_ell(ell: float):
    if not (math.isfinite(ell) and ELL_MIN <= ell <= ELL_MAX):
        raise UsageError(f"ell={ell} is outside the supported range [{ELL_MIN}, {ELL_MAX}]")


def parse_grid(text: str) -> list:
    """'a:b:step' (inclusive) or a comma/space separated list."""
    text = text.strip()
    if not text:
        return []
    try:
        if ":" in text:
            a, b, h = (float(s) for s in text.split(":"))
            if not h > 0:
                raise UsageError("grid step must be positive")
            n = int(math.floor((b - a) / h + 1e-9))
            grid = [round(a + i * h, 12) for i in range(n + 1)]
        else:
            grid = [float(s) for s in text.replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"cannot parse grid {text!r}")
    if any(not math.isfinite(g) for g in grid):
        raise UsageError("grid values must be finite")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise UsageError("grid must be strictly increasing")
    return grid


# --------------------------------------------------------------------------
# commands


def _domain_from_args(args) -> DiskPairDomain:
    if args.disk:
        if args.mode is not None or args.ell is not None or args.alpha:
            raise UsageError("--disk cannot be combined with --mode/--ell/--alpha")
        return unit_disk()
    if args.alpha:
        if len(args.alpha) != 1 or args.mode is not None or args.ell is not None:
            raise UsageError("give a single --alpha, or --mode and --ell")
        return _alpha_domain(args.alpha[0])
    if args.mode is None or args.ell is None:
        raise UsageError("spectrum needs --mode and --ell, --alpha, or --disk")
    _check_ell(args.ell)
    return DiskPairDomain(args.ell, args.mode)


def _alpha_domain(alpha: float) -> DiskPairDomain:
    try:
        validate_alpha(alpha)
    except AlphaOutOfRange as exc:
        raise UsageError(str(exc))
    d = normalized_domain(alpha)
    _check_ell(d.ell)
    return d


def _stem(d: DiskPairDomain) -> str:
    return "disk" if d.mode == "disk" else f"{d.mode}-ell{fmt(d.ell)}"


def cmd_spectrum(args) -> int:
    d = _domain_from_args(args)
    k = args.k or 6
    s, b = solve(d, k, args.tol, args.n_per_arc, args.grading, max_n_per_arc=max(96, args.n_per_arc))
    doc = s.to_json()
    doc["multiplicities"] = s.multiplicities()
    base = os.path.join(args.out, f"spectrum-{_stem(d)}")
    text = dump_json(doc)
    atomic_write(base + ".json", text)
    if args.format == "csv":
        rows = [(i + 1, v, lab, m) for i, (v, lab, m) in enumerate(zip(s.eigenvalues, s.symmetry_labels, doc["multiplicities"]))]
        ctext = csv_text(["index", "mu", "label", "multiplicity"], rows)
        atomic_write(base + ".csv", ctext)
        sys.stdout.write(ctext)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _sweep_row(mode: str, ell: float, k: int, settings: SolverSettings) -> dict:
    row = {"ell": ell, "mu": [math.nan] * k, "gap_to_1": math.nan, "verdict": "fail", "error": ""}
    try:
        cert = check_eigenvalue_placement(ell, mode, settings)
        s, _ = spectrum_for(DiskPairDomain(ell, mode), max(k, 5), settings)
        ev = s.eigenvalues
        i = 1 if mode == "intersection" else 2
        row["mu"] = [float(v) for v in ev[:k]]
        row["gap_to_1"] = float(min(ev[i] - ev[i - 1], ev[i + 1] - ev[i]))
        row["verdict"] = cert.verdict
        if not cert.passed:
            row["error"] = cert.first_failure().name
    except LiouvilleSteklovError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_sweep(args) -> int:
    if args.mode is None:
        raise UsageError("sweep needs --mode")
    grid = parse_grid(args.grid or "")
    if not grid:
        raise UsageError("empty ell grid")
    for g in grid:
        _check_ell(g)
    k = args.k or 4
    if k < 1:
        raise UsageError("--k must be positive")
    settings = _settings(args)
    if args.jobs == 1 or len(grid) == 1:
        rows = [_sweep_row(args.mode, g, k, settings) for g in grid]
    else:
        with ProcessPoolExecutor(max_workers=min(args.jobs, len(grid))) as ex:
            futs = [ex.submit(_sweep_row, args.mode, g, k, settings) for g in grid]
            rows = [f.result() for f in futs]  # grid order, whatever the completion order
    header = ["ell"] + [f"mu_{j + 1}" for j in range(k)] + ["gap_to_1", "verdict", "error"]
    table = [[r["ell"], *r["mu"], r["gap_to_1"], r["verdict"], r["error"]] for r in rows]
    text = csv_text(header, table)
    base = os.path.join(args.out, f"sweep-{args.mode}")
    atomic_write(base + ".csv", text)
    if args.svg:
        atomic_write(base + ".svg", branches_svg(grid, [r["mu"] for r in rows], f"{args.mode} sweep"))
    if args.format == "json":
        sys.stdout.write(dump_json({"mode": args.mode, "k": k, "rows": rows}))
    else:
        sys.stdout.write(text)
    failed = [r for r in rows if r["verdict"] != "pass"]
    for r in failed:
        print(f"row ell={fmt(r['ell'])} failed: {r['error']}", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


def _certificates_for(alpha: float, settings: SolverSettings):
    d = normalized_domain(alpha)
    p = BubbleParams(alpha, 1.0)
    yield check_mu_alpha_identity(alpha)
    yield check_bubble_residual(p)
    yield check_linearized_residual(p)
    yield check_eigenvalue_placement(d.ell, d.mode, settings)
    yield morse_index(alpha, settings)
    yield check_nondegeneracy_pipeline(alpha, 1.0, settings)


def cmd_verify(args) -> int:
    alphas = args.alpha or ([] if args.regular_control else [0.5, 1.5])
    for a in alphas:
        if a == 1.0:
            raise UsageError(
                "alpha=1 is not in the singular family (0,1)U(1,2); "
                "run `verify --regular-control` for the alpha=1 multiplicity check"
            )
        _alpha_domain(a)
    settings = _settings(args)
    lines, certs = [], []

    def emit(c):
        certs.append(c)
        line = c.json_line()
        lines.append(line)
        if args.format == "json":
            print(line, flush=True)

    for a in alphas:
        for c in _certificates_for(a, settings):
            emit(c)
    if args.regular_control:
        emit(check_regular_control(settings))
    atomic_write(os.path.join(args.out, "certificates.jsonl"), "\n".join(lines) + "\n")
    table = [[c.name, json.dumps(c.params, sort_keys=True), c.verdict] for c in certs]
    if args.format == "csv":
        sys.stdout.write(csv_text(["name", "params", "verdict"], table))
    failed = [c for c in certs if not c.passed]
    if failed:
        sub = failed[0].first_failure()
        print(f"certificate failed: {failed[0].name} {json.dumps(failed[0].params)} (part {sub.name})", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# --------------------------------------------------------------------------
# SVG


def _svg_doc(width, height, body, title) -> str:
    return (
        f'<?xml version="1.0" encoding="UTF-8"?>\n<!-- liouville-steklov {__version__} -->\n'
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">\n'
        f"<title>{title}</title>\n" + "\n".join(body) + "\n</svg>\n"
    )


def _c(v) -> str:
    return format(float(v), ".3f")


def boundary_zero_points(v, b, threshold: float = 1e-8) -> np.ndarray:
    """Points where a nodal trace changes sign around the boundary, located by
    linear interpolation between consecutive retained nodes."""
    v = np.asarray(v, dtype=float)
    keep = np.nonzero(np.abs(v) > threshold * np.abs(v).max())[0]
    pts = []
    for i, j in zip(keep, np.roll(keep, -1)):
        if np.sign(v[i]) != np.sign(v[j]):
            t = v[i] / (v[i] - v[j])
            pts.append(b.nodes[i] + t * (b.nodes[j] - b.nodes[i]))
    return np.array(pts).reshape(-1, 2)


def domain_svg(d: DiskPairDomain, markers: np.ndarray, title: str, size: int = 480) -> str:
    ext = 1.0 + d.ell + 0.15
    sc = size / (2.0 * ext)
    X = lambda x: (x + ext) * sc  # noqa: E731
    Y = lambda y: (ext - y) * sc  # noqa: E731
    body = [f'<rect width="{size}" height="{size}" fill="white"/>']
    path = []
    for arc in d.arcs:
        phi = np.linspace(arc.angle_from, arc.angle_to, 200)
        pts = arc.point(phi)
        seg = " ".join(f"{_c(X(x))},{_c(Y(y))}" for x, y in pts)
        path.append(f'<polyline points="{seg}" fill="none" stroke="black" stroke-width="2"/>')
    body += path
    body.append(f'<line x1="{_c(X(0))}" y1="0" x2="{_c(X(0))}" y2="{size}" stroke="#bbb" stroke-dasharray="4 4"/>')
    body.append(f'<line x1="0" y1="{_c(Y(0))}" x2="{size}" y2="{_c(Y(0))}" stroke="#bbb" stroke-dasharray="4 4"/>')
    for x, y in markers:
        body.append(f'<circle cx="{_c(X(x))}" cy="{_c(Y(y))}" r="6" fill="red" stroke="black"/>')
    body.append(f'<text x="8" y="20" font-family="sans-serif" font-size="14">{title}</text>')
    return _svg_doc(size, size, body, title)


def branches_svg(grid, mus, title: str, width: int = 640, height: int = 420) -> str:
    mus = np.array([[np.nan if m is None else m for m in row] for row in mus], dtype=float)
    finite = mus[np.isfinite(mus)]
    lo, hi = 0.0, max(1.5, float(finite.max()) if finite.size else 1.5) * 1.05
    x0, x1 = min(grid), max(grid)
    if x1 == x0:
        x0, x1 = x0 - 0.05, x1 + 0.05
    pad = 50
    X = lambda x: pad + (x - x0) / (x1 - x0) * (width - 2 * pad)  # noqa: E731
    Y = lambda y: height - pad - (y - lo) / (hi - lo) * (height - 2 * pad)  # noqa: E731
    body = [f'<rect width="{width}" height="{height}" fill="white"/>']
    body.append(f'<line x1="{pad}" y1="{_c(Y(1))}" x2="{width - pad}" y2="{_c(Y(1))}" stroke="red" stroke-dasharray="6 3"/>')
    body.append(f'<text x="{width - pad + 4}" y="{_c(Y(1) + 4)}" font-family="sans-serif" font-size="12">1</text>')
    body.append(f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" fill="none" stroke="black"/>')
    palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22"]
    for j in range(mus.shape[1]):
        pts = [(X(g), Y(m)) for g, m in zip(grid, mus[:, j]) if np.isfinite(m)]
        col = palette[j % len(palette)]
        if len(pts) > 1:
            body.append(f'<polyline points="{" ".join(f"{_c(a)},{_c(c)}" for a, c in pts)}" fill="none" stroke="{col}" stroke-width="2"/>')
        for a, c in pts:
            body.append(f'<circle cx="{_c(a)}" cy="{_c(c)}" r="3" fill="{col}"/>')
    body.append(f'<text x="{pad}" y="{pad - 12}" font-family="sans-serif" font-size="14">{title}</text>')
    body.append(f'<text x="{width / 2}" y="{height - 12}" font-family="sans-serif" font-size="12">ell</text>')
    return _svg_doc(width, height, body, title)


def cmd_plot(args) -> int:
    if not args.input:
        raise UsageError("plot needs --input (a spectrum JSON or a sweep CSV)")
    if not os.path.isfile(args.input):
        raise UsageError(f"input file not found: {args.input}")
    stem = os.path.splitext(os.path.basename(args.input))[0]
    if args.input.endswith(".csv"):
        with open(args.input, newline="") as f:
            rows = list(csv.DictReader(f))
        if not rows or "ell" not in rows[0]:
            raise UsageError("sweep CSV has no rows or no ell column")
        cols = sorted((c for c in rows[0] if c.startswith("mu_")), key=lambda c: int(c[3:]))
        grid = [float(r["ell"]) for r in rows]
        mus = [[float(r[c]) for c in cols] for r in rows]
        out = os.path.join(args.out, stem + ".svg")
        atomic_write(out, branches_svg(grid, mus, stem))
        print(out)
        return EXIT_OK
    try:
        with open(args.input) as f:
            doc = json.load(f)
        dom = doc["domain"]
        d = DiskPairDomain(float(dom["ell"]), dom["mode"], float(dom.get("scale", 1.0)))
        n = int(doc["n_per_arc"])
        grading = float(doc.get("grading", 3.0))
        k = len(doc["eigenvalues"])
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"cannot read spectrum JSON {args.input}: {exc}")
    index = args.index or 1
    if not 1 <= index <= k:
        raise UsageError(f"--index must lie in [1, {k}]")
    from .steklov import compute_spectrum

    b = discretize(d, n, grading)
    s = compute_spectrum(b, k, float(doc.get("tol") or 1e-6))
    v = s.eigenvectors[:, index - 1]
    markers = np.zeros((0, 2)) if np.ptp(v) < 1e-6 * np.abs(v).max() else boundary_zero_points(v, b, max(1e-8, 10 * s.est_error))
    title = f"{_stem(d)} eigenfunction {index} (mu={s.eigenvalues[index - 1]:.6f}, {s.symmetry_labels[index - 1]})"
    out = os.path.join(args.out, f"{stem}-eig{index}.svg")
    atomic_write(out, domain_svg(d, markers, title))
    print(out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    g = common.add_argument_group("global options")
    g.add_argument("--config", help="key = value file; explicit flags override it")
    g.add_argument("--tol", type=float, help="spectrum convergence tolerance (default 1e-6)")
    g.add_argument("--eig-tol", dest="eig_tol", type=float, help="band for eigenvalue-equals-1 checks (default 1e-5)")
    g.add_argument("--n-per-arc", dest="n_per_arc", type=int, help="panels per boundary arc (default 40)")
    g.add_argument("--grading", type=float, help="corner grading exponent (default 3)")
    g.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./out)")
    g.add_argument("--format", choices=("json", "csv"), help="stdout and extra file format (default json)")
    g.add_argument("--jobs", type=int, help="worker processes for sweeps (default: CPU count)")

    p = _Parser(prog="liouville-steklov", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("spectrum", parents=[common], help="Steklov spectrum of one domain")
    sp.add_argument("--mode", choices=("intersection", "union"))
    sp.add_argument("--ell", type=float)
    sp.add_argument("--alpha", type=float, action="append", help="use the normalized domain of this alpha")
    sp.add_argument("--disk", action="store_true", default=None)
    sp.add_argument("--k", type=int, help="number of eigenvalues (default 6)")

    sw = sub.add_parser("sweep", parents=[common], help="eigenvalue branches along an ell grid")
    sw.add_argument("--mode", choices=("intersection", "union"))
    sw.add_argument("--grid", help="ell grid: 'a:b:step' or a list (default 0.1:0.9:0.1)")
    sw.add_argument("--k", type=int, help="eigenvalues per row (default 4)")
    sw.add_argument("--svg", action="store_true", default=None, help="also write a branch plot")

    vf = sub.add_parser("verify", parents=[common], help="run the certificates for each alpha")
    vf.add_argument("--alpha", type=float, action="append", help="repeatable; default 0.5 and 1.5")
    vf.add_argument("--regular-control", dest="regular_control", action="store_true", default=None,
                    help="add the alpha=1 multiplicity-2 control on the unit disk")

    pl = sub.add_parser("plot", parents=[common], help="SVG of a spectrum JSON or a sweep CSV")
    pl.add_argument("--input", help="spectrum-*.json or sweep-*.csv from an earlier run")
    pl.add_argument("--index", type=int, help="eigenfunction to draw, 1-based (default 1)")
    return p


COMMANDS = {"spectrum": cmd_spectrum, "sweep": cmd_sweep, "verify": cmd_verify, "plot": cmd_plot}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if getattr(args, "config", None):
            _apply_config(args, read_config(args.config))
        if args.command == "sweep" and args.grid is None:
            args.grid = "0.1:0.9:0.1"
        _finalise(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotConverged as exc:
        print(f"not converged: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except InvalidParameter as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LiouvilleSteklovError as exc:
        print(f"failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
