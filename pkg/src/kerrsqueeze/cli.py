"""Batch command line: sweeps, Monte Carlo bands, baselines and plot data.

    kerrsqueeze sweep --kind cubic --grid 0.1:3:30 --profile ci --out runs/cubic
    kerrsqueeze mc --kind cubic --sweep-dir runs/cubic --gamma 0.01 0.05 --out runs/cubic-mc
    kerrsqueeze baselines
    kerrsqueeze plotdata runs/cubic/sweep_cubic.csv --format svg --out cubic.svg
    kerrsqueeze replay runs/cubic/manifest.json --out runs/cubic-again

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
import time
from dataclasses import astuple
from pathlib import Path

import numpy as np

from . import __version__
from .fock import KERR_CONVENTIONS, FockError
from .metrics import gaussian_baseline
from .optimize import KINDS, OptimizationFailed, sweep
from .robustness import PICTURES, FluctuationSpec, MonteCarloError, fixed_mask, monte_carlo

log = logging.getLogger("kerrsqueeze")

CSV_SCHEMA = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

SWEEP_COLUMNS = {
    "linear": ("alpha", "min_eigenvalue", "chi"),
    "cubic": ("primary_param", "objective_variance", "xi", "chi", "phi", "beta", "g"),
    "quartic": ("primary_param", "objective_variance", "xi", "chi", "phi1", "omega", "phi2"),
}
PARAMS_COLUMNS = {
    "linear": ("alpha", "chi"),
    "cubic": ("alpha", "chi", "phi", "beta", "r"),
    "quartic": ("r", "chi", "phi1", "w", "phi2"),
}
MC_COLUMNS = ("primary_param", "mean_xi", "sigma_plus", "sigma_minus", "n_plus", "n_minus", "failures")

PROFILES = {
    "full": {"dim": 300, "n_starts": 300, "n_runs": 10000},
    "ci": {"dim": 120, "n_starts": 40, "n_runs": 1000},
}
DEFAULTS = {
    "sweep": {"kind": None, "grid": None, "dim": 300, "convention": "nPlus1Sq",
              "n_starts": 300, "seed": 0, "max_evals": 2000},
    "mc": {"kind": None, "sweep_dir": None, "mu": None, "gamma": [0.01, 0.05],
           "n_runs": 10000, "fixed": [], "seed": 0, "dim": None, "convention": None,
           "picture": "heisenberg"},
}


class ConfigError(ValueError):
    pass


# -- formatting and files ------------------------------------------------------


def fmt(value) -> str:
    """12 significant digits, '.' radix, independent of locale."""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".12g")


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path: Path) -> tuple[list[str], np.ndarray]:
    """Header and float rows of a CSV written by this tool."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not rows or not rows[0]:
        raise ConfigError(f"{path} is empty")
    header, body = rows[0], [r for r in rows[1:] if r]
    if not body:
        raise ConfigError(f"{path} has a header but no data rows")
    try:
        data = np.array([[float(v) for v in r] for r in body])
    except ValueError as exc:
        raise ConfigError(f"{path} has a non-numeric entry: {exc}") from exc
    if data.shape[1] != len(header):
        raise ConfigError(f"{path}: rows do not match the {len(header)}-column header")
    return header, data


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_manifest(out: Path, command: str, config: dict, outputs: dict[str, str],
                   timings: dict, diagnostics: dict, inputs: dict[str, str] | None = None) -> Path:
    canonical = json.dumps({"command": command, "config": config, "inputs": inputs or {}},
                           sort_keys=True, separators=(",", ":"))
    manifest = {
        "version": __version__,
        "csv_schema": CSV_SCHEMA,
        "command": command,
        "config": config,
        "convention": config.get("convention"),
        "seed": config.get("seed"),
        "dim": config.get("dim"),
        "input_hash": _sha256(canonical),
        "inputs": inputs or {},
        "outputs": {name: _sha256(text) for name, text in outputs.items()},
        "timings": timings,
        "diagnostics": diagnostics,
    }
    path = out / "manifest.json"
    atomic_write(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# -- configuration ---------------------------------------------------------------


def parse_grid(spec) -> list[float]:
    """``"start:stop:num"`` (inclusive linspace), a comma list, or a list of numbers."""
    if isinstance(spec, (list, tuple)):
        values = [float(v) for v in spec]
    elif isinstance(spec, str) and spec.count(":") == 2:
        start, stop, num = spec.split(":")
        n = int(num)
        if n < 1:
            raise ConfigError("grid needs at least one point")
        values = [float(v) for v in np.linspace(float(start), float(stop), n)]
    elif isinstance(spec, str):
        values = [float(v) for v in spec.split(",") if v.strip()]
    else:
        raise ConfigError(f"cannot parse grid {spec!r}")
    if not values:
        raise ConfigError("grid is empty")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError("grid must be strictly increasing")
    return values


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    """Defaults < profile < config file < explicit flags."""
    config = dict(DEFAULTS[command])
    profile = getattr(args, "profile", None)
    if profile:
        config.update({k: v for k, v in PROFILES[profile].items() if k in config})
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {args.config}: {exc}") from exc
        unknown = set(loaded) - set(config)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        config.update(loaded)
    for key in config:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    return config


def _check_common(config: dict, kinds) -> None:
    if config["kind"] not in kinds:
        raise ConfigError(f"--kind must be one of {kinds}, got {config['kind']!r}")
    if config.get("convention") is not None and config["convention"] not in KERR_CONVENTIONS:
        raise ConfigError(f"--convention must be one of {KERR_CONVENTIONS}")
    if config.get("dim") is not None and int(config["dim"]) < 2:
        raise ConfigError("--dim must be >= 2")


# -- commands --------------------------------------------------------------------


def sweep_tables(result) -> tuple[str, str]:
    """``(sweep csv, params csv)`` text for a :class:`~kerrsqueeze.optimize.SweepResult`."""
    kind = result.kind
    rows, prows = [], []
    for pt in result.points:
        if kind == "linear":
            rows.append((pt.primary_param, pt.objective, pt.best_params[0]))
        else:
            rows.append((pt.primary_param, pt.objective, pt.xi, *pt.best_params))
        prows.append(astuple(pt.prep_params()))
    return _csv_text(SWEEP_COLUMNS[kind], rows), _csv_text(PARAMS_COLUMNS[kind], prows)


PLATEAU_TARGET = (0.2, 0.05)


def chi_plateau(result) -> dict:
    """Mean optimal χ over the last quarter of a quartic sweep, and whether it
    lands on the expected large-r plateau under this run's Kerr convention."""
    chi = result.param("chi")
    tail = chi[-max(1, len(chi) // 4):]
    value = float(np.mean(tail))
    target, tol = PLATEAU_TARGET
    return {"convention": result.convention, "value": value, "spread": float(np.ptp(tail)),
            "target": target, "tolerance": tol, "matches": bool(abs(value - target) <= tol)}


def cmd_sweep(config: dict, out: Path) -> dict:
    _check_common(config, KINDS)
    if config["grid"] is None:
        raise ConfigError("--grid is required")
    grid = parse_grid(config["grid"])
    config["grid"] = grid
    t0 = time.perf_counter()
    result = sweep(config["kind"], grid, n_starts=int(config["n_starts"]), seed=int(config["seed"]),
                   dim=int(config["dim"]), convention=config["convention"],
                   max_evals=int(config["max_evals"]))
    elapsed = time.perf_counter() - t0
    if not result.points:
        raise OptimizationFailed("every sweep point failed", {"failures": result.failures})
    kind = config["kind"]
    sweep_csv, params_csv = sweep_tables(result)
    outputs = {f"sweep_{kind}.csv": sweep_csv, f"params_{kind}.csv": params_csv}
    for name, text in outputs.items():
        atomic_write(out / name, text)
    diagnostics = {
        "points": [{"primary_param": p.primary_param, "n_evals": p.n_evals,
                    "rejected_starts": p.n_rejected} for p in result.points],
        "failures": result.failures,
    }
    if kind == "quartic":
        diagnostics["chi_plateau"] = chi_plateau(result)
    write_manifest(out, "sweep", config, outputs, {"wall_seconds": elapsed}, diagnostics)
    return outputs


def _load_mu(config: dict) -> tuple[list[float], list[tuple], dict]:
    """Grid values and gate tuples for the Monte Carlo, plus the sweep's manifest."""
    kind = config["kind"]
    if config.get("mu") is not None:
        mu = [float(v) for v in (config["mu"].split(",") if isinstance(config["mu"], str) else config["mu"])]
        if len(mu) != 5:
            raise ConfigError("--mu needs five comma-separated gate parameters")
        primary = mu[0]
        return [primary], [tuple(mu)], {}
    if config.get("sweep_dir") is None:
        raise ConfigError("mc needs --sweep-dir (output of a previous sweep) or --mu")
    sweep_dir = Path(config["sweep_dir"])
    params_path = sweep_dir / f"params_{kind}.csv"
    if not params_path.exists():
        raise ConfigError(f"missing sweep input {params_path}; run `kerrsqueeze sweep --kind {kind}` first")
    header, data = read_csv(params_path)
    if tuple(header) != PARAMS_COLUMNS[kind]:
        raise ConfigError(f"{params_path} does not have the {kind} parameter columns")
    manifest = {}
    mpath = sweep_dir / "manifest.json"
    if mpath.exists():
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    return [float(row[0]) for row in data], [tuple(float(v) for v in row) for row in data], manifest


def cmd_mc(config: dict, out: Path) -> dict:
    _check_common(config, ("cubic", "quartic"))
    grid, mus, sweep_manifest = _load_mu(config)
    # dimension and convention default to the ones the sweep used
    for key, fallback in (("dim", 300), ("convention", "nPlus1Sq")):
        if config.get(key) is None:
            config[key] = sweep_manifest.get(key) or fallback
    _check_common(config, ("cubic", "quartic"))
    kind = config["kind"]
    if config["picture"] not in PICTURES:
        raise ConfigError(f"--picture must be one of {PICTURES}")
    gammas = [float(g) for g in config["gamma"]]
    if any(not g >= 0 for g in gammas):
        raise ConfigError("--gamma values must be >= 0")
    fixed = list(config.get("fixed") or [])
    try:
        mask = fixed_mask(kind, *fixed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    inputs = {}
    if config.get("sweep_dir") is not None:
        p = Path(config["sweep_dir"]) / f"params_{kind}.csv"
        inputs[str(p.name)] = _sha256(p.read_text(encoding="utf-8"))

    outputs, diagnostics, t0 = {}, {"fixed_mask": list(mask), "per_gamma": {}}, time.perf_counter()
    for gamma in gammas:
        spec = FluctuationSpec(gamma, int(config["n_runs"]), mask, int(config["seed"]))
        rows, diag = [], []
        for primary, mu in zip(grid, mus):
            stats = monte_carlo(kind, mu, spec, dim=int(config["dim"]),
                                convention=config["convention"], keep_trace=False,
                                picture=config["picture"])
            rows.append((primary, stats.mean_xi, stats.sigma_plus, stats.sigma_minus,
                         stats.n_plus, stats.n_minus, stats.n_failed))
            diag.append({"primary_param": primary, "failures": stats.n_failed,
                         "clamp_rate": stats.clamp_rate, "frac_below_mean": stats.frac_below_mean})
        name = f"mc_{kind}_{fmt(gamma)}.csv"
        outputs[name] = _csv_text(MC_COLUMNS, rows)
        atomic_write(out / name, outputs[name])
        diagnostics["per_gamma"][fmt(gamma)] = diag
    write_manifest(out, "mc", config, outputs, {"wall_seconds": time.perf_counter() - t0},
                   diagnostics, inputs)
    return outputs


def baselines_report() -> str:
    lines = []
    for n in (3, 4):
        b = gaussian_baseline(n)
        lines.append(f"n={n}  variance={b.variance:.6g}  g={b.g:.6g}  phi={b.phi:.6g}")
    return "\n".join(lines) + "\n"


# -- plot data -------------------------------------------------------------------


def tidy_rows(header, data) -> list[tuple]:
    """Long form ``(series, x, y)``; the first column is the abscissa."""
    return [(name, row[0], row[j]) for j, name in enumerate(header) if j > 0 for row in data]


def _svg(width, height, xs, series: dict, band=None, xlabel="") -> str:
    pad = 40
    ys = [v for vals in series.values() for v in vals]
    if band is not None:
        ys += list(band[0]) + list(band[1])
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def px(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def py(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
             'fill="none" stroke="#888"/>']
    if band is not None:
        lo, hi = band
        pts = [(px(x), py(y)) for x, y in zip(xs, hi)] + [(px(x), py(y)) for x, y in zip(xs[::-1], lo[::-1])]
        parts.append('<polygon class="band" fill="#1f77b4" fill-opacity="0.25" stroke="none" points="'
                     + " ".join(f"{a:.2f},{b:.2f}" for a, b in pts) + '"/>')
    for k, (name, vals) in enumerate(series.items()):
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, vals))
        parts.append(f'<polyline class="series" data-series="{name}" fill="none" '
                     f'stroke="{colors[k % len(colors)]}" stroke-width="1.5" points="{pts}"/>')
    parts.append(f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" font-size="12">{xlabel}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plotdata(path: Path, style: str) -> str:
    header, data = read_csv(path)
    xs = list(data[:, 0])
    if style == "tidy":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("series", header[0], "value"))
        writer.writerows((name, fmt(x), fmt(y)) for name, x, y in tidy_rows(header, data))
        return buf.getvalue()
    if style != "svg":
        raise ConfigError(f"unknown plot style {style!r}")
    if tuple(header) == MC_COLUMNS:
        mean, sp, sm = data[:, 1], data[:, 2], data[:, 3]
        return _svg(640, 400, xs, {"mean_xi": list(mean)}, band=(list(mean - sm), list(mean + sp)),
                    xlabel=header[0])
    series = {name: list(data[:, j]) for j, name in enumerate(header) if j > 0}
    return _svg(640, 400, xs, series, xlabel=header[0])


# -- entry point -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kerrsqueeze", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="optimize the gate parameters over a grid")
    sw.add_argument("--kind", choices=KINDS)
    sw.add_argument("--grid", help="start:stop:num or comma-separated values")
    sw.add_argument("--dim", type=int)
    sw.add_argument("--convention", choices=KERR_CONVENTIONS)
    sw.add_argument("--n-starts", dest="n_starts", type=int)
    sw.add_argument("--max-evals", dest="max_evals", type=int)
    sw.add_argument("--seed", type=int)
    sw.add_argument("--profile", choices=sorted(PROFILES))
    sw.add_argument("--config", help="JSON file with any of the keys above")
    sw.add_argument("--out", required=True)

    mc = sub.add_parser("mc", help="Monte Carlo statistics under parameter noise")
    mc.add_argument("--kind", choices=("cubic", "quartic"))
    mc.add_argument("--sweep-dir", dest="sweep_dir")
    mc.add_argument("--mu", help="inline gate tuple, five comma-separated values")
    mc.add_argument("--gamma", type=float, nargs="+")
    mc.add_argument("--n-runs", dest="n_runs", type=int)
    mc.add_argument("--fix", dest="fixed", nargs="+", help="gate parameters held at their mean")
    mc.add_argument("--dim", type=int)
    mc.add_argument("--convention", choices=KERR_CONVENTIONS)
    mc.add_argument("--picture", choices=PICTURES)
    mc.add_argument("--seed", type=int)
    mc.add_argument("--profile", choices=sorted(PROFILES))
    mc.add_argument("--config")
    mc.add_argument("--out", required=True)

    sub.add_parser("baselines", help="print the Gaussian baselines")

    pd = sub.add_parser("plotdata", help="SVG or tidy CSV from a sweep/mc CSV")
    pd.add_argument("input")
    pd.add_argument("--format", dest="style", choices=("svg", "tidy"), default="svg")
    pd.add_argument("--out")

    rp = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    rp.add_argument("manifest")
    rp.add_argument("--out", required=True)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "baselines":
            sys.stdout.write(baselines_report())
        elif args.command == "plotdata":
            text = plotdata(Path(args.input), args.style)
            if args.out:
                atomic_write(Path(args.out), text)
            else:
                sys.stdout.write(text)
        elif args.command == "replay":
            try:
                manifest = json.loads(Path(args.manifest).read_text(encoding="utf-8"))
                command, config = manifest["command"], dict(manifest["config"])
            except (OSError, KeyError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot replay {args.manifest}: {exc}") from exc
            {"sweep": cmd_sweep, "mc": cmd_mc}[command](config, Path(args.out))
        else:
            config = resolve_config(args.command, args)
            {"sweep": cmd_sweep, "mc": cmd_mc}[args.command](config, Path(args.out))
    except ConfigError as exc:
        print(f"kerrsqueeze: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OptimizationFailed, MonteCarloError, FockError, FloatingPointError) as exc:
        print(f"kerrsqueeze: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
