"""Command line entry point: configuration parsing and experiment driver."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .adaptivity import adapt_loop, rate_fit
from .config import MINI, TAYLOR_HOOD, ConfigError, ProblemConfig
from .output import RunManifest, write_convergence_csv, write_vtk

log = logging.getLogger(__name__)

_ELEMENT_ALIASES = {"th": TAYLOR_HOOD, "taylor_hood": TAYLOR_HOOD, "mini": MINI}

_FLOAT_KEYS = {"nu", "kappa", "gx", "gy", "hsource", "alpha",
               "picard_tol", "marking_frac"}
_INT_KEYS = {"adapt_max", "picard_max", "initial_resolution"}
_STR_KEYS = {"domain", "element", "z"}


def _coerce(key: str, raw: str):
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _INT_KEYS:
        return int(raw)
    if key in _STR_KEYS:
        return raw.strip()
    raise ConfigError(f"unknown configuration key {key!r}")


def _read_config_file(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        key, raw = (part.strip() for part in line.split("=", 1))
        values[key] = _coerce(key, raw)
    return values


def _parse_z(raw: str):
    try:
        x, y = (float(part) for part in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"z must be 'X,Y', got {raw!r}") from exc
    return (x, y)


def parse_config(path=None, overrides: dict | None = None) -> ProblemConfig:
    """Build a ProblemConfig from an optional key=value file plus overrides."""
    values: dict = {}
    if path is not None:
        values.update(_read_config_file(path))
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        values[key] = _coerce(key, str(val)) if isinstance(val, str) else val

    kwargs = {}
    if "domain" in values:
        kwargs["domain"] = values["domain"]
    if "element" in values:
        name = str(values["element"]).lower()
        if name not in _ELEMENT_ALIASES:
            raise ConfigError(f"unknown element {values['element']!r}")
        kwargs["element_family"] = _ELEMENT_ALIASES[name]
    if "z" in values:
        kwargs["z"] = _parse_z(str(values["z"]))
    if "gx" in values or "gy" in values:
        kwargs["g"] = (float(values.get("gx", 1.0)), float(values.get("gy", 0.0)))
    if "hsource" in values:
        kwargs["h_strength"] = values["hsource"]
    if "marking_frac" in values:
        kwargs["marking_fraction"] = values["marking_frac"]
    for key in ("nu", "kappa", "alpha", "picard_tol", "picard_max",
                "adapt_max", "initial_resolution"):
        if key in values:
            kwargs[key] = values[key]
    return ProblemConfig(**kwargs)


def run_experiment(cfg: ProblemConfig, out_dir="out", vtk_every: int = 0) -> int:
    """Adaptive run with CSV (and optional VTK) output; 0 means success."""
    manifest = RunManifest.create(cfg, out_dir, __version__)
    manifest.write()

    def on_iteration(mesh, state, indicators, record):
        last = record.iteration == cfg.adapt_max - 1
        if vtk_every > 0 and (record.iteration % vtk_every == 0 or last):
            write_vtk(mesh, state, manifest.vtk_path(record.iteration))

    records = adapt_loop(cfg, on_iteration=on_iteration)
    write_convergence_csv(records, manifest.csv_path)

    if len(records) >= 5:
        slope = rate_fit(records)
        print(f"estimator decay: slope {slope:+.3f} over the last "
              f"{len(records) - len(records) // 2} of {len(records)} iterations")
    print(f"records: {len(records)}  final elements: {records[-1].n_elements}  "
          f"final estimator: {records[-1].estimator_total:.6e}")
    print(f"output: {manifest.csv_path}")

    complete = len(records) == cfg.adapt_max and records[-1].converged
    return 0 if complete else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="boussinesq-afem",
        description="Adaptive solver for buoyancy-driven flow heated at a point")
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="run one adaptive experiment")
    solve.add_argument("--config", type=Path, default=None,
                       help="key=value configuration file")
    solve.add_argument("--domain", choices=["square", "lshape"], default=None)
    solve.add_argument("--alpha", type=float, default=None)
    solve.add_argument("--nu", type=float, default=None)
    solve.add_argument("--kappa", type=float, default=None)
    solve.add_argument("--gx", type=float, default=None)
    solve.add_argument("--gy", type=float, default=None)
    solve.add_argument("--hsource", type=float, default=None)
    solve.add_argument("--z", type=str, default=None, metavar="X,Y")
    solve.add_argument("--element", choices=sorted(_ELEMENT_ALIASES), default=None)
    solve.add_argument("--adapt-max", type=int, default=None, dest="adapt_max")
    solve.add_argument("--picard-tol", type=float, default=None,
                       dest="picard_tol")
    solve.add_argument("--marking-frac", type=float, default=None,
                       dest="marking_frac")
    solve.add_argument("--out", type=Path, default=Path("out"))
    solve.add_argument("--vtk-every", type=int, default=0, dest="vtk_every")
    solve.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")
    overrides = {key: getattr(args, key) for key in (
        "domain", "alpha", "nu", "kappa", "gx", "gy", "hsource", "z",
        "element", "adapt_max", "picard_tol", "marking_frac")}
    try:
        cfg = parse_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run_experiment(cfg, out_dir=args.out, vtk_every=args.vtk_every)


if __name__ == "__main__":
    sys.exit(main())
