"""Command-line entry point.

Subcommands:

* ``sweep``  - run an eps sweep for one model, write ``sweep.csv``,
               ``verdict.json``, ``summary.txt``, and report figures;
* ``models`` - list the available model kinds and their knobs;
* ``check``  - run the randomized invariant suites.

Settings come from built-in defaults, overridden by an INI-style config file
(``--config``), overridden in turn by command-line flags.  Exit status is 0
exactly when every verdict check (or every property) passes.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields, replace

from .errors import ConfigError, SpectralShiftError
from .models import KINDS, ModelSpec
from .properties import run_property_suite
from .sweep import geometric_schedule, run_sweep, verify_expansion

# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    """Flattened settings for one sweep run (sections [model]/[sweep]/[output])."""

    # [model]
    kind: str = "robin"
    grid: int = 64
    dimension: int = 1
    mode: int = 0
    profile: str = "uniform"
    symbol: str = "fractional"
    mask_fraction: float = 0.5
    hole_radius_factor: float = 0.25
    # [sweep]
    eps_start: float = 0.1
    eps_ratio: float = 0.5
    eps_count: int = 8
    tolerance: float = 0.05
    # [output]
    directory: str = "sweep-out"
    figures: bool = True

    def model_spec(self) -> ModelSpec:
        return ModelSpec(
            kind=self.kind,
            grid=self.grid,
            dimension=self.dimension,
            mode_index=self.mode,
            psi_profile=self.profile,
            symbol=self.symbol,
            mask_fraction=self.mask_fraction,
            hole_radius_factor=self.hole_radius_factor,
        )


_SECTIONS = {
    "model": (
        "kind", "grid", "dimension", "mode", "profile", "symbol",
        "mask_fraction", "hole_radius_factor",
    ),
    "sweep": ("eps_start", "eps_ratio", "eps_count", "tolerance"),
    "output": ("directory", "figures"),
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(section: str, key: str, raw: str, line_no: int):
    kind = _FIELD_TYPES[key]
    try:
        if kind == "bool":
            low = raw.strip().lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(f"not a boolean: {raw!r}")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(
            f"line {line_no}: bad value for [{section}] {key}: {exc}"
        ) from exc


def parse_config(text: str) -> RunConfig:
    """Parse the flat INI-style format into a RunConfig.

    Unknown sections or keys are rejected; error messages carry line numbers.
    """
    values = {}
    section = None
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"line {line_no}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected 'key = value', got {raw_line!r}")
        if section is None:
            raise ConfigError(f"line {line_no}: key outside of any section")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        if key not in _SECTIONS[section]:
            raise ConfigError(f"line {line_no}: unknown key {key!r} in [{section}]")
        if key in values:
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        value = _convert(section, key, raw_value, line_no)
        _check_range(section, key, value, line_no)
        values[key] = value
    return RunConfig(**values)


def _check_range(section: str, key: str, value, line_no: int) -> None:
    if key == "eps_ratio" and not 0.0 < value < 1.0:
        raise ConfigError(
            f"line {line_no}: [{section}] {key} must lie in (0, 1), got {value}"
        )
    if key == "eps_start" and value <= 0.0:
        raise ConfigError(f"line {line_no}: [{section}] {key} must be positive")
    if key == "eps_count" and value < 1:
        raise ConfigError(f"line {line_no}: [{section}] {key} must be at least 1")


def serialize_config(config: RunConfig) -> str:
    """Inverse of :func:`parse_config` (round-trips exactly)."""
    lines = []
    for section, keys in _SECTIONS.items():
        lines.append(f"[{section}]")
        for key in keys:
            value = getattr(config, key)
            if isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key} = {value}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectral-shift",
        description="First-order eigenvalue-shift sweeps for perturbed "
        "positive self-adjoint operators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sweep_p = sub.add_parser("sweep", help="run an eps sweep and write a report")
    sweep_p.add_argument("--config", help="INI-style configuration file")
    sweep_p.add_argument("--model", choices=KINDS, help="model kind")
    sweep_p.add_argument("--grid", type=int, help="grid resolution per axis")
    sweep_p.add_argument("--dimension", type=int, help="spatial dimension")
    sweep_p.add_argument("--mode", type=int, help="tracked eigenvalue index")
    sweep_p.add_argument("--eps-start", type=float, help="largest eps in the schedule")
    sweep_p.add_argument("--eps-ratio", type=float, help="geometric ratio in (0, 1)")
    sweep_p.add_argument("--eps-count", type=int, help="number of eps values")
    sweep_p.add_argument("--out", help="output directory")
    sweep_p.add_argument(
        "--no-figures", action="store_true", help="skip rendering report figures"
    )

    sub.add_parser("models", help="list available model kinds")

    check_p = sub.add_parser("check", help="run the randomized invariant suites")
    check_p.add_argument("--seed", type=int, default=20240817)
    check_p.add_argument(
        "--instances", type=int, default=15, help="instances per property"
    )
    return parser


_FLAG_OVERRIDES = {
    "model": "kind",
    "grid": "grid",
    "dimension": "dimension",
    "mode": "mode",
    "eps_start": "eps_start",
    "eps_ratio": "eps_ratio",
    "eps_count": "eps_count",
    "out": "directory",
}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    if args.config:
        with open(args.config) as fh:
            config = parse_config(fh.read())
    else:
        config = RunConfig()
    overrides = {}
    for flag, field_name in _FLAG_OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[field_name] = value
    if args.no_figures:
        overrides["figures"] = False
    return replace(config, **overrides)


# ---------------------------------------------------------------------------
# subcommands


def cmd_sweep(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    spec = config.model_spec()
    schedule = geometric_schedule(config.eps_start, config.eps_ratio, config.eps_count)
    table = run_sweep(spec, schedule)
    verdict = verify_expansion(table, tolerance=config.tolerance)

    out_dir = config.directory
    os.makedirs(out_dir, exist_ok=True)
    table.write_csv(os.path.join(out_dir, "sweep.csv"))
    with open(os.path.join(out_dir, "verdict.json"), "w") as fh:
        json.dump(verdict.as_dict(), fh, indent=2)
        fh.write("\n")
    figure_names = []
    if config.figures:
        from .report import render_figures  # deferred: matplotlib import cost

        figure_names = render_figures(table, out_dir)
    summary = _summary_text(table, verdict, figure_names)
    with open(os.path.join(out_dir, "summary.txt"), "w") as fh:
        fh.write(summary)
    print(summary, end="")
    return 0 if verdict.passed else 1


def _summary_text(table, verdict, figure_names) -> str:
    spec = table.spec
    lines = [
        f"model: {spec.kind} (grid {spec.grid}, dimension {spec.dimension}, "
        f"mode {spec.mode_index})",
        f"base eigenvalue: {table.lambda0:.10g}",
        f"rows evaluated: {len(table.rows)} (failed: {len(table.failures)})",
    ]
    for eps, msg in table.failures:
        lines.append(f"  failed eps={eps:g}: {msg}")
    lines.append("checks:")
    for check in verdict.checks:
        status = "pass" if check["pass"] else "FAIL"
        lines.append(
            f"  [{status}] {check['check']}: measured {check['measured']!r}, "
            f"expected {check['expected']!r} (tolerance {check['tolerance']!r})"
        )
    if figure_names:
        lines.append("figures: " + ", ".join(figure_names))
    lines.append("verdict: " + ("PASS" if verdict.passed else "FAIL"))
    return "\n".join(lines) + "\n"


_MODEL_NOTES = {
    "robin": "Neumann problem with a Robin boundary term of strength eps "
    "(dimension 1 or 2); shift is linear with the boundary-trace coefficient.",
    "conformal": "Dirichlet Laplacian under a conformal metric exp(2 eps Psi) "
    "(dimension 2 or 3); the first-order term vanishes in dimension 2.",
    "dirichlet_hole": "Dirichlet form constrained to vanish on a shrinking "
    "interior ball; shift follows the weighted capacity of the hole.",
    "pseudo": "Fourier-multiplier operator on a periodic lattice restricted "
    "to a sub-domain; shift is linear with a spectral-mass coefficient.",
}


def cmd_models(args: argparse.Namespace) -> int:
    for kind in KINDS:
        print(f"{kind}:")
        print(f"  {_MODEL_NOTES[kind]}")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    outcomes = run_property_suite(
        seed=args.seed, instances_per_property=args.instances
    )
    all_ok = True
    for outcome in outcomes:
        status = "pass" if outcome.passed else "FAIL"
        print(f"[{status}] {outcome.name} ({outcome.instances} instances)")
        for failure in outcome.failures:
            print(f"    {failure}")
        all_ok = all_ok and outcome.passed
    print("all properties pass" if all_ok else "property failures detected")
    return 0 if all_ok else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {"sweep": cmd_sweep, "models": cmd_models, "check": cmd_check}[
        args.command
    ]
    try:
        return handler(args)
    except SpectralShiftError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
