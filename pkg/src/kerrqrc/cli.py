"""Command line entry point: ``qrc run | validate-config | replot``.

Exit codes: 0 success, 1 configuration error, 2 some simulation rows failed,
3 IO error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, aggregate_rows, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_IO = 0, 1, 2, 3


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _strs(text):
    return [v.strip() for v in text.split(",") if v.strip()]


# flag -> (config key, parser)
_OVERRIDES = {
    "--experiment": ("experiment", str),
    "--models": ("models", _strs),
    "--dims": ("dims", _ints),
    "--train-sizes": ("train_sizes", _ints),
    "--test-size": ("test_size", int),
    "--n-reservoirs": ("n_reservoirs", int),
    "--rel-std": ("rel_std", float),
    "--seed": ("seed", int),
    "--noise-grid": ("noise_grid", _floats),
    "--classical-form": ("classical_form", str),
    "--radius-form": ("radius_form", str),
    "--gamma-mode": ("gamma_mode", str),
    "--validation-size": ("validation_size", int),
    "--rtol": ("rtol", float),
    "--atol": ("atol", float),
    "--fixed-dt": ("fixed_dt", float),
    "--workers": ("workers", int),
    "--out-dir": ("out_dir", str),
}


def _add_config_args(p: argparse.ArgumentParser, config_required: bool = False) -> None:
    p.add_argument("--config", required=config_required, help="JSON config or run manifest")
    for flag, (key, _) in _OVERRIDES.items():
        p.add_argument(flag, dest=key, default=None, help=f"override '{key}'")
    p.add_argument("--no-charts", action="store_true", help="skip SVG output")


def _load_config(args) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: top level must be an object")
        if isinstance(data.get("config"), dict):
            data = dict(data["config"])
    for flag, (key, conv) in _OVERRIDES.items():
        raw = getattr(args, key)
        if raw is not None:
            try:
                data[key] = conv(raw)
            except ValueError:
                raise ConfigError(f"{flag}: cannot parse {raw!r}") from None
    if args.no_charts:
        data["charts"] = False
    return ExperimentConfig.from_dict(data)


def cmd_run(args) -> int:
    from .outputs import emit_outputs

    cfg = _load_config(args)
    result = run_experiment(cfg)
    try:
        paths = emit_outputs(result, cfg.out_dir)
    except OSError as exc:
        print(f"error: cannot write outputs: {exc.filename or ''} {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {paths['rows']} ({len(result.rows)} rows), {paths['aggregates']}")
    if result.n_failed:
        print(f"{result.n_failed} rows failed", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_validate(args) -> int:
    cfg = _load_config(args)
    print(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_replot(args) -> int:
    from .outputs import read_rows, write_aggregates, write_charts

    rows_path = Path(args.rows)
    try:
        rows = read_rows(rows_path)
    except OSError as exc:
        print(f"error: cannot read {rows_path}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError) as exc:
        print(f"error: {rows_path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out_dir) if args.out_dir else rows_path.parent
    experiments = sorted({r.experiment for r in rows})
    if len(experiments) > 1:
        print(f"error: rows from several experiments: {experiments}", file=sys.stderr)
        return EXIT_CONFIG
    if experiments and experiments[0] not in EXPERIMENTS:
        print(f"error: unknown experiment {experiments[0]!r}", file=sys.stderr)
        return EXIT_CONFIG
    aggregates = aggregate_rows(rows, args.gamma_mode)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_aggregates(aggregates, out_dir / "aggregates.csv")
        paths = write_charts(experiments[0], aggregates, out_dir) if experiments else []
    except OSError as exc:
        print(f"error: cannot write to {out_dir}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {len(paths)} charts to {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment")
    _add_config_args(p_run)
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate-config", help="check and print a config")
    p_val.add_argument("config_file", nargs="?", help="JSON config (same as --config)")
    _add_config_args(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_re = sub.add_parser("replot", help="recompute aggregates and charts from rows.csv")
    p_re.add_argument("rows")
    p_re.add_argument("--out-dir", default=None)
    p_re.add_argument("--gamma-mode", default="test", choices=("test", "validation"))
    p_re.set_defaults(func=cmd_replot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "config_file", None) and not args.config:
        args.config = args.config_file
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if args.command != "run" or args.config else EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
