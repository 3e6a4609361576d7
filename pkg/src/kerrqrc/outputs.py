"""CSV tables, SVG charts and run manifests for experiment results."""

from __future__ import annotations

import csv
import json
import math
import os
from collections import defaultdict
from pathlib import Path

from .experiments import (
    AGGREGATE_FIELDS,
    ROW_FIELDS,
    ExperimentConfig,
    ExperimentResult,
    Row,
    aggregate_rows,
    manifest,
)

ROWS_FILE = "rows.csv"
AGGREGATES_FILE = "aggregates.csv"
MANIFEST_FILE = "manifest.json"

_INT_FIELDS = {"dim", "train_size", "reservoir", "n_out"}
_STR_FIELDS = {"experiment", "model", "variant", "noise_branch", "status"}


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_FIELDS)
        for r in rows:
            w.writerow([_fmt(getattr(r, k)) for k in ROW_FIELDS])


def read_rows(path) -> list:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(ROW_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for rec in reader:
            vals = {}
            for k in ROW_FIELDS:
                if k in _INT_FIELDS:
                    vals[k] = int(rec[k])
                elif k in _STR_FIELDS:
                    vals[k] = rec[k]
                else:
                    vals[k] = float(rec[k])
            out.append(Row(**vals))
    return out


def write_aggregates(aggregates, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(AGGREGATE_FIELDS)
        for a in aggregates:
            w.writerow([_fmt(a[k]) for k in AGGREGATE_FIELDS])


def read_aggregates(path) -> list:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            a = {}
            for k in AGGREGATE_FIELDS:
                if k in ("model", "gamma_mode"):
                    a[k] = rec[k]
                elif k in ("dim", "train_size"):
                    a[k] = int(rec[k])
                else:
                    a[k] = float(rec[k])
            out.append(a)
    return out


def check_aggregates(rows, aggregates, gamma_mode: str, tol: float = 1e-12) -> None:
    """Raise ValueError unless ``aggregates`` match those recomputed from ``rows``."""
    fresh = aggregate_rows(rows, gamma_mode)
    if len(fresh) != len(aggregates):
        raise ValueError(f"{len(aggregates)} aggregate rows, expected {len(fresh)}")
    for a, b in zip(aggregates, fresh):
        for k in AGGREGATE_FIELDS:
            x, y = a[k], b[k]
            if isinstance(y, float):
                if not math.isclose(x, y, rel_tol=tol, abs_tol=tol):
                    raise ValueError(f"aggregate {k} mismatch: {x!r} vs {y!r}")
            elif x != y:
                raise ValueError(f"aggregate {k} mismatch: {x!r} vs {y!r}")


def load_result(out_dir) -> ExperimentResult:
    """Load a finished run, verifying the aggregates against the rows."""
    out_dir = Path(out_dir)
    with open(out_dir / MANIFEST_FILE, encoding="utf-8") as fh:
        cfg = ExperimentConfig.from_dict(json.load(fh))
    rows = read_rows(out_dir / ROWS_FILE)
    aggregates = read_aggregates(out_dir / AGGREGATES_FILE)
    check_aggregates(rows, aggregates, cfg.gamma_mode)
    return ExperimentResult(cfg, rows, aggregates)


# -- charts -------------------------------------------------------------------


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "kerrqrc"
    plt.rcParams["svg.fonttype"] = "path"  # glyphs as paths: no external fonts
    return plt


def _save(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})


def _series(aggregates, x_key, group_key, **fixed):
    data = defaultdict(list)
    for a in aggregates:
        if all(a[k] == v for k, v in fixed.items()):
            data[a[group_key]].append(a)
    return {k: sorted(v, key=lambda a: a[x_key]) for k, v in sorted(data.items())}


def _line_chart(path, curves, xlabel, ylabel, title, logx=False, logy=True, band=None, extremes=False):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for name, pts in curves.items():
        x = [p[0] for p in pts]
        y = [p[1] for p in pts]
        (line,) = ax.plot(x, y, marker="o", ms=3, label=name)
        if band and name in band:
            lo = [max(p[1] - p[2], 1e-300) for p in pts]
            hi = [p[1] + p[2] for p in pts]
            ax.fill_between(x, lo, hi, color=line.get_color(), alpha=0.2, lw=0)
        if extremes:
            ax.plot(x, [p[3] for p in pts], ls="--", lw=0.8, color=line.get_color())
            ax.plot(x, [p[4] for p in pts], ls=":", lw=0.8, color=line.get_color())
    if logy:
        ax.set_yscale("log")
    if logx:
        ax.set_xscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)
    plt.close(fig)


def _pts(series, x_key, y_key="rms_mean"):
    return [
        (a[x_key], a[y_key], a["rms_std"], a["rms_best"], a["rms_worst"]) for a in series
    ]


def write_charts(experiment: str, aggregates, out_dir, slice_train_size: int = 30) -> list:
    """One SVG per figure analogue; returns the written paths."""
    if not aggregates:
        return []
    out_dir = Path(out_dir)
    paths = []

    def emit(name, *args, **kw):
        p = out_dir / name
        _line_chart(p, *args, **kw)
        paths.append(p)

    if experiment in ("train_size_sweep", "model_comparison"):
        by_model = defaultdict(list)
        for a in aggregates:
            by_model[f"{a['model']} (d={a['dim']})" if a["dim"] else a["model"]].append(a)
        curves = {k: _pts(sorted(v, key=lambda a: a["train_size"]), "train_size") for k, v in sorted(by_model.items())}
        spreads = {
            k: [(a["train_size"], a["spread_factor"], 0, 0, 0) for a in sorted(v, key=lambda a: a["train_size"])]
            for k, v in sorted(by_model.items())
        }
        stem = "fig1" if experiment == "train_size_sweep" else "fig3"
        emit(
            f"{stem}_rms_vs_train_size.svg", curves, "training set size M", "RMS error",
            "Mean RMS error (dashed: best, dotted: worst)",
            band=set(curves), extremes=experiment == "train_size_sweep",
        )
        emit(
            "fig4_spread_vs_train_size.svg", spreads, "training set size M",
            "(worst - best) / mean", "RMS error spread factor", logy=False,
        )
    elif experiment == "dimension_sweep":
        by_dim = _series(aggregates, "train_size", "dim")
        emit(
            "fig2a_rms_vs_train_size.svg",
            {f"d={d}": _pts(v, "train_size") for d, v in by_dim.items()},
            "training set size M", "RMS error", "Mean RMS error by Hilbert dimension",
            band={f"d={d}" for d in by_dim},
        )
        by_m = _series(aggregates, "dim", "train_size")
        emit(
            "fig2b_rms_vs_dim.svg",
            {f"M={m}": _pts(v, "dim") for m, v in by_m.items()},
            "Hilbert dimension d", "RMS error", "Mean RMS error vs dimension",
        )
        if slice_train_size in by_m:
            emit(
                f"fig2c_rms_vs_dim_M{slice_train_size}.svg",
                {f"M={slice_train_size}": _pts(by_m[slice_train_size], "dim")},
                "Hilbert dimension d", "RMS error", f"M={slice_train_size}, one std shaded",
                band={f"M={slice_train_size}"},
            )
    else:
        by_model = _series(aggregates, "noise_sigma_over_alpha", "model")
        curves = {}
        for name, v in by_model.items():
            curves[name] = [p for p in _pts(v, "noise_sigma_over_alpha") if p[0] > 0]
        if any(curves.values()):
            plt = _pyplot()
            fig, ax = plt.subplots(figsize=(6.4, 4.4))
            for name, pts in curves.items():
                (line,) = ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", ms=3, label=name)
                base = [a for a in by_model[name] if a["noise_sigma_over_alpha"] == 0]
                if base:
                    ax.axhline(base[0]["rms_mean"], ls=":", lw=0.8, color=line.get_color())
            ax.set_xscale("log")
            ax.set_yscale("log")
            ax.set_xlabel("noise std / drive amplitude")
            ax.set_ylabel("RMS error")
            ax.set_title("RMS error with noise (dotted: noiseless)")
            ax.legend(fontsize=8)
            fig.tight_layout()
            p = out_dir / "fig5_rms_vs_noise.svg"
            _save(fig, p)
            plt.close(fig)
            paths.append(p)
    return paths


def write_dimension_tables(aggregates, out_dir, slice_train_size: int = 30) -> None:
    """RMS-vs-dimension table per training size, and the single-size slice."""
    out_dir = Path(out_dir)
    sizes = sorted({a["train_size"] for a in aggregates})
    dims = sorted({a["dim"] for a in aggregates})
    lookup = {(a["dim"], a["train_size"]): a for a in aggregates}
    with open(out_dir / "fig2b_table.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dim"] + [f"M={m}" for m in sizes])
        for d in dims:
            w.writerow([d] + [_fmt(lookup[(d, m)]["rms_mean"]) if (d, m) in lookup else "" for m in sizes])
    with open(out_dir / "fig2c_slice.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["dim", "train_size", "rms_mean", "rms_std", "lower", "upper"])
        for d in dims:
            a = lookup.get((d, slice_train_size))
            if a is not None:
                w.writerow([d, slice_train_size] + [_fmt(v) for v in (
                    a["rms_mean"], a["rms_std"], a["rms_mean"] - a["rms_std"], a["rms_mean"] + a["rms_std"]
                )])


def emit_outputs(result: ExperimentResult, out_dir) -> dict:
    """Write rows, aggregates, charts and the manifest under ``out_dir``.

    Returns a dict of the written paths. IO errors propagate as OSError.
    """
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    cfg = result.config
    paths = {
        "rows": out_dir / ROWS_FILE,
        "aggregates": out_dir / AGGREGATES_FILE,
        "manifest": out_dir / MANIFEST_FILE,
    }
    write_rows(result.rows, paths["rows"])
    write_aggregates(result.aggregates, paths["aggregates"])
    with open(paths["manifest"], "w", encoding="utf-8") as fh:
        json.dump(manifest(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if cfg.experiment == "dimension_sweep" and result.aggregates:
        write_dimension_tables(result.aggregates, out_dir, cfg.slice_train_size)
    if cfg.charts:
        paths["charts"] = write_charts(cfg.experiment, result.aggregates, out_dir, cfg.slice_train_size)
    return paths
