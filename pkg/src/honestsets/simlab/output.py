"""CSV output and gnuplot script emission."""
from __future__ import annotations

import csv
import os
from pathlib import Path

from ..errors import HonestSetsError
from .runner import ErrorRecord, SummaryRow, TrialRecord

SETTING_FIELDS = ("design", "beta_mode", "b", "s", "lambda_rule")
_INT_FIELDS = {"setting_id", "replicate", "covered", "k", "m_star", "wall_ms"}
_FLOAT_FIELDS = {"r_bar", "r_A", "r_perp"}


class OutputError(HonestSetsError, OSError):
    pass


def _fmt(v):
    return repr(v) if isinstance(v, float) else str(v)


def _write_csv(path: Path, header, rows):
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)  # minimal quoting, CRLF line ends
            w.writerow(header)
            for row in rows:
                w.writerow([_fmt(v) for v in row])
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc


def read_trials(path) -> list[TrialRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TrialRecord.FIELDS:
            raise OutputError(f"{path}: unexpected columns {reader.fieldnames}")
        out = []
        for row in reader:
            vals = {}
            for name in TrialRecord.FIELDS:
                v = row[name]
                vals[name] = int(v) if name in _INT_FIELDS else float(v) if name in _FLOAT_FIELDS else v
            out.append(TrialRecord(**vals))
    return out


def emit_outputs(records, summaries, out_dir, errors=(), configs=()) -> dict:
    """Write ``trials.csv``, ``summary.csv``, ``errors.csv`` and ``plots.gp`` under ``out_dir``.

    ``configs`` (the settings that produced the records) adds the design
    columns the plot script needs to ``summary.csv``.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create {out}: {exc.strerror or exc}") from exc
    by_id = {c.setting_id: c for c in configs}
    paths = {name: out / name for name in ("trials.csv", "summary.csv", "errors.csv", "plots.gp")}
    _write_csv(paths["trials.csv"], TrialRecord.FIELDS,
               ([getattr(r, f) for f in TrialRecord.FIELDS] for r in records))

    def summary_rows():
        for s in summaries:
            cfg = by_id.get(s.setting_id)
            extra = [getattr(cfg, f) if cfg else "" for f in SETTING_FIELDS]
            yield [getattr(s, f) for f in SummaryRow.FIELDS] + extra

    _write_csv(paths["summary.csv"], SummaryRow.FIELDS + SETTING_FIELDS, summary_rows())
    _write_csv(paths["errors.csv"], ErrorRecord.FIELDS,
               ([getattr(e, f) for f in ErrorRecord.FIELDS] for e in errors))
    methods = sorted({s.method for s in summaries})
    try:
        paths["plots.gp"].write_text(plot_script(methods))
    except OSError as exc:
        raise OutputError(f"cannot write {paths['plots.gp']}: {exc.strerror or exc}") from exc
    return {k: os.fspath(v) for k, v in paths.items()}


def plot_script(methods) -> str:
    """Gnuplot script: mean radius against ``b`` per design and rule, and coverage box plots."""
    lines = [
        "# radius against b and coverage box plots from summary.csv",
        "# usage: gnuplot plots.gp   (writes radius.png and coverage.png)",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set terminal pngcairo size 1400,1000",
        "designs = 'toeplitz expdecay equicorr'",
        "rules = 'val cv 1se'",
        f"methods = '{' '.join(methods)}'",
        "sel(m, d, r) = (strcol('method') eq m && strcol('design') eq d && strcol('lambda_rule') eq r)",
        "",
        "set output 'radius.png'",
        "set multiplot layout 3,3",
        "set xlabel 'b'",
        "set ylabel 'mean geometric average radius'",
        "do for [d in designs] {",
        "  do for [r in rules] {",
        "    set title d.' / '.r",
        "    plot for [m in methods] 'summary.csv' using (sel(m, d, r) ? column('b') : 1/0):"
        "(column('mean_r_bar')) with linespoints title m",
        "  }",
        "}",
        "unset multiplot",
        "",
        "set output 'coverage.png'",
        "set style data boxplot",
        "set style boxplot nooutliers",
        "set xlabel 'method'",
        "set ylabel 'coverage rate'",
        "set yrange [0:1.02]",
        "set arrow from graph 0, first 0.95 to graph 1, first 0.95 nohead dashtype 2",
        "set xtics ()",
        "i = 0",
        "do for [m in methods] { i = i + 1; set xtics add (m i) }",
        "plot for [i=1:words(methods)] 'summary.csv' using (i):"
        "(strcol('method') eq word(methods, i) ? column('coverage') : 1/0) notitle",
        "unset output",
        "",
    ]
    return "\n".join(lines)
