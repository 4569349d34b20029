"""CSV + JSON (+ PNG) report emission.

Every file carries the package version, a hash of the run configuration
and the seed. Output bytes depend only on the results and provenance.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

from depthsight import __version__
from depthsight.errors import DataError
from depthsight.evalkit import (
    AGGREGATION_MODES,
    FRAME_WEIGHTED,
    REFERENCE_SEQUENCES,
    REFERENCE_STATED_AVERAGE,
    UNWEIGHTED,
    DepthErrorResult,
    SequenceResult,
    aggregate,
    aggregation_note,
)
from depthsight.localizer import ZrefMethod


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config) -> str:
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def _fmt(x, digits=3) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    if isinstance(x, int):
        return str(x)
    return f"{x:.{digits}f}"


def _stamp(provenance: dict) -> str:
    return f"depthsight {__version__} config={provenance.get('config_hash', '')} seed={provenance.get('seed', '')}"


def _write_csv(path: Path, header, rows, provenance) -> None:
    buf = io.StringIO()
    buf.write(f"# {_stamp(provenance)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def _sequence_rows(results):
    return [[r.name, r.n_frames, r.tp_frames, r.fp_frames, r.fn_frames, r.tn_frames,
             _fmt(r.precision, 2), _fmt(r.recall, 2)] for r in results]


def _depth_rows(results):
    return [[_fmt(r.hover_distance, 0), r.method.value, _fmt(r.rmse, 1), _fmt(r.min_error, 1),
             _fmt(r.max_error, 1), r.n_samples] for r in results]


def depth_table_rows(results):
    """Wide layout: one row per hover distance, one RMSE column per method, plus an average row."""
    methods = []
    for r in results:
        if r.method not in methods:
            methods.append(r.method)
    distances = sorted({r.hover_distance for r in results})
    lookup = {(r.hover_distance, r.method): r.rmse for r in results}
    rows = []
    for d in distances:
        rows.append([_fmt(d, 0)] + [_fmt(lookup.get((d, m), math.nan), 1) for m in methods])
    avg = []
    for m in methods:
        vals = [lookup[(d, m)] for d in distances if (d, m) in lookup and not math.isnan(lookup[(d, m)])]
        avg.append(_fmt(sum(vals) / len(vals), 1) if vals else "")
    rows.append(["average per method"] + avg)
    return [m.label for m in methods], rows


def emit_report(out_dir, sequences=None, depth_results=None, provenance=None, figures: bool = True) -> list[Path]:
    """Write report files into ``out_dir`` and return their paths.

    ``sequences`` is a list of :class:`SequenceResult`; ``depth_results`` a
    list of :class:`DepthErrorResult`. At least one must be non-empty.
    """
    sequences = list(sequences or [])
    depth_results = list(depth_results or [])
    if not sequences and not depth_results:
        raise DataError("nothing to report: results are empty")
    provenance = dict(provenance or {})
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"cannot create report directory {out}: {exc}") from None
    written = []
    doc = {"depthsight_version": __version__, "provenance": provenance}

    try:
        if sequences:
            p = out / "sequences.csv"
            _write_csv(p, ["name", "n_frames", "tp_frames", "fp_frames", "fn_frames", "tn_frames",
                           "precision", "recall"], _sequence_rows(sequences), provenance)
            written.append(p)
            aggs = {mode: aggregate(sequences, mode) for mode in AGGREGATION_MODES}
            ref = {mode: aggregate(REFERENCE_SEQUENCES, mode) for mode in AGGREGATION_MODES}
            p = out / "aggregate.csv"
            _write_csv(p, ["scope", "mode", "precision", "recall"],
                       [["this run", mode, _fmt(aggs[mode][0], 2), _fmt(aggs[mode][1], 2)] for mode in AGGREGATION_MODES]
                       + [["reference rows", mode, _fmt(ref[mode][0], 2), _fmt(ref[mode][1], 2)] for mode in AGGREGATION_MODES]
                       + [["reference stated", "stated", _fmt(REFERENCE_STATED_AVERAGE[0], 2),
                           _fmt(REFERENCE_STATED_AVERAGE[1], 2)]],
                       provenance)
            written.append(p)
            doc["sequences"] = [r.to_json_dict() for r in sequences]
            doc["aggregate"] = {mode: {"precision": aggs[mode][0], "recall": aggs[mode][1]} for mode in AGGREGATION_MODES}
            doc["reference_aggregate"] = {
                mode: {"precision": ref[mode][0], "recall": ref[mode][1]} for mode in AGGREGATION_MODES}
            doc["reference_note"] = aggregation_note(ref[UNWEIGHTED], ref[FRAME_WEIGHTED])
            if figures:
                from depthsight.plotting import precision_recall_figure, save
                p = out / "precision_recall.png"
                save(precision_recall_figure(sequences, aggs), p, _stamp(provenance))
                written.append(p)

        if depth_results:
            p = out / "depth_study.csv"
            _write_csv(p, ["hover_mm", "method", "rmse_mm", "min_mm", "max_mm", "n_samples"],
                       _depth_rows(depth_results), provenance)
            written.append(p)
            labels, rows = depth_table_rows(depth_results)
            p = out / "depth_study_table.csv"
            _write_csv(p, ["hover_mm"] + labels, rows, provenance)
            written.append(p)
            doc["depth_study"] = [r.to_json_dict() for r in depth_results]
            if figures:
                from depthsight.plotting import depth_error_figure, save
                p = out / "depth_rmse.png"
                save(depth_error_figure(depth_results), p, _stamp(provenance))
                written.append(p)

        p = out / "report.json"
        p.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")
        written.append(p)
    except OSError as exc:
        raise DataError(f"failed writing report to {out}: {exc}") from None
    return written


def read_depth_csv(path) -> list[DepthErrorResult]:
    """Parse ``depth_study.csv`` back into results (mean error is not stored)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    out = []
    for row in csv.DictReader(lines):
        def f(key):
            return float(row[key]) if row[key] else math.nan
        out.append(DepthErrorResult(f("hover_mm"), ZrefMethod.parse(row["method"]), f("rmse_mm"),
                                    f("min_mm"), f("max_mm"), math.nan, int(row["n_samples"])))
    return out


def read_sequences_csv(path) -> list[SequenceResult]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    out = []
    for row in csv.DictReader(lines):
        out.append(SequenceResult(
            row["name"], int(row["n_frames"]), int(row["tp_frames"]), int(row["fp_frames"]),
            int(row["fn_frames"]), int(row["tn_frames"]),
            float(row["precision"]) if row["precision"] else None,
            float(row["recall"]) if row["recall"] else None))
    return out
