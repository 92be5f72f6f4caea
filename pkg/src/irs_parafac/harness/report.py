"""Monte Carlo report containers and their CSV / JSON serialisation."""

import csv
import dataclasses
import json
import math
from dataclasses import dataclass, field

from .. import __version__

CSV_COLUMNS = ("estimator", "sweep_key", "snr_db", "nmse_theta", "nmse_H", "nmse_G",
               "crb_norm", "iters_mean", "iters_median", "conv_rate", "time_ms",
               "runs", "failures")
_TEXT_COLUMNS = ("estimator", "sweep_key")
_INT_COLUMNS = ("runs", "failures")


@dataclass
class CellResult:
    """
    Aggregates for one (estimator, sweep point, SNR) cell.

    Means are taken over the ``runs - failures`` successful runs; each NMSE
    is the mean of per-run ratios. Columns that do not apply to an
    estimator (e.g. ``nmse_H`` for LS) are ``nan``.
    """

    estimator: str
    sweep_key: str
    snr_db: float
    nmse_theta: float
    nmse_H: float
    nmse_G: float
    crb_norm: float
    iters_mean: float
    iters_median: float
    conv_rate: float
    time_ms: float
    runs: int
    failures: int

    def row(self):
        out = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            if name in _TEXT_COLUMNS or name in _INT_COLUMNS:
                out.append(str(v))
            else:
                out.append(format_float(v))
        return out


@dataclass
class MonteCarloReport:
    """
    Result of :func:`run_experiment`.

    ``checksums`` maps ``"sweep_idx/snr_idx/run"`` to a digest of the
    received tensor that every estimator of the run was given; ``spec``
    is the plain-dict echo of the experiment spec.
    """

    spec: dict
    cells: list
    checksums: dict = field(default_factory=dict)
    version: str = __version__

    def cell(self, estimator, sweep_key, snr_db):
        for c in self.cells:
            if c.estimator == estimator and c.sweep_key == sweep_key and c.snr_db == snr_db:
                return c
        raise KeyError((estimator, sweep_key, snr_db))

    def curve(self, estimator, sweep_key, column="nmse_theta"):
        """``(snr_grid, values)`` for one estimator at one sweep point."""
        cells = sorted((c for c in self.cells
                        if c.estimator == estimator and c.sweep_key == sweep_key),
                       key=lambda c: c.snr_db)
        return [c.snr_db for c in cells], [getattr(c, column) for c in cells]


def format_float(x):
    """17-significant-digit decimal text; exact round trip for doubles."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def write_csv(cells, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for c in cells:
        w.writerow(c.row())


def parse_csv(fh):
    """Read cells back from CSV text written by :func:`write_csv`."""
    reader = csv.reader(fh)
    header = tuple(next(reader))
    if header != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    cells = []
    for row in reader:
        if not row:
            continue
        kw = {}
        for name, text in zip(CSV_COLUMNS, row):
            if name in _TEXT_COLUMNS:
                kw[name] = text
            elif name in _INT_COLUMNS:
                kw[name] = int(text)
            else:
                kw[name] = float(text)
        cells.append(CellResult(**kw))
    return cells


def _json_float(x):
    # JSON has no nan/inf literals; keep the CSV spelling as strings
    if isinstance(x, float) and not math.isfinite(x):
        return format_float(x)
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _json_float(obj)


def to_structured(report, include_cells=True):
    doc = {"version": report.version, "spec": _clean(report.spec),
           "seed_rule": "numpy default_rng([master_seed, sweep_index, snr_index, run])",
           "checksums": report.checksums}
    if include_cells:
        doc["cells"] = [_clean({k: (format_float(v) if isinstance(v, float) else v)
                                for k, v in dataclasses.asdict(c).items()})
                        for c in report.cells]
    return doc


def from_structured(doc):
    cells = []
    for d in doc["cells"]:
        kw = {k: (float(v) if k not in _TEXT_COLUMNS + _INT_COLUMNS else v)
              for k, v in d.items()}
        cells.append(CellResult(**kw))
    return MonteCarloReport(spec=doc["spec"], cells=cells,
                            checksums=doc.get("checksums", {}), version=doc["version"])


def sidecar_path(path):
    return str(path) + ".meta.json"


def emit_report(report, path, fmt="csv"):
    """
    Write ``report`` to ``path``.

    ``fmt="csv"`` writes the cell table plus a ``<path>.meta.json`` sidecar
    echoing the spec, library version and per-run checksums;
    ``fmt="structured_text"`` writes a single JSON document holding all of
    it. Returns the list of files written. ``OSError`` propagates.
    """
    if fmt == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            write_csv(report.cells, fh)
        with open(sidecar_path(path), "w", encoding="utf-8") as fh:
            json.dump(to_structured(report, include_cells=False), fh, indent=1, sort_keys=True)
        return [str(path), sidecar_path(path)]
    if fmt == "structured_text":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(to_structured(report), fh, indent=1, sort_keys=True)
        return [str(path)]
    raise ValueError(f"unknown report format {fmt!r}")


def load_report(path, fmt="csv"):
    """Inverse of :func:`emit_report`."""
    if fmt == "csv":
        with open(path, newline="", encoding="utf-8") as fh:
            cells = parse_csv(fh)
        with open(sidecar_path(path), encoding="utf-8") as fh:
            meta = json.load(fh)
        return MonteCarloReport(spec=meta["spec"], cells=cells,
                                checksums=meta.get("checksums", {}), version=meta["version"])
    with open(path, encoding="utf-8") as fh:
        return from_structured(json.load(fh))
