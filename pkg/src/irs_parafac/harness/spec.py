"""
Experiment specifications and their INI spec-file format.

A spec file has the sections ``[experiment]``, ``[system]``,
``[perturbation]`` (optional; its presence enables IRS impairments),
``[bals]``, ``[tals]`` and ``[sweep]``. Every key of ``[sweep]`` takes a
comma-separated list of values and the sweep points are the cartesian
product of those lists, e.g.::

    [experiment]
    name = fig3
    runs = 200
    master_seed = 7
    snr_grid_db = 0:5:30
    estimators = krf, bals

    [system]
    M = 3
    L = 2
    K = 50
    T = 4
    random_phase_fallback = true

    [sweep]
    N = 50, 100
"""

import configparser
import dataclasses
import io
import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..estimators import TALS_DEFAULTS, BalsOptions
from ..system_model import PerturbationConfig, SystemConfig

ESTIMATORS = ("ls", "krf", "bals", "bals_orth", "tals", "block_ls")

_SYSTEM_FIELDS = {f.name: f for f in dataclasses.fields(SystemConfig)
                  if f.name not in ("snr_db", "perturbation")}
_OPTION_FIELDS = ("delta", "max_iter", "init", "normalize_error",
                  "use_orthogonal_fastpath", "line_search", "restarts")


@dataclass(frozen=True)
class ExperimentSpec:
    """
    A Monte Carlo experiment: SNR grid x estimators x sweep points.

    ``sweep`` is a tuple of override dicts applied to ``base``; an empty
    sweep means the single point ``base``. With ``skip_infeasible`` the
    (estimator, sweep point) pairs that fail their design conditions are
    dropped instead of aborting the run. ``timing=False`` writes ``nan``
    wall times so that reports are bit-reproducible.
    """

    base: SystemConfig
    snr_grid_db: tuple
    estimators: tuple
    runs: int
    sweep: tuple = ()
    output_path: Optional[str] = None
    master_seed: int = 0
    bals_options: BalsOptions = BalsOptions()
    tals_options: BalsOptions = TALS_DEFAULTS
    name: str = "experiment"
    skip_infeasible: bool = False
    timing: bool = True

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not self.estimators:
            raise ValueError("at least one estimator is required")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ValueError(f"unknown estimators {sorted(unknown)}")
        if not self.snr_grid_db:
            raise ValueError("empty SNR grid")
        object.__setattr__(self, "snr_grid_db", tuple(float(s) for s in self.snr_grid_db))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "sweep", tuple(dict(p) for p in self.sweep))

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def sweep_points(self):
        """List of ``(sweep_key, SystemConfig)`` pairs."""
        if not self.sweep:
            return [("base", self.base)]
        return [(sweep_key(p), self.base.replace(**p)) for p in self.sweep]

    def options_for(self, estimator):
        return self.tals_options if estimator == "tals" else self.bals_options

    def to_dict(self):
        def opts(o):
            return {k: getattr(o, k) for k in _OPTION_FIELDS}

        base = self.base.to_dict()
        base.pop("snr_db")
        return {
            "name": self.name, "runs": self.runs, "master_seed": self.master_seed,
            "snr_grid_db": list(self.snr_grid_db), "estimators": list(self.estimators),
            "output_path": self.output_path, "skip_infeasible": self.skip_infeasible,
            "timing": self.timing, "base": base,
            "sweep": [{k: _plain(v) for k, v in p.items()} for p in self.sweep],
            "bals": opts(self.bals_options), "tals": opts(self.tals_options),
        }


def _plain(v):
    if isinstance(v, PerturbationConfig):
        return dataclasses.asdict(v)
    return v


def sweep_key(point):
    """Stable text label of a sweep point, e.g. ``"N=50"``."""
    if not point:
        return "base"
    parts = []
    for k, v in point.items():
        if k == "perturbation":
            v = "off" if v is None else "on"
        parts.append(f"{k}={v}")
    return ";".join(parts)


# ----------------------------------------------------------------- parsing

def _to_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(name, text):
    f = _SYSTEM_FIELDS.get(name)
    if f is None:
        raise ValueError(f"unknown system field {name!r}")
    if f.type in (int, "int"):
        return int(text)
    if f.type in (bool, "bool"):
        return _to_bool(text)
    return str(text).strip()


def parse_grid(text):
    """``"0, 5, 10"`` or ``"start:step:stop"`` (stop inclusive) to floats."""
    text = text.strip()
    if ":" in text:
        start, step, stop = (float(t) for t in text.split(":"))
        if step <= 0:
            raise ValueError("SNR grid step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(float(start + i * step) for i in range(n))
    return tuple(float(t) for t in _split(text))


def _split(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _options(section, default):
    if section is None:
        return default
    kw = {}
    for key, val in section.items():
        if key not in _OPTION_FIELDS:
            raise ValueError(f"unknown option {key!r} in [{section.name}]")
        if key == "delta":
            kw[key] = float(val)
        elif key in ("max_iter", "restarts"):
            kw[key] = int(val)
        elif key == "init":
            kw[key] = val.strip()
        else:
            kw[key] = _to_bool(val)
    return dataclasses.replace(default, **kw)


def spec_from_ini(text):
    """Build an :class:`ExperimentSpec` from spec-file text."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep M/L/N/K/T case
    cp.read_string(text)
    if not cp.has_section("experiment"):
        raise ValueError("spec file needs an [experiment] section")
    exp = cp["experiment"]
    system = {k: _convert(k, v) for k, v in cp["system"].items()} if cp.has_section("system") else {}
    if cp.has_section("perturbation"):
        pert = cp["perturbation"]
        system["perturbation"] = PerturbationConfig(
            float(pert.get("blockage_fraction", 0.2)), float(pert.get("gamma", 0.01)))
    base = SystemConfig(**system)
    perturbation = base.perturbation or PerturbationConfig()

    sweep = ()
    if cp.has_section("sweep") and cp["sweep"]:
        axes = []
        for key, val in cp["sweep"].items():
            if key == "perturbation":
                vals = [perturbation if _to_bool(v) else None for v in _split(val)]
            else:
                vals = [_convert(key, v) for v in _split(val)]
            axes.append([(key, v) for v in vals])
        sweep = tuple(dict(combo) for combo in itertools.product(*axes))

    return ExperimentSpec(
        base=base,
        snr_grid_db=parse_grid(exp.get("snr_grid_db", "inf")),
        estimators=tuple(_split(exp.get("estimators", "krf"))),
        runs=int(exp.get("runs", 100)),
        sweep=sweep,
        output_path=exp.get("output_path"),
        master_seed=int(exp.get("master_seed", 0)),
        bals_options=_options(cp["bals"] if cp.has_section("bals") else None, BalsOptions()),
        tals_options=_options(cp["tals"] if cp.has_section("tals") else None, TALS_DEFAULTS),
        name=exp.get("name", "experiment"),
        skip_infeasible=_to_bool(exp.get("skip_infeasible", "false")),
        timing=_to_bool(exp.get("timing", "true")),
    )


def load_spec(path):
    """Read a spec file; ``OSError`` propagates for missing files."""
    with open(path, encoding="utf-8") as fh:
        return spec_from_ini(fh.read())


def spec_to_ini(spec):
    """
    Inverse of :func:`spec_from_ini`.

    Raises ``ValueError`` when the sweep is not a full cartesian grid, since
    the spec-file format can only express grids.
    """
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    d = spec.to_dict()
    cp["experiment"] = {
        "name": spec.name, "runs": str(spec.runs), "master_seed": str(spec.master_seed),
        "snr_grid_db": ", ".join(repr(s) for s in spec.snr_grid_db),
        "estimators": ", ".join(spec.estimators),
        "skip_infeasible": str(spec.skip_infeasible).lower(),
        "timing": str(spec.timing).lower(),
    }
    if spec.output_path:
        cp["experiment"]["output_path"] = spec.output_path
    pert = d["base"].pop("perturbation")
    cp["system"] = {k: str(v).lower() if isinstance(v, bool) else str(v)
                    for k, v in d["base"].items()}
    if pert is not None:
        cp["perturbation"] = {k: repr(v) for k, v in pert.items()}
    for sec in ("bals", "tals"):
        cp[sec] = {k: str(v).lower() if isinstance(v, bool) else repr(v) if isinstance(v, float)
                   else str(v) for k, v in d[sec].items()}
    if spec.sweep:
        keys = list(spec.sweep[0])
        cp["sweep"] = {}
        grid_size = 1
        for k in keys:
            seen = []
            for p in spec.sweep:
                v = p[k]
                if k == "perturbation":
                    v = "on" if v is not None else "off"
                v = str(v).lower() if isinstance(v, bool) else str(v)
                if v not in seen:
                    seen.append(v)
            cp["sweep"][k] = ", ".join(seen)
            grid_size *= len(seen)
        if grid_size != len(spec.sweep):
            raise ValueError("sweep is not a cartesian grid; cannot write it as a spec file")
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def run_seed(master_seed, sweep_idx, snr_idx, run, stream=None):
    """Generator for one run (``stream`` selects an estimator sub-stream)."""
    key = [int(master_seed), sweep_idx, snr_idx, run]
    if stream is not None:
        key.append(stream)
    return np.random.default_rng(key)

