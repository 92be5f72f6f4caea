"""
Deterministic Monte Carlo runner.

Run ``r`` of sweep point ``i`` at SNR index ``j`` synthesizes its scenario
from ``default_rng([master_seed, i, j, r])``; estimators that need random
numbers get the extra stream code listed in ``_STREAMS``. Work is split
into chunks of runs that may be executed by a process pool, and results
are reduced in run order, so reports do not depend on the worker count.
"""

import hashlib
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from ..analysis import check_design, crb_trace_factor, nmse
from ..errors import InfeasibleDesign
from ..estimators import (align_scaling, bals, bals_orthogonal, block_ls,
                          cascaded_channels, column_scales, krf, ls_composite,
                          match_columns, tals)
from ..system_model import build_scenario
from .report import CellResult, MonteCarloReport
from .spec import run_seed

_STREAMS = {"ls": 1, "krf": 2, "bals": 3, "bals_orth": 4, "tals": 5, "block_ls": 6}
_ITERATIVE = ("bals", "bals_orth", "tals")
_CHUNK = 25
THREADS_ENV = "IRS_PARAFAC_THREADS"


def default_threads():
    """Worker count from ``IRS_PARAFAC_THREADS`` (1 when unset)."""
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def checksum(Y):
    return hashlib.blake2b(np.ascontiguousarray(Y).tobytes(), digest_size=12).hexdigest()


# ------------------------------------------------------------ single runs

def _theta_matrix(H, G):
    """``H^T kr G`` as an (M L) x N matrix."""
    return (H.T[:, None, :] * G[None, :, :]).reshape(-1, G.shape[1])


def _aligned_errors(res, sc):
    ch = sc.channels
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        H_al, G_al = align_scaling(res.H_hat, res.G_hat, ch.H, ch.G)
    return nmse(H_al, ch.H), nmse(G_al, ch.G)


def _tals_errors(res, sc):
    """
    TALS factors are fixed only up to column permutation and per-column
    scaling. Both are removed with the true channels before scoring.
    """
    ch = sc.channels
    Theta = _theta_matrix(ch.H, ch.G)
    Theta_hat = _theta_matrix(res.H_hat, res.G_hat)
    perm = match_columns(Theta_hat, Theta)
    Theta_hat = Theta_hat[:, perm] * column_scales(Theta_hat[:, perm], Theta)
    H_hat = res.H_hat[perm, :]
    G_hat = res.G_hat[:, perm]
    H_hat = H_hat * column_scales(H_hat.T, ch.H.T)[:, None]
    G_hat = G_hat * column_scales(G_hat, ch.G)
    return nmse(Theta_hat, Theta), nmse(H_hat, ch.H), nmse(G_hat, ch.G)


def _estimate(name, sc, spec, rng):
    """Run one estimator; returns the metric dict (without timing)."""
    Y, S, X = sc.Y, sc.S_ideal, sc.X
    nan = math.nan
    out = {"nmse_H": nan, "nmse_G": nan, "iters": nan, "converged": True}
    if name == "ls":
        res = ls_composite(Y, S, X)
        out["nmse_theta"] = nmse(res.theta_hat, sc.theta)
        return out
    if name == "block_ls":
        C_hat = block_ls(Y, S, X)
        C = cascaded_channels(sc.channels.G, sc.S_actual, sc.channels.H)
        out["nmse_theta"] = nmse(C_hat, C)
        return out
    if name == "krf":
        res = krf(Y, S, X)
    elif name == "bals":
        res = bals(Y, S, X, spec.bals_options, rng)
    elif name == "bals_orth":
        res = bals_orthogonal(Y, S, X, spec.bals_options, rng)
    else:
        res = tals(Y, X, S, spec.tals_options, rng)
        out["nmse_theta"], out["nmse_H"], out["nmse_G"] = _tals_errors(res, sc)
        out["iters"], out["converged"] = res.iterations, res.converged
        return out
    out["nmse_theta"] = nmse(res.theta_hat, sc.theta)
    out["nmse_H"], out["nmse_G"] = _aligned_errors(res, sc)
    if name in _ITERATIVE:
        out["iters"], out["converged"] = res.iterations, res.converged
    return out


def _run_chunk(args):
    """Execute runs ``[r0, r1)`` of one (sweep point, SNR) cell."""
    spec, i, cfg, estimators, j, snr, r0, r1 = args
    records = []
    cfg = cfg.replace(snr_db=snr)
    for r in range(r0, r1):
        sc = build_scenario(cfg, run_seed(spec.master_seed, i, j, r))
        digest = checksum(sc.Y)
        theta_sq = float(np.vdot(sc.theta, sc.theta).real)
        crb = sc.sigma2 * crb_trace_factor(sc.S_actual, sc.X, sc.Y.shape[0]) / theta_sq
        per_est = {}
        for name in estimators:
            rng = run_seed(spec.master_seed, i, j, r, _STREAMS[name])
            t0 = time.perf_counter()
            try:
                m = _estimate(name, sc, spec, rng)
            except (np.linalg.LinAlgError, ValueError, FloatingPointError) as exc:
                m = {"failed": type(exc).__name__}
            m["time"] = time.perf_counter() - t0
            if checksum(sc.Y) != digest:
                raise RuntimeError(f"estimator {name} modified the received tensor")
            per_est[name] = m
        records.append((r, digest, crb, per_est))
    return i, j, records


# ------------------------------------------------------------ aggregation

def _aggregate(name, key, snr, records, runs, timing):
    ok = [rec[3][name] for rec in records if "failed" not in rec[3][name]]
    crb_vals = [rec[2] for rec in records]
    nan = math.nan

    def mean(vals):
        vals = [v for v in vals]
        return float(np.mean(vals)) if vals else nan

    iters = [m["iters"] for m in ok]
    iterative = name in _ITERATIVE and ok
    return CellResult(
        estimator=name, sweep_key=key, snr_db=float(snr),
        nmse_theta=mean([m["nmse_theta"] for m in ok]),
        nmse_H=mean([m["nmse_H"] for m in ok]),
        nmse_G=mean([m["nmse_G"] for m in ok]),
        crb_norm=mean(crb_vals),
        iters_mean=float(np.mean(iters)) if iterative else nan,
        iters_median=float(np.median(iters)) if iterative else nan,
        conv_rate=(sum(bool(m["converged"]) for m in ok) / len(ok)) if ok else nan,
        time_ms=(1e3 * mean([rec[3][name]["time"] for rec in records])) if timing else nan,
        runs=runs, failures=runs - len(ok))


# ------------------------------------------------------------ validation

def plan(spec, force=False):
    """
    Validate the spec and list the estimators to run at each sweep point.

    Returns ``[(sweep_key, config, estimators), ...]``. Infeasible
    estimator/design pairs raise :class:`InfeasibleDesign`, unless
    ``force`` (run anyway and count failures) or ``spec.skip_infeasible``
    (drop the pair) is set.
    """
    out = []
    for key, cfg in spec.sweep_points():
        # a dry synthesis catches designs that cannot be built at all
        build_scenario(cfg.replace(snr_db=math.inf), np.random.default_rng(0))
        report = check_design(cfg)
        chosen = []
        for name in spec.estimators:
            if report.feasible_for(name) or force:
                chosen.append(name)
            elif not spec.skip_infeasible:
                raise InfeasibleDesign(
                    f"{name} is not applicable at sweep point {key}:\n{report.format()}")
        out.append((key, cfg, tuple(chosen)))
    return out


def run_experiment(spec, threads=None, force=False):
    """
    Execute ``spec`` and return a :class:`MonteCarloReport`.

    Parameters
    ----------
    spec : ExperimentSpec
    threads : int, optional
        Worker processes; defaults to :func:`default_threads`. The report
        is identical for every value.
    force : bool
        Run estimators whose design conditions fail.
    """
    threads = default_threads() if threads is None else max(1, int(threads))
    points = plan(spec, force)
    tasks = []
    for i, (_, cfg, ests) in enumerate(points):
        if not ests:
            continue
        for j, snr in enumerate(spec.snr_grid_db):
            for r0 in range(0, spec.runs, _CHUNK):
                tasks.append((spec, i, cfg, ests, j, snr, r0, min(r0 + _CHUNK, spec.runs)))

    if threads == 1 or len(tasks) == 1:
        results = [_run_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_chunk, tasks))

    by_cell = {}
    for i, j, records in results:
        by_cell.setdefault((i, j), []).extend(records)

    cells = []
    checksums = {}
    for i, (key, _, ests) in enumerate(points):
        for j, snr in enumerate(spec.snr_grid_db):
            records = sorted(by_cell.get((i, j), []), key=lambda rec: rec[0])
            for rec in records:
                checksums[f"{i}/{j}/{rec[0]}"] = rec[1]
            for name in ests:
                cells.append(_aggregate(name, key, snr, records, spec.runs, spec.timing))
    return MonteCarloReport(spec=spec.to_dict(), cells=cells, checksums=checksums)
