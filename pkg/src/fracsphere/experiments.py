"""Convergence experiments: truncation-error curves with theoretical
overlays, temporal-increment scaling, evolution snapshots, slope fits.

Monte Carlo realizations are independent counter-based RNG substreams, so
results are bit-identical for any worker count; reductions run in fixed
realization order.
"""

from __future__ import annotations

import json
import math
import multiprocessing
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .errors import DomainError
from .spectra import bound_q_combined, increment_bound, measured_increment_c
from .stochastic import (RngStream, sample_combined, sample_combined_pair,
                         sample_combined_times, sigma_squared, cross_sigma,
                         _decay_factors)
from .synthesis import synthesize, write_map_csv, write_map_image

__all__ = ["ErrorCurve", "SlopeFit", "truncation_error_curve",
           "increment_curve", "evolution_snapshots", "fit_loglog_slope",
           "resolve_workers", "write_manifest"]

WORKER_ENV = "SPHERE_FRACDIFF_THREADS"


def resolve_workers(requested):
    """Worker count: requested (default 1), capped by SPHERE_FRACDIFF_THREADS."""
    n = 1 if requested is None else max(1, int(requested))
    cap = os.environ.get(WORKER_ENV)
    if cap:
        n = min(n, max(1, int(cap)))
    return n


@dataclass
class ErrorCurve:
    """Rows of (abscissa, empirical value, theoretical bound, flag).

    kind is "degree" (truncation, x = L) or "increment" (x = h).  flag = 1
    marks rows where the bound's case conditions fail; such rows carry no
    valid bound (column set to 0) and are excluded from slope fits.
    """

    kind: str
    rows: list  # (x, empirical, bound, flag)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        xs = [r[0] for r in self.rows]
        if xs != sorted(xs):
            raise DomainError("ErrorCurve: rows must be sorted by abscissa")
        for x, emp, bound, flag in self.rows:
            if emp < 0 or bound < 0:
                raise DomainError("ErrorCurve: empirical and bound must be >= 0")

    def write_csv(self, path):
        with open(path, "w", newline="") as f:
            f.write("x,empirical,bound,flag\n")
            for x, emp, bound, flag in self.rows:
                f.write("%.17g,%.17g,%.17g,%d\n" % (x, emp, bound, flag))

    def write_json(self, path):
        with open(path, "w") as f:
            json.dump({"kind": self.kind, "meta": self.meta,
                       "rows": [list(r) for r in self.rows]}, f, indent=1,
                      sort_keys=True)
            f.write("\n")


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares slope of ln(empirical) against ln(x)."""

    slope: float
    intercept: float
    r2: float
    window: tuple


def fit_loglog_slope(curve, window=None, include_flagged=False):
    """OLS fit on (ln x, ln empirical) over rows with positive empirical
    values (and, by default, unflagged bounds) inside `window`."""
    rows = [r for r in curve.rows if r[1] > 0.0 and (include_flagged or r[3] == 0)]
    if window is not None:
        lo, hi = window
        rows = [r for r in rows if lo <= r[0] <= hi]
    if len(rows) < 3:
        raise DomainError(f"fit_loglog_slope: need >= 3 usable rows, have {len(rows)}")
    lx = np.log([r[0] for r in rows])
    ly = np.log([r[1] for r in rows])
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    used = ([r[0] for r in rows][0], [r[0] for r in rows][-1])
    return SlopeFit(slope=float(slope), intercept=float(intercept), r2=r2, window=used)


# --------------------------------------------------------------------------
# worker payloads (module level so they fork/pickle cleanly)

_TRUNC_JOB = {}


def _trunc_worker(j):
    model, L, t, seed = (_TRUNC_JOB["model"], _TRUNC_JOB["L"],
                         _TRUNC_JOB["t"], _TRUNC_JOB["seed"])
    coeffs = sample_combined(model, L, t, RngStream(seed), realization=j)
    return coeffs.degree_power()


def _warm_caches(model, L, t):
    _decay_factors(L, t, model.alpha)
    if t > model.tau:
        for ell in range(L + 1):
            sigma_squared(ell, t - model.tau, model.alpha)


def _run_jobs(worker, tasks, workers):
    """Run `worker` over `tasks`, returning results in task order regardless
    of scheduling."""
    if workers <= 1:
        return [worker(task) for task in tasks]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(processes=workers) as pool:
        return pool.map(worker, tasks)


def truncation_error_curve(model, l_tilde, l_grid, t, n_real, seed, workers=None):
    """Estimate the mean-square truncation error curve.

    One degree-l_tilde draw per realization serves every L in l_grid (the
    estimator sums the tail of the same realization):
        empirical(L) = sqrt( mean_j sum_{l>L} p_l(j) ),
    with p_l the per-degree Parseval power.  The bound column is the
    combined truncation bound; rows whose case conditions fail are flagged.
    """
    l_grid = [int(L) for L in l_grid]
    if sorted(l_grid) != l_grid:
        raise DomainError("truncation_error_curve: l_grid must be ascending")
    if not l_grid or l_grid[-1] >= l_tilde:
        raise DomainError("truncation_error_curve: need max(l_grid) < l_tilde")
    if n_real < 2:
        raise DomainError("truncation_error_curve: need at least 2 realizations")
    workers = resolve_workers(workers)
    _warm_caches(model, l_tilde, t)
    _TRUNC_JOB.update(model=model, L=int(l_tilde), t=float(t), seed=int(seed))
    powers = _run_jobs(_trunc_worker, range(int(n_real)), workers)
    mean_p = np.zeros(l_tilde + 1)
    for p in powers:  # fixed order for bitwise determinism
        mean_p += p
    mean_p /= n_real
    tail = np.concatenate([np.cumsum(mean_p[::-1])[::-1], [0.0]])
    rows = []
    for L in l_grid:
        emp = math.sqrt(max(tail[L + 1], 0.0))
        try:
            bound = bound_q_combined(L, t, model.tau, model.alpha,
                                     model.spec_c, model.spec_a)
            flag = 0
        except DomainError:
            bound, flag = 0.0, 1
        rows.append((float(L), emp, bound, flag))
    meta = {"alpha": model.alpha, "tau": model.tau, "t": t, "l_tilde": l_tilde,
            "n_real": n_real, "seed": seed}
    return ErrorCurve(kind="degree", rows=rows, meta=meta)


_INC_JOB = {}


def _inc_worker(task):
    j, hidx = task
    model, L, t, seed, hs = (_INC_JOB["model"], _INC_JOB["L"], _INC_JOB["t"],
                             _INC_JOB["seed"], _INC_JOB["hs"])
    # independent realization stream per (h, j): column-specific realizations
    real = j * len(hs) + hidx
    a, b = sample_combined_pair(model, L, t, hs[hidx], RngStream(seed), realization=real)
    diff = b.values - a.values
    p = 2.0 * (np.abs(diff) ** 2).sum(axis=1) - np.abs(diff[:, 0]) ** 2
    return float(p.sum())


def increment_curve(model, L, t, h_grid, n_real, seed, workers=None,
                    increment_c=None):
    """Estimate the mean-square temporal increment curve
    empirical(h) = sqrt( mean_j ||U_L(t+h) - U_L(t)||^2 ) against the
    q(t) sqrt(h) bound (measured constant unless overridden)."""
    hs = [float(h) for h in h_grid]
    if any(h <= 0 for h in hs) or sorted(hs) != hs:
        raise DomainError("increment_curve: h grid must be positive and ascending")
    if not (t > model.tau):
        raise DomainError(f"increment_curve: need t > tau, got t={t}, tau={model.tau}")
    if n_real < 2:
        raise DomainError("increment_curve: need at least 2 realizations")
    workers = resolve_workers(workers)
    _warm_caches(model, L, t)
    for h in hs:
        _warm_caches(model, L, t + h)
        for ell in range(L + 1):
            cross_sigma(ell, t - model.tau, h, model.alpha)
    _INC_JOB.update(model=model, L=int(L), t=float(t), seed=int(seed), hs=hs)
    tasks = [(j, hidx) for hidx in range(len(hs)) for j in range(int(n_real))]
    sums = _run_jobs(_inc_worker, tasks, workers)
    c = measured_increment_c(model.alpha, override=increment_c)
    rows = []
    for hidx, h in enumerate(hs):
        vals = sums[hidx * n_real:(hidx + 1) * n_real]
        emp = math.sqrt(sum(vals) / n_real)
        bound = increment_bound(t, h, model.tau, model.alpha,
                                model.spec_c, model.spec_a, c)
        rows.append((h, emp, bound, 0))
    meta = {"alpha": model.alpha, "tau": model.tau, "t": t, "L": L,
            "n_real": n_real, "seed": seed, "increment_c": c}
    return ErrorCurve(kind="increment", rows=rows, meta=meta)


def evolution_snapshots(model, L, times, grid, seed, out_dir, colormap="coolwarm",
                        vrange=None, realization=0):
    """Simulate one realization jointly at the given ascending times, render
    each as an image + CSV under out_dir, and return the field maps."""
    times = [float(t) for t in times]
    os.makedirs(out_dir, exist_ok=True)
    sets = sample_combined_times(model, L, times, RngStream(seed), realization)
    maps = []
    for t, coeffs in zip(times, sets):
        fmap = synthesize(coeffs, grid)
        stem = os.path.join(out_dir, f"map_t{t:g}")
        write_map_image(fmap, stem + ".ppm", colormap=colormap, vrange=vrange)
        write_map_csv(fmap, stem + ".csv")
        maps.append(fmap)
    write_manifest(out_dir, {
        "experiment": "simulate", "alpha": model.alpha, "tau": model.tau,
        "spec_c": vars(model.spec_c), "spec_a": vars(model.spec_a),
        "L": L, "times": times, "seed": seed, "realization": realization,
        "n_lat": grid.n_lat, "n_lon": grid.n_lon, "colormap": colormap,
    })
    return maps


def write_manifest(out_dir, config):
    """Record everything needed to reproduce a run."""
    payload = dict(config)
    payload["tool"] = "fracsphere"
    payload["version"] = __version__
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as f:
        json.dump(payload, f, indent=1, sort_keys=True)
        f.write("\n")
    return path
