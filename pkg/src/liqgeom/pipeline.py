"""Batch orchestration behind the command-line interface.

All outputs are plain CSV/text written through :func:`atomic_write`, and
nothing time- or host-dependent is recorded, so reruns with the same
configuration and inputs produce byte-identical trees.
"""

from __future__ import annotations

import csv
import gzip
import io
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .book import (
    SIDES,
    bin_side,
    imbalance_mid,
    mid_price,
    projection_to_snapshot,
    split_windows,
    window_average,
)
from .errors import EmptyInput, EmptySide, FitError, ValidationError
from .fitkit import FitOptions, fit, log_residuals
from .fitkit.fit import REFERENCE_MODEL
from .graph import RNG_NAME, init_graph, inflation_step
from .ingest import (
    SNAPSHOT_HEADER,
    build_snapshots,
    read_depth_csv,
    read_snapshot_csv,
    sniff_format,
    snapshot_rows,
)
from .spectral import align, check_balance, fiedler_projection

log = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "LIQGEOM_OUTPUT_DIR"
# above this size the simulation switches to the warm-started iterative solver
SIM_DENSE_MAX = 500

REPORT_COLUMNS = ("asset", "side", "window", "model", "C", "gamma", "lambda_or_mu",
                  "sigma_or_alpha", "rss", "r2", "aic", "delta_aic", "converged")
COMPARISON_COLUMNS = ("asset", "side", "n_windows", "r2_integrated_gamma",
                      "r2_cumulative_lognormal", "delta_aic")


def fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "nan" if np.isnan(v) else f"{float(v):.17g}"
    return str(v)


def csv_text(header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _current_umask():
    mask = os.umask(0)
    os.umask(mask)
    return mask


_UMASK = _current_umask()


def atomic_write(path, data):
    """Write ``data`` (str or bytes) to a temp file beside ``path``, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.chmod(tmp, 0o644 & ~_UMASK)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_run_header(out_dir, cfg):
    atomic_write(Path(out_dir) / "config.resolved.txt", cfg.to_text())
    atomic_write(Path(out_dir) / "VERSION", f"liqgeom {__version__}\n")


def _fit_opts(cfg):
    f = cfg.fit
    return FitOptions(max_iter=f.max_iter, rtol=f.tol, gtol=f.gtol, grid_scale=f.grid_scale)


def _param_columns(result):
    """Map model parameters onto the fixed report columns.

    Gamma-family and log-normal models fill C, gamma/mu, lambda/sigma in
    their natural order; the power law puts its offset under lambda_or_mu
    and its exponent under sigma_or_alpha.
    """
    nan = float("nan")
    if result is None:
        return nan, nan, nan, nan
    p = [float(v) for v in result.params]
    if result.model in ("integrated_gamma", "gamma_differential"):
        return p[0], p[1], p[2], nan
    if result.model == "cumulative_lognormal":
        return p[0], nan, p[1], p[2]
    if result.model == "truncated_powerlaw":
        return p[0], nan, p[2], p[1]
    return tuple(p[:4]) + (nan,) * (4 - len(p[:4]))


def _try_fit(model, xs, ys, opts, context):
    try:
        return fit(model, xs, ys, opts)
    except FitError as exc:
        log.warning("%s: %s fit failed: %s", context, model, exc)
        return None


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

@dataclass
class SimulationSummary:
    n_snapshots: int
    q_mean: dict
    fits: dict
    out_dir: Path


def _inflation_rng(seed):
    # independent of the stream used to build a random_tree seed graph
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(1,))
    return np.random.Generator(np.random.PCG64(ss))


def simulate(cfg, out_dir):
    """Inflate a graph, project it every ``snapshot_every`` steps and average
    the binned books of all snapshots.

    The averaged non-cumulative profile of each side is fitted with
    ``gamma_differential``; the cumulative averages are fitted with the
    configured models.
    """
    sim, geo = cfg.simulation, cfg.geometry
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_run_header(out_dir, cfg)

    g = init_graph(sim.n_vertices, sim.topology, sim.seed)
    rng = _inflation_rng(sim.seed)
    solver = sim.solver
    if solver == "auto":
        solver = "dense" if sim.n_vertices <= SIM_DENSE_MAX else "iterative"

    K = geo.K
    q_sum = {s: np.zeros(K) for s in SIDES}
    traj = []
    snap_buf = io.StringIO() if sim.write_snapshots else None
    if snap_buf is not None:
        snap_buf.write(",".join(SNAPSHOT_HEADER) + "\n")
    prev = None
    n_snap = 0
    for step in range(1, sim.n_steps + 1):
        inflation_step(g, rng)
        if step % sim.snapshot_every:
            continue
        warm = None
        if prev is not None:
            warm = prev.coords if prev.block is None else prev.block
        proj = fiedler_projection(g, solver=solver, warm_start=warm)
        balance = float("nan") if prev is None else check_balance(prev, align(prev, proj))
        snap = projection_to_snapshot(proj, sim.tick_size, sim.size_rule,
                                      degree=g.degree, timestamp=step)
        mid = mid_price(snap)
        for side in SIDES:
            q_sum[side] += bin_side(snap, side, K, mid=mid).q
        if snap_buf is not None:
            snap_buf.writelines(snapshot_rows(snap))
        traj.append((step, proj.eigenvalue, proj.residual, proj.solver, mid, balance))
        prev = proj
        n_snap += 1

    if snap_buf is not None:
        raw = io.BytesIO()
        with gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as gz:
            gz.write(snap_buf.getvalue().encode("utf-8"))
        atomic_write(out_dir / "snapshots.csv.gz", raw.getvalue())
    atomic_write(out_dir / "trajectory.csv", csv_text(
        ("step", "eigenvalue", "residual", "solver", "mid", "balance"), traj))
    atomic_write(out_dir / "run_metadata.txt", "".join(f"{k}={v}\n" for k, v in (
        ("version", __version__),
        ("rng", RNG_NAME),
        ("seed", sim.seed),
        ("solver", solver),
        ("n_snapshots", n_snap),
        ("n_edges", g.n_edges),
    )))
    write_edge_list_atomic(g, out_dir / "final_edges.txt")

    xs = np.arange(1, K + 1, dtype=float)
    q_mean = {s: q_sum[s] / max(n_snap, 1) for s in SIDES}
    S_mean = {s: np.cumsum(q_mean[s]) for s in SIDES}
    atomic_write(out_dir / "profiles.csv", csv_text(
        ("x", "q_bid", "q_ask", "S_bid", "S_ask"),
        [(int(x), q_mean["bid"][k], q_mean["ask"][k], S_mean["bid"][k], S_mean["ask"][k])
         for k, x in enumerate(xs)]))

    opts = _fit_opts(cfg)
    fits = {}
    rows, plot_rows = [], []
    for side in SIDES:
        jobs = [("gamma_differential", q_mean[side])]
        jobs += [(m, S_mean[side]) for m in cfg.fit.models]
        side_fits = {}
        for model, ys in jobs:
            res = _try_fit(model, xs, ys, opts, f"simulate/{side}") if n_snap else None
            side_fits[model] = res
            C, a, b, c = _param_columns(res)
            rows.append((side, model, C, a, b, c,
                         res.rss if res else float("nan"),
                         res.r2 if res else float("nan"),
                         res.aic if res else float("nan"),
                         res is not None))
        fits[side] = side_fits
        for k, x in enumerate(xs):
            plot_rows.append([side, int(x), q_mean[side][k], S_mean[side][k]] + [
                side_fits[m].fitted[k] if side_fits[m] else float("nan")
                for m, _ in jobs])
    atomic_write(out_dir / "differential_fit.csv", csv_text(
        ("side", "model", "C", "gamma", "lambda_or_mu", "sigma_or_alpha", "rss", "r2", "aic",
         "converged"), rows))
    fitted_cols = ["fit_gamma_differential"] + [f"fit_{m}" for m in cfg.fit.models]
    atomic_write(out_dir / "plot_data.csv", csv_text(
        ["side", "x", "q_emp", "S_emp"] + fitted_cols, plot_rows))
    return SimulationSummary(n_snap, q_mean, fits, out_dir)


def write_edge_list_atomic(g, path):
    atomic_write(path, "".join(f"{i} {j}\n" for i, j in g.sorted_edges()))



# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def asset_name(path):
    name = Path(path).name
    for suffix in (".gz", ".csv"):
        if name.endswith(suffix):
            name = name[: -len(suffix)]
    return name


def load_snapshots(path, tick_size):
    kind = sniff_format(path)
    if kind == "depth":
        return list(build_snapshots(read_depth_csv(path), tick_size))
    return list(read_snapshot_csv(path, tick_size))


@dataclass
class WindowResult:
    asset: str
    side: str
    window: int
    S: np.ndarray
    q: np.ndarray
    fits: dict
    errors: dict


def _fit_window(args):
    asset, side, window, q, models, opts = args
    xs = np.arange(1, q.size + 1, dtype=float)
    S = np.cumsum(q)
    fits, errors = {}, {}
    for m in models:
        try:
            fits[m] = fit(m, xs, S, opts)
        except FitError as exc:
            fits[m] = None
            errors[m] = str(exc)
    return WindowResult(asset, side, window, S, q, fits, errors)


def _window_tasks(asset, snaps, cfg, opts, mids):
    K, T = cfg.geometry.K, cfg.geometry.T
    usable = []
    for snap in snaps:
        try:
            mid = mid_price(snap)
        except EmptySide:
            log.warning("%s: snapshot %d has an empty side, skipped", asset, snap.timestamp)
            continue
        try:
            alt = imbalance_mid(snap)
        except EmptySide:
            alt = float("nan")
        mids.append((asset, snap.timestamp, mid, alt, alt - mid))
        usable.append((snap, mid))
    tasks = []
    for chunk in split_windows(usable, T):
        start = chunk[0][0].timestamp
        for side in SIDES:
            profiles = [bin_side(s, side, K, mid=m) for s, m in chunk]
            q = window_average(profiles).q
            tasks.append((asset, side, start, q, tuple(cfg.fit.models), opts))
    return tasks


def run_fit(cfg, out_dir, inputs=None):
    """Per-asset, per-window, per-side fits of the configured cumulative models."""
    inputs = list(inputs if inputs is not None else cfg.io.inputs)
    if not inputs:
        raise EmptyInput("no input files given")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_run_header(out_dir, cfg)
    opts = _fit_opts(cfg)

    tasks, mids = [], []
    for path in inputs:
        asset = cfg.io.asset or asset_name(path)
        snaps = load_snapshots(path, cfg.geometry.tick_size)
        if not snaps:
            raise EmptyInput(f"{path}: no snapshots")
        tasks.extend(_window_tasks(asset, snaps, cfg, opts, mids))
    if not tasks:
        raise EmptyInput("no snapshot with both sides populated")

    if cfg.io.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.io.jobs) as pool:
            results = list(pool.map(_fit_window, tasks))
    else:
        results = [_fit_window(t) for t in tasks]
    write_fit_outputs(out_dir, results, cfg.fit.models, mids)
    return results


def _delta(ref, res):
    if ref is None or res is None:
        return float("nan")
    return float(ref.aic - res.aic)


def write_fit_outputs(out_dir, results, models, mids):
    out_dir = Path(out_dir)
    report, resid_rows, plot_rows = [], [], []
    for w in results:
        ref = w.fits.get(REFERENCE_MODEL)
        for m in models:
            res = w.fits[m]
            C, a, b, c = _param_columns(res)
            nan = float("nan")
            report.append((w.asset, w.side, w.window, m, C, a, b, c,
                           res.rss if res else nan, res.r2 if res else nan,
                           res.aic if res else nan, _delta(ref, res), res is not None))
            if res is not None:
                lr = log_residuals(res)
                for k in range(w.S.size):
                    lres = nan if lr.mask[k] else float(lr.data[k])
                    resid_rows.append((w.asset, w.side, w.window, m, k + 1, w.S[k],
                                       res.fitted[k], res.residuals[k], lres))
        for k in range(w.S.size):
            plot_rows.append([w.asset, w.side, w.window, k + 1, w.S[k]] + [
                w.fits[m].fitted[k] if w.fits[m] is not None else nan for m in models])
        atomic_write(out_dir / "profiles" / f"{w.asset}_{w.side}_{w.window}.csv",
                     csv_text(("x", "q", "S"),
                              [(k + 1, w.q[k], w.S[k]) for k in range(w.S.size)]))
    atomic_write(out_dir / "fit_report.csv", csv_text(REPORT_COLUMNS, report))
    atomic_write(out_dir / "residuals.csv", csv_text(
        ("asset", "side", "window", "model", "x", "S", "fitted", "residual", "log_residual"),
        resid_rows))
    atomic_write(out_dir / "plot_data.csv", csv_text(
        ["asset", "side", "window", "x", "S_emp"] + [f"S_{m}" for m in models], plot_rows))
    atomic_write(out_dir / "mids.csv", csv_text(
        ("asset", "timestamp", "mid", "imbalance_mid", "difference"), mids))


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def read_report(path):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise ValidationError(f"{path}: not a fit report")
        return list(reader)


def _median(values):
    return float(np.median(values)) if values else float("nan")


def compare_reports(paths, alternative="cumulative_lognormal"):
    """Median R^2 of both models and median dAIC per (asset, side).

    Only converged fits contribute.  dAIC medians use windows where both the
    reference and the alternative converged.
    """
    paths = list(paths)
    if not paths:
        raise EmptyInput("no reports given")
    groups = {}
    for path in paths:
        for row in read_report(path):
            key = (row["asset"], row["side"])
            groups.setdefault(key, {}).setdefault(row["window"], {})[row["model"]] = row
    if not groups:
        raise EmptyInput("reports contain no rows")
    out = []
    for (asset, side) in sorted(groups, key=lambda k: (k[0], SIDES.index(k[1])
                                                       if k[1] in SIDES else 99, k[1])):
        windows = groups[(asset, side)]
        r2_ref, r2_alt, delta = [], [], []
        for rows in windows.values():
            ref, alt = rows.get(REFERENCE_MODEL), rows.get(alternative)
            ok_ref = ref is not None and ref["converged"] == "true"
            ok_alt = alt is not None and alt["converged"] == "true"
            if ok_ref:
                r2_ref.append(float(ref["r2"]))
            if ok_alt:
                r2_alt.append(float(alt["r2"]))
            if ok_ref and ok_alt:
                delta.append(float(alt["delta_aic"]))
        out.append((asset, side, len(windows), _median(r2_ref), _median(r2_alt),
                    _median(delta)))
    return out


def write_comparison(out_dir, rows, cfg=None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg is not None:
        write_run_header(out_dir, cfg)
    atomic_write(out_dir / "comparison.csv", csv_text(COMPARISON_COLUMNS, rows))


__all__ = [
    "OUTPUT_DIR_ENV",
    "atomic_write",
    "compare_reports",
    "run_fit",
    "simulate",
    "write_comparison",
]
