"""Experiment recipes binding the numeric modules together.

Each run_* function takes a resolved config dict (see
:mod:`attainset.config`) and returns a ResultTable plus any extra
artifacts (SVG text, JSON records). Runs are deterministic functions of
the config: re-running one reproduces the table byte for byte.
"""

import json
import subprocess
import time
from dataclasses import dataclass, field

import numpy as np

from . import config as config_mod
from .errors import ConfigError, DivergenceError, TruncatedSeriesError
from .lie import ClosedLoopField, truncation_error_slope
from .policy import FamilySpec, init_params, sample_family
from .reachability import LinearSystem, controllability_matrix, is_fully_reachable
from .svgplot import line_plot_svg
from .systems import SystemCatalogEntry, build_system
from .training import TrainConfig, attained_set_sampled, attained_set_trained, train
from .twonn import PointCloud, estimate_with_ci, load_cloud_csv

__all__ = [
    "ResultTable",
    "run_toy_dim",
    "run_local_spectrum",
    "run_lie_check",
    "run_train_stats",
    "run_estimate_dim",
    "run_reachability",
    "write_run",
]


@dataclass
class ResultTable:
    """Rectangular results with run metadata."""

    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row width does not match columns")
        self.rows.append(tuple(values))

    def column(self, name):
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def to_csv_text(self):
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(_cell(v) for v in row))
        return "\n".join(lines) + "\n"


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _system_from_cfg(cfg, **overrides):
    spec = cfg["system"]
    params = dict(spec.get("parameters", {}))
    params.update(overrides)
    entry = SystemCatalogEntry(name=spec["name"], parameters=params)
    return build_system(entry)


def _family_for(system, policy_cfg, extra_seed=0):
    n = int(policy_cfg["n"])
    base = init_params(n, system.d_s, system.d_a,
                       rng_seed=(int(policy_cfg["seed"]), extra_seed))
    if policy_cfg.get("zero_base"):
        # Diagnostic family around W0 = 0: with a tiny radius the closed
        # loop is essentially the bare drift, the case where the series
        # truncates on low-order nilpotent systems.
        base.w0 = np.zeros_like(base.w0)
        base.w = np.zeros_like(base.w)
    return FamilySpec(radius=float(policy_cfg["r"]), width=n, base=base)


def run_toy_dim(cfg):
    """Attained-set dimension of the chain integrator across state sizes.

    For each d_s: sample the policy family, collect the attained cloud
    over (0, delta] at dt_sample, estimate its TWO-NN dimension with a
    subsample CI. Returns the table and an SVG with the 2 d_a + 1
    reference line.
    """
    if cfg["system"]["name"] != "chain_integrator":
        raise ConfigError("toy_dim runs on the chain integrator")
    sampling = cfg["sampling"]
    estimator = cfg["estimator"]
    num_policies = int(cfg["full_num_policies"] if cfg.get("full_scale")
                       else sampling["num_policies"])
    table = ResultTable(columns=["d_s", "d_hat", "ci_low", "ci_high",
                                 "n_points", "num_diverged"])
    for d_s in cfg["sweep"]["d_s"]:
        d_s = int(d_s)
        system = _system_from_cfg(cfg, d_s=d_s, horizon=2 * sampling["delta"])
        family = _family_for(system, cfg["policy"], extra_seed=d_s)
        s0 = np.ones(d_s) / np.sqrt(d_s)
        aset = attained_set_sampled(system, family, s0, sampling["delta"],
                                    sampling["dt_sample"], num_policies,
                                    rng_seed=(cfg["seed"], d_s),
                                    substeps=int(sampling["substeps"]))
        cloud = PointCloud(aset.points)
        size = min(int(estimator["subsample_size"]), len(cloud))
        est = estimate_with_ci(cloud, int(estimator["subsamples"]), size,
                               float(estimator["trim_fraction"]),
                               rng_seed=(cfg["seed"], d_s, 1))
        table.add(d_s, est.d_hat, est.ci_low, est.ci_high, len(cloud),
                  aset.num_diverged)
    d_a = 1
    svg = line_plot_svg(table.column("d_s"), table.column("d_hat"),
                        y_err=[est_hi - mid for est_hi, mid in
                               zip(table.column("ci_high"), table.column("d_hat"))],
                        hlines=(2 * d_a + 1,),
                        title="Attained-set intrinsic dimension vs state size",
                        xlabel="state dimension d_s",
                        ylabel="TWO-NN estimate")
    table.metadata["num_policies"] = num_policies
    return table, svg


def _spectrum_probe_state(cfg, system):
    if cfg["base_state"] is not None:
        return np.asarray(cfg["base_state"], dtype=float)
    if system.name == "pendulum":
        links = system.d_s // 2
        return np.concatenate([np.full(links, np.pi), np.zeros(links)])
    raise ConfigError("local_spectrum needs base_state for this system")


def run_local_spectrum(cfg):
    """Singular-value profile of the centered attained cloud vs delta.

    Reports sigma_k / sigma_1 for k up to min(d_s, 2 d_a + 3) at each
    delta, plus the log-log slope of the residual ratio (index
    2 d_a + 2) across the sweep.
    """
    system = _system_from_cfg(cfg)
    s_star = _spectrum_probe_state(cfg, system)
    sampling = cfg["sampling"]
    k_max = min(system.d_s, 2 * system.d_a + 3)
    residual_idx = 2 * system.d_a + 2  # first index past the spanned set
    columns = ["delta", "n_points", "num_diverged"] + \
        [f"sv_ratio_{k}" for k in range(1, k_max + 1)]
    table = ResultTable(columns=columns)
    residuals = []
    deltas = [float(d) for d in sampling["deltas"]]
    for delta in deltas:
        dt_sample = delta / int(sampling["samples_per_policy"])
        substeps = max(1, int(round(dt_sample / float(sampling["max_dt"]))))
        if cfg["mode"] == "sampled":
            family = _family_for(system, cfg["policy"])
            aset = attained_set_sampled(system, family, s_star, delta,
                                        dt_sample,
                                        int(sampling["num_policies"]),
                                        rng_seed=(cfg["seed"], 17),
                                        substeps=substeps)
        else:
            tcfg = _train_config(cfg["train"], width=int(cfg["policy"]["n"]))
            aset = attained_set_trained(system, tcfg, s_star, delta, dt_sample,
                                        int(cfg["num_seeds"]),
                                        float(cfg["tau"]),
                                        rng_seed=(cfg["seed"], 17),
                                        substeps=substeps)
        pts = aset.points - aset.points.mean(axis=0)
        svals = np.linalg.svd(pts, compute_uv=False)
        ratios = svals[:k_max] / svals[0]
        if residual_idx <= k_max:
            residuals.append(ratios[residual_idx - 1])
        table.add(delta, pts.shape[0], aset.num_diverged, *ratios.tolist())
    if len(residuals) == len(deltas) and len(deltas) >= 2:
        slope = float(np.polyfit(np.log(deltas), np.log(residuals), 1)[0])
        table.metadata["residual_ratio_slope"] = slope
    table.metadata["residual_index"] = residual_idx
    return table, None


def _train_config(train_cfg, width):
    probe = tuple(np.asarray(p, dtype=float) for p in train_cfg["probe_states"])
    start = train_cfg.get("start_state")
    return TrainConfig(eta0=float(train_cfg["eta0"]),
                       batch=int(train_cfg["batch"]),
                       steps=0,
                       fd_step=float(train_cfg["fd_step"]),
                       h_window=float(train_cfg["h_window"]),
                       dt=float(train_cfg["dt"]),
                       exploration_scale=float(train_cfg["exploration_scale"]),
                       start_state=None if start is None else
                       np.asarray(start, dtype=float),
                       probe_states=probe,
                       width_schedule=(width,))


def run_lie_check(cfg):
    """Per-policy truncation-order slopes of the order-2 exponential map."""
    system = _system_from_cfg(cfg)
    family = _family_for(system, cfg["policy"])
    s = np.asarray(cfg["base_state"], dtype=float)
    grid_cfg = cfg["t_grid"]
    t_grid = np.geomspace(float(grid_cfg["start"]), float(grid_cfg["stop"]),
                          int(grid_cfg["count"]))
    table = ResultTable(columns=["policy", "slope", "truncated"])
    slopes = []
    for i in range(int(cfg["num_policies"])):
        w = sample_family(family, rng_seed=(cfg["seed"], i))
        clf = ClosedLoopField(system, family.base.with_w(w), mode="family")
        try:
            slope = truncation_error_slope(clf, s, t_grid,
                                           dt_ref=float(cfg["dt_ref"]))
        except TruncatedSeriesError:
            table.add(i, float("nan"), True)
            continue
        slopes.append(slope)
        table.add(i, slope, False)
    if slopes:
        table.metadata["mean_slope"] = float(np.mean(slopes))
        table.metadata["sd_slope"] = float(np.std(slopes, ddof=1)) \
            if len(slopes) > 1 else 0.0
    else:
        table.metadata["flag"] = "truncated series, slope undefined"
    return table, None


def run_train_stats(cfg):
    """Across-seed variance of the probe-state action statistic per width.

    Seeds share one initialisation per width (so the variance isolates
    the stochastic-gradient noise, the quantity that must shrink with
    width); the per-width mean increment traces are emitted on the
    common gradient-time grid.
    """
    system = _system_from_cfg(cfg)
    widths = [int(w) for w in cfg["widths"]]
    num_seeds = int(cfg["num_seeds"])
    tau_total = float(cfg["tau"])
    shared_init = bool(cfg["shared_init"])
    table = ResultTable(columns=["width", "tau", "mean_action",
                                 "mean_increment", "var_action",
                                 "var_increment"])
    final_vars = {}
    mean_traces = {}
    for width in widths:
        tcfg = _train_config(cfg["train"], width)
        eta = tcfg.eta(width)
        steps = max(1, int(round(tau_total / eta)))
        tcfg.steps = steps
        traces = []
        base = init_params(width, system.d_s, system.d_a,
                           rng_seed=(cfg["seed"], width))
        for seed_idx in range(num_seeds):
            params = base if shared_init else init_params(
                width, system.d_s, system.d_a,
                rng_seed=(cfg["seed"], width, seed_idx))
            result = train(system, params, tcfg,
                           rng_seed=(cfg["seed"], width, seed_idx, 1))
            if result.diverged_at is not None:
                continue
            taus, acts = result.stats.action_trace(0)
            traces.append(acts[:, 0])
        if not traces:
            raise DivergenceError(tau_total, np.inf)
        traces = np.array(traces)
        taus = np.arange(steps + 1) * eta
        increments = traces - traces[:, :1]
        for k in range(steps + 1):
            col = traces[:, k]
            inc = increments[:, k]
            var_a = float(np.var(col, ddof=1)) if len(col) > 1 else 0.0
            var_i = float(np.var(inc, ddof=1)) if len(inc) > 1 else 0.0
            table.add(width, float(taus[k]), float(np.mean(col)),
                      float(np.mean(inc)), var_a, var_i)
        final_vars[width] = float(np.var(traces[:, -1], ddof=1))
        mean_traces[width] = increments.mean(axis=0)
        table.metadata[f"completed_seeds_{width}"] = int(traces.shape[0])
    table.metadata["final_variance_by_width"] = final_vars
    first, last = widths[0], widths[-1]
    if final_vars[first] > 0:
        table.metadata["variance_ratio"] = final_vars[last] / final_vars[first]
    # width-independence of the mean increment trace at matched tau
    grids = {w: np.linspace(0.0, tau_total, 33) for w in widths}
    interp = {}
    for w in widths:
        eta = _train_config(cfg["train"], w).eta(w)
        steps = max(1, int(round(tau_total / eta)))
        taus = np.arange(steps + 1) * eta
        interp[w] = np.interp(grids[w], taus, mean_traces[w])
    sup_diff = float(np.max(np.abs(interp[last] - interp[first])))
    rng_all = max(float(np.ptp(interp[w])) for w in widths)
    table.metadata["mean_trace_sup_diff"] = sup_diff
    table.metadata["mean_trace_range"] = rng_all
    return table, None


def run_estimate_dim(cfg):
    """TWO-NN estimate of a CSV point cloud; returns the table and JSON."""
    cloud = load_cloud_csv(cfg["csv_path"])
    est_cfg = cfg["estimator"]
    size = min(int(est_cfg["subsample_size"]), len(cloud))
    est = estimate_with_ci(cloud, int(est_cfg["subsamples"]), size,
                           float(est_cfg["trim_fraction"]),
                           rng_seed=cfg["seed"])
    table = ResultTable(columns=["d_hat", "ci_low", "ci_high", "n"])
    table.add(est.d_hat, est.ci_low, est.ci_high, len(cloud))
    record = est.to_json(n=len(cloud), params={"csv_path": cfg["csv_path"]})
    return table, record


def run_reachability(cfg):
    """Kalman rank test of the configured linear system."""
    if cfg.get("matrices"):
        mats = cfg["matrices"]
        lin = LinearSystem(np.array(mats["A"], dtype=float),
                           np.array(mats["B"], dtype=float))
    else:
        system = _system_from_cfg(cfg)
        if system.kernel is None or system.kernel.kind != 0:
            raise ConfigError("reachability needs a linear system")
        lin = LinearSystem(system.kernel.a_mat, system.kernel.b_mat)
    report = is_fully_reachable(lin, tol=float(cfg["tol"]))
    table = ResultTable(columns=["rank", "full", "sv_index", "singular_value"])
    for i, sv in enumerate(report.singular_values):
        table.add(report.rank, report.full, i, float(sv))
    table.metadata["d_s"] = lin.d_s
    table.metadata["controllability_shape"] = list(controllability_matrix(lin).shape)
    return table, None


_RUNNERS = {
    "toy_dim": run_toy_dim,
    "local_spectrum": run_local_spectrum,
    "lie_check": run_lie_check,
    "train_stats": run_train_stats,
    "estimate_dim": run_estimate_dim,
    "reachability": run_reachability,
}


def run_experiment(cfg):
    started = time.time()
    table, extra = _RUNNERS[cfg["experiment"]](cfg)
    runtime = time.time() - started
    return table, extra, runtime


def _git_describe():
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=10)
        if out.returncode == 0:
            return out.stdout.strip()
    except OSError:
        pass
    return "unknown"


def write_run(outdir, cfg, table, extra=None, runtime=None):
    """Persist (config, results, metadata[, plot/json]) to a directory.

    results.csv is byte-reproducible for a fixed config; wall-clock data
    goes to meta.json only.
    """
    import os

    from . import __version__
    from ._backend import BACKEND

    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "config.json"), "w", newline="\n") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(os.path.join(outdir, "results.csv"), "w", newline="\n") as fh:
        fh.write(table.to_csv_text())
    meta = {"config_hash": config_mod.config_hash(cfg),
            "seed": cfg["seed"],
            "git_describe": _git_describe(),
            "runtime_seconds": runtime,
            "package_version": __version__,
            "backend": BACKEND,
            "table_metadata": _jsonable(table.metadata)}
    with open(os.path.join(outdir, "meta.json"), "w", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if isinstance(extra, str) and extra.startswith("<svg"):
        with open(os.path.join(outdir, "plot.svg"), "w", newline="\n") as fh:
            fh.write(extra)
    elif isinstance(extra, str):
        with open(os.path.join(outdir, "estimate.json"), "w", newline="\n") as fh:
            fh.write(extra + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj
