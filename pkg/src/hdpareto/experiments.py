"""Seeded experiment runners behind the CLI subcommands.

Every runner is a pure function of its config.  Repeat r uses seed
``base_seed + r``; all randomness inside a repeat is derived from that seed.
Repeats may run in worker processes (see ``worker_count``) and their rows are
sorted before output, so completion order never shows in the results.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import spearmanr

from . import datagen, dataio, metrics, rng
from . import estimators as est
from .config import (
    AdversarialConfig,
    FairnessConfig,
    FrontCompareConfig,
    HvReportConfig,
    SynthSweepConfig,
)
from .model_core import SimplexWeights, simplex_grid_2d
from .pareto_set import TrainSettings, hypernet_forward, train_hypernet_direct, train_hypernet_two_stage
from .solvers import SolverSettings

log = logging.getLogger(__name__)

THREADS_ENV = "HDPARETO_THREADS"
RESULT_COLUMNS = ("experiment", "method", "lambda", "seed", "metric", "value")


@dataclass(frozen=True, order=True)
class ResultRow:
    experiment: str
    method: str
    lam: str
    seed: int
    metric: str
    value: float


@dataclass
class ExperimentResult:
    experiment: str
    rows: list
    summary: dict = field(default_factory=dict)
    # name -> list of (x, y) for the SVG report
    series: dict = field(default_factory=dict)
    axes: tuple = ("L1", "L2")

    def sorted_rows(self) -> list:
        return sorted(self.rows)


def lam_label(lam) -> str:
    w = lam.weights if isinstance(lam, SimplexWeights) else np.asarray(lam, dtype=float)
    return ";".join(f"{x:.6f}" for x in w)


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be >= 1")
    return n


def _map(fn, args: list) -> list:
    workers = min(worker_count(), len(args))
    if workers <= 1:
        return [fn(a) for a in args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args))


def _mean_by(rows, key):
    groups: dict = {}
    for r in rows:
        groups.setdefault(key(r), []).append(r.value)
    return {k: float(np.mean(v)) for k, v in sorted(groups.items())}


# -- synth-sweep ---------------------------------------------------------------

def _sweep_repeat(job):
    cfg, seed = job
    lam = SimplexWeights(cfg.lam)
    rows = []
    for s in cfg.sparsities:
        # nested supports and shared covariances across cells (common random numbers)
        inst = datagen.make_instance(cfg.d, 2, s, cfg.noise_sd, seed, cfg.cov_min, cfg.cov_max)
        objs = inst.objectives()
        for N in cfg.unlabeled:
            data = [datagen.sample_multidist(inst, k, cfg.n, N, rng.derive_seed(seed, "data", k)) for k in range(2)]
            ests = [est.stage1_multidist(D, B=1.0, sigma=cfg.noise_sd, penalty_const=cfg.penalty_const) for D in data]
            excess = metrics.excess_scalarized(est.two_stage(ests, lam), objs, lam)
            rows.append(ResultRow("synth-sweep", "two_stage", lam_label(lam), seed,
                                  f"log_excess[s={s},N={N}]", float(math.log(max(excess, 1e-300)))))
    return rows


def sweep_trends(cell_means: dict, sparsities, unlabeled) -> dict:
    """Spearman correlations of the marginal cell means with N and with s (plus the pooled ones)."""
    M = np.array([[cell_means[(s, N)] for N in unlabeled] for s in sparsities])
    out = {}
    if len(unlabeled) > 1:
        out["spearman_N"] = float(spearmanr(unlabeled, M.mean(axis=0))[0])
    if len(sparsities) > 1:
        out["spearman_s"] = float(spearmanr(sparsities, M.mean(axis=1))[0])
    if len(unlabeled) > 1 and len(sparsities) > 1:
        S, NN = np.meshgrid(sparsities, unlabeled, indexing="ij")
        out["pooled_spearman_N"] = float(spearmanr(NN.ravel(), M.ravel())[0])
        out["pooled_spearman_s"] = float(spearmanr(S.ravel(), M.ravel())[0])
    return out


def _parse_cell(metric: str) -> tuple[int, int]:
    inner = metric[metric.index("[") + 1:-1]
    parts = dict(p.split("=") for p in inner.split(","))
    return int(parts["s"]), int(parts["N"])


def run_synth_sweep(cfg: SynthSweepConfig) -> ExperimentResult:
    rows = [r for chunk in _map(_sweep_repeat, [(cfg, s) for s in cfg.seeds()]) for r in chunk]
    means = {_parse_cell(m): v for m, v in _mean_by(rows, lambda r: r.metric).items()}
    summary = {
        "cells": [{"s": s, "N": N, "mean_log_excess": means[(s, N)]}
                  for s in cfg.sparsities for N in cfg.unlabeled],
        **sweep_trends(means, cfg.sparsities, cfg.unlabeled),
    }
    series = {f"s={s}": [(float(N), means[(s, N)]) for N in cfg.unlabeled] for s in cfg.sparsities}
    return ExperimentResult("synth-sweep", rows, summary, series, ("N", "mean log excess"))


# -- front-compare -------------------------------------------------------------

def _stage1(datasets, k, penalty, sigma, settings):
    if penalty == "holdout":
        return est.stage1_holdout(datasets, k, settings)
    return est.stage1_multidist(datasets[k], B=1.0, sigma=sigma, settings=settings, penalty_const=float(penalty))


def evaluation_grid(size: int, include_midpoint: bool) -> list:
    """``size`` equispaced weights, plus (1/2, 1/2) when requested and absent."""
    grid = simplex_grid_2d(size)
    if include_midpoint and not any(lam[0] == 0.5 for lam in grid):
        grid.append(SimplexWeights([0.5, 0.5]))
        grid.sort(key=lambda lam: lam[0])
    return grid


def _front_repeat(job):
    cfg, seed = job
    rank = cfg.spike_rank if cfg.spectrum == "spiked" else None
    inst = datagen.make_instance(cfg.d, 2, cfg.sparsity, cfg.noise_sd, seed, cfg.cov_min, cfg.cov_max, rank)
    objs = inst.objectives()
    data = [datagen.sample_multidist(inst, k, cfg.n, cfg.N, rng.derive_seed(seed, "data", k)) for k in range(2)]
    settings = SolverSettings(tol=cfg.solver_tol, max_iter=cfg.solver_max_iter, seed=seed)
    grid = evaluation_grid(cfg.grid_size, cfg.include_midpoint)
    ests = [_stage1(data, k, cfg.stage1_penalty, cfg.noise_sd, settings) for k in range(2)]
    train = TrainSettings(steps=cfg.hypernet_steps, seed=seed)

    estimators = {}
    if "two_stage" in cfg.methods:
        estimators["two_stage"] = lambda lam: est.two_stage(ests, lam)
    if "direct_regularized" in cfg.methods:
        estimators["direct_regularized"] = lambda lam: est.direct_regularized(data, lam, None, settings)
    if "plug_in" in cfg.methods:
        plug = SolverSettings(max_iter=cfg.plug_in_max_iter, seed=seed)
        estimators["plug_in"] = lambda lam: est.plug_in(data, lam, plug)
    if "hypernetwork_ts" in cfg.methods:
        net_ts = train_hypernet_two_stage(ests, train)
        estimators["hypernetwork_ts"] = lambda lam: hypernet_forward(net_ts, lam)
    if "hypernetwork_dr" in cfg.methods:
        alpha = est.select_alpha(data, SimplexWeights([0.5, 0.5]), settings)
        net_dr = train_hypernet_direct(data, alpha, train)
        estimators["hypernetwork_dr"] = lambda lam: hypernet_forward(net_dr, lam)

    rows = []
    for method, fit in estimators.items():
        for lam in grid:
            theta = fit(lam)
            vals = metrics.front(objs, [theta])[0]
            label = lam_label(lam)
            rows.append(ResultRow("front-compare", method, label, seed, "L1", float(vals[0])))
            rows.append(ResultRow("front-compare", method, label, seed, "L2", float(vals[1])))
            rows.append(ResultRow("front-compare", method, label, seed, "excess",
                                  float(metrics.excess_scalarized(theta, objs, lam))))
    return rows


def _average_fronts(rows) -> dict:
    means = _mean_by(rows, lambda r: (r.method, r.lam, r.metric))
    methods = sorted({m for m, _, _ in means})
    out = {}
    for m in methods:
        lams = sorted({lam for mm, lam, _ in means if mm == m})
        out[m] = {lam: {metric: means[(m, lam, metric)] for (mm, l2, metric) in means if mm == m and l2 == lam}
                  for lam in lams}
    return out


def run_front_compare(cfg: FrontCompareConfig) -> ExperimentResult:
    rows = [r for chunk in _map(_front_repeat, [(cfg, s) for s in cfg.seeds()]) for r in chunk]
    avg = _average_fronts(rows)
    series = {m: [(v["L1"], v["L2"]) for _, v in sorted(pts.items())] for m, pts in avg.items()}
    return ExperimentResult("front-compare", rows, {"average_front": avg}, series, ("L1", "L2"))


# -- fairness-run ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class _FairnessData:
    train: est.ObjectiveDataset
    test_x: np.ndarray
    test_y: np.ndarray
    test_group: np.ndarray
    risk_metric: str
    target_offset: float = 0.0


def _fairness_data(cfg: FairnessConfig, seed: int, table=None) -> _FairnessData:
    if cfg.dataset == "synthetic":
        beta = datagen.random_sparse_vector(cfg.d, cfg.sparsity, rng.derive_seed(seed, "beta"))
        z = rng.normal(rng.stream(seed, "mu-direction"), cfg.d) / math.sqrt(cfg.d)
        mu = beta + z
        mu = cfg.mu_norm * mu / np.linalg.norm(mu)
        train = datagen.sample_fairness(beta, mu, cfg.noise_sd, cfg.n, cfg.N, rng.derive_seed(seed, "train"))
        test = datagen.sample_fairness(beta, mu, cfg.noise_sd, cfg.n_test, 0, rng.derive_seed(seed, "test"))
        return _FairnessData(train, test.labeled_x, test.labeled_y, test.group, "squared_loss")
    overrides = {"standardize_on": cfg.standardize_on, "center_target": True}
    if cfg.n_labeled:
        overrides["n_labeled"] = cfg.n_labeled
        overrides["n_unlabeled"] = cfg.n_unlabeled
    if cfg.noise_features >= 0:
        overrides["noise_features"] = cfg.noise_features
    if cfg.dataset == "csv":
        overrides.setdefault("noise_features", 0)
        plan = dataio.PreprocessPlan(seed=seed, **overrides)
        metric = "squared_loss"
    else:
        plan = dataio.preset_plan(cfg.dataset, seed=seed, **overrides)
        metric = dataio.PRESETS[cfg.dataset][3]
    pre = dataio.preprocess(table, plan)
    return _FairnessData(pre.train, pre.test.features, pre.test.target, pre.test.group, metric, pre.target_offset)


def _fairness_repeat(job):
    cfg, seed, table = job
    fd = _fairness_data(cfg, seed, table)
    settings = SolverSettings(tol=cfg.solver_tol, max_iter=cfg.solver_max_iter, seed=seed)
    train = fd.train
    if cfg.stage1_penalty == "holdout":
        beta_hat = est.stage1_holdout([train], 0, settings).beta_hat
        mu_hat = est.signed_mean(train)
    else:
        p = est.stage1_fairness(train, settings=settings, penalty_const=float(cfg.stage1_penalty))
        beta_hat, mu_hat = p.beta_hat, p.mu_hat
    mu_test = fd.test_group @ fd.test_x / fd.test_x.shape[0]
    rows = []
    for lam in evaluation_grid(cfg.grid_size, cfg.include_midpoint):
        fits = {"direct_regularized": est.direct_regularized_fairness(train, mu_hat, lam, None, settings, cfg.risk_scale)}
        if lam[0] > 0:  # the fairness score alone does not identify a minimizer
            fits["two_stage"] = est.two_stage_fairness(beta_hat, mu_hat, lam, cfg.risk_scale)
        for method, theta in fits.items():
            scores = fd.test_x @ theta
            if fd.risk_metric == "error_rate":
                risk = metrics.error_rate(scores + fd.target_offset, fd.test_y)
            else:
                risk = float(np.mean((scores + fd.target_offset - fd.test_y) ** 2))
            fair = float(mu_test @ theta) ** 2
            label = lam_label(lam)
            rows.append(ResultRow("fairness-run", method, label, seed, "risk", risk))
            rows.append(ResultRow("fairness-run", method, label, seed, "fairness", fair))
            rows.append(ResultRow("fairness-run", method, label, seed, "scalarized",
                                  float(lam[0] * risk + lam[1] * fair)))
    return rows


def run_fairness(cfg: FairnessConfig) -> ExperimentResult:
    table = None
    if cfg.dataset != "synthetic":
        schema = dataio.CsvSchema(cfg.target_column, cfg.group_column, cfg.drop_columns, cfg.positive_group_value)
        table = dataio.load_csv(cfg.csv_path, schema)
    rows = [r for chunk in _map(_fairness_repeat, [(cfg, s, table) for s in cfg.seeds()]) for r in chunk]
    avg = _average_fronts(rows)
    series = {m: [(v["risk"], v["fairness"]) for _, v in sorted(pts.items())] for m, pts in avg.items()}
    summary = {"average_front": avg}
    if table is not None:
        summary["rejected_rows"] = table.rejected_rows
    return ExperimentResult("fairness-run", rows, summary, series, ("risk", "fairness"))


# -- adversarial-contrast --------------------------------------------------------

def _adversarial_repeat(job):
    cfg, seed = job
    lam = SimplexWeights(cfg.lam)
    v = rng.rademacher(rng.stream(seed, "v"), cfg.d) / math.sqrt(cfg.d)
    S1, S2, b1, b2 = datagen.adversarial_instance(v, lam, cfg.gamma)
    datasets, ests = [], []
    for k, (S, b) in enumerate(((S1, b1), (S2, b2))):
        X = datagen.fixed_design_from_cov(S, cfg.n)
        y = datagen.fixed_design_response(X, b, cfg.noise_sd, rng.derive_seed(seed, "noise", k))
        datasets.append(est.ObjectiveDataset(X, y))
        ests.append(est.stage1_fixed_design(X, y, cfg.gamma, cfg.noise_sd))
    ts_err = float(np.sum((est.two_stage(ests, lam) - v) ** 2))
    path = est.direct_regularized_path(datasets, lam, est.ALPHA_GRID)
    errs = {a: float(np.sum((th - v) ** 2)) for a, th in path.items()}
    best = min(errs, key=lambda a: (errs[a], a))
    label = lam_label(lam)
    return [
        ResultRow("adversarial-contrast", "two_stage", label, seed, "sq_error", ts_err),
        ResultRow("adversarial-contrast", "direct_regularized", label, seed, "sq_error", errs[best]),
        ResultRow("adversarial-contrast", "direct_regularized", label, seed, "best_alpha", best),
    ]


def run_adversarial_contrast(cfg: AdversarialConfig) -> ExperimentResult:
    rows = [r for chunk in _map(_adversarial_repeat, [(cfg, s) for s in cfg.seeds()]) for r in chunk]
    err = {m: [r.value for r in sorted(rows) if r.method == m and r.metric == "sq_error"]
           for m in ("two_stage", "direct_regularized")}
    med_ts = float(np.median(err["two_stage"]))
    med_dr = float(np.median(err["direct_regularized"]))
    summary = {
        "median_sq_error_two_stage": med_ts,
        "median_sq_error_direct_regularized": med_dr,
        "ratio": med_ts / med_dr if med_dr > 0 else math.inf,
    }
    series = {m: [(float(i), e) for i, e in enumerate(sorted(v))] for m, v in err.items()}
    return ExperimentResult("adversarial-contrast", rows, summary, series, ("rank", "squared error"))


# -- hv-report ---------------------------------------------------------------------

def _hv_repeat(job):
    cfg, seed = job
    inst = datagen.make_instance(cfg.d, 2, cfg.sparsity, cfg.noise_sd, seed, cfg.cov_min, cfg.cov_max)
    objs = inst.objectives(with_noise=False)
    data = [datagen.sample_multidist(inst, k, cfg.n, cfg.N, rng.derive_seed(seed, "data", k)) for k in range(2)]
    settings = SolverSettings(seed=seed)
    grid = simplex_grid_2d(cfg.grid_size)
    ests = [est.stage1_holdout(data, k, settings) for k in range(2)]
    fits = {
        "two_stage": [est.two_stage(ests, lam) for lam in grid],
        "direct_regularized": [est.direct_regularized(data, lam, None, settings) for lam in grid],
    }
    true_front = metrics.front(objs, [est.mixture_quadratic_minimizer(objs, lam) for lam in grid])
    r = cfg.reference or 2.0 * float(np.abs(true_front).max())
    rows = [ResultRow("hv-report", "truth", "", seed, "hv_exact", metrics.hypervolume_exact_2d(true_front, r)),
            ResultRow("hv-report", "truth", "", seed, "reference", r)]
    for method, thetas in fits.items():
        pts = metrics.front(objs, thetas)
        inside = pts[np.all(pts <= r, axis=1)]
        hv_mc = metrics.hypervolume_mc(inside, metrics.HypervolumeSpec(r, cfg.mc_samples, seed)) if len(inside) else 0.0
        lhs, rhs, holds = metrics.hypervolume_front_bound(objs, grid, thetas, r)
        eps, _ = metrics.front_epsilons(objs, grid, thetas)
        for metric, value in (("hv_exact", lhs), ("hv_mc", hv_mc), ("hv_bound", rhs),
                              ("bound_holds", float(holds)), ("eps_max", float(eps.max()))):
            rows.append(ResultRow("hv-report", method, "", seed, metric, float(value)))
    return rows


def run_hv_report(cfg: HvReportConfig) -> ExperimentResult:
    rows = [r for chunk in _map(_hv_repeat, [(cfg, s) for s in cfg.seeds()]) for r in chunk]
    means = _mean_by(rows, lambda r: (r.method, r.metric))
    summary = {f"{m}.{k}": v for (m, k), v in means.items()}
    summary["bound_violations"] = int(sum(1 for r in rows if r.metric == "bound_holds" and r.value < 1))
    series = {m: [(float(r.seed), r.value) for r in sorted(rows) if r.method == m and r.metric == "hv_exact"]
              for m in ("truth", "two_stage", "direct_regularized")}
    return ExperimentResult("hv-report", rows, summary, series, ("seed", "hypervolume"))
