"""End-to-end orchestration: geometry, synthesis, clustering, training,
online reconstruction, positioning, and reporting.

A run builds the skeleton and offline database, clusters the reference
points, trains both radio-map generators, synthesizes one online snapshot
(monitor readings, user readings, and the crowded ground truth), and scores
every requested estimator/database combination against the true test-point
positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import clustering, floorplan, linear, neural, positioning, radiosim
from .errors import DivergenceError, PipelineError
from .scenario import ALL_METHODS, Scenario, load_scenario_map, resolve_points

DB_LABELS = ("original", "true", "lr", "nn")


@dataclass(frozen=True)
class MethodResult:
    label: str
    records: tuple

    @property
    def errors(self) -> np.ndarray:
        return np.array([r[3] for r in self.records])

    @property
    def mean_error(self) -> float:
        return float(self.errors.mean())

    @property
    def median_error(self) -> float:
        return float(np.median(self.errors))

    def cdf(self) -> list[tuple[float, float]]:
        errs = np.sort(self.errors)
        n = len(errs)
        return [(float(e), (i + 1) / n) for i, e in enumerate(errs)]


@dataclass
class EvaluationReport:
    seed: int
    methods: dict[str, MethodResult] = field(default_factory=dict)
    n_clusters: int = 0
    exemplars: tuple = ()
    cluster_converged: bool = True
    rss_mae: dict[str, float] = field(default_factory=dict)
    rss_error_grids: dict[str, np.ndarray] = field(default_factory=dict)
    rp_positions: np.ndarray | None = None
    diverged: bool = False
    divergence_stage: str | None = None

    def as_text(self) -> str:
        lines = [f"seed {self.seed}"]
        lines.append(f"diverged {int(self.diverged)} {self.divergence_stage or '-'}")
        lines.append(f"clusters {self.n_clusters} converged {int(self.cluster_converged)}")
        lines.append("exemplars " + " ".join(str(int(e)) for e in self.exemplars))
        for label in sorted(self.rss_mae):
            lines.append(f"rss_mae {label} {self.rss_mae[label]:.17g}")
        for name in sorted(self.methods):
            m = self.methods[name]
            lines.append(f"method {name} mean {m.mean_error:.17g} median {m.median_error:.17g}")
            for tp, true_xy, est_xy, err in m.records:
                lines.append(
                    f"  {tp} {true_xy[0]:.17g} {true_xy[1]:.17g} "
                    f"{est_xy[0]:.17g} {est_xy[1]:.17g} {err:.17g}"
                )
        return "\n".join(lines) + "\n"


@dataclass
class PipelineState:
    """Intermediate artifacts shared between stages."""

    scenario: Scenario
    fmap: floorplan.FloorMap = None
    skeleton: floorplan.Skeleton = None
    ssp: floorplan.SspMatrix = None
    rps: np.ndarray = None
    tps: np.ndarray = None
    db: radiosim.RssDatabase = None
    similarity: clustering.SimilarityMatrix = None
    cm: clustering.ClusterModel = None
    lr_models: linear.LinearModelSet = None
    nn_thetas: list = None
    mp_now: np.ndarray = None
    user_rss: np.ndarray = None
    slices: dict = field(default_factory=dict)


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


def needed_labels(methods) -> set[str]:
    return {m.split("-", 1)[1] for m in methods}


def prepare_geometry(state: PipelineState) -> PipelineState:
    sc = state.scenario
    state.fmap = _stage("map", load_scenario_map, sc)
    state.skeleton = _stage("skeleton", floorplan.build_skeleton, state.fmap)
    state.ssp = _stage("shortest-paths", floorplan.shortest_path_matrix, state.skeleton)
    state.rps, state.tps = _stage("points", resolve_points, sc, state.fmap)
    return state


def synthesize_offline(state: PipelineState) -> PipelineState:
    sc = state.scenario
    env = sc.environment(crowded=True)
    state.db = _stage("synth", radiosim.build_database, state.rps, sc.aps, env, sc.n_samples)
    return state


def cluster_points(state: PipelineState) -> PipelineState:
    sc = state.scenario
    state.similarity = _stage(
        "similarity",
        clustering.build_similarity,
        state.db,
        state.rps,
        state.skeleton,
        state.ssp,
        sc.similarity_weights,
        sc.preference,
        sc.delta_orientation,
    )
    state.cm = _stage(
        "clustering",
        clustering.affinity_propagation,
        state.similarity,
        sc.damping,
        sc.cluster_max_iter,
        sc.cluster_stable_iters,
    )
    return state


def train_models(state: PipelineState, labels: set[str] | None = None) -> PipelineState:
    sc = state.scenario
    labels = labels if labels is not None else needed_labels(sc.methods)
    if "lr" in labels:
        state.lr_models = _stage(
            "train-lr", linear.fit, state.db, state.cm, sc.learning_rate, sc.lr_epochs
        )
    if "nn" in labels:
        thetas = []
        for l in range(len(sc.aps)):
            samples = _stage("preprocess", neural.preprocess, state.db, state.cm, l)
            theta_p = _stage(
                "pretrain",
                neural.pretrain,
                samples[: sc.pretrain_samples],
                state.cm,
                sc.gamma,
                sc.learning_rate,
                sc.nn_pretrain_iters,
                sc.nn_hidden,
                sc.stage_seed("init") + l,
                l,
                sc.nn_batch_size,
            )
            theta_f = _stage(
                "finetune",
                neural.finetune,
                theta_p,
                samples,
                sc.gamma,
                sc.learning_rate,
                sc.nn_finetune_iters,
                sc.nn_batch_size,
            )
            thetas.append(theta_f)
        state.nn_thetas = thetas
    return state


def online_phase(state: PipelineState, labels: set[str] | None = None) -> PipelineState:
    """Synthesize the online snapshot and build every requested radio-map slice."""
    sc = state.scenario
    labels = labels if labels is not None else needed_labels(sc.methods)
    env = sc.environment(crowded=True)
    t_o = sc.t_online
    exemplars = np.sort(state.cm.exemplars)
    state.mp_now = _stage(
        "online-mp", radiosim.snapshot, state.rps[exemplars], sc.aps, env, t_o
    )
    state.user_rss = _stage("online-user", radiosim.snapshot, state.tps, sc.aps, env, t_o)
    gt = _stage(
        "ground-truth", radiosim.snapshot, state.rps, sc.aps, radiosim.noiseless(env), t_o
    )
    state.slices["gt"] = gt
    if "original" in labels:
        state.slices["original"] = state.db.values[:, :, 0].copy()
    if "true" in labels:
        state.slices["true"] = gt.copy()
    if "lr" in labels:
        state.slices["lr"] = _stage("reconstruct-lr", linear.reconstruct, state.lr_models, state.mp_now)
    if "nn" in labels:
        state.slices["nn"] = _stage(
            "reconstruct-nn", neural.reconstruct_all, state.nn_thetas, state.mp_now, state.db, state.cm
        )
    return state


def evaluate_methods(state: PipelineState, k: int | None = None) -> EvaluationReport:
    sc = state.scenario
    k = k if k is not None else sc.k
    gt = state.slices["gt"]
    report = EvaluationReport(
        seed=sc.seed,
        n_clusters=state.cm.n_mp,
        exemplars=tuple(int(e) for e in state.cm.exemplars),
        cluster_converged=state.cm.converged,
        rp_positions=state.rps,
    )
    for label in DB_LABELS:
        if label in state.slices:
            grid = np.abs(state.slices[label] - gt)
            report.rss_error_grids[label] = grid
            report.rss_mae[label] = float(grid.mean())
    for method in sc.methods:
        estimator, label = method.split("-", 1)
        if label not in state.slices:
            continue
        db_slice = state.slices[label]
        records = []
        for tp_index, (true_pos, user) in enumerate(zip(state.tps, state.user_rss)):
            if estimator == "csle":
                est = positioning.csle_estimate(db_slice, state.cm, state.rps, user, k)
            else:
                est = positioning.wknn_baseline(db_slice, state.rps, user, k)
            err = float(np.linalg.norm(est.xy - true_pos))
            records.append(
                (tp_index, (float(true_pos[0]), float(true_pos[1])),
                 (float(est.xy[0]), float(est.xy[1])), err)
            )
        report.methods[method] = MethodResult(label=method, records=tuple(records))
    return report


def run_pipeline(scenario: Scenario, out_dir=None) -> EvaluationReport:
    """Full run: geometry -> synthesis -> clustering -> training -> online
    reconstruction -> positioning report.  Artifacts are persisted under
    out_dir when given."""
    state = PipelineState(scenario=scenario)
    prepare_geometry(state)
    synthesize_offline(state)
    cluster_points(state)
    train_models(state)
    online_phase(state)
    report = evaluate_methods(state)
    if out_dir is not None:
        save_artifacts(state, report, out_dir)
    return report


def save_artifacts(state: PipelineState, report: EvaluationReport | None, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if state.skeleton is not None:
        floorplan.save_skeleton(state.skeleton, out / "skeleton.txt")
    if state.db is not None:
        radiosim.save_database(state.db, out / "offline_db.txt")
    if state.similarity is not None:
        clustering.save_similarity(state.similarity, out / "similarity.txt")
    if state.cm is not None:
        clustering.save_clusters(state.cm, out / "clusters.txt")
    if state.lr_models is not None:
        linear.save_linear_models(state.lr_models, out / "lr_params.txt")
    if state.nn_thetas is not None:
        for theta in state.nn_thetas:
            neural.save_network(theta, out / f"nn_params_ap{theta.ap_index}.txt")
    if state.mp_now is not None:
        np.savetxt(out / "mp_now.txt", state.mp_now, fmt="%.17g")
    if state.user_rss is not None:
        np.savetxt(out / "user_rss.txt", state.user_rss, fmt="%.17g")
    if state.rps is not None:
        np.savetxt(out / "rp_positions.txt", state.rps, fmt="%.17g")
    if state.tps is not None:
        np.savetxt(out / "tp_positions.txt", state.tps, fmt="%.17g")
    for label, arr in state.slices.items():
        np.savetxt(out / f"adaptive_{label}.txt", arr, fmt="%.17g")
    if report is not None:
        (out / "report.txt").write_text(report.as_text())
        for name, m in report.methods.items():
            positioning.save_estimates(m.records, out / f"estimates_{name}.txt")
        emit_plot_data(report, out)


def emit_plot_data(report: EvaluationReport, out_dir) -> list[Path]:
    """Write CDF curves, per-point RSS-error grids, and a summary table."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    path = out / "summary.txt"
    with open(path, "w") as fh:
        fh.write("# method mean_error_m median_error_m\n")
        for name in sorted(report.methods):
            m = report.methods[name]
            fh.write(f"{name} {m.mean_error:.17g} {m.median_error:.17g}\n")
    written.append(path)

    for name in sorted(report.methods):
        path = out / f"cdf_{name}.txt"
        with open(path, "w") as fh:
            fh.write("# error_m cumulative_probability\n")
            for err, p in report.methods[name].cdf():
                fh.write(f"{err:.17g} {p:.17g}\n")
        written.append(path)

    for label in sorted(report.rss_error_grids):
        path = out / f"rss_error_{label}.txt"
        grid = report.rss_error_grids[label]
        with open(path, "w") as fh:
            fh.write("# rp_index x y ap_index abs_error_db\n")
            for n in range(grid.shape[0]):
                x, y = report.rp_positions[n]
                for l in range(grid.shape[1]):
                    fh.write(f"{n} {x:.17g} {y:.17g} {l} {grid[n, l]:.17g}\n")
        written.append(path)
    return written


ABLATION_WEIGHTS = {
    "rss": (1.0, 0.0, 0.0),
    "ssp": (0.0, 1.0, 0.0),
    "delta": (0.0, 0.0, 1.0),
    "combined": (1 / 3, 1 / 3, 1 / 3),
}


def ablate_similarity(scenario: Scenario):
    """Re-cluster and re-evaluate with each similarity factor in isolation
    plus the combined weighting.  Returns label -> (report, cluster model)."""
    base = PipelineState(scenario=scenario)
    prepare_geometry(base)
    synthesize_offline(base)
    results = {}
    for label, w in ABLATION_WEIGHTS.items():
        sc = replace(scenario, similarity_weights=w, methods=("csle-nn",))
        state = PipelineState(
            scenario=sc,
            fmap=base.fmap,
            skeleton=base.skeleton,
            ssp=base.ssp,
            rps=base.rps,
            tps=base.tps,
            db=base.db,
        )
        cluster_points(state)
        train_models(state)
        online_phase(state)
        results[label] = (evaluate_methods(state), state.cm)
    return results


SWEEPABLE = ("k", "learning_rate", "gamma", "preference")


def sweep(scenario: Scenario, parameter: str, values) -> list[EvaluationReport]:
    """One report per swept value, sharing seeds and every stage upstream of
    the first one the parameter can influence."""
    if parameter not in SWEEPABLE:
        raise ValueError(f"parameter must be one of {SWEEPABLE}")
    reports = []
    base = PipelineState(scenario=scenario)
    prepare_geometry(base)
    synthesize_offline(base)
    if parameter == "k":
        cluster_points(base)
        train_models(base)
        online_phase(base)
        for v in values:
            reports.append(evaluate_methods(base, k=int(v)))
            reports[-1].seed = scenario.seed
        return reports
    for v in values:
        sc = replace(scenario, **{parameter: v})
        state = PipelineState(
            scenario=sc,
            fmap=base.fmap,
            skeleton=base.skeleton,
            ssp=base.ssp,
            rps=base.rps,
            tps=base.tps,
            db=base.db,
        )
        try:
            cluster_points(state)
            train_models(state)
            online_phase(state)
            reports.append(evaluate_methods(state))
        except PipelineError as exc:
            if not isinstance(exc.cause, DivergenceError):
                raise
            reports.append(
                EvaluationReport(seed=sc.seed, diverged=True, divergence_stage=exc.stage)
            )
    return reports
