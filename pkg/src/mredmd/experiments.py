"""End-to-end experiment pipelines and their file I/O.

``run_multirate`` and ``run_single_state`` generate a sampled ensemble,
reconstruct state pairs, fit the partial-measurement model next to an ideal
baseline (full measurements from the same trajectories' dense ground truth)
and, for the multirate mode, the naive baseline that only uses instants
where the whole state is visible (period lcm(p) * T_s). Reports materialize
as CSV/JSON files; identical config and seed reproduce identical bytes.
"""

import csv
import json
import math
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import edmd, hankel
from .dynamics import integrate, lorenz_field, sample_ensemble, SamplingSchedule
from .errors import ConfigurationError, DataError, MredmdError
from .linalg import cast_real, matrix_exp, spectrum_distance
from .observables import monomial_dictionary

SCHEMA_ID = "mredmd-report/1"

_EVAL_STREAM = 2**40 + 1
_NOISE_FLOOR_STREAM = 2**40 + 2

_SYSTEMS = {"lorenz": lorenz_field}

_CONFIG_FIELDS = {
    "system",
    "mode",
    "T_s",
    "K",
    "seed",
    "rates",
    "state_dim",
    "M",
    "init_box",
    "degree",
    "include_constant",
    "horizon",
    "eval_trajectories",
    "prediction_mode",
    "output_dir",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description (see README for the JSON schema)."""

    system: str
    mode: str
    T_s: float
    K: int
    seed: int = 0
    rates: Optional[tuple] = None
    state_dim: Optional[int] = None
    M: Optional[tuple] = None
    init_box: Optional[tuple] = None
    degree: int = 2
    include_constant: bool = True
    horizon: int = 50
    eval_trajectories: int = 10
    prediction_mode: str = "relift"
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.system not in _SYSTEMS:
            raise ConfigurationError(
                f"unknown system {self.system!r}; available: {sorted(_SYSTEMS)}"
            )
        if self.mode not in ("multirate", "single_state"):
            raise ConfigurationError(
                f"mode must be 'multirate' or 'single_state', got {self.mode!r}"
            )
        if self.T_s <= 0:
            raise ConfigurationError(f"T_s must be > 0, got {self.T_s}")
        for name in ("K", "horizon", "eval_trajectories"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.degree < 0:
            raise ConfigurationError(f"degree must be >= 0, got {self.degree}")
        if self.prediction_mode not in ("relift", "rollout"):
            raise ConfigurationError(
                f"prediction_mode must be 'relift' or 'rollout', got {self.prediction_mode!r}"
            )
        n = self.dimension
        if self.mode == "multirate":
            if self.rates is None:
                raise ConfigurationError("multirate mode requires 'rates'")
            object.__setattr__(self, "rates", tuple(int(p) for p in self.rates))
            if len(self.rates) != n:
                raise ConfigurationError(
                    f"rates has {len(self.rates)} entries, system dimension is {n}"
                )
            if any(p < 1 for p in self.rates):
                raise ConfigurationError(f"rates must be positive integers, got {self.rates}")
        else:
            if self.state_dim is None:
                raise ConfigurationError("single_state mode requires 'state_dim'")
            if self.state_dim != n:
                raise ConfigurationError(
                    f"state_dim {self.state_dim} does not match system dimension {n}"
                )
        if self.M is not None:
            object.__setattr__(self, "M", tuple(int(m) for m in self.M))
            if len(self.M) != n or any(m < 1 for m in self.M):
                raise ConfigurationError(
                    f"M must be {n} integers >= 1, got {self.M}"
                )
        if self.init_box is not None:
            box = tuple(tuple(float(v) for v in pair) for pair in self.init_box)
            object.__setattr__(self, "init_box", box)
            if len(box) != n or any(len(p) != 2 or p[0] >= p[1] for p in box):
                raise ConfigurationError(
                    f"init_box must be {n} (low, high) pairs with low < high"
                )

    @property
    def dimension(self):
        return _SYSTEMS[self.system]().dim

    @classmethod
    def from_dict(cls, data):
        unknown = set(data) - _CONFIG_FIELDS
        if unknown:
            raise ConfigurationError(f"unknown config fields: {sorted(unknown)}")
        missing = {"system", "mode", "T_s", "K"} - set(data)
        if missing:
            raise ConfigurationError(f"missing config fields: {sorted(missing)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path):
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self):
        return {
            "system": self.system,
            "mode": self.mode,
            "T_s": self.T_s,
            "K": self.K,
            "seed": self.seed,
            "rates": list(self.rates) if self.rates is not None else None,
            "state_dim": self.state_dim,
            "M": list(self.M) if self.M is not None else None,
            "init_box": [list(p) for p in self.init_box] if self.init_box is not None else None,
            "degree": self.degree,
            "include_constant": self.include_constant,
            "horizon": self.horizon,
            "eval_trajectories": self.eval_trajectories,
            "prediction_mode": self.prediction_mode,
            "output_dir": self.output_dir,
        }


def system_field(name):
    try:
        return _SYSTEMS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown system {name!r}") from None


def _config_echo(cfg):
    """Config as stored in reports: the output location is not an
    experiment parameter, so reports stay byte-identical across locations."""
    echo = cfg.to_dict()
    echo.pop("output_dir")
    return echo


def lcm_of_rates(rates):
    """Least common multiple of the per-component rate multipliers."""
    rates = list(rates)
    if not rates:
        raise ConfigurationError("rates must be nonempty")
    if any(int(p) != p or p < 1 for p in rates):
        raise ConfigurationError(f"rates must be positive integers, got {rates}")
    return math.lcm(*(int(p) for p in rates))


def derive_schedules(cfg):
    """Sampling schedules for the configured mode.

    Multirate: r_i = 0 and T_i = p_i * T_s; the default M_i covers the full
    lcm window (M_i = lcm(p)/p_i) and at least 2 T_s. Single-state: component
    i (0-based) has dead time (i+1) * T_s and period n * T_s; the default
    M_i = 2 gives three measurements per component.
    """
    n = cfg.dimension
    if cfg.mode == "multirate":
        m_lcm = lcm_of_rates(cfg.rates)
        schedules = []
        for i, p in enumerate(cfg.rates):
            if cfg.M is not None:
                count = cfg.M[i]
            else:
                count = max(m_lcm // p, math.ceil(2 / p))
            schedules.append(
                SamplingSchedule(component=i, dead_time=0.0, period=p * cfg.T_s, count=count)
            )
        return schedules
    schedules = []
    for i in range(n):
        count = cfg.M[i] if cfg.M is not None else 2
        schedules.append(
            SamplingSchedule(
                component=i,
                dead_time=(i + 1) * cfg.T_s,
                period=n * cfg.T_s,
                count=count,
            )
        )
    return schedules


@dataclass
class ExperimentReport:
    """Everything a pipeline run produced, ready for :func:`emit_report`."""

    schema: str
    mode: str
    seed: int
    config: dict
    methods: list
    spectra: dict = field(default_factory=dict)
    distances: dict = field(default_factory=dict)
    rmse: dict = field(default_factory=dict)
    mean_rmse: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    component_residuals: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    models: dict = field(default_factory=dict)
    component_operators: dict = field(default_factory=dict)
    dictionary: Optional[object] = None
    eval_times: Optional[np.ndarray] = None
    eval_truth: Optional[np.ndarray] = None
    predictions: dict = field(default_factory=dict)


@contextmanager
def _stage(report, name):
    """Collect warnings under a stage label; record pipeline errors."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            yield
        except (MredmdError, np.linalg.LinAlgError) as exc:
            report.errors.append({"stage": name, "message": str(exc)})
    for w in caught:
        report.warnings.append(
            {"stage": name, "category": w.category.__name__, "message": str(w.message)}
        )


def _pairs_from_dense(records, t1, step):
    """Ideal pairs (x(t1), x(t1 + step)) read off the dense ground truth."""
    x = np.stack([rec.dense_value_at(t1) for rec in records], axis=1)
    y = np.stack([rec.dense_value_at(t1 + step) for rec in records], axis=1)
    return edmd.StatePairEnsemble(x=x, y=y, step=step)


def _lcm_step_model(raw, step):
    """Re-express a coarse-step model at step ``step`` via its generator."""
    k_step_complex = matrix_exp(raw.l_complex * step)
    k_step, residual = cast_real(k_step_complex, tol=1e-6)
    model = edmd.KoopmanModel(
        dictionary=raw.dictionary,
        k_mat=k_step,
        l_mat=raw.l_mat,
        imag_residual=raw.imag_residual,
        step=step,
        readout=raw.readout,
        l_complex=raw.l_complex,
    )
    return model, residual


def _eval_initial_conditions(cfg, n):
    box = np.asarray(cfg.init_box if cfg.init_box is not None else [(-1.0, 1.0)] * n)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, _EVAL_STREAM]))
    return rng.uniform(box[:, 0], box[:, 1], size=(cfg.eval_trajectories, n))


def evaluate_prediction(models, fld, x0s, horizon, step, mode="rollout", substeps=10):
    """Per-trajectory RMSE of each model's prediction against RK4 ground truth.

    Returns ``(times, truth, predictions, rmse)`` where ``truth`` has shape
    (n_eval, horizon, n), ``predictions[name]`` matches it, and
    ``rmse[name]`` is a list of per-trajectory values (RMSE over the finite
    prefix when a rollout diverges).
    """
    if horizon < 1:
        raise ConfigurationError(f"horizon must be >= 1, got {horizon}")
    x0s = np.atleast_2d(np.asarray(x0s, dtype=float))
    dense = integrate(fld, x0s, step / substeps, horizon * substeps)
    truth = np.moveaxis(dense[substeps::substeps], 0, 1)  # (n_eval, horizon, n)
    times = np.arange(1, horizon + 1) * step
    predictions = {}
    rmse = {}
    for name, model in models.items():
        preds = np.stack([edmd.predict(model, x0, horizon, mode=mode) for x0 in x0s])
        per_traj = []
        for k in range(preds.shape[0]):
            finite = np.all(np.isfinite(preds[k]), axis=1)
            prefix = int(np.argmax(~finite)) if not finite.all() else horizon
            if prefix == 0:
                per_traj.append(float("inf"))
            else:
                err = preds[k, :prefix] - truth[k, :prefix]
                per_traj.append(float(np.sqrt(np.mean(err**2))))
        predictions[name] = preds
        rmse[name] = per_traj
    return times, truth, predictions, rmse


def _finish_report(report, cfg, fld):
    """Spectra, distances to the ideal model, and prediction evaluation."""
    with _stage(report, "spectra"):
        for name, model in report.models.items():
            report.spectra[name] = edmd.generator_spectrum(model)
            report.residuals[name] = model.imag_residual
        if "ideal" in report.spectra:
            for name in report.methods:
                if name in report.spectra:
                    report.distances[name] = spectrum_distance(
                        report.spectra[name], report.spectra["ideal"]
                    )
    with _stage(report, "evaluate"):
        if report.models:
            x0s = _eval_initial_conditions(cfg, fld.dim)
            times, truth, predictions, rmse = evaluate_prediction(
                report.models, fld, x0s, cfg.horizon, cfg.T_s, mode=cfg.prediction_mode
            )
            report.eval_times = times
            report.eval_truth = truth
            report.predictions = predictions
            report.rmse = rmse
            report.mean_rmse = {
                name: float(np.mean(vals)) for name, vals in rmse.items()
            }
    return report


def run_multirate(cfg):
    """Multirate pipeline: reconstruct at (T_s, 2 T_s), fit the multirate
    model, the ideal baseline, and the lcm baseline; evaluate all three.

    Stage failures are recorded in the report (with the stage name) rather
    than raised, so a partial report can still be written.
    """
    if cfg.mode != "multirate":
        raise ConfigurationError(f"config mode is {cfg.mode!r}, expected 'multirate'")
    fld = system_field(cfg.system)
    report = ExperimentReport(
        schema=SCHEMA_ID,
        mode=cfg.mode,
        seed=cfg.seed,
        config=_config_echo(cfg),
        methods=["multirate", "lcm", "ideal"],
    )
    t_s = cfg.T_s
    m_lcm = lcm_of_rates(cfg.rates)
    schedules = derive_schedules(cfg)
    dictionary = monomial_dictionary(fld.dim, cfg.degree, cfg.include_constant)
    report.dictionary = dictionary

    records = None
    with _stage(report, "sample"):
        records = sample_ensemble(
            fld,
            schedules,
            cfg.K,
            init_box=cfg.init_box,
            seed=cfg.seed,
            extra_times=(t_s, 2 * t_s, m_lcm * t_s),
        )
    if records is None:
        return report

    with _stage(report, "reconstruct"):
        needed = hankel.estimated_components(schedules, (t_s, 2 * t_s))
        operators = hankel.fit_component_operators(records, schedules, needed)
        report.component_operators = operators
        report.component_residuals = {
            i: op.imag_residual for i, (_, op) in operators.items()
        }
        pairs = hankel.reconstruct_states(records, schedules, t_s, operators=operators)
        report.models["multirate"] = edmd.fit_model(pairs, dictionary)

    with _stage(report, "fit_lcm"):
        lcm_pairs = hankel.reconstruct_states(
            records, schedules, m_lcm * t_s, first_target=0.0
        )
        if any(lcm_pairs.x_estimated) or any(lcm_pairs.y_estimated):
            raise DataError(
                "lcm baseline needs the full state measured at t=0 and "
                f"t={m_lcm * t_s:.6g}; increase the per-component sample counts"
            )
        raw = edmd.fit_model(lcm_pairs, dictionary)
        report.models["lcm"], step_residual = _lcm_step_model(raw, t_s)
        report.residuals["lcm_step"] = step_residual

    with _stage(report, "fit_ideal"):
        report.models["ideal"] = edmd.fit_model(
            _pairs_from_dense(records, t_s, t_s), dictionary
        )

    return _finish_report(report, cfg, fld)


def run_single_state(cfg):
    """Single-state pipeline: one component measured per instant; reconstruct
    at (n T_s, (n+1) T_s), fit the model and the ideal baseline."""
    if cfg.mode != "single_state":
        raise ConfigurationError(f"config mode is {cfg.mode!r}, expected 'single_state'")
    fld = system_field(cfg.system)
    report = ExperimentReport(
        schema=SCHEMA_ID,
        mode=cfg.mode,
        seed=cfg.seed,
        config=_config_echo(cfg),
        methods=["single_state", "ideal"],
    )
    n = fld.dim
    t_s = cfg.T_s
    first_target = n * t_s
    schedules = derive_schedules(cfg)
    dictionary = monomial_dictionary(n, cfg.degree, cfg.include_constant)
    report.dictionary = dictionary

    records = None
    with _stage(report, "sample"):
        records = sample_ensemble(
            fld,
            schedules,
            cfg.K,
            init_box=cfg.init_box,
            seed=cfg.seed,
            extra_times=(t_s, 2 * t_s, first_target, first_target + t_s),
        )
    if records is None:
        return report

    with _stage(report, "reconstruct"):
        needed = hankel.estimated_components(
            schedules, (first_target, first_target + t_s)
        )
        operators = hankel.fit_component_operators(records, schedules, needed)
        report.component_operators = operators
        report.component_residuals = {
            i: op.imag_residual for i, (_, op) in operators.items()
        }
        pairs = hankel.reconstruct_states(
            records, schedules, t_s, first_target=first_target, operators=operators
        )
        report.models["single_state"] = edmd.fit_model(pairs, dictionary)

    with _stage(report, "fit_ideal"):
        report.models["ideal"] = edmd.fit_model(
            _pairs_from_dense(records, t_s, t_s), dictionary
        )

    return _finish_report(report, cfg, fld)


def run(cfg):
    """Dispatch on the configured mode."""
    if cfg.mode == "multirate":
        return run_multirate(cfg)
    return run_single_state(cfg)


def ideal_noise_floor(cfg):
    """Spectrum distance between two ideal models fit on disjoint ensembles.

    Both ensembles use K trajectories drawn from substreams disjoint from
    the run's own; the distance quantifies pure sampling variation and
    serves as a reference scale for partial-measurement spectra.
    """
    fld = system_field(cfg.system)
    schedules = derive_schedules(cfg)
    dictionary = monomial_dictionary(fld.dim, cfg.degree, cfg.include_constant)
    spectra = []
    for half in (1, 2):
        records = sample_ensemble(
            fld,
            schedules,
            cfg.K,
            init_box=cfg.init_box,
            seed=(cfg.seed, _NOISE_FLOOR_STREAM, half),
            extra_times=(cfg.T_s, 2 * cfg.T_s),
        )
        model = edmd.fit_model(_pairs_from_dense(records, cfg.T_s, cfg.T_s), dictionary)
        spectra.append(edmd.generator_spectrum(model))
    return spectrum_distance(spectra[0], spectra[1])


def run_sweep(cfg, seeds):
    """Run the configured pipeline across seeds and tabulate comparisons.

    Returns a dict with one row per seed (spectrum distances and mean RMSE
    per method) plus win counts of the partial-measurement method against
    its baseline (lcm for multirate, ideal for single-state).
    """
    primary = "multirate" if cfg.mode == "multirate" else "single_state"
    baseline = "lcm" if cfg.mode == "multirate" else "ideal"
    rows = []
    spectrum_wins = 0
    rmse_wins = 0
    scored = 0
    for seed in seeds:
        report = run(replace(cfg, seed=int(seed)))
        row = {
            "seed": int(seed),
            "spectrum_distances": dict(report.distances),
            "mean_rmse": dict(report.mean_rmse),
            "n_errors": len(report.errors),
        }
        rows.append(row)
        if primary in report.distances and baseline in report.distances and (
            primary in report.mean_rmse and baseline in report.mean_rmse
        ):
            scored += 1
            if cfg.mode == "multirate":
                spectrum_wins += report.distances[primary] < report.distances[baseline]
                rmse_wins += report.mean_rmse[primary] < report.mean_rmse[baseline]
            else:
                spectrum_wins += report.distances[primary] <= 3.0 * max(
                    ideal_noise_floor(replace(cfg, seed=int(seed))), 0.0
                )
                rmse_wins += report.mean_rmse[primary] <= 3.0 * report.mean_rmse[baseline]
    return {
        "schema": SCHEMA_ID,
        "mode": cfg.mode,
        "seeds": [int(s) for s in seeds],
        "primary_method": primary,
        "baseline_method": baseline,
        "spectrum_wins": int(spectrum_wins),
        "rmse_wins": int(rmse_wins),
        "seeds_scored": int(scored),
        "rows": rows,
    }


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x):
    return repr(float(x))


def emit_report(report, directory):
    """Write the report files; byte-identical for identical runs.

    Files: ``spectrum.csv`` (method,index,real,imag), ``prediction.csv``
    (method,trajectory,t,component,truth,predicted), ``summary.json``,
    ``dictionary.txt``, per-method K/L matrices, and per-component Hankel
    operator dumps.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    rows = []
    for method in report.methods:
        if method in report.spectra:
            for idx, lam in enumerate(report.spectra[method]):
                rows.append([method, idx, _fmt(lam.real), _fmt(lam.imag)])
    _write_rows(directory / "spectrum.csv", ["method", "index", "real", "imag"], rows)

    rows = []
    if report.eval_times is not None:
        for method in report.methods:
            if method not in report.predictions:
                continue
            preds = report.predictions[method]
            for k in range(preds.shape[0]):
                for j, t in enumerate(report.eval_times):
                    for comp in range(preds.shape[2]):
                        rows.append(
                            [
                                method,
                                k,
                                _fmt(t),
                                comp,
                                _fmt(report.eval_truth[k, j, comp]),
                                _fmt(preds[k, j, comp]),
                            ]
                        )
    _write_rows(
        directory / "prediction.csv",
        ["method", "trajectory", "t", "component", "truth", "predicted"],
        rows,
    )

    summary = {
        "schema": report.schema,
        "mode": report.mode,
        "seed": report.seed,
        "config": report.config,
        "methods": report.methods,
        "spectrum_distances": report.distances,
        "mean_rmse": report.mean_rmse,
        "rmse_per_trajectory": report.rmse,
        "residuals": report.residuals,
        "component_residuals": {str(k): v for k, v in sorted(report.component_residuals.items())},
        "warnings": report.warnings,
        "errors": report.errors,
    }
    (directory / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )

    if report.dictionary is not None:
        (directory / "dictionary.txt").write_text(report.dictionary.manifest())

    for method in report.methods:
        if method in report.models:
            edmd.save_model(report.models[method], directory, method)
    rows = []
    for comp, (_, op) in sorted(report.component_operators.items()):
        edmd.write_matrix_csv(directory / f"hankel_K_{comp}.csv", op.k_mat)
        edmd.write_matrix_csv(directory / f"hankel_L_{comp}.csv", op.l_mat)
        rows.append([comp, _fmt(op.imag_residual)])
    _write_rows(
        directory / "hankel_residuals.csv", ["component", "imag_residual"], rows
    )
    return directory


def emit_comparison(result, directory):
    """Write the seed-sweep summary: ``compare.csv`` and ``compare.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    rows = []
    for row in result["rows"]:
        for method in sorted(set(row["spectrum_distances"]) | set(row["mean_rmse"])):
            rows.append(
                [
                    row["seed"],
                    method,
                    _fmt(row["spectrum_distances"].get(method, float("nan"))),
                    _fmt(row["mean_rmse"].get(method, float("nan"))),
                ]
            )
    _write_rows(
        directory / "compare.csv",
        ["seed", "method", "spectrum_distance_to_ideal", "mean_rmse"],
        rows,
    )
    (directory / "compare.json").write_text(
        json.dumps(result, indent=2, sort_keys=True) + "\n"
    )
    return directory
