"""ODE integration, the Lorenz benchmark system, and generation of
non-uniformly sampled trajectory ensembles.

Each state component i is sampled at instants ``r_i + l * T_i`` for
``l = 0..M_i`` (dead time ``r_i``, period ``T_i``, ``M_i + 1`` samples per
trajectory). Ensembles are integrated on a common micro-grid whose step
divides every dead time and period exactly, so sampled values are copies of
dense-trajectory values, never interpolations.
"""

import csv
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DataError, DivergenceError

#: Instants closer than this (seconds) are considered the same sample time.
TIME_MATCH_TOL = 1e-9

#: Finest allowed micro-grid relative to the smallest sampling period.
_MAX_GRID_REFINEMENT = 1000

#: Micro-step divides the base grid this many times (keeps RK4 error small
#: relative to the sampling resolution).
_STEPS_PER_GRID = 10


@dataclass(frozen=True)
class VectorField:
    """Autonomous vector field x -> dx/dt on R^dim.

    ``func`` must broadcast over leading axes: it maps arrays of shape
    (..., dim) to arrays of the same shape, which lets whole ensembles be
    integrated in one pass.
    """

    dim: int
    func: Callable[[np.ndarray], np.ndarray]

    def __call__(self, x):
        return self.func(x)


def lorenz_field():
    """The benchmark Lorenz-type system

    dx1 = 0.5 (x2 - x1)
    dx2 = x1 (0.75 - x3) - x2
    dx3 = x1 x2 - 2 x3
    """

    def f(x):
        x1, x2, x3 = x[..., 0], x[..., 1], x[..., 2]
        return np.stack(
            [0.5 * (x2 - x1), x1 * (0.75 - x3) - x2, x1 * x2 - 2.0 * x3],
            axis=-1,
        )

    return VectorField(dim=3, func=f)


def linear_field(a):
    """Linear system dx = A x (handy for oracles and sanity checks)."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigurationError(f"A must be square, got shape {a.shape}")
    return VectorField(dim=a.shape[0], func=lambda x: x @ a.T)


def _rk4_step(field, x, h):
    k1 = field(x)
    k2 = field(x + 0.5 * h * k1)
    k3 = field(x + 0.5 * h * k2)
    k4 = field(x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(field, x0, step, n_steps):
    """Classical 4th-order Runge-Kutta from t=0.

    Parameters
    ----------
    field : VectorField
    x0 : array_like
        Initial state, shape (dim,) or a batch (m, dim).
    step : float
        Micro-step h > 0.
    n_steps : int
        Number of steps; the result holds states at t = 0, h, ..., n_steps*h.

    Returns
    -------
    np.ndarray
        Shape (n_steps + 1,) + x0.shape.

    Raises
    ------
    DivergenceError
        If the state becomes non-finite, naming the offending step.
    """
    if step <= 0:
        raise ConfigurationError(f"step must be > 0, got {step}")
    if n_steps < 0:
        raise ConfigurationError(f"n_steps must be >= 0, got {n_steps}")
    x = np.asarray(x0, dtype=float)
    if x.shape[-1] != field.dim:
        raise ConfigurationError(
            f"x0 has dimension {x.shape[-1]}, field expects {field.dim}"
        )
    out = np.empty((n_steps + 1,) + x.shape)
    out[0] = x
    for j in range(1, n_steps + 1):
        x = _rk4_step(field, x, step)
        if not np.all(np.isfinite(x)):
            raise DivergenceError(
                f"trajectory diverged (non-finite state) at step {j}, t={j * step:.6g}"
            )
        out[j] = x
    return out


@dataclass(frozen=True)
class SamplingSchedule:
    """Per-component sampling pattern: samples at r_i + l*T_i, l = 0..count.

    ``count`` is the number of delay observables M_i; the schedule yields
    ``count + 1`` samples per trajectory.
    """

    component: int
    dead_time: float
    period: float
    count: int

    def __post_init__(self):
        if self.component < 0:
            raise ConfigurationError(f"component index must be >= 0, got {self.component}")
        if self.dead_time < 0:
            raise ConfigurationError(f"dead_time must be >= 0, got {self.dead_time}")
        if self.period <= 0:
            raise ConfigurationError(f"period must be > 0, got {self.period}")
        if self.count < 1:
            raise ConfigurationError(f"count must be >= 1, got {self.count}")

    def instants(self):
        """Sample times, shape (count + 1,)."""
        return self.dead_time + np.arange(self.count + 1) * self.period

    def sample_index(self, t, tol=TIME_MATCH_TOL):
        """Index l with |r + l*T - t| <= tol, or None if t is not a sample instant."""
        l = round((t - self.dead_time) / self.period)
        if 0 <= l <= self.count and abs(self.dead_time + l * self.period - t) <= tol:
            return int(l)
        return None


@dataclass
class ComponentSeries:
    """Timestamped samples of one state component along one trajectory."""

    component: int
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise DataError("times and values must be 1-D arrays of equal length")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise DataError("sample times must be strictly increasing")


@dataclass
class TrajectoryRecord:
    """One trajectory: sampled series per component plus optional dense truth.

    The dense grid exists for evaluation and baselines only; the estimation
    pipeline consumes nothing but the sampled series.
    """

    index: int
    x0: Optional[np.ndarray]
    series: dict = field(default_factory=dict)
    dense_times: Optional[np.ndarray] = None
    dense_states: Optional[np.ndarray] = None

    def dense_value_at(self, t, tol=TIME_MATCH_TOL):
        """Dense state at time t (exact grid match required)."""
        if self.dense_times is None:
            raise DataError(f"trajectory {self.index} has no dense ground-truth grid")
        idx = int(round(t / (self.dense_times[1] - self.dense_times[0])))
        if idx < 0 or idx >= len(self.dense_times) or abs(self.dense_times[idx] - t) > tol:
            raise DataError(
                f"time {t:.6g} is not on the dense grid of trajectory {self.index}"
            )
        return self.dense_states[idx]


def _as_fraction(t, what):
    frac = Fraction(t).limit_denominator(10**9)
    if abs(float(frac) - t) > 1e-12:
        raise ConfigurationError(
            f"{what} {t!r} is not representable on a rational grid to 1e-12"
        )
    return frac


def _fraction_gcd(a, b):
    return Fraction(
        math.gcd(a.numerator * b.denominator, b.numerator * a.denominator),
        a.denominator * b.denominator,
    )


def common_micro_step(schedules, extra_times=()):
    """Micro-step h (as an exact Fraction) dividing every dead time, period,
    and extra time, with h <= min(period) / 10.

    Raises
    ------
    ConfigurationError
        If no common step exists above 1/1000 of the smallest period.
    """
    times = [s.period for s in schedules]
    times += [s.dead_time for s in schedules if s.dead_time > 0]
    times += [t for t in extra_times if t > 0]
    if not times:
        raise ConfigurationError("no positive times to derive a micro-step from")
    fracs = [_as_fraction(t, "schedule time") for t in times]
    g = reduce(_fraction_gcd, fracs)
    min_period = min(s.period for s in schedules)
    if g < Fraction(_as_fraction(min_period, "period"), _MAX_GRID_REFINEMENT):
        raise ConfigurationError(
            "sampling times share no common micro-step above "
            f"{min_period / _MAX_GRID_REFINEMENT:.3g}s; align the schedule times"
        )
    return g / _STEPS_PER_GRID


def _trajectory_rng(seed, k):
    entropy = list(seed) if isinstance(seed, (tuple, list)) else [seed]
    return np.random.default_rng(np.random.SeedSequence(entropy + [k]))


def sample_ensemble(
    field,
    schedules,
    n_traj,
    init_box=None,
    seed=0,
    noise_std=0.0,
    extra_times=(),
    keep_dense=True,
):
    """Integrate an ensemble and sample each component on its own schedule.

    Initial conditions are drawn i.i.d. uniform on ``init_box`` from
    per-trajectory substreams keyed by (seed, trajectory index), so the
    ensemble is bit-identical for a fixed seed regardless of batching.

    Parameters
    ----------
    field : VectorField
    schedules : sequence of SamplingSchedule
        Exactly one schedule per state component.
    n_traj : int
        Number of trajectories K.
    init_box : array_like, optional
        Per-axis (low, high) bounds, shape (dim, 2). Defaults to [-1, 1]^dim.
    seed : int or sequence of int
        Base entropy for the per-trajectory substreams.
    noise_std : float
        Standard deviation of additive Gaussian measurement noise applied to
        the sampled values (0 leaves the exact dense values untouched).
    extra_times : sequence of float
        Additional instants the dense grid must contain (e.g. reconstruction
        targets); they join the micro-step derivation.
    keep_dense : bool
        Store the dense ground-truth grid on each record.

    Returns
    -------
    list of TrajectoryRecord
    """
    if n_traj < 1:
        raise ConfigurationError(f"n_traj must be >= 1, got {n_traj}")
    n = field.dim
    if sorted(s.component for s in schedules) != list(range(n)):
        raise ConfigurationError(
            "schedules must cover each state component exactly once"
        )
    if init_box is None:
        init_box = [(-1.0, 1.0)] * n
    box = np.asarray(init_box, dtype=float)
    if box.shape != (n, 2) or not np.all(box[:, 0] < box[:, 1]):
        raise ConfigurationError(
            f"init_box must be (dim, 2) with low < high, got {box!r}"
        )

    h_frac = common_micro_step(schedules, extra_times)
    h = float(h_frac)
    end = max(
        [s.dead_time + s.count * s.period for s in schedules] + [0.0, *extra_times]
    )
    n_steps = int(math.ceil(_as_fraction(end, "end time") / h_frac))

    # Per-component dense-grid indices, exact by construction.
    indices = {}
    for s in schedules:
        base = _as_fraction(s.dead_time, "dead_time") / h_frac
        stride = _as_fraction(s.period, "period") / h_frac
        if base.denominator != 1 or stride.denominator != 1:
            raise ConfigurationError(
                f"schedule for component {s.component} does not align with the micro-grid"
            )
        indices[s.component] = int(base) + int(stride) * np.arange(s.count + 1)

    rngs = [_trajectory_rng(seed, k) for k in range(n_traj)]
    x0s = np.stack([rng.uniform(box[:, 0], box[:, 1]) for rng in rngs])
    dense = integrate(field, x0s, h, n_steps)  # (n_steps+1, K, n)
    dense_times = np.arange(n_steps + 1) * h

    records = []
    for k in range(n_traj):
        series = {}
        for s in schedules:
            values = dense[indices[s.component], k, s.component]
            if noise_std > 0.0:
                values = values + rngs[k].normal(0.0, noise_std, size=values.shape)
            series[s.component] = ComponentSeries(
                component=s.component,
                times=s.instants(),
                values=values,
            )
        records.append(
            TrajectoryRecord(
                index=k,
                x0=x0s[k],
                series=series,
                dense_times=dense_times if keep_dense else None,
                dense_states=dense[:, k, :] if keep_dense else None,
            )
        )
    return records


def export_ensemble(records, directory):
    """Write one CSV per trajectory with columns ``component,time,value``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for rec in records:
        path = directory / f"trajectory_{rec.index:05d}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["component", "time", "value"])
            for comp in sorted(rec.series):
                s = rec.series[comp]
                for t, v in zip(s.times, s.values):
                    writer.writerow([comp, repr(float(t)), repr(float(v))])


def import_ensemble(directory):
    """Read an ensemble written by :func:`export_ensemble`.

    Imported records carry sampled series only (no initial condition or
    dense ground truth).
    """
    directory = Path(directory)
    paths = sorted(directory.glob("trajectory_*.csv"))
    if not paths:
        raise DataError(f"no trajectory CSV files found in {directory}")
    records = []
    for path in paths:
        match = re.fullmatch(r"trajectory_(\d+)\.csv", path.name)
        if match is None:
            continue
        index = int(match.group(1))
        per_comp = {}
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["component", "time", "value"]:
                raise DataError(f"{path}: unexpected header {header!r}")
            for row in reader:
                comp = int(row[0])
                per_comp.setdefault(comp, []).append((float(row[1]), float(row[2])))
        series = {
            comp: ComponentSeries(
                component=comp,
                times=np.array([t for t, _ in rows]),
                values=np.array([v for _, v in rows]),
            )
            for comp, rows in per_comp.items()
        }
        records.append(TrajectoryRecord(index=index, x0=None, series=series))
    return records
