"""EDMD on state pairs: least-squares Koopman matrix fit, generator
extraction via the principal logarithm, spectra, and lifted-space prediction.
"""

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import linalg
from .errors import ConfigurationError, DivergenceWarning, RankDeficiencyWarning
from .observables import Dictionary, coordinate_readout


@dataclass
class StatePairEnsemble:
    """K state pairs (x, y) with y the state one step T_s after x.

    ``x`` and ``y`` are column-stacked, shape (n, K). Provenance flags record
    per component whether the value was measured or estimated.
    """

    x: np.ndarray
    y: np.ndarray
    step: float
    x_estimated: tuple = ()
    y_estimated: tuple = ()

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 2 or self.x.shape != self.y.shape:
            raise ConfigurationError(
                f"x and y must be matching (n, K) arrays, got {self.x.shape} and {self.y.shape}"
            )
        if self.x.shape[1] < 1:
            raise ConfigurationError("ensemble needs at least one pair")
        if self.step <= 0:
            raise ConfigurationError(f"step must be > 0, got {self.step}")
        n = self.x.shape[0]
        if not self.x_estimated:
            self.x_estimated = (False,) * n
        if not self.y_estimated:
            self.y_estimated = (False,) * n

    @property
    def n_pairs(self):
        return self.x.shape[1]


@dataclass
class KoopmanModel:
    """Finite Koopman approximation on a monomial dictionary.

    ``k_mat`` advances lifted vectors by one step of length ``step``;
    ``l_mat`` is the real-cast generator with ``imag_residual`` recording the
    largest imaginary part discarded by the cast. ``l_complex`` keeps the
    uncast principal logarithm for time interpolation.
    """

    dictionary: Dictionary
    k_mat: np.ndarray
    l_mat: np.ndarray
    imag_residual: float
    step: float
    readout: Optional[np.ndarray]
    l_complex: Optional[np.ndarray] = None


def build_edmd_matrices(ensemble, dictionary):
    """Lift an ensemble into data matrices (P_x, P_y), each (N, K)."""
    p_x = dictionary.evaluate_columns(ensemble.x)
    p_y = dictionary.evaluate_columns(ensemble.y)
    if ensemble.n_pairs < dictionary.size:
        warnings.warn(
            f"only {ensemble.n_pairs} pairs for a dictionary of size "
            f"{dictionary.size}; the fit is underdetermined",
            RankDeficiencyWarning,
            stacklevel=2,
        )
    return p_x, p_y


def fit_koopman(p_x, p_y, step, dictionary, rel_tol=None):
    """Least-squares Koopman fit K = P_y pinv(P_x) plus generator L = log(K)/step.

    The generator is computed in complex arithmetic and cast to real; the
    discarded imaginary residual is stored on the model (a warning is
    emitted when it exceeds 1e-6).

    Raises
    ------
    SingularMatrixError
        If the fitted K is singular so no generator exists.
    """
    p_x = np.asarray(p_x, dtype=float)
    p_y = np.asarray(p_y, dtype=float)
    if p_x.shape != p_y.shape:
        raise ConfigurationError(
            f"P_x and P_y must have equal shape, got {p_x.shape} and {p_y.shape}"
        )
    if step <= 0:
        raise ConfigurationError(f"step must be > 0, got {step}")
    k_mat = p_y @ linalg.pinv(p_x, rel_tol)
    l_complex = linalg.matrix_log(k_mat) / step
    l_mat, residual = linalg.cast_real(l_complex, tol=1e-6)
    try:
        readout = coordinate_readout(dictionary)
    except ConfigurationError:
        readout = None
    return KoopmanModel(
        dictionary=dictionary,
        k_mat=k_mat,
        l_mat=l_mat,
        imag_residual=residual,
        step=step,
        readout=readout,
        l_complex=l_complex,
    )


def fit_model(ensemble, dictionary, rel_tol=None):
    """Convenience wrapper: lift an ensemble and fit the Koopman model."""
    p_x, p_y = build_edmd_matrices(ensemble, dictionary)
    return fit_koopman(p_x, p_y, ensemble.step, dictionary, rel_tol)


def predict(model, x0, steps, mode="rollout"):
    """Predict states at t = step, 2*step, ..., steps*step.

    ``rollout`` iterates z <- K z in lifted space and reads coordinates out
    through the selector matrix; ``relift`` re-lifts the read-out state at
    every step instead.

    If the rollout becomes non-finite the remaining rows are NaN and a
    :class:`DivergenceWarning` is emitted.

    Returns
    -------
    np.ndarray
        Shape (steps, n).
    """
    if model.readout is None:
        raise ConfigurationError(
            "model dictionary has no coordinate observables; cannot read out states"
        )
    if steps < 1:
        raise ConfigurationError(f"steps must be >= 1, got {steps}")
    if mode not in ("rollout", "relift"):
        raise ConfigurationError(f"unknown prediction mode {mode!r}")
    x0 = np.asarray(x0, dtype=float)
    n = model.dictionary.dim
    out = np.full((steps, n), np.nan)
    z = model.dictionary.evaluate(x0)
    for j in range(steps):
        z = model.k_mat @ z
        x = model.readout @ z
        if not np.all(np.isfinite(x)):
            warnings.warn(
                f"prediction diverged at step {j + 1} of {steps}; output truncated",
                DivergenceWarning,
                stacklevel=2,
            )
            break
        out[j] = x
        if mode == "relift":
            z = model.dictionary.evaluate(x)
    return out


def generator_spectrum(model):
    """Eigenvalues of the real-cast generator matrix."""
    return linalg.eigenvalues(model.l_mat)


def write_matrix_csv(path, matrix):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(matrix):
            writer.writerow([repr(float(v)) for v in row])


def save_model(model, directory, name):
    """Serialize a model: K/L matrices as CSV plus a text manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(directory / f"K_{name}.csv", model.k_mat)
    write_matrix_csv(directory / f"L_{name}.csv", model.l_mat)
    manifest = [
        f"step: {model.step!r}",
        f"imag_residual: {model.imag_residual!r}",
        "dictionary:",
        model.dictionary.manifest().rstrip("\n"),
    ]
    (directory / f"model_{name}.txt").write_text("\n".join(manifest) + "\n")
