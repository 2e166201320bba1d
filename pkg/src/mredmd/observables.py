"""Observable dictionaries: monomial bases with graded-lexicographic ordering
and the coordinate readout used to map lifted predictions back to states.
"""

from dataclasses import dataclass
from itertools import product
from math import comb

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class Dictionary:
    """Ordered set of monomial observables on R^dim.

    ``exponents[j]`` is the exponent vector alpha of the j-th observable
    ``x -> prod_i x_i**alpha_i``. The ordering is graded lexicographic
    (ascending total degree, then descending exponent tuple), which fixes
    matrix layouts and file output byte-for-byte.
    """

    dim: int
    exponents: tuple

    @property
    def size(self):
        return len(self.exponents)

    def __len__(self):
        return len(self.exponents)

    def evaluate(self, x):
        """Lift a single state: returns Phi(x), shape (size,)."""
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise ConfigurationError(
                f"state has shape {x.shape}, dictionary expects ({self.dim},)"
            )
        e = np.asarray(self.exponents)
        return np.prod(x[None, :] ** e, axis=1)

    def evaluate_columns(self, states):
        """Lift a column-stacked batch: (dim, K) -> (size, K)."""
        states = np.asarray(states, dtype=float)
        if states.ndim != 2 or states.shape[0] != self.dim:
            raise ConfigurationError(
                f"expected shape ({self.dim}, K), got {states.shape}"
            )
        e = np.asarray(self.exponents)
        return np.prod(states[None, :, :] ** e[:, :, None], axis=1)

    def coordinate_slot(self, i):
        """Index of the degree-1 monomial for coordinate ``i``, or None."""
        target = tuple(1 if j == i else 0 for j in range(self.dim))
        try:
            return self.exponents.index(target)
        except ValueError:
            return None

    def manifest(self):
        """Text description, one exponent vector per line."""
        return "\n".join(" ".join(str(a) for a in alpha) for alpha in self.exponents) + "\n"


def monomial_dictionary(n, degree, include_constant=True):
    """All monomials on R^n with total degree <= ``degree``, graded-lex order.

    Size is C(n + degree, degree) when the constant is included.
    """
    if n < 1:
        raise ConfigurationError(f"state dimension must be >= 1, got {n}")
    if degree < 0:
        raise ConfigurationError(f"degree must be >= 0, got {degree}")
    alphas = [
        alpha
        for alpha in product(range(degree + 1), repeat=n)
        if sum(alpha) <= degree and (include_constant or sum(alpha) > 0)
    ]
    alphas.sort(key=lambda a: (sum(a), tuple(-x for x in a)))
    d = Dictionary(dim=n, exponents=tuple(alphas))
    if include_constant:
        assert d.size == comb(n + degree, degree)
    return d


def coordinate_readout(dictionary):
    """Selector matrix C (n x N) with C @ Phi(x) = x exactly.

    Raises
    ------
    ConfigurationError
        If any coordinate function x_i is missing from the dictionary.
    """
    c = np.zeros((dictionary.dim, dictionary.size))
    for i in range(dictionary.dim):
        slot = dictionary.coordinate_slot(i)
        if slot is None:
            raise ConfigurationError(
                f"dictionary has no coordinate observable for component {i}; "
                "degree >= 1 is required for state readout"
            )
        c[i, slot] = 1.0
    return c
