"""Lyapunov exponents along Fibonacci approximants."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potential import Model
from .subshift import DomainError, iterate_substitution, letter_frequencies
from .transfer import approximant_matrices, log_spectral_norm, word_matrices

#: Highest approximant level accepted by :func:`lyapunov_estimate`.
MAX_LYAPUNOV_LEVEL = 30


@dataclass(frozen=True)
class LyapunovEstimate:
    """Level-``n`` exponent at one energy.

    ``L_disc`` is per symbol, ``L = L_disc / s`` per unit length and
    ``residual`` is the change of ``L_disc`` from level ``n - 1``.
    """

    E: float
    L_disc: float
    s: float
    L: float
    n_used: int
    residual: float

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError(f"mean length must be positive, got {self.s!r}")


def _log_norm(model, E, n):
    m, lg = approximant_matrices(model, E, n)
    return log_spectral_norm(m) + lg


def _per_symbol(model, E, n):
    a, _ = model.designated()
    length = len(iterate_substitution(model.substitution, a, n)) if n >= 0 else 1
    return np.maximum(_log_norm(model, E, n), 0.0) / length


def lyapunov_estimates(model: Model, E, n: int) -> list[LyapunovEstimate]:
    """Batched :func:`lyapunov_estimate` over an array of energies."""
    if not 1 <= n <= MAX_LYAPUNOV_LEVEL:
        raise DomainError(f"level must be in [1, {MAX_LYAPUNOV_LEVEL}], got {n}")
    a, _ = model.designated()
    E = np.atleast_1d(np.asarray(E, dtype=float))
    s = letter_frequencies(model.substitution, a, n, lengths=model.lengths).mean_length
    cur = _per_symbol(model, E, n)
    prev = _per_symbol(model, E, n - 1)
    return [LyapunovEstimate(float(e), float(l), s, float(l) / s, n, float(l - p))
            for e, l, p in zip(E, cur, prev)]


def lyapunov_estimate(model: Model, E: float, n: int) -> LyapunovEstimate:
    """Exponent from ``log ||M_n(E)|| / |S^n(a)|`` with ``M_n`` the approximant matrix.

    Products are carried with a separate log scale, so no level overflows.
    """
    return lyapunov_estimates(model, [E], n)[0]


@dataclass(frozen=True)
class UniformityProbe:
    offsets: np.ndarray
    exponents: np.ndarray

    @property
    def spread(self) -> float:
        return float(self.exponents.max() - self.exponents.min())

    @property
    def mean(self) -> float:
        return float(self.exponents.mean())


def uniformity_probe(model: Model, E: float, n: int, shifts: int = 8) -> UniformityProbe:
    """Per-symbol exponents over windows of length ``|S^n(a)|`` shifted along ``S^{n+3}(a)``."""
    if shifts < 2:
        raise DomainError("need at least two shifts")
    a, _ = model.designated()
    long_word = iterate_substitution(model.substitution, a, n + 3)
    width = len(iterate_substitution(model.substitution, a, n))
    offsets = np.linspace(0, len(long_word) - width, shifts).round().astype(int)
    out = np.empty(shifts)
    for k, off in enumerate(offsets):
        m, lg = word_matrices(model, long_word[off:off + width], float(E))
        out[k] = max(float(log_spectral_norm(m) + lg), 0.0) / width
    return UniformityProbe(offsets, out)

