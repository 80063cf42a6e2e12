"""Local potential pieces, models, and concatenated potentials over words."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .subshift import Alphabet, DomainError, Substitution, Word, fibonacci_substitution


class PointInteractionWarning(UserWarning):
    """A point interaction was evaluated pointwise; only the free background is returned."""


class PotentialPiece:
    """Base class of the local pieces ``f_a`` living on ``[0, length)``."""

    length: float

    def _check_length(self):
        if not (np.isfinite(self.length) and self.length > 0):
            raise DomainError(f"piece length must be positive, got {self.length!r}")

    def local_value(self, t):
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False


@dataclass(frozen=True)
class Constant(PotentialPiece):
    value: float
    length: float = 1.0

    def __post_init__(self):
        self._check_length()

    def local_value(self, t):
        return np.full(np.shape(t), float(self.value)) if np.ndim(t) else float(self.value)

    @property
    def is_zero(self):
        return self.value == 0


@dataclass(frozen=True)
class PointInteraction(PotentialPiece):
    """A delta of the given strength at the left end of a free interval."""

    strength: float
    length: float = 1.0

    def __post_init__(self):
        self._check_length()

    def local_value(self, t):
        warnings.warn("point interactions have no pointwise value; returning the free background",
                      PointInteractionWarning, stacklevel=3)
        return np.zeros(np.shape(t)) if np.ndim(t) else 0.0

    @property
    def is_zero(self):
        return self.strength == 0


@dataclass(frozen=True, eq=False)
class Sampled(PotentialPiece):
    """Potential sampled on a uniform grid ``0, h, ..., length``.

    Between samples the value of the left sample is used.
    """

    samples: np.ndarray
    length: float

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        self._check_length()
        if samples.ndim != 1 or samples.size < 2:
            raise DomainError("a sampled piece needs at least two samples")
        if not np.isfinite(samples).all():
            raise DomainError("samples must be finite")

    @classmethod
    def from_function(cls, func, length: float, count: int) -> "Sampled":
        return cls(func(np.linspace(0.0, length, count)), length)

    @property
    def step(self) -> float:
        return self.length / (self.samples.size - 1)

    @property
    def cell_values(self) -> np.ndarray:
        return self.samples[:-1]

    def local_value(self, t):
        idx = np.clip(np.floor(np.asarray(t) / self.step).astype(np.int64), 0, self.samples.size - 2)
        out = self.samples[idx]
        return out if np.ndim(t) else float(out)

    def __eq__(self, other):
        if not isinstance(other, Sampled):
            return NotImplemented
        return self.length == other.length and np.array_equal(self.samples, other.samples)

    def __hash__(self):
        return hash((self.length, self.samples.tobytes()))

    @property
    def is_zero(self):
        return not self.samples.any()


@dataclass(frozen=True)
class Model:
    """Alphabet, one potential piece per letter, and the generating substitution.

    The first two letters play the roles of ``a`` and ``b`` in the trace map.
    """

    pieces: Mapping[str, PotentialPiece]
    substitution: Substitution = field(default_factory=fibonacci_substitution)
    params: Mapping[str, float] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        missing = [a for a in self.alphabet if a not in self.pieces]
        if missing:
            raise DomainError(f"no potential piece for letters {missing}")
        extra = set(self.pieces) - set(self.alphabet.letters)
        if extra:
            raise DomainError(f"pieces given for letters outside the alphabet: {sorted(extra)}")
        object.__setattr__(self, "pieces", dict(self.pieces))
        object.__setattr__(self, "params", dict(self.params))

    @property
    def alphabet(self) -> Alphabet:
        return self.substitution.alphabet

    @property
    def lengths(self) -> dict:
        return {a: p.length for a, p in self.pieces.items()}

    @property
    def is_fibonacci(self) -> bool:
        letters = self.alphabet.letters
        if len(letters) != 2:
            return False
        a, b = letters
        return self.substitution.rules == {a: (a, b), b: (a,)}

    def designated(self) -> tuple[str, str]:
        """The letters playing ``a`` and ``b``; only defined for Fibonacci models."""
        if not self.is_fibonacci:
            raise DomainError("trace-map quantities need the Fibonacci substitution a->ab, b->a")
        return self.alphabet.letters[0], self.alphabet.letters[1]


def fibonacci_model(piece_a: PotentialPiece, piece_b: PotentialPiece, name="", **params) -> Model:
    return Model({"a": piece_a, "b": piece_b}, fibonacci_substitution(), params, name)


@dataclass(frozen=True)
class ConcatenatedPotential:
    """Cells of a word laid end to end, starting at the origin."""

    word: Word
    breakpoints: np.ndarray
    total_length: float

    def cell_of(self, x):
        return np.searchsorted(self.breakpoints, x, side="right") - 1


def concatenate(model: Model, word: Word) -> ConcatenatedPotential:
    if len(word) == 0:
        raise DomainError("cannot concatenate an empty word")
    if word.alphabet != model.alphabet:
        raise DomainError("word alphabet does not match the model")
    lengths = np.array([model.pieces[a].length for a in model.alphabet], dtype=float)
    cell = lengths[word.codes.astype(np.intp)]
    edges = np.concatenate([[0.0], np.cumsum(cell)])
    bp = edges[:-1]
    bp.setflags(write=False)
    return ConcatenatedPotential(word, bp, float(edges[-1]))


def evaluate(pot: ConcatenatedPotential, model: Model, x):
    """Value of the concatenated potential at ``x`` (scalar or array).

    Point interactions evaluate to the free background and emit
    :class:`PointInteractionWarning`.
    """
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(xa >= pot.total_length) or not np.isfinite(xa).all():
        raise DomainError(f"x must lie in [0, {pot.total_length})")
    cells = np.atleast_1d(pot.cell_of(xa))
    flat_x = np.atleast_1d(xa)
    out = np.empty(flat_x.shape)
    letters = model.alphabet.letters
    codes = pot.word.codes[cells]
    for q, letter in enumerate(letters):
        sel = codes == q
        if sel.any():
            out[sel] = model.pieces[letter].local_value(flat_x[sel] - pot.breakpoints[cells[sel]])
    return out.reshape(xa.shape) if xa.ndim else float(out[0])


def validate_model(model: Model) -> list[str]:
    """Heuristic checks for degenerate (periodic or reducible) models."""
    out = []
    pieces = model.pieces
    letters = model.alphabet.letters
    for i, a in enumerate(letters):
        for b in letters[i + 1:]:
            if pieces[a] == pieces[b]:
                out.append(f"letters indistinguishable: {a!r} and {b!r} carry identical pieces")
    if all(p.is_zero for p in pieces.values()):
        out.append("all pieces are zero: the potential is free and the model is periodic")
    elif all(isinstance(p, Constant) for p in pieces.values()) and len({p.value for p in pieces.values()}) == 1:
        out.append("all pieces share one constant value: the potential is constant")
    if len(letters) < 2:
        out.append("a one-letter alphabet only generates periodic potentials")
    return out
