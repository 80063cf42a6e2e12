"""Substitution words over finite alphabets and their letter statistics."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

#: Default cap on substitution levels; S^32(a) has 3,524,578 letters.
MAX_LEVEL = 32


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class Alphabet:
    letters: tuple[str, ...]

    def __post_init__(self):
        letters = tuple(self.letters)
        object.__setattr__(self, "letters", letters)
        if not letters:
            raise DomainError("alphabet must be non-empty")
        if len(set(letters)) != len(letters):
            raise DomainError(f"alphabet letters must be distinct: {letters}")

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __contains__(self, letter):
        return letter in self.letters

    def index(self, letter: str) -> int:
        try:
            return self.letters.index(letter)
        except ValueError:
            raise DomainError(f"letter {letter!r} is not in the alphabet {self.letters}") from None


def _split_word(text: str | Sequence[str], alphabet: Alphabet) -> list[str]:
    if isinstance(text, str):
        if all(len(a) == 1 for a in alphabet.letters):
            return list(text)
        return text.split()
    return list(text)


@dataclass(frozen=True)
class Word:
    """A finite word stored as an array of letter codes into ``alphabet``."""

    alphabet: Alphabet
    codes: np.ndarray
    level: int | None = None

    def __post_init__(self):
        codes = np.array(self.codes, dtype=np.int8 if len(self.alphabet) < 128 else np.int32)
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        if codes.ndim != 1:
            raise DomainError("word codes must be one-dimensional")
        if codes.size and (codes.min() < 0 or codes.max() >= len(self.alphabet)):
            raise DomainError("word contains symbols outside the alphabet")

    @classmethod
    def from_letters(cls, alphabet: Alphabet, letters, level=None) -> "Word":
        symbols = _split_word(letters, alphabet)
        return cls(alphabet, np.array([alphabet.index(s) for s in symbols], dtype=np.int64), level)

    def __len__(self):
        return int(self.codes.size)

    @property
    def symbols(self) -> tuple[str, ...]:
        letters = self.alphabet.letters
        return tuple(letters[c] for c in self.codes)

    def __str__(self):
        sep = "" if all(len(a) == 1 for a in self.alphabet.letters) else " "
        return sep.join(self.symbols)

    def __eq__(self, other):
        if not isinstance(other, Word):
            return NotImplemented
        return self.alphabet == other.alphabet and np.array_equal(self.codes, other.codes)

    def __hash__(self):
        return hash((self.alphabet, self.codes.tobytes()))

    def __add__(self, other: "Word") -> "Word":
        if self.alphabet != other.alphabet:
            raise DomainError("cannot concatenate words over different alphabets")
        return Word(self.alphabet, np.concatenate([self.codes, other.codes]))

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word(self.alphabet, self.codes[item])
        return self.alphabet.letters[self.codes[item]]

    def startswith(self, prefix: "Word") -> bool:
        return len(prefix) <= len(self) and np.array_equal(self.codes[: len(prefix)], prefix.codes)

    def counts(self) -> np.ndarray:
        return np.bincount(self.codes.astype(np.int64), minlength=len(self.alphabet))


@dataclass(frozen=True)
class Substitution:
    """A substitution rule ``letter -> non-empty word`` on ``alphabet``."""

    alphabet: Alphabet
    rules: Mapping[str, tuple[str, ...]]
    _images: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rules = {}
        for letter in self.alphabet:
            if letter not in self.rules:
                raise DomainError(f"no substitution rule for letter {letter!r}")
            image = tuple(_split_word(self.rules[letter], self.alphabet))
            if not image:
                raise DomainError(f"rule for {letter!r} has an empty image")
            for s in image:
                self.alphabet.index(s)
            rules[letter] = image
        extra = set(self.rules) - set(self.alphabet.letters)
        if extra:
            raise DomainError(f"rules given for letters outside the alphabet: {sorted(extra)}")
        object.__setattr__(self, "rules", rules)
        images = tuple(np.array([self.alphabet.index(s) for s in rules[a]]) for a in self.alphabet)
        object.__setattr__(self, "_images", images)

    @classmethod
    def from_strings(cls, rules: Mapping[str, str], letters=None) -> "Substitution":
        letters = tuple(letters) if letters is not None else tuple(rules)
        return cls(Alphabet(letters), dict(rules))

    def incidence_matrix(self) -> np.ndarray:
        """``M[i, j]`` = number of occurrences of letter i in the image of letter j."""
        k = len(self.alphabet)
        m = np.zeros((k, k), dtype=np.int64)
        for j, img in enumerate(self._images):
            m[:, j] = np.bincount(img, minlength=k)
        return m

    def apply(self, word: Word) -> Word:
        """One substitution step applied letter by letter."""
        codes = word.codes.astype(np.intp)
        lengths = np.array([len(img) for img in self._images])
        out_len = lengths[codes]
        starts = np.concatenate([[0], np.cumsum(out_len)[:-1]])
        out = np.empty(int(out_len.sum()), dtype=np.int64)
        width = lengths.max()
        table = np.full((len(self._images), width), -1, dtype=np.int64)
        for i, img in enumerate(self._images):
            table[i, : len(img)] = img
        for j in range(width):
            has = out_len > j
            out[starts[has] + j] = table[codes[has], j]
        return Word(self.alphabet, out)


def fibonacci_substitution() -> Substitution:
    """``a -> ab``, ``b -> a``."""
    return Substitution(Alphabet(("a", "b")), {"a": "ab", "b": "a"})


def iterate_substitution(sub: Substitution, seed: str, n: int, max_level: int = MAX_LEVEL) -> Word:
    """Return ``S^n(seed)``.

    Raises
    ------
    DomainError
        If ``seed`` is not a letter, ``n`` is negative or above ``max_level``.
    """
    if n < 0:
        raise DomainError(f"substitution level must be non-negative, got {n}")
    if n > max_level:
        raise DomainError(f"level {n} exceeds the configured cap {max_level}")
    word = Word(sub.alphabet, [sub.alphabet.index(seed)], level=0)
    for _ in range(n):
        word = sub.apply(word)
    return Word(sub.alphabet, word.codes, level=n)


@dataclass(frozen=True)
class WordStatistics:
    letter_frequencies: dict
    mean_length: float | None = None

    def __post_init__(self):
        total = sum(self.letter_frequencies.values())
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"letter frequencies sum to {total!r}, not 1")


def _mean_length(freqs, lengths):
    if lengths is None:
        return None
    return float(sum(lengths[a] * f for a, f in freqs.items()))


def letter_frequencies(sub: Substitution, seed: str, n: int, lengths: Mapping[str, float] | None = None,
                       exact: bool = False) -> WordStatistics:
    """Letter frequencies of ``S^n(seed)`` and, given ``lengths``, the mean length ``s``.

    With ``exact=True`` the frequencies come from the normalised Perron
    eigenvector of the incidence matrix instead of counting letters.
    """
    if exact:
        if not check_primitivity(sub):
            raise DomainError("exact frequencies need a primitive substitution")
        vals, vecs = np.linalg.eig(sub.incidence_matrix().astype(float))
        v = np.abs(np.real(vecs[:, np.argmax(np.real(vals))]))
        v = v / v.sum()
        freqs = dict(zip(sub.alphabet.letters, (float(x) for x in v)))
    else:
        word = iterate_substitution(sub, seed, n)
        counts = word.counts()
        freqs = {a: int(c) / len(word) for a, c in zip(sub.alphabet.letters, counts)}
    # renormalise so the sum is one to the last bit
    total = sum(freqs.values())
    freqs = {a: f / total for a, f in freqs.items()}
    return WordStatistics(freqs, _mean_length(freqs, lengths))


def check_primitivity(sub: Substitution) -> bool:
    """True iff some power ``k <= |A|^2`` of the incidence matrix is positive."""
    m = (sub.incidence_matrix() > 0).astype(np.int64)
    p = m.copy()
    for _ in range(len(sub.alphabet) ** 2):
        if (p > 0).all():
            return True
        p = ((p @ m) > 0).astype(np.int64)
    return False


def fibonacci_number(k: int) -> int:
    """``F_k`` with ``F_1 = F_2 = 1``."""
    a, b = 0, 1
    for _ in range(k):
        a, b = b, a + b
    return a
