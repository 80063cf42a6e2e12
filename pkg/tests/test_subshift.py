import numpy as np
import pytest
from hypothesis import given, strategies as st

from aperiodic_spectrum.subshift import (Alphabet, DomainError, Substitution, Word, check_primitivity,
                                         fibonacci_number, fibonacci_substitution, iterate_substitution,
                                         letter_frequencies)

FIB = fibonacci_substitution()


@pytest.mark.parametrize("n,expected", [(0, "a"), (1, "ab"), (2, "aba"), (3, "abaab"), (4, "abaababa")])
def test_small_iterates(n, expected):
    w = iterate_substitution(FIB, "a", n)
    assert str(w) == expected
    assert w.level == n


def test_level_ten_length():
    assert len(iterate_substitution(FIB, "a", 10)) == 144


@pytest.mark.parametrize("n", range(0, 25))
def test_lengths_are_fibonacci(n):
    assert len(iterate_substitution(FIB, "a", n)) == fibonacci_number(n + 2)


@pytest.mark.parametrize("n", range(1, 21))
def test_concatenation_identity(n):
    w_next = iterate_substitution(FIB, "a", n + 1)
    w = iterate_substitution(FIB, "a", n)
    w_prev = iterate_substitution(FIB, "a", n - 1)
    assert np.array_equal(w_next.codes, np.concatenate([w.codes, w_prev.codes]))
    assert w_next == w + w_prev


@pytest.mark.parametrize("n", range(2, 9))
def test_square_prefix(n):
    w = iterate_substitution(FIB, "a", n)
    long = iterate_substitution(FIB, "a", n + 6)
    assert long.startswith(w + w)


def test_errors():
    with pytest.raises(DomainError):
        iterate_substitution(FIB, "c", 2)
    with pytest.raises(DomainError):
        iterate_substitution(FIB, "a", -1)
    with pytest.raises(DomainError):
        iterate_substitution(FIB, "a", 33)
    with pytest.raises(DomainError):
        Alphabet(("a", "a"))
    with pytest.raises(DomainError):
        Substitution(Alphabet(("a", "b")), {"a": "ab"})
    with pytest.raises(DomainError):
        Substitution(Alphabet(("a", "b")), {"a": "ab", "b": ""})
    with pytest.raises(DomainError):
        Word.from_letters(Alphabet(("a", "b")), "abc")


def test_frequencies_examples():
    s = letter_frequencies(FIB, "a", 3)
    assert s.letter_frequencies == {"a": 3 / 5, "b": 2 / 5}
    s = letter_frequencies(FIB, "a", 1)
    assert s.letter_frequencies == {"a": 0.5, "b": 0.5}
    s = letter_frequencies(FIB, "a", 20)
    assert abs(s.letter_frequencies["a"] - 0.6180339887) < 1e-4


def test_mean_length_and_exact_frequencies():
    s = letter_frequencies(FIB, "a", 12, lengths={"a": 1.0, "b": 1.0})
    assert s.mean_length == 1.0
    s = letter_frequencies(FIB, "a", 12, lengths={"a": 2.0, "b": 1.0})
    fa = s.letter_frequencies["a"]
    assert s.mean_length == pytest.approx(2 * fa + (1 - fa), abs=1e-15)
    exact = letter_frequencies(FIB, "a", 0, exact=True)
    assert exact.letter_frequencies["a"] == pytest.approx((np.sqrt(5) - 1) / 2, abs=1e-14)


def test_primitivity():
    assert check_primitivity(FIB)
    assert not check_primitivity(Substitution.from_strings({"a": "a", "b": "b"}))
    assert not check_primitivity(Substitution.from_strings({"a": "ab", "b": "b"}))
    assert check_primitivity(Substitution.from_strings({"a": "abc", "b": "a", "c": "b"}))


def test_incidence_matrix():
    assert FIB.incidence_matrix().tolist() == [[1, 1], [1, 0]]


def test_multichar_letters():
    sub = Substitution.from_strings({"x1": "x1 x2", "x2": "x1"}, ["x1", "x2"])
    w = iterate_substitution(sub, "x1", 3)
    assert str(w) == "x1 x2 x1 x1 x2"


@given(st.integers(min_value=1, max_value=18))
def test_frequencies_sum_to_one(n):
    s = letter_frequencies(FIB, "a", n)
    assert abs(sum(s.letter_frequencies.values()) - 1.0) <= 1e-12


@given(st.dictionaries(st.sampled_from("abc"), st.text(alphabet="abc", min_size=1, max_size=3), min_size=3),
       st.integers(min_value=0, max_value=5))
def test_general_substitution_lengths(rules, n):
    sub = Substitution.from_strings(rules, "abc")
    w = iterate_substitution(sub, "a", n)
    # length = column sum of M^n applied to the seed
    m = np.linalg.matrix_power(sub.incidence_matrix(), n)
    assert len(w) == int(m[:, 0].sum())
    assert np.array_equal(w.counts(), m[:, 0])
