import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aperiodic_spectrum import _backend
from aperiodic_spectrum.potential import Constant, PointInteraction, Sampled, fibonacci_model
from aperiodic_spectrum.subshift import DomainError, Word, fibonacci_substitution, iterate_substitution
from aperiodic_spectrum.transfer import (EnergyGrid, TransferMatrix, approximant_matrices, cos_sin_entire,
                                         dirichlet_zero_count, growth_bound, half_trace, log_growth_bound,
                                         piece_matrix, spectral_norm, word_matrices, word_matrix)

from conftest import free, kp, step

FIB = fibonacci_substitution()


def word(text):
    return Word.from_letters(FIB.alphabet, text)


def test_free_piece():
    E = 2.7
    k = math.sqrt(E)
    m = piece_matrix(Constant(0.0, 1.0), E).matrix
    expected = [[math.cos(k), math.sin(k) / k], [-k * math.sin(k), math.cos(k)]]
    assert np.allclose(m, expected, rtol=0, atol=1e-15)


@pytest.mark.parametrize("v,ell", [(0.0, 1.0), (3.0, 2.0), (-1.5, 0.25)])
def test_at_potential_value(v, ell):
    assert np.allclose(piece_matrix(Constant(v, ell), v).matrix, [[1, ell], [0, 1]], rtol=0, atol=1e-15)


def test_below_potential_is_hyperbolic():
    m = piece_matrix(Constant(4.0, 1.0), 0.0).matrix
    assert np.allclose(m, [[math.cosh(2), math.sinh(2) / 2], [2 * math.sinh(2), math.cosh(2)]], rtol=1e-14)


def test_point_interaction_matches_product():
    lam, E = 2.0, math.pi ** 2 / 4
    k = math.sqrt(E)
    F = np.array([[math.cos(k), math.sin(k) / k], [-k * math.sin(k), math.cos(k)]])
    J = np.array([[1.0, 0.0], [lam, 1.0]])
    m = piece_matrix(PointInteraction(lam, 1.0), E).matrix
    assert np.allclose(m, F @ J, rtol=0, atol=1e-15)
    # trace = 2 cos k + lam sin(k) / k
    assert half_trace(m) == pytest.approx(math.cos(k) + lam * math.sin(k) / (2 * k), abs=1e-15)


def test_word_examples():
    E = 3.3
    m = free()
    ab = word_matrix(m, word("ab"), E).matrix
    assert np.allclose(ab, piece_matrix(Constant(0.0, 2.0), E).matrix, atol=1e-14)
    assert half_trace(ab) == pytest.approx(math.cos(2 * math.sqrt(E)), abs=1e-14)
    s = step(1.7)
    assert np.allclose(word_matrix(s, word("a"), E).matrix, piece_matrix(s.pieces["a"], E).matrix, atol=0)
    aba = word_matrix(s, word("aba"), E)
    assert np.allclose(aba.matrix, (word_matrix(s, word("a"), E) @ word_matrix(s, word("ab"), E)).matrix,
                       rtol=0, atol=1e-12)


def test_half_trace_identity_and_free():
    assert half_trace(np.eye(2)) == 1.0
    assert half_trace(piece_matrix(Constant(0.0), 5.0)) == pytest.approx(math.cos(math.sqrt(5.0)), abs=1e-15)


def test_non_finite_energy():
    with pytest.raises(DomainError):
        word_matrix(step(1.0), word("ab"), math.nan)


def test_series_branch_continuity():
    for v, ell in [(0.0, 1.0), (2.0, 1.5), (-3.0, 0.3)]:
        at = piece_matrix(Constant(v, ell), v).matrix
        for d in (1e-6, -1e-6):
            assert np.allclose(piece_matrix(Constant(v, ell), v + d).matrix, at, rtol=0, atol=1e-5)
        # both sides of the series threshold agree
        z0 = 1e-2 / ell ** 2
        for z in (z0 * (1 - 1e-9), z0 * (1 + 1e-9), -z0 * (1 - 1e-9), -z0 * (1 + 1e-9)):
            c, s, _ = cos_sin_entire(np.array([z]), ell)
            k = np.sqrt(complex(z))
            assert abs(c[0] - np.cos(k * ell).real) < 1e-15
            assert abs(s[0] - (np.sin(k * ell) / k).real) < 1e-15


def test_large_barrier_rescaled():
    tm = piece_matrix(Constant(1e6, 1.0), 0.0)
    assert tm.log_scale > 0
    assert tm.log_norm == pytest.approx(1000.0 + math.log(0.5 * (1 + 1000.0)) - 0.0, rel=1e-3)


def test_growth_bound_examples():
    w = iterate_substitution(FIB, "a", 6)
    assert log_growth_bound(free(), w, 0.0) == pytest.approx(len(w))
    assert word_matrix(free(), w, 0.0).log_norm <= len(w)
    five = fibonacci_model(Constant(5.0), Constant(5.0))
    assert growth_bound(five, word("a"), 0.0) == pytest.approx(math.exp(5.0))
    for E in (-3.0, 0.5, 9.0, 40.0):
        assert word_matrix(kp(3.0), w, E).log_norm <= log_growth_bound(kp(3.0), w, E) + 1e-12


def test_energy_grid():
    g = EnergyGrid.uniform(0.0, 1.0, 11)
    assert len(g) == 11
    with pytest.raises(DomainError):
        EnergyGrid(1.0, 0.0, [])
    with pytest.raises(DomainError):
        EnergyGrid(0.0, 1.0, [0.5, 0.2])


def test_spectral_norm_closed_form(rng):
    m = rng.normal(size=(200, 2, 2))
    assert np.allclose(spectral_norm(m), np.linalg.norm(m, ord=2, axis=(1, 2)), rtol=1e-12)
    assert np.isfinite(spectral_norm(np.array([[1e300, 1e300], [0.0, 1e-300]])))


def _normalised(m, lg):
    big = np.abs(m).max(axis=(-2, -1))
    return m / big[:, None, None], lg + np.log(big)


@pytest.mark.parametrize("model", [step(1.0), kp(2.0), free()], ids=["step", "kp", "free"])
def test_approximant_matches_word(model):
    E = np.linspace(-2, 30, 41)
    for n in (0, 3, 9):
        u1, l1 = _normalised(*approximant_matrices(model, E, n))
        u2, l2 = _normalised(*word_matrices(model, iterate_substitution(FIB, "a", n), E))
        assert np.allclose(l1, l2, rtol=0, atol=1e-10)
        assert np.allclose(u1, u2, rtol=0, atol=1e-10)


def test_backends_agree(rng):
    if _backend.BACKEND != "cython":
        pytest.skip("compiled kernels not built")
    model = step(2.0)
    from aperiodic_spectrum.transfer import letter_matrices
    E = rng.uniform(-5, 40, 300)
    mats, _ = letter_matrices(model, E)
    codes = iterate_substitution(FIB, "a", 14).codes
    p1, l1 = _backend.word_product(mats, codes, backend="python")
    p2, l2 = _backend.word_product(mats, codes, backend="cython")
    assert np.allclose(l1, l2, rtol=0, atol=1e-9)
    assert np.allclose(p1, p2, rtol=1e-9, atol=1e-12)


def test_dirichlet_count_free():
    w = iterate_substitution(FIB, "a", 5)
    L = len(w)
    E = np.linspace(0.05, 60, 500)
    expected = np.floor(L * np.sqrt(E) / np.pi)
    away = np.abs(L * np.sqrt(E) / np.pi - np.round(L * np.sqrt(E) / np.pi)) > 1e-6
    assert np.array_equal(dirichlet_zero_count(free(), w, E)[away], expected[away])
    assert np.all(dirichlet_zero_count(free(), w, np.array([-3.0, -0.1])) == 0)


def test_dirichlet_count_sampled_matches_constant():
    w = iterate_substitution(FIB, "a", 6)
    a = fibonacci_model(Constant(1.5, 1.0), Constant(0.0, 1.0))
    b = fibonacci_model(Sampled(np.full(9, 1.5), 1.0), Constant(0.0, 1.0))
    E = np.linspace(-1, 30, 300)
    assert np.array_equal(dirichlet_zero_count(a, w, E), dirichlet_zero_count(b, w, E))


draw_piece = st.one_of(
    st.builds(Constant, st.floats(-20, 20), st.floats(0.05, 3)),
    st.builds(PointInteraction, st.floats(-10, 10), st.floats(0.05, 3)),
)


@settings(max_examples=300)
@given(draw_piece, st.floats(-30, 60))
def test_unimodular(piece, E):
    tm = piece_matrix(piece, E)
    norm2 = float(np.sum(tm.matrix ** 2))
    # rounding of the stored entries alone costs about eps * |M|^2
    assert abs(tm.det - 1) <= 1e-10 + 8 * np.finfo(float).eps * norm2


@settings(max_examples=100)
@given(st.lists(st.sampled_from("ab"), min_size=1, max_size=30), st.lists(st.sampled_from("ab"), min_size=1, max_size=30),
       st.floats(-5, 40))
def test_cocycle(w1, w2, E):
    m = fibonacci_model(Constant(1.3, 0.7), PointInteraction(-0.8, 1.1))
    joint = word_matrix(m, word(w1 + w2), E)
    split = word_matrix(m, word(w2), E) @ word_matrix(m, word(w1), E)
    scale = max(1.0, float(np.abs(split.matrix).max()))
    assert np.abs(joint.matrix - split.matrix).max() <= 1e-12 * scale


def test_transfer_matrix_rescales():
    big = TransferMatrix(np.array([[1e80, 0.0], [0.0, 1e-80]]))
    prod = big @ big
    assert prod.log_scale > 0
    assert prod.log_norm == pytest.approx(160 * math.log(10), rel=1e-12)
