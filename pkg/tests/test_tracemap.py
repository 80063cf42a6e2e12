import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aperiodic_spectrum import _backend
from aperiodic_spectrum.subshift import DomainError, fibonacci_substitution, iterate_substitution
from aperiodic_spectrum.tracemap import (TraceTriple, bounded_component_candidate, fricke_vogt,
                                         initial_conditions, initial_conditions_array, inverse_trace_map_step,
                                         invariant_of_energy, orbit_from_triple, surface_mesh, trace_map_step,
                                         trace_recursion)
from aperiodic_spectrum.transfer import half_trace, word_matrix

from conftest import free, kp, step

FIB = fibonacci_substitution()
coord = st.floats(-5, 5)


def test_map_examples():
    assert tuple(trace_map_step((1, 1, 1))) == (1, 1, 1)
    assert tuple(trace_map_step((0, 0, 0))) == (0, 0, 0)
    assert tuple(trace_map_step((2, 1, 0))) == (4, 2, 1)


def test_map_overflow_is_flagged():
    t = trace_map_step((1e200, 1e200, 0.0))
    assert t.escaped and t.x_next == math.inf
    assert t.log_magnitude[0] == pytest.approx(math.log(2) + 2 * 200 * math.log(10))
    with pytest.raises(DomainError):
        trace_map_step((math.inf, 1.0, 1.0))


def test_invariant_examples():
    assert fricke_vogt((1, 1, 1)) == 0
    assert fricke_vogt((0, 0, 0)) == -1
    E = np.linspace(0.1, 50, 200)
    assert np.all(np.abs(invariant_of_energy(free(), E)) <= 1e-12)


def test_initial_conditions_examples():
    E, lam = 7.3, 2.0
    k, q = math.sqrt(E), math.sqrt(E - lam)
    x1 = math.cos(k) * math.cos(q) - 0.5 * (math.sqrt(E / (E - lam)) + math.sqrt((E - lam) / E)) * math.sin(k) * math.sin(q)
    got = initial_conditions(step(lam), E)
    assert got.as_array() == pytest.approx([x1, math.cos(q), math.cos(k)], abs=1e-14)
    got = initial_conditions(free(), E)
    assert got.as_array() == pytest.approx([math.cos(2 * k), math.cos(k), math.cos(k)], abs=1e-14)
    t = initial_conditions(kp(1.0), 4 * math.pi ** 2)
    assert t.x_prev == pytest.approx(1.0, abs=1e-15)
    assert abs(fricke_vogt(t)) < 1e-12


def test_commutator_form_matches_polynomial():
    E = np.linspace(-3, 40, 300)
    for m in (step(1.0), step(6.0), kp(2.0), kp(-1.0)):
        assert np.allclose(invariant_of_energy(m, E), fricke_vogt(initial_conditions_array(m, E)), rtol=1e-9, atol=1e-9)


def test_non_fibonacci_refused():
    from aperiodic_spectrum.potential import Constant, Model
    from aperiodic_spectrum.subshift import Substitution
    m = Model({"a": Constant(1.0), "b": Constant(0.0)}, Substitution.from_strings({"a": "abb", "b": "a"}))
    with pytest.raises(DomainError):
        initial_conditions(m, 1.0)


@pytest.mark.parametrize("E", [1.0, 2.0, 10.0])
def test_free_orbit_bounded(E):
    rec = trace_recursion(free(), E, 200)
    assert rec.escape_index is None and not rec.undetermined
    assert np.all(np.abs(rec.values) <= 1 + 1e-9)


def test_deep_barrier_escapes_early():
    rec = trace_recursion(step(50.0), 1.0, 50)
    assert rec.escape_index is not None and rec.escape_index <= 2
    assert np.isfinite(rec.log_abs[-1]) and rec.log_abs[-1] > 1e3


def test_recursion_matches_word_product():
    m = step(1.3)
    E = 4.1
    rec = trace_recursion(m, E, 12)
    for n in range(0, 13):
        w = iterate_substitution(FIB, "a", n)
        assert rec.x(n) == pytest.approx(half_trace(word_matrix(m, w, E)), rel=1e-8, abs=1e-10)
    assert rec.x(2) == pytest.approx(half_trace(word_matrix(m, iterate_substitution(FIB, "a", 2), E)), abs=1e-10)


def test_escape_permanence():
    m = step(3.0)
    for E in np.linspace(0.1, 20, 60):
        rec = trace_recursion(m, float(E), 60)
        if rec.escape_index is not None:
            assert np.all(rec.log_abs[rec.escape_index + 1:] > 0)


def test_orbit_cap_and_steps():
    with pytest.raises(DomainError):
        orbit_from_triple((0.5, 0.5, 0.5), 201)
    rec = orbit_from_triple((0.5, 0.2, 0.1), 5)
    steps = rec.steps
    assert len(steps) == 5
    assert tuple(steps[1]) == tuple(trace_map_step(steps[0]))


def test_kernels_match_scalar_orbit(rng):
    x = rng.uniform(-1.5, 1.5, size=(3, 400))
    for backend in (["python", "cython"] if _backend.BACKEND == "cython" else ["python"]):
        xn, ln, esc, amb = _backend.trace_final(*x, 30, backend=backend)
        for i in range(0, 400, 7):
            rec = orbit_from_triple(x[:, i], 30)
            assert ln[i] == pytest.approx(rec.log_abs[-1], rel=1e-9, abs=1e-9)
            assert (esc[i] if esc[i] >= 0 else None) == rec.escape_index


def test_bounded_candidate():
    assert bounded_component_candidate((0.0, 0.0, 0.0))
    assert not bounded_component_candidate((2.0, 0.0, 0.0))


@settings(max_examples=500)
@given(coord, coord, coord)
def test_invariant_preserved(x, y, z):
    p = (x, y, z)
    norm = math.sqrt(x * x + y * y + z * z)
    assert abs(fricke_vogt(trace_map_step(p)) - fricke_vogt(p)) <= 1e-10 * max(1.0, norm ** 4)


@given(coord, coord, coord)
def test_inverse(x, y, z):
    back = inverse_trace_map_step(trace_map_step((x, y, z)))
    assert np.allclose(back.as_array(), [x, y, z], rtol=0, atol=1e-12 * max(1, abs(x), abs(y), abs(z)) ** 2)


@pytest.mark.parametrize("level,components", [(-0.5, None), (0.0, None), (1.0, 1)])
def test_surface_meshes(level, components, tmp_path):
    mesh = surface_mesh(level, bounds=3.0, resolution=48)
    assert mesh.residuals().max() <= 1e-3
    if components is not None:
        assert mesh.n_components() == components
    else:
        assert mesh.n_components() >= 2 if level < 0 else mesh.n_components() >= 1
    mesh.write_obj(tmp_path / "m.obj", header="h")
    lines = (tmp_path / "m.obj").read_text().splitlines()
    assert lines[0] == "# h"
    nv = sum(1 for l in lines if l.startswith("v "))
    faces = np.array([[int(t) for t in l.split()[1:]] for l in lines if l.startswith("f ")])
    assert faces.min() >= 1 and faces.max() <= nv


def test_cone_point_on_cayley_cubic():
    mesh = surface_mesh(0.0, bounds=3.0, resolution=64)
    d = np.linalg.norm(mesh.vertices - 1.0, axis=1)
    assert d.min() < 0.1
