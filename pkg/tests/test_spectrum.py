import math

import numpy as np
import pytest

from aperiodic_spectrum.spectrum import (ESCAPED, NOT_ESCAPED, Band, ResolutionError, SpectralCover, band_spectrum,
                                         box_dimension_details, box_dimension_estimate, chebyshev_probes,
                                         classify_grid, cover_measure_sequence, merge_covers,
                                         min_invariant_on_band, trace_level)
from aperiodic_spectrum.subshift import DomainError
from aperiodic_spectrum.transfer import EnergyGrid

from conftest import PI2, free, kp, step


def test_free_level_zero():
    c = band_spectrum(free(), 0, (0, 10))
    assert [(b.E_lo, b.E_hi) for b in c.bands] == [(0.0, 10.0)]
    assert c.unresolved == ()
    assert len(c.closed_gaps) >= 1


def test_step_level_zero():
    c = band_spectrum(step(4.0), 0, (0, 20))
    assert len(c.bands) == 1
    assert c.bands[0].E_lo == pytest.approx(4.0, abs=1e-12)
    assert c.bands[0].E_hi == 20.0


@pytest.mark.parametrize("n", [2, 5, 8])
def test_band_invariants(n):
    m = step(1.0)
    c = band_spectrum(m, n, (0, 20))
    lo = np.array([b.E_lo for b in c.bands])
    hi = np.array([b.E_hi for b in c.bands])
    assert np.all(lo <= hi) and np.all(hi[:-1] < lo[1:])
    res = np.array([r for b in c.bands for r in b.edge_residuals if not math.isnan(r)])
    assert np.all(np.abs(res) <= 1e-9)
    for b in c.bands:
        x = trace_level(m, chebyshev_probes(b.E_lo, b.E_hi), n)[0]
        assert np.all(np.abs(x) <= 1 + 1e-9)
    assert c.total_measure == pytest.approx(float(np.sum(hi - lo)))


def test_band_count_matches_period():
    # each periodic approximant has one band per Dirichlet eigenvalue interval
    m = step(2.0)
    c = band_spectrum(m, 6, (0, 30))
    assert c.unresolved == ()
    assert len(c.bands) > 13


def test_pseudo_band_kp():
    m = kp(1.0)
    for n in range(0, 13):
        assert band_spectrum(m, n, (8, 12)).contains(PI2)[0]


def test_errors():
    with pytest.raises(DomainError):
        band_spectrum(step(1.0), 26, (0, 1))
    with pytest.raises(DomainError):
        band_spectrum(step(1.0), 3, (2, 1))


def test_cover_container():
    b1, b2 = Band(0.0, 1.0, 3), Band(2.0, 3.0, 3)
    c = SpectralCover(3, (b2, b1), (0, 5))
    assert c.bands[0] is b1
    assert c.total_measure == 2.0
    assert c.contains([0.5, 1.5, 2.0]).tolist() == [True, False, True]
    with pytest.raises(ValueError):
        SpectralCover(3, (Band(0.0, 2.0, 3), Band(1.0, 3.0, 3)), (0, 5))
    merged = merge_covers(c, SpectralCover(4, (Band(0.5, 2.5, 4),), (0, 5)))
    assert [(b.E_lo, b.E_hi) for b in merged.bands] == [(0.0, 3.0)]
    assert merged.levels == (3, 4)


def test_classify_free_and_barrier():
    g = classify_grid(free(), EnergyGrid.uniform(0, 20, 401), 60)
    assert np.all(g.classes == NOT_ESCAPED)
    g = classify_grid(step(50.0), EnergyGrid.uniform(0, 40, 401), 60)
    assert np.all(g.classes == ESCAPED)
    assert g.escape_index.max() <= 3


def test_band_membership_blocks_early_escape():
    m = step(1.0)
    c = band_spectrum(m, 12, (0, 20))
    g = classify_grid(m, EnergyGrid.uniform(0, 20, 4001), 12)
    inside = c.contains(g.grid.points)
    assert not np.any(g.escape_index[inside] >= 0)


@pytest.mark.parametrize("model", [step(1.0), step(3.0), kp(1.0)], ids=["step1", "step3", "kp1"])
@pytest.mark.parametrize("n", [6, 8, 10])
def test_cover_inclusion(model, n):
    window = (0.0, 20.0)
    grid = EnergyGrid.uniform(*window, 2001)
    g = classify_grid(model, grid, n + 2 + 20)
    cover = merge_covers(band_spectrum(model, n, window), band_spectrum(model, n + 1, window))
    cell = grid.points[1] - grid.points[0]
    survivors = grid.points[g.classes == NOT_ESCAPED]
    assert np.all(cover.contains(survivors, slack=cell))


def test_escaped_points_leave_covers():
    m = step(1.0)
    grid = EnergyGrid.uniform(0, 20, 1001)
    g = classify_grid(m, grid, 12)
    covers = {n: band_spectrum(m, n, (0, 20)) for n in (6, 9, 12)}
    for n, c in covers.items():
        early = g.grid.points[(g.escape_index >= 0) & (g.escape_index <= n)]
        assert not np.any(c.contains(early))


def test_invariant_nonnegative_on_bands():
    for m in (step(1.0), kp(1.0)):
        c = band_spectrum(m, 12, (0, 20))
        assert min(min_invariant_on_band(m, b) for b in c.bands) >= -1e-8


def test_measure_sequence():
    seq = cover_measure_sequence(free(), (0, 10), [2, 4])
    assert [v for _, v in seq] == [10.0, 10.0]
    seq = [v for _, v in cover_measure_sequence(step(1.0), (0, 20), [4, 8])]
    assert seq[1] < seq[0]


def test_dimension_free_and_errors():
    assert box_dimension_estimate(free(), (0, 10), (2, 4)) == 1.0
    with pytest.raises(DomainError):
        box_dimension_estimate(free(), (0, 10), (4, 2))
    with pytest.raises(ResolutionError, match="insufficient resolution"):
        box_dimension_details(step(50.0), (0, 1), (1, 2))


def test_thread_count_does_not_change_bands():
    m = step(1.0)
    a = band_spectrum(m, 9, (0, 20), threads=1)
    b = band_spectrum(m, 9, (0, 20), threads=3)
    assert a.bands == b.bands
