"""Periodic-approximant band spectra, escape classification and box dimensions.

``sigma_n = {E : |x_n(E)| <= 1}`` is the spectrum of the periodic operator
built from ``S^n(a)``. Bands are located on a grid fine enough to resolve the
oscillations of ``x_n``, hidden bands and gaps are hunted with vectorised
golden-section searches around local extrema of ``|x_n|``, and every edge is
bisected down to floating-point resolution.

For moderate word lengths the result is certified by counting Dirichlet
eigenvalues of one period: each open gap holds exactly one, so the counts
at consecutive band edges expose any band or gap the grid missed.
Gaps whose edges touch (``I(E) = 0``) are reported in ``closed_gaps``;
intervals that no resampling could settle are kept in ``unresolved``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .potential import Model
from .subshift import DomainError, fibonacci_number, iterate_substitution
from .tracemap import ESCAPE_GUARD, initial_conditions_array, invariant_of_energy
from .transfer import EnergyGrid, dirichlet_zero_count

MAX_BAND_LEVEL = 25
PROBES_PER_OSCILLATION = 50
PROBE_TOL = 1e-9
TANGENCY_TOL = 1e-10
VARIATION_STEP = 0.5
REFINE_ROUNDS = 40
CERTIFY_MAX_LETTERS = 20_000
CERTIFY_ATTEMPTS = 4
HIDDEN_PASSES = 6
CLOSED_GAP_TOL = 1e-6
SUSPECT_SAMPLES = 4096
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ResolutionError(RuntimeError):
    """The energy grid cannot resolve the structure at the requested level."""


def default_threads() -> int:
    env = os.environ.get("APERIODIC_SPECTRUM_THREADS")
    return max(1, int(env)) if env else 1


def _chunked(func, E, threads):
    E = np.asarray(E, dtype=float)
    if threads <= 1 or E.size < 4096:
        return func(E)
    parts = np.array_split(E, threads)
    with ThreadPoolExecutor(threads) as pool:
        results = list(pool.map(func, parts))
    return tuple(np.concatenate(r) for r in zip(*results))


def trace_level(model: Model, E, n: int, guard: float = ESCAPE_GUARD, threads: int = 1, backend=None):
    """``x_n(E)``, ``log|x_n(E)|``, escape index (-1 if none) and ambiguity, batched."""
    def run(chunk):
        x1, x0, xm1 = initial_conditions_array(model, chunk)
        return _backend.trace_final(x1, x0, xm1, n, guard, backend=backend)

    E = np.atleast_1d(np.asarray(E, dtype=float))
    return _chunked(run, E, threads)


@dataclass(frozen=True)
class Band:
    E_lo: float
    E_hi: float
    level: int
    edge_residuals: tuple = (math.nan, math.nan)
    clipped: tuple = (False, False)
    tangency: bool = False

    @property
    def length(self) -> float:
        return self.E_hi - self.E_lo

    def __contains__(self, E):
        return self.E_lo <= E <= self.E_hi


@dataclass(frozen=True)
class SpectralCover:
    level: int
    bands: tuple
    window: tuple
    levels: tuple = ()
    unresolved: tuple = ()
    closed_gaps: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "bands", tuple(sorted(self.bands, key=lambda b: b.E_lo)))
        if not self.levels:
            object.__setattr__(self, "levels", (self.level,))
        for b1, b2 in zip(self.bands, self.bands[1:]):
            if b2.E_lo <= b1.E_hi and not (b1.tangency or b2.tangency):
                raise ValueError("bands of a cover must be pairwise disjoint")

    @property
    def total_measure(self) -> float:
        return float(sum(b.length for b in self.bands))

    def __len__(self):
        return len(self.bands)

    def contains(self, E, slack: float = 0.0):
        E = np.atleast_1d(np.asarray(E, dtype=float))
        lo = np.array([b.E_lo for b in self.bands])
        hi = np.array([b.E_hi for b in self.bands])
        if lo.size == 0:
            return np.zeros(E.shape, dtype=bool)
        k = np.searchsorted(lo, E + slack, side="right") - 1
        ok = k >= 0
        return ok & (E - slack <= hi[np.maximum(k, 0)])


def merge_covers(*covers: SpectralCover) -> SpectralCover:
    """Union of covers over the same window as a cover of disjoint bands."""
    bands = sorted((b for c in covers for b in c.bands), key=lambda b: b.E_lo)
    merged = []
    for b in bands:
        if merged and b.E_lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b.E_hi)
        else:
            merged.append([b.E_lo, b.E_hi])
    levels = tuple(sorted({lv for c in covers for lv in c.levels}))
    window = covers[0].window
    level = min(levels)
    unresolved = tuple(sorted({u for c in covers for u in c.unresolved}))
    closed = tuple(sorted({e for c in covers for e in c.closed_gaps}))
    return SpectralCover(level, tuple(Band(lo, hi, level) for lo, hi in merged), window, levels, unresolved, closed)


def _golden_min(f, lo, hi, iters=90):
    """Vectorised golden-section minimisation of ``f`` on brackets ``[lo, hi]``."""
    a, b = lo.copy(), hi.copy()
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    best_x = np.where(fc < fd, c, d)
    best_f = np.minimum(fc, fd)
    for _ in range(iters):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        nc = b - _GOLDEN * (b - a)
        nd = a + _GOLDEN * (b - a)
        # reuse one interior point, evaluate the other
        c_new = np.where(left, nc, d)
        d_new = np.where(left, c, nd)
        fc_old, fd_old = fc, fd
        probe = np.where(left, nc, nd)
        fp = f(probe)
        fc = np.where(left, fp, fd_old)
        fd = np.where(left, fc_old, fp)
        c, d = c_new, d_new
        better = np.minimum(fc, fd) < best_f
        best_x = np.where(better, np.where(fc < fd, c, d), best_x)
        best_f = np.minimum(best_f, np.minimum(fc, fd))
        if np.all(b - a <= 4 * np.spacing(np.maximum(np.abs(a), np.abs(b)))):
            break
    return best_x, best_f


def _bisect(pred, lo, hi, iters=200):
    """Vectorised bisection; ``pred(lo)`` true and ``pred(hi)`` false on entry."""
    lo, hi = lo.copy(), hi.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        active = (mid != lo) & (mid != hi)
        if not active.any():
            break
        p = pred(mid)
        lo = np.where(active & p, mid, lo)
        hi = np.where(active & ~p, mid, hi)
    return lo, hi


def grid_size(model: Model, n: int, window) -> int:
    """Grid points so that each oscillation of ``x_n`` gets ``PROBES_PER_OSCILLATION`` samples."""
    E_min, E_max = window
    fib = fibonacci_number(n + 2)
    a, b = model.designated()
    la, lb = model.pieces[a].length, model.pieces[b].length
    period = fibonacci_number(n + 1) * la + fibonacci_number(n) * lb
    span = math.sqrt(max(E_max, 0.0)) - math.sqrt(max(E_min, 0.0))
    oscillations = fib + period * span / math.pi
    return int(math.ceil(PROBES_PER_OSCILLATION * oscillations)) + 1


def _refine_variation(model, n, E, x, lx, threads, max_points):
    """Subdivide cells near the bands where ``x_n`` moves by more than ``VARIATION_STEP``."""
    for _ in range(REFINE_ROUNDS):
        near = np.minimum(np.abs(x[:-1]), np.abs(x[1:])) <= 2.0
        with np.errstate(invalid="ignore"):
            jump = np.abs(x[1:] - x[:-1]) > VARIATION_STEP
        wide = (E[1:] - E[:-1]) > 64 * np.spacing(np.abs(E[1:]) + 1.0)
        cells = np.flatnonzero(near & jump & wide)
        if cells.size == 0 or E.size + 7 * cells.size > max_points:
            break
        frac = np.arange(1, 8) / 8.0
        new = (E[cells, None] + (E[cells + 1] - E[cells])[:, None] * frac).ravel()
        nx, nlx, _, _ = trace_level(model, new, n, threads=threads)
        E = np.concatenate([E, new])
        order = np.argsort(E, kind="stable")
        E, x, lx = E[order], np.concatenate([x, nx])[order], np.concatenate([lx, nlx])[order]
    return E, x, lx


def _hidden_points(model, n, E, x, lx):
    """Energies inside bands (or gaps) that fall between grid points."""
    labs = lambda e: trace_level(model, e, n)[1]
    inside = lx <= 0.0
    extra = []
    out_i = np.flatnonzero(~inside[:-1] & ~inside[1:])
    flip = out_i[np.sign(x[out_i]) * np.sign(x[out_i + 1]) < 0]
    if flip.size:
        # x_n changes sign between two out-of-band points: a band lies between
        s_lo = np.sign(x[flip])
        lo, hi = _bisect(lambda e: np.sign(trace_level(model, e, n)[0]) == s_lo, E[flip], E[flip + 1])
        extra.append(np.where(labs(lo) <= labs(hi), lo, hi))
    interior = np.arange(1, E.size - 1)
    cand = interior[~inside[interior] & (lx[interior] < lx[interior - 1]) & (lx[interior] <= lx[interior + 1])]
    if cand.size:
        xm, fm = _golden_min(labs, E[cand - 1], E[cand + 1])
        extra.append(xm[fm <= 0.0])
    cand = interior[inside[interior] & (lx[interior] > lx[interior - 1]) & (lx[interior] >= lx[interior + 1])]
    if cand.size:
        xm, fm = _golden_min(lambda e: -labs(e), E[cand - 1], E[cand + 1])
        extra.append(xm[-fm > math.log1p(TANGENCY_TOL)])
    return np.concatenate(extra) if extra else np.empty(0)


def _assemble(model, n, E, inside, window):
    E_min, E_max = window
    labs = lambda e: trace_level(model, e, n)[1]
    inb = lambda e: labs(e) <= 0.0
    up = np.flatnonzero(~inside[:-1] & inside[1:])
    down = np.flatnonzero(inside[:-1] & ~inside[1:])
    starts = _bisect(inb, E[up + 1], E[up])[0] if up.size else np.empty(0)
    ends = _bisect(inb, E[down], E[down + 1])[0] if down.size else np.empty(0)
    start_pts = list(starts)
    end_pts = list(ends)
    clip_lo, clip_hi = bool(inside[0]), bool(inside[-1])
    if clip_lo:
        start_pts.insert(0, E_min)
    if clip_hi:
        end_pts.append(E_max)
    if len(start_pts) != len(end_pts):
        raise ResolutionError(f"unbalanced band edges at level {n}")
    res_lo = _edge_residuals(model, n, np.array(start_pts))
    res_hi = _edge_residuals(model, n, np.array(end_pts))
    bands = []
    for k, (lo, hi) in enumerate(zip(start_pts, end_pts)):
        cl = (clip_lo and k == 0, clip_hi and k == len(end_pts) - 1)
        r = (math.nan if cl[0] else float(res_lo[k]), math.nan if cl[1] else float(res_hi[k]))
        bands.append(Band(float(lo), float(hi), n, r, cl, tangency=bool(hi <= lo)))
    return bands


def _dirichlet_roots(model, word, lo, hi, k_lo, count, iters=80):
    """The Dirichlet eigenvalues ``k_lo + 1, ..., k_lo + count`` inside ``(lo, hi)``."""
    lo = np.repeat(lo, count)
    hi = np.repeat(hi, count)
    target = np.repeat(k_lo, count) + np.concatenate([np.arange(1, c + 1) for c in count])
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if not np.any((mid > lo) & (mid < hi)):
            break
        below = dirichlet_zero_count(model, word, mid) >= target
        hi = np.where(below, mid, hi)
        lo = np.where(below, lo, mid)
    return hi


def _certify(model, n, bands, window, soft):
    """Cross-check a band list against Sturm oscillation counts.

    The ``j``-th Dirichlet eigenvalue of the period cell lies in the closure
    of the ``j``-th gap. So a detected gap must hold exactly one eigenvalue
    and a band none, except where ``|x_n| = 1`` at the eigenvalue (a closed
    gap). Returns ``(suspects, gap_points, closed)``: intervals to resample,
    eigenvalues found outside ``[-1, 1]`` inside a band (hidden gaps), and
    closed-gap energies.
    """
    E_min, E_max = window
    word = approximant_word(model, n)
    if not bands:
        N = dirichlet_zero_count(model, word, np.array([E_min, E_max]))
        d = N[1] - N[0]
        return ([(E_min, E_max)] if d >= 2 or (soft and d == 1) else []), np.empty(0), []
    lo = np.array([b.E_lo for b in bands])
    hi = np.array([b.E_hi for b in bands])
    inset = 1e-6 * (hi - lo)
    a, b = lo + inset, hi - inset
    N = dirichlet_zero_count(model, word, np.concatenate([[E_min], a, b, [E_max]]))
    n_lo, Na, Nb, n_hi = N[0], N[1:len(bands) + 1], N[len(bands) + 1:-1], N[-1]
    suspects, closed = [], []
    gap_points = np.empty(0)
    inner = Nb - Na
    k = np.flatnonzero(inner > 0)
    if k.size:
        roots = _dirichlet_roots(model, word, a[k], b[k], Na[k], inner[k])
        owner = np.repeat(k, inner[k])
        x = trace_level(model, roots, n)[0]
        dev = np.abs(x) - 1.0
        closed = [float(e) for e in roots[np.abs(dev) <= CLOSED_GAP_TOL]]
        gap_points = roots[dev > CLOSED_GAP_TOL]
        for j in np.unique(owner[dev < -CLOSED_GAP_TOL]):
            suspects.append((float(lo[j]), float(hi[j])))
    gaps = Na[1:] - Nb[:-1]
    for j in np.flatnonzero(gaps != 1):
        suspects.append((float(0.5 * (lo[j] + hi[j])), float(0.5 * (lo[j + 1] + hi[j + 1]))))
    first, last = bands[0], bands[-1]
    d = Na[0] - n_lo
    if (first.clipped[0] and d != 0) or d >= 2 or (soft and d == 1):
        suspects.append((E_min, float(0.5 * (lo[0] + hi[0]))))
    d = n_hi - Nb[-1]
    if (last.clipped[1] and d != 0) or d >= 2 or (soft and d == 1):
        suspects.append((float(0.5 * (lo[-1] + hi[-1])), E_max))
    return sorted(set(suspects)), gap_points, closed


def band_spectrum(model: Model, n: int, window, threads: int | None = None,
                  check_probes: bool = True, certify: bool | None = None) -> SpectralCover:
    """The level-``n`` approximant spectrum ``sigma_n`` within ``window``.

    With ``certify`` (default: when ``S^n(a)`` has at most
    ``CERTIFY_MAX_LETTERS`` letters) the band list is cross-checked against
    Sturm oscillation counts. Closed gaps (Dirichlet eigenvalues inside a
    band where ``|x_n| = 1``) go to ``SpectralCover.closed_gaps``; regions
    that stay inconsistent after dense resampling are reported in
    ``SpectralCover.unresolved``.

    Raises
    ------
    ResolutionError
        If an interior probe of a resolved band leaves ``[-1, 1]``.
    """
    E_min, E_max = map(float, window)
    if not E_min < E_max:
        raise DomainError(f"empty window [{E_min}, {E_max}]")
    if not 0 <= n <= MAX_BAND_LEVEL:
        raise DomainError(f"band level must be in [0, {MAX_BAND_LEVEL}], got {n}")
    threads = default_threads() if threads is None else threads
    if certify is None:
        certify = fibonacci_number(n + 2) <= CERTIFY_MAX_LETTERS
    # spacing at most width / (50 F_{n+2})
    count = max(grid_size(model, n, (E_min, E_max)), PROBES_PER_OSCILLATION * fibonacci_number(n + 2) + 1, 2001)
    max_points = max(8 * count, 1_000_000)
    E = np.linspace(E_min, E_max, count)
    suspects = []
    extra = np.empty(0)
    for attempt in range(CERTIFY_ATTEMPTS + 1):
        if extra.size:
            E = np.unique(np.concatenate([E, extra]))
        x, lx, _, _ = trace_level(model, E, n, threads=threads)
        for _ in range(HIDDEN_PASSES):
            E, x, lx = _refine_variation(model, n, E, x, lx, threads, max_points)
            add = np.setdiff1d(_hidden_points(model, n, E, x, lx), E)
            if not add.size:
                break
            ax, alx, _, _ = trace_level(model, add, n, threads=threads)
            E = np.concatenate([E, add])
            order = np.argsort(E, kind="stable")
            E, x, lx = E[order], np.concatenate([x, ax])[order], np.concatenate([lx, alx])[order]
        bands = _assemble(model, n, E, lx <= 0.0, (E_min, E_max))
        # a probe outside [-1, 1] is a known gap point: feed it back into the grid
        bad = _probe_failures(model, n, bands) if check_probes else np.empty(0)
        suspects, gap_points, closed = [], np.empty(0), []
        if certify:
            suspects, gap_points, closed = _certify(model, n, bands, (E_min, E_max), soft=attempt == 0)
        if not bad.size and not gap_points.size and not suspects:
            break
        extra = np.concatenate([bad, gap_points, *(np.linspace(lo, hi, SUSPECT_SAMPLES) for lo, hi in suspects)])
    if certify and (suspects or gap_points.size):
        # soft (ambiguous single-count) intervals are settled by the first resample
        suspects, gap_points, closed = _certify(model, n, bands, (E_min, E_max), soft=False)
        suspects = sorted(set(suspects) | {(float(e), float(e)) for e in gap_points})
    if check_probes:
        _check_probes(model, n, bands)
    return SpectralCover(n, tuple(bands), (E_min, E_max), unresolved=tuple(suspects), closed_gaps=tuple(closed))


def _edge_residuals(model, n, pts):
    if pts.size == 0:
        return pts
    x = trace_level(model, pts, n)[0]
    return np.abs(x) - 1.0


def chebyshev_probes(lo: float, hi: float, count: int = 5) -> np.ndarray:
    k = np.arange(count)
    nodes = np.cos((2 * k + 1) * np.pi / (2 * count))
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * nodes[::-1]


def _probe_failures(model, n, bands):
    """Chebyshev probes of resolved bands where ``|x_n| > 1 + PROBE_TOL``."""
    resolved = [b for b in bands if b.length > 1e-9 * max(1.0, abs(b.E_lo))]
    if not resolved:
        return np.empty(0)
    pts = np.concatenate([chebyshev_probes(b.E_lo, b.E_hi) for b in resolved])
    x = trace_level(model, pts, n)[0]
    return pts[np.abs(x) > 1.0 + PROBE_TOL]


def _check_probes(model, n, bands):
    bad = _probe_failures(model, n, bands)
    if bad.size:
        raise ResolutionError(f"grid too coarse at level {n}: probe E={float(bad[0])!r} has |x_n| > 1")


def min_invariant_on_band(model: Model, band: Band, count: int = 5) -> float:
    pts = chebyshev_probes(band.E_lo, band.E_hi, count)
    return float(np.min(invariant_of_energy(model, pts)))


# -- escape classification ----------------------------------------------------

ESCAPED = "Escaped"
NOT_ESCAPED = "NotEscapedBy"
UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class ClassifiedGrid:
    grid: EnergyGrid
    classes: np.ndarray
    escape_index: np.ndarray
    invariant: np.ndarray
    n_max: int

    def mask(self, cls: str) -> np.ndarray:
        return self.classes == cls


def classify_grid(model: Model, grid: EnergyGrid, n_max: int, guard: float = ESCAPE_GUARD,
                  threads: int | None = None) -> ClassifiedGrid:
    """Escape-time classification of every grid energy up to ``x_{n_max}``."""
    threads = default_threads() if threads is None else threads
    E = grid.points
    _, _, esc, amb = trace_level(model, E, n_max, guard, threads=threads)
    classes = np.where(esc >= 0, ESCAPED, np.where(amb, UNDETERMINED, NOT_ESCAPED)).astype(object)
    inv = invariant_of_energy(model, E)
    return ClassifiedGrid(grid, classes, esc, np.atleast_1d(inv), n_max)


# -- covers and dimensions ----------------------------------------------------

def cover_measure_sequence(model: Model, window, n_list, threads: int | None = None) -> list:
    """Lebesgue measure of ``sigma_n U sigma_{n+1}`` within ``window`` for each ``n``."""
    out = []
    for n in n_list:
        c = merge_covers(band_spectrum(model, n, window, threads), band_spectrum(model, n + 1, window, threads))
        out.append((n, c.total_measure))
    return out


@dataclass(frozen=True)
class DimensionEstimate:
    estimate: float
    levels: tuple
    band_counts: tuple
    mean_lengths: tuple
    raw_slope: float
    clamped: bool = field(default=False)


def box_dimension_details(model: Model, window, n_pair, threads: int | None = None) -> DimensionEstimate:
    """Two-level box-counting slope ``log(N2/N1) / log(eps1/eps2)``.

    ``N`` is the number of bands of ``sigma_n`` in the window and ``eps`` their
    mean length. A window covered by a single band at both levels gives 1.
    """
    n1, n2 = n_pair
    if not n2 > n1:
        raise DomainError("n_pair must satisfy n2 > n1")
    c1 = band_spectrum(model, n1, window, threads)
    c2 = band_spectrum(model, n2, window, threads)
    b1 = [b for b in c1.bands if b.length > 0]
    b2 = [b for b in c2.bands if b.length > 0]
    width = window[1] - window[0]
    full = lambda bs: len(bs) == 1 and bs[0].length >= width * (1 - 1e-12)
    if full(b1) and full(b2):
        return DimensionEstimate(1.0, (n1, n2), (1, 1), (width, width), math.nan, clamped=True)
    if len(b1) < 2 or len(b2) < 2:
        raise ResolutionError(
            f"insufficient resolution: {len(b1)} and {len(b2)} bands at levels {n1} and {n2}")
    N1, N2 = len(b1), len(b2)
    eps1 = float(np.mean([b.length for b in b1]))
    eps2 = float(np.mean([b.length for b in b2]))
    if eps1 == eps2:
        slope = math.inf if N2 != N1 else 1.0
    else:
        slope = math.log(N2 / N1) / math.log(eps1 / eps2)
    est = min(1.0, max(0.0, slope))
    return DimensionEstimate(est, (n1, n2), (N1, N2), (eps1, eps2), slope, clamped=est != slope)


def box_dimension_estimate(model: Model, window, n_pair, threads: int | None = None) -> float:
    return box_dimension_details(model, window, n_pair, threads).estimate


def approximant_word(model: Model, n: int):
    a, _ = model.designated()
    return iterate_substitution(model.substitution, a, n)
