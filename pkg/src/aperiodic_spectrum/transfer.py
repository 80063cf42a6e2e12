"""Transfer matrices of potential pieces and of words.

Matrices act on ``(u, u')`` and map ``(u(0), u'(0))`` to ``(u(l), u'(l))``
for solutions of ``-u'' + V u = E u``, so the first column is the Neumann
solution and the second the Dirichlet solution.

Large products are carried as ``(entries, log_scale)`` with the true
matrix equal to ``exp(log_scale) * entries``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .potential import Constant, Model, PointInteraction, PotentialPiece, Sampled
from .subshift import DomainError, Word

SERIES_THRESHOLD = 1e-2
SERIES_TERMS = 8
# beyond this exponent hyperbolic entries are rescaled
_HYPERBOLIC_RESCALE = 300.0
# bound on energies x cells handed to the word kernel at once
_CHUNK = 2_000_000


@dataclass(frozen=True)
class TransferMatrix:
    entries: np.ndarray
    log_scale: float = 0.0

    def __post_init__(self):
        e = np.array(self.entries, dtype=float).reshape(2, 2)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "log_scale", float(self.log_scale))

    m11 = property(lambda self: self._entry(0, 0))
    m12 = property(lambda self: self._entry(0, 1))
    m21 = property(lambda self: self._entry(1, 0))
    m22 = property(lambda self: self._entry(1, 1))

    def _entry(self, i, j):
        return float(self.entries[i, j] * np.exp(self.log_scale))

    @property
    def matrix(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.entries * np.exp(self.log_scale)

    @property
    def det(self) -> float:
        with np.errstate(over="ignore"):
            return float(np.linalg.det(self.entries) * np.exp(2 * self.log_scale))

    @property
    def log_norm(self) -> float:
        return float(log_spectral_norm(self.entries) + self.log_scale)

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        p = self.entries @ other.entries
        s = np.abs(p).max()
        ls = self.log_scale + other.log_scale
        if s > 1e100:
            p, ls = p / s, ls + np.log(s)
        return TransferMatrix(p, ls)


@dataclass(frozen=True)
class EnergyGrid:
    E_min: float
    E_max: float
    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if not self.E_min < self.E_max:
            raise DomainError(f"empty energy window [{self.E_min}, {self.E_max}]")
        if pts.size and (np.any(np.diff(pts) <= 0) or pts[0] < self.E_min or pts[-1] > self.E_max):
            raise DomainError("grid points must be strictly increasing inside the window")

    @classmethod
    def uniform(cls, E_min: float, E_max: float, count: int) -> "EnergyGrid":
        return cls(E_min, E_max, np.linspace(E_min, E_max, count))

    def __len__(self):
        return self.points.size


def spectral_norm(m) -> np.ndarray:
    """Largest singular value of 2x2 matrices (closed form, batched)."""
    with np.errstate(over="ignore"):
        return np.exp(log_spectral_norm(m))


def log_spectral_norm(m) -> np.ndarray:
    """Log of the largest singular value; entries are scaled first so nothing overflows."""
    m = np.asarray(m, dtype=float)
    big = np.abs(m).max(axis=(-2, -1))
    safe = np.where(big > 0, big, 1.0)
    u = m / safe[..., None, None]
    fro2 = np.sum(u * u, axis=(-2, -1))
    det = u[..., 0, 0] * u[..., 1, 1] - u[..., 0, 1] * u[..., 1, 0]
    disc = np.sqrt(np.maximum(fro2 * fro2 - 4 * det * det, 0.0))
    with np.errstate(divide="ignore"):
        return np.log(safe) + 0.5 * np.log((fro2 + disc) / 2) + np.where(big > 0, 0.0, -np.inf)


def cos_sin_entire(z, ell):
    """``c = cos(sqrt(z) l)`` and ``s = sin(sqrt(z) l) / sqrt(z)``.

    Both are entire in ``z``; near ``z = 0`` a Taylor series is used. For
    large negative ``z`` the pair is returned scaled by ``exp(-sqrt(-z) l)``
    together with that log scale.
    """
    z = np.asarray(z, dtype=float)
    ell = float(ell)
    w = z * ell * ell
    c = np.empty(z.shape)
    s = np.empty(z.shape)
    scale = np.zeros(z.shape)

    small = np.abs(w) < SERIES_THRESHOLD
    if small.any():
        ws = w[small]
        term_c = np.ones_like(ws)
        term_s = np.ones_like(ws)
        sum_c = np.ones_like(ws)
        sum_s = np.ones_like(ws)
        for j in range(1, SERIES_TERMS):
            term_c = term_c * (-ws) / ((2 * j - 1) * (2 * j))
            term_s = term_s * (-ws) / ((2 * j) * (2 * j + 1))
            sum_c += term_c
            sum_s += term_s
        c[small] = sum_c
        s[small] = ell * sum_s

    pos = (~small) & (z > 0)
    if pos.any():
        k = np.sqrt(z[pos])
        c[pos] = np.cos(k * ell)
        s[pos] = np.sin(k * ell) / k

    neg = (~small) & (z < 0)
    if neg.any():
        kap = np.sqrt(-z[neg])
        x = kap * ell
        big = x > _HYPERBOLIC_RESCALE
        cn = np.where(big, 0.5 * (1 + np.exp(-2 * np.minimum(x, 1e300))), np.cosh(np.minimum(x, _HYPERBOLIC_RESCALE)))
        sn = np.where(big, 0.5 * (1 - np.exp(-2 * np.minimum(x, 1e300))), np.sinh(np.minimum(x, _HYPERBOLIC_RESCALE)))
        c[neg] = cn
        s[neg] = sn / kap
        scale[neg] = np.where(big, x, 0.0)
    return c, s, scale


def _constant_matrices(value, ell, E):
    z = np.asarray(E, dtype=float) - value
    c, s, scale = cos_sin_entire(z, ell)
    m = np.empty(z.shape + (2, 2))
    m[..., 0, 0] = c
    m[..., 0, 1] = s
    m[..., 1, 0] = -z * s
    m[..., 1, 1] = c
    return m, scale


def piece_matrices(piece: PotentialPiece, E):
    """Batched transfer matrices of one piece: ``(entries, log_scale)``."""
    E = np.asarray(E, dtype=float)
    if not np.isfinite(E).all():
        raise DomainError("energies must be finite")
    if isinstance(piece, Constant):
        return _constant_matrices(piece.value, piece.length, E)
    if isinstance(piece, PointInteraction):
        m, scale = _constant_matrices(0.0, piece.length, E)
        lam = piece.strength
        out = m.copy()
        # free(l) @ [[1, 0], [lam, 1]]: the jump acts first
        out[..., 0, 0] = m[..., 0, 0] + lam * m[..., 0, 1]
        out[..., 1, 0] = m[..., 1, 0] + lam * m[..., 1, 1]
        return out, scale
    if isinstance(piece, Sampled):
        return _sampled_matrices(piece, E)
    raise TypeError(f"unsupported piece type {type(piece).__name__}")


def _sampled_matrices(piece: Sampled, E):
    flat = np.atleast_1d(E).ravel()
    vals = piece.cell_values
    h = piece.step
    cells = vals.size
    codes = np.arange(cells, dtype=np.intp)
    out = np.empty((flat.size, 2, 2))
    logs = np.empty(flat.size)
    per = max(1, _CHUNK // cells)
    for lo in range(0, flat.size, per):
        e = flat[lo:lo + per]
        m, sc = _constant_matrices(vals[None, :], h, e[:, None])
        prod, lg = _backend.word_product(m, codes)
        out[lo:lo + per] = prod
        logs[lo:lo + per] = lg + sc.sum(axis=1)
    return out.reshape(np.shape(E) + (2, 2)), logs.reshape(np.shape(E))


def piece_matrix(piece: PotentialPiece, E: float) -> TransferMatrix:
    if not np.isfinite(E):
        raise DomainError(f"energy must be finite, got {E!r}")
    m, scale = piece_matrices(piece, float(E))
    return TransferMatrix(m, float(scale))


def letter_matrices(model: Model, E):
    """Transfer matrices of every letter: shape ``(..., n_letters, 2, 2)`` plus log scales."""
    E = np.asarray(E, dtype=float)
    mats, scales = zip(*(piece_matrices(model.pieces[a], E) for a in model.alphabet))
    return np.stack(mats, axis=-3), np.stack(scales, axis=-1)


def word_matrices(model: Model, word: Word, E, backend=None):
    """Batched ``M(w_{k-1}) ... M(w_0)`` over energies: ``(entries, log_scale)``."""
    if len(word) == 0:
        raise DomainError("word must be non-empty")
    E = np.asarray(E, dtype=float)
    flat = np.atleast_1d(E).ravel()
    mats, scales = letter_matrices(model, flat)
    prod, lg = _backend.word_product(mats, word.codes, backend=backend)
    lg = lg + scales @ word.counts().astype(float)
    return prod.reshape(E.shape + (2, 2)), lg.reshape(E.shape)


def word_matrix(model: Model, word: Word, E: float, backend=None) -> TransferMatrix:
    """Transfer matrix across the concatenated potential of ``word`` at energy ``E``."""
    if not np.isfinite(E):
        raise DomainError(f"energy must be finite, got {E!r}")
    m, lg = word_matrices(model, word, float(E), backend=backend)
    return TransferMatrix(m, float(lg))


def half_trace(M) -> float:
    if isinstance(M, TransferMatrix):
        with np.errstate(over="ignore"):
            return float(0.5 * (M.entries[0, 0] + M.entries[1, 1]) * np.exp(M.log_scale))
    M = np.asarray(M, dtype=float)
    return 0.5 * (M[..., 0, 0] + M[..., 1, 1])


def approximant_matrices(model: Model, E, n: int):
    """``M_n(E)`` for the word ``S^n(a)`` via ``M_{n+1} = M_{n-1} M_n``.

    Batched over energies; returns ``(entries, log_scale)``. Equivalent to
    :func:`word_matrices` on ``S^n(a)`` but costs O(n) products.
    """
    a, b = model.designated()
    E = np.asarray(E, dtype=float)
    ma, sa = piece_matrices(model.pieces[a], E)
    mb, sb = piece_matrices(model.pieces[b], E)
    if n == -1:
        return mb, sb
    prev, lprev = mb, sb
    cur, lcur = ma, sa
    for _ in range(n):
        nxt = prev @ cur
        big = np.abs(nxt).max(axis=(-2, -1))
        lnxt = lprev + lcur
        resc = big > 1e100
        if np.any(resc):
            nxt = np.where(resc[..., None, None], nxt / np.where(resc, big, 1.0)[..., None, None], nxt)
            lnxt = lnxt + np.where(resc, np.log(np.where(resc, big, 1.0)), 0.0)
        prev, lprev, cur, lcur = cur, lcur, nxt, lnxt
    return cur, lcur


def log_growth_bound(model: Model, word: Word, E: float) -> float:
    """Log of ``exp(int max(1, |V - E|) dx)`` over the word.

    A point interaction contributes the log of its jump matrix's norm.
    """
    per_letter = {}
    for a, piece in model.pieces.items():
        if isinstance(piece, Constant):
            per_letter[a] = piece.length * max(1.0, abs(piece.value - E))
        elif isinstance(piece, PointInteraction):
            jump = np.array([[1.0, 0.0], [piece.strength, 1.0]])
            per_letter[a] = piece.length * max(1.0, abs(E)) + float(np.log(spectral_norm(jump)))
        elif isinstance(piece, Sampled):
            per_letter[a] = float(np.sum(piece.step * np.maximum(1.0, np.abs(piece.cell_values - E))))
        else:
            raise TypeError(f"unsupported piece type {type(piece).__name__}")
    counts = word.counts()
    return float(sum(per_letter[a] * counts[i] for i, a in enumerate(model.alphabet.letters)))


def growth_bound(model: Model, word: Word, E: float) -> float:
    with np.errstate(over="ignore"):
        return float(np.exp(log_growth_bound(model, word, E)))


def _count_constant(u, up, z, ell):
    """Zeros in ``(0, ell]`` of the solution with data ``(u, up)`` on a constant cell."""
    cnt = np.zeros(z.shape, dtype=np.int64)
    pos = z > 0
    if pos.any():
        k = np.sqrt(z[pos])
        phi = np.arctan2(u[pos] * k, up[pos])
        cnt[pos] = (np.floor((k * ell + phi) / np.pi) - np.floor(phi / np.pi)).astype(np.int64)
    return cnt, pos


def dirichlet_zero_count(model: Model, word: Word, E) -> np.ndarray:
    """Number of zeros in ``(0, L]`` of the solution with ``u(0) = 0, u'(0) = 1``.

    By Sturm oscillation this counts the Dirichlet eigenvalues below ``E`` of
    the cell carrying ``word``; batched over energies.
    """
    E = np.atleast_1d(np.asarray(E, dtype=float))
    u = np.zeros(E.shape)
    up = np.ones(E.shape)
    count = np.zeros(E.shape, dtype=np.int64)
    cells = {}
    for q, a in enumerate(model.alphabet.letters):
        piece = model.pieces[a]
        if isinstance(piece, Constant):
            cells[q] = ([(piece.value, piece.length)], 0.0)
        elif isinstance(piece, PointInteraction):
            cells[q] = ([(0.0, piece.length)], piece.strength)
        elif isinstance(piece, Sampled):
            cells[q] = ([(v, piece.step) for v in piece.cell_values], 0.0)
        else:
            raise TypeError(f"unsupported piece type {type(piece).__name__}")
    mats = {}
    for q, (parts, _) in cells.items():
        mats[q] = [_constant_matrices(v, ell, E) for v, ell in parts]
    for q in word.codes:
        parts, jump = cells[int(q)]
        if jump:
            up = up + jump * u
        for (v, ell), (m, _) in zip(parts, mats[int(q)]):
            z = E - v
            cnt, pos = _count_constant(u, up, z, ell)
            nu = m[..., 0, 0] * u + m[..., 0, 1] * up
            nup = m[..., 1, 0] * u + m[..., 1, 1] * up
            other = ~pos
            cnt[other] = ((u[other] * nu[other] < 0) | ((nu[other] == 0) & (u[other] != 0))).astype(np.int64)
            count += cnt
            s = np.maximum(np.abs(nu), np.abs(nup))
            u, up = nu / s, nup / s
    return count
