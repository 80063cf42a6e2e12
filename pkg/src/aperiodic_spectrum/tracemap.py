"""Fibonacci trace map, Fricke-Vogt invariant, trace recursion and level surfaces."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .potential import Model
from .subshift import DomainError
from .transfer import piece_matrices

#: Default cap on trace-recursion depth.
MAX_STEPS = 200
ESCAPE_GUARD = 1e-12
_LOG_SWITCH = 1e100
_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class TraceTriple:
    """The point ``(x_{n+1}, x_n, x_{n-1})``.

    Coordinates beyond the float range are ``+-inf``; ``log_magnitude`` then
    holds the log-absolute values of all three.
    """

    x_next: float
    x_cur: float
    x_prev: float
    log_magnitude: tuple | None = None

    @property
    def escaped(self) -> bool:
        return self.log_magnitude is not None

    def as_array(self) -> np.ndarray:
        return np.array([self.x_next, self.x_cur, self.x_prev])

    def __iter__(self):
        return iter((self.x_next, self.x_cur, self.x_prev))


def trace_map_step(p) -> TraceTriple:
    """``T(x, y, z) = (2xy - z, x, y)``."""
    x, y, z = (float(v) for v in p)
    new = 2.0 * x * y - z
    if math.isfinite(new):
        return TraceTriple(new, x, y)
    if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
        raise DomainError("trace_map_step needs a finite point")
    logs = (_LOG2 + _log_abs(x) + _log_abs(y), _log_abs(x), _log_abs(y))
    return TraceTriple(math.copysign(math.inf, x * y), x, y, logs)


def inverse_trace_map_step(p) -> TraceTriple:
    """``T^{-1}(x, y, z) = (y, z, 2yz - x)``."""
    x, y, z = (float(v) for v in p)
    return TraceTriple(y, z, 2.0 * y * z - x)


def fricke_vogt(p) -> float:
    """``I(x, y, z) = x^2 + y^2 + z^2 - 2xyz - 1``; accepts arrays for each coordinate."""
    x, y, z = p if not isinstance(p, TraceTriple) else (p.x_next, p.x_cur, p.x_prev)
    x, y, z = np.asarray(x, dtype=float), np.asarray(y, dtype=float), np.asarray(z, dtype=float)
    out = x * x + y * y + z * z - 2.0 * x * y * z - 1.0
    return float(out) if out.ndim == 0 else out


def bounded_component_candidate(p) -> bool:
    """Heuristic tag for the bounded piece of ``{I < 0}``: all coordinates in ``[-1, 1]``."""
    x, y, z = (float(v) for v in p)
    return max(abs(x), abs(y), abs(z)) <= 1.0 and fricke_vogt((x, y, z)) < 0


def fricke_vogt_gradient(x, y, z):
    return np.stack([2 * x - 2 * y * z, 2 * y - 2 * x * z, 2 * z - 2 * x * y], axis=-1)


def initial_conditions_array(model: Model, E):
    """Batched ``(x_1, x_0, x_{-1})``: half traces of ``M_b M_a``, ``M_a`` and ``M_b``."""
    a, b = model.designated()
    E = np.asarray(E, dtype=float)
    ma, sa = piece_matrices(model.pieces[a], E)
    mb, sb = piece_matrices(model.pieces[b], E)
    mba = mb @ ma
    with np.errstate(over="ignore", invalid="ignore"):
        x1 = 0.5 * (mba[..., 0, 0] + mba[..., 1, 1]) * np.exp(sa + sb)
        x0 = 0.5 * (ma[..., 0, 0] + ma[..., 1, 1]) * np.exp(sa)
        xm1 = 0.5 * (mb[..., 0, 0] + mb[..., 1, 1]) * np.exp(sb)
    return x1, x0, xm1


def initial_conditions(model: Model, E: float) -> TraceTriple:
    x1, x0, xm1 = initial_conditions_array(model, float(E))
    return TraceTriple(float(x1), float(x0), float(xm1))


def invariant_of_energy(model: Model, E):
    """``I(E)``: the Fricke-Vogt invariant along the curve of initial conditions.

    Evaluated as ``-det(K) / 4`` with the commutator ``K = M_a M_b - M_b M_a``,
    which equals ``I(x_1, x_0, x_{-1})`` for unimodular matrices but avoids
    the cancellation of the cubic when the half traces are large; commuting
    letters (the free case) give exactly zero.
    """
    a, b = model.designated()
    E = np.asarray(E, dtype=float)
    ma, sa = piece_matrices(model.pieces[a], E)
    mb, sb = piece_matrices(model.pieces[b], E)
    k = ma @ mb - mb @ ma
    h = 0.5 * (k[..., 0, 0] - k[..., 1, 1])
    with np.errstate(over="ignore", invalid="ignore"):
        out = 0.25 * (h * h + k[..., 0, 1] * k[..., 1, 0]) * np.exp(2.0 * (sa + sb))
    return float(out) if out.ndim == 0 else out


def _log_abs(x):
    return math.log(abs(x)) if x != 0 else -math.inf


def _slog_add(s1, l1, s2, l2):
    if s1 == 0 or l1 == -math.inf:
        return s2, l2
    if s2 == 0 or l2 == -math.inf:
        return s1, l1
    if l2 > l1:
        s1, l1, s2, l2 = s2, l2, s1, l1
    d = math.exp(l2 - l1)
    if s1 == s2:
        return s1, l1 + math.log1p(d)
    if d >= 1.0:
        return 0.0, -math.inf
    return s1, l1 + math.log1p(-d)


def _sign(x):
    return math.copysign(1.0, x) if x != 0 else 0.0


@dataclass(frozen=True)
class OrbitRecord:
    """Trace orbit ``x_{-1}, x_0, ..., x_{n_max}`` at one energy.

    ``values[k]`` holds ``x_{k-1}``; entries beyond the float range are
    ``+-inf`` and ``log_abs`` keeps their log-magnitudes.
    """

    initial: TraceTriple
    invariant_value: float
    values: np.ndarray
    log_abs: np.ndarray
    escape_index: int | None
    undetermined: bool = False
    n_max: int = field(default=0)

    def x(self, n: int) -> float:
        return float(self.values[n + 1])

    @property
    def steps(self) -> list[TraceTriple]:
        out = []
        for k in range(2, self.values.size):
            v = self.values[k - 2:k + 1][::-1]
            logs = tuple(self.log_abs[k - 2:k + 1][::-1]) if not np.isfinite(v).all() else None
            out.append(TraceTriple(*v, logs))
        return out


def escape_test(xn1, xn, xnm1, guard=ESCAPE_GUARD) -> bool:
    """``|x_{n+1}| > 1``, ``|x_n| > 1`` and ``|x_{n+1} x_n| > |x_{n-1}|`` with a guard band."""
    return abs(xn1) > 1 + guard and abs(xn) > 1 + guard and abs(xn1 * xn) > abs(xnm1) + guard


def orbit_from_triple(triple, n_max: int = MAX_STEPS, guard: float = ESCAPE_GUARD) -> OrbitRecord:
    """Iterate ``x_{n+1} = 2 x_n x_{n-1} - x_{n-2}`` from ``(x_1, x_0, x_{-1})`` up to ``x_{n_max}``."""
    if n_max > MAX_STEPS:
        raise DomainError(f"n_max={n_max} exceeds the cap {MAX_STEPS}")
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    x1, x0, xm1 = (float(v) for v in triple)
    vals = [xm1, x0, x1]
    signs = [_sign(v) for v in vals]
    logs = [_log_abs(v) for v in vals]
    logmode = not all(math.isfinite(v) and abs(v) <= _LOG_SWITCH for v in vals)
    gpos, gneg = math.log1p(guard), math.log1p(-guard)
    escape = None
    ambiguous = False
    for m in range(0, n_max):
        # triple (x_{m+1}, x_m, x_{m-1}) sits at vals[m+2], vals[m+1], vals[m]
        la, lb, lc = logs[m + 2], logs[m + 1], logs[m]
        if not logmode:
            a, b, c = vals[m + 2], vals[m + 1], vals[m]
            strict = escape_test(a, b, c, guard)
            loose = abs(a) > 1 + guard and abs(b) > 1 + guard and abs(a * b) > abs(c) - guard
        else:
            strict = la > gpos and lb > gpos and la + lb > lc + gpos
            loose = la > gpos and lb > gpos and la + lb > lc + gneg
        if strict and escape is None:
            escape = m
        elif loose and not strict:
            ambiguous = True
        if m + 2 > n_max:
            break
        if not logmode:
            t = 2.0 * vals[m + 2] * vals[m + 1] - vals[m]
            if math.isfinite(t) and abs(t) <= _LOG_SWITCH:
                vals.append(t)
                signs.append(_sign(t))
                logs.append(_log_abs(t))
                continue
            logmode = True
        s, l = _slog_add(signs[m + 2] * signs[m + 1], _LOG2 + logs[m + 2] + logs[m + 1], -signs[m], logs[m])
        signs.append(s)
        logs.append(l)
        vals.append(s * math.exp(l) if l < 709.0 else s * math.inf)
    invariant = fricke_vogt((x1, x0, xm1)) if all(math.isfinite(v) for v in (x1, x0, xm1)) else math.inf
    return OrbitRecord(
        initial=TraceTriple(x1, x0, xm1),
        invariant_value=invariant,
        values=np.array(vals),
        log_abs=np.array(logs),
        escape_index=escape,
        undetermined=ambiguous and escape is None,
        n_max=n_max,
    )


def trace_recursion(model: Model, E: float, n_max: int = MAX_STEPS, guard: float = ESCAPE_GUARD) -> OrbitRecord:
    """Trace orbit of the energy ``E`` with escape detection."""
    return orbit_from_triple(initial_conditions(model, E), n_max, guard)


# -- level surfaces -----------------------------------------------------------

@dataclass(frozen=True)
class SurfaceMesh:
    level: float
    vertices: np.ndarray
    faces: np.ndarray

    def residuals(self) -> np.ndarray:
        v = self.vertices
        return np.abs(fricke_vogt((v[:, 0], v[:, 1], v[:, 2])) - self.level)

    def component_labels(self) -> np.ndarray:
        from scipy.sparse import coo_matrix
        from scipy.sparse.csgraph import connected_components

        f = self.faces
        n = self.vertices.shape[0]
        rows = np.concatenate([f[:, 0], f[:, 1], f[:, 2]])
        cols = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
        graph = coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
        _, labels = connected_components(graph, directed=False)
        return labels

    def n_components(self) -> int:
        used = np.unique(self.faces)
        return int(np.unique(self.component_labels()[used]).size)

    def write_obj(self, path, header: str | None = None):
        path = Path(path)
        with path.open("w") as fh:
            if header:
                fh.write(f"# {header}\n")
            fh.write(f"# level surface I(x,y,z) = {self.level!r}\n")
            for x, y, z in self.vertices:
                fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
            for a, b, c in self.faces + 1:
                fh.write(f"f {a} {b} {c}\n")

    def write_csv(self, path, header: str | None = None):
        path = Path(path)
        with path.open("w") as fh:
            if header:
                fh.write(f"# {header}\n")
            fh.write("x,y,z,triangle_id\n")
            for t, face in enumerate(self.faces):
                for x, y, z in self.vertices[face]:
                    fh.write(f"{x:.17g},{y:.17g},{z:.17g},{t}\n")


def surface_mesh(level: float, bounds: float = 3.0, resolution: int = 64,
                 tol: float = 1e-3, max_newton: int = 8) -> SurfaceMesh:
    """Triangulate ``{I = level}`` inside ``[-bounds, bounds]^3`` by marching cubes.

    Each vertex is then pulled onto the surface by Newton steps along the
    gradient of ``I`` until ``|I(v) - level| <= tol``; the first step is
    always taken.
    """
    from skimage.measure import marching_cubes

    if resolution < 8:
        raise DomainError("resolution must be at least 8")
    axis = np.linspace(-bounds, bounds, resolution)
    X, Y, Z = np.meshgrid(axis, axis, axis, indexing="ij")
    field_ = fricke_vogt((X, Y, Z))
    h = axis[1] - axis[0]
    if not field_.min() < level < field_.max():
        return SurfaceMesh(float(level), np.empty((0, 3)), np.empty((0, 3), dtype=np.int64))
    verts, faces, _, _ = marching_cubes(field_, level=level, spacing=(h, h, h), allow_degenerate=False)
    verts = verts - bounds
    for it in range(max_newton):
        r = fricke_vogt((verts[:, 0], verts[:, 1], verts[:, 2])) - level
        if it > 0 and np.all(np.abs(r) <= tol):
            break
        g = fricke_vogt_gradient(verts[:, 0], verts[:, 1], verts[:, 2])
        g2 = np.sum(g * g, axis=1)
        ok = g2 > 1e-24
        step = np.zeros_like(verts)
        step[ok] = (r[ok] / g2[ok])[:, None] * g[ok]
        verts = verts - step
    return SurfaceMesh(float(level), verts, faces.astype(np.int64))
