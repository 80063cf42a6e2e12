"""Closed-form references for the free, step and Kronig-Penney Fibonacci models.

Both special models use unit lengths. In the step model letter ``a`` carries
the constant ``lam`` and ``b`` is free; in the Kronig-Penney model ``a``
carries a point interaction of strength ``lam`` at its left end.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .potential import Constant, Model, PointInteraction, fibonacci_model
from .subshift import DomainError
from .tracemap import TraceTriple
from .transfer import cos_sin_entire

FREE = "free"
STEP = "step"
KRONIG_PENNEY = "kronig-penney"

#: Distance from the branch points ``0`` and ``lam`` below which the entire forms are used.
BRANCH_EPS = 1e-3


@dataclass(frozen=True)
class ClosedFormModel:
    kind: str
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in (FREE, STEP, KRONIG_PENNEY):
            raise DomainError(f"unknown closed-form model kind {self.kind!r}")
        if not math.isfinite(self.lam):
            raise DomainError("coupling must be finite")
        if self.kind == STEP and self.lam < 0:
            raise DomainError("the step model needs lam >= 0")
        if self.kind == FREE and self.lam != 0:
            raise DomainError("the free model has no coupling")
        # zero coupling is the free model
        if self.kind != FREE and self.lam == 0:
            object.__setattr__(self, "kind", FREE)

    @classmethod
    def free(cls):
        return cls(FREE)

    @classmethod
    def step(cls, lam: float):
        return cls(STEP, float(lam))

    @classmethod
    def kronig_penney(cls, lam: float):
        return cls(KRONIG_PENNEY, float(lam))

    def to_model(self) -> Model:
        """The numeric :class:`Model` described by this closed form."""
        if self.kind == STEP:
            a = Constant(self.lam, 1.0)
        elif self.kind == KRONIG_PENNEY:
            a = PointInteraction(self.lam, 1.0)
        else:
            a = Constant(0.0, 1.0)
        return fibonacci_model(a, Constant(0.0, 1.0), name=self.kind, lam=self.lam)


def _s(z):
    c, s, scale = cos_sin_entire(z, 1.0)
    with np.errstate(over="ignore"):
        return s * np.exp(scale)


def closed_form_invariant(m: ClosedFormModel, E):
    """``I(E)`` for the closed-form models, scalar or array.

    The step and Kronig-Penney formulas are written through the entire
    function ``s(z) = sin(sqrt z) / sqrt z``, which stays finite at ``E = 0``
    and ``E = lam`` and continues to negative arguments via ``sinh``.
    """
    E_arr = np.asarray(E, dtype=float)
    if m.kind == FREE:
        out = np.zeros(E_arr.shape)
    elif m.kind == STEP:
        out = 0.25 * m.lam ** 2 * _s(E_arr) ** 2 * _s(E_arr - m.lam) ** 2
    else:
        out = 0.25 * m.lam ** 2 * _s(E_arr) ** 2
    return float(out) if out.ndim == 0 else out


def extended_branch(m: ClosedFormModel, E) -> np.ndarray | bool:
    """True where ``E < 0`` and the closed forms are used through their hyperbolic continuation."""
    out = np.asarray(E, dtype=float) < 0
    return bool(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ClosedFormInitials:
    """Initial conditions ``(x_1, x_0, x_{-1})`` from the closed forms.

    ``matrix`` is consistent with the transfer matrices of the model. For
    Kronig-Penney, ``display`` keeps the alternative ``x_0 = cos 2 sqrt(E) +
    lam sin(sqrt E) / (2 sqrt E)``; ``variant`` names the one that reproduces
    the invariant.
    """

    matrix: TraceTriple
    display: TraceTriple | None = None
    variant: str = "matrix"


def _step_initials(lam, E):
    k2, q2 = E, E - lam
    if min(abs(k2), abs(q2)) < BRANCH_EPS or E < 0:
        ca, sa, ea = cos_sin_entire(q2, 1.0)
        cb, sb, eb = cos_sin_entire(k2, 1.0)
        ca, sa = ca * math.exp(ea), sa * math.exp(ea)
        cb, sb = cb * math.exp(eb), sb * math.exp(eb)
        return float(ca * cb - 0.5 * (k2 + q2) * sa * sb), float(ca), float(cb)
    k = math.sqrt(E)
    if E > lam:
        q = math.sqrt(E - lam)
        x1 = math.cos(k) * math.cos(q) - 0.5 * (k / q + q / k) * math.sin(k) * math.sin(q)
        return x1, math.cos(q), math.cos(k)
    kap = math.sqrt(lam - E)
    x1 = math.cos(k) * math.cosh(kap) + 0.5 * (kap / k - k / kap) * math.sin(k) * math.sinh(kap)
    return x1, math.cosh(kap), math.cos(k)


def closed_form_initials(m: ClosedFormModel, E: float) -> ClosedFormInitials:
    """Regime-wise closed forms of ``(x_1, x_0, x_{-1})``.

    Step model, ``E > lam``::

        x_{-1} = cos k,  x_0 = cos q,
        x_1 = cos k cos q - (k/q + q/k) sin k sin q / 2

    with ``k = sqrt E`` and ``q = sqrt(E - lam)``; for ``0 < E < lam`` the
    ``q`` terms turn hyperbolic with ``kappa = sqrt(lam - E)``::

        x_1 = cos k cosh kappa + (kappa/k - k/kappa) sin k sinh kappa / 2

    Near ``E = 0``, ``E = lam`` and for ``E < 0`` the entire forms are used.
    """
    E = float(E)
    if not math.isfinite(E):
        raise DomainError("energy must be finite")
    if m.kind == STEP:
        return ClosedFormInitials(TraceTriple(*_step_initials(m.lam, E)))
    c1, s1, e1 = cos_sin_entire(E, 1.0)
    c2, s2, e2 = cos_sin_entire(E, 2.0)
    c1, s1 = float(c1 * math.exp(e1)), float(s1 * math.exp(e1))
    c2, s2 = float(c2 * math.exp(e2)), float(s2 * math.exp(e2))
    if m.kind == FREE:
        return ClosedFormInitials(TraceTriple(c2, c1, c1))
    lam = m.lam
    x1 = c2 + 0.5 * lam * s2
    matrix = TraceTriple(x1, c1 + 0.5 * lam * s1, c1)
    display = TraceTriple(x1, c2 + 0.5 * lam * s1, c1)
    return ClosedFormInitials(matrix, display, "matrix")


def closed_form_of(model: Model) -> ClosedFormModel | None:
    """Recognise a numeric model as one of the closed forms, else ``None``."""
    if not model.is_fibonacci:
        return None
    a, b = model.designated()
    pa, pb = model.pieces[a], model.pieces[b]
    if pa.length != 1.0 or pb.length != 1.0:
        return None
    if not (isinstance(pb, Constant) and pb.value == 0):
        return None
    if isinstance(pa, Constant) and pa.value >= 0:
        return ClosedFormModel.step(pa.value)
    if isinstance(pa, PointInteraction):
        return ClosedFormModel.kronig_penney(pa.strength)
    return None
