"""Streaming exponentially weighted moments <Q_m f> anchored at the last tick.

Observables and the measure they are integrated against:

``1``, ``p``
    continuous time, ``int Q_m f omega dt`` from -inf to t_now.  The price is
    piecewise constant, held from one tick until the next, and zero (in
    offset units) before the first tick.
``I``, ``pI``, ``p2I``, ``p3I``
    the traded-volume measure: each tick contributes ``v p^s Q_m(x_l) omega_l``.
``dp``
    price increments: each tick contributes ``(p_l - p_{l-1}) Q_m(x_l) omega_l``
    (the "right sum"; the dt factors cancel, so equal timestamps are fine).

Moments are kept in Q coefficients and moved to a new anchor with the exact
shift matrices of :class:`scalpprice.basis.Basis`.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import Basis, MeasureConfig, get_basis

OBSERVABLES = ("1", "p", "I", "pI", "p2I", "p3I", "dp")
_COL = {name: i for i, name in enumerate(OBSERVABLES)}


class TimeOrderError(ValueError):
    """Tick timestamp earlier than the current anchor."""


class AnchorMismatchError(ValueError):
    """Objects anchored at different times were combined."""


@dataclass(frozen=True)
class TickRecord:
    t: int  # nanoseconds since midnight
    p: float
    v: float


@dataclass(frozen=True)
class MomentSet:
    """Moment vectors for every tracked observable; immutable snapshot."""

    cfg: MeasureConfig
    mu: np.ndarray = field(repr=False)  # (N, len(OBSERVABLES))
    anchor: int | None = None
    p_offset: float = 0.0
    V_now: float = 0.0
    P_last: float = float("nan")
    n_ticks: int = 0

    def __post_init__(self):
        self.mu.setflags(write=False)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.mu[:, _COL[name]]

    @property
    def basis(self) -> Basis:
        return get_basis(self.cfg)

    @property
    def p_last_offset(self) -> float:
        return self.P_last - self.p_offset


def empty_moments(cfg: MeasureConfig) -> MomentSet:
    return MomentSet(cfg, np.zeros((cfg.n_moments, len(OBSERVABLES))))


def ingest_tick(ms: MomentSet, tick: TickRecord) -> MomentSet:
    """Return the moments after one more tick; ``ms`` is left untouched."""
    b = ms.basis
    if ms.anchor is None:
        mu = np.zeros_like(ms.mu)
        mu[:, _COL["1"]] = b.g
        mu[:, _COL["I"]] = tick.v * b.q0
        return MomentSet(ms.cfg, mu, int(tick.t), float(tick.p), float(tick.v), float(tick.p), 1)
    if tick.t < ms.anchor:
        raise TimeOrderError(f"tick at {tick.t} ns precedes anchor {ms.anchor} ns")
    dt = (int(tick.t) - ms.anchor) * 1e-9
    S = b.shift_matrix(dt)
    p_prev = ms.p_last_offset
    mu = S @ ms.mu
    mu[:, _COL["1"]] = b.g
    mu[:, _COL["p"]] += p_prev * b.hold_increments(dt)[0]
    p = float(tick.p) - ms.p_offset
    v = float(tick.v)
    q0 = b.q0
    mu[:, _COL["I"]] += v * q0
    mu[:, _COL["pI"]] += v * p * q0
    mu[:, _COL["p2I"]] += v * p * p * q0
    mu[:, _COL["p3I"]] += v * p * p * p * q0
    mu[:, _COL["dp"]] += (p - p_prev) * q0
    return MomentSet(ms.cfg, mu, int(tick.t), ms.p_offset, ms.V_now + v, float(tick.p),
                     ms.n_ticks + 1)


def ingest_all(ms: MomentSet, ticks) -> MomentSet:
    for tick in ticks:
        ms = ingest_tick(ms, tick)
    return ms


def shift_moments(ms: MomentSet, dt: float) -> MomentSet:
    """Move the anchor forward by ``dt`` seconds without adding a tick."""
    if ms.anchor is None:
        raise AnchorMismatchError("empty moment set has no anchor")
    b = ms.basis
    S = b.shift_matrix(dt)
    mu = S @ ms.mu
    mu[:, _COL["1"]] = b.g
    mu[:, _COL["p"]] += ms.p_last_offset * b.hold_increments(dt)[0]
    return replace(ms, mu=mu, anchor=ms.anchor + int(round(dt * 1e9)))


def aggregated_moments(ms: MomentSet) -> dict[str, np.ndarray]:
    """Moments of the aggregated observables by integration by parts.

    ``V0(t) = V(t_now) - V(t)`` and ``V1`` the matching traded capital are
    built from the I and pI moments; ``T0(t) = t_now - t`` and ``T1`` (the
    time integral of price) from the time moments of 1 and p.  In every case
    ``<Q_m X> = <J(Q_m) x>`` where x is the rate of X.
    """
    Jt = ms.basis.J.T
    return {
        "V0": Jt @ ms["I"],
        "V1": Jt @ ms["pI"],
        "T0": Jt @ ms["1"],
        "T1": Jt @ ms["p"],
    }


class Boundary(enum.Enum):
    LAMBDA_IH = "LambdaIH"
    ZERO_DI_PSI0 = "ZeroDIPsi0"
    I0 = "I0"
    ZERO = "Zero"


def didt_operator(ms: MomentSet | Basis, I_matrix, boundary: Boundary | float | str,
                  G=None) -> np.ndarray:
    """Matrix of the time derivative of an observable given its matrix.

    ``<Q_j|dI/dt|Q_k> = I_f Q_j(x0) Q_k(x0) - <D Q_j|I|Q_k> - <Q_j|I|D Q_k>``
    where D is the measure-weighted shift (d/dt plus 1/(2 tau)) so that the
    identity holds exactly on the polynomial subspace.  ``boundary`` is either
    a :class:`Boundary` option or an explicit boundary value ``I_f``.
    """
    from .operators import solve_gev

    b = ms if isinstance(ms, Basis) else ms.basis
    A = np.asarray(I_matrix, dtype=float)
    n_eff = A.shape[0]
    G = b.G[:n_eff, :n_eff] if G is None else np.asarray(G, dtype=float)
    Dw = b.Dw[:n_eff, :n_eff]
    q0 = b.q0[:n_eff]
    core = Dw.T @ A + A @ Dw
    if isinstance(boundary, str):
        boundary = Boundary(boundary)
    if isinstance(boundary, Boundary):
        if boundary is Boundary.ZERO:
            value = 0.0
        elif boundary is Boundary.LAMBDA_IH:
            value = float(solve_gev(A, G).eigenvalues[-1])
        else:
            alpha = np.linalg.solve(G, q0)
            alpha /= np.sqrt(q0 @ alpha)
            if boundary is Boundary.I0:
                value = float(alpha @ A @ alpha)
            else:
                value = float(alpha @ core @ alpha) / float(q0 @ alpha) ** 2
    else:
        value = float(boundary)
    return value * np.outer(q0, q0) - core
