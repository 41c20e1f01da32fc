"""Scalp function, directional attributes and the scalp price.

The scalp function ``S = <psi_IH|psi_0>^2`` measures how much the current
moment belongs to the state of maximal execution flow.  Each tick produces a
directional attribute ``F_l`` (one of :class:`FlKind`); the scalp price is the
running sum of ``(t_l - t_{l-1}) F_l`` and DIR/aDIR are its averages in the
maximal-flow state.

Accumulation always works with the product ``fdt = (t_l - t_{l-1}) F_l``:
tick-difference attributes are defined through it and never divided by dt.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import Basis, MeasureConfig, get_basis
from .moments import AnchorMismatchError

NAN = float("nan")


class FlKind(enum.Enum):
    SAMPLE_DP_NOSCALP = "F_SAMPLE_DP_NOSCALP"
    SAMPLE_DP_SCALP = "F_SAMPLE_DP_SCALP"
    DPDT0_SCALP = "F_dpdt0_SCALP"
    PIPT0_SCALP = "F_pIpt0_SCALP"
    DPDT_IH_SCALP = "F_dpdtIH_SCALP"
    VAR_PI_IH = "F_varpIH"
    VAR_PI_IH_DPI = "F_varpIH_dPI"
    VAR_PI_IH_00 = "F_varpIH_0_divI_SCALP"
    P0_PIH_SCALP = "F_p0pIH_SCALP"
    SKEWNESS_SCALP = "F_SKEWNESS_SCALP"
    SKEWNESS_PL_2D = "F_SKEWNESS_at_Pl_SCALP"
    PROBCORR_2D_SCALP = "F_PROBABILITYCORRELATION_SCALP"
    NONLOCAL_PIH = "F_dpIH_NONLOCAL"

    @classmethod
    def parse(cls, token: str) -> "FlKind":
        for kind in cls:
            if token in (kind.name, kind.value):
                return kind
        raise ValueError(f"unknown directional attribute {token!r}")

    @property
    def is_2d(self) -> bool:
        return self in (FlKind.SKEWNESS_PL_2D, FlKind.PROBCORR_2D_SCALP)

    @property
    def from_moments(self) -> bool:
        """True when F_l is a rate computed from moments (not a tick difference)."""
        return self not in (FlKind.SAMPLE_DP_NOSCALP, FlKind.SAMPLE_DP_SCALP,
                            FlKind.NONLOCAL_PIH)


class ZKind(enum.Enum):
    UNIT = "unit"
    ABS_DP_DT = "abs_dp_dt"
    DV_DT = "dV_dt"
    EIGEN_GAP = "eigen_gap"
    SCALP_DV = "scalp_dV"
    SCALP_DLAMBDA = "scalp_dLambda"

    @classmethod
    def parse(cls, token: str) -> "ZKind":
        for kind in cls:
            if token in (kind.name, kind.value):
                return kind
        raise ValueError(f"unknown z option {token!r}")


_Z_2D = (ZKind.UNIT, ZKind.ABS_DP_DT, ZKind.DV_DT, ZKind.EIGEN_GAP)
_Z_NONLOCAL = (ZKind.UNIT, ZKind.SCALP_DV, ZKind.SCALP_DLAMBDA)


@dataclass(frozen=True)
class FlVariant:
    kind: FlKind = FlKind.PROBCORR_2D_SCALP
    z: ZKind | None = None

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, FlKind) else FlKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        z = self.z
        if z is not None and not isinstance(z, ZKind):
            z = ZKind.parse(z)
        if kind.is_2d:
            z = ZKind.EIGEN_GAP if z is None else z
            if z not in _Z_2D:
                raise ValueError(f"z option {z.value} does not apply to {kind.value}")
        elif kind is FlKind.NONLOCAL_PIH:
            z = ZKind.UNIT if z is None else z
            if z not in _Z_NONLOCAL:
                raise ValueError(f"z option {z.value} does not apply to {kind.value}")
        elif z is not None:
            raise ValueError(f"{kind.value} takes no z option")
        object.__setattr__(self, "z", z)


def scalp_function(summary) -> float:
    """``wH^2``; 1 for a flat spectrum by convention."""
    return 1.0 if summary.flat else float(summary.wH) ** 2


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoStatePencil:
    lam: np.ndarray  # ascending price estimates (offset units)
    alpha: np.ndarray  # columns: coefficients over the two spanning states, I-normalised
    phi_x0: np.ndarray  # phi^[i](x0)
    degenerate: bool

    @property
    def probability_correlation(self) -> float:
        if self.degenerate:
            return NAN
        a, b = self.phi_x0 ** 2
        return float((b - a) / (a + b)) if a + b > 0 else NAN

    def skewness_at(self, price: float) -> float:
        if self.degenerate:
            return NAN
        l0, l1 = self.lam
        return float((2 * price - l0 - l1) / (l0 - l1))


def _degenerate_pencil() -> TwoStatePencil:
    return TwoStatePencil(np.full(2, NAN), np.full((2, 2), NAN), np.full(2, NAN), True)


def two_state_pencil(psi0, psi_IH, pI, I, q0, G=None) -> TwoStatePencil:
    """Price pencil ``(pI, I)`` restricted to the span of psi0 and psi_IH.

    With the metric ``G`` the span is parametrised by psi_IH and the G-unit
    part of psi0 orthogonal to it, which keeps the 2x2 problem well
    conditioned when the states nearly coincide; states closer than
    ``1 - 1e-10`` in squared projection are reported degenerate.
    """
    psi0 = np.asarray(psi0, dtype=float)
    psi_IH = np.asarray(psi_IH, dtype=float)
    if G is None:
        S = np.column_stack([psi0, psi_IH])
    else:
        u = psi_IH / math.sqrt(float(psi_IH @ G @ psi_IH))
        v = psi0 / math.sqrt(float(psi0 @ G @ psi0))
        d = v - float(u @ G @ v) * u
        rho2 = float(d @ G @ d)
        if rho2 < 1e-10:
            return _degenerate_pencil()
        S = np.column_stack([u, d / math.sqrt(rho2)])
    A = S.T @ pI @ S
    B = S.T @ I @ S
    lam, alpha, ok = _pencil2(A[0, 0], A[0, 1], A[1, 1], B[0, 0], B[0, 1], B[1, 1])
    if not ok:
        return replace(_degenerate_pencil(), lam=lam)
    return TwoStatePencil(lam, alpha, (q0[: len(psi0)] @ S) @ alpha, False)


def _pencil2(a00, a01, a11, b00, b01, b11):
    """Ascending eigenpairs of a 2x2 symmetric-definite pencil (scalar inputs)."""
    lam, alpha, ok = pencil2_batch(*(np.atleast_1d(np.asarray(v, dtype=float))
                                     for v in (a00, a01, a11, b00, b01, b11)))
    return lam[0], alpha[0], bool(ok[0])


def pencil2_batch(a00, a01, a11, b00, b01, b11):
    """Vectorised 2x2 pencil solve; returns (lam (M,2), alpha (M,2,2), ok (M,)).

    ``ok`` is False when the metric block is singular or the two eigenvalues
    coincide; in the latter case ``lam`` is still returned.
    """
    det = b00 * b11 - b01 * b01
    ok = (b00 > 0) & (b11 > 0) & (det > 1e-12 * b00 * b11)
    l11 = np.sqrt(np.where(ok, b00, 1.0))
    l21 = np.where(ok, b01, 0.0) / l11
    l22 = np.sqrt(np.where(ok, b11 - l21 * l21, 1.0))
    # C = L^{-1} A L^{-T}
    c00 = a00 / (l11 * l11)
    c01 = (a01 - l21 * a00 / l11) / (l11 * l22)
    c11 = (a11 - 2 * l21 * a01 / l11 + l21 * l21 * a00 / (l11 * l11)) / (l22 * l22)
    M = np.empty(a00.shape + (2, 2))
    M[..., 0, 0] = np.where(ok, c00, 0.0)
    M[..., 0, 1] = M[..., 1, 0] = np.where(ok, c01, 0.0)
    M[..., 1, 1] = np.where(ok, c11, 0.0)
    lam, Y = np.linalg.eigh(M)
    # alpha = L^{-T} y
    alpha = np.empty_like(Y)
    alpha[..., 1, :] = Y[..., 1, :] / l22[..., None]
    alpha[..., 0, :] = (Y[..., 0, :] - l21[..., None] * alpha[..., 1, :]) / l11[..., None]
    lam = np.where(ok[..., None], lam, NAN)
    # a double eigenvalue leaves the eigenvectors arbitrary: no direction to read
    ok &= lam[..., 1] - lam[..., 0] > 1e-12 * np.abs(lam).max(axis=-1)
    alpha = np.where(ok[..., None, None], alpha, NAN)
    return lam, alpha, ok


@dataclass(frozen=True)
class SkewnessQuadrature:
    p_min: float
    p_max: float
    w_min: float
    w_max: float
    gamma: float
    mean: float
    degenerate: bool


def skewness_quadrature(pi0, pi1, pi2, pi3) -> SkewnessQuadrature:
    """Two-point Gauss quadrature matching power moments pi0..pi3."""
    out = skewness_quadrature_batch(*(np.atleast_1d(np.asarray(v, dtype=float))
                                      for v in (pi0, pi1, pi2, pi3)))
    return SkewnessQuadrature(*(float(v[0]) for v in out[:6]), bool(out[6][0]))


def skewness_quadrature_batch(pi0, pi1, pi2, pi3):
    """Vectorised form; returns p_min, p_max, w_min, w_max, gamma, mean, degenerate."""
    valid = pi0 > 0
    safe0 = np.where(valid, pi0, 1.0)
    mean = np.where(valid, pi1 / safe0, NAN)
    # work with centred moments for stability
    m2 = pi2 / safe0 - mean * mean
    m3 = pi3 / safe0 - 3 * mean * pi2 / safe0 + 2 * mean ** 3
    scale = pi2 / safe0
    degenerate = ~valid | (m2 <= 1e-12 * np.maximum(scale, 1e-300))
    m2s = np.where(degenerate, 1.0, m2)
    # monic orthogonal polynomial of degree 2 on the centred measure:
    # y^2 - (m3/m2) y - m2
    b = m3 / m2s
    disc = np.sqrt(b * b + 4 * m2s)
    y_lo = 0.5 * (b - disc)
    y_hi = 0.5 * (b + disc)
    p_min = np.where(degenerate, mean, mean + y_lo)
    p_max = np.where(degenerate, mean, mean + y_hi)
    span = np.where(degenerate, 1.0, y_hi - y_lo)
    w_max = np.where(degenerate, 0.5, -y_lo / span) * np.where(valid, pi0, NAN)
    w_min = np.where(degenerate, 0.5, y_hi / span) * np.where(valid, pi0, NAN)
    gamma = np.where(degenerate, 0.0, (2 * mean - p_min - p_max) / np.where(degenerate, 1.0, p_min - p_max))
    return p_min, p_max, w_min, w_max, gamma, mean, degenerate


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TickContext:
    """Everything one tick's attribute needs; prices in offset units."""

    S: float  # scalp function
    dt: float  # seconds since previous tick (0 on the first)
    dp: float  # raw price change since previous tick
    dv: float  # shares of this tick
    p_last: float
    c0: float  # psi_0(x0)^2
    s0: float
    lam_IH: float
    p0_v: float
    p0_t: float
    dpdt0: float
    pIH_v: float
    dpdt_IH: float
    var1: float
    var1_00: float
    var_dpi: float
    skew_gamma: float
    skew_span: float  # p_max - p_min from the two-point quadrature
    pencil: TwoStatePencil
    dIH: float
    dp_IH: float
    theta: float


def _nz(x: float) -> float:
    return 0.0 if not math.isfinite(x) else x


def compute_Fl(variant: FlVariant, ctx: TickContext) -> tuple[float, float]:
    """Return ``(fdt, rate)``: the scalp-price increment and the moment rate.

    ``rate`` is F_l itself for moment-derived attributes and NaN for
    tick-difference ones.  Undefined inputs contribute zero to ``fdt``.
    """
    k = variant.kind
    S = ctx.S
    dt = ctx.dt
    if k is FlKind.SAMPLE_DP_NOSCALP:
        return ctx.dp, NAN
    if k is FlKind.SAMPLE_DP_SCALP:
        return ctx.dp * S, NAN
    if k is FlKind.NONLOCAL_PIH:
        z = {ZKind.UNIT: 1.0, ZKind.SCALP_DV: S * ctx.dv,
             ZKind.SCALP_DLAMBDA: dt * S * ctx.dIH}[variant.z]
        return _nz(z * ctx.dp_IH * ctx.theta), NAN
    if k.is_2d:
        pen = ctx.pencil
        if pen.degenerate:
            return 0.0, NAN
        if k is FlKind.PROBCORR_2D_SCALP:
            d = pen.probability_correlation
            sign = 1.0
        else:
            d = pen.skewness_at(ctx.p_last)
            sign = -1.0
        gap = float(pen.lam[1] - pen.lam[0])
        zdt, zrate = {
            ZKind.UNIT: (dt, 1.0),
            ZKind.ABS_DP_DT: (abs(ctx.dp), abs(ctx.dp) / dt if dt > 0 else NAN),
            ZKind.DV_DT: (ctx.dv, ctx.dv / dt if dt > 0 else NAN),
            ZKind.EIGEN_GAP: (dt * gap, gap),
        }[variant.z]
        return _nz(sign * zdt * d * S), sign * zrate * d * S
    rate = {
        FlKind.DPDT0_SCALP: ctx.dpdt0 * S,
        FlKind.PIPT0_SCALP: ctx.c0 * (ctx.p0_v - ctx.p0_t) * S,
        FlKind.DPDT_IH_SCALP: ctx.dpdt_IH * S,
        FlKind.VAR_PI_IH: ctx.var1,
        FlKind.VAR_PI_IH_DPI: ctx.var_dpi,
        FlKind.VAR_PI_IH_00: ctx.var1_00 / ctx.lam_IH if ctx.lam_IH > 0 else NAN,
        FlKind.P0_PIH_SCALP: ctx.c0 * (ctx.p0_v - ctx.pIH_v) * S,
        FlKind.SKEWNESS_SCALP: ctx.skew_span * ctx.skew_gamma * S,
    }[k]
    return _nz(dt * rate), rate


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalpAccumulator:
    """Scalp moments <Q_m F>, <Q_m |F|> and the running scalp price."""

    cfg: MeasureConfig
    mu: np.ndarray = field(repr=False)  # (N, 2)
    anchor: int | None = None
    P: float = 0.0
    p_IH_prev: float = NAN
    lam_IH_prev: float = NAN
    p_prev: float = NAN
    t_prev: int | None = None

    def __post_init__(self):
        self.mu.setflags(write=False)

    @property
    def F(self) -> np.ndarray:
        return self.mu[:, 0]

    @property
    def absF(self) -> np.ndarray:
        return self.mu[:, 1]


def empty_accumulator(cfg: MeasureConfig) -> ScalpAccumulator:
    return ScalpAccumulator(cfg, np.zeros((cfg.n_moments, 2)))


def accumulate_scalp(acc: ScalpAccumulator, fdt: float, t: int, *, p: float = NAN,
                     p_IH: float = NAN, lam_IH: float = NAN,
                     anchor: int | None = None) -> ScalpAccumulator:
    """Add ``fdt = (t_l - t_{l-1}) F_l`` at tick time ``t`` (ns).

    ``anchor``, when given, must equal ``t``: the scalp moments share the anchor
    of the regular moments they are combined with.
    """
    if anchor is not None and anchor != t:
        raise AnchorMismatchError(f"scalp tick at {t} ns but moments anchored at {anchor} ns")
    b = get_basis(acc.cfg)
    if acc.anchor is None:
        mu = np.zeros_like(acc.mu)
    else:
        if t < acc.anchor:
            raise AnchorMismatchError("scalp accumulator cannot move backwards")
        mu = b.shift_matrix((t - acc.anchor) * 1e-9) @ acc.mu
    mu[:, 0] += fdt * b.q0
    mu[:, 1] += abs(fdt) * b.q0
    return ScalpAccumulator(acc.cfg, mu, int(t), acc.P + fdt, p_IH, lam_IH, p, int(t))


def directional(acc: ScalpAccumulator, psi_IH, basis: Basis | None = None) -> tuple[float, float]:
    """DIR and aDIR: the scalp-price change weighted by the maximal-flow state.

    ``DIR = P_last - <psi|P|psi> = <J(psi^2) F>`` with psi normalised.
    """
    b = get_basis(acc.cfg) if basis is None else basis
    psi = np.asarray(psi_IH, dtype=float)
    sq = b.product(psi, psi)
    norm = float(b.g @ sq)
    w = b.J @ sq / norm
    return float(w @ acc.F), float(w @ acc.absF)


def nonlocal_series(prev: dict | None, cur: dict, variant: FlVariant | None = None,
                    S: float = NAN, dt: float = 0.0, dv: float = 0.0) -> dict:
    """Tick-to-tick change of the maximal-flow state.

    ``prev`` and ``cur`` carry ``lam_IH`` and ``p_IH``.  On the first tick all
    differences are zero.
    """
    if prev is None:
        out = {"dIH": 0.0, "dp_IH": 0.0, "theta": 1.0}
    else:
        dIH = cur["lam_IH"] - prev["lam_IH"]
        out = {
            "dIH": dIH,
            "dp_IH": cur["p_IH"] - prev["p_IH"],
            "theta": 1.0 if cur["lam_IH"] >= prev["lam_IH"] else 0.0,
        }
    if variant is not None:
        z = {ZKind.UNIT: 1.0, ZKind.SCALP_DV: S * dv,
             ZKind.SCALP_DLAMBDA: dt * S * out["dIH"]}[variant.z]
        out["fdt"] = _nz(z * out["dp_IH"] * out["theta"])
    return out


def pnl_local(psi_IH, mats: dict) -> float:
    """``<psi|(p - p_IH)^2 I|psi>``: buy below p_IH, sell above it.

    Equals ``<p2I> - <pI>^2/<I>`` in the state, a volume-weighted price spread.
    """
    psi = np.asarray(psi_IH, dtype=float)
    i = float(psi @ mats["I"] @ psi)
    if not i > 0:
        return 0.0
    pi = float(psi @ mats["pI"] @ psi)
    p2i = float(psi @ mats["p2I"] @ psi)
    p_ih = pi / i
    return p2i - 2 * p_ih * pi + p_ih * p_ih * i
