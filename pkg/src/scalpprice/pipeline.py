"""Per-tick indicator records for a whole stream.

:class:`StreamEngine` is the production path: ticks are processed in chunks,
with the order-dependent moment recurrences run sequentially and everything
else (operator matrices, eigenproblems, state averages, attributes) evaluated
for the whole chunk at once.  :func:`process_stream_reference` computes the
same records one tick at a time from the public building blocks and serves as
its oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .basis import MeasureConfig, get_basis
from .moments import TickRecord, TimeOrderError, empty_moments, ingest_tick
from .operators import GramIndefiniteError, effective_dimension
from .scalp import (
    FlKind,
    FlVariant,
    TickContext,
    _degenerate_pencil,
    ZKind,
    accumulate_scalp,
    compute_Fl,
    directional,
    empty_accumulator,
    pencil2_batch,
    skewness_quadrature,
    skewness_quadrature_batch,
    two_state_pencil,
)
from .states import flow_summary, moment_matrices

NAN = float("nan")

FIELDS = (
    "T", "shares", "P_last", "p_offset", "pi_average", "pt_average",
    "I.s0", "I.sL", "I.wL_squared", "I.sH", "I.wH_squared", "I.Gamma0",
    "p_0", "pt_0", "dpdt_0", "p_IH", "pt_IH", "pV_IH", "pT_IH",
    "var1pI_IH", "var1pI_IH_00", "pmin_0_IH", "pmax_0_IH",
    "Skewness_0_IH", "ProbabilityCorrelation_0_IH", "I.wH",
    "getFlFromRegularMoments", "getSumFdt", "dIH", "dp_IH", "F_IH", "DIR", "aDIR",
    "n_eff",
)

# fields stored in offset units internally and shifted back on output
PRICE_FIELDS = ("p_0", "pt_0", "p_IH", "pt_IH", "pV_IH", "pT_IH", "pmin_0_IH", "pmax_0_IH",
                "pi_average", "pt_average")

INT_FIELDS = ("T", "n_eff")


@dataclass(frozen=True)
class StreamSettings:
    measure: MeasureConfig
    variant: FlVariant = field(default_factory=FlVariant)


def effective_measure(measure: MeasureConfig) -> MeasureConfig:
    """The measure after the Gram conditioning guard (possibly smaller n)."""
    b = get_basis(measure)
    n_eff = effective_dimension(b.G)
    if n_eff < 2:
        raise GramIndefiniteError(float(np.linalg.eigvalsh(b.G)[0]))
    if n_eff == measure.n:
        return measure
    return MeasureConfig(measure.basis_kind, n_eff, measure.tau)


def _rowdot(a, b):
    return np.einsum("ij,ij->i", a, b)


def _safe_div(num, den):
    ok = den > 0
    return np.where(ok, num / np.where(ok, den, 1.0), NAN)


def _batched_eigh(A):
    """eigh over a stack; a row that fails to converge is zeroed and flagged."""
    try:
        lam, Y = np.linalg.eigh(A)
        return lam, Y, np.zeros(len(A), dtype=bool)
    except np.linalg.LinAlgError:
        failed = np.zeros(len(A), dtype=bool)
        lam = np.zeros(A.shape[:2])
        Y = np.broadcast_to(np.eye(A.shape[1]), A.shape).copy()
        for i, a in enumerate(A):
            try:
                lam[i], Y[i] = np.linalg.eigh(a)
            except np.linalg.LinAlgError:
                failed[i] = True
        return lam, Y, failed


class StreamEngine:
    """Chunked indicator computation with state carried between calls."""

    def __init__(self, settings: StreamSettings, chunk: int = 4096, keep_states: bool = False):
        self.settings = settings
        self.keep_states = keep_states
        self.states: list[np.ndarray] = []  # per-block psi_IH coefficients when kept
        self.variant = settings.variant
        self.measure = effective_measure(settings.measure)
        self.n_eff = self.measure.n
        self.chunk = int(chunk)
        b = self.basis = get_basis(self.measure)
        n = b.n
        self._q0n = b.q0[:n].copy()
        self._W = b.W.copy()
        # the now state built in G-orthonormal coordinates (W W^T = G^-1), so its
        # projections on the eigenstates have unit norm even when G is ill-conditioned
        z = self._W.T @ self._q0n
        self._sq0 = float(np.linalg.norm(z))
        self._y0 = z / self._sq0
        self._alpha0 = self._W @ self._y0
        self._P00 = b.product(self._alpha0, self._alpha0)
        self._Dwn = b.Dw[:n, :n].copy()
        self._Jt = np.ascontiguousarray(b.J.T)
        self.mu = np.zeros((b.N, 6))
        self.muF = np.zeros((b.N, 2))
        self.started = False
        self.anchor = 0
        self.P_last = NAN
        self.p_offset = NAN
        self.P_sum = 0.0
        self.lam_prev = NAN
        self.pIH_prev = NAN
        self.count = 0

    # ------------------------------------------------------------------

    def process(self, t, p, v) -> dict[str, np.ndarray]:
        t = np.asarray(t, dtype=np.int64)
        p = np.asarray(p, dtype=float)
        v = np.asarray(v, dtype=float)
        parts = [self.process_block(t[i:i + self.chunk], p[i:i + self.chunk], v[i:i + self.chunk])
                 for i in range(0, len(t), self.chunk)]
        if not parts:
            return {name: np.empty(0) for name in FIELDS}
        return {name: np.concatenate([part[name] for part in parts]) for name in FIELDS}

    def process_block(self, t, p, v) -> dict[str, np.ndarray]:
        b = self.basis
        N = b.N
        B = len(t)
        q0 = b.q0
        g = b.g
        if not self.started:
            self.anchor = int(t[0])
            self.P_last = float(p[0])
            self.p_offset = float(p[0])
            first = True
        else:
            first = False
        t_prev = np.empty(B, dtype=np.int64)
        t_prev[0] = self.anchor
        t_prev[1:] = t[:-1]
        back = np.flatnonzero(t < t_prev)
        if back.size:
            raise TimeOrderError(f"timestamp decreases at tick {self.count + int(back[0])}")
        dt = (t - t_prev) * 1e-9
        p_prev = np.empty(B)
        p_prev[0] = self.P_last
        p_prev[1:] = p[:-1]
        dp = p - p_prev
        off = self.p_offset
        po = p - off
        po_prev = p_prev - off

        S = b.shift_matrices(dt)
        moved = dt != 0
        h = b.hold_increments(dt)
        C = np.empty((B, N, 6))
        C[:, :, 0] = po_prev[:, None] * h
        C[:, :, 1] = v[:, None] * q0
        C[:, :, 2] = (v * po)[:, None] * q0
        C[:, :, 3] = (v * po * po)[:, None] * q0
        C[:, :, 4] = (v * po * po * po)[:, None] * q0
        C[:, :, 5] = dp[:, None] * q0
        MU = np.empty((B, N, 6))
        mu = self.mu
        for l in range(B):
            if moved[l]:
                mu = S[l] @ mu + C[l]
            else:
                mu = mu + C[l]
            MU[l] = mu
        self.mu = mu

        mu_p, mu_I, mu_pI = MU[:, :, 0], MU[:, :, 1], MU[:, :, 2]
        mu_dp = MU[:, :, 5]

        # execution-flow spectrum in G-orthonormal coordinates
        Imat = b.operator(mu_I)
        W = self._W
        Ahat = np.swapaxes(W, 0, 1) @ Imat @ W
        bad = ~np.isfinite(Ahat).all(axis=(1, 2))
        if bad.any():
            Ahat[bad] = 0.0
        lam, Y, failed = _batched_eigh(Ahat)
        bad |= failed
        alpha = W @ Y
        at = np.einsum("j,bjk->bk", self._q0n, alpha)
        scale = np.abs(alpha).sum(axis=1) * np.abs(self._q0n).max()
        tie = np.abs(at) <= 1e-13 * scale
        if tie.any():
            mag = np.abs(alpha)
            idx = np.argmax(mag > 1e-14 * mag.max(axis=1, keepdims=True), axis=1)
            first_coef = np.take_along_axis(alpha, idx[:, None, :], axis=1)[:, 0, :]
            sign = np.where(tie, np.sign(first_coef), np.sign(at))
        else:
            sign = np.sign(at)
        sign[sign == 0] = 1.0
        alpha *= sign[:, None, :]
        at *= sign

        flat = (lam[:, -1] - lam[:, 0]) < 1e-9 * (1 + np.abs(lam[:, -1]))
        a0 = self._alpha0
        aH = np.where(flat[:, None], a0[None, :], alpha[:, :, -1])
        sq0 = self._sq0
        at_H = np.where(flat, sq0, at[:, -1])
        wH = at_H / sq0
        wL = np.where(flat, 0.0, at[:, 0] / sq0)
        lam_IH = lam[:, -1]
        sL = lam[:, 0]
        sH = lam[:, -1]
        P00 = self._P00
        # through the same matrix as the spectrum; the squared-polynomial route
        # loses about 1e-9 to cancellation at n ~ 12
        s0 = np.einsum("j,bjk,k->b", self._y0, Ahat, self._y0)
        with np.errstate(invalid="ignore", divide="ignore"):
            gamma0 = np.where(flat, 0.0, (2 * s0 - sL - sH) / np.where(flat, 1.0, sL - sH))

        if self.keep_states:
            self.states.append(aH.copy())
        PHH = b.product(aH, aH)
        P0H = b.product(np.broadcast_to(a0, aH.shape), aH)
        DaH = aH @ self._Dwn.T
        PHD = b.product(aH, DaH)
        JHH = PHH @ self._Jt
        nHH = PHH @ g

        pI_HH = _rowdot(PHH, mu_pI)
        I_HH = _rowdot(PHH, mu_I)
        pI_0H = _rowdot(P0H, mu_pI)
        pI_00 = mu_pI @ P00
        with np.errstate(invalid="ignore", divide="ignore"):
            pi_average = _safe_div(mu_pI[:, 0], mu_I[:, 0])
            pt_average = mu_p[:, 0] / g[0]
            p_0 = _safe_div(pI_00, s0)
            pt_0 = mu_p @ P00
            dpdt_0 = mu_dp @ P00
            p_IH = _safe_div(pI_HH, I_HH)
            pt_IH = _rowdot(PHH, mu_p) / nHH
            pV_IH = _safe_div(_rowdot(JHH, mu_pI), _rowdot(JHH, mu_I))
            pT_IH = _safe_div(_rowdot(JHH, mu_p), JHH @ g)
            dpdt_IH = _rowdot(PHH, mu_dp) / nHH
            psi_Dpsi = PHD @ g
            pI_HD = _rowdot(PHD, mu_pI)
            var1 = 2 * (pI_HD - pI_HH * psi_Dpsi)
            var1_00 = 2 * (pI_0H - pI_HH * wH) * wH
            var_dpi = 2 * (po * lam_IH * psi_Dpsi - pI_HD)

        # two-state pencil on span{psi_IH, e2}, e2 the G-unit part of psi_0 orthogonal
        # to psi_IH; in the eigenbasis I is diagonal there, so nothing cancels
        w = at[:, :-1] / sq0
        rho2 = np.einsum("bk,bk->b", w, w)
        colinear = flat | (rho2 < 1e-10)
        rho = np.sqrt(np.where(colinear, 1.0, rho2))
        e2 = np.einsum("bjk,bk->bj", alpha[:, :, :-1], w) / rho[:, None]
        I_ee = np.einsum("bk,bk->b", lam[:, :-1], w * w) / (rho * rho)
        pI_He = _rowdot(b.product(aH, e2), mu_pI)
        pI_ee = _rowdot(b.product(e2, e2), mu_pI)
        plam, palpha, pok = pencil2_batch(pI_HH, pI_He, pI_ee, lam_IH, np.zeros(B), I_ee)
        degenerate = colinear | ~pok
        phi = palpha[:, 0, :] * at_H[:, None] + palpha[:, 1, :] * (sq0 * rho)[:, None]
        phi2 = phi * phi
        with np.errstate(invalid="ignore", divide="ignore"):
            probcorr = np.where(degenerate, NAN, (phi2[:, 1] - phi2[:, 0]) / (phi2[:, 1] + phi2[:, 0]))
            skew2d = np.where(degenerate, NAN, (2 * po - plam[:, 0] - plam[:, 1]) / (plam[:, 0] - plam[:, 1]))
        pmin = np.where(colinear, NAN, plam[:, 0])
        pmax = np.where(colinear, NAN, plam[:, 1])

        S_fn = wH * wH
        pis = [MU[:, :, 1 + s] @ P00 for s in range(4)]
        q_min, q_max, _, _, q_gamma, _, _ = skewness_quadrature_batch(*pis)

        # tick-to-tick change of the maximal-flow state
        lam_prev = np.empty(B)
        lam_prev[0] = lam_IH[0] if first else self.lam_prev
        lam_prev[1:] = lam_IH[:-1]
        pIH_prev = np.empty(B)
        pIH_prev[0] = p_IH[0] if first else self.pIH_prev
        pIH_prev[1:] = p_IH[:-1]
        dIH = lam_IH - lam_prev
        dp_IH = p_IH - pIH_prev
        if first:
            dp_IH[0] = 0.0 if math.isfinite(p_IH[0]) else NAN
        theta = (lam_IH >= lam_prev).astype(float)

        fdt, rate = self._attributes(dt, dp, v, po, S_fn, sq0, s0, lam_IH, p_0, pt_0, dpdt_0,
                                     p_IH, dpdt_IH, var1, var1_00, var_dpi, q_gamma,
                                     q_max - q_min, degenerate, probcorr, skew2d, plam,
                                     dIH, dp_IH, theta)
        fdt = np.where(np.isfinite(fdt) & ~bad, fdt, 0.0)
        if first:
            fdt[0] = 0.0

        MUF = np.empty((B, N, 2))
        muF = self.muF
        add = np.stack([fdt, np.abs(fdt)], axis=1)
        for l in range(B):
            if moved[l]:
                muF = S[l] @ muF
            else:
                muF = muF.copy()
            muF[:, 0] += add[l, 0] * q0
            muF[:, 1] += add[l, 1] * q0
            MUF[l] = muF
        self.muF = muF
        psum = self.P_sum + np.cumsum(fdt)
        DIR = _rowdot(JHH, MUF[:, :, 0]) / nHH
        aDIR = _rowdot(JHH, MUF[:, :, 1]) / nHH
        F_IH = _rowdot(PHH, MUF[:, :, 0]) / nHH

        self.started = True
        self.anchor = int(t[-1])
        self.P_last = float(p[-1])
        self.P_sum = float(psum[-1])
        self.lam_prev = float(lam_IH[-1])
        self.pIH_prev = float(p_IH[-1])
        self.count += B

        rec = {
            "T": t.copy(), "shares": v.copy(), "P_last": p.copy(),
            "p_offset": np.full(B, off),
            "pi_average": pi_average, "pt_average": pt_average,
            "I.s0": s0, "I.sL": sL, "I.wL_squared": wL * wL, "I.sH": sH,
            "I.wH_squared": S_fn, "I.Gamma0": gamma0,
            "p_0": p_0, "pt_0": pt_0, "dpdt_0": dpdt_0,
            "p_IH": p_IH, "pt_IH": pt_IH, "pV_IH": pV_IH, "pT_IH": pT_IH,
            "var1pI_IH": var1, "var1pI_IH_00": var1_00,
            "pmin_0_IH": pmin, "pmax_0_IH": pmax,
            "Skewness_0_IH": skew2d, "ProbabilityCorrelation_0_IH": probcorr,
            "I.wH": wH, "getFlFromRegularMoments": rate, "getSumFdt": psum,
            "dIH": dIH, "dp_IH": dp_IH, "F_IH": F_IH, "DIR": DIR, "aDIR": aDIR,
            "n_eff": np.full(B, self.n_eff, dtype=np.int64),
        }
        for name in PRICE_FIELDS:
            rec[name] = rec[name] + off
        if bad.any():
            for name in FIELDS:
                if name not in ("T", "shares", "P_last", "p_offset", "getSumFdt", "n_eff"):
                    rec[name] = np.where(bad, NAN, rec[name])
        return rec

    def _attributes(self, dt, dp, v, po, S, sq0, s0, lam_IH, p_0, pt_0, dpdt_0, p_IH,
                    dpdt_IH, var1, var1_00, var_dpi, q_gamma, q_span, degenerate,
                    probcorr, skew2d, plam, dIH, dp_IH, theta):
        kind = self.variant.kind
        z = self.variant.z
        nan = np.full_like(dt, NAN)
        c0 = sq0 * sq0
        with np.errstate(invalid="ignore", divide="ignore"):
            if kind is FlKind.SAMPLE_DP_NOSCALP:
                return dp.copy(), nan
            if kind is FlKind.SAMPLE_DP_SCALP:
                return dp * S, nan
            if kind is FlKind.NONLOCAL_PIH:
                zz = {ZKind.UNIT: np.ones_like(dt), ZKind.SCALP_DV: S * v,
                      ZKind.SCALP_DLAMBDA: dt * S * dIH}[z]
                return zz * dp_IH * theta, nan
            if kind.is_2d:
                if kind is FlKind.PROBCORR_2D_SCALP:
                    d = probcorr
                    sign = 1.0
                else:
                    d = skew2d
                    sign = -1.0
                gap = plam[:, 1] - plam[:, 0]
                pos = dt > 0
                zdt, zrate = {
                    ZKind.UNIT: (dt, np.ones_like(dt)),
                    ZKind.ABS_DP_DT: (np.abs(dp), np.where(pos, np.abs(dp) / np.where(pos, dt, 1), NAN)),
                    ZKind.DV_DT: (v, np.where(pos, v / np.where(pos, dt, 1), NAN)),
                    ZKind.EIGEN_GAP: (dt * gap, gap),
                }[z]
                fdt = np.where(degenerate, 0.0, sign * zdt * d * S)
                rate = np.where(degenerate, NAN, sign * zrate * d * S)
                return fdt, rate
            rate = {
                FlKind.DPDT0_SCALP: lambda: dpdt_0 * S,
                FlKind.PIPT0_SCALP: lambda: c0 * (p_0 - pt_0) * S,
                FlKind.DPDT_IH_SCALP: lambda: dpdt_IH * S,
                FlKind.VAR_PI_IH: lambda: var1,
                FlKind.VAR_PI_IH_DPI: lambda: var_dpi,
                FlKind.VAR_PI_IH_00: lambda: _safe_div(var1_00, lam_IH),
                FlKind.P0_PIH_SCALP: lambda: c0 * (p_0 - p_IH) * S,
                FlKind.SKEWNESS_SCALP: lambda: q_span * q_gamma * S,
            }[kind]()
            return dt * rate, rate


def run_arrays(settings: StreamSettings, t, p, v, chunk: int = 4096) -> dict[str, np.ndarray]:
    """Columnar records for a whole stream given as arrays."""
    return StreamEngine(settings, chunk).process(t, p, v)


def iter_records(columns: dict[str, np.ndarray]) -> Iterator[dict]:
    names = list(columns)
    for row in zip(*(columns[k].tolist() for k in names)):
        yield dict(zip(names, row))


def process_stream(settings: StreamSettings, ticks: Iterable[TickRecord],
                   chunk: int = 4096) -> Iterator[dict]:
    """One record (a field -> value dict) per input tick."""
    engine = StreamEngine(settings, chunk)
    buf: list[TickRecord] = []

    def flush():
        t = np.array([k.t for k in buf], dtype=np.int64)
        p = np.array([k.p for k in buf], dtype=float)
        v = np.array([k.v for k in buf], dtype=float)
        buf.clear()
        return iter_records(engine.process_block(t, p, v))

    for tick in ticks:
        buf.append(tick)
        if len(buf) >= chunk:
            yield from flush()
    if buf:
        yield from flush()


# --------------------------------------------------------------------------


def process_stream_reference(settings: StreamSettings, ticks: Iterable[TickRecord]) -> Iterator[dict]:
    """Tick-at-a-time records built from the public building blocks.

    Slow (one eigenproblem and a handful of small matrix products per call
    into numpy per tick) but straightforward; used to validate the engine.
    """
    measure = effective_measure(settings.measure)
    variant = settings.variant
    b = get_basis(measure)
    n = b.n
    ms = empty_moments(measure)
    acc = empty_accumulator(measure)
    prev = None
    for tick in ticks:
        first = ms.anchor is None
        dt = 0.0 if first else (tick.t - ms.anchor) * 1e-9
        dp = 0.0 if first else tick.p - ms.P_last
        ms = ingest_tick(ms, tick)
        off = ms.p_offset
        mats = moment_matrices(ms)
        G, I = mats["G"], mats["I"]
        fs = flow_summary(G, I, b.q0)
        psi0, psiH = fs.psi0, fs.psi_IH
        c0 = float(b.q0[:n] @ psi0) ** 2
        S = 1.0 if fs.flat else fs.wH ** 2

        def avg(name, a, c=None):
            c = a if c is None else c
            return float(a @ mats[name] @ c)

        I_HH = avg("I", psiH)
        p_IH = avg("pI", psiH) / I_HH if I_HH > 0 else NAN
        Dpsi = b.Dw[:n, :n] @ psiH
        psi_D = float(psiH @ G @ Dpsi)
        var1 = 2 * (avg("pI", psiH, Dpsi) - avg("pI", psiH) * psi_D)
        wH = 1.0 if fs.flat else fs.wH
        var1_00 = 2 * (avg("pI", psiH, psi0) - avg("pI", psiH) * wH) * wH
        var_dpi = 2 * (ms.p_last_offset * fs.sH * psi_D - avg("pI", psiH, Dpsi))
        proj = fs.spectrum.vectors.T @ G @ psi0
        colinear = fs.flat or float(proj[:-1] @ proj[:-1]) < 1e-10
        pen = _degenerate_pencil() if colinear else two_state_pencil(psi0, psiH, mats["pI"], I,
                                                                      b.q0, G)
        quad = skewness_quadrature(*(avg(k, psi0) for k in ("I", "pI", "p2I", "p3I")))
        sq = b.product(psiH, psiH)
        Jsq = b.J @ sq
        cur = {"lam_IH": fs.sH, "p_IH": p_IH}
        if prev is None:
            dIH, dp_IH, theta = 0.0, (0.0 if math.isfinite(p_IH) else NAN), 1.0
        else:
            dIH = cur["lam_IH"] - prev["lam_IH"]
            dp_IH = cur["p_IH"] - prev["p_IH"]
            theta = 1.0 if cur["lam_IH"] >= prev["lam_IH"] else 0.0
        s0 = fs.s0
        ctx = TickContext(
            S=S, dt=dt, dp=dp, dv=tick.v, p_last=ms.p_last_offset, c0=c0, s0=s0,
            lam_IH=fs.sH,
            p0_v=avg("pI", psi0) / s0 if s0 > 0 else NAN, p0_t=avg("p", psi0),
            dpdt0=avg("dp", psi0), pIH_v=p_IH, dpdt_IH=avg("dp", psiH),
            var1=var1, var1_00=var1_00, var_dpi=var_dpi,
            skew_gamma=quad.gamma, skew_span=quad.p_max - quad.p_min, pencil=pen,
            dIH=dIH, dp_IH=dp_IH, theta=theta)
        fdt, rate = compute_Fl(variant, ctx)
        if first:
            fdt = 0.0
        acc = accumulate_scalp(acc, fdt, tick.t, anchor=ms.anchor)
        DIR, aDIR = directional(acc, psiH, b)
        nHH = float(b.g @ sq)
        agg_pV = float(Jsq @ ms["pI"]) / float(Jsq @ ms["I"]) if float(Jsq @ ms["I"]) > 0 else NAN
        rec = {
            "T": tick.t, "shares": tick.v, "P_last": ms.P_last, "p_offset": off,
            "pi_average": (ms["pI"][0] / ms["I"][0] if ms["I"][0] > 0 else NAN) + off,
            "pt_average": ms["p"][0] / b.g[0] + off,
            "I.s0": s0, "I.sL": fs.sL, "I.wL_squared": fs.wL ** 2, "I.sH": fs.sH,
            "I.wH_squared": S, "I.Gamma0": fs.Gamma0,
            "p_0": ctx.p0_v + off, "pt_0": ctx.p0_t + off, "dpdt_0": ctx.dpdt0,
            "p_IH": p_IH + off, "pt_IH": avg("p", psiH) + off,
            "pV_IH": agg_pV + off, "pT_IH": float(Jsq @ ms["p"]) / float(Jsq @ b.g) + off,
            "var1pI_IH": var1, "var1pI_IH_00": var1_00,
            "pmin_0_IH": float(pen.lam[0]) + off, "pmax_0_IH": float(pen.lam[1]) + off,
            "Skewness_0_IH": pen.skewness_at(ms.p_last_offset),
            "ProbabilityCorrelation_0_IH": pen.probability_correlation,
            "I.wH": wH, "getFlFromRegularMoments": rate, "getSumFdt": acc.P,
            "dIH": dIH, "dp_IH": dp_IH, "F_IH": float(sq @ acc.F) / nHH,
            "DIR": DIR, "aDIR": aDIR, "n_eff": n,
        }
        prev = cur
        yield rec
