"""Market states built from the moment matrices.

* ``psi_now``: the Radon-Nikodym state localised at the current time.
* ``flow_summary``: how the "now" state projects onto the execution-flow
  eigenstates of the ``(I, G)`` pencil.
* ``state_prices``: volume, time and aggregated averages of price in a state.
* ``aggregated_flow_state``: the ``(V0, T0)`` pencil with its identities.
* three solvers for maximal execution flow under a price constraint.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .basis import Basis, BasisKind
from .moments import MomentSet, aggregated_moments, didt_operator, Boundary
from .operators import Spectrum, effective_dimension, rayleigh_variations, solve_gev


def psi_now(G, q0) -> np.ndarray:
    """Coefficients of the unit-norm state localised at x0.

    ``psi(x) = sum Q_j(x) Ginv_jk Q_k(x0) / sqrt(sum Q_j(x0) Ginv_jk Q_k(x0))``
    """
    return psi_at(G, q0)


def psi_at(G, qy) -> np.ndarray:
    G = np.asarray(G, dtype=float)
    qy = np.asarray(qy, dtype=float)[: G.shape[0]]
    n_eff = effective_dimension(G)
    out = np.zeros(G.shape[0])
    Gk, qk = G[:n_eff, :n_eff], qy[:n_eff]
    # equilibrated solve, then one refinement step with the residual in extended
    # precision: for monomials cond(G) exceeds 1/eps but the scaled matrix does not
    d = 1.0 / np.sqrt(np.diag(Gk))
    factor = scipy.linalg.cho_factor(Gk * d[:, None] * d[None, :])
    c = d * scipy.linalg.cho_solve(factor, d * qk)
    ld = np.longdouble
    r = (qk.astype(ld) - Gk.astype(ld) @ c.astype(ld)).astype(float)
    c = c + d * scipy.linalg.cho_solve(factor, d * r)
    norm2 = float(qk @ c)
    if not norm2 > 0:
        raise np.linalg.LinAlgError("Christoffel function vanished")
    out[:n_eff] = c / math.sqrt(norm2)
    return out


@dataclass(frozen=True)
class ExecutionFlowSummary:
    s0: float
    sL: float
    sH: float
    wL: float
    wH: float
    Gamma0: float
    flat: bool
    psi0: np.ndarray = field(repr=False)
    psi_IL: np.ndarray = field(repr=False)
    psi_IH: np.ndarray = field(repr=False)
    spectrum: Spectrum = field(repr=False)

    @property
    def wL_squared(self) -> float:
        return self.wL * self.wL

    @property
    def wH_squared(self) -> float:
        return self.wH * self.wH


def flow_summary(G, I, q0) -> ExecutionFlowSummary:
    """Projections of the "now" state on the extreme execution-flow states."""
    G = np.asarray(G, dtype=float)
    I = np.asarray(I, dtype=float)
    spec = solve_gev(I, G, q0)
    psi0 = psi_now(G, q0)
    s0 = float(psi0 @ I @ psi0)
    lam = spec.eigenvalues
    proj = spec.vectors.T @ G @ psi0
    if spec.is_flat():
        # every state is an eigenstate; take the "now" state as the top one
        psi_IH = psi0
        k = int(np.argmin(np.abs(proj)))
        v = spec.vectors[:, k] - proj[k] * psi0
        psi_IL = v / math.sqrt(float(v @ G @ v))
        return ExecutionFlowSummary(s0, float(lam[0]), float(lam[-1]), 0.0, 1.0, 0.0, True,
                                    psi0, psi_IL, psi_IH, spec)
    gamma = (2 * s0 - lam[0] - lam[-1]) / (lam[0] - lam[-1])
    return ExecutionFlowSummary(s0, float(lam[0]), float(lam[-1]), float(proj[0]),
                                float(proj[-1]), float(gamma), False, psi0,
                                spec.vectors[:, 0], spec.vectors[:, -1], spec)


@dataclass(frozen=True)
class StatePrices:
    p_v: float
    p_t: float
    p_V: float
    p_T: float
    tag: str = ""


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else float("nan")


def state_prices(psi, mats: dict, offset: float = 0.0, tag: str = "") -> StatePrices:
    """Four price averages in state ``psi``; NaN when a denominator vanishes.

    ``mats`` maps "pI", "I", "p", "G", "V1", "V0", "T1", "T0" to matrices built
    from offset prices; ``offset`` is added back to the results.
    """
    psi = np.asarray(psi, dtype=float)

    def q(name):
        return float(psi @ mats[name] @ psi)

    return StatePrices(
        _ratio(q("pI"), q("I")) + offset,
        _ratio(q("p"), q("G")) + offset,
        _ratio(q("V1"), q("V0")) + offset,
        _ratio(q("T1"), q("T0")) + offset,
        tag,
    )


def moment_matrices(ms: MomentSet) -> dict[str, np.ndarray]:
    """All operator matrices of a moment snapshot, keyed by observable."""
    b = ms.basis
    out = {"G": b.G.copy()}
    for name in ("p", "I", "pI", "p2I", "p3I", "dp"):
        out[name] = b.operator(ms[name])
    for name, vec in aggregated_moments(ms).items():
        out[name] = b.operator(vec)
    return out


def interpolate_rn(y: float, ms: MomentSet) -> dict:
    """Values of the state localised at abscissa ``y``."""
    b = ms.basis
    b.check_domain(y)
    mats = moment_matrices(ms)
    qy = b.values(y, b.n)
    psi = psi_at(mats["G"], qy)
    spec = solve_gev(mats["I"], mats["G"], b.q0)
    I_y = float(psi @ mats["I"] @ psi)
    return {
        "psi": psi,
        "I": I_y,
        "p_t": float(psi @ mats["p"] @ psi) + ms.p_offset,
        "p_v": _ratio(float(psi @ mats["pI"] @ psi), I_y) + ms.p_offset,
        "projections": (spec.vectors.T @ mats["G"] @ psi) ** 2,
    }


@dataclass(frozen=True)
class AggregatedFlow:
    spectrum: Spectrum
    vt_norm_residual: np.ndarray  # <psi|T0|psi> - 1 per eigenstate
    lambda_eq_residual: np.ndarray  # lambda_VT - <psi|I|psi>/<psi|psi>
    d2_vt: float  # second variation of V0/T0 at dpsi = D psi_max
    var2_lhs: float  # <dpsi|V0|dpsi> - lambda <dpsi|T0|dpsi>
    var2_rhs: float  # <dpsi|I|psi> - lambda <dpsi|psi>
    didt: float  # -D1 of the I quotient at dpsi = D psi_max
    didt_operator: float  # the same through the derivative matrix


def aggregated_flow_state(V0, T0, I, G, basis: Basis) -> AggregatedFlow:
    """Spectrum of the ``(V0, T0)`` pencil and the identities it satisfies."""
    V0 = np.asarray(V0, dtype=float)
    T0 = np.asarray(T0, dtype=float)
    I = np.asarray(I, dtype=float)
    G = np.asarray(G, dtype=float)
    if np.linalg.eigvalsh(T0)[0] <= 0:
        raise np.linalg.LinAlgError("aggregated time matrix is not positive definite")
    spec = solve_gev(V0, T0, basis.q0, guard=False)
    vecs = spec.vectors
    lam = spec.eigenvalues
    norm = np.einsum("ji,jk,ki->i", vecs, T0, vecs) - 1.0
    iq = np.einsum("ji,jk,ki->i", vecs, I, vecs) / np.einsum("ji,jk,ki->i", vecs, G, vecs)
    psi = vecs[:, -1]
    n = len(psi)
    dpsi = basis.Dw[:n, :n] @ psi
    lmax = float(lam[-1])
    _, _, d2 = rayleigh_variations(psi, dpsi, V0, T0)
    lhs = float(dpsi @ V0 @ dpsi - lmax * dpsi @ T0 @ dpsi)
    rhs = float(dpsi @ I @ psi - lmax * dpsi @ G @ psi)
    d0_i, d1_i, _ = rayleigh_variations(psi, dpsi, I, G)
    dI = didt_operator(basis, I, d0_i, G=G)
    return AggregatedFlow(spec, norm, lam - iq, d2, lhs, rhs, -d1_i,
                          float(psi @ dI @ psi) / float(psi @ G @ psi))


# --------------------------------------------------------------------------
# constrained maximisation of the execution flow


class ConstraintOption(enum.Enum):
    PRICE_AT_LAST = "price_eq_last"  # (p - P_last) I
    MOVING_AVERAGE_AT_LAST = "moving_average_eq_last"  # V1 - P_last V0
    FLOW_PRICE_CHANGE = "flow_price_change"  # d/dt [(p - P_last) I]
    PRICE_EXTREMUM = "price_extremum"  # dp/dt
    DPDT_EXTREMUM = "dpdt_extremum"  # d2p/dt2


def constraint_matrix(option: ConstraintOption, ms: MomentSet,
                      boundary: Boundary | float = Boundary.ZERO) -> np.ndarray:
    """Symmetric constraint matrix C for ``<psi|C|psi> = 0``.

    Prices are in offset units, so ``P_last`` enters as ``P_last - p_offset``.
    The two derivative options use ``boundary`` for the value at t_now.
    """
    b = ms.basis
    plast = ms.p_last_offset
    option = ConstraintOption(option)
    if option is ConstraintOption.PRICE_AT_LAST:
        return b.operator(ms["pI"] - plast * ms["I"])
    if option is ConstraintOption.MOVING_AVERAGE_AT_LAST:
        agg = aggregated_moments(ms)
        return b.operator(agg["V1"] - plast * agg["V0"])
    if option is ConstraintOption.FLOW_PRICE_CHANGE:
        base = b.operator(ms["pI"] - plast * ms["I"])
        return didt_operator(b, base, boundary)
    if option is ConstraintOption.PRICE_EXTREMUM:
        return b.operator(ms["dp"])
    return didt_operator(b, b.operator(ms["dp"]), boundary)


@dataclass(frozen=True)
class ConstrainedSolution:
    psi_M: np.ndarray
    mu: float
    i_M: float
    wr0_M: float
    flag_solution_exists: bool
    iterations: int = 0
    y_M: float = float("nan")
    n_roots: int = 0
    refined: bool = False  # answer came from the multiplier refinement stage


def _failed(n: int, iterations: int = 0, n_roots: int = 0) -> ConstrainedSolution:
    return ConstrainedSolution(np.zeros(n), float("nan"), float("nan"), float("nan"), False,
                               iterations, float("nan"), n_roots)


def _adjust(psi, C, Ginv, I, G):
    """Move psi along C|psi> onto the cone <psi|C|psi> = 0."""
    bvec = Ginv @ (C @ psi)
    a = float(bvec @ C @ bvec)
    h = float(psi @ C @ bvec)
    c = float(psi @ C @ psi)
    if a == 0.0:
        if h == 0.0:
            return None
        roots = [-c / (2 * h)]
    else:
        disc = h * h - a * c
        if disc < 0:
            return None
        sq = math.sqrt(disc)
        # numerically stable pair of roots
        qq = -(h + math.copysign(sq, h)) if h != 0 else sq
        roots = [qq / a, c / qq] if qq != 0 else [0.0]
    best = None
    for alpha in roots:
        cand = psi + alpha * bvec
        nn = float(cand @ G @ cand)
        if not nn > 0:
            continue
        cand = cand / math.sqrt(nn)
        val = float(cand @ I @ cand)
        if best is None or val > best[0]:
            best = (val, cand)
    return best


def _top_pair(I, C, G, mu):
    lam, vecs = scipy.linalg.eigh(I + mu * C, G)
    return lam, vecs


def _slope(I, C, G, mu) -> float:
    """Derivative of lambda_max(I + mu C, G) in mu: <u|C|u> of the top vector."""
    _, vecs = _top_pair(I, C, G, mu)
    u = vecs[:, -1]
    return float(u @ C @ u)


def _multiplier_refine(G, I, C, Ginv, mu0: float, tol: float):
    """Constrained maximum from the convex dual ``min_mu lambda_max(I + mu C)``.

    The slope of the dual is ``<u|C|u>`` for the top eigenvector u; it rises
    from the most negative to the most positive eigenvalue of C, so the
    optimal multiplier is bracketed by expanding from ``mu0``.  At the root
    the top eigenvector satisfies the constraint; at a kink (degenerate top
    eigenvalue) the two one-sided eigenvectors are mixed to satisfy it.
    """
    mu0 = float(mu0) if math.isfinite(mu0) else 0.0
    s0 = _slope(I, C, G, mu0)
    if s0 == 0.0:
        lo = hi = mu0
    else:
        step = max(1.0, abs(mu0)) * (1.0 if s0 < 0 else -1.0)
        other = mu0 + step
        for _ in range(200):
            if (_slope(I, C, G, other) > 0) != (s0 > 0):
                break
            step *= 2
            other = mu0 + step
        else:
            return None
        lo, hi = sorted((mu0, other))
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid in (lo, hi):
                break
            if _slope(I, C, G, mid) < 0:
                lo = mid
            else:
                hi = mid
    _, v_lo = _top_pair(I, C, G, lo)
    _, v_hi = _top_pair(I, C, G, hi)
    candidates = [v_lo[:, -1], v_hi[:, -1]]
    u, w = candidates
    cu, cw = float(u @ C @ u), float(w @ C @ w)
    if cu * cw < 0:
        # orthogonalise w against u in the G metric and mix: cos(t) u + sin(t) w
        w = w - float(u @ G @ w) * u
        nw = float(w @ G @ w)
        if nw > 1e-24:
            w = w / math.sqrt(nw)
            a, b, c = cu, float(u @ C @ w), float(w @ C @ w)
            # a cos^2 + 2 b cos sin + c sin^2 = 0  ->  tan t roots of c T^2 + 2 b T + a
            disc = b * b - a * c
            if disc >= 0 and c != 0:
                for T in ((-b + math.sqrt(disc)) / c, (-b - math.sqrt(disc)) / c):
                    candidates.append(u + T * w)
    best = None
    for cand in candidates:
        nn = float(cand @ G @ cand)
        if not nn > 0:
            continue
        cand = cand / math.sqrt(nn)
        if abs(float(cand @ C @ cand)) > tol:
            adj = _adjust(cand, C, Ginv, I, G)
            if adj is None:
                continue
            cand = adj[1]
        if abs(float(cand @ C @ cand)) > tol:
            continue
        val = float(cand @ I @ cand)
        if best is None or val > best[0]:
            best = (val, cand, 0.5 * (lo + hi))
    return best


def constrained_global(G, I, C, q0=None, max_iter: int = 10,
                       refine: bool = True) -> ConstrainedSolution:
    """Maximal ``<psi|I|psi>`` with ``<psi|psi> = 1`` and ``<psi|C|psi> = 0``.

    Iterates: adjust the state onto the constraint along ``C|psi>``; estimate
    the multiplier ``mu = -<psi|C I|psi>/<psi|C C|psi>``; take the eigenvector
    of ``(I + mu C, G)`` with the largest ``<psi|I|psi>``; repeat.

    The iteration can stall on a non-optimal state or fail to reach the
    constraint at all.  With ``refine`` the multiplier is then located as
    the minimiser of the convex function ``lambda_max(I + mu C, G)``, which
    for n >= 3 yields the global constrained maximum; the better of the two
    answers is returned and ``refined`` tells which one it was.
    """
    G = np.asarray(G, dtype=float)
    I = np.asarray(I, dtype=float)
    C = 0.5 * (np.asarray(C, dtype=float) + np.asarray(C, dtype=float).T)
    n = G.shape[0]
    ceig = scipy.linalg.eigh(C, G, eigvals_only=True)
    cscale = max(abs(ceig[0]), abs(ceig[-1]))
    if cscale == 0 or ceig[0] >= -1e-14 * cscale or ceig[-1] <= 1e-14 * cscale:
        return _failed(n)
    Ginv = scipy.linalg.cho_solve(scipy.linalg.cho_factor(G), np.eye(n))
    q0 = np.zeros(n) if q0 is None else np.asarray(q0, dtype=float)[:n]
    spec = solve_gev(I, G, q0 if q0.any() else None, guard=False)
    psi = spec.vectors[:, -1]
    cnorm = float(np.linalg.norm(C, 2))
    tol = 1e-8 * cnorm
    best = None
    mu = float("nan")
    mu_prev = None
    stalls = 0
    it = 0
    for it in range(1, max_iter + 1):
        adj = _adjust(psi, C, Ginv, I, G)
        if adj is None:
            break
        val, tilde = adj
        if abs(float(tilde @ C @ tilde)) <= tol and (best is None or val > best[0]):
            best = (val, tilde, mu)
        cb = Ginv @ (C @ tilde)
        den = float(cb @ C @ tilde)
        if den == 0:
            break
        mu = -float(tilde @ C @ Ginv @ I @ tilde) / den
        lam, vecs = scipy.linalg.eigh(I + mu * C, G)
        vals = np.einsum("ji,jk,ki->i", vecs, I, vecs)
        k = int(np.flatnonzero(vals >= vals.max() - 1e-14 * abs(vals.max()))[-1])
        psi = vecs[:, k]
        if mu_prev is not None and abs(mu - mu_prev) < 1e-12 * (1 + abs(mu)):
            resid = abs(float(psi @ C @ psi))
            stalls = stalls + 1 if resid > tol else 0
            if stalls >= 3:
                break
        mu_prev = mu
    final = _adjust(psi, C, Ginv, I, G)
    if final is not None and abs(float(final[1] @ C @ final[1])) <= tol:
        if best is None or final[0] > best[0]:
            best = (final[0], final[1], mu)
    refined = False
    if refine:
        alt = _multiplier_refine(G, I, C, Ginv, mu if best is None else best[2], tol)
        if alt is not None and (best is None or alt[0] > best[0] + 1e-12 * abs(alt[0])):
            best = alt
            refined = True
    if best is None:
        return _failed(n, it)
    val, psi_m, mu_m = best
    psi_m = _orient_state(psi_m, q0)
    wr0 = float("nan")
    if q0.any():
        p0 = psi_now(G, q0)
        wr0 = float(psi_m @ G @ p0) ** 2
    return ConstrainedSolution(psi_m, float(mu_m), float(val), wr0, True, it, refined=refined)


def _orient_state(psi, q0):
    s = float(q0 @ psi) if q0 is not None else 0.0
    if s < 0:
        return -psi
    return psi


def _past_domain(basis: Basis):
    if basis.kind is BasisKind.SHIFTED_LEGENDRE:
        return 0.0, 1.0
    if basis.kind is BasisKind.LAGUERRE:
        return 0.0, 40.0
    return -40.0, 0.0


def constrained_localized(G, I, C, basis: Basis) -> ConstrainedSolution:
    """Best Radon-Nikodym state ``psi_y`` among real roots of the constraint.

    ``<psi_y|C|psi_y> = 0`` is a polynomial in y of degree 2n-2; its real roots
    in the past half of the time axis are the candidates.
    """
    G = np.asarray(G, dtype=float)
    I = np.asarray(I, dtype=float)
    C = 0.5 * (np.asarray(C, dtype=float) + np.asarray(C, dtype=float).T)
    n = G.shape[0]
    Ginv = scipy.linalg.cho_solve(scipy.linalg.cho_factor(G), np.eye(n))
    M = Ginv @ C @ Ginv
    poly = np.einsum("jk,jkm->m", M, basis.T[:n, :n, :])
    scale = float(np.linalg.norm(C, 2)) * float(np.linalg.norm(Ginv, 2)) ** 2 * \
        float(np.abs(basis.T[:n, :n, :]).max())
    lo, hi = _past_domain(basis)
    if scale == 0 or np.max(np.abs(poly)) <= 1e-12 * scale:
        ys = np.linspace(lo, hi, 512)
        n_roots = -1
    else:
        roots = basis.real_roots(poly, domain_only=True)
        ys = roots[(roots >= lo) & (roots <= hi)]
        n_roots = len(ys)
        if n_roots == 0:
            return _failed(n, n_roots=0)
    best = None
    for y in ys:
        psi = psi_at(G, basis.values(y, n))
        val = float(psi @ I @ psi)
        if best is None or val > best[0]:
            best = (val, y, psi)
    val, y, psi = best
    p0 = psi_now(G, basis.q0)
    return ConstrainedSolution(psi, float("nan"), val, float(psi @ G @ p0) ** 2, True, 0,
                               float(y), n_roots)


class SelectionPencil(enum.Enum):
    PI_VS_I = "pI_vs_I"
    V1_VS_V0 = "V1_vs_V0"


def constrained_eigenselect(I, pencil: SelectionPencil | str, G, mats: dict,
                            q0=None) -> ConstrainedSolution:
    """Eigenvector of the chosen price pencil with the largest I quotient.

    ``mats`` holds "pI" and "I" (for ``pI_vs_I``) or "V1" and "V0".
    Ties go to the largest eigenvalue index.
    """
    pencil = SelectionPencil(pencil)
    A, B = (mats["pI"], mats["I"]) if pencil is SelectionPencil.PI_VS_I else (mats["V1"], mats["V0"])
    G = np.asarray(G, dtype=float)
    I = np.asarray(I, dtype=float)
    spec = solve_gev(A, B, q0, guard=False)
    V = spec.vectors
    num = np.einsum("ji,jk,ki->i", V, I, V)
    den = np.einsum("ji,jk,ki->i", V, G, V)
    vals = num / den
    top = vals.max()
    k = int(np.flatnonzero(vals >= top - 1e-12 * max(abs(top), 1e-300))[-1])
    psi = V[:, k] / math.sqrt(den[k])
    wr0 = float("nan")
    if q0 is not None:
        wr0 = float(psi @ G @ psi_now(G, q0)) ** 2
    return ConstrainedSolution(psi, float(spec.eigenvalues[k]), float(vals[k]), wr0, True, 0)
