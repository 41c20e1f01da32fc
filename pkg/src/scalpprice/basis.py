"""Polynomial bases on the exponential-decay measure.

All three bases share the measure ``exp(-(t_now - t)/tau) dt`` and differ only
in how time is mapped to the polynomial argument ``x``:

=================  ==============================  ==========  ====
kind               x(t)                            domain      x0
=================  ==============================  ==========  ====
ShiftedLegendre    exp(-(t_now - t)/tau)           (0, 1]      1
Laguerre           (t_now - t)/tau                 [0, inf)    0
Monomials          (t - t_now)/tau                 (-inf, 0]   0
=================  ==============================  ==========  ====

Every linear operator used downstream (the multiplication table, the time
derivative ``D``, the integration map ``J``, the anchor shift) is derived once
in exact rational arithmetic through the monomial representation, then cached
as float64 matrices acting on Q-basis coefficient vectors.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np
from numpy.polynomial import laguerre as npl
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as npp
from scipy import special

N_MAX = 24


class DomainError(ValueError):
    """Abscissa or index outside the basis domain."""


class DegreeOverflowError(ValueError):
    """A product or operator would exceed the representable degree."""


class BasisKind(enum.Enum):
    SHIFTED_LEGENDRE = "ShiftedLegendre"
    LAGUERRE = "Laguerre"
    MONOMIALS = "Monomials"

    @classmethod
    def parse(cls, token: str) -> "BasisKind":
        """Accept enum names, values, or ``ScalpedMaxIProjection*`` measure tokens."""
        key = token.strip()
        for prefix in ("ScalpedMaxIProjection",):
            if key.startswith(prefix):
                key = key[len(prefix):]
        aliases = {
            "shiftedlegendre": cls.SHIFTED_LEGENDRE,
            "legendreshifted": cls.SHIFTED_LEGENDRE,
            "shifted_legendre": cls.SHIFTED_LEGENDRE,
            "legendre": cls.SHIFTED_LEGENDRE,
            "laguerre": cls.LAGUERRE,
            "monomials": cls.MONOMIALS,
            "monomial": cls.MONOMIALS,
        }
        try:
            return aliases[key.lower()]
        except KeyError:
            raise ValueError(f"unknown basis/measure token {token!r}") from None


@dataclass(frozen=True)
class MeasureConfig:
    """Basis kind, dimension ``n`` and decay time ``tau`` in seconds."""

    basis_kind: BasisKind
    n: int
    tau: float

    def __post_init__(self):
        if not isinstance(self.basis_kind, BasisKind):
            object.__setattr__(self, "basis_kind", BasisKind.parse(str(self.basis_kind)))
        if not (2 <= int(self.n) <= N_MAX):
            raise ValueError(f"n must be in [2, {N_MAX}], got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be positive, got {self.tau}")
        object.__setattr__(self, "tau", float(self.tau))

    @property
    def n_moments(self) -> int:
        return 2 * self.n - 1


# --------------------------------------------------------------------------
# exact rational construction


def _recurrence(kind: BasisKind, j: int) -> tuple[Fraction, Fraction, Fraction]:
    """Coefficients of Q_{j+1} = (a x + b) Q_j - c Q_{j-1}."""
    j1 = Fraction(j + 1)
    if kind is BasisKind.SHIFTED_LEGENDRE:
        return 2 * (2 * j + 1) / j1, -(2 * j + 1) / j1, j / j1
    if kind is BasisKind.LAGUERRE:
        return -1 / j1, (2 * j + 1) / j1, j / j1
    return Fraction(1), Fraction(0), Fraction(0)


def _matmul(a, b):
    m, k, p = len(a), len(b), len(b[0])
    out = [[Fraction(0)] * p for _ in range(m)]
    for i in range(m):
        ai = a[i]
        row = out[i]
        for s in range(k):
            v = ai[s]
            if v:
                bs = b[s]
                for j in range(p):
                    if bs[j]:
                        row[j] += v * bs[j]
    return out


def _transpose(a):
    return [list(r) for r in zip(*a)]


def _to_float(a) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in a], dtype=float)


class _Exact:
    """Exact rational operator matrices for one basis kind and size N."""

    def __init__(self, kind: BasisKind, size: int):
        self.kind = kind
        self.N = N = size
        rec = [_recurrence(kind, j) for j in range(N)]
        self.rec = rec
        # C[k][i]: coefficient of x^i in Q_k (lower triangular)
        C = [[Fraction(0)] * N for _ in range(N)]
        C[0][0] = Fraction(1)
        if N > 1:
            a, b, _ = rec[0]
            C[1][0], C[1][1] = b, a
        for k in range(1, N - 1):
            a, b, c = rec[k]
            row = [Fraction(0)] * N
            for i in range(k + 1):
                row[i] += b * C[k][i]
                row[i + 1] += a * C[k][i]
                row[i] -= c * C[k - 1][i]
            C[k + 1] = row
        self.C = C
        # inverse of lower-triangular C by forward substitution
        Ci = [[Fraction(0)] * N for _ in range(N)]
        for i in range(N):
            Ci[i][i] = 1 / C[i][i]
            for j in range(i - 1, -1, -1):
                s = sum((C[i][k] * Ci[k][j] for k in range(j, i)), Fraction(0))
                Ci[i][j] = -s / C[i][i]
        self.Cinv = Ci

    def from_monomial_operator(self, L):
        """Q-representation C^{-T} L C^T of an operator given on monomial coefficients."""
        CT = _transpose(self.C)
        CiT = _transpose(self.Cinv)
        return _matmul(CiT, _matmul(L, CT))

    def xmul(self):
        """Multiplication by x on Q coefficients (degree N-1 column truncated)."""
        N = self.N
        X = [[Fraction(0)] * N for _ in range(N)]
        for j in range(N):
            a, b, c = self.rec[j]
            if j + 1 < N:
                X[j + 1][j] = 1 / a
            X[j][j] = -b / a
            if j >= 1:
                X[j - 1][j] = c / a
        return X

    def product_tensor(self):
        """T[j][k][m]: coefficient of Q_m in Q_j Q_k, valid for j + k <= N - 1."""
        N = self.N
        X = self.xmul()
        eye = [[Fraction(int(i == j)) for j in range(N)] for i in range(N)]
        mats = [eye]
        prev, cur = None, eye
        for j in range(N - 1):
            a, b, c = self.rec[j]
            xc = _tridiag_mul(X, cur)
            nxt = [[a * xc[i][k] + b * cur[i][k] - (c * prev[i][k] if prev else 0)
                    for k in range(N)] for i in range(N)]
            mats.append(nxt)
            prev, cur = cur, nxt
        T = np.zeros((N, N, N))
        for j in range(N):
            Mj = mats[j]
            for k in range(N - j):
                for m in range(N):
                    v = Mj[m][k]
                    if v:
                        T[j, k, m] = float(v)
        return T

    def values_at(self, x0: Fraction):
        out = []
        for k in range(self.N):
            out.append(sum((c * x0 ** i for i, c in enumerate(self.C[k])), Fraction(0)))
        return out


def _tridiag_mul(X, M):
    N = len(X)
    out = [[Fraction(0)] * N for _ in range(N)]
    for i in range(N):
        for s in (i - 1, i, i + 1):
            if 0 <= s < N and X[i][s]:
                v = X[i][s]
                row = out[i]
                ms = M[s]
                for k in range(N):
                    if ms[k]:
                        row[k] += v * ms[k]
    return out


def _ldl_inverse_factor(G):
    """Exact W with W^T G W = identity from an LDL^T factorization; float result."""
    n = len(G)
    L = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    d = [Fraction(0)] * n
    for j in range(n):
        d[j] = G[j][j] - sum((L[j][k] ** 2 * d[k] for k in range(j)), Fraction(0))
        if d[j] <= 0:
            raise np.linalg.LinAlgError("Gram matrix is not positive definite")
        for i in range(j + 1, n):
            L[i][j] = (G[i][j] - sum((L[i][k] * L[j][k] * d[k] for k in range(j)), Fraction(0))) / d[j]
    # inverse of unit lower-triangular L
    Li = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i - 1, -1, -1):
            Li[i][j] = -sum((L[i][k] * Li[k][j] for k in range(j, i)), Fraction(0))
    W = np.array([[float(Li[j][i]) for j in range(n)] for i in range(n)])  # L^{-T}
    scale = np.array([1.0 / math.sqrt(float(v)) for v in d])
    return W * scale[None, :]


@lru_cache(maxsize=None)
def _exact_tables(kind: BasisKind, n: int) -> dict:
    """Float tables for a basis of dimension n with tau = 1 (scaled later)."""
    N = 2 * n - 1
    ex = _Exact(kind, N)
    zero = [[Fraction(0)] * N for _ in range(N)]

    # d/dt in monomial-x representation, tau = 1
    Dm = [row[:] for row in zero]
    Dx = [row[:] for row in zero]
    Jm = [row[:] for row in zero]
    for i in range(N):
        if i >= 1:
            Dx[i - 1][i] = Fraction(i)
        if kind is BasisKind.SHIFTED_LEGENDRE:
            Dm[i][i] = Fraction(i)
            Jm[i][i] = Fraction(1, i + 1)
        elif kind is BasisKind.LAGUERRE:
            if i >= 1:
                Dm[i - 1][i] = Fraction(-i)
            for s in range(i + 1):
                Jm[s][i] = Fraction(math.factorial(i), math.factorial(s))
        else:
            if i >= 1:
                Dm[i - 1][i] = Fraction(i)
            for s in range(i + 1):
                Jm[s][i] = Fraction((-1) ** (i - s) * math.factorial(i), math.factorial(s))
    Dq = ex.from_monomial_operator(Dm)
    Jq = ex.from_monomial_operator(Jm)
    Dxq = ex.from_monomial_operator(Dx)

    x0 = Fraction(1) if kind is BasisKind.SHIFTED_LEGENDRE else Fraction(0)
    q0 = ex.values_at(x0)
    # g_m = J(Q_m)(x0): the full integral of Q_m against the measure
    g = [sum((Jq[s][m] * q0[s] for s in range(N)), Fraction(0)) for m in range(N)]
    T = ex.product_tensor()
    # exact Gram matrix (tau = 1) from the exact tensor: G_jk = sum_m T_jkm g_m
    Tex_small = _small_gram(ex, g, n)
    W = _ldl_inverse_factor(Tex_small)
    return {
        "C": _to_float(ex.C),
        "Cinv": _to_float(ex.Cinv),
        "D": _to_float(Dq),
        "J": _to_float(Jq),
        "Dx": _to_float(Dxq),
        "q0": np.array([float(v) for v in q0]),
        "g": np.array([float(v) for v in g]),
        "T": T,
        "G": _to_float(Tex_small),
        "W": W,
        "x0": float(x0),
        "rec": np.array([[float(v) for v in r] for r in ex.rec]),
    }


def _small_gram(ex: _Exact, g, n):
    """Exact n x n Gram matrix via monomial convolution (tau = 1)."""
    N = ex.N
    # integral of x^i against the measure in monomial representation
    Cinv = ex.Cinv
    mono = [sum((Cinv[i][m] * g[m] for m in range(N)), Fraction(0)) for i in range(N)]
    G = [[Fraction(0)] * n for _ in range(n)]
    for j in range(n):
        for k in range(j, n):
            s = Fraction(0)
            for a, ca in enumerate(ex.C[j]):
                if ca:
                    for b, cb in enumerate(ex.C[k]):
                        if cb:
                            s += ca * cb * mono[a + b]
            G[j][k] = G[k][j] = s
    return G


# --------------------------------------------------------------------------


class Basis:
    """Float operator tables for one :class:`MeasureConfig`.

    Coefficient vectors have length ``N = 2n - 1``; states use only the first
    ``n`` entries.  Matrices act on coefficient column vectors: ``D @ c`` is the
    coefficient vector of ``D(p)`` when ``c`` is that of ``p``.
    """

    def __init__(self, cfg: MeasureConfig):
        self.cfg = cfg
        self.kind = cfg.basis_kind
        self.n = cfg.n
        self.N = cfg.n_moments
        self.tau = cfg.tau
        tab = _exact_tables(self.kind, self.n)
        tau = self.tau
        self.C = tab["C"]
        self.Cinv = tab["Cinv"]
        self.D = tab["D"] / tau
        self.Dw = self.D + np.eye(self.N) / (2 * tau)
        self.J = tab["J"] * tau
        self.Dx = tab["Dx"]
        self.q0 = tab["q0"]
        self.g = tab["g"] * tau
        self.T = tab["T"]
        self.G = tab["G"] * tau
        self.W = tab["W"] / math.sqrt(tau)
        self.x0 = tab["x0"]
        self._rec = tab["rec"]

    # ----- evaluation -------------------------------------------------

    def check_domain(self, x) -> None:
        x = np.asarray(x, dtype=float)
        if not np.all(np.isfinite(x)):
            raise DomainError("non-finite abscissa")
        if self.kind is BasisKind.SHIFTED_LEGENDRE and (np.any(x < 0) or np.any(x > 1)):
            raise DomainError("ShiftedLegendre abscissa must lie in [0, 1]")
        if self.kind is BasisKind.LAGUERRE and np.any(x < 0):
            raise DomainError("Laguerre abscissa must be >= 0")

    def values(self, x, count: int | None = None) -> np.ndarray:
        """Q_0..Q_{count-1} at ``x`` (any shape); result has a trailing axis."""
        count = self.N if count is None else count
        x = np.asarray(x, dtype=float)
        out = np.empty(x.shape + (count,))
        out[..., 0] = 1.0
        if count > 1:
            a, b, _ = self._rec[0]
            out[..., 1] = a * x + b
        for k in range(1, count - 1):
            a, b, c = self._rec[k]
            out[..., k + 1] = (a * x + b) * out[..., k] - c * out[..., k - 1]
        return out

    def evaluate(self, coeffs, x) -> np.ndarray:
        coeffs = np.asarray(coeffs, dtype=float)
        return self.values(x, len(coeffs)) @ coeffs

    def x_of_age(self, age):
        """Abscissa for a look-back ``age = t_now - t`` in seconds (>= 0)."""
        u = np.asarray(age, dtype=float) / self.tau
        if self.kind is BasisKind.SHIFTED_LEGENDRE:
            return np.exp(-u)
        if self.kind is BasisKind.LAGUERRE:
            return u
        return -u

    def age_of_x(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is BasisKind.SHIFTED_LEGENDRE:
            with np.errstate(divide="ignore"):
                return -self.tau * np.log(x)
        if self.kind is BasisKind.LAGUERRE:
            return self.tau * x
        return -self.tau * x

    # ----- algebra ----------------------------------------------------

    @cached_property
    def T_flat(self) -> np.ndarray:
        """Product table restricted to states: shape (n*n, N)."""
        n = self.n
        return np.ascontiguousarray(self.T[:n, :n, :].reshape(n * n, self.N))

    def operator(self, momvec) -> np.ndarray:
        """Matrix <Q_j|f|Q_k>, j,k < n, from the moment vector <Q_m f>."""
        mom = np.asarray(momvec, dtype=float)
        out = (mom @ self.T_flat.T).reshape(mom.shape[:-1] + (self.n, self.n))
        return 0.5 * (out + np.swapaxes(out, -1, -2))

    def product(self, a, b) -> np.ndarray:
        """Coefficients of the product of two states (length-n vectors, batched)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        outer = a[..., :, None] * b[..., None, :]
        n = self.n
        return outer.reshape(outer.shape[:-2] + (n * n,)) @ self.T_flat

    def multiply(self, a, b) -> np.ndarray:
        """General product of length-N coefficient vectors; degree overflow raises."""
        a = _pad(a, self.N)
        b = _pad(b, self.N)
        da, db = _degree(a), _degree(b)
        if da < 0 or db < 0:
            return np.zeros(self.N)
        if da + db > self.N - 1:
            raise DegreeOverflowError(f"product degree {da + db} exceeds {self.N - 1}")
        return np.einsum("j,k,jkm->m", a[: da + 1], b[: db + 1], self.T[: da + 1, : db + 1])

    def timeshift(self, c, measure_weighted: bool = False) -> np.ndarray:
        """d/dt of p(x(t)); with ``measure_weighted`` add the p/(2 tau) term."""
        c = _pad(c, self.N)
        return (self.Dw if measure_weighted else self.D) @ c

    def integrate(self, c) -> np.ndarray:
        """J(p) with  integral_{-inf}^t p omega dt' = omega(t) J(p)(x(t))."""
        return self.J @ _pad(c, self.N)

    def integral(self, c) -> float:
        """Full integral of p against the measure at the current anchor."""
        return float(self.g @ _pad(c, self.N))

    def deriv_x(self, c) -> np.ndarray:
        return self.Dx @ _pad(c, self.N)

    def to_monomial(self, c) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        return self.C[: len(c), : len(c)].T @ c

    def from_monomial(self, m) -> np.ndarray:
        m = np.asarray(m, dtype=float)
        return self.Cinv[: len(m), : len(m)].T @ m

    # ----- anchor shift -------------------------------------------------

    @cached_property
    def _legendre_quad(self):
        nodes, weights = npleg.leggauss(self.N)
        x = 0.5 * (nodes + 1.0)
        w = 0.5 * weights
        P = self.values(x)
        return x, (w[:, None] * P) * (2 * np.arange(self.N) + 1)[None, :]

    def shift_matrices(self, dt) -> np.ndarray:
        """Anchor-shift matrices for forward moves by ``dt`` seconds (batched).

        ``S @ mu`` re-expresses moments ``<Q_m f>`` anchored at t_now as moments
        anchored at t_now + dt, for any f supported before t_now.
        """
        dt = np.atleast_1d(np.asarray(dt, dtype=float))
        if np.any(dt < 0):
            raise ValueError("anchor cannot move backwards")
        delta = dt / self.tau
        N = self.N
        B = delta.shape[0]
        if self.kind is BasisKind.SHIFTED_LEGENDRE:
            a = np.exp(-delta)
            xq, wq = self._legendre_quad
            Pa = self.values(a[:, None] * xq[None, :])  # (B, nodes, k)
            R = np.swapaxes(Pa, 1, 2).reshape(B * N, N) @ wq
            return R.reshape(B, N, N) * a[:, None, None]
        diff = np.arange(N)[:, None] - np.arange(N)[None, :]
        lower = diff >= 0
        if self.kind is BasisKind.LAGUERRE:
            big = delta > 700.0
            dd = np.where(big, 0.0, delta)
            L = _laguerre_values(dd, N)  # (B, N)
            lm1 = np.empty_like(L)
            lm1[:, 0] = 1.0
            lm1[:, 1:] = L[:, 1:] - L[:, :-1]
            S = np.where(lower[None], lm1[:, np.clip(diff, 0, None)], 0.0)
            S *= np.exp(-dd)[:, None, None]
            S[big] = 0.0
            return S
        binom = np.array([[math.comb(k, j) if j <= k else 0 for j in range(N)] for k in range(N)],
                         dtype=float)
        big = delta > 700.0
        dd = np.where(big, 0.0, delta)
        powers = (-dd[:, None]) ** np.arange(N)[None, :]
        S = binom[None] * np.where(lower[None], powers[:, np.clip(diff, 0, None)], 0.0)
        S *= np.exp(-dd)[:, None, None]
        S[big] = 0.0
        return S

    def shift_matrix(self, dt: float) -> np.ndarray:
        return self.shift_matrices([dt])[0]

    def hold_increments(self, dt) -> np.ndarray:
        """Moments of the indicator of ages in [0, dt] (batched), i.e. ``g - S g``.

        Evaluated without that subtraction, which would cost all relative
        accuracy for short gaps (and, for monomials whose ``g_k`` grows like
        ``k!``, absolute accuracy too).
        """
        dt = np.atleast_1d(np.asarray(dt, dtype=float))
        delta = dt / self.tau
        k = np.arange(self.N)
        if self.kind is BasisKind.SHIFTED_LEGENDRE:
            # omega d(age) = tau dx: exact Gauss rule on [exp(-delta), 1]
            xq, wq = npleg.leggauss(self.N)
            width = -np.expm1(-delta)
            x = 1.0 - width[:, None] * 0.5 * (1.0 - xq[None, :])
            return 0.5 * self.tau * width[:, None] * (wq @ self.values(x))
        lower = special.gammainc(k[None, :] + 1, delta[:, None])  # P(k+1, delta)
        if self.kind is BasisKind.MONOMIALS:
            fact = np.exp([math.lgamma(j + 1) for j in k])
            return self.tau * (-1.0) ** k * fact * lower
        # Laguerre: L_m = sum_j (-1)^j C(m, j) u^j / j!; cancels for long gaps
        coef = np.array([[(-1.0) ** j * math.comb(m, j) for j in range(self.N)]
                         for m in range(self.N)])
        out = self.tau * lower @ coef.T
        long_gap = delta >= 1.0
        if long_gap.any():
            out[long_gap] = self.g[None, :] - self.shift_matrices(dt[long_gap]) @ self.g
        return out

    # ----- roots --------------------------------------------------------

    def real_roots(self, c, domain_only: bool = True) -> np.ndarray:
        """Real roots of a polynomial in Q-coefficients, ascending."""
        c = np.asarray(c, dtype=float)
        scale = np.max(np.abs(c)) if c.size else 0.0
        if scale == 0.0:
            raise ValueError("identically zero polynomial has no isolated roots")
        cc = np.trim_zeros(c, "b")
        if len(cc) <= 1:
            return np.empty(0)
        if self.kind is BasisKind.SHIFTED_LEGENDRE:
            raw = (npleg.legroots(cc) + 1.0) / 2.0
        elif self.kind is BasisKind.LAGUERRE:
            raw = npl.lagroots(cc)
        else:
            raw = npp.polyroots(cc)
        raw = np.atleast_1d(raw).astype(complex)
        dc = self.Dx[: len(cc), : len(cc)] @ cc
        out = []
        for z in raw:
            if abs(z.imag) > 1e-6 * (1 + abs(z.real)):
                continue
            y = z.real
            for _ in range(4):
                f = self.evaluate(cc, y)
                fp = self.evaluate(dc, y)
                if fp == 0 or not np.isfinite(fp):
                    break
                step = f / fp
                y -= step
                if abs(step) <= 1e-16 * (1 + abs(y)):
                    break
            if not np.isfinite(y):
                continue
            out.append(y)
        out.sort()
        roots: list[float] = []
        for y in out:
            if roots and abs(y - roots[-1]) <= 1e-9 * (1 + abs(y)):
                continue
            roots.append(y)
        roots_arr = np.array(roots)
        if domain_only and roots_arr.size:
            if self.kind is BasisKind.SHIFTED_LEGENDRE:
                keep = (roots_arr >= -1e-12) & (roots_arr <= 1 + 1e-12)
                roots_arr = np.clip(roots_arr[keep], 0.0, 1.0)
            elif self.kind is BasisKind.LAGUERRE:
                keep = roots_arr >= -1e-12
                roots_arr = np.clip(roots_arr[keep], 0.0, None)
        return roots_arr


def _laguerre_values(x, count):
    x = np.asarray(x, dtype=float)
    out = np.empty(x.shape + (count,))
    out[..., 0] = 1.0
    if count > 1:
        out[..., 1] = 1.0 - x
    for k in range(1, count - 1):
        out[..., k + 1] = ((2 * k + 1 - x) * out[..., k] - k * out[..., k - 1]) / (k + 1)
    return out


def _pad(c, N) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    if c.shape[-1] > N:
        if np.any(c[..., N:] != 0):
            raise DegreeOverflowError(f"coefficient vector longer than {N}")
        c = c[..., :N]
    if c.shape[-1] < N:
        pad = [(0, 0)] * (c.ndim - 1) + [(0, N - c.shape[-1])]
        c = np.pad(c, pad)
    return c


def _degree(c) -> int:
    nz = np.nonzero(c)[0]
    return int(nz[-1]) if nz.size else -1


@lru_cache(maxsize=64)
def get_basis(cfg: MeasureConfig) -> Basis:
    return Basis(cfg)


# --------------------------------------------------------------------------
# functional interface


@dataclass(frozen=True)
class BasisPoly:
    """Polynomial stored as Q-basis coefficients (length up to 2n - 1)."""

    coeffs: np.ndarray
    cfg: MeasureConfig

    def __post_init__(self):
        c = _pad(np.array(self.coeffs, dtype=float), self.cfg.n_moments)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return _degree(self.coeffs)

    def __call__(self, x):
        return get_basis(self.cfg).evaluate(self.coeffs, x)


def eval_basis(cfg: MeasureConfig, k: int, x):
    """Q_k(x) by the three-term recurrence."""
    if not (0 <= k <= 2 * cfg.n - 2):
        raise DomainError(f"basis index {k} outside [0, {2 * cfg.n - 2}]")
    b = get_basis(cfg)
    b.check_domain(x)
    v = b.values(x, k + 1)[..., k]
    return float(v) if np.ndim(v) == 0 else v


def x0_of(cfg: MeasureConfig) -> float:
    return 1.0 if cfg.basis_kind is BasisKind.SHIFTED_LEGENDRE else 0.0


def multiply_in_basis(a: BasisPoly, b: BasisPoly) -> BasisPoly:
    if a.cfg != b.cfg:
        raise ValueError("polynomials belong to different bases")
    return BasisPoly(get_basis(a.cfg).multiply(a.coeffs, b.coeffs), a.cfg)


def timeshift_D(cfg: MeasureConfig, p: BasisPoly) -> BasisPoly:
    return BasisPoly(get_basis(cfg).timeshift(p.coeffs), cfg)


def integrate_J(cfg: MeasureConfig, p: BasisPoly) -> BasisPoly:
    return BasisPoly(get_basis(cfg).integrate(p.coeffs), cfg)


def find_real_roots(cfg: MeasureConfig, p: BasisPoly) -> list[float]:
    domain_only = cfg.basis_kind is not BasisKind.MONOMIALS
    return get_basis(cfg).real_roots(p.coeffs, domain_only=domain_only).tolist()
