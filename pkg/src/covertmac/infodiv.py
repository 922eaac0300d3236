"""Information measures on finite alphabets (natural logarithms throughout)."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import entr, xlogy

from .channel import Dmmac, GeneralMac


class NotAbsolutelyContinuous(ArithmeticError):
    """Raised where a divergence is +infinity: ``p`` puts mass outside ``supp q``.

    This is the only way :func:`kl` reports an infinite value; it never
    returns ``float('inf')``.
    """

    def __init__(self, symbols=()):
        self.symbols = tuple(int(s) for s in symbols)
        super().__init__(f"p has mass where q is zero (symbols {self.symbols})")


class IntensityError(ValueError):
    """All covert intensities are zero, the mixture direction is undefined."""


def _pmf(p, name="p") -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return p


def kl(p, q) -> float:
    """Relative entropy D(p || q) in nats.

    Raises
    ------
    NotAbsolutelyContinuous
        If some symbol has ``p > 0`` and ``q == 0``.
    ValueError
        If the two pmfs have different lengths.
    """
    p, q = _pmf(p), _pmf(q, "q")
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.size} vs {q.size}")
    bad = np.flatnonzero((p > 0) & (q == 0))
    if bad.size:
        raise NotAbsolutelyContinuous(bad)
    m = p > 0
    return max(float(np.sum(p[m] * np.log(p[m] / q[m]))), 0.0)


def kl_rows(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Row-wise D(p || q) over the last axis; raises like :func:`kl`."""
    p, q = np.broadcast_arrays(np.asarray(p, float), np.asarray(q, float))
    bad = (p > 0) & (q == 0)
    if bad.any():
        raise NotAbsolutelyContinuous(np.flatnonzero(bad.reshape(-1, p.shape[-1]).any(axis=0)))
    safe_q = np.where(q > 0, q, 1.0)
    return np.maximum((xlogy(p, p) - xlogy(p, safe_q)).sum(axis=-1), 0.0)


def entropy_rows(p: np.ndarray) -> np.ndarray:
    return entr(np.asarray(p, float)).sum(axis=-1)


def mutual_information(p_x, w) -> float:
    """I(X;Y) for input pmf ``p_x`` and channel matrix ``w[x, y]``."""
    p_x = np.asarray(p_x, float)
    w = np.asarray(w, float)
    return max(float(entropy_rows(p_x @ w) - p_x @ entropy_rows(w)), 0.0)


def blahut_arimoto(w, tol: float = 1e-13, max_iter: int = 100_000):
    """Capacity (nats) and an optimal input of the channel ``w[x, y]``.

    Iterates until the standard upper and lower capacity bounds agree to
    ``tol``.
    """
    w = np.asarray(w, dtype=float)
    p = np.full(w.shape[0], 1.0 / w.shape[0])
    for _ in range(max_iter):
        q = p @ w
        d = kl_rows(w, q)
        lower, upper = float(p @ d), float(d.max())
        if upper - lower < tol:
            break
        p = p * np.exp(d - d.max())
        p /= p.sum()
    return mutual_information(p, w), p


# ------------------------------------------------------------ channel tables

@dataclass(frozen=True)
class DivergenceProfile:
    """Divergences of the active rows from the silent row, per ``x3``.

    d_y, d_z : (2, X3)
        Row ``l - 1`` holds user ``l`` active alone.
    d_y12, d_z12 : (X3,)
        Both users active. Admissibility does not constrain this row, so an
        entry is ``nan`` when it is not absolutely continuous.
    """

    d_y: np.ndarray
    d_z: np.ndarray
    d_y12: np.ndarray
    d_z12: np.ndarray


def _div_table(g: np.ndarray):
    base = g[0, 0]
    singles = np.stack([kl_rows(g[1, 0], base), kl_rows(g[0, 1], base)])
    both = np.empty(g.shape[2])
    for x3 in range(g.shape[2]):
        try:
            both[x3] = kl(g[1, 1, x3], base[x3])
        except NotAbsolutelyContinuous:
            both[x3] = np.nan
    return singles, both


def divergence_profile(channel: Dmmac) -> DivergenceProfile:
    dy, dy12 = _div_table(channel.gamma_y)
    dz, dz12 = _div_table(channel.gamma_z)
    return DivergenceProfile(dy, dz, dy12, dz12)


def chi2_matrix(channel: Dmmac) -> np.ndarray:
    """Gram matrices ``A[x3]`` with ``(r1 + r2)**2 * chi2(r1, r2, x3) = r @ A[x3] @ r``."""
    g = channel.gamma_z
    base = g[0, 0]
    diff = np.stack([g[1, 0] - base, g[0, 1] - base], axis=1)  # (X3, 2, Z)
    return _gram(diff, base)


def _gram(diff: np.ndarray, base: np.ndarray) -> np.ndarray:
    # diff (..., k, Z), base (..., Z)
    zero = base == 0
    if np.any(zero[..., None, :] & (diff != 0)):
        raise NotAbsolutelyContinuous(np.flatnonzero(zero.reshape(-1, base.shape[-1]).any(axis=0)))
    w = np.where(zero, 0.0, 1.0 / np.where(zero, 1.0, base))
    return np.einsum("...iz,...jz,...z->...ij", diff, diff, w)


def chi2_mixture(rho1: float, rho2: float, x3: int, channel: Dmmac) -> float:
    """Chi-squared distance of the intensity-weighted mixture of the two
    single-user warden rows from the silent row at ``x3``."""
    if rho1 < 0 or rho2 < 0:
        raise ValueError("intensities must be nonnegative")
    s = rho1 + rho2
    if not s > 0:
        raise IntensityError("rho1 + rho2 must be positive")
    g = channel.gamma_z
    base = g[0, 0, x3]
    mix = (rho1 / s) * g[1, 0, x3] + (rho2 / s) * g[0, 1, x3] - base
    return _chi2(mix, base)


def _chi2(diff: np.ndarray, base: np.ndarray) -> float:
    zero = base == 0
    if np.any(zero & (diff != 0)):
        raise NotAbsolutelyContinuous(np.flatnonzero(zero & (diff != 0)))
    return float(np.sum(diff[~zero] ** 2 / base[~zero]))


def _silent_index(channel: GeneralMac) -> tuple:
    return (0,) * channel.l_c


def _active_rows(gamma: np.ndarray, channel: GeneralMac, user: int, x_nc: tuple) -> np.ndarray:
    """Rows for user ``user`` (0-based) sending each symbol, others silent."""
    idx = [0] * channel.l_c
    rows = []
    for a in range(channel.covert_alphabet_sizes[user]):
        idx[user] = a
        rows.append(gamma[tuple(idx) + tuple(x_nc)])
    return np.array(rows)


def chi2_general(rho, psi, x_nc, channel: GeneralMac) -> float:
    """Chi-squared mixture distance for a general MAC.

    Parameters
    ----------
    rho : sequence of float, length ``l_c``
    psi : sequence of pmfs, ``psi[l]`` over the nonzero symbols of user ``l``
        (length ``|X_l| - 1``). ``None`` means the binary case.
    x_nc : tuple of int
        Non-covert input tuple.
    """
    rho = np.asarray(rho, float)
    if rho.shape != (channel.l_c,) or np.any(rho < 0):
        raise ValueError("rho must be a nonnegative vector over covert users")
    s = rho.sum()
    if not s > 0:
        raise IntensityError("rho must not vanish")
    psi = default_psi(channel) if psi is None else [np.asarray(p, float) for p in psi]
    base = channel.gamma_z[_silent_index(channel) + tuple(x_nc)]
    mix = -base.copy()
    for ell in range(channel.l_c):
        rows = _active_rows(channel.gamma_z, channel, ell, x_nc)[1:]
        mix = mix + (rho[ell] / s) * (psi[ell] @ rows)
    return _chi2(mix, base)


def default_psi(channel: GeneralMac) -> list:
    """Point masses on symbol 1 (the binary choice)."""
    out = []
    for size in channel.covert_alphabet_sizes:
        p = np.zeros(size - 1)
        p[0] = 1.0
        out.append(p)
    return out


# ------------------------------------------------------- non-covert MI terms

@dataclass(frozen=True, eq=False)
class JointInputLaw:
    """Phase pmf and per-phase laws of the non-covert inputs.

    Parameters
    ----------
    p_t : (T,)
    p_x_given_t : tuple of arrays, entry ``j`` of shape (T, |X_j|)
        One conditional per non-covert user; the users draw independently
        given the phase. A single array is accepted for the three-user MAC.
    """

    p_t: np.ndarray
    p_x_given_t: tuple

    def __post_init__(self):
        p_t = np.asarray(self.p_t, float)
        conds = self.p_x_given_t
        if isinstance(conds, np.ndarray) or (conds and np.ndim(conds[0]) == 1):
            conds = (conds,)
        conds = tuple(np.atleast_2d(np.asarray(c, float)) for c in conds)
        if p_t.ndim != 1:
            raise ValueError("p_t must be a vector")
        for name, arr in [("p_t", p_t)] + [(f"p_x_given_t[{j}]", c) for j, c in enumerate(conds)]:
            if np.any(arr < 0) or np.any(np.abs(arr.sum(axis=-1) - 1) > 1e-9):
                raise ValueError(f"{name} is not a pmf")
        for c in conds:
            if c.shape[0] != p_t.size:
                raise ValueError("conditional laws must have one row per phase")
        object.__setattr__(self, "p_t", p_t)
        object.__setattr__(self, "p_x_given_t", conds)

    @property
    def p_x3_given_t(self) -> np.ndarray:
        return self.p_x_given_t[0]

    @property
    def n_phases(self) -> int:
        return self.p_t.size

    def p_nc_given_t(self) -> np.ndarray:
        """Product law over all non-covert inputs, shape (T, |X_a|, |X_b|, ...)."""
        out = self.p_x_given_t[0]
        for c in self.p_x_given_t[1:]:
            out = out[..., None] * c.reshape((c.shape[0],) + (1,) * (out.ndim - 1) + (c.shape[1],))
        return out


def _cond_mi_subset(p_t, conds, w, subset) -> float:
    """I(X_J; Y | X_{J^c}, T) for product inputs and channel ``w[x_1, ..., x_m, y]``."""
    total = 0.0
    m = len(conds)
    for t in np.flatnonzero(p_t > 0):
        laws = [c[t] for c in conds]
        # H(Y | X_all)
        joint = laws[0]
        for c in laws[1:]:
            joint = np.multiply.outer(joint, c)
        h_full = float(np.sum(joint * entropy_rows(w)))
        # average the subset out of the channel, then H(Y | X_Jc)
        v = w
        for j in sorted(subset, reverse=True):
            v = np.tensordot(laws[j], v, axes=([0], [j]))
        rest = [laws[j] for j in range(m) if j not in subset]
        jr = np.ones(())
        for c in rest:
            jr = np.multiply.outer(jr, c)
        h_rest = float(np.sum(jr * entropy_rows(v)))
        total += p_t[t] * (h_rest - h_full)
    return max(total, 0.0)


def cond_mi_nc(joint: JointInputLaw, channel):
    """Rate bound(s) of the non-covert users with every covert user silent.

    For a :class:`Dmmac` returns ``I(X3; Y | X1=0, X2=0, T)``. For a
    :class:`GeneralMac` returns ``{J: I(X_J; Y | X_c=0, X_{J^c}, T)}`` for every
    subset ``J`` of non-covert users, with users numbered globally
    ``l_c + 1, ..., L`` as in the rate tuple.
    """
    if isinstance(channel, Dmmac):
        return _cond_mi_subset(joint.p_t, joint.p_x_given_t, channel.gamma_y[0, 0], (0,))
    if isinstance(channel, GeneralMac):
        w = channel.gamma_y[_silent_index(channel)]
        m = channel.l_nc
        out = {}
        for k in range(m + 1):
            for sub in combinations(range(m), k):
                key = frozenset(channel.l_c + 1 + j for j in sub)
                out[key] = _cond_mi_subset(joint.p_t, joint.p_x_given_t, w, sub) if sub else 0.0
        return out
    raise TypeError(f"unsupported channel {type(channel).__name__}")


# ----------------------------------------------------- identities and limits

@dataclass(frozen=True)
class ProductLaw:
    """Factorizing law of (T, X1, X2, X3): ``P_T * P_{X1|T} * P_{X2|T} * P_{X3|T}``.

    p1, p2 : (T,) probabilities of a covert 1.
    p3 : (T, X3).
    """

    p_t: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    p3: np.ndarray

    @classmethod
    def from_joint(cls, joint, tol: float = 1e-12) -> "ProductLaw":
        """Factor a joint pmf over (T, X1, X2, X3); raise if it does not factor."""
        joint = np.asarray(joint, float)
        p_t = joint.sum(axis=(1, 2, 3))
        cond = joint / np.where(p_t > 0, p_t, 1.0)[:, None, None, None]
        p1 = cond.sum(axis=(2, 3))[:, 1]
        p2 = cond.sum(axis=(1, 3))[:, 1]
        p3 = cond.sum(axis=(1, 2))
        law = cls(p_t, p1, p2, p3)
        if np.max(np.abs(law.joint() - joint)) > tol:
            raise ValueError("joint law does not factorize given T")
        return law

    def joint(self) -> np.ndarray:
        q1 = np.stack([1 - self.p1, self.p1], axis=1)
        q2 = np.stack([1 - self.p2, self.p2], axis=1)
        return np.einsum("t,ta,tb,tx->tabx", self.p_t, q1, q2, self.p3)


def _cond_mi_direct(law: ProductLaw, g: np.ndarray, user: int, fixed: int, t: int) -> float:
    # entropy route: H(Y | X_other=fixed, X3) - H(Y | X1, X2, X3)
    q = np.array([1 - law.p1[t], law.p1[t]]) if user == 1 else np.array([1 - law.p2[t], law.p2[t]])
    rows = g[:, fixed] if user == 1 else g[fixed]  # (2, X3, Y)
    mix = np.einsum("a,axy->xy", q, rows)
    h = entropy_rows(mix) - np.einsum("a,ax->x", q, entropy_rows(rows))
    return float(law.p3[t] @ h)


def _cond_mi_divergences(law: ProductLaw, g: np.ndarray, user: int, fixed: int, t: int) -> float:
    # divergence route, every term measured against a common reference row
    q = np.array([1 - law.p1[t], law.p1[t]]) if user == 1 else np.array([1 - law.p2[t], law.p2[t]])
    rows = g[:, fixed] if user == 1 else g[fixed]
    ref = g[0, 0] if user == 1 else g[fixed, 0]
    mix = np.einsum("a,axy->xy", q, rows)
    val = 0.0
    for a in (0, 1):
        if q[a] > 0:
            val += q[a] * float(law.p3[t] @ kl_rows(rows[a], ref))
    return val - float(law.p3[t] @ kl_rows(mix, ref))


def mi_identity_gap(law: ProductLaw, channel: Dmmac, user: int = 1, fixed: int = 0) -> float:
    """Largest residual over phases between two evaluations of
    ``I(X_user; Y | X_other = fixed, X3, T = t)``.

    The first is the entropy difference. The second rewrites the mutual
    information as divergences from a reference row: the all-silent row for
    user 1 and the row ``(fixed, 0, x3)`` for user 2,

        P(1) E[D(G(.|1,..) || ref)] + P(0) E[D(G(.|0,..) || ref)] - E[D(G_avg || ref)].

    The ``P(0)`` term vanishes whenever the reference equals the user's
    silent row, i.e. for user 1 with ``fixed = 0`` and always for user 2.
    """
    if user not in (1, 2) or fixed not in (0, 1):
        raise ValueError("user must be 1 or 2 and fixed must be 0 or 1")
    g = channel.gamma_y
    res = 0.0
    for t in range(law.p_t.size):
        a = _cond_mi_direct(law, g, user, fixed, t)
        b = _cond_mi_divergences(law, g, user, fixed, t)
        res = max(res, abs(a - b))
    return res


def cond_mi_bound(law: ProductLaw, channel: Dmmac, t: int = 0):
    """``I(X1; Y | X2, X3, T=t)`` and the finite-intensity upper bound

        P(X1=1|t) * (E[D_Y1(X3)] + P(X2=1|t) * E[D(G(.|1,1,X3) || G(.|0,1,X3))]).

    Returns ``(value, bound)``.
    """
    g = channel.gamma_y
    p2 = law.p2[t]
    value = (1 - p2) * _cond_mi_direct(law, g, 1, 0, t) + p2 * _cond_mi_direct(law, g, 1, 1, t)
    d1 = float(law.p3[t] @ kl_rows(g[1, 0], g[0, 0]))
    d11 = float(law.p3[t] @ kl_rows(g[1, 1], g[0, 1]))
    return value, law.p1[t] * (d1 + p2 * d11)


def local_div_ratio(alpha1: float, alpha2: float, x3: int, channel: Dmmac) -> float:
    """Ratio of the exact warden divergence under independent Bernoulli(alpha_l)
    covert inputs to its second-order approximation
    ``(alpha1 + alpha2)**2 / 2 * chi2``.
    """
    s = alpha1 + alpha2
    if alpha1 < 0 or alpha2 < 0 or not 0 < s <= 0.2:
        raise ValueError("need alpha1, alpha2 >= 0 with 0 < alpha1 + alpha2 <= 0.2")
    g = channel.gamma_z[:, :, x3]
    base = g[0, 0]
    # mixture minus base, assembled from row differences to avoid cancellation
    d = (alpha1 * (1 - alpha2) * (g[1, 0] - base) + alpha2 * (1 - alpha1) * (g[0, 1] - base)
         + alpha1 * alpha2 * (g[1, 1] - base))
    zero = base == 0
    if np.any(zero & (d != 0)):
        raise NotAbsolutelyContinuous(np.flatnonzero(zero & (d != 0)))
    u = d[~zero] / base[~zero]
    exact = float(np.sum(base[~zero] * ((1 + u) * np.log1p(u) - u)))
    approx = s * s / 2 * chi2_mixture(alpha1, alpha2, x3, channel)
    if approx == 0:
        raise IntensityError("the mixture equals the silent law, ratio undefined")
    return exact / approx
