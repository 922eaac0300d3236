"""Closed-form evaluation of rate-key tuples from witness parameters.

These routines follow the region formulas term by term and are kept
separate from the vectorized evaluator used by the optimizer, so each can
check the other.
"""
from __future__ import annotations

import math

import numpy as np

from ..channel import Dmmac, DmicChannel, GeneralMac, is_user_inert, is_x3_inert
from ..infodiv import (JointInputLaw, chi2_general, chi2_mixture, cond_mi_nc, default_psi,
                       divergence_profile, kl)
from .params import CovertParams, RateKeyTuple, ZeroDenominator

SQRT2 = math.sqrt(2.0)
POLYMATROID_TOL = 1e-9


class NotReducible(ValueError):
    """The channel does not reduce to the requested special case."""


def _phase_cells(params: CovertParams):
    """Yield ``(t, x3, P(t, x3))`` over the support of a MAC phase law."""
    p3 = params.joint.p_x3_given_t
    for t, pt in enumerate(params.joint.p_t):
        for x3, px in enumerate(p3[t]):
            if pt * px > 0:
                yield t, x3, pt * px


def _mac_moments(params: CovertParams, channel: Dmmac):
    if params.l_c != 2:
        raise ValueError("the three-user MAC has two covert users")
    if params.joint.p_x3_given_t.shape[1] != channel.x3_size:
        raise ValueError("P_{X3|T} does not match the channel's x3 alphabet")
    prof = divergence_profile(channel)
    num = np.zeros(2)
    key = np.zeros(2)
    den = 0.0
    for t, x3, p in _phase_cells(params):
        rho = params.rho[t]
        num += p * rho * prof.d_y[:, x3]
        key += p * rho * (prof.d_z[:, x3] - prof.d_y[:, x3])
        s = rho.sum()
        if s > 0:
            den += p * s * s * chi2_mixture(rho[0], rho[1], x3, channel)
    return num, key, den


def _assemble(beta, num, key, den, r_nc, nc_bounds=None) -> RateKeyTuple:
    if not den > 0:
        raise ZeroDenominator("all covert intensities vanish on the phase support")
    scale = SQRT2 / math.sqrt(den)
    r = beta * num * scale
    ks = beta * key * scale
    return RateKeyTuple(r, np.atleast_1d(np.asarray(r_nc, float)), np.maximum(ks, 0.0), ks,
                        nc_bounds or {})


def corner(params: CovertParams, channel: Dmmac) -> RateKeyTuple:
    """Rate-key tuple of the three-user MAC attained by ``params``."""
    num, key, den = _mac_moments(params, channel)
    return _assemble(params.beta, num, key, den, [cond_mi_nc(params.joint, channel)])


def jammer_region_point(params: CovertParams, channel: Dmmac) -> RateKeyTuple:
    """As :func:`corner` with the non-covert user carrying no message."""
    full = corner(params, channel)
    return RateKeyTuple(full.r, np.zeros(0), full.k, full.k_signed)


def corner_ic(params: CovertParams, channel: DmicChannel) -> RateKeyTuple:
    """Rate-key tuple over the interference channel.

    User ``l`` is measured at receiver ``l``; the common message must be
    decodable at both receivers.
    """
    per_rx = [corner(params, channel.receiver(ell)) for ell in (1, 2)]
    r = np.array([per_rx[0].r[0], per_rx[1].r[1]])
    ks = np.array([per_rx[0].k_signed[0], per_rx[1].k_signed[1]])
    r3 = min(per_rx[0].r_nc[0], per_rx[1].r_nc[0])
    return RateKeyTuple(r, np.array([r3]), np.maximum(ks, 0.0), ks)


# ------------------------------------------------------------- general MAC

def _cells(joint: JointInputLaw):
    """Yield ``(t, x_nc, P(t, x_nc))`` under the product law given the phase."""
    conds = joint.p_x_given_t
    for t, pt in enumerate(joint.p_t):
        if pt <= 0:
            continue
        grids = np.meshgrid(*[np.arange(c.shape[1]) for c in conds], indexing="ij")
        for idx in zip(*(g.ravel() for g in grids)):
            p = pt * np.prod([conds[j][t, x] for j, x in enumerate(idx)])
            if p > 0:
                yield t, tuple(int(i) for i in idx), p


def _row(gamma, l_c, user, symbol, x_nc):
    idx = [0] * l_c
    if user is not None:
        idx[user] = symbol
    return gamma[tuple(idx) + x_nc]


def _greedy_vertex(bounds: dict, users: list) -> np.ndarray:
    out = []
    prev = 0.0
    chosen = set()
    for u in users:
        chosen.add(u)
        cur = bounds[frozenset(chosen)]
        out.append(cur - prev)
        prev = cur
    return np.array(out)


def _general_moments(params: CovertParams, channel: GeneralMac):
    lc = channel.l_c
    if params.l_c != lc:
        raise ValueError("params and channel disagree on the number of covert users")
    psi = params.psi
    if psi is None:
        if any(s > 2 for s in channel.covert_alphabet_sizes):
            raise ValueError("psi is required for non-binary covert alphabets")
        psi = tuple(np.tile(p, (params.n_phases, 1)) for p in default_psi(channel))
    num = np.zeros(lc)
    key = np.zeros(lc)
    den = 0.0
    for t, x_nc, p in _cells(params.joint):
        y0 = _row(channel.gamma_y, lc, None, 0, x_nc)
        z0 = _row(channel.gamma_z, lc, None, 0, x_nc)
        for ell in range(lc):
            for a in range(1, channel.covert_alphabet_sizes[ell]):
                w = psi[ell][t, a - 1]
                if w == 0:
                    continue
                dy = kl(_row(channel.gamma_y, lc, ell, a, x_nc), y0)
                dz = kl(_row(channel.gamma_z, lc, ell, a, x_nc), z0)
                num[ell] += p * params.rho[t, ell] * w * dy
                key[ell] += p * params.rho[t, ell] * w * (dz - dy)
        s = params.rho[t].sum()
        if s > 0:
            den += p * s * s * chi2_general(params.rho[t], [q[t] for q in psi], x_nc, channel)
    return num, key, den


def corner_general(params: CovertParams, channel: GeneralMac) -> RateKeyTuple:
    """Rate-key tuple of a MAC with several covert and non-covert users.

    Non-covert rates are ``params.nc_rates`` when given (checked against the
    polymatroid), otherwise the vertex that grants each user, in index
    order, its conditional mutual information given the users before it.
    """
    num, key, den = _general_moments(params, channel)
    lc = channel.l_c
    bounds = cond_mi_nc(params.joint, channel)
    users = list(range(lc + 1, lc + channel.l_nc + 1))
    if params.nc_rates is not None:
        r_nc = params.nc_rates
        if r_nc.shape != (channel.l_nc,) or np.any(r_nc < 0):
            raise ValueError("nc_rates needs one nonnegative rate per non-covert user")
        for subset, bound in bounds.items():
            used = sum(r_nc[u - lc - 1] for u in subset)
            if used > bound + POLYMATROID_TOL:
                raise ValueError(f"nc_rates exceed the sum-rate bound of users {sorted(subset)}")
    else:
        r_nc = _greedy_vertex(bounds, users)
    return _assemble(params.beta, num, key, den, r_nc, bounds)


def covert_moments(params: CovertParams, channel):
    """``(num, key, den)``: the per-user numerators of the rate and key
    expressions and the shared chi-squared denominator (before the
    ``beta * sqrt(2 / den)`` factor)."""
    if isinstance(channel, Dmmac):
        return _mac_moments(params, channel)
    if isinstance(channel, DmicChannel):
        n1, k1, den = _mac_moments(params, channel.receiver(1))
        n2, k2, _ = _mac_moments(params, channel.receiver(2))
        return np.array([n1[0], n2[1]]), np.array([k1[0], k2[1]]), den
    if isinstance(channel, GeneralMac):
        return _general_moments(params, channel)
    raise TypeError(f"unsupported channel {type(channel).__name__}")


def evaluate(params: CovertParams, channel) -> RateKeyTuple:
    """Dispatch to :func:`corner`, :func:`corner_ic` or :func:`corner_general`."""
    if isinstance(channel, Dmmac):
        return corner(params, channel)
    if isinstance(channel, DmicChannel):
        return corner_ic(params, channel)
    if isinstance(channel, GeneralMac):
        return corner_general(params, channel)
    raise TypeError(f"unsupported channel {type(channel).__name__}")


# --------------------------------------------------------- special cases

def single_user_constants(channel: Dmmac, user: int = 1):
    """``(D_Y, D_Z, chi2)`` of covert ``user`` on a reducible channel."""
    other = 2 if user == 1 else 1
    if not (is_x3_inert(channel) and is_user_inert(channel, other)):
        raise NotReducible(f"the channel depends on x3 or on covert user {other}")
    prof = divergence_profile(channel)
    rho = (1.0, 0.0) if user == 1 else (0.0, 1.0)
    return (float(prof.d_y[user - 1, 0]), float(prof.d_z[user - 1, 0]),
            chi2_mixture(*rho, 0, channel))


def single_user_tradeoff(k1: float, channel: Dmmac, user: int = 1) -> float:
    """Largest covert rate of a single covert user under key budget ``k1``.

    Linear in the budget with slope ``D_Y / (D_Z - D_Y)`` until it saturates
    at ``sqrt(2) D_Y / sqrt(chi2)``; flat when ``D_Z <= D_Y``.
    """
    if k1 < 0:
        raise ValueError("key budget must be nonnegative")
    dy, dz, chi2 = single_user_constants(channel, user)
    cap = SQRT2 * dy / math.sqrt(chi2)
    if dz <= dy:
        return cap
    return min(k1 * dy / (dz - dy), cap)


def tradeoff_knee(channel: Dmmac, user: int = 1) -> float:
    """Key budget at which :func:`single_user_tradeoff` saturates (0 if flat)."""
    dy, dz, chi2 = single_user_constants(channel, user)
    return max(SQRT2 * (dz - dy) / math.sqrt(chi2), 0.0)


def two_user_region_point(rho1: float, rho2: float, beta, channel: Dmmac) -> RateKeyTuple:
    """Two covert users, the non-covert input has no effect, no time sharing."""
    if rho1 < 0 or rho2 < 0 or abs(rho1 + rho2 - 1.0) > 1e-12:
        raise ValueError("rho1 and rho2 must be nonnegative and sum to 1")
    if not is_x3_inert(channel):
        raise NotReducible("the channel depends on x3")
    prof = divergence_profile(channel)
    rho = np.array([rho1, rho2])
    chi2 = chi2_mixture(rho1, rho2, 0, channel)
    num = rho * prof.d_y[:, 0]
    key = rho * (prof.d_z[:, 0] - prof.d_y[:, 0])
    return _assemble(np.broadcast_to(np.asarray(beta, float), (2,)), num, key, chi2, [0.0])


# --------------------------------------------------------------- convexity

def denominator(params: CovertParams, channel) -> float:
    """``E[||rho_T||_1^2 chi2]`` for ``params`` on ``channel``."""
    return covert_moments(params, channel)[2]


def convex_mix(a: CovertParams, b: CovertParams, lam: float, channel) -> CovertParams:
    """Parameters whose tuple is ``lam * tuple(a) + (1 - lam) * tuple(b)``.

    The phases of ``a`` keep their intensities with weight ``lam``; the
    phases of ``b`` follow with weight ``1 - lam`` and intensities scaled by
    ``nu = sqrt(den(a) / den(b))`` so both halves share one denominator.
    Key requirements mix linearly before clamping at zero.

    Both inputs must use the same ``beta``; the identity does not hold
    otherwise.
    """
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    if a.beta.shape != b.beta.shape or np.max(np.abs(a.beta - b.beta)) > 1e-12:
        raise ValueError("convex_mix needs equal beta on both sides")
    den_a, den_b = denominator(a, channel), denominator(b, channel)
    if not (den_a > 0 and den_b > 0):
        raise ZeroDenominator("one side has no chi-squared mass")
    nu = math.sqrt(den_a / den_b)
    p_t = np.concatenate([lam * a.joint.p_t, (1 - lam) * b.joint.p_t])
    conds = tuple(np.vstack([ca, cb]) for ca, cb in zip(a.joint.p_x_given_t, b.joint.p_x_given_t))
    rho = np.vstack([a.rho, nu * b.rho])
    psi = None
    if a.psi is not None or b.psi is not None:
        pa = a.psi or tuple(np.tile(p, (a.n_phases, 1)) for p in default_psi(channel))
        pb = b.psi or tuple(np.tile(p, (b.n_phases, 1)) for p in default_psi(channel))
        psi = tuple(np.vstack([x, y]) for x, y in zip(pa, pb))
    return CovertParams(JointInputLaw(p_t, conds), rho, a.beta.copy(), psi)
