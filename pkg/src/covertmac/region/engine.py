"""Batched evaluation of region moments for the optimizer.

A parameter point is a flat real vector: phase logits, logits of the free
non-covert conditionals, nonnegative per-symbol covert intensities, the
fractions ``beta`` and one rate variable per non-covert user. Every
operation below is complex-analytic, so exact first derivatives come from a
single batched complex-step evaluation.
"""
from __future__ import annotations

import string
from itertools import combinations

import numpy as np

from ..channel import Dmmac, DmicChannel, GeneralMac
from ..infodiv import JointInputLaw, entropy_rows, kl_rows
from .params import CovertParams

LOGIT_BOUND = 30.0
STEP = 1e-30


def _softmax(x):
    m = np.max(x.real, axis=-1, keepdims=True)
    e = np.exp(x - m)
    return e / e.sum(axis=-1, keepdims=True)


def _neg_xlogx(p):
    zero = p == 0
    safe = np.where(zero, 1.0, p)
    return np.where(zero, 0.0, -p * np.log(safe))


class Problem:
    """Channel tables and variable layout for one optimization.

    Parameters
    ----------
    channel : Dmmac, DmicChannel or GeneralMac
    n_phases : int
    fixed_nc : dict, optional
        Maps a non-covert user position (0-based) to a pinned conditional law,
        a pmf over its alphabet or a (T, |X|) array.
    """

    def __init__(self, channel, n_phases: int, fixed_nc: dict | None = None):
        self.channel = channel
        self.T = int(n_phases)
        if isinstance(channel, GeneralMac):
            self.kind = "general"
            cov_sizes = channel.covert_alphabet_sizes
            nc_sizes = channel.nc_alphabet_sizes
            gy = [channel.gamma_y]
        elif isinstance(channel, (Dmmac, DmicChannel)):
            self.kind = "mac" if isinstance(channel, Dmmac) else "ic"
            cov_sizes = (2, 2)
            nc_sizes = (channel.x3_size,)
            gy = [channel.gamma_y] if self.kind == "mac" else [channel.gamma_y1, channel.gamma_y2]
        else:
            raise TypeError(f"unsupported channel {type(channel).__name__}")
        gz = channel.gamma_z
        self.lc = len(cov_sizes)
        self.nc_sizes = tuple(nc_sizes)
        self.lnc = len(nc_sizes)
        self.cov_sizes = tuple(cov_sizes)
        self.symbols = [(ell, a) for ell in range(self.lc) for a in range(1, cov_sizes[ell])]
        S = len(self.symbols)
        self.owner = np.zeros((S, self.lc))
        for s, (ell, _) in enumerate(self.symbols):
            self.owner[s, ell] = 1.0
        C = int(np.prod(nc_sizes))
        zero = (0,) * self.lc

        def active(g, ell, a):
            idx = [0] * self.lc
            idx[ell] = a
            return g[tuple(idx)].reshape(C, -1)

        z0 = gz[zero].reshape(C, -1)
        self.dy = np.empty((S, C))
        self.dz = np.empty((S, C))
        diffs = np.empty((C, S, z0.shape[1]))
        for s, (ell, a) in enumerate(self.symbols):
            g = gy[ell] if self.kind == "ic" else gy[0]
            self.dy[s] = kl_rows(active(g, ell, a), g[zero].reshape(C, -1))
            self.dz[s] = kl_rows(active(gz, ell, a), z0)
            diffs[:, s] = active(gz, ell, a) - z0
        w = np.where(z0 > 0, 1.0 / np.where(z0 > 0, z0, 1.0), 0.0)
        self.gram = np.einsum("csz,crz,cz->csr", diffs, diffs, w)
        self.dk = self.dz - self.dy
        # rate and key numerators share one contraction
        self._nk = np.concatenate([np.einsum("sc,sl->csl", self.dy, self.owner),
                                   np.einsum("sc,sl->csl", self.dk, self.owner)], axis=2)

        # receivers with every covert user silent: tensors over (x_nc..., y)
        self.receivers = [g[zero] for g in gy]
        self.subsets = [sub for k in range(1, self.lnc + 1) for sub in combinations(range(self.lnc), k)]
        self._mi_plan = []
        letters = string.ascii_lowercase[: self.lnc]
        for w_k in self.receivers:
            h_all = entropy_rows(w_k).reshape(C)
            plans = []
            for sub in self.subsets:
                rest = [j for j in range(self.lnc) if j not in sub]
                ops = ",".join([letters + "y"] + ["bt" + letters[j] for j in sub])
                out = "bt" + "".join(letters[j] for j in rest) + "y"
                wq = None
                if rest:
                    wq = (",".join("bt" + letters[j] for j in rest) + "->bt"
                          + "".join(letters[j] for j in rest))
                plans.append((sub, rest, f"{ops}->{out}", wq))
            self._mi_plan.append((w_k, h_all, plans))

        # variable layout
        fixed_nc = dict(fixed_nc or {})
        self.fixed_nc = {}
        for j, law in fixed_nc.items():
            arr = np.asarray(law, float)
            if arr.ndim == 1:
                arr = np.tile(arr, (self.T, 1))
            if arr.shape != (self.T, self.nc_sizes[j]):
                raise ValueError(f"pinned law of non-covert user {j} has the wrong shape")
            self.fixed_nc[j] = arr
        pos = 0

        def take(n):
            nonlocal pos
            sl = slice(pos, pos + n)
            pos += n
            return sl

        self.sl_pt = take(self.T)
        self.sl_nc = [None if j in self.fixed_nc else take(self.T * self.nc_sizes[j])
                      for j in range(self.lnc)]
        self.sl_rho = take(self.T * S)
        self.sl_beta = take(self.lc)
        self.sl_rate = take(self.lnc)
        self.n_vars = pos
        self.S = S
        self.C = C

    # ---------------------------------------------------------------- layout
    def bounds(self, rate_bounds=None):
        lo = np.full(self.n_vars, -LOGIT_BOUND)
        hi = np.full(self.n_vars, LOGIT_BOUND)
        lo[self.sl_rho], hi[self.sl_rho] = 0.0, 1.0
        lo[self.sl_beta], hi[self.sl_beta] = 0.0, 1.0
        cap = max(float(np.log(w.shape[-1])) for w in self.receivers)
        lo[self.sl_rate], hi[self.sl_rate] = 0.0, cap
        if rate_bounds:
            for j, (a, b) in rate_bounds.items():
                lo[self.sl_rate.start + j] = a
                hi[self.sl_rate.start + j] = b
        return lo, hi

    def unpack(self, X):
        X = np.atleast_2d(X)
        B = X.shape[0]
        u = _softmax(X[:, self.sl_pt])
        conds = []
        for j in range(self.lnc):
            if self.sl_nc[j] is None:
                conds.append(np.broadcast_to(self.fixed_nc[j], (B,) + self.fixed_nc[j].shape))
            else:
                conds.append(_softmax(X[:, self.sl_nc[j]].reshape(B, self.T, self.nc_sizes[j])))
        rho = X[:, self.sl_rho].reshape(B, self.T, self.S)
        return u, conds, rho, X[:, self.sl_beta], X[:, self.sl_rate]

    def cell_law(self, conds):
        q = conds[0]
        for c in conds[1:]:
            q = q[..., :, None] * c[..., None, :]
            q = q.reshape(q.shape[0], q.shape[1], -1)
        return q  # (B, T, C)

    # --------------------------------------------------------------- moments
    def moments(self, X):
        """Return ``num (B, lc), key (B, lc), den (B,), mi (B, n_rx, n_sub)``."""
        u, conds, rho, beta, rate = self.unpack(X)
        q = self.cell_law(conds)
        w = u[:, :, None] * q  # P(t, c)
        wr = np.einsum("btc,bts->bcs", w, rho)
        nk = np.einsum("bcs,csl->bl", wr, self._nk)
        num, key = nk[:, : self.lc], nk[:, self.lc:]
        den = np.einsum("btc,bts,csr,btr->b", w, rho, self.gram, rho)
        mi = np.empty((X.shape[0], len(self.receivers), len(self.subsets)), dtype=X.dtype)
        for k, (w_k, h_all, plans) in enumerate(self._mi_plan):
            h_full = np.einsum("btc,c->bt", q, h_all)
            for i, (sub, rest, spec, wq) in enumerate(plans):
                v = np.einsum(spec, w_k, *[conds[j] for j in sub])
                h = _neg_xlogx(v).sum(axis=-1)
                if rest:
                    weights = np.einsum(wq, *[conds[j] for j in rest])
                    h = (h * weights).reshape(h.shape[0], h.shape[1], -1).sum(axis=-1)
                mi[:, k, i] = np.einsum("bt,bt->b", u, h - h_full)
        return num, key, den, mi

    # ------------------------------------------------------------ conversion
    def to_params(self, x) -> CovertParams:
        u, conds, rho_s, beta, rate = self.unpack(np.asarray(x, float)[None])
        p_t = u[0]
        conds = tuple(np.array(c[0]) for c in conds)
        rho = rho_s[0] @ self.owner
        psi = None
        if any(s > 2 for s in self.cov_sizes):
            psi = []
            for ell in range(self.lc):
                cols = [s for s, (l2, _) in enumerate(self.symbols) if l2 == ell]
                block = rho_s[0][:, cols]
                tot = block.sum(axis=1, keepdims=True)
                first = np.zeros_like(block)
                first[:, 0] = 1.0
                psi.append(np.where(tot > 0, block / np.where(tot > 0, tot, 1.0), first))
            psi = tuple(psi)
        nc_rates = np.array(rate[0]) if self.kind == "general" else None
        return CovertParams(JointInputLaw(p_t, conds), rho, np.clip(beta[0], 0, 1), psi, nc_rates)

    def from_params(self, params: CovertParams) -> np.ndarray | None:
        """Encode ``params`` (padding with negligible phases); None if it has
        more phases than the problem."""
        T0 = params.n_phases
        if T0 > self.T:
            return None
        x = np.zeros(self.n_vars)
        lp = np.full(self.T, -LOGIT_BOUND)
        with np.errstate(divide="ignore"):
            lp[:T0] = np.clip(np.log(params.joint.p_t), -LOGIT_BOUND, None)
        x[self.sl_pt] = lp - lp.max()
        for j in range(self.lnc):
            if self.sl_nc[j] is None:
                continue
            c = np.full((self.T, self.nc_sizes[j]), 1.0 / self.nc_sizes[j])
            c[:T0] = params.joint.p_x_given_t[j]
            with np.errstate(divide="ignore"):
                lc_ = np.clip(np.log(c), -LOGIT_BOUND, None)
            x[self.sl_nc[j]] = (lc_ - lc_.max(axis=1, keepdims=True)).ravel()
        rho_s = np.zeros((self.T, self.S))
        for s, (ell, a) in enumerate(self.symbols):
            w = 1.0 if params.psi is None else params.psi[ell][:, a - 1]
            rho_s[:T0, s] = params.rho[:, ell] * w
        top = rho_s.max()
        if top > 0:
            rho_s /= top
        x[self.sl_rho] = rho_s.ravel()
        x[self.sl_beta] = params.beta
        return x

    def random_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        X = np.zeros((count, self.n_vars))
        X[:, self.sl_pt] = rng.normal(0.0, 2.0, (count, self.T))
        for sl in self.sl_nc:
            if sl is not None:
                X[:, sl] = rng.normal(0.0, 2.0, (count, sl.stop - sl.start))
        rho = rng.uniform(0.0, 1.0, (count, self.T * self.S))
        # sparse intensity patterns reach the extreme directions
        rho *= rng.uniform(size=rho.shape) > 0.3
        rho[rho.sum(axis=1) == 0, 0] = 1.0
        X[:, self.sl_rho] = rho
        X[:, self.sl_beta] = 1.0
        return X
