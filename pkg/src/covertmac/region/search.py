"""Weighted-objective search over region witnesses."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.optimize import minimize

from ..channel import Dmmac, DmicChannel, GeneralMac
from ..infodiv import JointInputLaw, cond_mi_nc
from .engine import STEP, Problem
from .formulas import covert_moments, evaluate
from .params import CovertParams, RateKeyTuple

SQRT2 = math.sqrt(2.0)
FEAS_TOL = 1e-9
PRUNE = 1e-10


class InfeasibleQuery(ValueError):
    """No witness meets the fixed rates and key budgets."""

    def __init__(self, message: str, best_violation: float | None = None):
        super().__init__(message)
        self.best_violation = best_violation


@dataclass(frozen=True)
class RegionQuery:
    """What to maximize and under which constraints.

    Rates are named ``r1, r2, ...`` (covert) and ``R3, ...`` (non-covert,
    numbered after the covert users); keys ``k1, k2, ...``. All values are
    in nats.

    Parameters
    ----------
    weights : dict
        Objective weight per rate name; nonnegative, not all zero.
    budgets : dict
        Upper bound per key name; omitted keys are unconstrained.
    fixed : dict
        Rate name to required value. A covert rate is met exactly; a
        non-covert rate is a lower bound on the attained rate.
    pinned : dict
        Non-covert user position (0-based) to a fixed input law, either one
        pmf for every phase or a (T, |X|) array.
    """

    weights: dict
    budgets: dict = field(default_factory=dict)
    fixed: dict = field(default_factory=dict)
    pinned: dict = field(default_factory=dict)

    def __post_init__(self):
        w = self.weights
        if any(v < 0 for v in w.values()) or not any(v > 0 for v in w.values()):
            raise ValueError("weights must be nonnegative and not all zero")


@dataclass
class RegionPoint:
    """Best tuple found and its witness. Unpacks as ``(rates, params)``."""

    rates: RateKeyTuple
    params: CovertParams
    objective: float
    violation: float = 0.0

    def __iter__(self):
        return iter((self.rates, self.params))


def default_phases(channel) -> int:
    if isinstance(channel, Dmmac):
        return 6
    if isinstance(channel, DmicChannel):
        return 7
    return channel.l_c + channel.l_nc + channel.l_c + 1


def _as_mode(channel, mode):
    if mode is None:
        return channel
    if mode == "general" and isinstance(channel, Dmmac):
        return GeneralMac.from_dmmac(channel)
    expected = {"mac": Dmmac, "ic": DmicChannel, "general": GeneralMac}[mode]
    if not isinstance(channel, expected):
        raise TypeError(f"mode {mode!r} needs a {expected.__name__}")
    return channel


class _Objective:
    """Objective and constraints of a query as functions of the flat vector."""

    def __init__(self, pb: Problem, query: RegionQuery):
        self.pb = pb
        lc, lnc = pb.lc, pb.lnc
        self.names_r = [f"r{i + 1}" for i in range(lc)]
        self.names_R = [f"R{lc + j + 1}" for j in range(lnc)]
        self.names_k = [f"k{i + 1}" for i in range(lc)]
        known = set(self.names_r + self.names_R + self.names_k)
        for d in (query.weights, query.budgets, query.fixed):
            bad = set(d) - known
            if bad:
                raise ValueError(f"unknown rate names {sorted(bad)}")
        self.w_r = np.array([query.weights.get(n, 0.0) for n in self.names_r])
        self.w_R = np.array([query.weights.get(n, 0.0) for n in self.names_R])
        self.budget = np.array([query.budgets.get(n, np.inf) for n in self.names_k], float)
        self.fixed_r = {i: float(query.fixed[n]) for i, n in enumerate(self.names_r) if n in query.fixed}
        self.fixed_R = {j: float(query.fixed[n]) for j, n in enumerate(self.names_R) if n in query.fixed}
        self.budget_idx = [i for i in range(lc) if np.isfinite(self.budget[i])]
        self.sub_mask = np.array([[1.0 if j in sub else 0.0 for j in range(lnc)] for sub in pb.subsets])
        lo, hi = pb.bounds({j: (v, v) for j, v in self.fixed_R.items()})
        self.lo, self.hi = lo, hi
        self._cache_key = None

    def values(self, X):
        """Rows ``[objective, constraint_1, ...]`` for a batch of points."""
        pb = self.pb
        num, key, den, mi = pb.moments(X)
        beta = X[:, pb.sl_beta]
        rate = X[:, pb.sl_rate]
        scale = SQRT2 / np.sqrt(den)
        r = beta * num * scale[:, None]
        k = beta * key * scale[:, None]
        obj = -(r @ self.w_r + rate @ self.w_R)
        cons = [self.budget[i] - k[:, i] for i in self.budget_idx]
        cons += [r[:, i] - v for i, v in self.fixed_r.items()]
        used = rate @ self.sub_mask.T  # (B, n_sub)
        for rx in range(mi.shape[1]):
            cons += list((mi[:, rx, :] - used).T)
        return np.stack([obj] + cons, axis=1)

    def _eval(self, x):
        key = x.tobytes()
        if key != self._cache_key:
            X = x[None, :] + 1j * STEP * np.vstack([np.zeros(x.size), np.eye(x.size)])
            F = self.values(X)
            self._val = F[0].real
            self._jac = F[1:].imag.T / STEP
            self._cache_key = key
        return self._val, self._jac

    def fun(self, x):
        return float(self._eval(x)[0][0])

    def grad(self, x):
        return self._eval(x)[1][0]

    def cons(self, x):
        return self._eval(x)[0][1:]

    def cons_jac(self, x):
        return self._eval(x)[1][1:]

    def repair_starts(self, X):
        """Set ``beta`` and the non-covert rate variables sensibly at start points."""
        pb = self.pb
        X = X.copy()
        num, key, den, mi = pb.moments(X)
        scale = SQRT2 / np.sqrt(den)
        for i in range(pb.lc):
            base_r = num[:, i] * scale
            base_k = np.maximum(key[:, i] * scale, 0.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                cap = np.where(base_k > 0, self.budget[i] / base_k, np.inf)
                if i in self.fixed_r:
                    beta = np.where(base_r > 0, self.fixed_r[i] / base_r, 1.0)
                else:
                    beta = np.ones(X.shape[0])
            X[:, pb.sl_beta.start + i] = np.clip(np.minimum(beta, cap), 0.0, 1.0)
        if pb.lnc == 1:
            best = mi[:, :, 0].min(axis=1)
            X[:, pb.sl_rate.start] = self.fixed_R.get(0, None) or np.clip(best, 0, self.hi[pb.sl_rate.start])
        else:
            for j, v in self.fixed_R.items():
                X[:, pb.sl_rate.start + j] = v
        return X

    def penalized(self, X):
        F = self.values(X)
        viol = np.maximum(-F[:, 1:], 0.0).sum(axis=1) if F.shape[1] > 1 else 0.0
        return F[:, 0] + 10.0 * viol


def _prune(params: CovertParams) -> CovertParams:
    keep = params.joint.p_t >= PRUNE
    if keep.all():
        return params
    if not keep.any():
        keep[np.argmax(params.joint.p_t)] = True
    p_t = params.joint.p_t[keep] / params.joint.p_t[keep].sum()
    conds = tuple(c[keep] for c in params.joint.p_x_given_t)
    psi = None if params.psi is None else tuple(p[keep] for p in params.psi)
    return CovertParams(JointInputLaw(p_t, conds), params.rho[keep], params.beta, psi, params.nc_rates)


def _fit_nc_rates(params: CovertParams, channel: GeneralMac, obj: _Objective):
    """Pull the non-covert operating point inside the polymatroid."""
    bounds = cond_mi_nc(params.joint, channel)
    lc = channel.l_c
    r = np.clip(params.nc_rates.copy(), 0.0, None)
    free = [j for j in range(channel.l_nc) if j not in obj.fixed_R]
    for _ in range(4 * channel.l_nc + 4):
        worst, worst_set = 0.0, None
        for subset, b in bounds.items():
            over = sum(r[u - lc - 1] for u in subset) - b
            if over > worst:
                worst, worst_set = over, subset
        if worst_set is None:
            return r
        movable = [u - lc - 1 for u in worst_set if u - lc - 1 in free and r[u - lc - 1] > 0]
        if not movable:
            return None
        for j in movable:
            r[j] = max(r[j] - worst / len(movable) - 1e-15, 0.0)
    return None


def _finish(params: CovertParams, channel, obj: _Objective):
    """Prune, choose ``beta`` analytically and score one candidate.

    Returns ``(objective, violation, params, rates)`` or None.
    """
    params = _prune(params)
    try:
        num, key, den = covert_moments(params, channel)
    except ValueError:
        return None
    if not den > 0:
        return None
    scale = SQRT2 / math.sqrt(den)
    beta = params.beta.copy()
    violation = 0.0
    for i in range(len(beta)):
        base_r, base_k = num[i] * scale, key[i] * scale
        cap = obj.budget[i] / base_k if base_k > 0 else np.inf
        if i in obj.fixed_r:
            want = obj.fixed_r[i] / base_r if base_r > 0 else (0.0 if obj.fixed_r[i] == 0 else np.inf)
            violation = max(violation, want - min(1.0, cap))
            beta[i] = min(want, 1.0, cap)
        elif obj.w_r[i] > 0:
            beta[i] = min(1.0, cap)
        else:
            beta[i] = min(beta[i], cap)
    nc_rates = params.nc_rates
    if isinstance(channel, GeneralMac):
        if nc_rates is None:
            nc_rates = np.zeros(channel.l_nc)
        fitted = _fit_nc_rates(CovertParams(params.joint, params.rho, beta, params.psi, nc_rates),
                               channel, obj)
        if fitted is None:
            return None
        nc_rates = fitted
    else:
        nc_rates = None
    params = CovertParams(params.joint, params.rho, np.clip(beta, 0.0, 1.0), params.psi, nc_rates)
    rates = evaluate(params, channel)
    for j, v in obj.fixed_R.items():
        violation = max(violation, v - rates.r_nc[j])
    for i in obj.budget_idx:
        violation = max(violation, rates.k[i] - obj.budget[i])
    value = float(rates.r @ obj.w_r + rates.r_nc @ obj.w_R)
    return value, max(violation, 0.0), params, rates


def maximize(query: RegionQuery, channel, mode: str | None = None, n_phases: int | None = None,
             starts: int = 64, refine: int = 4, seed: int = 0, warm_starts=(),
             maxiter: int = 300) -> RegionPoint:
    """Best weighted rate sum over the region, with a witness.

    ``starts`` random points are scored in one batch; the ``refine`` best,
    plus every warm start, are polished by SLSQP with exact derivatives.
    Warm starts are also scored as they are, so a feasible warm start is
    never beaten by a worse answer.

    Raises
    ------
    InfeasibleQuery
        On a negative budget or fixed rate, or when no candidate meets the
        constraints within 1e-9.
    """
    channel = _as_mode(channel, mode)
    for name, v in list(query.budgets.items()) + list(query.fixed.items()):
        if v < 0:
            raise InfeasibleQuery(f"{name} = {v} is negative")
    T = n_phases or default_phases(channel)
    pb = Problem(channel, T, query.pinned)
    obj = _Objective(pb, query)
    rng = np.random.default_rng(seed)

    candidates = []
    for wp in warm_starts:
        if wp.n_phases <= T and _pins_match(wp, query.pinned):
            done = _finish(wp, channel, obj)
            if done is not None:
                candidates.append(done)

    X = obj.repair_starts(pb.random_points(rng, starts))
    score = obj.penalized(X)
    order = np.argsort(score, kind="stable")[:refine]
    seeds = [X[i] for i in order]
    for wp in warm_starts:
        x = pb.from_params(wp) if _pins_match(wp, query.pinned) else None
        if x is not None:
            seeds.append(np.clip(x, obj.lo, obj.hi))
    cons = [{"type": "ineq", "fun": obj.cons, "jac": obj.cons_jac}] if len(obj.values(X[:1])[0]) > 1 else []
    bnds = list(zip(obj.lo, obj.hi))
    for x0 in seeds:
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = minimize(obj.fun, x0, jac=obj.grad, method="SLSQP", bounds=bnds, constraints=cons,
                           options={"maxiter": maxiter, "ftol": 1e-13})
        x = np.clip(res.x, obj.lo, obj.hi)
        if not np.all(np.isfinite(x)):
            continue
        done = _finish(pb.to_params(x), channel, obj)
        if done is not None:
            candidates.append(done)

    feasible = [c for c in candidates if c[1] <= FEAS_TOL]
    if not feasible:
        worst = min((c[1] for c in candidates), default=None)
        raise InfeasibleQuery("no witness satisfies the fixed rates and key budgets", worst)
    best = _select(feasible)
    return RegionPoint(best[3], best[2], best[0], best[1])


def _pins_match(params: CovertParams, pinned: dict) -> bool:
    for j, law in pinned.items():
        arr = np.asarray(law, float)
        cond = params.joint.p_x_given_t[j]
        target = np.broadcast_to(arr, cond.shape) if arr.ndim == 1 else arr[: cond.shape[0]]
        if target.shape != cond.shape or not np.allclose(cond, target, atol=0, rtol=0):
            return False
    return True


def _select(cands):
    """Highest objective; among values equal to 1e-12, the lexicographically
    smallest parameter vector."""
    top = max(c[0] for c in cands)
    tied = [c for c in cands if c[0] >= top - 1e-12]
    return min(tied, key=lambda c: tuple(c[2].vector()))


def grid_search(query: RegionQuery, channel: Dmmac, points: int = 100) -> RegionPoint:
    """Exhaustive single-phase search for the three-user MAC.

    Scans ``P_{X3}`` on a lattice of step ``1 / points`` and the intensity
    direction on ``points + 1`` angles; ``beta`` is set analytically.
    """
    pb = Problem(channel, 1, query.pinned)
    obj = _Objective(pb, query)
    k3 = channel.x3_size
    if 0 in query.pinned:
        laws = [np.asarray(query.pinned[0], float).reshape(-1)[:k3]]
    else:
        laws = [np.array(c) / points for c in product(range(points + 1), repeat=k3) if sum(c) == points]
    angles = np.linspace(0.0, np.pi / 2, points + 1)
    rows = []
    for p3 in laws:
        with np.errstate(divide="ignore"):
            logits = np.clip(np.log(p3), -60, None)
        for a in angles:
            x = np.zeros(pb.n_vars)
            if pb.sl_nc[0] is not None:
                x[pb.sl_nc[0]] = logits
            x[pb.sl_rho] = [math.cos(a), math.sin(a)]
            rows.append(x)
    X = obj.repair_starts(np.array(rows))
    # exact zeros in the lattice matter; rebuild candidates as params
    best = None
    score = obj.penalized(X)
    for i in np.argsort(score, kind="stable")[: max(8, points)]:
        idx, a_idx = divmod(int(i), len(angles))
        a = angles[a_idx]
        params = CovertParams(JointInputLaw(np.ones(1), laws[idx][None, :]),
                              np.array([[math.cos(a), math.sin(a)]]), X[i, pb.sl_beta])
        done = _finish(params, channel, obj)
        if done is not None and done[1] <= FEAS_TOL and (best is None or done[0] > best[0] + 1e-15):
            best = done
    if best is None:
        raise InfeasibleQuery("no grid point satisfies the constraints")
    return RegionPoint(best[3], best[2], best[0], best[1])
