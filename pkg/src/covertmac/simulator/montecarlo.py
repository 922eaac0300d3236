"""Error-probability trials and warden-divergence estimates."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp
from scipy.stats import binomtest

from ..channel import Dmmac
from ..region.formulas import denominator
from ..region.params import CovertParams
from .config import SimConfig
from .scheme import BOTH, LEAD, Codebook, encode, decode, generate_codebooks, transmit

# RNG stream labels: (seed, stream, index...) -> independent generators
CODEBOOK, TRIAL, DELTA = 0, 1, 2


class MixtureCapExceeded(ValueError):
    """The exact output mixture would need too many codeword pairs."""


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def workers() -> int:
    """Worker count, capped by ``COVERTMAC_THREADS``."""
    env = os.environ.get("COVERTMAC_THREADS")
    cpus = os.cpu_count() or 1
    return max(1, min(int(env), cpus) if env else cpus)


def _map(fn, items):
    n = workers()
    if n == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class ErrorEstimate:
    errors: int
    trials: int

    @property
    def rate(self) -> float:
        return self.errors / self.trials

    @property
    def interval(self) -> tuple:
        """Wilson 95% interval."""
        ci = binomtest(self.errors, self.trials).proportion_ci(0.95, method="wilson")
        return float(ci.low), float(ci.high)

    def to_dict(self) -> dict:
        lo, hi = self.interval
        return {"errors": self.errors, "trials": self.trials, "rate": self.rate, "wilson95": [lo, hi]}


@dataclass(frozen=True)
class DeltaEstimate:
    """Per-``w3`` divergence estimates in nats, with standard errors."""

    per_w3: dict
    samples: int

    @property
    def mean(self) -> float:
        return math.fsum(v[0] for v in self.per_w3.values()) / len(self.per_w3)

    @property
    def stderr(self) -> float:
        return math.sqrt(math.fsum(v[1] ** 2 for v in self.per_w3.values())) / len(self.per_w3)

    @property
    def max(self) -> float:
        return max(v[0] for v in self.per_w3.values())

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "max": self.max, "samples": self.samples,
                "per_w3": {str(k): {"delta": v[0], "stderr": v[1]} for k, v in sorted(self.per_w3.items())}}


def theory_delta(config: SimConfig, params: CovertParams, channel: Dmmac, xi6: float = 0.0) -> float:
    """Asymptotic divergence ``(1 + xi6) max(phi) omega^2 / 2 E[(rho1 + rho2)^2 chi2]``."""
    return (1 + xi6) * max(config.phi) * config.omega_n ** 2 / 2 * denominator(params, channel)


def covertness_bound(delta: float) -> float:
    """Lower bound ``1 - delta`` on the warden's miss plus false-alarm probability."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return min(max(1.0 - delta, 0.0), 1.0)


# ----------------------------------------------------------------- trials

def _codebook(config, params, channel, index):
    return generate_codebooks(config, params, channel, (config.seed, CODEBOOK, index))


def _one_trial(config, params, channel, fixed_book, i):
    book = _codebook(config, params, channel, i + 1) if config.redraw else fixed_book
    rng = stream(config.seed, TRIAL, i)
    w = tuple(int(rng.integers(config.size(m))) for m in ("M1", "M2", "M3"))
    s = tuple(int(rng.integers(config.size(k))) for k in ("K1", "K2"))
    out = []
    for h in (0, 1):
        x1, x2, x3 = encode(book, h, w, s, rng)
        y = transmit(channel.gamma_y, x1, x2, x3, rng)
        got = decode(book, channel, y, s, h)
        if h == 0:
            out.append(got.w3 != w[2])
        else:
            out.append((got.w3 != w[2], got.w1 != w[0], got.w2 != w[1]))
    return out


def run_trials(config: SimConfig, params: CovertParams, channel: Dmmac, trials: int) -> dict:
    """Empirical error rates under both hypotheses.

    Returns ``{"pe0", "pe1", "w1", "w2", "w3"}`` as :class:`ErrorEstimate`;
    the per-message entries count errors under hypothesis 1.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    book = _codebook(config, params, channel, 0)
    results = _map(lambda i: _one_trial(config, params, channel, book, i), range(trials))
    e0 = sum(r[0] for r in results)
    e1 = [r[1] for r in results]
    return {"pe0": ErrorEstimate(int(e0), trials),
            "pe1": ErrorEstimate(sum(any(e) for e in e1), trials),
            "w3": ErrorEstimate(sum(e[0] for e in e1), trials),
            "w1": ErrorEstimate(sum(e[1] for e in e1), trials),
            "w2": ErrorEstimate(sum(e[2] for e in e1), trials)}


# ------------------------------------------------------------ divergence

def _effective_books(book: Codebook):
    """Codeword bits as actually sent; the follower's LEAD slots are left 0
    and treated as a known Bernoulli mixture."""
    sends = {u: book.decoding_slots(u) for u in (1, 2)}
    b1 = np.where(sends[1], book.rows(1, range(book.book_size(1))), 0).astype(np.uint8)
    b2 = np.where(sends[2], book.rows(2, range(book.book_size(2))), 0).astype(np.uint8)
    return b1, b2


def _slot_tables(book: Codebook, channel: Dmmac, x3: np.ndarray, z: np.ndarray) -> np.ndarray:
    """``log q_i(z_i | a, b) - log Gamma_Z(z_i | 0, 0, x3_i)`` as an (n, 2, 2) array."""
    g = channel.gamma_z
    law = g[:, :, x3, z]  # (2, 2, n)
    lead = book.slots == LEAD
    if lead.any():
        p = (book.prob2 if book.leader == 1 else book.prob1)
        mix = law.copy()
        if book.leader == 1:
            mix[:, 0] = (1 - p) * law[:, 0] + p * law[:, 1]
        else:
            mix[0, :] = (1 - p) * law[0, :] + p * law[1, :]
        law = np.where(lead[None, None], mix, law)
    silent = book.slots == 0
    law = np.where(silent[None, None], law[0, 0][None, None], law)
    with np.errstate(divide="ignore"):
        tab = np.log(law) - np.log(g[0, 0, x3, z])[None, None]
    return np.moveaxis(tab, 2, 0)


def _pair_log_ratios(tab: np.ndarray, b1: np.ndarray, b2: np.ndarray) -> np.ndarray:
    """``sum_i tab[i, a_i, b_i]`` for every codeword pair, shape (N1, N2)."""
    base = tab[:, 0, 0].sum()
    cols = np.flatnonzero(b1.any(axis=0) | b2.any(axis=0))
    a = b1[:, cols].astype(float)
    b = b2[:, cols].astype(float)
    t = tab[cols]
    u = t[:, 1, 0] - t[:, 0, 0]
    v = t[:, 0, 1] - t[:, 0, 0]
    d = t[:, 1, 1] - t[:, 1, 0] - t[:, 0, 1] + t[:, 0, 0]
    if np.all(np.isfinite(t)):
        return base + (a @ u)[:, None] + (b @ v)[None, :] + (a * d) @ b.T
    # some slot law vanishes: gather term by term
    ia, ib = b1[:, cols].astype(np.intp), b2[:, cols].astype(np.intp)
    out = np.empty((b1.shape[0], b2.shape[0]))
    for r in range(b1.shape[0]):
        vals = t[np.arange(cols.size)[None, :], ia[r][None, :], ib]
        out[r] = base + vals.sum(axis=1)
    return out


def estimate_delta(book: Codebook, channel: Dmmac, w3: int, samples: int) -> tuple:
    """Monte Carlo estimate of the warden divergence for message ``w3``.

    Each sample draws ``(w1, s1, w2, s2)`` uniformly, passes the inputs
    through ``Gamma_Z`` and evaluates the log-ratio of the exact codebook
    mixture to the silent output law.

    Returns
    -------
    (estimate, stderr) in nats.

    Raises
    ------
    MixtureCapExceeded
        If ``M1 K1 M2 K2`` exceeds the configured cap.
    """
    config = book.config
    n1, n2 = book.book_size(1), book.book_size(2)
    if n1 * n2 > config.mixture_cap:
        raise MixtureCapExceeded(f"{n1 * n2} codeword pairs exceed the cap {config.mixture_cap}")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    b1, b2 = _effective_books(book)
    x3 = book.x3[w3]
    log_n = math.log(n1 * n2)

    def one(j):
        rng = stream(config.seed, DELTA, w3, j)
        a, b = int(rng.integers(n1)), int(rng.integers(n2))
        w = (a // config.size("K1"), b // config.size("K2"), w3)
        s = (a % config.size("K1"), b % config.size("K2"))
        x1, x2, _ = encode(book, 1, w, s, rng)
        z = transmit(channel.gamma_z, x1, x2, x3, rng)
        tab = _slot_tables(book, channel, x3, z)
        return float(logsumexp(_pair_log_ratios(tab, b1, b2)) - log_n)

    vals = _map(one, range(samples))
    mean = math.fsum(vals) / samples
    if samples < 2:
        return mean, float("nan")
    var = math.fsum((v - mean) ** 2 for v in vals) / (samples - 1)
    return mean, math.sqrt(var / samples)


# ---------------------------------------------------------------- driver

@dataclass
class SimResult:
    config: SimConfig
    errors: dict
    delta: DeltaEstimate | None = None
    theory: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def pe0_hat(self) -> ErrorEstimate:
        return self.errors["pe0"]

    @property
    def pe1_hat(self) -> ErrorEstimate:
        return self.errors["pe1"]

    @property
    def theory_ratio(self) -> float | None:
        if self.delta is None or not self.theory:
            return None
        return self.delta.mean / self.theory

    def to_dict(self) -> dict:
        d = {"config": self.config.to_dict(),
             "errors": {k: v.to_dict() for k, v in sorted(self.errors.items())}}
        if self.delta is not None:
            d["delta"] = self.delta.to_dict()
            d["delta_theory"] = self.theory
            d["theory_ratio"] = self.theory_ratio
            d["covertness_bound"] = covertness_bound(max(self.delta.mean, 0.0))
        d.update(self.extra)
        return d


def simulate(config: SimConfig, params: CovertParams, channel: Dmmac, trials: int,
             delta_samples: int = 0, w3_values=None) -> SimResult:
    """Error trials plus, optionally, divergence estimates on the fixed codebook."""
    errors = run_trials(config, params, channel, trials) if trials > 0 else {}
    delta = None
    if delta_samples > 0:
        book = _codebook(config, params, channel, 0)
        if w3_values is None:
            w3_values = range(min(config.size("M3"), 4))
        per = {int(w): estimate_delta(book, channel, int(w), delta_samples) for w in w3_values}
        delta = DeltaEstimate(per, delta_samples)
    xi6 = config.xi[5]
    return SimResult(config, errors, delta, theory_delta(config, params, channel, xi6))
