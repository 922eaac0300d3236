"""Random codebooks, slot schedules, encoding and successive decoding."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..channel import Dmmac
from ..infodiv import divergence_profile
from ..region.params import CovertParams
from .config import SimConfig, build_multiplex

SILENT, LEAD, BOTH = 0, 1, 2
_CHUNK = 256


class IntensityTooLarge(ValueError):
    """``rho * alpha_n`` exceeds 1 on some phase."""


@dataclass(frozen=True, eq=False)
class Codebook:
    """One draw of the random code, plus the deterministic schedule.

    ``slots`` labels each channel use ``SILENT``, ``LEAD`` (only the user
    with the larger ``phi`` sends codeword symbols, the other sends local
    randomness) or ``BOTH``. Covert codewords are indexed ``w * K + s``;
    row ``j`` of user ``l`` is drawn from its own generator keyed by
    ``(*key, l, j)``, so rows are produced on demand and key codebooks of
    any size cost nothing until used.
    """

    config: SimConfig
    params: CovertParams
    t_seq: np.ndarray
    slots: np.ndarray
    leader: int
    x3: np.ndarray
    prob1: np.ndarray
    prob2: np.ndarray
    key: tuple

    def rows(self, user: int, index) -> np.ndarray:
        """Covert codewords ``index`` of ``user`` as a (len, n) uint8 array."""
        prob = self.prob1 if user == 1 else self.prob2
        out = np.empty((len(index), self.n), np.uint8)
        for r, j in enumerate(index):
            rng = np.random.default_rng(np.random.SeedSequence(self.key[0], spawn_key=(*self.key[1:], user, int(j))))
            out[r] = rng.random(self.n) < prob
        return out

    def book_size(self, user: int) -> int:
        return self.config.size(f"M{user}") * self.config.size(f"K{user}")

    def codeword(self, user: int, w: int, s: int) -> np.ndarray:
        k = self.config.size(f"K{user}")
        m = self.config.size(f"M{user}")
        if not (0 <= w < m and 0 <= s < k):
            raise IndexError(f"user {user}: message {w} or key {s} out of range")
        return self.rows(user, [w * k + s])[0]

    def decoding_slots(self, user: int) -> np.ndarray:
        """Boolean mask of the channel uses user ``user`` is decoded from."""
        if user == self.leader:
            return self.slots != SILENT
        return self.slots == BOTH

    @property
    def n(self) -> int:
        return self.t_seq.size


def _slot_schedule(t_seq: np.ndarray, counts: np.ndarray, phi) -> tuple[np.ndarray, int]:
    leader = 1 if phi[0] >= phi[1] else 2
    hi, lo = max(phi), min(phi)
    slots = np.zeros(t_seq.size, dtype=np.int8)
    start = 0
    for n_t in counts:
        n_both = int(math.floor(n_t * lo + 0.5))
        n_lead = max(int(math.floor(n_t * hi + 0.5)) - n_both, 0)
        slots[start:start + n_both] = BOTH
        slots[start + n_both:start + n_both + n_lead] = LEAD
        start += n_t
    return slots, leader


def generate_codebooks(config: SimConfig, params: CovertParams, channel: Dmmac, key: tuple) -> Codebook:
    """Draw the codebooks entry by entry from the phase-dependent laws.

    ``key = (seed, ...)`` identifies the draw; the non-covert codebook is
    materialized, covert rows are drawn on demand.

    Raises
    ------
    IntensityTooLarge
        If some ``rho_{l,t} * alpha_n`` exceeds 1.
    """
    if params.l_c != 2:
        raise ValueError("the simulator handles two covert users")
    alpha = config.alpha_n
    if np.any(params.rho * alpha > 1):
        raise IntensityTooLarge(f"rho * alpha_n = {float(np.max(params.rho * alpha)):.4g} exceeds 1")
    mux = build_multiplex(params.joint.p_t, config.n)
    t_seq = mux.t_seq
    slots, leader = _slot_schedule(t_seq, mux.counts, config.phi)
    prob1 = params.rho[t_seq, 0] * alpha
    prob2 = params.rho[t_seq, 1] * alpha
    rng = np.random.default_rng(np.random.SeedSequence(key[0], spawn_key=(*key[1:], 3)))
    # inverse-cdf draw of X3 given the phase
    cdf = np.cumsum(params.joint.p_x3_given_t, axis=1)[t_seq]
    u = rng.random((config.size("M3"), config.n))
    x3 = np.minimum((u[:, :, None] >= cdf[None]).sum(axis=2), channel.x3_size - 1).astype(np.int64)
    x3.setflags(write=False)
    return Codebook(config, params, t_seq, slots, leader, x3, prob1, prob2, tuple(key))


def encode(codebook: Codebook, hypothesis: int, w, s, rng: np.random.Generator | None = None):
    """Channel inputs ``(x1, x2, x3)`` for messages ``w = (w1, w2, w3)`` and
    keys ``s = (s1, s2)``, all 0-based.

    Under hypothesis 1 the follower's ``LEAD`` slots carry fresh
    Bernoulli inputs drawn from ``rng``.
    """
    w1, w2, w3 = w
    if not 0 <= w3 < codebook.config.size("M3"):
        raise IndexError(f"message {w3} of user 3 out of range")
    x3 = codebook.x3[w3]
    c1, c2 = codebook.codeword(1, w1, s[0]), codebook.codeword(2, w2, s[1])
    n = codebook.n
    if hypothesis == 0:
        return np.zeros(n, np.uint8), np.zeros(n, np.uint8), x3
    if hypothesis != 1:
        raise ValueError("hypothesis must be 0 or 1")
    lead_mask = codebook.slots != SILENT
    both_mask = codebook.slots == BOTH
    local_mask = codebook.slots == LEAD
    inputs = {}
    for user, c, prob in ((1, c1, codebook.prob1), (2, c2, codebook.prob2)):
        if user == codebook.leader:
            inputs[user] = np.where(lead_mask, c, 0).astype(np.uint8)
        else:
            x = np.where(both_mask, c, 0).astype(np.uint8)
            if local_mask.any():
                if rng is None:
                    raise ValueError("local randomness needs an rng")
                idx = np.flatnonzero(local_mask)
                x[idx] = rng.random(idx.size) < prob[idx]
            inputs[user] = x
    return inputs[1], inputs[2], x3


def transmit(gamma: np.ndarray, x1, x2, x3, rng: np.random.Generator) -> np.ndarray:
    """One memoryless pass through ``gamma[x1, x2, x3, :]``."""
    cdf = np.cumsum(gamma[x1, x2, x3], axis=1)
    u = rng.random(cdf.shape[0])
    return np.minimum((u[:, None] >= cdf).sum(axis=1), gamma.shape[-1] - 1)


@dataclass(frozen=True)
class DecodeOutcome:
    """Decoded indices; ``None`` marks a declared failure."""

    w3: int | None
    w1: int | None = None
    w2: int | None = None


def typical_candidates(codebook: Codebook, channel: Dmmac, y: np.ndarray) -> np.ndarray:
    """Indices ``w3`` whose joint type with ``(t, y)`` is within the radius."""
    params = codebook.params
    T, X3, Y = params.n_phases, channel.x3_size, channel.y_size
    target = (params.joint.p_t[:, None, None] * params.joint.p_x3_given_t[:, :, None]
              * channel.gamma_y[0, 0][None])
    base = codebook.t_seq * (X3 * Y) + y
    cells = T * X3 * Y
    hits = []
    m3 = codebook.x3.shape[0]
    for lo in range(0, m3, _CHUNK):
        block = codebook.x3[lo:lo + _CHUNK]
        idx = base[None, :] + block * Y + (np.arange(block.shape[0]) * cells)[:, None]
        counts = np.bincount(idx.ravel(), minlength=block.shape[0] * cells)
        types = counts.reshape(block.shape[0], cells) / codebook.n
        dist = np.abs(types - target.ravel()[None]).max(axis=1)
        hits.extend(lo + np.flatnonzero(dist <= codebook.config.typicality_radius))
    return np.asarray(hits, dtype=np.int64)


def covert_scores(codebook: Codebook, channel: Dmmac, y: np.ndarray, user: int, s: int, w3: int):
    """Log-likelihood ratio of every message of ``user`` and its threshold.

    The other covert user is assumed silent. Returns ``(scores, eta)``.
    """
    mask = codebook.decoding_slots(user)
    x3 = codebook.x3[w3][mask]
    yy = y[mask]
    g = channel.gamma_y
    active = g[1, 0] if user == 1 else g[0, 1]
    with np.errstate(divide="ignore"):
        llr = np.log(active[x3, yy]) - np.log(g[0, 0][x3, yy])
    m, k = codebook.config.size(f"M{user}"), codebook.config.size(f"K{user}")
    scores = np.empty(m)
    for lo in range(0, m, 16 * _CHUNK):
        idx = np.arange(lo, min(lo + 16 * _CHUNK, m))
        book = codebook.rows(user, idx * k + s)[:, mask]
        scores[idx] = np.where(book == 1, llr[None, :], 0.0).sum(axis=1)
    # threshold from the realized slot counts of each phase
    params = codebook.params
    dy = divergence_profile(channel).d_y[user - 1]
    per_phase = params.rho[:, user - 1] * (params.joint.p_x3_given_t @ dy)
    mu = codebook.config.mu1 if user == 1 else codebook.config.mu2
    eta = (1 - mu) * codebook.config.alpha_n * per_phase[codebook.t_seq[mask]].sum()
    return scores, eta


def decode(codebook: Codebook, channel: Dmmac, y: np.ndarray, s, hypothesis: int) -> DecodeOutcome:
    """Successive decoding: ``W3`` by typicality, then (under hypothesis 1)
    each covert message by a unique threshold crossing."""
    hits = typical_candidates(codebook, channel, y)
    if hits.size != 1:
        return DecodeOutcome(None)
    w3 = int(hits[0])
    if hypothesis == 0:
        return DecodeOutcome(w3)
    found = []
    for user in (1, 2):
        if codebook.config.size(f"M{user}") == 1:
            found.append(0)  # a single candidate is accepted as is
            continue
        scores, eta = covert_scores(codebook, channel, y, user, s[user - 1], w3)
        passing = np.flatnonzero(scores >= eta)
        found.append(int(passing[0]) if passing.size == 1 else None)
    return DecodeOutcome(w3, found[0], found[1])
