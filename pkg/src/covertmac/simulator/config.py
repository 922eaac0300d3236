"""Blocklength-dependent parameters, code sizes and the multiplexing sequence."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..channel import Dmmac
from ..infodiv import cond_mi_nc
from ..region.formulas import covert_moments
from ..region.params import CovertParams


@dataclass(frozen=True)
class OmegaRule:
    """``omega_n = scale * n ** -exponent``.

    Any exponent in ``(0, 1/2)`` gives ``omega_n -> 0`` and
    ``omega_n sqrt(n) - log n -> inf``, since ``n ** (1/2 - exponent)``
    eventually beats ``log n``.
    """

    scale: float = 1.0
    exponent: float = 1.0 / 3.0

    def __post_init__(self):
        if not 0.0 < self.exponent < 0.5:
            raise ValueError("the exponent must lie in (0, 1/2)")
        if not self.scale > 0:
            raise ValueError("the scale must be positive")

    def __call__(self, n: int) -> float:
        return self.scale * n ** (-self.exponent)


@dataclass(frozen=True)
class SimConfig:
    """Everything that defines one simulated code, apart from the witness.

    Parameters
    ----------
    n : int
        Blocklength.
    sizes : dict
        ``M1, M2, M3, K1, K2``; missing entries default to 1.
    omega : OmegaRule
    mu_n : float, optional
        Typicality radius; ``n ** (-1/3)`` by default.
    mu1, mu2 : float
        Threshold slacks of the covert decoders, in (0, 1).
    xi : tuple of 6 floats
        Back-offs used by :func:`theorem_sizes` and the divergence target.
    phi : (float, float)
        Fractions of slots used by the two covert users; ``(1, 1)`` is the
        basic scheme.
    seed : int
    redraw : bool
        Draw a fresh codebook for every trial.
    mixture_cap : int
        Largest ``M1 K1 M2 K2`` accepted by the exact mixture.
    """

    n: int
    sizes: dict = field(default_factory=dict)
    omega: OmegaRule = OmegaRule()
    mu_n: float | None = None
    mu1: float = 0.1
    mu2: float = 0.1
    xi: tuple = (0.1,) * 6
    phi: tuple = (1.0, 1.0)
    seed: int = 0
    redraw: bool = False
    mixture_cap: int = 4096

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        for key in self.sizes:
            if key not in ("M1", "M2", "M3", "K1", "K2"):
                raise ValueError(f"unknown size {key!r}")
        if any(int(v) < 1 for v in self.sizes.values()):
            raise ValueError("code sizes must be at least 1")
        if not (0 < self.mu1 < 1 and 0 < self.mu2 < 1):
            raise ValueError("mu1 and mu2 must lie in (0, 1)")
        if len(self.xi) != 6 or any(x < 0 for x in self.xi):
            raise ValueError("xi needs six nonnegative entries")
        if len(self.phi) != 2 or any(not 0 <= p <= 1 for p in self.phi):
            raise ValueError("phi must lie in [0, 1]^2")

    def size(self, name: str) -> int:
        return int(self.sizes.get(name, 1))

    @property
    def omega_n(self) -> float:
        return self.omega(self.n)

    @property
    def alpha_n(self) -> float:
        return self.omega_n / math.sqrt(self.n)

    @property
    def typicality_radius(self) -> float:
        return self.n ** (-1.0 / 3.0) if self.mu_n is None else self.mu_n

    def to_dict(self) -> dict:
        return {"n": self.n, "sizes": {k: self.size(k) for k in ("M1", "M2", "M3", "K1", "K2")},
                "omega_scale": self.omega.scale, "omega_exponent": self.omega.exponent,
                "mu_n": self.typicality_radius, "mu1": self.mu1, "mu2": self.mu2,
                "xi": list(self.xi), "phi": list(self.phi), "seed": self.seed,
                "redraw": self.redraw, "mixture_cap": self.mixture_cap}


def theorem_log_sizes(config: SimConfig, params: CovertParams, channel: Dmmac) -> dict:
    """Natural logs of the message and key sizes prescribed for ``config``.

    Key sizes are what remains of the message-plus-key budget, floored at 0.
    """
    num, key, _ = covert_moments(params, channel)
    dz = np.asarray(num) + np.asarray(key)  # E[rho D_Z]
    root = config.omega_n * math.sqrt(config.n)
    xi, phi = config.xi, config.phi
    log_m1 = (1 - xi[0]) * phi[0] * root * num[0]
    log_m2 = (1 - xi[1]) * phi[1] * root * num[1]
    log_m3 = (1 - xi[2]) * config.n * cond_mi_nc(params.joint, channel)
    log_mk1 = (1 + xi[3]) * phi[0] * root * dz[0]
    log_mk2 = (1 + xi[4]) * phi[1] * root * dz[1]
    return {"M1": log_m1, "M2": log_m2, "M3": log_m3,
            "K1": max(log_mk1 - log_m1, 0.0), "K2": max(log_mk2 - log_m2, 0.0)}


def theorem_sizes(config: SimConfig, params: CovertParams, channel: Dmmac, factor: float = 1.0,
                  m3_cap: int | None = None) -> SimConfig:
    """``config`` with sizes ``round(exp(factor * log size))``, at least 1.

    ``factor`` scales every log-size, so ``0.8`` backs off and ``1.3``
    overshoots. ``m3_cap`` bounds the non-covert codebook.
    """
    logs = theorem_log_sizes(config, params, channel)
    sizes = {k: max(1, int(math.floor(math.exp(min(factor * v, 700.0)) + 0.5))) for k, v in logs.items()}
    if m3_cap is not None:
        sizes["M3"] = min(sizes["M3"], m3_cap)
    return replace(config, sizes=sizes)


@dataclass(frozen=True, eq=False)
class MultiplexSequence:
    """Phase label per channel use and its exact type (counts over ``n``)."""

    t_seq: np.ndarray
    counts: np.ndarray

    @property
    def type_vector(self) -> np.ndarray:
        return self.counts / self.counts.sum()


def build_multiplex(p_t, n: int) -> MultiplexSequence:
    """Type vector by largest-remainder rounding, ties to the lower phase.

    Phases appear in consecutive blocks. Phases of probability 0 never appear.
    """
    p = np.asarray(p_t, float)
    if n < len(p):
        raise ValueError("n must be at least the number of phases")
    exact = p * n
    counts = np.floor(exact).astype(np.int64)
    deficit = n - int(counts.sum())
    frac = exact - counts
    order = sorted((i for i in range(len(p)) if p[i] > 0), key=lambda i: (-frac[i], i))
    for i in order[:deficit]:
        counts[i] += 1
    t_seq = np.repeat(np.arange(len(p)), counts)
    return MultiplexSequence(t_seq, counts)
