"""Optimizer against the single-user closed form on random channels.

Prints the worst absolute error and the time per query; useful when
touching the search code.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from covertmac.channel import Dmmac
from covertmac.region import RegionQuery, maximize, single_user_tradeoff, tradeoff_knee


@dataclass
class OracleConfig:
    channels: int = 25
    budgets: int = 20
    seed: int = 1
    starts: int = 64


def single_user_channel(rng: np.random.Generator) -> Dmmac:
    ny, nz, n3 = rng.integers(2, 5), rng.integers(2, 5), rng.integers(1, 3)
    gy, gz = rng.dirichlet(np.ones(ny), 2), rng.dirichlet(np.ones(nz), 2)
    return Dmmac(np.broadcast_to(gy[:, None, None], (2, 2, n3, ny)).copy(),
                 np.broadcast_to(gz[:, None, None], (2, 2, n3, nz)).copy())


def main(cfg: OracleConfig) -> float:
    rng = np.random.default_rng(cfg.seed)
    worst, t0 = 0.0, time.perf_counter()
    for _ in range(cfg.channels):
        ch = single_user_channel(rng)
        for b in np.linspace(0.0, 1.5 * max(tradeoff_knee(ch), 0.1), cfg.budgets):
            got = maximize(RegionQuery({"r1": 1.0}, {"k1": float(b)}), ch, starts=cfg.starts).rates.r1
            worst = max(worst, abs(got - single_user_tradeoff(b, ch)))
    n = cfg.channels * cfg.budgets
    print(f"worst error {worst:.3e}; {(time.perf_counter() - t0) / n * 1e3:.1f} ms per query")
    return worst


if __name__ == "__main__":
    main(OracleConfig())
