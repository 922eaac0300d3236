"""Finite-n behaviour of the coding scheme on the bundled MAC.

Sweeps the size factor (error probabilities) and the omega scale (warden
divergence) for one single-phase witness and writes a JSON summary.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from covertmac.channel import paper_channel
from covertmac.region import CovertParams
from covertmac.simulator import OmegaRule, SimConfig, simulate, theorem_sizes


@dataclass
class TrendConfig:
    x3: int = 1  # deterministic non-covert symbol of the witness
    n_errors: int = 2000
    trials: int = 200
    factors: tuple = (0.5, 0.8, 1.0, 1.3)
    n_delta: int = 4000
    delta_samples: int = 2000
    omega_scales: tuple = (0.5, 1.0, 1.5, 2.0)
    seed: int = 0
    out: str = "results/simulate_trends.json"


def witness(x3: int) -> CovertParams:
    return CovertParams.mac([1.0], [np.eye(2)[x3]], [[1.0, 1.0]], [1.0, 1.0])


def main(cfg: TrendConfig) -> dict:
    ch = paper_channel()
    params = witness(cfg.x3)
    errors = []
    for f in cfg.factors:
        sim = theorem_sizes(SimConfig(n=cfg.n_errors, seed=cfg.seed), params, ch, factor=f)
        res = simulate(sim, params, ch, cfg.trials)
        errors.append({"factor": f, "sizes": sim.to_dict()["sizes"],
                       **{k: v.to_dict() for k, v in res.errors.items()}})
        print(f"factor {f}: P_e1 = {res.pe1_hat.rate:.3f}")
    deltas = []
    for s in cfg.omega_scales:
        sim = theorem_sizes(SimConfig(n=cfg.n_delta, seed=cfg.seed, omega=OmegaRule(s)), params, ch)
        res = simulate(sim, params, ch, 0, delta_samples=cfg.delta_samples, w3_values=[0])
        deltas.append({"omega_scale": s, "omega_n": sim.omega_n, "sizes": sim.to_dict()["sizes"],
                       "delta": res.delta.mean, "stderr": res.delta.stderr, "theory": res.theory})
        print(f"omega {sim.omega_n:.4f}: delta {res.delta.mean:.4f} vs theory {res.theory:.5f}")
    om = np.log([d["omega_n"] for d in deltas])
    slope = float(np.polyfit(om, np.log([d["delta"] for d in deltas]), 1)[0])
    summary = {"config": asdict(cfg), "errors": errors, "delta": deltas, "loglog_slope": slope}
    Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
    Path(cfg.out).write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
    return summary


if __name__ == "__main__":
    main(TrendConfig())
