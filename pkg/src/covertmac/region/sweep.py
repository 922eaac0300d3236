"""Support-function sweeps of 2-D faces of the rate-key region."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .params import CovertParams, RateKeyTuple
from .search import InfeasibleQuery, RegionQuery, maximize

AXES = ("r1", "r2", "R3")
CSV_HEADER = ["axis1", "axis2", "r1", "r2", "R3", "k1", "k2", "params_id"]


@dataclass(frozen=True)
class BoundarySample:
    angle: float
    rates: RateKeyTuple
    params: CovertParams

    @property
    def params_id(self) -> str:
        return self.params.digest()


@dataclass(frozen=True)
class BoundaryCurve:
    """Boundary samples of one face, ordered by weight angle."""

    axes: tuple
    samples: tuple
    budgets: dict
    fixed: dict

    def points(self) -> np.ndarray:
        """(n, 2) array of the axis values."""
        return np.array([[s.rates[self.axes[0]], s.rates[self.axes[1]]] for s in self.samples])

    def support(self, angle: float) -> float:
        """Largest ``cos(a) * axis1 + sin(a) * axis2`` over the samples."""
        pts = self.points()
        return float(np.max(pts @ np.array([math.cos(angle), math.sin(angle)])))


def boundary_sweep(channel, budgets: dict, fixed: dict, axes=("r2", "R3"), n_angles: int = 181,
                   pinned: dict | None = None, seed: int = 0, starts: int = 32, refine: int = 2,
                   warm_curve: BoundaryCurve | None = None, n_phases: int | None = None) -> BoundaryCurve:
    """Sample the boundary of a 2-D face by maximizing over weight angles.

    The weight on ``axes`` at angle ``a`` is ``(cos a, sin a)`` for ``a`` in
    ``[0, pi/2]``. The first angle runs a full multi-start; each later angle
    also starts from the previous witness. With ``warm_curve`` (same angles), its
    witness at each angle is offered too, so a sweep under looser constraints
    dominates the curve it was seeded from.

    Raises
    ------
    InfeasibleQuery
        When the fixed values cannot be met at all.
    """
    axes = tuple(axes)
    if len(axes) != 2 or axes[0] == axes[1] or any(a not in AXES for a in axes):
        raise ValueError(f"axes must be two distinct names from {AXES}")
    if warm_curve is not None and len(warm_curve.samples) != n_angles:
        raise ValueError("warm_curve must use the same number of angles")
    if any(a in fixed for a in axes):
        raise ValueError("a swept axis cannot also be fixed")
    samples = []
    prev = None
    for i, angle in enumerate(np.linspace(0.0, math.pi / 2, n_angles)):
        # a tiny floor on each weight picks Pareto-optimal end points
        weights = {axes[0]: max(math.cos(angle), 1e-9), axes[1]: max(math.sin(angle), 1e-9)}
        query = RegionQuery(weights, dict(budgets), dict(fixed), dict(pinned or {}))
        warm = [] if prev is None else [prev]
        if warm_curve is not None:
            warm.append(warm_curve.samples[i].params)
        point = maximize(query, channel, seed=seed, n_phases=n_phases,
                         starts=starts if prev is None else max(starts // 4, 1),
                         refine=refine, warm_starts=warm)
        prev = point.params
        samples.append(BoundarySample(float(angle), point.rates, point.params))
    return BoundaryCurve(axes, tuple(samples), dict(budgets), dict(fixed))


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def curve_csv(curve: BoundaryCurve, scale: float = 1.0) -> str:
    """CSV text of a curve; ``scale`` multiplies every rate (``1/ln 2`` for bits)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in curve.samples:
        d = s.rates.as_dict()
        row = [d[curve.axes[0]], d[curve.axes[1]], d["r1"], d["r2"], d["R3"], d["k1"], d["k2"]]
        w.writerow([_fmt(v * scale) for v in row] + [s.params_id])
    return buf.getvalue()


def curve_params_json(curve: BoundaryCurve) -> str:
    """JSON text mapping ``params_id`` to the full witness."""
    table = {s.params_id: s.params.to_dict() for s in curve.samples}
    return json.dumps(dict(sorted(table.items())), indent=1, sort_keys=True) + "\n"


def write_curve(curve: BoundaryCurve, csv_path, params_path, scale: float = 1.0) -> None:
    with open(csv_path, "w", encoding="utf-8", newline="") as f:
        f.write(curve_csv(curve, scale))
    with open(params_path, "w", encoding="utf-8") as f:
        f.write(curve_params_json(curve))


__all__ = ["AXES", "BoundaryCurve", "BoundarySample", "CSV_HEADER", "InfeasibleQuery",
           "boundary_sweep", "curve_csv", "curve_params_json", "write_curve"]
