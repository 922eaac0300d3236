"""Data behind the numerical-example figures for the bundled MAC.

Preset values (key budgets, fixed rates) are in bits, the unit in which the
reference figures are stated; every routine converts them to nats before
optimizing and returns nats.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import Dmmac
from .infodiv import blahut_arimoto
from .region import LN2, InfeasibleQuery, RegionQuery, maximize
from .region.sweep import boundary_sweep

KEY_BUDGET_BITS = 0.8
FIG5_R1_BITS = (0.75, 0.5, 0.25)
FIG6_R3_BITS = (0.1965, 0.15, 0.05)
FIG7_R1_BITS = 0.1
FIG8_R1_BITS = 0.5
FIGURES = ("fig4", "fig5", "fig6", "fig7", "fig8")


def _budgets() -> dict:
    b = KEY_BUDGET_BITS * LN2
    return {"k1": b, "k2": b}


def silent_capacity(channel: Dmmac) -> float:
    """``max_{P_X3} I(X3; Y | X1 = X2 = 0)`` in nats."""
    return blahut_arimoto(channel.gamma_y[0, 0])[0]


@dataclass
class FigureData:
    """Named curves and tables of one figure, all rates in nats."""

    name: str
    curves: dict = field(default_factory=dict)  # label -> BoundaryCurve
    table: dict | None = None  # column -> array
    meta: dict = field(default_factory=dict)


def chained_sweeps(channel, levels_nats, axes, fixed_name, n_angles, seed=0, n_phases=None):
    """Sweeps at decreasing constraint levels, each seeded by the previous
    curve; the regions come out nested by construction."""
    curves = []
    warm = None
    for v in levels_nats:
        c = boundary_sweep(channel, _budgets(), {fixed_name: v}, axes, n_angles, seed=seed,
                           warm_curve=warm, n_phases=n_phases)
        curves.append(c)
        warm = c
    return curves


def fig4(channel: Dmmac, n_angles: int = 61, levels: int = 9, seed: int = 0) -> FigureData:
    """(r1, r2) slices of the 3-D region at ``levels`` values of R3 in
    ``[0, 0.995 C]``, ``C`` the silent-user capacity."""
    cap = silent_capacity(channel)
    values = np.linspace(0.995 * cap, 0.0, levels)
    curves = chained_sweeps(channel, values, ("r1", "r2"), "R3", n_angles, seed)
    return FigureData("fig4", {f"R3={v / LN2:.6g}bits": c for v, c in zip(values, curves)},
                      meta={"R3_levels_nats": values.tolist()})


def fig5(channel: Dmmac, n_angles: int = 181, seed: int = 0) -> FigureData:
    """(r2, R3) faces at the preset values of r1."""
    values = [v * LN2 for v in FIG5_R1_BITS]
    curves = chained_sweeps(channel, values, ("r2", "R3"), "r1", n_angles, seed)
    return FigureData("fig5", {f"r1={v}bits": c for v, c in zip(FIG5_R1_BITS, curves)})


def fig6(channel: Dmmac, n_angles: int = 181, seed: int = 0) -> FigureData:
    """(r1, r2) faces at the preset values of R3."""
    values = [v * LN2 for v in FIG6_R3_BITS]
    curves = chained_sweeps(channel, values, ("r1", "r2"), "R3", n_angles, seed)
    return FigureData("fig6", {f"R3={v}bits": c for v, c in zip(FIG6_R3_BITS, curves)},
                      meta={"silent_capacity_nats": silent_capacity(channel)})


def upper_hull(x: np.ndarray, curves) -> np.ndarray:
    """Upper concave envelope of the union of ``(x, y)`` point sets,
    evaluated on ``x``."""
    top = {}
    for y in curves:
        for a, b in zip(x, y):
            top[float(a)] = max(top.get(float(a), -np.inf), float(b))
    pts = sorted(top.items())
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append(p)
    hx, hy = zip(*hull)
    return np.interp(x, hx, hy)


def r2_key_tradeoff(channel: Dmmac, k2_values, pinned=None, seed: int = 0, warm=()) -> tuple:
    """Largest r2 at each k2 budget with r1 fixed at the preset and k1 at the
    preset budget. Returns ``(r2 array, witnesses)``."""
    r1 = FIG7_R1_BITS * LN2
    out, witnesses = [], []
    prev = None
    for i, k in enumerate(k2_values):
        q = RegionQuery({"r2": 1.0}, {"k1": KEY_BUDGET_BITS * LN2, "k2": float(k)}, {"r1": r1},
                        dict(pinned or {}))
        starts = [prev] if prev is not None else []
        starts += [w[i] for w in warm]
        point = maximize(q, channel, seed=seed, warm_starts=starts)
        prev = point.params
        out.append(point.rates.r2)
        witnesses.append(point.params)
    return np.array(out), witnesses


def fig7(channel: Dmmac, n_points: int = 33, seed: int = 0) -> FigureData:
    """Largest r2 against the k2 budget: optimized X3, X3 fixed to 0 or 1,
    and the upper hull of the two fixed curves."""
    k2 = np.linspace(0.0, KEY_BUDGET_BITS * LN2, n_points)
    zero, w0 = r2_key_tradeoff(channel, k2, {0: [1.0, 0.0]}, seed)
    one, w1 = r2_key_tradeoff(channel, k2, {0: [0.0, 1.0]}, seed)
    rand, _ = r2_key_tradeoff(channel, k2, None, seed, warm=(w0, w1))
    hull = upper_hull(k2, [zero, one])
    return FigureData("fig7", table={"k2": k2, "r2_random_x3": rand, "r2_x3_0": zero,
                                     "r2_x3_1": one, "r2_hull": hull})


def fig8(channel: Dmmac, n_angles: int = 181, seed: int = 0) -> FigureData:
    """(r2, R3) face at the preset r1 with one phase and with two phases."""
    fixed = {"r1": FIG8_R1_BITS * LN2}
    single = boundary_sweep(channel, _budgets(), fixed, ("r2", "R3"), n_angles, seed=seed, n_phases=1)
    multi = boundary_sweep(channel, _budgets(), fixed, ("r2", "R3"), n_angles, seed=seed, n_phases=2,
                           warm_curve=single)
    angles = np.array([s.angle for s in single.samples])
    h1 = np.array([single.support(a) for a in angles])
    h2 = np.array([multi.support(a) for a in angles])
    return FigureData("fig8", {"T=1": single, "T=2": multi},
                      table={"angle": angles, "support_T1": h1, "support_T2": h2, "gain": h2 - h1})


BUILDERS = {"fig4": fig4, "fig5": fig5, "fig6": fig6, "fig7": fig7, "fig8": fig8}

__all__ = ["BUILDERS", "FIGURES", "FigureData", "InfeasibleQuery", "chained_sweeps",
           "fig4", "fig5", "fig6", "fig7", "fig8", "r2_key_tradeoff", "silent_capacity", "upper_hull"]
