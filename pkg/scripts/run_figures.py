"""Regenerate the figure data for the bundled MAC into ``results/figures``.

    python scripts/run_figures.py            # all five figures, bits
    python scripts/run_figures.py fig5 fig8  # a subset
"""
from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from covertmac.cli import main as cli


@dataclass
class FigureRun:
    figures: list = field(default_factory=lambda: ["fig4", "fig5", "fig6", "fig7", "fig8"])
    out: Path = Path("results/figures")
    seed: int = 0
    bits: bool = True


def run(cfg: FigureRun) -> None:
    for name in cfg.figures:
        t0 = time.perf_counter()
        argv = ["figures", name, "--out", str(cfg.out), "--seed", str(cfg.seed)]
        if cfg.bits:
            argv.append("--bits")
        code = cli(argv)
        if code:
            raise SystemExit(code)
        print(f"  {name} took {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    cfg = FigureRun()
    if sys.argv[1:]:
        cfg.figures = sys.argv[1:]
    run(cfg)
