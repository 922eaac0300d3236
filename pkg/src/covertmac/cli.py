"""Command-line front end.

Exit codes: 0 success, 2 channel validation or loading failure, 3 infeasible
region query. Rates given on the command line and written to files are in
nats unless ``--bits`` is passed, in which case both are in bits.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (ChannelError, Dmmac, DmicChannel, GeneralMac, dumps, load, paper_channel,
                      reduce_single_user, save, validate)
from .region import (LN2, CovertParams, InfeasibleQuery, NotReducible, RegionQuery, grid_search, maximize,
                     single_user_constants, single_user_tradeoff, tradeoff_knee)
from .region.sweep import boundary_sweep, curve_csv, curve_params_json

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ------------------------------------------------------------------ helpers

def _unit(args) -> float:
    """Multiplier from nats to the output unit."""
    return 1.0 / LN2 if getattr(args, "bits", False) else 1.0


def _to_nats(args, v: float) -> float:
    return v * LN2 if args.bits else v


def _load_channel(args):
    if getattr(args, "channel", None) is None:
        return paper_channel()
    try:
        return load(args.channel, from_rows=args.from_rows)
    except OSError as exc:
        raise CliError(f"cannot read channel file: {exc}", EXIT_INVALID) from None
    except ChannelError as exc:
        raise CliError(f"invalid channel: {exc}", EXIT_INVALID) from None


def _require_valid(channel):
    report = validate(channel)
    if not report.ok:
        lines = "\n".join(f"  {v}" for v in report)
        raise CliError(f"channel violates the regularity conditions:\n{lines}", EXIT_INVALID)


def channel_digest(channel) -> str:
    return hashlib.sha256(dumps(channel).encode()).hexdigest()


def _json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True, allow_nan=True) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(text)


def _provenance(args, channel, command: str, **extra) -> dict:
    """Inputs that determine the payload; output paths are left out so a
    rerun elsewhere writes identical bytes."""
    skip = {"out", "func"}
    argv = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {"tool": "covertmac", "version": __version__, "command": command, "arguments": argv,
            "channel_sha256": channel_digest(channel), "units": "bits" if getattr(args, "bits", False) else "nats", **extra}


def _pairs(items, what: str) -> dict:
    out = {}
    for item in items or []:
        for part in item.split(","):
            if not part:
                continue
            if "=" not in part:
                raise CliError(f"{what}: expected NAME=VALUE, got {part!r}", EXIT_INVALID)
            k, v = part.split("=", 1)
            try:
                out[k.strip()] = float(v)
            except ValueError:
                raise CliError(f"{what}: {v!r} is not a number", EXIT_INVALID) from None
    return out


def _fmt(v) -> str:
    return f"{float(v):.12g}"


def _table_csv(columns: dict, scale: float, unscaled=("angle",)) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = list(columns)
    w.writerow(names)
    for row in zip(*(np.asarray(columns[c]) for c in names)):
        w.writerow([_fmt(v if c in unscaled else v * scale) for c, v in zip(names, row)])
    return buf.getvalue()


def _slug(label: str) -> str:
    return re.sub(r"[^A-Za-z0-9.]+", "_", label).strip("_")


# ----------------------------------------------------------------- commands

def cmd_validate(args) -> int:
    channel = _load_channel(args)
    report = validate(channel)
    kind = type(channel).__name__
    if report.ok:
        print(f"{kind}: all regularity conditions hold")
        return EXIT_OK
    print(f"{kind}: {len(report)} violation(s)")
    for v in report:
        print(f"  {v}")
    return EXIT_INVALID


def cmd_convert(args) -> int:
    try:
        channel = load(args.rows, from_rows=True)
    except OSError as exc:
        raise CliError(f"cannot read rows file: {exc}", EXIT_INVALID) from None
    except ChannelError as exc:
        raise CliError(f"invalid rows file: {exc}", EXIT_INVALID) from None
    save(channel, args.out)
    return EXIT_OK


def _mode_channel(channel, mode):
    if mode == "general" and isinstance(channel, Dmmac):
        return GeneralMac.from_dmmac(channel)
    return channel


def cmd_region(args) -> int:
    channel = _mode_channel(_load_channel(args), args.mode)
    _require_valid(channel)
    budgets = {}
    if args.budget_k1 is not None:
        budgets["k1"] = _to_nats(args, args.budget_k1)
    if args.budget_k2 is not None:
        budgets["k2"] = _to_nats(args, args.budget_k2)
    fixed = {k: _to_nats(args, v) for k, v in _pairs(args.fix, "--fix").items()}
    out = Path(args.out)
    scale = _unit(args)
    prov = _provenance(args, channel, "region", seed=args.seed)
    if any(v < 0 for v in list(budgets.values()) + list(fixed.values())):
        raise CliError("negative key budget or fixed rate: the query is infeasible", EXIT_INFEASIBLE)
    try:
        if args.maximize:
            weights = _pairs([args.maximize], "--maximize")
            query = RegionQuery(weights, budgets, fixed)
            if args.grid:
                if not isinstance(channel, Dmmac):
                    raise CliError("--grid needs a three-user MAC", EXIT_INVALID)
                point = grid_search(query, channel, args.grid)
            else:
                point = maximize(query, channel, n_phases=args.phases, starts=args.starts, seed=args.seed)
            payload = {"rates": {k: v * scale for k, v in point.rates.as_dict().items()},
                       "objective": point.objective * scale, "params": point.params.to_dict(),
                       "params_id": point.params.digest(), "provenance": prov}
            _write(out / "point.json", _json(payload))
            print(" ".join(f"{k}={_fmt(v)}" for k, v in payload["rates"].items()))
            return EXIT_OK
        axes = tuple(a.strip() for a in args.axes.split(","))
        curve = boundary_sweep(channel, budgets, fixed, axes, args.angles, seed=args.seed,
                               starts=args.starts, n_phases=args.phases)
    except InfeasibleQuery as exc:
        raise CliError(f"infeasible query: {exc}", EXIT_INFEASIBLE) from None
    except ValueError as exc:
        raise CliError(str(exc), EXIT_INVALID) from None
    _write(out / "boundary.csv", curve_csv(curve, scale))
    _write(out / "params.json", curve_params_json(curve))
    _write(out / "provenance.json", _json(prov))
    print(f"{len(curve.samples)} boundary samples written to {out}")
    return EXIT_OK


def _parse_reduce(text: str) -> dict:
    vals = {k: int(v) for k, v in _pairs([text], "--reduce").items()}
    if "user" not in vals or vals["user"] not in (1, 2) or set(vals) - {"user", "x3"}:
        raise CliError("--reduce expects user=1 or user=2, optionally x3=K", EXIT_INVALID)
    return vals


def cmd_tradeoff(args) -> int:
    channel = _load_channel(args)
    if not isinstance(channel, Dmmac):
        raise CliError("tradeoff needs a three-user MAC", EXIT_INVALID)
    _require_valid(channel)
    user = 1
    if args.reduce:
        spec = _parse_reduce(args.reduce)
        user = spec["user"]
        channel = reduce_single_user(channel, user, spec.get("x3", 0))
    try:
        dy, dz, chi2 = single_user_constants(channel, user)
    except NotReducible as exc:
        raise CliError(f"{exc}; pass --reduce user=1 to pin the other inputs", EXIT_INVALID) from None
    knee = tradeoff_knee(channel, user)
    k_max = _to_nats(args, args.k_max) if args.k_max is not None else max(1.5 * knee, 1.0)
    ks = np.linspace(0.0, k_max, args.points)
    rs = np.array([single_user_tradeoff(k, channel, user) for k in ks])
    scale = _unit(args)
    key, rate = f"k{user}", f"r{user}"
    _write(Path(args.out), _table_csv({key: ks, rate: rs}, scale))
    side = _provenance(args, channel, "tradeoff", user=user,
                       constants={"D_Y": dy, "D_Z": dz, "chi2": chi2},
                       knee=knee * scale, capacity=math.sqrt(2) * dy / math.sqrt(chi2) * scale)
    _write(Path(str(args.out) + ".json"), _json(side))
    print(f"knee {key}={_fmt(knee * scale)}, saturation {rate}={_fmt(side['capacity'])}")
    return EXIT_OK


def _load_params(args) -> CovertParams:
    try:
        doc = json.loads(Path(args.params).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read params file: {exc}", EXIT_INVALID) from None
    if "params" in doc and isinstance(doc["params"], dict):
        doc = doc["params"]
    if "p_t" not in doc:
        # a params table from a sweep
        if args.params_id is None:
            if len(doc) != 1:
                raise CliError("params file holds several witnesses; pass --params-id", EXIT_INVALID)
            doc = next(iter(doc.values()))
        elif args.params_id in doc:
            doc = doc[args.params_id]
        else:
            raise CliError(f"no witness with id {args.params_id!r}", EXIT_INVALID)
    try:
        return CovertParams.from_dict(doc)
    except (KeyError, ValueError) as exc:
        raise CliError(f"invalid params: {exc}", EXIT_INVALID) from None


def cmd_simulate(args) -> int:
    from .simulator import MixtureCapExceeded, OmegaRule, SimConfig, simulate, theorem_sizes

    channel = _load_channel(args)
    if not isinstance(channel, Dmmac):
        raise CliError("simulate needs a three-user MAC", EXIT_INVALID)
    _require_valid(channel)
    params = _load_params(args)
    phi = tuple(float(v) for v in args.phi.split(","))
    config = SimConfig(n=args.n, omega=OmegaRule(args.omega_scale), mu1=args.mu, mu2=args.mu,
                       xi=(args.xi,) * 6, phi=phi, seed=args.seed, redraw=args.redraw,
                       mixture_cap=args.mixture_cap)
    sizes = {k: int(v) for k, v in _pairs(args.sizes, "--sizes").items()}
    if sizes:
        from dataclasses import replace
        config = replace(config, sizes=sizes)
    else:
        config = theorem_sizes(config, params, channel, args.factor, m3_cap=args.m3_cap)
    try:
        result = simulate(config, params, channel, args.trials, args.delta_samples)
    except MixtureCapExceeded as exc:
        raise CliError(f"{exc}; lower the sizes or raise --mixture-cap", EXIT_INVALID) from None
    payload = result.to_dict()
    payload["params"] = params.to_dict()
    payload["provenance"] = _provenance(args, channel, "simulate", seed=args.seed)
    _write(Path(args.out), _json(payload))
    pe = result.errors.get("pe1")
    if pe is not None:
        print(f"P_e0={_fmt(result.errors['pe0'].rate)} P_e1={_fmt(pe.rate)} over {args.trials} trials")
    if result.delta is not None:
        print(f"delta={_fmt(result.delta.mean)} nats (stderr {_fmt(result.delta.stderr)}), "
              f"theory {_fmt(result.theory)}")
    return EXIT_OK


def cmd_figures(args) -> int:
    from .figures import BUILDERS, FIGURES

    channel = _load_channel(args)
    _require_valid(channel)
    which = FIGURES if args.which == "all" else (args.which,)
    scale = _unit(args)
    root = Path(args.out)
    for name in which:
        kwargs = {"seed": args.seed}
        if args.angles is not None and name != "fig7":
            kwargs["n_angles"] = args.angles
        if args.points is not None and name == "fig7":
            kwargs["n_points"] = args.points
        data = BUILDERS[name](channel, **kwargs)
        folder = root / name
        index = {}
        for label, curve in data.curves.items():
            slug = _slug(label)
            _write(folder / f"{slug}.csv", curve_csv(curve, scale))
            _write(folder / f"{slug}.params.json", curve_params_json(curve))
            index[label] = f"{slug}.csv"
        if data.table is not None:
            _write(folder / "table.csv", _table_csv(data.table, scale))
            index["table"] = "table.csv"
        meta = dict(data.meta)  # keys carry their own unit
        _write(folder / "provenance.json",
               _json(_provenance(args, channel, "figures", figure=name, files=index, meta=meta,
                                 seed=args.seed)))
        print(f"{name}: {len(index)} file(s) in {folder}")
    return EXIT_OK


# ------------------------------------------------------------------- parser

def _channel_args(p, required=True):
    p.add_argument("--channel", required=required, help="channel JSON file")
    p.add_argument("--from-rows", action="store_true", help="the file uses the eight-row layout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covertmac", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"covertmac {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check the regularity conditions")
    _channel_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("convert", help="eight-row layout to channel JSON")
    p.add_argument("--rows", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("region", help="boundary sweep or single weighted maximum")
    _channel_args(p)
    p.add_argument("--mode", choices=("mac", "ic", "general"))
    p.add_argument("--budget-k1", type=float)
    p.add_argument("--budget-k2", type=float)
    p.add_argument("--fix", action="append", help="NAME=VALUE, e.g. r1=0.5 (repeatable)")
    p.add_argument("--axes", default="r2,R3")
    p.add_argument("--maximize", help="weights NAME=W,... for a single point instead of a sweep")
    p.add_argument("--angles", type=int, default=181)
    p.add_argument("--phases", type=int)
    p.add_argument("--starts", type=int, default=64)
    p.add_argument("--grid", type=int, help="single-phase grid search with this many steps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bits", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_region)

    p = sub.add_parser("tradeoff", help="single-user key/covert-rate tradeoff")
    _channel_args(p)
    p.add_argument("--reduce", help="user=1 (optionally ,x3=K): pin the other inputs")
    p.add_argument("--k-max", type=float)
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--bits", action="store_true")
    p.add_argument("--out", required=True, help="CSV path; a .json sidecar is written next to it")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("simulate", help="Monte Carlo run of the coding scheme")
    _channel_args(p)
    p.add_argument("--params", required=True, help="witness JSON (or a sweep's params table)")
    p.add_argument("--params-id")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--delta-samples", type=int, default=0)
    p.add_argument("--factor", type=float, default=1.0, help="multiplier on the log code sizes")
    p.add_argument("--sizes", action="append", help="explicit sizes M1=..,K1=.. (overrides --factor)")
    p.add_argument("--m3-cap", type=int, default=4096)
    p.add_argument("--phi", default="1,1")
    p.add_argument("--omega-scale", type=float, default=1.0)
    p.add_argument("--mu", type=float, default=0.1)
    p.add_argument("--xi", type=float, default=0.1)
    p.add_argument("--mixture-cap", type=int, default=4096)
    p.add_argument("--redraw", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("figures", help="data of the numerical-example figures")
    p.add_argument("which", choices=("fig4", "fig5", "fig6", "fig7", "fig8", "all"))
    _channel_args(p, required=False)
    p.add_argument("--angles", type=int)
    p.add_argument("--points", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bits", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_figures)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"covertmac {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
