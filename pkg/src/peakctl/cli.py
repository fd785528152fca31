"""Command-line front end.

Subcommands: synthesize, simulate, check, oracle, sweep.  A run is described
by a JSON config (schema "peakctl-config/1"); CLI flags override config
values.  Every output file embeds the fully resolved config so a run can be
reproduced from any of its artifacts; the only non-deterministic field is
the timestamp, isolated in the header block.

Exit codes: 0 ok, 1 usage, 2 condition-fail, 3 inconclusive,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from . import __version__
from .errors import ConfigError, EmptyRegion, NoBracket, PeakctlError
from .models import State, builtin
from .nsn import simulate_nsn
from .synthesis import solve_ystar, uncontrolled_arc
from .verify import (CheckReport, ConditionResult, check_assumption2,
                     check_assumption3, check_assumption4, check_green,
                     check_hypotheses5, oracle_compare)

CONFIG_SCHEMA = "peakctl-config/1"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONDITION_FAIL = 2
EXIT_INCONCLUSIVE = 3
EXIT_NUMERICAL = 4

_DEFAULT_BOXES = {
    "example1": (0.0, 3.0, 0.05, 3.0),
    "sir": (0.0, 1.0, 0.01, 1.0),
    "monod": (0.01, 5.0, 0.05, 3.0),
    "contois": (0.01, 5.0, 0.05, 3.0),
}


@dataclass
class RunConfig:
    model: str = "example1"
    params: dict = field(default_factory=dict)
    x0: float = 2.0
    y0: float = 2.0
    budget: float = 0.1
    horizon: float = 1.0e4
    rtol: float = 1e-10
    atol: float = 1e-12
    grid: int = 200
    box: Optional[list] = None
    samples: int = 500
    pieces: int = 8
    seed: int = 42
    out: str = "."
    uncontrolled: bool = False
    plots: bool = True
    workers: Optional[int] = None
    sweep: Optional[str] = None
    values: Optional[list] = None

    def resolved(self) -> dict:
        d = asdict(self)
        d["schema"] = CONFIG_SCHEMA
        return d

    def the_model(self):
        return builtin(self.model, self.params)

    def s0(self) -> State:
        return State(self.x0, self.y0)

    def the_box(self) -> tuple:
        if self.box is not None:
            if len(self.box) != 4:
                raise ConfigError("box must be [xmin, xmax, ymin, ymax]")
            return tuple(self.box)
        return _DEFAULT_BOXES.get(self.model, (0.01, 5.0, 0.05, 3.0))


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        for piece in item.split(","):
            if not piece:
                continue
            if "=" not in piece:
                raise ConfigError(f"malformed parameter {piece!r}; want k=v")
            k, v = piece.split("=", 1)
            out[k.strip()] = float(v)
    return out


def load_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
        schema = doc.pop("schema", CONFIG_SCHEMA)
        if schema != CONFIG_SCHEMA:
            raise ConfigError(f"unsupported config schema {schema!r}")
        for k, v in doc.items():
            if not hasattr(cfg, k):
                raise ConfigError(f"unknown config key {k!r}")
            setattr(cfg, k, v)
    for k in ("model", "x0", "y0", "budget", "horizon", "rtol", "atol",
              "grid", "samples", "pieces", "seed", "out", "workers", "sweep"):
        v = getattr(args, k, None)
        if v is not None:
            setattr(cfg, k, v)
    if getattr(args, "params", None):
        cfg.params = {**cfg.params, **_parse_params(args.params)}
    if getattr(args, "box", None):
        cfg.box = [float(v) for v in args.box.split(",")]
    if getattr(args, "values", None) is not None:
        cfg.values = [float(v) for v in args.values.split(",") if v != ""]
    if getattr(args, "uncontrolled", False):
        cfg.uncontrolled = True
    if getattr(args, "no_plots", False):
        cfg.plots = False
    return cfg


def _header() -> dict:
    return {"tool": f"peakctl {__version__}",
            "generated_at": datetime.now(timezone.utc).isoformat()}


def _write_json(path: Path, cfg: RunConfig, payload: dict) -> None:
    doc = {"header": _header(), "config": cfg.resolved(), **payload}
    path.write_text(json.dumps(doc, indent=2) + "\n")


def _config_comment(cfg: RunConfig) -> str:
    return "config: " + json.dumps(cfg.resolved(), sort_keys=True)


def cmd_synthesize(cfg: RunConfig) -> int:
    model = cfg.the_model()
    report = solve_ystar(model, cfg.s0(), cfg.budget, horizon=cfg.horizon)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "synthesis.json", cfg, report.to_json())
    with open(out / "budget_curve.csv", "w", newline="") as fh:
        fh.write(f"# {_config_comment(cfg)}\n")
        w = csv.writer(fh)
        w.writerow(["ybar", "L", "xbar"])
        xb = dict(report.xbar_arc)
        for yb, L in report.budget_curve:
            w.writerow([repr(float(yb)), repr(float(L)),
                        repr(float(xb.get(yb, float("nan"))))])
    if cfg.plots:
        from .plots import plot_budget_curve
        plot_budget_curve(report, out / "budget_curve.png")
    print(f"regime={report.regime} y0max={report.y0max:.6f} "
          f"ystar={report.ystar:.6f}")
    return EXIT_OK


def cmd_simulate(cfg: RunConfig) -> int:
    model = cfg.the_model()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.uncontrolled:
        y0max, arc = uncontrolled_arc(model, cfg.s0(), horizon=cfg.horizon)
        arc.to_csv(out / "trajectory.csv", header_comment=_config_comment(cfg))
        arc.events_json(out / "events.json")
        _write_json(out / "result.json", cfg,
                    {"peak": y0max, "spent": 0.0, "uncontrolled": True})
        print(f"uncontrolled peak={y0max:.6f}")
        return EXIT_OK
    res = simulate_nsn(model, cfg.s0(), cfg.budget, horizon=cfg.horizon,
                       rtol=cfg.rtol, atol=cfg.atol)
    res.trajectory.to_csv(out / "trajectory.csv",
                          header_comment=_config_comment(cfg))
    res.trajectory.events_json(out / "events.json")
    _write_json(out / "result.json", cfg, res.to_json())
    if cfg.plots:
        from .plots import plot_orbit, plot_timeseries
        plot_orbit(res, out / "orbit.png")
        plot_timeseries(res, out / "timeseries.png")
    print(f"peak={res.peak:.6f} spent={res.spent:.6f} "
          f"regime={res.report.regime}")
    return EXIT_OK


def cmd_check(cfg: RunConfig) -> int:
    model = cfg.the_model()
    box = cfg.the_box()
    n = cfg.grid

    def run(name, fn, *a):
        try:
            return fn(*a)
        except (EmptyRegion, NoBracket) as exc:
            # an empty f2 > 0 region / missing f2 = 0 curve is itself a
            # decisive failure of the standing assumptions
            rep = CheckReport(name, {"box": list(box), "n_grid": n})
            rep.conditions.append(ConditionResult(
                f"{name}.region_nonempty", "fail", detail=str(exc)))
            return rep

    reports = [run("assumption2", check_assumption2, model, box, n),
               run("assumption3", check_assumption3, model, box, n),
               run("assumption4", check_assumption4, model,
                   (box[2], box[3]), n),
               run("green", check_green, model, box, n)]
    if model.kolmogorov is not None:
        reports.append(run("hypotheses5", check_hypotheses5,
                           model.kolmogorov, box, n))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    statuses = [r.status for r in reports]
    overall = ("fail" if "fail" in statuses
               else "inconclusive" if "inconclusive" in statuses else "pass")
    _write_json(out / "check.json", cfg,
                {"status": overall, "checks": [r.to_json() for r in reports]})
    for r in reports:
        print(f"{r.name}: {r.status}")
    print(f"overall: {overall}")
    if overall == "fail":
        return EXIT_CONDITION_FAIL
    if overall == "inconclusive":
        return EXIT_INCONCLUSIVE
    return EXIT_OK


def cmd_oracle(cfg: RunConfig) -> int:
    model = cfg.the_model()
    report = oracle_compare(model, cfg.s0(), cfg.budget,
                            n_samples=cfg.samples, n_pieces=cfg.pieces,
                            seed=cfg.seed,
                            horizon=min(cfg.horizon, 200.0),
                            workers=cfg.workers)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "oracle.json", cfg, report.to_json())
    print(f"nsn_peak={report.nsn_peak:.6f} "
          f"best_alternative={report.best_alternative_peak:.6f} "
          f"margin={report.margin:.2e}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    if not cfg.sweep:
        raise ConfigError("sweep requires an axis (--sweep K or --sweep <param>)")
    if not cfg.values:
        raise ConfigError("sweep requires a non-empty --values list")
    axis = cfg.sweep
    rows = []
    for v in cfg.values:
        if axis == "K":
            model = cfg.the_model()
            budget = float(v)
        else:
            model = builtin(cfg.model, {**cfg.params, axis: float(v)})
            budget = cfg.budget
        res = simulate_nsn(model, cfg.s0(), budget, horizon=cfg.horizon,
                           rtol=cfg.rtol, atol=cfg.atol)
        rows.append((float(v), res.report.ystar, res.spent, res.peak))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        fh.write(f"# {_config_comment(cfg)}\n")
        w = csv.writer(fh)
        w.writerow([axis, "ystar", "spent", "peak"])
        for row in rows:
            w.writerow([repr(float(x)) for x in row])
    if cfg.plots:
        from .plots import plot_sweep
        plot_sweep([r[0] for r in rows], [r[1] for r in rows],
                   [r[3] for r in rows], axis, out / "sweep.png")
    for row in rows:
        print(f"{axis}={row[0]:g} ystar={row[1]:.6f} "
              f"spent={row[2]:.6f} peak={row[3]:.6f}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="peakctl",
                description="Budget-constrained peak-minimizing feedback: "
                            "synthesis, simulation, verification.")
    p.add_argument("--version", action="version",
                   version=f"peakctl {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (("synthesize", cmd_synthesize),
                     ("simulate", cmd_simulate),
                     ("check", cmd_check),
                     ("oracle", cmd_oracle),
                     ("sweep", cmd_sweep)):
        sp = sub.add_parser(name)
        sp.set_defaults(fn=fn)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--model")
        sp.add_argument("--params", action="append", metavar="k=v,...")
        sp.add_argument("--x0", type=float)
        sp.add_argument("--y0", type=float)
        sp.add_argument("--budget", type=float)
        sp.add_argument("--horizon", type=float)
        sp.add_argument("--rtol", type=float)
        sp.add_argument("--atol", type=float)
        sp.add_argument("--grid", type=int)
        sp.add_argument("--box", metavar="xmin,xmax,ymin,ymax")
        sp.add_argument("--samples", type=int)
        sp.add_argument("--pieces", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out")
        sp.add_argument("--workers", type=int)
        sp.add_argument("--uncontrolled", action="store_true")
        sp.add_argument("--no-plots", action="store_true")
        if name == "sweep":
            sp.add_argument("--sweep", metavar="AXIS",
                            help="K or a model parameter name")
            sp.add_argument("--values", metavar="v1,v2,...")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args)
        return args.fn(cfg)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PeakctlError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
