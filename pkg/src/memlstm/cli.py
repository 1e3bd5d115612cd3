"""Command line: ``memlstm {train,simulate,compare,sweep,dump-curves,dump-crossbar}``.

Failures print exactly one line to stderr, ``error: <category>: <message>``,
and exit non-zero (2 for usage/config problems, 1 otherwise).
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import analog as an
from . import crossbar as xb
from . import experiments as ex
from . import lstm
from . import scheduler as sch
from .config import RunConfig, load_config
from .errors import ConfigError, MemLSTMError


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = argparse.SUPPRESS if suppress else None
    parser.add_argument("--config", default=default, help="JSON run config (version v1)")
    parser.add_argument("--seed", type=int, default=default, help="global seed; overrides section seeds")
    parser.add_argument("--out", default=default, help="output directory (overrides output_dir)")
    parser.add_argument("--no-timestamp", action="store_true", default=argparse.SUPPRESS if suppress else False,
                        help="omit generated_at from reports")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memlstm", description="Memristive-crossbar LSTM inference simulator")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        return p

    p = add("train", help_="train the reference network and write weights.json")
    p.add_argument("--dataset", help="passenger CSV (defaults to the bundled series)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float)

    p = add("simulate", help_="run the analog pipeline over the test rows")
    p.add_argument("--weights", required=True)
    p.add_argument("--dataset")
    p.add_argument("--trace", action="store_true", help="also write the first row's cycle trace")

    p = add("compare", help_="tabulate software vs analog predictions")
    p.add_argument("--software", required=True, help="prediction CSV from the software path")
    p.add_argument("--analog", required=True, help="prediction CSV from the analog path")
    p.add_argument("--targets", help="prediction CSV whose target column to use (default: --software)")

    p = add("sweep", help_="Monte Carlo sensitivity to one non-ideality")
    p.add_argument("--weights", required=True)
    p.add_argument("--parameter", required=True)
    p.add_argument("--values", required=True, help="comma-separated; 'continuous' allowed for levels")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dataset")

    p = add("dump-curves", help_="write v_in,v_out transfer sweeps of the analog blocks")
    p.add_argument("--start", type=float, default=-1.0)
    p.add_argument("--stop", type=float, default=1.0)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--v-b", type=float, default=1.0, help="fixed second multiplier input")

    p = add("dump-crossbar", help_="write programmed conductances of both crossbars")
    p.add_argument("--weights", required=True)
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.updated(None, seed=args.seed)
    if getattr(args, "dataset", None):
        cfg = cfg.updated("dataset", path=args.dataset)
    if args.command == "train":
        if args.epochs is not None:
            cfg = cfg.updated("train", epochs=args.epochs)
        if args.learning_rate is not None:
            cfg = cfg.updated("train", learning_rate=args.learning_rate)
    return cfg


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out if args.out else cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, payload: dict, args) -> None:
    if not args.no_timestamp:
        payload = {**payload, "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds")}
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _load_weights(path) -> lstm.WeightSet:
    if not Path(path).is_file():
        raise FileNotFoundError(f"weights file not found: {path}")
    return lstm.import_weights(path)


def cmd_train(args, cfg: RunConfig) -> None:
    out = _out_dir(args, cfg)
    result = ex.train_weights(cfg)
    lstm.export_weights(result.weights, out / "weights.json")
    report = {"command": "train", **result.report(), "hyperparams": cfg.train.model_dump(),
              "effective_seed": cfg.hyperparams().seed, "literature_reference": ex.LITERATURE_REFERENCE}
    _write_json(out / "train_report.json", report, args)
    print(f"train MSE {result.train_mse:.6f} RMSE {result.train_rmse:.6f}")
    print(f"test  MSE {result.test_mse:.6f} RMSE {result.test_rmse:.6f}  (normalized scale)")
    print(f"weights -> {out / 'weights.json'}")


def cmd_simulate(args, cfg: RunConfig) -> None:
    out = _out_dir(args, cfg)
    weights = _load_weights(args.weights)
    data = ex.load_data(cfg)
    result = ex.simulate(cfg, weights, data, keep_traces=args.trace)
    norm = data.normalizer
    (out / "software_predictions.csv").write_text(ex.predictions_csv(result.targets, result.software, norm), "utf-8")
    (out / "analog_predictions.csv").write_text(ex.predictions_csv(result.targets, result.analog, norm), "utf-8")
    if args.trace:
        (out / "trace.csv").write_text(sch.trace_csv(result.traces[0]), "utf-8")
    report = {"command": "simulate", **result.report(), "config": cfg.model_dump(),
              "literature_reference": ex.LITERATURE_REFERENCE}
    _write_json(out / "simulation_report.json", report, args)
    sm, am = result.software_metrics, result.analog_metrics
    print(f"software MSE {sm[0]:.6f} RMSE {sm[1]:.6f}")
    print(f"analog   MSE {am[0]:.6f} RMSE {am[1]:.6f}")
    print(f"total simulated time {result.total_time_ms:g} ms ({result.targets.size} x {result.cycle_time_us:g} us)")
    print(f"energy {result.energy_mj * 1e3:.6g} uJ")


def _read_predictions(path):
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"prediction file not found: {p}")
    return ex.read_predictions_csv(p.read_text("utf-8"))


def cmd_compare(args, cfg: RunConfig) -> None:
    out = _out_dir(args, cfg)
    t_sw, software = _read_predictions(args.software)
    _, analog = _read_predictions(args.analog)
    targets = _read_predictions(args.targets)[0] if args.targets else t_sw
    comp = ex.compare(software, analog, targets)
    (out / "comparison.csv").write_text(comp.csv(), "utf-8")
    _write_json(out / "comparison.json",
                {"command": "compare", **comp.summary(), "literature_reference": ex.LITERATURE_REFERENCE}, args)
    print(ex.render_summary(comp))


def cmd_sweep(args, cfg: RunConfig) -> None:
    out = _out_dir(args, cfg)
    weights = _load_weights(args.weights)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    try:
        points = ex.sweep(cfg, weights, args.parameter, values, args.trials, workers=args.workers)
    except ValueError as exc:
        if isinstance(exc, MemLSTMError):
            raise
        raise ConfigError(str(exc)) from None
    (out / "sweep.csv").write_text(ex.sweep_csv(args.parameter, points), "utf-8")
    _write_json(out / "sweep.json", {
        "command": "sweep", "parameter": args.parameter, "trials": args.trials,
        "points": [{"value": p.value, "mean_rmse": p.mean_rmse, "std_rmse": p.std_rmse, "rmses": list(p.rmses)}
                   for p in points],
    }, args)
    for p in points:
        label = "continuous" if p.value is None else p.value
        print(f"{args.parameter}={label}: RMSE {p.mean_rmse:.6f} +/- {p.std_rmse:.6f}")


def cmd_dump_curves(args, cfg: RunConfig) -> None:
    out = _out_dir(args, cfg)
    params = cfg.analog_params()
    for block in an.CURVES:
        v_in, v_out = an.transfer_curve(block, params, args.start, args.stop, args.step, args.v_b)
        (out / f"{block}_curve.csv").write_text(an.curve_csv(v_in, v_out), "utf-8")
        print(f"{block}: {v_in.size} points -> {out / f'{block}_curve.csv'}")


def cmd_dump_crossbar(args, cfg: RunConfig) -> None:
    out = _out_dir(args, cfg)
    net = an.program_network(_load_weights(args.weights), cfg.memristor_params(), cfg.variation_model())
    for name, arr in (("lstm", net.lstm), ("dense", net.dense)):
        (out / f"{name}_crossbar.csv").write_text(xb.dump_crossbar(arr), "utf-8")
        print(f"{name}: {arr.rows}x{arr.cols} -> {out / f'{name}_crossbar.csv'}")


COMMANDS = {
    "train": cmd_train,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "dump-curves": cmd_dump_curves,
    "dump-crossbar": cmd_dump_crossbar,
}


def _fail(category: str, message: str, code: int) -> int:
    print(f"error: {category}: {' '.join(str(message).split())}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _resolve_config(args)
        COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        return _fail(exc.category, exc, 2)
    except MemLSTMError as exc:
        return _fail(exc.category, exc, 1)
    except FileNotFoundError as exc:
        return _fail("io", exc, 1)
    except OSError as exc:
        return _fail("io", exc, 1)
    except ValueError as exc:
        return _fail("value", exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
