"""Command-line front end.

Every command resolves a strict JSON config (``--config``) with flag
overrides on top, persists the resolved config, and writes CSV artifacts plus
``metrics.json`` into ``--out``. Exit codes: 0 ok, 2 config, 3 numeric, 4 I/O.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import config as C
from .artifacts import write_frame, write_json, write_matrix, write_table
from .errors import ConfigError, ModelFormatError, RFFRCError
from .forecaster import rollout
from .metrics import GridRow, fit_and_score, grid_search, nrmse, sweep_single_hyperparameter
from .model_io import load_model, save_model
from .recipes import RECIPES, run_recipe
from .systems import measure_snr
from .timeseries import segment_bounds, write_csv

log = logging.getLogger("rffrc")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _ints(text):
    vals = _floats(text)
    if any(not v.is_integer() for v in vals):
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return [int(v) for v in vals]


def _common(p):
    p.add_argument("--config", help="JSON experiment config; flags override its values")
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=_ints, help="comma-separated seed list")
    p.add_argument("--out", help="output directory")
    p.add_argument("--quiet", action="store_true")
    g = p.add_argument_group("data")
    g.add_argument("--system", choices=C.SYSTEMS)
    g.add_argument("--data", help="CSV trajectory (implies --system external_csv)")
    g.add_argument("--steps", type=int, help="samples to generate (Lorenz / KS)")
    g.add_argument("--dt", type=float)
    g.add_argument("--tau", type=float)
    g.add_argument("--samples", type=int, help="Mackey-Glass samples")
    g.add_argument("--grid", type=int, help="KS grid points")
    g.add_argument("--domain-multiple", type=float, help="KS domain length in units of pi")
    g.add_argument("--swap-val-test", action="store_true", help="place test before validation in time")
    g = p.add_argument_group("model")
    g.add_argument("--k", type=_ints)
    g.add_argument("--m", type=_ints)
    g.add_argument("--lambda", dest="lambda_reg", type=_floats)
    g.add_argument("--sigma", type=_floats)
    g.add_argument("--scaling", choices=("minmax", "standard", "none"))
    g.add_argument("--observed", type=_ints)
    g.add_argument("--target", type=_ints)
    g.add_argument("--normalization", choices=("std", "range"))
    g = p.add_argument_group("forecast")
    g.add_argument("--horizon", type=int)
    g.add_argument("--rollout-segment", choices=("val", "test"))
    g.add_argument("--theta", type=float)
    g.add_argument("--steps-per-lyapunov", type=float)
    g = p.add_argument_group("noise")
    g.add_argument("--snr-db", type=float)
    g.add_argument("--clean-targets", action="store_true")
    g.add_argument("--noisy-test-inputs", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rffrc", description="Random Fourier feature forecasting of chaotic series")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, helptext in [("generate", "integrate a system and write its trajectory"),
                           ("train", "fit a model and score one-step predictions"),
                           ("forecast", "closed-loop rollout from a trained or freshly fit model"),
                           ("sweep", "vary one hyperparameter over several seeds"),
                           ("gridsearch", "select hyperparameters on validation NRMSE"),
                           ("denoise-eval", "train on noisy data, score against the clean series")]:
        p = sub.add_parser(name, help=helptext)
        _common(p)
        if name == "forecast":
            p.add_argument("--model", help="model file written by `train`")
            p.add_argument("--teacher-forced", action="store_true")
        if name == "sweep":
            p.add_argument("--axis", choices=("m", "k", "sigma_rff", "lambda_reg"))
            p.add_argument("--values", type=_floats)
    p = sub.add_parser("reproduce", help="run a pinned experiment recipe")
    p.add_argument("name")
    p.add_argument("--seeds", type=_ints)
    p.add_argument("--out")
    p.add_argument("--seed", type=int, help="single seed (overrides --seeds)")
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--config", help="accepted for uniformity; recipes use their bundled config")
    p.add_argument("--full-scale", action="store_true", help="KS with m=12000")
    p.add_argument("--clean-targets", action="store_true")
    p.add_argument("--noisy-test-inputs", action="store_true")
    return parser


# ---------------------------------------------------------------- config resolution

def _set(raw: dict, dotted: str, value):
    node = raw
    *head, last = dotted.split(".")
    for key in head:
        if node.get(key) is None:
            node[key] = {}
        node = node[key]
    node[last] = value


def _get(raw: dict, dotted: str, default=None):
    node = raw
    for key in dotted.split("."):
        if not isinstance(node, dict) or key not in node or node[key] is None:
            return default
        node = node[key]
    return node


def _scalar(values, flag):
    if len(values) != 1:
        raise ConfigError(f"{flag} takes a single value for this command")
    return values[0]


def resolve(args) -> tuple[C.ExperimentConfig, list[str]]:
    raw = C.load_config(args.config) if getattr(args, "config", None) else {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    a = vars(args)
    if a.get("data"):
        raw["system"], raw["data_path"] = "external_csv", a["data"]
    if a.get("system"):
        raw["system"] = a["system"]
    system = raw.get("system", "lorenz63")
    if a.get("steps") is not None:
        key = {"lorenz63": "lorenz63.n_steps", "ks": "ks.n_steps", "mackey_glass": "mackey_glass.n_samples"}
        if system not in key:
            raise ConfigError("--steps applies to generated systems only")
        _set(raw, key[system], a["steps"])
    if a.get("dt") is not None:
        if system not in ("lorenz63", "ks"):
            raise ConfigError("--dt applies to lorenz63 and ks")
        _set(raw, f"{system}.dt", a["dt"])
    for flag, path in [("tau", "mackey_glass.tau"), ("samples", "mackey_glass.n_samples"),
                       ("grid", "ks.grid_points")]:
        if a.get(flag) is not None:
            _set(raw, path, a[flag])
    if a.get("domain_multiple") is not None:
        _set(raw, "ks.domain_length", a["domain_multiple"] * math.pi)
    if a.get("swap_val_test"):
        _set(raw, "split.test_before_val", True)

    grid_cmd = args.command == "gridsearch"
    for flag, key in [("k", "k"), ("m", "m"), ("lambda_reg", "lambda_reg"), ("sigma", "sigma_rff")]:
        if a.get(flag) is None:
            continue
        if grid_cmd:
            _set(raw, f"grid.{key}", a[flag])
        else:
            _set(raw, f"model.{key}", _scalar(a[flag], f"--{flag.replace('_reg', '')}"))
    if a.get("scaling"):
        _set(raw, "model.scaling", a["scaling"])
    if grid_cmd and raw.get("grid") is None:
        raise ConfigError("gridsearch needs a grid (config 'grid' or --k/--m/--lambda/--sigma lists)")
    if grid_cmd:
        # unspecified axes fall back to the single model value
        model = {**C.to_dict(C.ModelConfig()), **(raw.get("model") or {})}
        for key in ("k", "m", "lambda_reg", "sigma_rff"):
            if _get(raw, f"grid.{key}") is None:
                _set(raw, f"grid.{key}", [model[key]])

    for flag in ("seed", "observed", "target", "horizon", "rollout_segment", "theta",
                 "steps_per_lyapunov", "normalization", "seeds", "out"):
        if a.get(flag) is not None:
            raw[flag] = a[flag]
    if a.get("seed") is not None and a.get("seeds") is None and "seeds" not in raw:
        raw["seeds"] = [a["seed"]]
    if args.command == "sweep":
        if a.get("axis"):
            _set(raw, "sweep.axis", a["axis"])
        if a.get("values"):
            _set(raw, "sweep.values", a["values"])
        if raw.get("sweep") is None:
            raw["sweep"] = {}
    if args.command == "denoise-eval" or a.get("snr_db") is not None:
        if raw.get("noise") is None:
            raw["noise"] = {}
        if a.get("snr_db") is not None:
            _set(raw, "noise.snr_db", a["snr_db"])
        if a.get("clean_targets"):
            _set(raw, "noise.clean_targets", True)
        if a.get("noisy_test_inputs"):
            _set(raw, "noise.noisy_test_inputs", True)
        if a.get("seed") is not None and _get(raw, "noise.seed") is None:
            _set(raw, "noise.seed", a["seed"])
    return C.from_dict(raw)


def _out_dir(cfg: C.ExperimentConfig) -> Path:
    out = Path(cfg.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ModelFormatError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _metrics(out, cfg, body, t0):
    payload = {"config": C.to_dict(cfg), **body, "wall_clock_s": time.perf_counter() - t0}
    write_json(out / "metrics.json", payload)


def _named(names, values):
    return {n: float(v) for n, v in zip(names, values)}


# ---------------------------------------------------------------- commands

def cmd_generate(cfg, defaulted, args):
    t0 = time.perf_counter()
    if cfg.system == "external_csv":
        raise ConfigError("generate needs a simulated system, not external_csv")
    out = _out_dir(cfg)
    series = C.load_series(cfg)
    write_csv(series, out / "trajectory.csv")
    if cfg.system == "ks":
        write_matrix(out / "snapshots.csv", series.data)
    write_json(out / "trajectory.json", {"system": cfg.system, "seed": cfg.seed,
                                         "n_steps": series.n_steps, "n_channels": series.n_channels,
                                         "parameters": C.annotated(cfg, defaulted)})
    _metrics(out, cfg, {"n_steps": series.n_steps, "n_channels": series.n_channels,
                        "max_abs": float(np.max(np.abs(series.data)))}, t0)
    return f"wrote {series.n_steps}x{series.n_channels} trajectory to {out / 'trajectory.csv'}"


def _fit(cfg, series):
    hp = cfg.model.hyper
    return fit_and_score(series, cfg.split, hp, cfg.seed, cfg.observed, cfg.target, cfg.model.scaling,
                         cfg.normalization, rowwise=True)


def _rollout_segment(cfg, model, series, horizon=None):
    b = segment_bounds(series.n_steps, cfg.split)
    start, stop = b[cfg.rollout_segment]
    if horizon is None:
        horizon = cfg.horizon if cfg.horizon is not None else stop - start
    if start < model.k:
        raise ConfigError(f"rollout segment starts at {start}, before k={model.k} samples of context")
    truth_all = series.data[start:, list(model.target_channels)]
    truth = truth_all[:horizon] if horizon <= truth_all.shape[0] else None
    window = series.data[start - model.k:start, list(model.observed_channels)]
    return start, horizon, window, truth


def _valid(cfg, res):
    if res.valid_steps is None:
        return {"valid_steps": None, "valid_lyapunov_times": None}
    lt = res.valid_steps / cfg.steps_per_lyapunov if cfg.steps_per_lyapunov else None
    return {"valid_steps": res.valid_steps, "valid_lyapunov_times": lt}


def cmd_train(cfg, defaulted, args):
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    series = C.load_series(cfg)
    model, scores, preds = _fit(cfg, series)
    save_model(model, out / "model.rffrc")
    names = model.target_names
    b = segment_bounds(series.n_steps, cfg.split)
    for seg in ("val", "test"):
        pred, truth = preds[seg]
        write_frame(out / f"onestep_{seg}_pred.csv", pred, names, series.dt, b[seg][0])
        write_frame(out / f"onestep_{seg}_truth.csv", truth, names, series.dt, b[seg][0])
    body = {"nrmse": {seg: _named(names, scores[seg]) for seg in ("train", "val", "test")},
            "mean_nrmse": {seg: float(np.mean(scores[seg])) for seg in ("train", "val", "test")},
            "lambda_used": model.ridge.lambda_used}
    if model.closed_loop_ok:
        start, horizon, window, truth = _rollout_segment(cfg, model, series)
        res = rollout(model, window, horizon, truth, cfg.theta)
        body["rollout"] = {"segment": cfg.rollout_segment, "horizon": horizon, **_valid(cfg, res)}
    else:
        body["rollout"] = None
    _metrics(out, cfg, body, t0)
    return f"test NRMSE {body['mean_nrmse']['test']:.3e} (model: {out / 'model.rffrc'})"


def cmd_forecast(cfg, defaulted, args):
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    series = C.load_series(cfg)
    if args.model:
        model = load_model(args.model)
    else:
        model = _fit(cfg, series)[0]
    start, horizon, window, truth = _rollout_segment(cfg, model, series)
    if args.teacher_forced and truth is None:
        raise ConfigError("teacher forcing needs ground truth for the whole horizon")
    res = rollout(model, window, horizon, truth, cfg.theta, args.teacher_forced)
    names = model.target_names
    write_frame(out / "forecast.csv", res.predictions, names, series.dt, start)
    body = {"segment": cfg.rollout_segment, "horizon": horizon, "start": start, "teacher_forced": args.teacher_forced}
    if truth is not None:
        write_frame(out / "truth.csv", truth, names, series.dt, start)
        rows = [(start + i, *res.per_step_error[i], res.normalized_error[i]) for i in range(horizon)]
        write_table(out / "error.csv", ["t_index", *[f"abs_err_{n}" for n in names], "normalized_error"], rows)
        body.update(_valid(cfg, res))
        if horizon > 1:
            body["nrmse"] = _named(names, nrmse(truth, res.predictions, cfg.normalization).per_channel_nrmse)
    if series.n_channels > 8:
        write_matrix(out / "forecast_snapshots.csv", res.predictions)
    _metrics(out, cfg, body, t0)
    return f"forecast {horizon} steps -> {out / 'forecast.csv'}"


def cmd_sweep(cfg, defaulted, args):
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    series = C.load_series(cfg)
    sw = cfg.sweep
    curve = sweep_single_hyperparameter(series, cfg.split, cfg.model.hyper, sw.axis, sw.values, cfg.seeds,
                                        cfg.observed, cfg.target, cfg.model.scaling, cfg.normalization)
    write_table(out / f"sweep_{sw.axis}.csv", ["axis_value", "median_nrmse", "q25", "q75"],
                [(p.value, p.median_nrmse, p.q25, p.q75) for p in curve])
    best = min(curve, key=lambda p: p.median_nrmse)
    _metrics(out, cfg, {"axis": sw.axis, "argmin": best.value,
                        "curve": [{"value": p.value, "median_nrmse": p.median_nrmse, "q25": p.q25,
                                   "q75": p.q75, "per_seed": p.per_seed} for p in curve]}, t0)
    return f"{sw.axis} sweep argmin {best.value} (median NRMSE {best.median_nrmse:.3e})"


def cmd_gridsearch(cfg, defaulted, args):
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    series = C.load_series(cfg)
    best, rows = grid_search(series, cfg.split, cfg.grid.spec(cfg.seed), cfg.observed, cfg.target,
                             cfg.model.scaling, cfg.normalization)
    write_table(out / "results.csv", GridRow.CSV_FIELDS, [r.csv_row() for r in rows])
    _metrics(out, cfg, {"best": {"k": best.k, "m": best.m, "lambda_reg": best.lambda_reg,
                                 "sigma_rff": best.sigma_rff, "seed": best.seed},
                        "best_nrmse": {"train": best.train_nrmse, "val": best.val_nrmse, "test": best.test_nrmse},
                        "candidates": len(rows), "failed": sum(not r.eligible for r in rows)}, t0)
    return (f"best k={best.k} m={best.m} lambda={best.lambda_reg:g} sigma={best.sigma_rff:g} "
            f"(val NRMSE {best.val_nrmse:.3e})")


def cmd_denoise_eval(cfg, defaulted, args):
    t0 = time.perf_counter()
    out = _out_dir(cfg)
    clean = C.load_series(cfg)
    nz = cfg.noise
    noisy = C.noisy_copy(clean, cfg)
    b = segment_bounds(clean.n_steps, cfg.split)
    hp = cfg.model.hyper
    model, scores, preds = fit_and_score(
        noisy, cfg.split, hp, cfg.seed, cfg.observed, cfg.target, cfg.model.scaling, cfg.normalization,
        truth_series=clean, target_series=clean if nz.clean_targets else None,
        eval_series=noisy if nz.noisy_test_inputs else clean, rowwise=True)
    ts, te = b["test"]
    tgt = list(model.target_channels)
    pred, truth = preds["test"]
    in_snr = measure_snr(truth, noisy.data[ts:te, tgt])
    out_snr = measure_snr(truth, pred)
    names = model.target_names
    write_frame(out / "denoised_pred.csv", pred, names, clean.dt, ts)
    write_frame(out / "clean_test.csv", truth, names, clean.dt, ts)
    write_frame(out / "noisy_test.csv", noisy.data[ts:te, tgt], names, clean.dt, ts)
    body = {"nrmse": {seg: _named(names, scores[seg]) for seg in ("val", "test")},
            "input_snr_db": _named(names, in_snr[0]), "output_snr_db": _named(names, out_snr[0]),
            "snr_gain_db": out_snr[1] - in_snr[1],
            "test_inputs": "noisy" if nz.noisy_test_inputs else "clean",
            "targets": "clean" if nz.clean_targets else "noisy"}
    _metrics(out, cfg, body, t0)
    return f"SNR gain {body['snr_gain_db']:.2f} dB, test NRMSE {np.mean(scores['test']):.3e}"


def cmd_reproduce(args):
    if args.name not in RECIPES:
        raise ConfigError(f"unknown recipe {args.name!r}; valid names: {', '.join(RECIPES)}")
    seeds = [args.seed] if args.seed is not None else (args.seeds or [1, 2, 3, 4, 5])
    out = Path(args.out or f"out/{args.name}")
    opts = {}
    if args.full_scale:
        opts["full_scale"] = True
    if args.clean_targets:
        opts["clean_targets"] = True
    if args.noisy_test_inputs:
        opts["noisy_test_inputs"] = True
    res = run_recipe(args.name, out, seeds, **opts)
    print(res.summary())
    return None


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "forecast": cmd_forecast, "sweep": cmd_sweep,
            "gridsearch": cmd_gridsearch, "denoise-eval": cmd_denoise_eval}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"rffrc: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="rffrc: %(levelname)s: %(message)s")
    try:
        if args.command == "reproduce":
            cmd_reproduce(args)
            return 0
        cfg, defaulted = resolve(args)
        msg = COMMANDS[args.command](cfg, defaulted, args)
    except RFFRCError as exc:
        print(f"rffrc: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"rffrc: I/O error: {exc}", file=sys.stderr)
        return 4
    except MemoryError:
        print("rffrc: error: out of memory", file=sys.stderr)
        return 3
    except FloatingPointError as exc:
        print(f"rffrc: numerical error: {exc}", file=sys.stderr)
        return 3
    if msg and not args.quiet:
        print(msg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
