"""Command-line entry point: ``engine-testbench <command> [flags]``.

Every command writes its artifact to ``--out`` and a run manifest next to
it (``<out>.manifest.json``) holding the resolved config, its hash, the
seed, timestamps, wall-clock timings and the output list. Artifacts carry
no timing or timestamps, so identical invocations give identical bytes.

Exit codes: 0 ok, 2 usage or config error, 3 numerical fault (including
hard-limit crashes), 4 training failure.
"""

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, NumericalFault, TrainingError, TestbenchError, CrashError
from .nn import load_model, save_model, write_json_atomic, forward

log = logging.getLogger("engine_testbench")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_TRAINING = 0, 2, 3, 4
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


# -- helpers -------------------------------------------------------------------

def config_hash(config):
    text = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def write_manifest(out, command, config, seed, started, outputs, timing=None):
    doc = {
        "command": command,
        "config": config,
        "config_hash": config_hash(config),
        "seed": seed,
        "version": __version__,
        "started": started,
        "finished": _now(),
        "outputs": [str(p) for p in outputs],
        "timing": timing or {},
    }
    path = Path(str(out) + ".manifest.json")
    write_json_atomic(path, doc)
    return path


def write_text_atomic(path, text):
    path = Path(path)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def read_json(path, what):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {what} {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} {path} is not valid JSON: {exc}") from exc


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else str(float(x))
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _floats(text, n=None, what="values"):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise ConfigError(f"{what} must be comma-separated numbers, got {text!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"{what} needs {n} numbers, got {len(vals)}")
    return vals


# -- control ---------------------------------------------------------------------

def _scenario(args):
    from .control import scenario
    return scenario(args.scenario)


def _engine_cfg(args, sc):
    from .sim import EngineConfig
    if args.config is None:
        return sc.config()
    cfg = EngineConfig.from_json(Path(args.config))
    cfg.validate()
    return cfg


def _load_policy(path, obs_dim):
    if path is None:
        raise ConfigError("--policy is required for the policy controller")
    actor, meta = load_model(path)
    if actor.layer_sizes[0] != obs_dim:
        raise ConfigError(f"policy expects {actor.layer_sizes[0]} inputs, environment provides {obs_dim}")
    return actor, meta


def _controller(args, sc):
    from .control import make_controller, Schedule
    from .control.env import N_FEATURES
    actor = None
    schedule = None
    if args.controller == "policy":
        actor, _ = _load_policy(args.policy, N_FEATURES)
    if getattr(args, "schedule", None):
        schedule = Schedule.from_dict(read_json(args.schedule, "schedule"))
    return make_controller(args.controller, sc, actor=actor, schedule=schedule)


def cmd_sim(args):
    from .control import evaluate
    from .sim import format_trajectory
    started = _now()
    sc = _scenario(args)
    cfg = _engine_cfg(args, sc)
    ctl = _controller(args, sc)
    rows, metrics = evaluate(ctl, sc, args.seed, cfg=cfg)
    write_text_atomic(args.out, format_trajectory(rows))
    config = {"scenario": sc.to_dict(), "engine": cfg.to_dict(), "controller": args.controller,
              "policy": args.policy, "schedule": args.schedule}
    write_manifest(args.out, "sim", _jsonable(config), args.seed, started, [args.out],
                   {"mean_inference_s": metrics["mean_inference_s"]})
    if metrics["crashed"]:
        last = rows[-1]
        print(f"crash: {metrics['crash_reason']} hard limit exceeded at t={last[0]:.3f} s "
              f"(p_cc={last[1] / 1e5:.2f} bar)", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def cmd_eval(args):
    from .control import evaluate, deterministic_part
    from .sim import format_trajectory
    started = _now()
    sc = _scenario(args)
    cfg = _engine_cfg(args, sc)
    ctl = _controller(args, sc)
    runs, timing = [], []
    for k in range(args.runs):
        rows, m = evaluate(ctl, sc, args.seed + k, cfg=cfg)
        timing.append(m["mean_inference_s"])
        runs.append(deterministic_part(m))
        if k == 0 and args.trajectory:
            write_text_atomic(args.trajectory, format_trajectory(rows))
    summary = {
        "runs": len(runs),
        "crashes": sum(r["crashed"] for r in runs),
        "in_band_at_end": sum(r["in_band_at_end"] for r in runs),
    }
    doc = _jsonable({"scenario": sc.name, "controller": args.controller, "summary": summary, "runs": runs})
    write_json_atomic(args.out, doc)
    outputs = [args.out] + ([args.trajectory] if args.trajectory else [])
    config = {"scenario": sc.to_dict(), "engine": cfg.to_dict(), "controller": args.controller,
              "policy": args.policy, "runs": args.runs}
    write_manifest(args.out, "eval", _jsonable(config), args.seed, started, outputs,
                   {"mean_inference_s": float(np.mean(timing))})
    return EXIT_OK


def cmd_train_rl(args):
    from .control import RlHyper, EngineEnv, train_policy
    started = _now()
    sc = _scenario(args)
    overrides = read_json(args.config, "training config") if args.config else {}
    overrides["seed"] = args.seed
    try:
        hyper = RlHyper(**overrides)
    except TypeError as exc:
        raise ConfigError(f"bad training config: {exc}") from exc
    t0 = time.perf_counter()

    def progress(ep, ret, step):
        log.info("episode %d return %.3f steps %d", ep, ret, step)

    actor, _, tlog = train_policy(lambda: EngineEnv(sc), hyper, workers=args.workers, progress=progress)
    elapsed = time.perf_counter() - t0
    meta = {
        "kind": "policy", "scenario": sc.name, "hyper": hyper.to_dict(),
        "best_eval_return": tlog["best_eval_return"], "steps": tlog["steps"],
        "eval_returns": [[int(s), float(v)] for s, v in tlog["eval_returns"]],
    }
    save_model(actor, args.out, _jsonable(meta))
    config = {"scenario": sc.to_dict(), "hyper": hyper.to_dict(), "workers": args.workers}
    write_manifest(args.out, "train-rl", _jsonable(config), args.seed, started, [args.out],
                   {"train_s": elapsed})
    return EXIT_OK


# -- surrogate ---------------------------------------------------------------------

def cmd_train_surrogate(args):
    from .nn import TrainHyper
    from .surrogate import gen_dataset, fit_surrogate, format_dataset, read_dataset, default_hyper
    from .surrogate.fit import DEFAULT_HIDDEN
    started = _now()
    settings = read_json(args.config, "surrogate config") if args.config else {}
    hidden = tuple(settings.pop("hidden", DEFAULT_HIDDEN))
    n = int(settings.pop("n", args.n))
    if args.dataset:
        ds = read_dataset(args.dataset)
    else:
        ds = gen_dataset(args.oracle, n, args.seed)
    base = default_hyper(args.seed).__dict__
    try:
        hyper = TrainHyper(**{**base, **settings, "seed": args.seed})
    except TypeError as exc:
        raise ConfigError(f"bad surrogate config: {exc}") from exc
    params, report = fit_surrogate(ds, hidden, hyper)
    timing = {k: report.pop(k) for k in ("latency_s", "epoch_seconds")}
    meta = {"kind": "surrogate", "oracle": ds.preset, "names": list(ds.names), "n": len(ds),
            "x_min": ds.x_min.tolist(), "x_max": ds.x_max.tolist(), "report": report}
    save_model(params, args.out, _jsonable(meta))
    outputs = [args.out]
    if args.dataset_out:
        write_text_atomic(args.dataset_out, format_dataset(ds))
        outputs.append(args.dataset_out)
    config = {"oracle": ds.preset, "n": len(ds), "dataset": args.dataset, "hidden": list(hidden),
              "hyper": hyper.__dict__}
    write_manifest(args.out, "train-surrogate", _jsonable(config), args.seed, started, outputs, timing)
    return EXIT_OK


def cmd_predict(args):
    from .surrogate import predict_guarded
    started = _now()
    params, meta = load_model(args.model)
    if meta.get("kind") != "surrogate":
        raise ConfigError(f"{args.model} is not a surrogate model")
    names = meta["names"]
    if args.x is not None:
        X = np.array([_floats(args.x, len(names), "--x")])
    elif args.input is not None:
        try:
            X = np.loadtxt(args.input, delimiter=",", skiprows=1, ndmin=2)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read inputs {args.input}: {exc}") from exc
    else:
        raise ConfigError("give --x or --input")
    lines = [",".join(names + ["prediction"] + [f"out_of_range_{n}" for n in names] + ["extrapolating"])]
    for x in X:
        g = predict_guarded(params, meta["x_min"], meta["x_max"], x)
        lines.append(",".join([repr(float(v)) for v in x] + [repr(g.value)]
                              + [str(int(f)) for f in g.flags] + [str(int(g.extrapolating))]))
    write_text_atomic(args.out, "\n".join(lines) + "\n")
    config = {"model": str(args.model), "input": args.input, "x": args.x}
    write_manifest(args.out, "predict", config, args.seed, started, [args.out])
    return EXIT_OK


# -- monitor -----------------------------------------------------------------------

def _signal_cfg(args):
    from .monitor import SignalConfig
    data = read_json(args.config, "signal config") if args.config else {}
    try:
        return SignalConfig(**data)
    except TypeError as exc:
        raise ConfigError(f"bad signal config: {exc}") from exc


def cmd_monitor_gen(args):
    import dataclasses
    from .monitor import gen_signal, format_signal, simulate_runs, labeled_runs, format_labeled
    started = _now()
    base = _signal_cfg(args)
    if args.kind == "signal":
        cfg = dataclasses.replace(base, seed=args.seed)
        if args.no_onset:
            cfg = dataclasses.replace(cfg, mu_end=0.25 * cfg.mu_start)
        t, x, _ = gen_signal(cfg)
        write_text_atomic(args.out, format_signal(t, x))
        config = {"kind": "signal", "signal": cfg.to_dict(), "onset": cfg.onset_time()}
    else:
        cfgs = simulate_runs(args.runs, args.seed, base, args.jitter, args.no_onset)
        write_text_atomic(args.out, format_labeled(labeled_runs(cfgs)))
        config = {"kind": "features", "signal": base.to_dict(), "runs": args.runs,
                  "jitter": args.jitter, "no_onset": args.no_onset}
    write_manifest(args.out, "monitor-gen", _jsonable(config), args.seed, started, [args.out])
    return EXIT_OK


def cmd_monitor_train(args):
    from .monitor import read_labeled, stack, svm_train
    started = _now()
    settings = {"lam": 0.1, "epochs": 500}
    if args.config:
        settings.update(read_json(args.config, "svm config"))
    X, y = stack(read_labeled(args.data))
    if X.shape[0] == 0:
        raise TrainingError(f"{args.data} contains no windows")
    model = svm_train(X, y, lam=float(settings["lam"]), epochs=int(settings["epochs"]), seed=args.seed)
    doc = {"kind": "svm", **model.to_dict(), "objective": model.objective_history[-1] if model.objective_history else None}
    write_json_atomic(args.out, _jsonable(doc))
    write_manifest(args.out, "monitor-train", _jsonable({"data": str(args.data), **settings}),
                   args.seed, started, [args.out])
    return EXIT_OK


def cmd_detect(args):
    from .monitor import (SvmModel, read_labeled, read_signal, label_windows, evaluate_detector,
                          run_alarms, svm_score)
    started = _now()
    doc = read_json(args.model, "detector model")
    if doc.get("kind") != "svm":
        raise ConfigError(f"{args.model} is not a detector model")
    model = SvmModel.from_dict(doc)
    if args.signal:
        t, x = read_signal(args.signal)
        if t.size < 2:
            raise ConfigError(f"{args.signal} holds fewer than two samples")
        rate = 1.0 / float(t[1] - t[0])
        onset = math.inf if args.onset is None else args.onset
        runs = [label_windows(x, onset, rate)]
    elif args.data:
        runs = read_labeled(args.data)
    else:
        raise ConfigError("give --signal or --data")
    alarms = []
    for k, run in enumerate(runs):
        pred = run_alarms(model, run)
        scores = svm_score(model, run.X) if run.X.shape[0] else np.zeros(0)
        alarms += [{"run": k, "t_end": float(te), "score": float(s)}
                   for te, s, p in zip(run.t_end, scores, pred) if p == 1]
    result = {"n_alarms": len(alarms), "alarms": alarms, "windows": int(sum(len(r.y) for r in runs))}
    result["metrics"] = evaluate_detector(model, runs)
    write_json_atomic(args.out, _jsonable(result))
    config = {"model": str(args.model), "signal": args.signal, "data": args.data, "onset": args.onset}
    write_manifest(args.out, "detect", _jsonable(config), args.seed, started, [args.out])
    return EXIT_OK


# -- steady state ---------------------------------------------------------------------

def cmd_steady_state(args):
    from .sim import EngineConfig, preset, steady_state, balance_residuals, STATE_NAMES
    started = _now()
    if args.config:
        cfg = EngineConfig.from_json(Path(args.config))
        cfg.validate()
    else:
        cfg = preset(args.preset)
    valves = _floats(args.valves, None, "--valves")
    st = steady_state(cfg, valves)
    vec = st.vector()
    res = balance_residuals(st, cfg)
    doc = {"state": dict(zip(STATE_NAMES, vec.tolist())), "residuals": res, "valves": valves}
    write_json_atomic(args.out, _jsonable(doc))
    write_manifest(args.out, "steady-state", _jsonable({"engine": cfg.to_dict(), "valves": valves}),
                   args.seed, started, [args.out])
    return EXIT_OK


# -- parser ----------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="engine-testbench", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", required=True, help="artifact path; the manifest goes to <out>.manifest.json")
        sp.set_defaults(func=func)
        return sp

    def controller_flags(sp):
        sp.add_argument("--scenario", default="startup", help="preset name or scenario JSON path")
        sp.add_argument("--config", help="engine config JSON overriding the scenario preset")
        sp.add_argument("--controller", choices=("policy", "pid", "open_loop"), default="open_loop")
        sp.add_argument("--policy", help="trained policy JSON (policy controller)")
        sp.add_argument("--schedule", help="open-loop schedule JSON {knots, values}")

    sp = add("sim", cmd_sim, "run one episode and write the trajectory CSV")
    controller_flags(sp)

    sp = add("eval", cmd_eval, "evaluate a controller and write metrics JSON")
    controller_flags(sp)
    sp.add_argument("--runs", type=int, default=1, help="episodes with seeds seed, seed+1, ...")
    sp.add_argument("--trajectory", help="also write the first episode's trajectory CSV")

    sp = add("train-rl", cmd_train_rl, "train a valve policy")
    sp.add_argument("--scenario", default="startup_degraded")
    sp.add_argument("--config", help="JSON with training hyperparameter overrides")
    sp.add_argument("--workers", type=int, default=1)

    sp = add("train-surrogate", cmd_train_surrogate, "fit a surrogate to an oracle dataset")
    sp.add_argument("--oracle", choices=("wall_temp", "fatigue_life"), default="wall_temp")
    sp.add_argument("--n", type=int, default=20_000)
    sp.add_argument("--dataset", help="existing dataset CSV instead of sampling the oracle")
    sp.add_argument("--dataset-out", help="write the sampled dataset CSV here")
    sp.add_argument("--config", help="JSON with hidden sizes, n and training overrides")

    sp = add("predict", cmd_predict, "surrogate predictions with extrapolation flags")
    sp.add_argument("--model", required=True)
    sp.add_argument("--x", help="one comma-separated input vector")
    sp.add_argument("--input", help="CSV of input rows with a header line")

    sp = add("monitor-gen", cmd_monitor_gen, "synthetic instability signals or labeled RQA windows")
    sp.add_argument("--kind", choices=("features", "signal"), default="features")
    sp.add_argument("--runs", type=int, default=50)
    sp.add_argument("--jitter", type=float, default=0.5, help="onset shift range in s")
    sp.add_argument("--no-onset", action="store_true", help="keep the oscillator below the bifurcation")
    sp.add_argument("--config", help="signal config JSON")

    sp = add("monitor-train", cmd_monitor_train, "train the linear SVM detector")
    sp.add_argument("--data", required=True, help="labeled windows CSV from monitor-gen")
    sp.add_argument("--config", help="JSON with lam and epochs")

    sp = add("detect", cmd_detect, "run the detector on a signal or labeled windows")
    sp.add_argument("--model", required=True)
    sp.add_argument("--signal", help="t,x CSV")
    sp.add_argument("--onset", type=float, help="known onset time of --signal, s")
    sp.add_argument("--data", help="labeled windows CSV")

    sp = add("steady-state", cmd_steady_state, "powered fixed point for given valve positions")
    sp.add_argument("--preset", default="gas_generator")
    sp.add_argument("--config", help="engine config JSON instead of --preset")
    sp.add_argument("--valves", required=True, help="three controlled (or five) positions")
    return p


def _setup_logging():
    level = os.environ.get("ENGINE_TESTBENCH_LOG", "error").lower()
    if level not in LOG_LEVELS:
        raise ConfigError(f"ENGINE_TESTBENCH_LOG must be one of {sorted(LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _setup_logging()
        if getattr(args, "workers", 1) < 1:
            raise ConfigError("--workers must be >= 1")
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CrashError as exc:
        print(f"crash: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NumericalFault as exc:
        print(f"numerical fault: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except TrainingError as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except TestbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
