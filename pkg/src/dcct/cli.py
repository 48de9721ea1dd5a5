"""Command-line front end: ``dcct {run,ablate,sweep,eval-checkpoint,gen-data}``.

Exit codes: 0 when every requested run finished, 2 for configuration or usage
errors (reported before any computation), 1 for failures during a run.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as config_mod
from .config import RunConfig
from .datagen import dump_csv, generate
from .encoder import load_checkpoint, save_checkpoint
from .errors import ConfigError
from .io import atomic_write_text, write_csv
from .trainer import METRIC_COLUMNS, Data, RunResult, evaluate_mean, run

log = logging.getLogger("dcct")

SWEEP_PARAMS = ("base", "delta", "gamma")
ABLATION_CELLS = (
    ("full", True, True),
    ("no_csm", True, False),
    ("no_dcdp", False, True),
    ("no_dcdp_no_csm", False, False),
)


class UsageError(Exception):
    pass


def _load_config(args) -> RunConfig:
    if args.config is None:
        if args.set:
            cfg = config_mod.from_dict(_overrides_to_dict(args.set))
        else:
            cfg = RunConfig().validate()
    else:
        try:
            cfg = config_mod.load(args.config, args.set)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from None
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed).validate()
    return cfg


def _overrides_to_dict(items: list[str]) -> dict:
    raw: dict = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(item, "override must look like KEY=VALUE")
        if key.startswith("data."):
            raw.setdefault("data", {})[key[5:]] = value
        else:
            raw[key] = value
    return raw


def _summary(cfg: RunConfig, result: RunResult) -> dict:
    return {
        "final": {k: float(v) for k, v in result.final.items()},
        "chosen_mean_net": result.best_net,
        "dbi_choice": result.dbi_choice,
        "wall_time_s": result.wall_time,
        "epochs_completed": len(result.rows),
        "seed": cfg.seed,
        "use_dcdp": cfg.use_dcdp,
        "use_csm": cfg.use_csm,
        "clusterer": cfg.clusterer,
        "config": cfg.to_dict(),
    }


def cmd_run(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "config.toml", config_mod.to_toml(cfg))
    rows: list[dict] = []

    def on_epoch(row: dict) -> None:
        rows.append(row)
        write_csv(out / "metrics.csv", METRIC_COLUMNS, rows)

    result = run(cfg, on_epoch=on_epoch)
    ckpt = out / "checkpoints"
    for t, params in enumerate(result.mean_params, start=1):
        save_checkpoint(params, ckpt / f"mean_net{t}")
    save_checkpoint(result.best_params, ckpt / "best")
    atomic_write_text(out / "summary.json", json.dumps(_summary(cfg, result), indent=2, sort_keys=True) + "\n")
    f = result.final
    print(f"mAP {f['mAP']:.4f}  top1 {f['top1']:.4f}  (mean net {result.best_net}, {result.wall_time:.1f}s)")
    return 0


def _seeds(cfg: RunConfig, args) -> list[int]:
    return [args.seed] if args.seed is not None else list(cfg.seeds)


def cmd_ablate(args) -> int:
    cfg = _load_config(args)
    seeds = _seeds(cfg, args)
    out = Path(args.out)
    data = Data.from_config(cfg)  # one dataset shared by every cell and seed
    per_run, summary = [], []
    for name, dcdp, csm in ABLATION_CELLS:
        maps, top1s = [], []
        for s in seeds:
            res = run(replace(cfg, seed=s, use_dcdp=dcdp, use_csm=csm), data=data)
            sims = [r["mean_net_similarity"] for r in res.rows]
            per_run.append({
                "cell": name, "use_dcdp": dcdp, "use_csm": csm, "seed": s,
                "mAP": float(res.final["mAP"]), "top1": float(res.final["top1"]),
                "mean_net_similarity": float(np.mean(sims[1:] if len(sims) > 1 else sims)),
            })
            maps.append(res.final["mAP"])
            top1s.append(res.final["top1"])
            log.info("%s seed %d: mAP %.4f", name, s, res.final["mAP"])
            write_csv(out / "ablation_runs.csv", list(per_run[0]), per_run)
        ddof = 1 if len(seeds) > 1 else 0
        summary.append({
            "cell": name, "use_dcdp": dcdp, "use_csm": csm, "n_seeds": len(seeds),
            "mAP_mean": float(np.mean(maps)), "mAP_std": float(np.std(maps, ddof=ddof)),
            "top1_mean": float(np.mean(top1s)), "top1_std": float(np.std(top1s, ddof=ddof)),
        })
        print(f"{name:>15}: mAP {summary[-1]['mAP_mean']:.4f} ± {summary[-1]['mAP_std']:.4f}")
    write_csv(out / "ablation.csv", list(summary[0]), summary)
    return 0


def _parse_values(raw: list[str]) -> list[float]:
    values = []
    for chunk in raw:
        for piece in chunk.split(","):
            if piece.strip():
                try:
                    values.append(float(piece))
                except ValueError:
                    raise ConfigError("values", f"not a number: {piece!r}") from None
    return values


def cmd_sweep(args) -> int:
    if args.param not in SWEEP_PARAMS:
        raise ConfigError("param", f"must be one of {SWEEP_PARAMS}, got {args.param!r}")
    values = _parse_values(args.values or [])
    if not values:
        raise ConfigError("values", "empty list")
    cfg = _load_config(args)
    # Validate every point before starting the first run.
    cfgs = [replace(cfg, **{args.param: v}).validate() for v in values]
    data = Data.from_config(cfg)
    rows = []
    for v, c in zip(values, cfgs):
        res = run(c, data=data)
        rows.append({
            "param": args.param, "value": v, "seed": c.seed,
            "mAP": float(res.final["mAP"]), "top1": float(res.final["top1"]),
            "top5": float(res.final["top5"]), "top10": float(res.final["top10"]),
        })
        print(f"{args.param}={v}: mAP {rows[-1]['mAP']:.4f}")
        write_csv(Path(args.out) / "sweep.csv", list(rows[0]), rows)
    return 0


def cmd_eval_checkpoint(args) -> int:
    cfg = _load_config(args)
    try:
        params = load_checkpoint(args.checkpoint)
    except (OSError, ValueError, KeyError) as exc:
        raise ConfigError("checkpoint", f"cannot load {args.checkpoint}: {exc}") from None
    data = Data.from_config(cfg)
    if params.dims[0] != data.x.shape[1]:
        raise ConfigError("checkpoint", f"input size {params.dims[0]} does not match data.d_in={data.x.shape[1]}")
    res, _ = evaluate_mean(params, data)
    report = {"mAP": res.mAP, "cmc": {str(k): v for k, v in res.cmc.items()}, "n_queries": res.n_valid, "n_excluded": res.n_excluded}
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        atomic_write_text(Path(args.out) / "eval.json", text + "\n")
    return 0


def cmd_gen_data(args) -> int:
    cfg = _load_config(args)
    samples, _ = generate(cfg.data)
    path = Path(args.out) / "dataset.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    dump_csv(samples, path)
    print(f"wrote {len(samples)} samples to {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML run configuration")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, help="override the run seed")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config field (repeatable)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="dcct", description="Dual clustering co-teaching experiments")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="train once").set_defaults(func=cmd_run, needs_config=True)
    sub.add_parser("ablate", parents=[common], help="2x2 ablation over seeds").set_defaults(func=cmd_ablate, needs_config=True)
    sw = sub.add_parser("sweep", parents=[common], help="one run per parameter value")
    sw.add_argument("--param", required=True, help=f"one of {', '.join(SWEEP_PARAMS)}")
    sw.add_argument("--values", nargs="*", help="values, space or comma separated")
    sw.set_defaults(func=cmd_sweep, needs_config=True)
    ev = sub.add_parser("eval-checkpoint", parents=[common], help="score a saved mean net")
    ev.add_argument("--checkpoint", required=True, type=Path)
    ev.set_defaults(func=cmd_eval_checkpoint, needs_config=False)
    sub.add_parser("gen-data", parents=[common], help="dump the synthetic dataset as CSV").set_defaults(func=cmd_gen_data, needs_config=False)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.needs_config and args.config is None:
            raise ConfigError("config", "--config is required for this command")
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # keep partial outputs, report, fail
        log.exception("run failed")
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
