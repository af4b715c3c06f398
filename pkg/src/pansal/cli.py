"""Command-line interface.

Subcommands:

* ``detect``        run detection, write one final map PNG per image
* ``stages``        detect with every intermediate stage dumped
* ``eval``          score predictions against ground-truth masks
* ``print-config``  show the effective configuration

Any config value can be set from the command line with its dotted name,
e.g. ``--ranking.alpha 0.95``; values given this way win over the config
file, which wins over the defaults. The SALPAN_THREADS environment
variable caps the number of worker processes.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

from .config import (
    PipelineConfig,
    apply_overrides,
    config_as_dict,
    default_config,
    load_config,
    to_ini,
)
from .metrics import evaluate
from .pipeline import atomic_write_bytes, batch_detect

log = logging.getLogger(__name__)

THREADS_ENV = "SALPAN_THREADS"

# Shorthand switches mapped onto their dotted config keys.
_ALIASES: tuple[tuple[str, str, str, str], ...] = (
    ("--dump-stages", "io.dump_stages", "true", "write every stage map next to the output"),
    ("--max-dim", "io.max_dim", "", "process images downscaled to this maximum dimension"),
    ("--seeds-from-fixation", "ranking.seeds_from_fixation", "true",
     "take foreground seeds from the pooled fixation map"),
    ("--pool-keep-background", "fixation.pool_keep_background", "true",
     "keep raw fixation values outside the proposal mask"),
    ("--mn-exclude-global", "fusion.mn_exclude_global", "true",
     "exclude the global maximum from the peak average"),
)


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="INI config file")
    group = parser.add_argument_group("config overrides")
    for section_field in fields(PipelineConfig):
        section = getattr(default_config(), section_field.name)
        for f in fields(section):
            dotted = f"{section_field.name}.{f.name}"
            group.add_argument(
                f"--{dotted}",
                dest=f"cfg_{dotted.replace('.', '__')}",
                metavar="V",
                help=f"override {dotted} (default {getattr(section, f.name)!r})",
            )
    for flag, dotted, const, help_text in _ALIASES:
        if const:
            group.add_argument(
                flag, dest=f"alias_{dotted.replace('.', '__')}",
                action="store_const", const=const, help=help_text,
            )
        else:
            group.add_argument(
                flag, dest=f"alias_{dotted.replace('.', '__')}",
                metavar="N", help=help_text,
            )


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    config = load_config(args.config) if args.config else default_config()
    overrides: dict[str, str] = {}
    for key, value in vars(args).items():
        if value is None:
            continue
        if key.startswith("cfg_"):
            overrides[key[4:].replace("__", ".")] = value
        elif key.startswith("alias_"):
            overrides[key[6:].replace("__", ".")] = value
    return apply_overrides(config, overrides)


def _worker_count(requested: int) -> int:
    cap = os.environ.get(THREADS_ENV)
    if cap is None:
        return max(1, requested)
    try:
        cap_value = int(cap)
    except ValueError:
        log.warning("ignoring non-integer %s=%r", THREADS_ENV, cap)
        return max(1, requested)
    if cap_value < 1:
        log.warning("ignoring %s=%d (must be at least 1)", THREADS_ENV, cap_value)
        return max(1, requested)
    return max(1, min(requested, cap_value))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pansal",
        description="Salient object detection for panoramic and conventional images.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_detect = sub.add_parser("detect", help="write final saliency maps")
    p_detect.add_argument("images", nargs="+", metavar="IMAGE")
    p_detect.add_argument("-o", "--out", required=True, metavar="DIR")
    p_detect.add_argument("--workers", type=int, default=1, metavar="N",
                          help=f"worker processes (capped by {THREADS_ENV})")
    _add_config_arguments(p_detect)

    p_stages = sub.add_parser("stages", help="detect and dump all stage maps")
    p_stages.add_argument("images", nargs="+", metavar="IMAGE")
    p_stages.add_argument("-o", "--out", required=True, metavar="DIR")
    p_stages.add_argument("--workers", type=int, default=1, metavar="N",
                          help=f"worker processes (capped by {THREADS_ENV})")
    _add_config_arguments(p_stages)

    p_eval = sub.add_parser("eval", help="score predictions against masks")
    p_eval.add_argument("--pred", required=True, metavar="DIR")
    p_eval.add_argument("--gt", required=True, metavar="DIR")
    p_eval.add_argument("-o", "--out", required=True, metavar="DIR",
                        help="directory for report.json and companions")
    p_eval.add_argument("--csv", action="store_true", help="also write report.csv")
    p_eval.add_argument("--no-figures", action="store_true",
                        help="skip the PR and F curve figures")
    _add_config_arguments(p_eval)

    p_print = sub.add_parser("print-config", help="show the effective configuration")
    _add_config_arguments(p_print)
    return parser


def _run_detect(args: argparse.Namespace, dump_stages: bool) -> int:
    try:
        config = _build_config(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2
    if dump_stages and not config.io.dump_stages:
        config = apply_overrides(config, {"io.dump_stages": "true"})
    workers = _worker_count(args.workers)
    results = batch_detect(args.images, args.out, config, workers=workers)
    failures = 0
    for path, error in results:
        if error is None:
            log.info("wrote %s", Path(args.out) / f"{Path(path).stem}.png")
        else:
            failures += 1
            log.error("%s: %s", path, error)
    if failures:
        log.error("%d of %d images failed", failures, len(results))
    return 1 if failures else 0


def _run_eval(args: argparse.Namespace) -> int:
    try:
        config = _build_config(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 2
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        report = evaluate(
            args.pred,
            args.gt,
            beta2=config.metrics.beta2,
            s_alpha=config.metrics.s_alpha,
            config_echo=config_as_dict(config),
        )
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1
    atomic_write_bytes(out_dir / "report.json", report.to_json().encode("utf-8"))
    atomic_write_bytes(out_dir / "pr_curve.txt", report.pr_curve_text().encode("utf-8"))
    atomic_write_bytes(out_dir / "f_curve.txt", report.f_curve_text().encode("utf-8"))
    if args.csv:
        atomic_write_bytes(out_dir / "report.csv", report.to_csv().encode("utf-8"))
    if not args.no_figures:
        from .plotting import save_f_figure, save_pr_figure

        save_pr_figure(report, out_dir / "pr_curve.png")
        save_f_figure(report, out_dir / "f_curve.png")
    for entry in report.skipped:
        log.warning("skipped %s: %s", entry["name"], entry["reason"])
    agg = report.aggregates
    log.info(
        "evaluated %d images: MAE %.4f, F %.4f, AUC %.4f",
        len(report.per_image), agg["mae"], agg["f_measure"], report.auc,
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "detect":
        return _run_detect(args, dump_stages=False)
    if args.command == "stages":
        return _run_detect(args, dump_stages=True)
    if args.command == "eval":
        return _run_eval(args)
    if args.command == "print-config":
        try:
            config = _build_config(args)
        except (ValueError, OSError) as exc:
            log.error("%s", exc)
            return 2
        sys.stdout.write(to_ini(config))
        return 0
    raise AssertionError(f"unhandled command {args.command!r}")


if __name__ == "__main__":
    raise SystemExit(main())
