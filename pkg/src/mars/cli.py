"""Command-line front door: rank, eval, synth.

Exit codes: 0 on success, 1 when the input or flags are invalid (any
engine-defined error), 2 when an internal invariant breaks.  The env var
MARS_LOG (debug/info/warning/error) sets stderr log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .bundle_io import read_bundle, read_prediction, read_proposals, write_prediction
from .errors import EmptyInput, InvalidValue, IoFailure, MarsError
from .eval_harness import episode_result, format_report
from .pipeline import RankConfig, RankResult, rank_proposals
from .scoring import ALL_COMPONENTS
from .synth import planted_fixture, write_fixture

log = logging.getLogger("mars")


class _Parser(argparse.ArgumentParser):
    """Argparse variant whose usage errors follow the exit-code contract."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise InvalidValue(f"arguments: {message}")


def _parse_components(text: str) -> frozenset[str]:
    return frozenset(part.strip().lower() for part in text.split(","))


def _build_parser() -> _Parser:
    parser = _Parser(prog="mars", description="Rank and merge segmentation mask proposals.")
    sub = parser.add_subparsers(dest="command", required=True)

    rank = sub.add_parser("rank", parents=[], description="Score proposals against a bundle.")
    rank.add_argument("bundle", help="bundle directory")
    rank.add_argument("proposals", help="run-length proposals file")
    rank.add_argument("out", help="output directory")
    rank.add_argument("--components", default=",".join(ALL_COMPONENTS))
    rank.add_argument("--alpha", type=float, default=RankConfig.alpha)
    rank.add_argument("--th-static", type=float, default=RankConfig.th_static)
    rank.add_argument("--th-dynamic", type=float, default=RankConfig.th_dynamic)
    rank.add_argument("--clip-pir-threshold", type=float, default=RankConfig.clip_pir_threshold)
    rank.add_argument("--dino-pir-threshold", type=float, default=RankConfig.dino_pir_threshold)
    rank.add_argument("--clip-pir-layers", type=int, default=RankConfig.clip_pir_layers,
                      help="aggregate the last N attention layers (0 = all)")
    rank.add_argument("--dino-pir-layers", type=int, default=RankConfig.dino_pir_layers,
                      help="aggregate the last N attention layers (0 = all)")
    rank.add_argument("--jobs", type=int, default=0, help="scoring threads (0 = auto)")

    ev = sub.add_parser("eval", description="Per-class IoU and mIoU over a prediction corpus.")
    ev.add_argument("pred_dir", help="directory of <episode>.rle predictions")
    ev.add_argument("gt_dir", help="directory of <episode>.rle ground truths")
    ev.add_argument("folds", help="text file: one 'episode class fold' triple per line")

    synth = sub.add_parser("synth", description="Write a deterministic synthetic episode.")
    synth.add_argument("--out", required=True, help="output directory")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--shots", type=int, default=1)
    synth.add_argument("--grid", type=int, nargs=2, default=(8, 8), metavar=("H", "W"))
    synth.add_argument("--proposals", type=int, default=6)
    synth.add_argument("--pixel-scale", type=int, default=4)
    return parser


def _config_from_args(args: argparse.Namespace) -> RankConfig:
    return RankConfig(
        alpha=args.alpha,
        th_static=args.th_static,
        th_dynamic=args.th_dynamic,
        clip_pir_threshold=args.clip_pir_threshold,
        dino_pir_threshold=args.dino_pir_threshold,
        clip_pir_layers=args.clip_pir_layers,
        dino_pir_layers=args.dino_pir_layers,
        components=_parse_components(args.components),
        jobs=args.jobs,
    )


def _config_header(config: RankConfig, dropped: list[int]) -> list[str]:
    lines = [
        f"alpha={config.alpha:g}",
        f"th_static={config.th_static:g}",
        f"th_dynamic={config.th_dynamic:g}",
        f"clip_pir_threshold={config.clip_pir_threshold:g}",
        f"dino_pir_threshold={config.dino_pir_threshold:g}",
        f"clip_pir_layers={config.clip_pir_layers}",
        f"dino_pir_layers={config.dino_pir_layers}",
        f"components={','.join(sorted(config.components))}",
    ]
    if dropped:
        lines.append(f"dropped={' '.join(str(i) for i in dropped)}")
    return lines


def _format_score_table(result: RankResult, config: RankConfig) -> str:
    lines = [f"# {line}" for line in _config_header(config, result.dropped)]
    lines.append(f"{'id':>4}  {'lc':>8}  {'gc':>8}  {'lv':>8}  {'gv':>8}  {'mars':>8}  selected")
    for card in result.cards:
        flag = 1 if card.proposal_id in result.selected else 0
        lines.append(
            f"{card.proposal_id:>4d}  {card.lc:8.6f}  {card.gc:8.6f}  {card.lv:8.6f}"
            f"  {card.gv:8.6f}  {card.mars:8.6f}  {flag:>8d}"
        )
    return "\n".join(lines) + "\n"


def _cmd_rank(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    config.validate()
    bundle = read_bundle(args.bundle)
    proposals = read_proposals(args.proposals)
    log.info("ranking %d proposals from %s", len(proposals), args.bundle)
    result = rank_proposals(bundle, proposals, config)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"out: cannot create {out}: {exc}") from exc
    write_prediction(result.prediction, out / "prediction.rle")
    try:
        (out / "scores.txt").write_text(_format_score_table(result, config), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"out: cannot write {out / 'scores.txt'}: {exc}") from exc
    for line in _config_header(config, result.dropped):
        print(line)
    print(f"selected={' '.join(str(i) for i in sorted(result.selected))}")
    print(f"n_scored={len(result.cards)}")
    print(f"wrote={out / 'prediction.rle'}")
    print(f"wrote={out / 'scores.txt'}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    try:
        text = Path(args.folds).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"folds: cannot read {args.folds}: {exc}") from exc
    episodes = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 3:
            raise InvalidValue(
                f"folds: line {lineno} has {len(parts)} fields, expected 'episode class fold'"
            )
        episode_id, class_id, fold = parts
        pred = read_prediction(Path(args.pred_dir) / f"{episode_id}.rle")
        gt = read_prediction(Path(args.gt_dir) / f"{episode_id}.rle")
        episodes.append(episode_result(pred, gt, class_id, fold))
    if not episodes:
        raise EmptyInput("folds file lists no episodes")
    print(format_report(episodes), end="")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    bundle, full_masks, gt = planted_fixture(
        seed=args.seed,
        shots=args.shots,
        grid=tuple(args.grid),
        n_proposals=args.proposals,
        pixel_scale=args.pixel_scale,
    )
    write_fixture(args.out, bundle, full_masks, gt)
    out = Path(args.out)
    for name in ("bundle", "proposals.rle", "gt.rle"):
        print(f"wrote={out / name}")
    return 0


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("MARS_LOG", "warning").upper()
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = _build_parser()
    handlers = {"rank": _cmd_rank, "eval": _cmd_eval, "synth": _cmd_synth}
    try:
        args = parser.parse_args(argv)
        return handlers[args.command](args)
    except MarsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001 - anything else is an engine bug
        log.debug("internal failure", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
