"""Command-line entry point: ``depthsight <subcommand> ...``.

Exit codes: 0 ok, 1 configuration error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from depthsight import __version__
from depthsight.depthmap import QuantizationSpec
from depthsight.detector import DetectorParams
from depthsight.errors import ConfigError, DepthSightError
from depthsight.evalkit import MatchSpec
from depthsight.formats import convert
from depthsight.geometry import load_rig
from depthsight.localizer import ZrefMethod
from depthsight.pipeline import (
    PipelineConfig,
    detect_stage,
    eval_stage,
    localize_stage,
    read_json,
    run_pipeline,
    study_stage,
    synth_stage,
)
from depthsight.studies import StudySpec
from depthsight.synth.sequence import Dataset

log = logging.getLogger("depthsight")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(ConfigError.exit_code, f"{self.prog}: error: {message}\n")


def _threads(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("threads must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="depthsight", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"depthsight {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="render a synthetic dataset from a scene spec")
    s.add_argument("--spec", required=True, type=Path)
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--seed", type=int, default=None, help="override the spec's seed")
    s.add_argument("--threads", type=_threads, default=1)

    s = sub.add_parser("detect", help="run the depth-contrast detector over a dataset")
    s.add_argument("--in", dest="indir", required=True, type=Path)
    s.add_argument("--params", type=Path, default=None, help="detector params JSON (defaults if omitted)")
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--threads", type=_threads, default=1)

    s = sub.add_parser("localize", help="pick a point per detection and reproject it to 3D")
    s.add_argument("--in", dest="indir", required=True, type=Path)
    s.add_argument("--detections", required=True, type=Path)
    s.add_argument("--method", default="min", choices=[m.value for m in ZrefMethod])
    s.add_argument("--rig", type=Path, default=None, help="calibration JSON (dataset rig.json if omitted)")
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--threads", type=_threads, default=1)

    s = sub.add_parser("eval", help="frame-level precision/recall against ground truth")
    s.add_argument("--gt", required=True, type=Path, action="append",
                   help="annotations.jsonl; repeat for several sequences")
    s.add_argument("--detections", required=True, type=Path, action="append",
                   help="detections or localized JSONL, one per --gt")
    s.add_argument("--name", action="append", default=None, help="sequence name, one per --gt")
    s.add_argument("--match", type=Path, default=None)
    s.add_argument("--rig", type=Path, default=None)
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--no-figures", action="store_true")

    s = sub.add_parser("depth-study", help="hover-distance depth error study on synthetic scenes")
    s.add_argument("--spec", required=True, type=Path)
    s.add_argument("--out", required=True, type=Path)
    s.add_argument("--threads", type=_threads, default=1)
    s.add_argument("--no-figures", action="store_true")

    s = sub.add_parser("convert", help="convert depth maps between PFM and 8-bit PGM/PNG")
    s.add_argument("src", type=Path)
    s.add_argument("dst", type=Path)
    s.add_argument("--z-min", type=float, default=None)
    s.add_argument("--z-max", type=float, default=None)

    s = sub.add_parser("run", help="run synth -> detect -> localize -> eval from one config")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--out", type=Path, default=None, help="override the config's output directory")
    s.add_argument("--threads", type=_threads, default=1)
    return p


def _rig_for(args):
    if args.rig is not None:
        return load_rig(args.rig)
    return Dataset.open(args.indir).rig


def _cmd_synth(args):
    anns = synth_stage(read_json(args.spec, "scene spec"), args.out, args.threads, args.seed)
    print(f"wrote {len(anns)} frame(s) to {args.out}")


def _cmd_detect(args):
    params = DetectorParams.from_json_dict(read_json(args.params, "detector params")) if args.params else DetectorParams()
    results = detect_stage(args.indir, params, args.out, args.threads)
    print(f"wrote detections for {len(results)} frame(s) to {args.out}")


def _cmd_localize(args):
    n_ok, n_skip = localize_stage(args.indir, args.detections, ZrefMethod.parse(args.method),
                                  _rig_for(args), args.out, args.threads)
    print(f"localized {n_ok} detection(s), skipped {n_skip}; wrote {args.out}")


def _cmd_eval(args):
    if len(args.gt) != len(args.detections):
        raise ConfigError("give one --detections per --gt")
    names = args.name or [p.parent.name or f"seq{i + 1}" for i, p in enumerate(args.gt)]
    if len(names) != len(args.gt):
        raise ConfigError("give one --name per --gt")
    spec = MatchSpec.from_json_dict(read_json(args.match, "match spec")) if args.match else MatchSpec()
    if args.rig is not None:
        rig = load_rig(args.rig)
    else:
        rig_path = args.gt[0].parent / "rig.json"
        if not rig_path.exists():
            raise ConfigError(f"no --rig given and {rig_path} does not exist")
        rig = load_rig(rig_path)
    seqs = eval_stage(list(zip(names, args.gt, args.detections)), spec, args.out, rig.width, rig.height,
                      figures=not args.no_figures)
    for r in seqs:
        p = "undefined" if r.precision is None else f"{r.precision:.2f}%"
        rc = "undefined" if r.recall is None else f"{r.recall:.2f}%"
        print(f"{r.name}: frames={r.n_frames} precision={p} recall={rc}")
    print(f"report written to {args.out}")


def _cmd_study(args):
    results = study_stage(StudySpec.load(args.spec), args.out, args.threads, figures=not args.no_figures)
    for r in results:
        print(f"{r.hover_distance:7.0f} mm  {r.method.label}: rmse={r.rmse:.1f} mm (n={r.n_samples})")
    print(f"report written to {args.out}")


def _cmd_convert(args):
    q = None
    if args.z_min is not None or args.z_max is not None:
        d = QuantizationSpec()
        q = QuantizationSpec(args.z_min if args.z_min is not None else d.z_min,
                             args.z_max if args.z_max is not None else d.z_max)
    convert(args.src, args.dst, q)
    print(f"wrote {args.dst}")


def _cmd_run(args):
    cfg = PipelineConfig.load(args.config)
    if args.out is not None:
        cfg.out = args.out
    report = run_pipeline(cfg, args.threads)
    print(f"report written to {report}")


COMMANDS = {
    "synth": _cmd_synth,
    "detect": _cmd_detect,
    "localize": _cmd_localize,
    "eval": _cmd_eval,
    "depth-study": _cmd_study,
    "convert": _cmd_convert,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except DepthSightError as exc:
        print(f"depthsight: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"depthsight: internal error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
