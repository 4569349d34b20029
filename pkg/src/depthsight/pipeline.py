"""Stage functions shared by the CLI and library callers.

Each stage reads and writes the on-disk formats, so stages can be run
separately or chained by :func:`run_pipeline`. Frame-parallel stages
take ``threads``; output never depends on it.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from depthsight.detector import (
    Detection,
    DetectorParams,
    detect,
    filter_by_confidence,
    load_external_detections,
    write_detections,
)
from depthsight.errors import ConfigError, DataError, NoDepthInBox, ParseError
from depthsight.boxes import Box
from depthsight.evalkit import MatchSpec, match_frame, sequence_metrics
from depthsight.geometry import StereoRig
from depthsight.localizer import ZrefMethod, localize
from depthsight.reports import config_hash, emit_report
from depthsight.studies import StudySpec, run_study
from depthsight.synth.scene import SceneSpec
from depthsight.synth.sequence import Dataset, generate_sequence, read_annotations, trajectory_from_json

log = logging.getLogger(__name__)


def pmap(fn, items, threads: int = 1) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def read_json(path, what: str = "config"):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{what} file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{what} file {path} is not valid JSON: {exc}") from None


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# stages

def synth_stage(spec_doc: dict, out_dir, threads: int = 1, seed: int | None = None):
    spec = SceneSpec.from_json_dict(spec_doc)
    if seed is not None:
        spec = spec.with_seed(seed)
    if "trajectory" in spec_doc:
        trajectory = trajectory_from_json(spec_doc["trajectory"])
    else:
        trajectory = [spec.target_pose]
    return generate_sequence(spec, trajectory, out_dir, threads)


def detect_stage(dataset_dir, params: DetectorParams, out_path, threads: int = 1):
    ds = Dataset.open(dataset_dir)
    ids = ds.frame_ids()
    results = pmap(lambda fid: (fid, detect(ds.depth(fid), params)), ids, threads)
    write_detections(out_path, results)
    return results


def localize_stage(dataset_dir, detections_path, method: ZrefMethod, rig: StereoRig, out_path,
                   threads: int = 1) -> tuple[int, int]:
    """Returns (number localized, number skipped for lack of depth)."""
    ds = Dataset.open(dataset_dir)
    dets = read_frame_detections(detections_path, rig.width, rig.height)

    def one(fid):
        depth = ds.depth(fid)
        if depth.shape != (rig.height, rig.width):
            raise DataError(f"frame {fid} is {depth.width}x{depth.height}, rig expects {rig.width}x{rig.height}")
        records, skipped = [], 0
        for det in dets.get(fid, []):
            try:
                records.append(localize(depth, det, rig, method).to_json_dict(fid))
            except NoDepthInBox:
                skipped += 1
        return records, skipped

    outputs = pmap(one, ds.frame_ids(), threads)
    n_ok = n_skip = 0
    with open(out_path, "w") as fh:
        for records, skipped in outputs:
            n_skip += skipped
            for rec in records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
                n_ok += 1
    if n_skip:
        log.warning("skipped %d detection(s) with no valid depth in the box", n_skip)
    return n_ok, n_skip


def read_frame_detections(path, width: int, height: int) -> dict[int, list[Detection]]:
    """Read either detections JSONL (``boxes`` per frame) or localized JSONL (one box per line)."""
    path = Path(path)
    try:
        lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    except FileNotFoundError:
        raise ConfigError(f"detections file not found: {path}") from None
    if not lines:
        return {}
    try:
        first = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc), path, 1) from None
    if "boxes" in first:
        return load_external_detections(path, width, height).frames
    frames: dict[int, list[Detection]] = {}
    for lineno, line in enumerate(lines, 1):
        try:
            rec = json.loads(line)
            box = Box.from_list(rec["box"]).clip(width, height)
            det = Detection(box, float(rec.get("conf", 1.0)), rec.get("source", "external"))
            frames.setdefault(int(rec["frame_id"]), []).append(det)
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(str(exc), path, lineno) from None
    return frames


def eval_frames(annotations, dets_by_frame, spec: MatchSpec):
    return [
        match_frame(filter_by_confidence(dets_by_frame.get(a.frame_id, []), spec.confidence_threshold),
                    a.gt_box, spec, a.frame_id)
        for a in annotations
    ]


def eval_stage(pairs, spec: MatchSpec, out_dir, width: int, height: int, figures: bool = True,
               provenance: dict | None = None):
    """``pairs``: list of (name, annotations path, detections path)."""
    sequences = []
    inputs = []
    for name, gt_path, det_path in pairs:
        anns = read_annotations(gt_path)
        dets = read_frame_detections(det_path, width, height)
        sequences.append(sequence_metrics(eval_frames(anns, dets, spec), name))
        inputs.append({"name": name, "gt": file_digest(gt_path), "detections": file_digest(det_path)})
    prov = {"match": spec.to_json_dict(), "inputs": inputs}
    prov.update(provenance or {})
    prov.setdefault("config_hash", config_hash({k: v for k, v in prov.items() if k != "config_hash"}))
    emit_report(out_dir, sequences=sequences, provenance=prov, figures=figures)
    return sequences


def study_stage(study: StudySpec, out_dir, threads: int = 1, figures: bool = True):
    results = run_study(study, threads)
    cfg = study.to_json_dict()
    prov = {"study": cfg, "seed": study.scene.seed, "rig": study.scene.rig.to_json_dict(),
            "config_hash": config_hash(cfg)}
    emit_report(out_dir, depth_results=results, provenance=prov, figures=figures)
    return results


# ---------------------------------------------------------------------------
# whole pipeline

STAGES = ("synth", "detect", "localize", "eval")


@dataclass
class PipelineConfig:
    scene: dict
    detector: DetectorParams = field(default_factory=DetectorParams)
    method: ZrefMethod = ZrefMethod.MIN_DEPTH
    match: MatchSpec = field(default_factory=MatchSpec)
    seed: int = 0
    out: Path = Path("run")
    stages: tuple = STAGES
    study: StudySpec | None = None
    figures: bool = True
    name: str = "sequence"

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        path = Path(path)
        doc = read_json(path, "pipeline config")
        base = path.parent

        def section(key, default=None):
            val = doc.get(key, default)
            if isinstance(val, str):
                return read_json(base / val, key)
            return val

        try:
            scene = section("scene")
            if scene is None:
                raise ConfigError("pipeline config needs a 'scene'")
            study_doc = section("depth_study")
            stages = tuple(doc.get("stages", STAGES))
            unknown = set(stages) - set(STAGES) - {"depth-study"}
            if unknown:
                raise ConfigError(f"unknown stages {sorted(unknown)}")
            out = Path(doc.get("out", "run"))
            return cls(
                scene=scene,
                detector=DetectorParams.from_json_dict(section("detector", {}) or {}),
                method=ZrefMethod.parse(doc.get("method", "min")),
                match=MatchSpec.from_json_dict(section("match", {}) or {}),
                seed=int(doc.get("seed", 0)),
                out=out if out.is_absolute() else base / out,
                stages=stages,
                study=StudySpec.from_json_dict(study_doc) if study_doc else None,
                figures=bool(doc.get("figures", True)),
                name=str(doc.get("name", "sequence")),
            )
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{path}: {exc}") from None

    def to_json_dict(self) -> dict:
        return {
            "scene": self.scene,
            "detector": self.detector.to_json_dict(),
            "method": self.method.value,
            "match": self.match.to_json_dict(),
            "seed": self.seed,
            "stages": list(self.stages),
            "study": self.study.to_json_dict() if self.study else None,
            "figures": self.figures,
            "name": self.name,
        }


def run_pipeline(config: PipelineConfig, threads: int = 1) -> Path:
    """Run the requested stages into ``config.out``; returns the report directory."""
    out = Path(config.out)
    dataset = out / "dataset"
    detections = out / "detections.jsonl"
    localized = out / "localized.jsonl"
    report = out / "report"
    chash = config_hash(config.to_json_dict())
    prov = {"config_hash": chash, "seed": config.seed, "pipeline": config.to_json_dict()}

    if "synth" in config.stages:
        synth_stage(config.scene, dataset, threads, seed=config.seed)
    rig = Dataset.open(dataset).rig if dataset.exists() else SceneSpec.from_json_dict(config.scene).rig
    if "detect" in config.stages:
        detect_stage(dataset, config.detector, detections, threads)
    if "localize" in config.stages:
        localize_stage(dataset, detections, config.method, rig, localized, threads)
    if "eval" in config.stages:
        source = localized if localized.exists() else detections
        eval_stage([(config.name, dataset / "annotations.jsonl", source)], config.match, report,
                   rig.width, rig.height, config.figures, provenance=dict(prov))
    if config.study is not None and "depth-study" in config.stages:
        results = run_study(config.study, threads)
        emit_report(report / "depth_study", depth_results=results, provenance=dict(prov), figures=config.figures)
    return report
