"""Readers and writers for the on-disk depth and mask formats.

* PFM: single-channel float32, little-endian, metres, bottom row first.
  Invalid depth is stored as NaN.
* PGM (P5): 8-bit single channel. Used for quantized depth and masks.
* PNG: 8-bit, 3 identical channels for quantized depth.

Quantized images carry a ``<name>.json`` sidecar with the quantization
range so they can be decoded without out-of-band knowledge.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np
from PIL import Image

from depthsight.depthmap import DepthMap, QuantizationSpec, dequantize, quantize
from depthsight.errors import ConfigError, DataError, UnknownFormat

_PFM_HEADER = re.compile(rb"^(Pf|PF)\s+(\d+)\s+(\d+)\s+(-?[0-9.eE+-]+)\s")


def write_pfm(path, depth) -> None:
    data = depth.data if isinstance(depth, DepthMap) else np.asarray(depth)
    if data.ndim != 2:
        raise DataError("PFM writer supports single-channel images only")
    h, w = data.shape
    body = np.flipud(data).astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(b"Pf\n%d %d\n-1.0\n" % (w, h))
        fh.write(body)


def read_pfm_array(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    m = _PFM_HEADER.match(raw)
    if m is None:
        raise DataError(f"{path}: not a PFM file")
    kind, w, h, scale = m.group(1), int(m.group(2)), int(m.group(3)), float(m.group(4))
    if kind != b"Pf":
        raise DataError(f"{path}: only single-channel PFM is supported")
    dtype = "<f4" if scale < 0 else ">f4"
    count = w * h
    body = raw[m.end():]
    if len(body) < 4 * count:
        raise DataError(f"{path}: truncated PFM payload")
    arr = np.frombuffer(body, dtype=dtype, count=count).reshape(h, w)
    return np.flipud(arr).astype(np.float64)


def read_pfm(path) -> DepthMap:
    return DepthMap(read_pfm_array(path))


def write_pgm(path, img) -> None:
    img = np.asarray(img)
    if img.dtype != np.uint8 or img.ndim != 2:
        raise DataError("PGM writer expects a 2-D uint8 array")
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(img).tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    # header: magic, width, height, maxval separated by whitespace; comments allowed
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(raw) and raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            while pos < len(raw) and raw[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DataError(f"{path}: truncated PGM header")
        tokens.append(raw[start:pos])
    pos += 1
    if tokens[0] != b"P5":
        raise DataError(f"{path}: only binary P5 PGM is supported")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise DataError(f"{path}: only 8-bit PGM is supported")
    body = raw[pos:pos + w * h]
    if len(body) < w * h:
        raise DataError(f"{path}: truncated PGM payload")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w).copy()


def write_png(path, img) -> None:
    Image.fromarray(np.asarray(img, dtype=np.uint8)).save(path, format="PNG")


def read_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.array(im)


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_sidecar(path, q: QuantizationSpec) -> None:
    sidecar_path(path).write_text(json.dumps(q.to_json_dict(), sort_keys=True) + "\n")


def read_sidecar(path) -> QuantizationSpec:
    sc = sidecar_path(path)
    try:
        return QuantizationSpec.from_json_dict(json.loads(sc.read_text()))
    except FileNotFoundError:
        raise ConfigError(f"missing quantization sidecar {sc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"sidecar {sc} is not valid JSON: {exc}") from None


def read_depth(path, q: QuantizationSpec | None = None) -> DepthMap:
    """Load a depth map from PFM, or from an 8-bit PGM/PNG plus its sidecar."""
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".pfm":
        return read_pfm(path)
    if ext in (".pgm", ".png"):
        img = read_pgm(path) if ext == ".pgm" else read_png(path)
        return dequantize(img, q if q is not None else read_sidecar(path))
    raise UnknownFormat(f"unrecognised depth format {ext!r} ({path})")


def write_depth(path, m: DepthMap, q: QuantizationSpec | None = None) -> None:
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".pfm":
        write_pfm(path, m)
        return
    if ext not in (".pgm", ".png"):
        raise UnknownFormat(f"unrecognised depth format {ext!r} ({path})")
    q = q or QuantizationSpec()
    img = quantize(m, q)
    if ext == ".pgm":
        write_pgm(path, img[:, :, 0])
    else:
        write_png(path, img)
    write_sidecar(path, q)


def convert(src, dst, q: QuantizationSpec | None = None) -> None:
    """Convert between PFM and 8-bit encodings.

    ``q`` sets the range when encoding; when decoding it overrides the
    source sidecar.
    """
    src, dst = Path(src), Path(dst)
    for p in (src, dst):
        if p.suffix.lower() not in (".pfm", ".pgm", ".png"):
            raise UnknownFormat(f"unrecognised depth format {p.suffix!r} ({p})")
    if src.suffix.lower() == ".pfm":
        m = read_pfm(src)
    else:
        m = read_depth(src, q)
        if q is None:
            q = read_sidecar(src)
    write_depth(dst, m, q)
