"""Raster plumbing: PPM (P6) codec, grayscale, bilinear resize, crops.

Frames are numpy uint8 arrays of shape (H, W, 3), RGB order. PPM is the
interchange format everywhere (files on disk, base64 payloads to remote
backends) because its byte layout is trivially deterministic.
"""
from __future__ import annotations

import io
import re

import numpy as np

from .boxes import BBox


def ppm_encode(frame: np.ndarray) -> bytes:
    if frame.ndim != 3 or frame.shape[2] != 3 or frame.dtype != np.uint8:
        raise ValueError(f"expected uint8 RGB frame, got shape {frame.shape} dtype {frame.dtype}")
    h, w = frame.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + frame.tobytes()


def ppm_decode(data: bytes) -> np.ndarray:
    # Header: magic, width, height, maxval; whitespace/comment separated.
    m = re.match(rb"^P6\s+(?:#[^\n]*\n\s*)*(\d+)\s+(\d+)\s+(\d+)\s", data)
    if not m:
        raise ValueError("not a binary PPM (P6) image")
    w, h, maxval = int(m.group(1)), int(m.group(2)), int(m.group(3))
    if maxval != 255:
        raise ValueError(f"unsupported PPM maxval {maxval}")
    pixels = data[m.end():]
    need = w * h * 3
    if len(pixels) < need:
        raise ValueError(f"truncated PPM: need {need} bytes, have {len(pixels)}")
    return np.frombuffer(pixels[:need], dtype=np.uint8).reshape(h, w, 3).copy()


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        return ppm_decode(f.read())


def write_ppm(path, frame: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(ppm_encode(frame))


def to_gray(frame: np.ndarray) -> np.ndarray:
    """BT.601 luma as float64 in [0, 255]."""
    rgb = frame.astype(np.float64)
    return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Resize a 2-D float image with pixel-center alignment and edge clamping."""
    if img.ndim != 2:
        raise ValueError("bilinear_resize expects a 2-D array")
    in_h, in_w = img.shape
    if (in_h, in_w) == (out_h, out_w):
        return img.astype(np.float64, copy=True)
    src = img.astype(np.float64)

    ys = (np.arange(out_h) + 0.5) * (in_h / out_h) - 0.5
    xs = (np.arange(out_w) + 0.5) * (in_w / out_w) - 0.5
    y0 = np.clip(np.floor(ys).astype(int), 0, in_h - 1)
    x0 = np.clip(np.floor(xs).astype(int), 0, in_w - 1)
    y1 = np.clip(y0 + 1, 0, in_h - 1)
    x1 = np.clip(x0 + 1, 0, in_w - 1)
    fy = np.clip(ys - y0, 0.0, 1.0)[:, None]
    fx = np.clip(xs - x0, 0.0, 1.0)[None, :]

    top = src[np.ix_(y0, x0)] * (1 - fx) + src[np.ix_(y0, x1)] * fx
    bot = src[np.ix_(y1, x0)] * (1 - fx) + src[np.ix_(y1, x1)] * fx
    return top * (1 - fy) + bot * fy


def crop(frame: np.ndarray, box: BBox) -> np.ndarray:
    """Integer crop of the box clipped to the frame. Raises on empty overlap."""
    h, w = frame.shape[:2]
    x0 = max(0, int(np.floor(box.x)))
    y0 = max(0, int(np.floor(box.y)))
    x1 = min(w, int(np.ceil(box.x2)))
    y1 = min(h, int(np.ceil(box.y2)))
    if x1 <= x0 or y1 <= y0:
        raise ValueError(f"crop box {box} does not intersect {w}x{h} frame")
    return frame[y0:y1, x0:x1]


def png_encode(frame: np.ndarray) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(frame, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
