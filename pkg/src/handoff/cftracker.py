"""Single-target correlation-filter tracker (translation only).

Ridge regression over all cyclic shifts of a grayscale template, solved in
the frequency domain with a Gaussian kernel. The model is never blended:
callers re-initialize from a fresh box whenever they trust a detection, so
update() is a pure localization step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .boxes import BBox
from .imaging import bilinear_resize, to_gray


@dataclass(frozen=True)
class FilterParams:
    template_size: int = 64
    padding: float = 1.5  # patch size as a multiple of target size
    kernel_sigma: float = 0.5
    regularization_lambda: float = 1e-4
    output_sigma_factor: float = 0.1
    # motion gate: per-pass displacement may not exceed this fraction of the
    # template; spurious far-field peaks on low-texture content land outside
    # it, while physical frame-to-frame motion stays well inside
    max_shift_fraction: float = 0.25

    def __post_init__(self):
        if self.template_size < 16:
            raise ValueError(f"template_size must be >= 16, got {self.template_size}")
        if self.padding <= 1:
            raise ValueError(f"padding must exceed 1, got {self.padding}")
        if self.regularization_lambda <= 0:
            raise ValueError(f"lambda must be positive, got {self.regularization_lambda}")
        if self.kernel_sigma <= 0 or self.output_sigma_factor <= 0:
            raise ValueError("kernel_sigma and output_sigma_factor must be positive")
        if not 0 < self.max_shift_fraction <= 0.5:
            raise ValueError(f"max_shift_fraction must be in (0, 0.5], got {self.max_shift_fraction}")


@dataclass
class FilterModel:
    params: FilterParams
    target_size: Tuple[float, float]
    patch_size: Tuple[int, int]  # sampled source-pixel extent (w, h)
    window: np.ndarray
    template_features: np.ndarray
    alpha_hat: np.ndarray
    last_center: Tuple[float, float]
    baseline_peak: float
    # where the target sat inside the integer-anchored init patch; response
    # displacements are relative to this, not to the raw float center
    anchor_offset: Tuple[float, float] = (0.0, 0.0)


def _hann2d(n: int) -> np.ndarray:
    w = np.hanning(n)
    return np.outer(w, w)


def _gaussian_labels(n: int, sigma: float) -> np.ndarray:
    # peak at (n//2, n//2) to match the centered kernel maps
    grid = np.arange(n) - n // 2
    gy, gx = np.meshgrid(grid, grid, indexing="ij")
    return np.exp(-0.5 * (gy ** 2 + gx ** 2) / sigma ** 2)


def gaussian_correlation(z: np.ndarray, x: np.ndarray, sigma: float) -> np.ndarray:
    """Kernel correlation of z against every cyclic shift of x, zero shift at
    the map center (n//2, n//2)."""
    n = x.shape[0]
    xf = np.fft.fft2(x)
    zf = np.fft.fft2(z)
    cross = np.real(np.fft.ifft2(zf * np.conj(xf)))
    cross = np.roll(np.roll(cross, n // 2, axis=0), n // 2, axis=1)
    d = (np.sum(x * x) + np.sum(z * z) - 2.0 * cross) / x.size
    return np.exp(-np.maximum(d, 0.0) / sigma ** 2)


def _extract_features(frame: np.ndarray, center: Tuple[float, float],
                      patch_size: Tuple[int, int], params: FilterParams,
                      window: np.ndarray) -> np.ndarray:
    h, w = frame.shape[:2]
    pw, ph = patch_size
    xs = int(math.floor(center[0])) + np.arange(pw) - pw // 2
    ys = int(math.floor(center[1])) + np.arange(ph) - ph // 2
    xs = np.clip(xs, 0, w - 1)  # replicate borders
    ys = np.clip(ys, 0, h - 1)
    patch = frame[np.ix_(ys, xs)]
    gray = to_gray(patch) / 255.0
    n = params.template_size
    resized = bilinear_resize(gray, n, n)
    resized -= resized.mean()
    return resized * window


def cf_init(frame: np.ndarray, box: BBox, params: FilterParams = FilterParams()) -> FilterModel:
    if box.area <= 0:
        raise ValueError(f"cannot initialize tracker on zero-area box {box}")
    h, w = frame.shape[:2]
    clipped = box.clipped(w, h)
    if clipped.area <= 0:
        raise ValueError(f"box {box} lies outside the {w}x{h} frame")

    patch_size = (max(2, int(round(box.w * params.padding))),
                  max(2, int(round(box.h * params.padding))))
    n = params.template_size
    window = _hann2d(n)
    center = box.center
    features = _extract_features(frame, center, patch_size, params, window)

    y = _gaussian_labels(n, params.output_sigma_factor * n)
    k = gaussian_correlation(features, features, params.kernel_sigma)
    alpha_hat = np.fft.fft2(y) / (np.fft.fft2(k) + params.regularization_lambda)
    train_response = np.real(np.fft.ifft2(np.fft.fft2(k) * alpha_hat))
    model = FilterModel(
        params=params,
        target_size=(box.w, box.h),
        patch_size=patch_size,
        window=window,
        template_features=features,
        alpha_hat=alpha_hat,
        last_center=center,
        baseline_peak=float(train_response.max()),
        anchor_offset=(center[0] - math.floor(center[0]), center[1] - math.floor(center[1])),
    )
    return model


def _subpixel_offset(left: float, center: float, right: float) -> float:
    divisor = 2.0 * center - right - left
    if abs(divisor) < 1e-9:
        return 0.0
    return max(-0.5, min(0.5, 0.5 * (right - left) / divisor))


def cf_update(model: FilterModel, frame: np.ndarray) -> Tuple[BBox, float]:
    """Localize the target near last_center; returns (box, raw peak value).

    The model itself is not retrained; only last_center moves. Localization
    runs two fixed passes: window taper biases the peak toward the patch
    center at large displacements, so the second pass re-samples at the
    first pass's estimate and removes most of that bias.
    """
    params = model.params
    n = params.template_size
    sx = model.patch_size[0] / n
    sy = model.patch_size[1] / n
    cap = max(1, int(round(n * params.max_shift_fraction)))
    lo, hi = n // 2 - cap, min(n // 2 + cap, n - 1)
    cx, cy = model.last_center
    peak = 0.0
    for it in range(2):
        z = _extract_features(frame, (cx, cy), model.patch_size, params, model.window)
        k = gaussian_correlation(z, model.template_features, params.kernel_sigma)
        response = np.real(np.fft.ifft2(np.fft.fft2(k) * model.alpha_hat))

        gated = response[lo:hi + 1, lo:hi + 1]
        flat_peak = int(np.argmax(gated))
        wy, wx = divmod(flat_peak, hi - lo + 1)
        ry, rx = lo + wy, lo + wx
        if it == 0:
            # confidence reads off the patch at the prior center; the second
            # pass only refines position
            peak = float(response[ry, rx])
        dy = ry - n // 2 + _subpixel_offset(
            response[(ry - 1) % n, rx], response[ry, rx], response[(ry + 1) % n, rx])
        dx = rx - n // 2 + _subpixel_offset(
            response[ry, (rx - 1) % n], response[ry, rx], response[ry, (rx + 1) % n])
        # displacement is relative to the integer-anchored patch, so rebase
        # on the anchor rather than the float center
        cx = math.floor(cx) + model.anchor_offset[0] + dx * sx
        cy = math.floor(cy) + model.anchor_offset[1] + dy * sy

    model.last_center = (cx, cy)
    tw, th = model.target_size
    return BBox(cx - tw / 2, cy - th / 2, tw, th), peak
