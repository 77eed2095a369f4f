"""Image I/O and color helpers. Frames are RGB uint8 (H, W, 3) arrays
everywhere inside the engine; BGR only exists at the cv2 boundary.
"""
from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np

from .model import DomainError

# Rec. 709 luma coefficients, also used for grayscale conversion.
LUMA_R, LUMA_G, LUMA_B = 0.2126, 0.7152, 0.0722


def load_rgb(path) -> np.ndarray:
    img = cv2.imread(str(path), cv2.IMREAD_COLOR)
    if img is None:
        raise IOError(f"unreadable image: {path}")
    return cv2.cvtColor(img, cv2.COLOR_BGR2RGB)


def save_rgb(path, rgb: np.ndarray):
    ok = cv2.imwrite(str(path), cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR))
    if not ok:
        raise IOError(f"failed to write image: {path}")


def encode_png(rgb: np.ndarray) -> bytes:
    ok, buf = cv2.imencode(".png", cv2.cvtColor(rgb, cv2.COLOR_RGB2BGR))
    if not ok:
        raise IOError("PNG encoding failed")
    return buf.tobytes()


def to_gray(rgb: np.ndarray) -> np.ndarray:
    """Luma-weighted grayscale as float64 in [0, 255]."""
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise DomainError(f"expected (H, W, 3) RGB image, got {rgb.shape}")
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    return LUMA_R * r.astype(np.float64) + LUMA_G * g + LUMA_B * b


def resize_short_edge(rgb: np.ndarray, short_edge: int) -> np.ndarray:
    """Downscale so the shortest edge is ``short_edge``; never upscale."""
    h, w = rgb.shape[:2]
    short = min(h, w)
    if short <= short_edge:
        return rgb
    scale = short_edge / short
    new_w = max(1, int(round(w * scale)))
    new_h = max(1, int(round(h * scale)))
    return cv2.resize(rgb, (new_w, new_h), interpolation=cv2.INTER_AREA)


def strip_letterbox(rgb: np.ndarray, top: int, bottom: int) -> np.ndarray:
    h = rgb.shape[0]
    if top + bottom >= h:
        raise DomainError(f"letterbox rows {top}+{bottom} >= height {h}")
    return rgb[top : h - bottom]


def rect_to_grid(
    x: int, y: int, x2: int, y2: int,
    frame_w: int, frame_h: int, gw: int, gh: int,
) -> tuple[int, int, int, int]:
    """Map a pixel rect onto a (gh, gw) grid that spans the frame
    proportionally; the result is clamped and never empty.
    """
    gx1 = int(round(x * gw / frame_w))
    gx2 = int(round(x2 * gw / frame_w))
    gy1 = int(round(y * gh / frame_h))
    gy2 = int(round(y2 * gh / frame_h))
    gx1 = max(0, min(gx1, gw - 1))
    gy1 = max(0, min(gy1, gh - 1))
    gx2 = max(gx1 + 1, min(gx2, gw))
    gy2 = max(gy1 + 1, min(gy2, gh))
    return gx1, gy1, gx2, gy2


def read_pgm(path) -> np.ndarray:
    """Read an 8-bit binary PGM as float64 rescaled to [0, 1]."""
    raw = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if raw is None:
        raise IOError(f"unreadable PGM: {path}")
    return raw.astype(np.float64) / 255.0


def write_pgm(path, grid: np.ndarray):
    """Write a [0, 1] float grid as an 8-bit binary PGM."""
    arr = np.clip(np.asarray(grid, dtype=np.float64), 0.0, 1.0)
    data = np.round(arr * 255.0).astype(np.uint8)
    header = f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())
