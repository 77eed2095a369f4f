"""Synthetic dataset bundles with planted structure: scripted shots,
letterbox bars, drawn faces with landmarks, identity-blob embeddings,
saliency blobs, and a logo prior. Used by the validation suite and the
demo scripts; every artifact is deterministic for a given spec.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .images import save_rgb, write_pgm
from .tensorio import write_tensor_file

# Bright, well-separated base colors, one per planted shot (cycled).
_SHOT_COLORS = [
    (170, 60, 60),
    (60, 170, 60),
    (60, 60, 170),
    (170, 170, 60),
    (170, 60, 170),
    (60, 170, 170),
    (200, 120, 60),
    (120, 60, 200),
    (90, 140, 90),
    (140, 90, 60),
]


@dataclass
class SynthSpec:
    video_id: str = "synthetic-demo"
    frame_count: int = 500
    width: int = 320
    height: int = 180
    fps: float = 24.0
    shot_count: int = 10
    letterbox_top: int = 12
    letterbox_bottom: int = 12
    embedding_dim: int = 64
    seed: int = 7
    identities: int = 2
    # shots whose frames carry a drawn face (identity alternates)
    face_shots: tuple[int, ...] = (2, 3, 4, 5, 6, 7)
    closed_eye_period: int = 5  # every Nth face frame has closed eyes
    saliency_downscale: int = 4
    title: str = "Synthetic validation video"
    summary: str = (
        "A scripted sequence of colored scenes with two recurring faces, "
        "generated to exercise the selection pipeline end to end."
    )
    keywords: tuple[str, ...] = ("crimson field", "portrait", "harbor night")
    # shots that share an embedding direction: (4,5) are adjacent and must
    # merge into one group; (0,9) are distant and must stay split
    tied_shot_pairs: tuple[tuple[int, int], ...] = ((4, 5), (0, 9))


def demo_spec() -> SynthSpec:
    """Small bundle for service and UI fixtures."""
    return SynthSpec(
        video_id="synthetic-mini",
        frame_count=120,
        shot_count=6,
        face_shots=(1, 2, 3, 4),
        seed=11,
    )


@dataclass
class _Face:
    face_id: str
    frame_id: int
    identity: int
    rect: tuple[int, int, int, int]  # full-frame coords
    eyes_closed: bool
    emotion: str


def _shot_bounds(spec: SynthSpec) -> list[tuple[int, int]]:
    per = spec.frame_count // spec.shot_count
    bounds = []
    for s in range(spec.shot_count):
        start = s * per
        end = spec.frame_count if s == spec.shot_count - 1 else (s + 1) * per
        bounds.append((start, end))
    return bounds


def _face_rect(spec: SynthSpec, shot: int) -> tuple[int, int, int, int]:
    """A face box comfortably above the 5% area threshold, in full-frame
    coordinates, nudged horizontally per shot."""
    content_h = spec.height - spec.letterbox_top - spec.letterbox_bottom
    w = max(48, int(spec.width * 0.22))
    h = max(48, int(content_h * 0.38))
    x = int(spec.width * (0.30 + 0.08 * (shot % 3)))
    y = spec.letterbox_top + int(content_h * 0.18)
    return (x, y, w, h)


def _draw_face(frame: np.ndarray, rect, closed: bool):
    x, y, w, h = rect
    frame[y : y + h, x : x + w] = (205, 170, 140)  # skin block
    ex_l = x + int(w * 0.30)
    ex_r = x + int(w * 0.70)
    ey = y + int(h * 0.40)
    r = max(2, w // 16)
    for ex in (ex_l, ex_r):
        if closed:
            frame[ey : ey + 2, ex - r : ex + r] = (60, 40, 30)
        else:
            frame[ey - r : ey + r, ex - r : ex + r] = (40, 30, 25)
    # mouth
    my = y + int(h * 0.75)
    frame[my : my + 2, x + int(w * 0.35) : x + int(w * 0.65)] = (120, 60, 60)


def _eye_landmarks(rect, closed: bool) -> list[float]:
    """Nine points per eye in full-frame coordinates: contour p1..p8
    clockwise from the left corner, then the pupil."""
    x, y, w, h = rect
    coords: list[float] = []
    for side in (0.30, 0.70):
        ex = x + w * side
        ey = y + h * 0.40
        half = w * 0.08
        v = 0.0 if closed else half * 0.7
        pts = [
            (ex - half, ey),                # p1 left corner
            (ex - half / 2, ey - v),        # p2
            (ex, ey - v),                   # p3
            (ex + half / 2, ey - v),        # p4
            (ex + half, ey),                # p5 right corner
            (ex + half / 2, ey + v),        # p6
            (ex, ey + v),                   # p7
            (ex - half / 2, ey + v),        # p8
            (ex, ey),                       # pupil
        ]
        for px, py in pts:
            coords.extend((round(px, 2), round(py, 2)))
    return coords


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def generate_bundle(root, spec: SynthSpec | None = None) -> Path:
    """Write a complete dataset bundle under ``root`` and return it."""
    spec = spec or SynthSpec()
    root = Path(root)
    frames_dir = root / "frames"
    art_dir = root / "artifacts"
    sal_dir = art_dir / "saliency"
    for d in (frames_dir, art_dir, sal_dir, root / "cache", root / "selections"):
        d.mkdir(parents=True, exist_ok=True)

    rng = np.random.default_rng(spec.seed)
    bounds = _shot_bounds(spec)
    content_h = spec.height - spec.letterbox_top - spec.letterbox_bottom

    # Per-shot embedding directions, with the scripted ties applied.
    shot_dirs = [_unit(rng, spec.embedding_dim) for _ in range(spec.shot_count)]
    for a, b in spec.tied_shot_pairs:
        if a < spec.shot_count and b < spec.shot_count:
            shot_dirs[b] = shot_dirs[a].copy()
    identity_dirs = [_unit(rng, spec.embedding_dim) for _ in range(spec.identities)]

    # Fixed per-shot texture; per-frame drift keeps neighbors close.
    shot_noise = [
        rng.integers(-25, 26, size=(content_h, spec.width, 3))
        for _ in range(spec.shot_count)
    ]

    index = []
    faces: list[_Face] = []
    emotions_cycle = ["happiness", "surprise", "neutral", "fear"]
    frame_rows = []
    shot_scale_rows = []
    frame_embeddings = np.zeros((spec.frame_count, spec.embedding_dim), dtype=np.float64)

    for shot, (start, end) in enumerate(bounds):
        base = np.array(_SHOT_COLORS[shot % len(_SHOT_COLORS)], dtype=np.float64)
        gradient = np.linspace(-18, 18, spec.width)[None, :, None]
        has_face = shot in spec.face_shots
        rect = _face_rect(spec, shot) if has_face else None
        identity = spec.face_shots.index(shot) % spec.identities if has_face else None
        face_seq = 0
        for t, fid in enumerate(range(start, end)):
            drift = 0.25 * t
            content = np.clip(
                base[None, None, :] + gradient + shot_noise[shot] + drift, 0, 255
            ).astype(np.uint8)
            frame = np.zeros((spec.height, spec.width, 3), dtype=np.uint8)
            frame[spec.letterbox_top : spec.letterbox_top + content_h] = content

            closed = False
            if has_face:
                closed = face_seq % spec.closed_eye_period == spec.closed_eye_period - 1
                # draw within content coordinates, offset already included
                _draw_face(frame, rect, closed)
                face = _Face(
                    face_id=f"face-{fid:06d}",
                    frame_id=fid,
                    identity=identity,
                    rect=rect,
                    eyes_closed=closed,
                    emotion=emotions_cycle[(identity + face_seq) % len(emotions_cycle)],
                )
                faces.append(face)
                face_seq += 1

            name = f"frame_{fid:06d}.png"
            save_rgb(frames_dir / name, frame)
            index.append(
                {
                    "frame_id": fid,
                    "timestamp_s": round(fid / spec.fps, 6),
                    "file": name,
                    "width": spec.width,
                    "height": spec.height,
                }
            )
            frame_rows.append(fid)

            emb = shot_dirs[shot] + 0.03 * rng.normal(size=spec.embedding_dim)
            frame_embeddings[fid] = emb / np.linalg.norm(emb)

            # scale labels: face shots skew medium/close-up with a little
            # in-shot disagreement for the smoothing pass to fix
            if has_face:
                label = "close-up" if t % 7 == 3 else "medium"
            else:
                label = "medium" if t % 9 == 4 else "long"
            shot_scale_rows.append((fid, label))

            # saliency: blob over the face, else a shot-specific hotspot
            gh = max(4, content_h // spec.saliency_downscale)
            gw = max(4, spec.width // spec.saliency_downscale)
            yy, xx = np.mgrid[0:gh, 0:gw]
            if has_face:
                cx = (rect[0] + rect[2] / 2) * gw / spec.width
                cy = (rect[1] - spec.letterbox_top + rect[3] / 2) * gh / content_h
            else:
                cx = gw * (0.25 + 0.5 * (shot % 3) / 2)
                cy = gh * 0.5
            sigma = 0.16 * min(gw, gh) + 1.0
            blob = np.exp(-(((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * sigma**2)))
            write_pgm(sal_dir / f"frame_{fid:06d}.pgm", blob / blob.max())

    (frames_dir / "index.json").write_text(
        json.dumps(index, indent=1), encoding="utf-8"
    )

    manifest = {
        "video_id": spec.video_id,
        "fps": spec.fps,
        "frame_count": spec.frame_count,
        "duration_s": round(spec.frame_count / spec.fps, 6),
        "title": spec.title,
        "summary": spec.summary,
        "keywords": list(spec.keywords),
        "embedding_dim": spec.embedding_dim,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")

    write_tensor_file(
        art_dir / "frame_embeddings.fpk",
        [str(fid) for fid in frame_rows],
        frame_embeddings.astype(np.float32),
    )

    # keyword k tracks the direction of shot 2k, so per-keyword sections
    # have a planted winner
    kw_rows = []
    for i, _kw in enumerate(spec.keywords):
        target = shot_dirs[(2 * i) % spec.shot_count]
        v = target + 0.01 * rng.normal(size=spec.embedding_dim)
        kw_rows.append(v / np.linalg.norm(v))
    write_tensor_file(
        art_dir / "keyword_embeddings.fpk",
        list(spec.keywords),
        np.stack(kw_rows).astype(np.float32),
    )

    good = _unit(rng, spec.embedding_dim)
    bad = -good + 0.2 * rng.normal(size=spec.embedding_dim)
    bad /= np.linalg.norm(bad)
    write_tensor_file(
        art_dir / "prompt_embeddings.fpk",
        ["good", "bad"],
        np.stack([good, bad]).astype(np.float32),
    )

    if faces:
        with open(art_dir / "faces.txt", "w", encoding="utf-8") as fh:
            for f in faces:
                x, y, w, h = f.rect
                fh.write(f"{f.face_id},{f.frame_id},{x},{y},{w},{h}\n")
        with open(art_dir / "landmarks.txt", "w", encoding="utf-8") as fh:
            for f in faces:
                coords = _eye_landmarks(f.rect, f.eyes_closed)
                joined = ",".join(str(c) for c in coords)
                fh.write(f"{f.face_id},{f.frame_id},nine-point,{joined}\n")
        with open(art_dir / "emotions.txt", "w", encoding="utf-8") as fh:
            for f in faces:
                fh.write(f"{f.face_id},{f.emotion}\n")
        face_matrix = []
        for f in faces:
            v = identity_dirs[f.identity] + 0.05 * rng.normal(size=spec.embedding_dim)
            face_matrix.append(v / np.linalg.norm(v))
        write_tensor_file(
            art_dir / "face_embeddings.fpk",
            [f.face_id for f in faces],
            np.stack(face_matrix).astype(np.float32),
        )

    with open(art_dir / "shot_scales.txt", "w", encoding="utf-8") as fh:
        for fid, label in shot_scale_rows:
            fh.write(f"{fid},{label}\n")

    # logo prior: strong band across the top-left quarter
    prior = np.full((64, 64), 0.05)
    prior[4:20, 4:34] = 0.9
    write_pgm(art_dir / "logo_prior.pgm", prior)

    return root
