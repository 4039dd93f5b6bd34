"""Patch extraction and the deterministic augmentation pipeline.

Images are numpy arrays of shape (height, width, 3), RGB, float64 samples in
[0, 1] (8-bit inputs divided by 255). All resampling is bilinear with a
constant 0 fill, done by the shared warp kernel, so quad rectification,
resizing, and rotation share one code path and one convention (pixel centers
at half-integer coordinates).

Randomness contract: every stochastic decision is drawn from a Philox
counter-based generator whose 128-bit key is the first 16 bytes of
SHA-256 of ``"{global_seed}|{image}|{lot_id}|{epoch}"``, taken as two
little-endian uint64 words. Identical seed specs therefore give
bit-identical outputs regardless of scheduling or platform.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .annotations import LotAnnotation
from .geometry import Point2D, circumscribe, solve_homography
from .kernels import warp_bilinear

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

TENSOR_MAGIC = b"LKPT"


class PatchError(ValueError):
    """Invalid patch-pipeline input."""


@dataclass(frozen=True)
class AugmentationConfig:
    target_size: tuple[int, int] = (224, 224)  # (width, height)
    rotation_range_deg: float = 15.0
    hflip_prob: float = 0.5
    normalize_mean: tuple[float, float, float] = IMAGENET_MEAN
    normalize_std: tuple[float, float, float] = IMAGENET_STD
    translation_max_px: float = 0.0
    random_crop_size: tuple[int, int] | None = None  # (width, height)
    noise_sigma: float = 0.0

    def __post_init__(self):
        if any(s <= 0 for s in self.normalize_std):
            raise PatchError("normalize_std components must be positive")
        if self.rotation_range_deg < 0:
            raise PatchError("rotation range must be non-negative")
        if not 0.0 <= self.hflip_prob <= 1.0:
            raise PatchError("hflip_prob must lie in [0, 1]")
        if self.noise_sigma < 0:
            raise PatchError("noise_sigma must be non-negative")


@dataclass(frozen=True)
class SeedSpec:
    """Derives one independent random stream per (image, lot, epoch)."""

    global_seed: int
    image: str = ""
    lot_id: str = ""
    epoch: int = 0

    def key_words(self) -> tuple[int, int]:
        digest = hashlib.sha256(
            f"{self.global_seed}|{self.image}|{self.lot_id}|{self.epoch}".encode("utf-8")
        ).digest()
        return struct.unpack("<2Q", digest[:16])

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.key_words()))


def _check_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise PatchError(f"image must have shape (h, w, 3), got {img.shape}")
    if not np.isfinite(img).all():
        raise PatchError("image contains non-finite samples")
    return img


def resize(img: np.ndarray, width: int, height: int) -> np.ndarray:
    """Bilinear resize via the shared warp kernel."""
    img = _check_image(img)
    h, w = img.shape[:2]
    mat = np.array([[w / width, 0.0, 0.0],
                    [0.0, h / height, 0.0],
                    [0.0, 0.0, 1.0]])
    return warp_bilinear(img, mat, height, width)


def hflip(img: np.ndarray) -> np.ndarray:
    """Mirror around the vertical axis: column j -> width-1-j."""
    return np.ascontiguousarray(_check_image(img)[:, ::-1, :])


def translate(img: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """Shift content by (dx, dy) px, filling vacated space with 0."""
    img = _check_image(img)
    h, w = img.shape[:2]
    mat = np.array([[1.0, 0.0, -dx],
                    [0.0, 1.0, -dy],
                    [0.0, 0.0, 1.0]])
    return warp_bilinear(img, mat, h, w)


def rotate(img: np.ndarray, angle_deg: float) -> np.ndarray:
    """Rotate about the image center, bilinear resampling, constant 0 fill."""
    img = _check_image(img)
    if angle_deg == 0.0:
        return img.copy()
    h, w = img.shape[:2]
    theta = np.deg2rad(angle_deg)
    c, s = np.cos(theta), np.sin(theta)
    cx, cy = w / 2.0, h / 2.0
    # output -> source: rotate by -theta around the center
    mat = np.array([[c, s, cx - c * cx - s * cy],
                    [-s, c, cy + s * cx - c * cy],
                    [0.0, 0.0, 1.0]])
    return warp_bilinear(img, mat, h, w)


def crop(img: np.ndarray, x0: int, y0: int, width: int, height: int) -> np.ndarray:
    img = _check_image(img)
    h, w = img.shape[:2]
    if x0 < 0 or y0 < 0 or x0 + width > w or y0 + height > h:
        raise PatchError(f"crop {width}x{height}@({x0},{y0}) exceeds image {w}x{h}")
    return img[y0:y0 + height, x0:x0 + width].copy()


def add_gaussian_noise(img: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Blend with Gaussian noise, clamped back to [0, 1]."""
    img = _check_image(img)
    if sigma == 0.0:
        return img.copy()
    return np.clip(img + rng.normal(0.0, sigma, size=img.shape), 0.0, 1.0)


def normalize(img: np.ndarray, mean=IMAGENET_MEAN, std=IMAGENET_STD) -> np.ndarray:
    """Channel-wise (x - mean) / std."""
    img = _check_image(img)
    return (img - np.asarray(mean)) / np.asarray(std)


def denormalize(img: np.ndarray, mean=IMAGENET_MEAN, std=IMAGENET_STD) -> np.ndarray:
    return np.asarray(img, dtype=np.float64) * np.asarray(std) + np.asarray(mean)


def extract_patch(img: np.ndarray, lot: LotAnnotation,
                  target_size: tuple[int, int] = (224, 224)) -> np.ndarray:
    """Cut a lot's patch out of a full image.

    Rect lots are copied directly (rounded outward to whole pixels); quad lots
    are rectified to ``target_size`` through the quad -> square homography in a
    single resampling pass.
    """
    img = _check_image(img)
    h, w = img.shape[:2]
    if lot.rect is not None:
        x0 = int(np.floor(lot.rect.min.x))
        y0 = int(np.floor(lot.rect.min.y))
        x1 = int(np.ceil(lot.rect.max.x))
        y1 = int(np.ceil(lot.rect.max.y))
        if x0 < -0.5 or y0 < -0.5 or x1 > w + 0.5 or y1 > h + 0.5:
            raise PatchError(f"lot {lot.id!r} rect exceeds image bounds")
        return crop(img, max(x0, 0), max(y0, 0), min(x1, w) - max(x0, 0), min(y1, h) - max(y0, 0))
    bbox = circumscribe(lot.quad)
    if bbox.min.x < -0.5 or bbox.min.y < -0.5 or bbox.max.x > w + 0.5 or bbox.max.y > h + 0.5:
        raise PatchError(f"lot {lot.id!r} quad exceeds image bounds")
    # Crop to the circumscribing integer rect first so samples never reach
    # outside the lot's neighbourhood; the homography then rectifies within
    # the crop in a single resampling pass.
    x0 = max(int(np.floor(bbox.min.x)), 0)
    y0 = max(int(np.floor(bbox.min.y)), 0)
    x1 = min(int(np.ceil(bbox.max.x)), w)
    y1 = min(int(np.ceil(bbox.max.y)), h)
    sub = img[y0:y1, x0:x1]
    tw, th = target_size
    dst = [Point2D(0.0, 0.0), Point2D(float(tw), 0.0), Point2D(float(tw), float(th)), Point2D(0.0, float(th))]
    src = [Point2D(p.x - x0, p.y - y0) for p in lot.quad.vertices]
    hom = solve_homography(dst, src)
    return warp_bilinear(sub, hom.matrix, th, tw)


def apply_augmentations(patch: np.ndarray, cfg: AugmentationConfig, seed: SeedSpec) -> np.ndarray:
    """Run the full augmentation chain on one patch.

    Order: resize -> translation -> random crop -> horizontal flip -> rotation
    -> Gaussian noise -> channel-wise normalization. Every random draw comes
    from the seed's Philox stream in this fixed order, so the output is a pure
    function of (patch, cfg, seed).
    """
    patch = _check_image(patch)
    rng = seed.generator()
    tw, th = cfg.target_size
    out = resize(patch, tw, th)
    if cfg.translation_max_px > 0:
        dx, dy = rng.uniform(-cfg.translation_max_px, cfg.translation_max_px, size=2)
        out = translate(out, dx, dy)
    if cfg.random_crop_size is not None:
        cw, ch = cfg.random_crop_size
        if cw > out.shape[1] or ch > out.shape[0]:
            raise PatchError(f"random crop {cw}x{ch} exceeds patch {out.shape[1]}x{out.shape[0]}")
        x0 = int(rng.integers(0, out.shape[1] - cw + 1))
        y0 = int(rng.integers(0, out.shape[0] - ch + 1))
        out = crop(out, x0, y0, cw, ch)
    if cfg.hflip_prob > 0 and rng.uniform() < cfg.hflip_prob:
        out = hflip(out)
    if cfg.rotation_range_deg > 0:
        angle = rng.uniform(-cfg.rotation_range_deg, cfg.rotation_range_deg)
        out = rotate(out, angle)
    if cfg.noise_sigma > 0:
        out = add_gaussian_noise(out, cfg.noise_sigma, rng)
    return normalize(out, cfg.normalize_mean, cfg.normalize_std)


def load_image(path: str | Path) -> np.ndarray:
    """Decode an image file to the float RGB convention (narrow Pillow shim)."""
    from PIL import Image

    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    return arr / 255.0


def save_patch_png(path: str | Path, patch: np.ndarray):
    """Write a pre-normalization patch as 8-bit PNG."""
    from PIL import Image

    patch = _check_image(patch)
    data = np.clip(np.rint(patch * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="RGB").save(path, format="PNG")


def save_patch_tensor(path: str | Path, patch: np.ndarray):
    """Write a float tensor file: 16-byte header (magic, width, height,
    channels as little-endian uint32) followed by row-major float32 samples."""
    patch = np.asarray(patch, dtype=np.float64)
    if patch.ndim != 3:
        raise PatchError(f"tensor export needs a (h, w, c) array, got shape {patch.shape}")
    h, w, c = patch.shape
    with open(path, "wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(struct.pack("<3I", w, h, c))
        fh.write(patch.astype("<f4").tobytes())


def load_patch_tensor(path: str | Path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != TENSOR_MAGIC:
            raise PatchError(f"{path}: not a lotkit tensor file")
        w, h, c = struct.unpack("<3I", header[4:])
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != w * h * c:
        raise PatchError(f"{path}: truncated tensor payload")
    return data.reshape(h, w, c).astype(np.float64)
