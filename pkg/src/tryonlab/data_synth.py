"""Procedural paired try-on data.

Each sample is a synthetic "person" (background, torso wearing a textured
garment with multiplicative shading bands, head disk, two arm segments), the
flat in-shop garment, the agnostic image/mask pair, skin and foreground
masks, and a pseudo-warped garment extracted from the person image. All
randomness flows from a single integer seed, so generation is bit-exact.
"""

import dataclasses
import json
import math
import os
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np
from scipy.ndimage import binary_dilation, binary_erosion, gaussian_filter, map_coordinates

from . import tensor_io
from .errors import ConfigError, DataIOError

TEXTURES = ("solid", "stripes", "checker", "logo")

SAMPLE_FIELDS = (
    "person",
    "garment",
    "agnostic_image",
    "agnostic_mask",
    "skin_mask",
    "foreground_mask",
    "warped_garment",
    "warped_mask",
)

# Elastic-transform defaults: displacement noise smoothed with a 4 px Gaussian
# and scaled to 3 px at strength 1. Keeps the warped mask inside the torso
# dilation tolerance while still moving pixels measurably.
ALPHA_BASE = 3.0
SIGMA_SMOOTH = 4.0


@dataclass
class DataConfig:
    height: int = 64
    width: int = 48
    textures: Sequence[str] = TEXTURES
    warp_strength: float = 1.0
    arm_angle_deg: tuple = (15.0, 60.0)

    def validate(self):
        if self.height < 16 or self.width < 16:
            raise ConfigError(f"image dims too small: {self.height}x{self.width}")
        if self.height % 4 or self.width % 4:
            raise ConfigError(
                f"image dims must be divisible by 4, got {self.height}x{self.width}"
            )
        for t in self.textures:
            if t not in TEXTURES:
                raise ConfigError(f"unknown texture family {t!r}")
        if self.warp_strength < 0:
            raise ConfigError("warp_strength must be >= 0")


@dataclass
class TryOnSample:
    person: np.ndarray          # (H, W, 3) float32 in [0, 1]
    garment: np.ndarray         # (H, W, 3) flat in-shop garment
    agnostic_image: np.ndarray  # (H, W, 3) person with try-on area zeroed
    agnostic_mask: np.ndarray   # (H, W) 1 inside the try-on area
    skin_mask: np.ndarray       # (H, W) head + arms
    foreground_mask: np.ndarray # (H, W) full silhouette
    warped_garment: np.ndarray  # (H, W, 3) pseudo-warped garment extract
    warped_mask: np.ndarray     # (H, W) support of the warped garment
    seed: int

    def fields(self):
        return {name: getattr(self, name) for name in SAMPLE_FIELDS}

    def __eq__(self, other):
        if not isinstance(other, TryOnSample):
            return NotImplemented
        return self.seed == other.seed and all(
            np.array_equal(getattr(self, f), getattr(other, f)) for f in SAMPLE_FIELDS
        )


@dataclass
class ManifestEntry:
    sample_id: str
    seed: int
    files: dict


@dataclass
class DatasetManifest:
    root_path: str
    split: str
    entries: list
    schema_version: int = 1


# ---------------------------------------------------------------------------
# geometry + texture helpers


def _disk(r: int) -> np.ndarray:
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    return (yy * yy + xx * xx) <= r * r


def _fill_convex(h, w, verts) -> np.ndarray:
    """Rasterize a convex polygon (vertices in (y, x) order) as a bool mask."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    n = len(verts)
    # shoelace sign fixes the winding so either vertex order works
    area2 = sum(
        verts[i][1] * verts[(i + 1) % n][0] - verts[(i + 1) % n][1] * verts[i][0]
        for i in range(n)
    )
    sign = 1.0 if area2 >= 0 else -1.0
    inside = np.ones((h, w), dtype=bool)
    for i in range(n):
        y0, x0 = verts[i]
        y1, x1 = verts[(i + 1) % n]
        cross = (x1 - x0) * (yy - y0) - (y1 - y0) * (xx - x0)
        inside &= sign * cross >= 0
    return inside


def _capsule(h, w, p0, p1, radius) -> np.ndarray:
    """Thick line segment between p0 and p1 (in (y, x)) as a bool mask."""
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    vy, vx = p1[0] - p0[0], p1[1] - p0[1]
    seg_len2 = vy * vy + vx * vx
    if seg_len2 == 0:
        d2 = (yy - p0[0]) ** 2 + (xx - p0[1]) ** 2
        return d2 <= radius * radius
    t = ((yy - p0[0]) * vy + (xx - p0[1]) * vx) / seg_len2
    t = np.clip(t, 0.0, 1.0)
    d2 = (yy - (p0[0] + t * vy)) ** 2 + (xx - (p0[1] + t * vx)) ** 2
    return d2 <= radius * radius


def _pick_colors(rng) -> tuple:
    """Base + accent colors, bounded away from black and forced apart."""
    c0 = rng.uniform(0.15, 0.95, 3)
    c1 = rng.uniform(0.15, 0.95, 3)
    while np.max(np.abs(c0 - c1)) < 0.3:
        c1 = rng.uniform(0.15, 0.95, 3)
    return c0.astype(np.float32), c1.astype(np.float32)


def _texture(kind: str, u: np.ndarray, v: np.ndarray, rng) -> np.ndarray:
    """Evaluate a garment texture on normalized (u, v) coordinate grids."""
    c0, c1 = _pick_colors(rng)
    out = np.empty(u.shape + (3,), dtype=np.float32)
    if kind == "solid":
        out[...] = c0
    elif kind == "stripes":
        period = rng.uniform(0.12, 0.25)
        coord = u if rng.integers(0, 2) == 0 else v
        band = (np.floor(coord / period).astype(np.int64) % 2) == 0
        out[...] = np.where(band[..., None], c0, c1)
    elif kind == "checker":
        period = rng.uniform(0.15, 0.3)
        parity = (
            np.floor(u / period).astype(np.int64) + np.floor(v / period).astype(np.int64)
        ) % 2 == 0
        out[...] = np.where(parity[..., None], c0, c1)
    elif kind == "logo":
        out[...] = c0
        cu, cv = rng.uniform(0.35, 0.65), rng.uniform(0.35, 0.6)
        hu, hv = rng.uniform(0.1, 0.18), rng.uniform(0.08, 0.14)
        patch = (np.abs(u - cu) <= hu) & (np.abs(v - cv) <= hv)
        out[patch] = c1
    else:
        raise ConfigError(f"unknown texture family {kind!r}")
    return out


def _uv_from_bbox(mask: np.ndarray) -> tuple:
    ys, xs = np.nonzero(mask)
    y0, y1 = ys.min(), ys.max()
    x0, x1 = xs.min(), xs.max()
    h, w = mask.shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    u = (xx - x0) / max(x1 - x0, 1)
    v = (yy - y0) / max(y1 - y0, 1)
    return u, v


# ---------------------------------------------------------------------------
# pseudo-warp (elastic transform + Gaussian blur)


def warp_params(seed: int, shape: tuple, strength: float) -> tuple:
    """Displacement field (dy, dx) and blur sigma for a pseudo-warp draw.

    The field is per-pixel standard normal noise smoothed with a Gaussian of
    SIGMA_SMOOTH and scaled by strength * ALPHA_BASE.
    """
    rng = np.random.default_rng(seed)
    dy = gaussian_filter(rng.standard_normal(shape), SIGMA_SMOOTH) * (strength * ALPHA_BASE)
    dx = gaussian_filter(rng.standard_normal(shape), SIGMA_SMOOTH) * (strength * ALPHA_BASE)
    sigma_blur = rng.uniform(0.5, 1.5)
    return dy, dx, sigma_blur


def _resample(channel: np.ndarray, dy: np.ndarray, dx: np.ndarray) -> np.ndarray:
    h, w = channel.shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    return map_coordinates(channel, [yy + dy, xx + dx], order=1, mode="constant", cval=0.0)


def pseudo_warp(
    garment_on_body: np.ndarray,
    seed: int,
    strength: float,
    mask: Optional[np.ndarray] = None,
) -> tuple:
    """Elastic-warp + blur a garment extract; the mask rides the same field.

    strength=0 is the exact identity. When no mask is given, the support of
    the input image (any channel > 0) is used.
    """
    if strength < 0:
        raise ConfigError("strength must be >= 0")
    img = np.asarray(garment_on_body, dtype=np.float32)
    if mask is None:
        mask = (img > 0).any(axis=-1).astype(np.float32)
    mask = np.asarray(mask, dtype=np.float32)
    if strength == 0:
        return img.copy(), mask.copy()

    dy, dx, sigma_blur = warp_params(seed, img.shape[:2], strength)
    warped = np.stack([_resample(img[..., c], dy, dx) for c in range(img.shape[-1])], axis=-1)
    warped = gaussian_filter(warped, (sigma_blur, sigma_blur, 0.0))
    warped = np.clip(warped, 0.0, 1.0).astype(np.float32)
    warped_mask = (_resample(mask, dy, dx) >= 0.5).astype(np.float32)
    return warped, warped_mask


# ---------------------------------------------------------------------------
# mask dilation / erosion augmentation


def aug_draw(seed: int, r_max: int) -> tuple:
    """The (operation, radius) pair augment_mask uses for this seed."""
    rng = np.random.default_rng(seed)
    op = "dilate" if rng.integers(0, 2) == 0 else "erode"
    r = int(rng.integers(0, r_max + 1))
    return op, r


def augment_mask(mask: np.ndarray, seed: int, r_max: int) -> np.ndarray:
    """Random dilation or erosion with a disk structuring element."""
    if r_max < 0:
        raise ConfigError("r_max must be >= 0")
    mask = np.asarray(mask, dtype=np.float32)
    if r_max == 0:
        return mask.copy()
    op, r = aug_draw(seed, r_max)
    if r == 0:
        return mask.copy()
    selem = _disk(r)
    binary = mask > 0.5
    if op == "dilate":
        out = binary_dilation(binary, structure=selem)
    else:
        out = binary_erosion(binary, structure=selem)
    return out.astype(np.float32)


# ---------------------------------------------------------------------------
# sample generation


def gen_sample(seed: int, cfg: DataConfig) -> TryOnSample:
    """Generate one paired sample. Bit-deterministic in (seed, cfg)."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    h, w = cfg.height, cfg.width
    sy, sx = h / 64.0, w / 48.0  # geometry is tuned on a 64x48 canvas

    # silhouette geometry
    cx = w / 2 + rng.uniform(-2, 2) * sx
    head_c = (rng.uniform(8, 11) * sy, cx)
    head_r = rng.uniform(4.5, 6.0) * min(sy, sx)
    shoulder_y = head_c[0] + head_r + rng.uniform(1.0, 2.5) * sy
    hem_y = rng.uniform(44, 50) * sy
    half_shoulder = rng.uniform(10, 14) * sx
    half_hem = rng.uniform(9, 13) * sx
    torso = _fill_convex(
        h,
        w,
        [
            (shoulder_y, cx - half_shoulder),
            (hem_y, cx - half_hem),
            (hem_y, cx + half_hem),
            (shoulder_y, cx + half_shoulder),
        ],
    )
    head = _disk_mask(h, w, head_c, head_r)

    lo, hi = cfg.arm_angle_deg
    arm_r = rng.uniform(2.0, 2.8) * min(sy, sx)
    arm_len = rng.uniform(18, 24) * sy
    arms = np.zeros((h, w), dtype=bool)
    for side in (-1, 1):
        ang = math.radians(rng.uniform(lo, hi))
        p0 = (shoulder_y + 2.0 * sy, cx + side * (half_shoulder - 1.0 * sx))
        p1 = (p0[0] + arm_len * math.cos(ang), p0[1] + side * arm_len * math.sin(ang))
        arms |= _capsule(h, w, p0, p1, arm_r)

    skin = head | arms
    foreground = head | torso | arms
    garment_region = torso & ~skin  # garment visible on the body
    tryon_area = torso | arms

    # appearance
    bg_color = rng.uniform(0.55, 0.9, 3).astype(np.float32)
    skin_color = np.array(
        [rng.uniform(0.55, 0.85), rng.uniform(0.4, 0.65), rng.uniform(0.3, 0.55)],
        dtype=np.float32,
    )
    kind = str(rng.choice(list(cfg.textures)))
    texture_state = rng.integers(0, 2**31 - 1)

    u_t, v_t = _uv_from_bbox(torso)
    tex_on_body = _texture(kind, u_t, v_t, np.random.default_rng(texture_state))

    person = np.empty((h, w, 3), dtype=np.float32)
    person[...] = bg_color
    person[torso] = tex_on_body[torso]
    person[head] = skin_color
    person[arms] = skin_color

    # multiplicative shading bands: the "wrinkles/shadows" the flat garment lacks
    amp = rng.uniform(0.15, 0.35)
    freq = rng.uniform(3.0, 6.0)
    phase = rng.uniform(0, 2 * math.pi)
    tilt = rng.uniform(-0.3, 0.3)
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    bands = 1.0 - amp * (0.5 + 0.5 * np.sin(2 * math.pi * freq * (yy + tilt * xx) / h + phase))
    person[garment_region] *= bands[garment_region, None].astype(np.float32)
    person = np.clip(person, 0.0, 1.0)

    # flat in-shop garment: same texture on a canonical torso shape, no shading
    g_half_shoulder = rng.uniform(11, 14) * sx
    g_half_hem = g_half_shoulder - rng.uniform(0, 2) * sx
    g_top, g_bottom = 10 * sy, 54 * sy
    garment_shape = _fill_convex(
        h,
        w,
        [
            (g_top, w / 2 - g_half_shoulder),
            (g_bottom, w / 2 - g_half_hem),
            (g_bottom, w / 2 + g_half_hem),
            (g_top, w / 2 + g_half_shoulder),
        ],
    )
    u_g, v_g = _uv_from_bbox(garment_shape)
    tex_flat = _texture(kind, u_g, v_g, np.random.default_rng(texture_state))
    garment = np.full((h, w, 3), 0.93, dtype=np.float32)
    garment[garment_shape] = tex_flat[garment_shape]

    agnostic_mask = tryon_area.astype(np.float32)
    agnostic_image = person * (1.0 - agnostic_mask[..., None])

    extract = person * garment_region[..., None].astype(np.float32)
    warp_seed = int(rng.integers(0, 2**31 - 1))
    warped_garment, warped_mask = pseudo_warp(
        extract, warp_seed, cfg.warp_strength, mask=garment_region.astype(np.float32)
    )

    return TryOnSample(
        person=person.astype(np.float32),
        garment=garment.astype(np.float32),
        agnostic_image=agnostic_image.astype(np.float32),
        agnostic_mask=agnostic_mask,
        skin_mask=skin.astype(np.float32),
        foreground_mask=foreground.astype(np.float32),
        warped_garment=warped_garment,
        warped_mask=warped_mask,
        seed=seed,
    )


def _disk_mask(h, w, center, radius) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    return (yy - center[0]) ** 2 + (xx - center[1]) ** 2 <= radius * radius


def garment_body_mask(sample: TryOnSample) -> np.ndarray:
    """Region of the person image where the garment is visible."""
    return sample.foreground_mask * (1.0 - sample.skin_mask)


# ---------------------------------------------------------------------------
# on-disk dataset


def write_dataset(samples: Sequence[TryOnSample], path, split: str = "train") -> DatasetManifest:
    """Write samples + manifest.json under path. Lossless and bit-exact."""
    root = str(path)
    sample_dir = os.path.join(root, "samples")
    os.makedirs(sample_dir, exist_ok=True)
    entries = []
    seen = set()
    for i, s in enumerate(samples):
        sample_id = f"{split}_{i:05d}"
        if sample_id in seen:
            raise DataIOError(f"duplicate sample_id {sample_id}")
        seen.add(sample_id)
        files = {}
        for name, arr in s.fields().items():
            fname = f"{sample_id}_{name}.bin"
            tensor_io.write_tensor(os.path.join(sample_dir, fname), arr)
            files[name] = fname
        entries.append(ManifestEntry(sample_id=sample_id, seed=s.seed, files=files))
    manifest = DatasetManifest(root_path=root, split=split, entries=entries)
    with open(os.path.join(root, "manifest.json"), "w") as f:
        json.dump(
            {
                "schema_version": manifest.schema_version,
                "split": split,
                "entries": [dataclasses.asdict(e) for e in entries],
            },
            f,
            indent=1,
            sort_keys=True,
        )
    return manifest


def read_manifest(path) -> DatasetManifest:
    mpath = os.path.join(str(path), "manifest.json")
    try:
        with open(mpath) as f:
            raw = json.load(f)
    except FileNotFoundError as e:
        raise DataIOError(f"missing manifest {mpath}") from e
    except json.JSONDecodeError as e:
        raise DataIOError(f"unreadable manifest {mpath}: {e}") from e
    if raw.get("schema_version") != 1:
        raise DataIOError(f"unsupported dataset schema {raw.get('schema_version')}")
    entries = [ManifestEntry(**e) for e in raw["entries"]]
    ids = [e.sample_id for e in entries]
    if len(set(ids)) != len(ids):
        raise DataIOError("duplicate sample ids in manifest")
    return DatasetManifest(root_path=str(path), split=raw["split"], entries=entries)


def read_sample(manifest: DatasetManifest, entry: ManifestEntry) -> TryOnSample:
    arrays = {}
    for name in SAMPLE_FIELDS:
        if name not in entry.files:
            raise DataIOError(f"sample {entry.sample_id}: missing field {name} in manifest")
        fpath = os.path.join(manifest.root_path, "samples", entry.files[name])
        try:
            arrays[name] = tensor_io.read_tensor(fpath)
        except DataIOError as e:
            raise DataIOError(f"sample {entry.sample_id}: {e}") from e
    return TryOnSample(seed=entry.seed, **arrays)


def read_dataset(path) -> Iterator[TryOnSample]:
    """Iterate samples in manifest order. Raises DataIOError naming the sample."""
    manifest = read_manifest(path)
    for entry in manifest.entries:
        yield read_sample(manifest, entry)
