"""Datasets: image-folder ingestion and a synthetic season-pair generator.

The synthetic scenes model the confound that motivates seasonal
translation: vegetation is rendered green-dominant in summer and
brown-dominant in winter while structures keep season-invariant colors, so
a naive difference image flags vegetation as change.  Ground-truth masks
mark only the structures added or removed between the two timestamps.
"""

import json
import logging
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from scipy.ndimage import zoom

logger = logging.getLogger(__name__)

IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg"}

# season palettes (RGB, uint8 space)
BACKGROUND_BASE = np.array([152.0, 142.0, 122.0])
VEGETATION_SUMMER = np.array([62.0, 148.0, 70.0])
VEGETATION_WINTER = np.array([168.0, 138.0, 96.0])
STRUCTURE_PALETTE = [
    np.array([92.0, 92.0, 98.0]),
    np.array([158.0, 62.0, 52.0]),
    np.array([205.0, 204.0, 208.0]),
]


def image_to_tensor(arr: np.ndarray) -> torch.Tensor:
    """uint8 [H, W, 3] -> float32 [3, H, W] scaled to [-1, 1]."""
    t = torch.from_numpy(np.ascontiguousarray(arr)).float().permute(2, 0, 1)
    return t / 127.5 - 1.0


def tensor_to_image(t: torch.Tensor) -> np.ndarray:
    """float [3, H, W] in [-1, 1] -> uint8 [H, W, 3]."""
    arr = ((t.detach().clamp(-1.0, 1.0) + 1.0) * 127.5).round().to(torch.uint8)
    return arr.permute(1, 2, 0).cpu().numpy()


class DomainDataset:
    """Images of one domain, yielded as seeded random crops in [-1, 1].

    Files are ordered lexicographically; unreadable files are skipped with
    a warning at construction.  Crop offsets are fully determined by
    (seed, epoch, index).
    """

    def __init__(self, root, crop: int = 256, seed: int = 0, tag: str = "X"):
        self.root = Path(root)
        self.crop = crop
        self.seed = seed
        self.tag = tag
        self.files = []
        for p in sorted(self.root.iterdir()) if self.root.is_dir() else []:
            if p.suffix.lower() not in IMAGE_EXTENSIONS:
                continue
            try:
                with Image.open(p) as im:
                    im.verify()
            except Exception as exc:
                logger.warning("skipping unreadable image %s: %s", p, exc)
                continue
            self.files.append(p)

    def __len__(self):
        return len(self.files)

    def get(self, index: int, epoch: int = 0) -> torch.Tensor:
        path = self.files[index]
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"))
        h, w = arr.shape[:2]
        if h < self.crop or w < self.crop:
            raise ValueError(f"{path} is {w}x{h}, smaller than crop {self.crop}")
        rng = np.random.default_rng([self.seed, epoch, index])
        top = int(rng.integers(0, h - self.crop + 1))
        left = int(rng.integers(0, w - self.crop + 1))
        return image_to_tensor(arr[top:top + self.crop, left:left + self.crop])

    def __getitem__(self, index):
        return self.get(index, epoch=0)


def load_folder(root, crop: int = 256, seed: int = 0, tag: str = "X") -> DomainDataset:
    return DomainDataset(root, crop=crop, seed=seed, tag=tag)


@dataclass
class SyntheticSceneSpec:
    canvas: int = 64
    structure_count: tuple = (3, 6)
    structure_size: tuple = (8, 16)
    vegetation_fraction: float = 0.35
    change_count: int = 2
    texture_noise: float = 5.0
    tint_noise: float = 2.5
    seed: int = 0

    def validate(self):
        if self.canvas < 16:
            raise ValueError("canvas too small")
        if not 0.0 <= self.vegetation_fraction <= 0.9:
            raise ValueError("vegetation fraction must be in [0, 0.9]")
        max_structs = self.structure_count[1] + self.change_count
        worst_area = max_structs * self.structure_size[1] ** 2
        if worst_area > 0.6 * self.canvas ** 2:
            raise ValueError(
                f"infeasible spec: up to {max_structs} structures of side "
                f"{self.structure_size[1]} cannot fit a {self.canvas}x{self.canvas} canvas"
            )


def _vegetation_mask(spec, rng):
    if spec.vegetation_fraction <= 0:
        return np.zeros((spec.canvas, spec.canvas), dtype=bool)
    coarse = max(4, spec.canvas // 8)
    noise = rng.normal(size=(coarse, coarse))
    smooth = zoom(noise, spec.canvas / coarse, order=3)[:spec.canvas, :spec.canvas]
    threshold = np.quantile(smooth, 1.0 - spec.vegetation_fraction)
    return smooth >= threshold


def _place_structures(spec, rng, n, occupied):
    """Non-overlapping axis-aligned rectangles; returns (slices, color) list."""
    placed = []
    lo, hi = spec.structure_size
    attempts = 0
    while len(placed) < n:
        attempts += 1
        if attempts > 200 * max(n, 1):
            raise ValueError("infeasible spec: could not place structures without overlap")
        sh = int(rng.integers(lo, hi + 1))
        sw = int(rng.integers(lo, hi + 1))
        top = int(rng.integers(0, spec.canvas - sh + 1))
        left = int(rng.integers(0, spec.canvas - sw + 1))
        region = (slice(top, top + sh), slice(left, left + sw))
        if occupied[region].any():
            continue
        occupied[region] = True
        color = STRUCTURE_PALETTE[int(rng.integers(0, len(STRUCTURE_PALETTE)))]
        placed.append((region, color))
    return placed


def generate_synthetic(spec: SyntheticSceneSpec):
    """One scene rendered at two timestamps across seasons.

    Returns (summer_t1, winter_t2, change_mask): two [3, H, W] tensors in
    [-1, 1] and a uint8 [H, W] mask marking exactly the pixels of the
    structures added or removed between t1 and t2.  Fully determined by
    ``spec.seed``.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    size = spec.canvas

    vegetation = _vegetation_mask(spec, rng)
    texture = rng.normal(0.0, spec.texture_noise, size=(size, size, 1))

    # terrain shared by both timestamps
    terrain = np.empty((size, size, 3))
    terrain_winter = np.empty_like(terrain)
    terrain[:] = BACKGROUND_BASE
    terrain_winter[:] = BACKGROUND_BASE
    terrain[vegetation] = VEGETATION_SUMMER
    terrain_winter[vegetation] = VEGETATION_WINTER

    occupied = np.zeros((size, size), dtype=bool)
    n_base = int(rng.integers(spec.structure_count[0], spec.structure_count[1] + 1))
    base = _place_structures(spec, rng, n_base, occupied)
    changed = _place_structures(spec, rng, spec.change_count, occupied)
    removed_flags = rng.random(spec.change_count) < 0.5

    mask = np.zeros((size, size), dtype=np.uint8)
    t1 = terrain.copy()
    t2 = terrain_winter.copy()
    for region, color in base:
        t1[region] = color
        t2[region] = color
    for (region, color), removed in zip(changed, removed_flags):
        if removed:
            t1[region] = color  # present at t1 only
        else:
            t2[region] = color  # built between t1 and t2
        mask[region] = 1

    tint_t1 = rng.normal(0.0, spec.tint_noise, size=3)
    tint_t2 = rng.normal(0.0, spec.tint_noise, size=3)
    img1 = np.clip(t1 + texture + tint_t1, 0, 255).astype(np.uint8)
    img2 = np.clip(t2 + texture + tint_t2, 0, 255).astype(np.uint8)
    return image_to_tensor(img1), image_to_tensor(img2), mask


def _scene(spec: SyntheticSceneSpec, stream: int, index: int):
    sub_seed = int(np.random.SeedSequence([spec.seed, stream, index]).generate_state(1)[0])
    return generate_synthetic(replace(spec, seed=sub_seed))


def write_benchmark(root, spec: SyntheticSceneSpec, n_train: int = 24, n_test: int = 8,
                    n_pairs: int = 20) -> Path:
    """Write the synthetic benchmark tree and return the manifest path.

    Layout: trainX/trainY and testX/testY hold unpaired summer and winter
    scenes; pairs/{t1,t2,mask} hold cross-season pairs with ground truth.
    Byte-identical for identical (spec, counts).
    """
    spec.validate()
    root = Path(root)
    for sub in ("trainX", "trainY", "testX", "testY", "pairs/t1", "pairs/t2", "pairs/mask"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    def save(tensor, path):
        Image.fromarray(tensor_to_image(tensor)).save(path)

    for i in range(n_train):
        save(_scene(spec, 0, i)[0], root / "trainX" / f"{i:04d}.png")
        save(_scene(spec, 1, i)[1], root / "trainY" / f"{i:04d}.png")
    for i in range(n_test):
        save(_scene(spec, 2, i)[0], root / "testX" / f"{i:04d}.png")
        save(_scene(spec, 3, i)[1], root / "testY" / f"{i:04d}.png")
    for i in range(n_pairs):
        t1, t2, mask = _scene(spec, 4, i)
        save(t1, root / "pairs" / "t1" / f"{i:04d}.png")
        save(t2, root / "pairs" / "t2" / f"{i:04d}.png")
        Image.fromarray(mask * 255).save(root / "pairs" / "mask" / f"{i:04d}.png")

    manifest = {
        "seed": spec.seed,
        "spec": asdict(spec),
        "counts": {"train_per_domain": n_train, "test_per_domain": n_test, "pairs": n_pairs},
    }
    manifest_path = root / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def load_mask(path) -> np.ndarray:
    """Binary uint8 [H, W] mask from an image file (any nonzero = changed)."""
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"))
    return (arr > 127).astype(np.uint8)


def load_image(path) -> torch.Tensor:
    """Whole image as a [3, H, W] tensor in [-1, 1]."""
    with Image.open(path) as im:
        return image_to_tensor(np.asarray(im.convert("RGB")))


def list_images(root):
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"{root} is not a directory")
    return [p for p in sorted(root.iterdir()) if p.suffix.lower() in IMAGE_EXTENSIONS]
