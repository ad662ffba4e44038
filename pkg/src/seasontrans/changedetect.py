"""PCA + k-means change detection over a difference image.

Eigenvectors are learned from non-overlapping blocks of the difference
image; every pixel's neighborhood is projected onto the leading
eigenvectors and the projections are clustered into two groups.  The
cluster whose pixels carry the larger mean difference magnitude is labeled
changed, so the changed/unchanged semantics never depend on k-means label
numbering.
"""

from dataclasses import dataclass

import numpy as np
import torch
from numpy.lib.stride_tricks import sliding_window_view
from sklearn.cluster import KMeans

LUMINANCE_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass
class PcakmConfig:
    block: int = 4
    components: int = 3
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.block < 2:
            raise ValueError("block size must be at least 2")
        if not 1 <= self.components <= self.block ** 2:
            raise ValueError("components must be in [1, block^2]")


def _to_chw(img):
    arr = img.detach().cpu().numpy() if isinstance(img, torch.Tensor) else np.asarray(img)
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise ValueError(f"expected a [3, H, W] image, got shape {arr.shape}")
    return arr.astype(np.float64)


def difference_image(a, b) -> np.ndarray:
    """Absolute difference of luminance grayscales, [H, W] float."""
    a = _to_chw(a)
    b = _to_chw(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    wr, wg, wb = LUMINANCE_WEIGHTS
    gray_a = wr * a[0] + wg * a[1] + wb * a[2]
    gray_b = wr * b[0] + wg * b[1] + wb * b[2]
    return np.abs(gray_a - gray_b)


def _pad_to_multiple(diff, h):
    rows = (-diff.shape[0]) % h
    cols = (-diff.shape[1]) % h
    return np.pad(diff, ((0, rows), (0, cols)), mode="edge")


def pcakm(diff, cfg: PcakmConfig | None = None) -> np.ndarray:
    """Binary change map (uint8 [H, W]) from a difference image."""
    cfg = cfg or PcakmConfig()
    diff = np.asarray(diff, dtype=np.float64)
    if diff.ndim != 2:
        raise ValueError(f"expected a 2-d difference image, got shape {diff.shape}")
    if not np.isfinite(diff).all():
        raise ValueError("difference image contains non-finite values")
    h = cfg.block
    original_shape = diff.shape
    padded = _pad_to_multiple(diff, h)
    ph, pw = padded.shape

    # eigenbasis from non-overlapping blocks
    blocks = padded.reshape(ph // h, h, pw // h, h).transpose(0, 2, 1, 3).reshape(-1, h * h)
    mean_vec = blocks.mean(axis=0)
    centered = blocks - mean_vec
    cov = centered.T @ centered / max(1, centered.shape[0])
    eigvals, eigvecs = np.linalg.eigh(cov)
    basis = eigvecs[:, np.argsort(eigvals)[::-1][:cfg.components]]

    # per-pixel neighborhood projections
    before = h // 2
    after = h - 1 - before
    windows = sliding_window_view(
        np.pad(padded, ((before, after), (before, after)), mode="edge"), (h, h))
    features = (windows.reshape(ph * pw, h * h) - mean_vec) @ basis

    spread = features.max(axis=0) - features.min(axis=0)
    if float(spread.max(initial=0.0)) < 1e-9:
        return np.zeros(original_shape, dtype=np.uint8)

    km = KMeans(n_clusters=2, init="k-means++", n_init=1,
                max_iter=cfg.kmeans_max_iter, tol=cfg.kmeans_tol,
                random_state=cfg.seed)
    labels = km.fit_predict(features).reshape(ph, pw)

    # magnitude-anchored semantics: the higher-difference cluster is "changed"
    mean_mag = [padded[labels == k].mean() if (labels == k).any() else -np.inf for k in (0, 1)]
    changed_label = int(np.argmax(mean_mag))
    change_map = (labels == changed_label).astype(np.uint8)
    return change_map[:original_shape[0], :original_shape[1]]


def detect_with_translation(a, b, model, direction: str, cfg: PcakmConfig | None = None) -> np.ndarray:
    """Translate the off-domain image, then run difference + PCAKM.

    ``a`` is the t1 (domain X) image and ``b`` the t2 (domain Y) image.
    Direction "xy" translates ``a`` into domain Y and compares there;
    "yx" translates ``b`` into domain X.
    """
    if direction == "xy":
        diff = difference_image(model.translate(a, "xy"), b)
    elif direction == "yx":
        diff = difference_image(a, model.translate(b, "yx"))
    else:
        raise ValueError(f"direction must be 'xy' or 'yx', got {direction!r}")
    return pcakm(diff, cfg)
