"""Translation-quality metrics over pluggable feature extractors, plus
change-detection confusion scoring.

Extractors map an image to (feature vector, class probabilities).  The
``tiny-cnn`` extractor is a small fixed-seed CNN so the metrics run
hermetically at desk scale; ``pretrained-inception`` gives full-scale
parity but needs downloadable torchvision weights.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import torch
import torch.nn.functional as F
from torch import nn


class ExtractorUnavailable(RuntimeError):
    pass


def _resize_batch(images, size: int) -> torch.Tensor:
    """Stack images of possibly different sizes into one [N, 3, size, size]
    float batch."""
    if isinstance(images, torch.Tensor):
        if images.dim() == 3:
            images = images.unsqueeze(0)
        return F.interpolate(images.float(), size=(size, size), mode="bilinear",
                             align_corners=False)
    resized = []
    for img in images:
        t = img if isinstance(img, torch.Tensor) else torch.as_tensor(np.asarray(img))
        resized.append(F.interpolate(t.float().unsqueeze(0), size=(size, size),
                                     mode="bilinear", align_corners=False))
    if not resized:
        raise ValueError("empty image set")
    return torch.cat(resized)


class TinyCnnExtractor(nn.Module):
    """Deterministic small CNN: fixed architecture, fixed-seed weights.

    Inputs are [3, H, W] tensors in [-1, 1] (any H, W); resized to 32x32
    internally.  Features are the pooled conv activations, class
    probabilities a softmax over ``num_classes`` logits.
    """

    name = "tiny-cnn"

    def __init__(self, seed: int = 0, feature_dim: int = 32, num_classes: int = 8):
        super().__init__()
        self.feature_dim = feature_dim
        self.num_classes = num_classes
        with torch.random.fork_rng():
            torch.manual_seed(seed)
            self.conv1 = nn.Conv2d(3, 16, 3, stride=2, padding=1)
            self.conv2 = nn.Conv2d(16, feature_dim, 3, stride=2, padding=1)
            self.head = nn.Linear(feature_dim, num_classes)
        self.eval()

    @torch.no_grad()
    def extract(self, images):
        """images: iterable of [3, H, W] (sizes may differ) or one
        [N, 3, H, W] tensor.  Returns (features [N, d], class_probs [N, k])
        numpy arrays."""
        x = _resize_batch(images, 32)
        h = torch.relu(self.conv1(x))
        h = torch.relu(self.conv2(h))
        feats = F.adaptive_avg_pool2d(h, 1).reshape(h.shape[0], -1)
        probs = torch.softmax(self.head(feats), dim=1)
        return feats.numpy().astype(np.float64), probs.numpy().astype(np.float64)


class InceptionExtractor(nn.Module):
    """Pretrained Inception-v3 features (2048-d pool) and class softmax.

    Requires torchvision weights on disk or a reachable download; raises
    ExtractorUnavailable otherwise.
    """

    name = "pretrained-inception"

    def __init__(self):
        super().__init__()
        try:
            from torchvision.models import Inception_V3_Weights, inception_v3
            self.net = inception_v3(weights=Inception_V3_Weights.DEFAULT)
        except Exception as exc:
            raise ExtractorUnavailable(
                "pretrained-inception weights are unavailable in this environment "
                f"({exc}); use the 'tiny-cnn' extractor instead"
            ) from exc
        self.feature_dim = self.net.fc.in_features
        self.num_classes = 1000
        self.eval()

    @torch.no_grad()
    def extract(self, images):
        x = _resize_batch(images, 299)
        net = self.net
        feats = []
        probs = []
        for chunk in torch.split(x, 16):
            h = net.Conv2d_1a_3x3(chunk)
            h = net.Conv2d_2a_3x3(h)
            h = net.Conv2d_2b_3x3(h)
            h = net.maxpool1(h)
            h = net.Conv2d_3b_1x1(h)
            h = net.Conv2d_4a_3x3(h)
            h = net.maxpool2(h)
            h = net.Mixed_5b(h)
            h = net.Mixed_5c(h)
            h = net.Mixed_5d(h)
            h = net.Mixed_6a(h)
            h = net.Mixed_6b(h)
            h = net.Mixed_6c(h)
            h = net.Mixed_6d(h)
            h = net.Mixed_6e(h)
            h = net.Mixed_7a(h)
            h = net.Mixed_7b(h)
            h = net.Mixed_7c(h)
            pooled = F.adaptive_avg_pool2d(h, 1).reshape(h.shape[0], -1)
            feats.append(pooled)
            probs.append(torch.softmax(net.fc(pooled), dim=1))
        return (torch.cat(feats).numpy().astype(np.float64),
                torch.cat(probs).numpy().astype(np.float64))


def get_extractor(name: str, seed: int = 0):
    if name == "tiny-cnn":
        return TinyCnnExtractor(seed=seed)
    if name == "pretrained-inception":
        return InceptionExtractor()
    raise ValueError(f"unknown extractor {name!r}; choose 'tiny-cnn' or 'pretrained-inception'")


def inception_score_from_probs(probs: np.ndarray, splits: int = 1) -> float:
    """exp(mean KL(p(y|x) || p(y))) from an [N, k] class-probability array."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[0] < 2:
        raise ValueError("need class probabilities for at least 2 images")
    scores = []
    for part in np.array_split(probs, splits):
        marginal = part.mean(axis=0, keepdims=True)
        kl = part * (np.log(part + 1e-16) - np.log(marginal + 1e-16))
        scores.append(np.exp(kl.sum(axis=1).mean()))
    return float(np.mean(scores))


def inception_score(images, extractor, splits: int = 1) -> float:
    """IS over a set of images; single-estimate unless ``splits`` > 1."""
    _, probs = extractor.extract(images)
    return inception_score_from_probs(probs, splits=splits)


def frechet_distance(mu1, cov1, mu2, cov2, eps: float = 1e-6) -> float:
    """||mu1-mu2||^2 + Tr(C1 + C2 - 2 (C1 C2)^(1/2)), diagonals regularized."""
    mu1, mu2 = np.atleast_1d(mu1).astype(np.float64), np.atleast_1d(mu2).astype(np.float64)
    cov1, cov2 = np.atleast_2d(cov1).astype(np.float64), np.atleast_2d(cov2).astype(np.float64)
    if mu1.shape != mu2.shape:
        raise ValueError("feature dimension mismatch")
    d = mu1.shape[0]
    offset = eps * np.eye(d)
    covmean = scipy.linalg.sqrtm((cov1 + offset) @ (cov2 + offset))
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    diff = mu1 - mu2
    return float(diff @ diff + np.trace(cov1 + cov2 - 2.0 * covmean))


def fid(features_a, features_b, eps: float = 1e-6) -> float:
    """Frechet distance between the Gaussian fits of two feature sets."""
    a = np.atleast_2d(np.asarray(features_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(features_b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"feature dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise ValueError("need at least 2 samples per set")
    mu_a, cov_a = a.mean(axis=0), np.cov(a, rowvar=False)
    mu_b, cov_b = b.mean(axis=0), np.cov(b, rowvar=False)
    return frechet_distance(mu_a, cov_a, mu_b, cov_b, eps=eps)


def polynomial_kernel(x, y, degree: int = 3):
    """k(x, y) = (x.y / d + 1)^degree, the KID kernel."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    d = x.shape[1]
    return (x @ y.T / d + 1.0) ** degree


def kid(features_a, features_b) -> float:
    """Unbiased squared MMD with the cubic polynomial kernel.

    May be slightly negative by unbiasedness; the raw value is returned.
    """
    a = np.atleast_2d(np.asarray(features_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(features_b, dtype=np.float64))
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"feature dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    m, n = a.shape[0], b.shape[0]
    if m < 2 or n < 2:
        raise ValueError("need at least 2 samples per set")
    kaa = polynomial_kernel(a, a)
    kbb = polynomial_kernel(b, b)
    kab = polynomial_kernel(a, b)
    term_a = (kaa.sum() - np.trace(kaa)) / (m * (m - 1))
    term_b = (kbb.sum() - np.trace(kbb)) / (n * (n - 1))
    term_ab = 2.0 * kab.sum() / (m * n)
    return float(term_a + term_b - term_ab)


@dataclass
class ConfusionSummary:
    FA: int
    MA: int
    OE: int
    PCC: float
    N: int


def score_change_map(predicted, truth) -> ConfusionSummary:
    """False alarms, missed alarms, overall errors, and percent correct."""
    pred = np.asarray(predicted.detach().cpu() if isinstance(predicted, torch.Tensor) else predicted)
    true = np.asarray(truth.detach().cpu() if isinstance(truth, torch.Tensor) else truth)
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {true.shape}")
    pred = pred.astype(bool)
    true = true.astype(bool)
    fa = int((pred & ~true).sum())
    ma = int((~pred & true).sum())
    n = pred.size
    oe = fa + ma
    return ConfusionSummary(FA=fa, MA=ma, OE=oe, PCC=100.0 * (n - oe) / n, N=n)
