"""Style discriminator.

A shared conv+SRM encoder feeds two heads: a patch decision head whose
per-patch sigmoid outputs are averaged into one scalar in [0, 1], and a
parameter-free style head that collapses the feature map through four
max/avg pooling-fusion stages into a per-channel vector V and emits the
flattened upper triangle of the correlation matrix V^T V.
"""

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from .srm import SRMLayer

STYLE_MAP_SIZE = 16  # spatial size of M; four 2x poolings then reach 1x1


@dataclass
class DiscriminatorConfig:
    in_channels: int = 3
    base_width: int = 64
    n_stages: int = 4
    scale: float = 1.0

    @classmethod
    def for_image_size(cls, image_size: int, scale: float = 1.0) -> "DiscriminatorConfig":
        """Config whose encoder downsamples ``image_size`` to exactly 16x16."""
        ratio = image_size / STYLE_MAP_SIZE
        n_stages = int(round(math.log2(ratio))) if ratio > 1 else 0
        if image_size != STYLE_MAP_SIZE * 2 ** n_stages or n_stages < 1:
            raise ValueError(f"image size {image_size} cannot reach a 16x16 feature map by stride-2 stages")
        return cls(n_stages=n_stages, scale=scale)

    def widths(self):
        w = max(1, round(self.base_width * self.scale))
        return [w * 2 ** i for i in range(self.n_stages)]


def pooling_pyramid(m: torch.Tensor) -> torch.Tensor:
    """Collapse a [C, 16, 16] (or [N, C, 16, 16]) map to per-channel values.

    Each stage halves the spatial size with a 2x2 max pool and a 2x2 average
    pool fused by element-wise addition; four stages reach 1x1.
    """
    squeeze = m.dim() == 3
    if squeeze:
        m = m.unsqueeze(0)
    if m.shape[-1] != STYLE_MAP_SIZE or m.shape[-2] != STYLE_MAP_SIZE:
        raise ValueError(f"style head needs a 16x16 feature map, got {tuple(m.shape[-2:])}")
    for _ in range(4):
        m = F.max_pool2d(m, 2) + F.avg_pool2d(m, 2)
    v = m.reshape(m.shape[0], m.shape[1])
    return v.squeeze(0) if squeeze else v


def style_correlation_vector(v: torch.Tensor) -> torch.Tensor:
    """Flattened upper triangle (diagonal included) of outer(v, v).

    Input [C] (or [N, C]); output length C*C with the strict lower triangle
    structurally zero.  Contains no learnable parameters.
    """
    squeeze = v.dim() == 1
    if squeeze:
        v = v.unsqueeze(0)
    c = v.shape[1]
    corr = v.unsqueeze(2) * v.unsqueeze(1)  # (n, c, c)
    mask = torch.triu(torch.ones(c, c, dtype=v.dtype, device=v.device))
    out = (corr * mask).reshape(v.shape[0], c * c)
    return out.squeeze(0) if squeeze else out


class StyleDiscriminator(nn.Module):
    """Patch decision in [0, 1] plus channel-correlation style vector."""

    def __init__(self, config: DiscriminatorConfig | None = None):
        super().__init__()
        self.config = config or DiscriminatorConfig()
        widths = self.config.widths()
        layers = []
        c_in = self.config.in_channels
        for w in widths:
            layers += [nn.Conv2d(c_in, w, 4, stride=2, padding=1), SRMLayer(), nn.LeakyReLU(0.2, inplace=True)]
            c_in = w
        self.encoder = nn.Sequential(*layers)
        self.patch_head = nn.Conv2d(c_in, 1, 4, stride=1, padding=1)
        self.feature_channels = c_in

    def encode(self, x):
        squeeze = x.dim() == 3
        if squeeze:
            x = x.unsqueeze(0)
        m = self.encoder(x)
        if m.shape[-1] < STYLE_MAP_SIZE or m.shape[-2] < STYLE_MAP_SIZE:
            raise ValueError(
                f"input {tuple(x.shape[-2:])} leaves a {tuple(m.shape[-2:])} feature map, "
                f"too small for the four-stage pooling pyramid"
            )
        return m.squeeze(0) if squeeze else m

    def decide(self, m):
        """Overlapping patch decisions, sigmoid per patch, averaged."""
        squeeze = m.dim() == 3
        if squeeze:
            m = m.unsqueeze(0)
        probs = torch.sigmoid(self.patch_head(m))
        out = probs.reshape(probs.shape[0], -1).mean(dim=1)
        return out.squeeze(0) if squeeze else out

    @staticmethod
    def aggregate_patch_decisions(patch_probs: torch.Tensor) -> torch.Tensor:
        """Mean of per-patch decisions; the final scalar in [0, 1]."""
        return patch_probs.mean()

    def style_vector(self, m):
        return style_correlation_vector(pooling_pyramid(m))

    def forward(self, x):
        """Returns (decision, style_vector); both heads share the encoding."""
        m = self.encode(x)
        return self.decide(m), self.style_vector(m)
