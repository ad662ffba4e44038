"""Encoder-transformation-decoder generator.

Three convolutional encoder layers, a stack of SRM residual blocks, and a
decoder of two fractionally-strided convolutions plus a final convolution
with tanh output.  All widths are multiplied by ``scale`` so the same
architecture runs at desk scale on CPU.
"""

from dataclasses import dataclass

import torch
from torch import nn

from .srm import SRMConvBlock


@dataclass
class GeneratorConfig:
    in_channels: int = 3
    base_width: int = 64
    n_blocks: int = 9
    scale: float = 1.0

    def widths(self):
        w = max(1, round(self.base_width * self.scale))
        return [w, 2 * w, 4 * w]


class TranslationGenerator(nn.Module):
    """Image-to-image generator preserving shape, output in [-1, 1].

    Encoder: 7x7 stride-1 conv then two 3x3 stride-2 convs (4x spatial
    downsampling).  Transformation: ``n_blocks`` SRMConvBlocks.  Decoder:
    two 3x3 stride-2 transposed convs then a 7x7 conv to 3 channels with
    tanh.  Instance norm + ReLU everywhere except the output layer;
    reflection padding on the 7x7 layers.
    """

    def __init__(self, config: GeneratorConfig | None = None):
        super().__init__()
        self.config = config or GeneratorConfig()
        c = self.config.in_channels
        w1, w2, w3 = self.config.widths()

        self.encoder = nn.Sequential(
            nn.Conv2d(c, w1, 7, padding=3, padding_mode="reflect"),
            nn.InstanceNorm2d(w1),
            nn.ReLU(inplace=True),
            nn.Conv2d(w1, w2, 3, stride=2, padding=1),
            nn.InstanceNorm2d(w2),
            nn.ReLU(inplace=True),
            nn.Conv2d(w2, w3, 3, stride=2, padding=1),
            nn.InstanceNorm2d(w3),
            nn.ReLU(inplace=True),
        )
        self.blocks = nn.Sequential(*[SRMConvBlock(w3) for _ in range(self.config.n_blocks)])
        self.decoder = nn.Sequential(
            nn.ConvTranspose2d(w3, w2, 3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(w2),
            nn.ReLU(inplace=True),
            nn.ConvTranspose2d(w2, w1, 3, stride=2, padding=1, output_padding=1),
            nn.InstanceNorm2d(w1),
            nn.ReLU(inplace=True),
            nn.Conv2d(w1, c, 7, padding=3, padding_mode="reflect"),
            nn.Tanh(),
        )

    def forward(self, x):
        squeeze = x.dim() == 3
        if squeeze:
            x = x.unsqueeze(0)
        if x.shape[1] != self.config.in_channels:
            raise ValueError(f"expected {self.config.in_channels}-channel input, got {x.shape[1]}")
        if x.shape[-2] % 4 or x.shape[-1] % 4:
            raise ValueError(f"spatial dims must be divisible by 4, got {tuple(x.shape[-2:])}")
        y = self.decoder(self.blocks(self.encoder(x)))
        return y.squeeze(0) if squeeze else y


def count_parameters(module: nn.Module) -> int:
    """Exact number of scalar parameters in a module."""
    return sum(p.numel() for p in module.parameters())


def conv_gflops(c_in, c_out, kernel, h_out, w_out) -> float:
    """Multiply-accumulates of one convolution in units of 1e9 (the usual
    GFLOPs convention in translation-model efficiency tables)."""
    return c_in * c_out * kernel * kernel * h_out * w_out / 1e9


def estimate_generator_gflops(config: GeneratorConfig, image_size: int) -> float:
    """Analytic forward-pass GFLOPs of the generator at a square input size."""
    c = config.in_channels
    w1, w2, w3 = config.widths()
    s, s2, s4 = image_size, image_size // 2, image_size // 4
    total = conv_gflops(c, w1, 7, s, s)
    total += conv_gflops(w1, w2, 3, s2, s2)
    total += conv_gflops(w2, w3, 3, s4, s4)
    total += config.n_blocks * 2 * conv_gflops(w3, w3, 3, s4, s4)
    total += conv_gflops(w3, w2, 3, s2, s2)
    total += conv_gflops(w2, w1, 3, s, s)
    total += conv_gflops(w1, c, 7, s, s)
    return total
