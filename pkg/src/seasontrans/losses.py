"""Objective terms for the translation networks.

Least-squares adversarial losses over [0, 1] decisions, L1 cycle and
identity reconstruction penalties, and the L1 style-vector distance, plus
the weighted compositions used to train the generators and discriminators.
All L1 norms reduce by element mean so loss magnitudes are independent of
image resolution.
"""

from dataclasses import dataclass

import torch

LAMBDA_CYCLE = 10.0
LAMBDA_IDENTITY = 5.0


@dataclass
class LossReport:
    gan: float = 0.0
    cycle: float = 0.0
    identity: float = 0.0
    style: float = 0.0
    total: float = 0.0


def _as_tensor(x):
    return x if isinstance(x, torch.Tensor) else torch.as_tensor(x, dtype=torch.float64)


def gan_loss_generator(decisions) -> torch.Tensor:
    """Mean of (d - 1)^2; minimized when the discriminator is fully fooled."""
    d = _as_tensor(decisions)
    if d.numel() == 0:
        raise ValueError("empty decision batch")
    return ((d - 1.0) ** 2).mean()


def gan_loss_discriminator(real_decisions, fake_decisions) -> torch.Tensor:
    """Mean (d_real - 1)^2 + mean d_fake^2."""
    real = _as_tensor(real_decisions)
    fake = _as_tensor(fake_decisions)
    if real.numel() == 0 or fake.numel() == 0:
        raise ValueError("empty decision batch")
    return ((real - 1.0) ** 2).mean() + (fake ** 2).mean()


def cycle_loss(x, x_rec) -> torch.Tensor:
    """Mean absolute reconstruction error after a round trip."""
    x, x_rec = _as_tensor(x), _as_tensor(x_rec)
    if x.shape != x_rec.shape:
        raise ValueError(f"shape mismatch {tuple(x.shape)} vs {tuple(x_rec.shape)}")
    return (x_rec - x).abs().mean()


def identity_loss(y, y_id) -> torch.Tensor:
    """Mean absolute error of the generator applied to its own target domain."""
    return cycle_loss(y, y_id)


def style_loss(s_fake, s_real) -> torch.Tensor:
    """Mean absolute difference between two style vectors (zeros included)."""
    s_fake, s_real = _as_tensor(s_fake), _as_tensor(s_real)
    if s_fake.shape != s_real.shape:
        raise ValueError(f"style vector length mismatch {tuple(s_fake.shape)} vs {tuple(s_real.shape)}")
    return (s_fake - s_real).abs().mean()


def generator_objective(gan, cycle, identity, style=0.0, style_weight=0.0,
                        lambda_cycle=LAMBDA_CYCLE, lambda_identity=LAMBDA_IDENTITY) -> LossReport:
    """One direction's generator objective: gan + lambda*cycle + lambda_id*identity.

    The style term participates only when ``style_weight`` > 0 (off by
    default; the style loss trains the discriminator side).
    """
    total = gan + lambda_cycle * cycle + lambda_identity * identity + style_weight * style
    return LossReport(gan=float(gan), cycle=float(cycle), identity=float(identity),
                      style=float(style), total=float(total))


def discriminator_objective(gan, style) -> LossReport:
    """One discriminator's objective: gan + style."""
    total = gan + style
    return LossReport(gan=float(gan), style=float(style), total=float(total))


def system_objective(gan_xy, style_xy, gan_yx, style_yx, cycle, lambda_cycle=LAMBDA_CYCLE) -> float:
    """Combined full-system objective: both GAN terms, both style terms,
    and the cycle term weighted by lambda."""
    return float(gan_xy + style_xy + gan_yx + style_yx + lambda_cycle * cycle)
