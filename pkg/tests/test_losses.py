import numpy as np
import pytest
import torch

from seasontrans import losses


class TestGanLosses:
    def test_generator_examples(self):
        assert losses.gan_loss_generator(torch.tensor([1.0, 1.0])).item() == 0.0
        assert losses.gan_loss_generator(torch.tensor([0.0])).item() == 1.0
        assert abs(losses.gan_loss_generator(torch.tensor([0.5])).item() - 0.25) < 1e-9

    def test_discriminator_examples(self):
        perfect = losses.gan_loss_discriminator(torch.tensor([1.0]), torch.tensor([0.0]))
        assert perfect.item() == 0.0
        inverted = losses.gan_loss_discriminator(torch.tensor([0.0]), torch.tensor([1.0]))
        assert inverted.item() == 2.0
        mixed = losses.gan_loss_discriminator(torch.tensor([0.8]), torch.tensor([0.3]))
        assert abs(mixed.item() - 0.13) < 1e-9

    def test_empty_batches_rejected(self):
        with pytest.raises(ValueError):
            losses.gan_loss_generator(torch.zeros(0))
        with pytest.raises(ValueError):
            losses.gan_loss_discriminator(torch.zeros(0), torch.zeros(1))

    def test_minima(self):
        grid = torch.linspace(0, 1, 101)
        gen = ((grid - 1) ** 2)
        assert grid[gen.argmin()].item() == 1.0
        best_real = torch.tensor([1.0])
        best_fake = torch.tensor([0.0])
        base = losses.gan_loss_discriminator(best_real, best_fake).item()
        for real, fake in [(0.9, 0.0), (1.0, 0.1), (0.5, 0.5)]:
            assert losses.gan_loss_discriminator(torch.tensor([real]), torch.tensor([fake])).item() > base


class TestReconstructionLosses:
    def test_cycle_examples(self):
        x = torch.zeros(3, 4, 4)
        assert losses.cycle_loss(x, x).item() == 0.0
        assert abs(losses.cycle_loss(x, torch.full_like(x, 0.5)).item() - 0.5) < 1e-9
        a = torch.tensor([0.0, 1.0])
        b = torch.tensor([1.0, 0.0])
        assert abs(losses.cycle_loss(a, b).item() - 1.0) < 1e-9

    def test_identity_examples(self):
        y = torch.rand(3, 2, 2)
        assert losses.identity_loss(y, y).item() == 0.0
        assert abs(losses.identity_loss(y, y + 0.25).item() - 0.25) < 1e-9
        diffs = torch.tensor([-0.2, 0.4])
        assert abs(losses.identity_loss(torch.zeros(2), diffs).item() - 0.3) < 1e-9

    def test_metric_properties(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a, b, c = (torch.tensor(rng.normal(size=8)) for _ in range(3))
            ab = losses.cycle_loss(a, b).item()
            ba = losses.cycle_loss(b, a).item()
            assert abs(ab - ba) < 1e-12
            ac = losses.cycle_loss(a, c).item()
            cb = losses.cycle_loss(c, b).item()
            assert ab <= ac + cb + 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            losses.cycle_loss(torch.zeros(2, 2), torch.zeros(2, 3))


class TestStyleLoss:
    def test_examples(self):
        v = torch.tensor([1.0, 2.0, 0.0, 4.0])
        assert losses.style_loss(v, v).item() == 0.0
        w = torch.tensor([0.0, 2.0, 0.0, 1.0])
        assert abs(losses.style_loss(v, w).item() - 1.0) < 1e-9
        assert losses.style_loss(v, w).item() == losses.style_loss(w, v).item()

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            losses.style_loss(torch.zeros(4), torch.zeros(9))


class TestObjectives:
    def test_generator_objective_examples(self):
        zero = losses.generator_objective(0.0, 0.0, 0.0)
        assert zero.total == 0.0
        report = losses.generator_objective(1.0, 0.1, 0.0)
        assert abs(report.total - 2.0) < 1e-9

    def test_generator_objective_monotone(self):
        rng = np.random.default_rng(1)
        base = rng.uniform(0, 1, size=3)
        total0 = losses.generator_objective(*base).total
        for i in range(3):
            bumped = base.copy()
            bumped[i] += 0.5
            assert losses.generator_objective(*bumped).total > total0

    def test_discriminator_objective_examples(self):
        assert losses.discriminator_objective(0.0, 0.0).total == 0.0
        assert abs(losses.discriminator_objective(0.13, 1.0).total - 1.13) < 1e-9
        # without the style term this is the plain least-squares objective
        gan = losses.gan_loss_discriminator(torch.tensor([0.8]), torch.tensor([0.3])).item()
        assert losses.discriminator_objective(gan, 0.0).total == pytest.approx(gan)

    def test_system_objective_weighted_sum(self):
        rng = np.random.default_rng(2)
        for _ in range(25):
            g1, s1, g2, s2, cyc = rng.uniform(0, 2, size=5)
            total = losses.system_objective(g1, s1, g2, s2, cyc)
            assert abs(total - (g1 + s1 + g2 + s2 + 10.0 * cyc)) < 1e-9

    def test_all_components_nonnegative_and_finite(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            d = torch.tensor(rng.uniform(0, 1, size=4))
            a = torch.tensor(rng.normal(size=6))
            b = torch.tensor(rng.normal(size=6))
            values = [losses.gan_loss_generator(d).item(),
                      losses.gan_loss_discriminator(d, d).item(),
                      losses.cycle_loss(a, b).item(),
                      losses.style_loss(a, b).item()]
            assert all(np.isfinite(v) and v >= 0 for v in values)
