import pytest
import torch
from torch import nn

from seasontrans.generator import (GeneratorConfig, TranslationGenerator,
                                   count_parameters, estimate_generator_gflops)

from helpers import gradcheck_against_fd, random_projection_loss

# frozen once from the analytic layer-by-layer summation oracle
FULL_SCALE_PARAMETERS = 11_378_233


def tiny_generator(n_blocks=2):
    # widths [4, 8, 16]
    return TranslationGenerator(GeneratorConfig(scale=4 / 64, n_blocks=n_blocks))


class TestForward:
    def test_shape_preserved_256(self):
        g = TranslationGenerator(GeneratorConfig(scale=0.125))
        out = g(torch.rand(3, 256, 256) * 2 - 1)
        assert out.shape == (3, 256, 256)

    def test_shape_preserved_64(self):
        g = tiny_generator()
        out = g(torch.rand(3, 64, 64) * 2 - 1)
        assert out.shape == (3, 64, 64)

    def test_zero_final_layer_gives_zero_output(self):
        g = tiny_generator()
        final_conv = g.decoder[-2]
        assert isinstance(final_conv, nn.Conv2d) and final_conv.out_channels == 3
        with torch.no_grad():
            final_conv.weight.zero_()
            final_conv.bias.zero_()
        out = g(torch.randn(3, 16, 16).clamp(-1, 1))
        assert (out == 0).all()

    def test_output_bounded(self):
        g = tiny_generator()
        for _ in range(3):
            out = g(torch.rand(3, 32, 32) * 2 - 1)
            assert out.abs().max() <= 1.0

    def test_rejects_bad_shapes(self):
        g = tiny_generator()
        with pytest.raises(ValueError):
            g(torch.zeros(3, 30, 32))
        with pytest.raises(ValueError):
            g(torch.zeros(3, 32, 30))
        with pytest.raises(ValueError):
            g(torch.zeros(1, 32, 32))

    def test_deterministic_forward(self):
        g = tiny_generator()
        x = torch.rand(3, 32, 32) * 2 - 1
        with torch.no_grad():
            a = g(x)
            b = g(x)
        assert torch.equal(a, b)

    def test_batched_and_single_agree(self):
        g = tiny_generator()
        x = torch.rand(2, 3, 32, 32) * 2 - 1
        with torch.no_grad():
            batched = g(x)
            singles = torch.stack([g(x[0]), g(x[1])])
        assert torch.allclose(batched, singles, atol=1e-6)


class TestParameters:
    def test_empty_module_counts_zero(self):
        assert count_parameters(nn.Sequential()) == 0

    def test_doubling_width_quadruples_conv_params(self):
        base = count_parameters(TranslationGenerator(GeneratorConfig(scale=0.25)))
        doubled = count_parameters(TranslationGenerator(GeneratorConfig(scale=0.5)))
        assert 3.6 < doubled / base < 4.0

    def test_full_scale_golden_value(self):
        assert count_parameters(TranslationGenerator(GeneratorConfig())) == FULL_SCALE_PARAMETERS

    def test_exactly_nine_blocks_by_default(self):
        g = TranslationGenerator(GeneratorConfig(scale=0.125))
        assert len(g.blocks) == 9

    def test_gflops_positive_and_scales_with_area(self):
        cfg = GeneratorConfig(scale=0.25)
        small = estimate_generator_gflops(cfg, 64)
        large = estimate_generator_gflops(cfg, 128)
        assert small > 0
        assert large / small == pytest.approx(4.0)


class TestGradients:
    def test_gradient_matches_finite_differences_tiny(self):
        torch.manual_seed(7)
        g = tiny_generator(n_blocks=2).double()
        x = (torch.rand(3, 16, 16, dtype=torch.float64) * 1.6 - 0.8).requires_grad_(True)
        fn = random_projection_loss(lambda t: g(t.unsqueeze(0)), x, seed=17)
        tensors = [x] + list(g.parameters())
        gradcheck_against_fd(fn, tensors, rel_tol=1e-3, max_coords_per_tensor=6)
