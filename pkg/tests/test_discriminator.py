import pytest
import torch

from seasontrans.discriminator import (DiscriminatorConfig, StyleDiscriminator,
                                       pooling_pyramid, style_correlation_vector)

from helpers import gradcheck_against_fd


def desk_discriminator():
    # 64x64 input -> [64, 16, 16] feature map
    return StyleDiscriminator(DiscriminatorConfig.for_image_size(64, scale=0.5))


class TestEncode:
    def test_full_scale_shape(self):
        d = StyleDiscriminator(DiscriminatorConfig())
        m = d.encode(torch.rand(3, 256, 256) * 2 - 1)
        assert m.shape == (512, 16, 16)

    def test_desk_scale_shape(self):
        m = desk_discriminator().encode(torch.rand(3, 64, 64) * 2 - 1)
        assert m.shape == (64, 16, 16)

    def test_zero_image_zero_weights(self):
        d = desk_discriminator()
        with torch.no_grad():
            for p in d.parameters():
                p.zero_()
        m = d.encode(torch.zeros(3, 64, 64))
        assert (m == 0).all()

    def test_too_small_input(self):
        d = desk_discriminator()
        with pytest.raises(ValueError):
            d.encode(torch.zeros(3, 32, 32))

    def test_config_rejects_impossible_sizes(self):
        with pytest.raises(ValueError):
            DiscriminatorConfig.for_image_size(48)
        with pytest.raises(ValueError):
            DiscriminatorConfig.for_image_size(16)


class TestDecide:
    def test_zero_logits_give_half(self):
        d = desk_discriminator()
        with torch.no_grad():
            d.patch_head.weight.zero_()
            d.patch_head.bias.zero_()
        m = d.encode(torch.rand(3, 64, 64))
        assert abs(d.decide(m).item() - 0.5) < 1e-7

    def test_saturated_logits_approach_one(self):
        d = desk_discriminator()
        with torch.no_grad():
            d.patch_head.weight.zero_()
            d.patch_head.bias.fill_(50.0)
        m = d.encode(torch.rand(3, 64, 64))
        assert d.decide(m).item() > 1 - 1e-9

    def test_mean_aggregation(self):
        probs = torch.tensor([0.2, 0.4, 0.6, 0.8])
        assert abs(StyleDiscriminator.aggregate_patch_decisions(probs).item() - 0.5) < 1e-7

    def test_aggregation_permutation_invariant(self):
        probs = torch.rand(15)
        shuffled = probs[torch.randperm(15)]
        a = StyleDiscriminator.aggregate_patch_decisions(probs)
        b = StyleDiscriminator.aggregate_patch_decisions(shuffled)
        assert torch.allclose(a, b, atol=1e-7)


class TestStyleVector:
    def test_hand_case(self):
        v = torch.tensor([1.0, 2.0])
        assert torch.equal(style_correlation_vector(v), torch.tensor([1.0, 2.0, 0.0, 4.0]))

    def test_zero_vector(self):
        assert (style_correlation_vector(torch.zeros(5)) == 0).all()

    def test_structural_zeros(self):
        for c in (2, 4, 8):
            v = torch.randn(c).abs() + 0.1
            s = style_correlation_vector(v)
            assert s.shape == (c * c,)
            grid = s.reshape(c, c)
            lower = torch.tril(torch.ones(c, c), diagonal=-1).bool()
            assert (grid[lower] == 0).all()
            assert (grid[~lower] != 0).all()
            assert int((s == 0).sum()) == c * (c - 1) // 2

    def test_quadratic_scaling(self):
        v = torch.randn(6, dtype=torch.float64)
        alpha = 1.7
        assert torch.allclose(style_correlation_vector(alpha * v),
                              alpha ** 2 * style_correlation_vector(v), atol=1e-9)

    def test_constant_map_pooling(self):
        value = 0.37
        m = torch.full((5, 16, 16), value)
        v = pooling_pyramid(m)
        assert torch.allclose(v, torch.full((5,), value * 16.0), atol=1e-5)

    def test_pyramid_rejects_wrong_size(self):
        with pytest.raises(ValueError):
            pooling_pyramid(torch.zeros(4, 8, 8))

    def test_mask_idempotent(self):
        v = torch.randn(4)
        s = style_correlation_vector(v).reshape(4, 4)
        masked_again = s * torch.triu(torch.ones(4, 4))
        assert torch.equal(s, masked_again)


class TestForward:
    def test_decision_range_and_style_shape(self):
        d = desk_discriminator()
        dec, style = d(torch.rand(3, 64, 64) * 2 - 1)
        assert 0.0 <= dec.item() <= 1.0
        c = d.feature_channels
        assert style.shape == (c * c,)
        assert int((style == 0).sum()) >= c * (c - 1) // 2

    def test_style_head_has_no_parameters(self):
        d = desk_discriminator()
        head_params = set(map(id, d.patch_head.parameters()))
        encoder_params = set(map(id, d.encoder.parameters()))
        all_params = set(map(id, d.parameters()))
        assert all_params == head_params | encoder_params

    def test_gradients_through_both_heads(self):
        torch.manual_seed(9)
        d = StyleDiscriminator(DiscriminatorConfig(n_stages=1, base_width=4)).double()
        x = (torch.rand(3, 32, 32, dtype=torch.float64) * 2 - 1).requires_grad_(True)

        def fn():
            dec, style = d(x)
            return dec.sum() + 0.1 * (style * proj).sum()

        proj = torch.randn(d.feature_channels ** 2, dtype=torch.float64,
                           generator=torch.Generator().manual_seed(21))
        tensors = [x] + list(d.parameters())
        gradcheck_against_fd(fn, tensors, rel_tol=1e-3, max_coords_per_tensor=8)

    def test_style_head_gradient_exact_in_isolation(self):
        # the style path is pure pooling/algebra, so its input gradient is
        # checkable without any parameters involved
        m = torch.randn(3, 16, 16, dtype=torch.float64, requires_grad=True)
        proj = torch.randn(9, dtype=torch.float64,
                           generator=torch.Generator().manual_seed(4))

        def fn():
            return (style_correlation_vector(pooling_pyramid(m)) * proj).sum()

        gradcheck_against_fd(fn, [m], rel_tol=1e-4, max_coords_per_tensor=64)
