"""Shared test utilities: an autograd-independent finite-difference oracle."""

import numpy as np
import torch


def finite_difference_gradients(fn, tensor, h=1e-6, coords=None):
    """Central-difference gradient of scalar fn() w.r.t. tensor.data.

    Independent of autograd: perturbs raw values and re-evaluates.  When
    ``coords`` is given only those flat indices are estimated.
    """
    flat = tensor.data.reshape(-1)
    if coords is None:
        coords = range(flat.numel())
    grads = {}
    with torch.no_grad():
        for i in coords:
            original = flat[i].item()
            flat[i] = original + h
            plus = float(fn())
            flat[i] = original - h
            minus = float(fn())
            flat[i] = original
            grads[i] = (plus - minus) / (2.0 * h)
    return grads


def gradcheck_against_fd(fn, tensors, rel_tol, h=1e-6, max_coords_per_tensor=None, seed=0):
    """Compare autograd gradients of scalar fn() against central differences.

    Returns the worst relative error seen.  ``tensors`` must be leaf
    float64 tensors with requires_grad=True.
    """
    for t in tensors:
        if t.grad is not None:
            t.grad = None
    loss = fn()
    loss.backward()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for t in tensors:
        n = t.numel()
        if max_coords_per_tensor is not None and n > max_coords_per_tensor:
            coords = sorted(rng.choice(n, size=max_coords_per_tensor, replace=False).tolist())
        else:
            coords = range(n)
        fd = finite_difference_gradients(fn, t, h=h, coords=coords)
        analytic = t.grad.reshape(-1)
        for i, fd_val in fd.items():
            an_val = analytic[i].item()
            err = abs(an_val - fd_val) / max(abs(an_val) + abs(fd_val), 1e-4)
            worst = max(worst, err)
            assert err < rel_tol, (
                f"gradient mismatch at flat index {i}: analytic {an_val:.10g} "
                f"vs finite-difference {fd_val:.10g} (rel err {err:.3g})")
    return worst


def random_projection_loss(module_or_fn, x, seed=0):
    """Scalar loss = fixed random projection of the output; makes every
    output coordinate contribute to the gradient."""
    gen = torch.Generator().manual_seed(seed)

    def fn():
        out = module_or_fn(x)
        if not hasattr(fn, "proj"):
            fn.proj = torch.randn(out.shape, generator=gen, dtype=out.dtype)
        return (out * fn.proj).sum()

    return fn
