"""Shared fixtures for the network-level tests."""
import numpy as np

from lfpforecast.models import ArchitectureConfig, InputMode, build_wclsa, build_wcoh_clsa
from lfpforecast.nn.tensor import add, mse_loss, mul
from lfpforecast.wavelet import WaveletParams

from .oracles import central_difference, norm_relative_error


def random_clsa(kind, seed, n_scales=4, steps=3, batch=2, filters=(3, 2), mode=InputMode.COHERENCE_PLUS_SCALOGRAMS):
    """Small randomized network plus a matching random input sequence and target."""
    rng = np.random.default_rng(seed)
    arch = ArchitectureConfig(encoder_filters=filters, mlp_hidden=6, input_mode=mode)
    wav = WaveletParams(n_scales=n_scales)
    model = build_wclsa(arch, wav, seed=seed) if kind == "WCLSA" else build_wcoh_clsa(arch, wav, seed=seed)
    for p in model.net.parameters():
        p.data = rng.uniform(-0.6, 0.6, p.shape)
    feats = rng.normal(size=(batch, steps, n_scales, 1, model.n_input_channels))
    target = rng.normal(size=(batch, model.net.n_heads))
    return model, feats, target


def network_gradient_errors(model, feats, target, recon_weight=0.1, directions=None, seed=0, eps=None):
    """Per-parameter relative error between backward() and central differences.

    With ``directions=None`` every entry is perturbed. Otherwise each parameter
    tensor is probed along that many random unit directions, comparing the
    directional derivative g.v against a five-point central difference. The
    higher-order stencil keeps truncation error negligible at a step large
    enough to avoid cancellation on the small decoder gradients.
    """
    net = model.net
    named = net.named_parameters()
    params = list(named.values())

    def loss():
        pred, recon = net.forward(feats, recon_weight=recon_weight)
        total = mse_loss(pred, target)
        return total if recon is None else add(total, mul(recon, recon_weight))

    for p in params:
        p.grad = None
    loss().backward(params)
    analytic = [p.grad.copy() for p in params]
    if directions is None:
        numeric = central_difference(lambda: float(loss().data), [p.data for p in params], eps or 1e-5)
        return {name: norm_relative_error(a, n) for name, a, n in zip(named, analytic, numeric)}

    rng = np.random.default_rng(seed)
    h = eps or 1e-3
    errors = {}
    for name, p, g in zip(named, params, analytic):
        worst = 0.0
        base = p.data.copy()
        for _ in range(directions):
            v = rng.standard_normal(p.shape)
            v /= np.linalg.norm(v)
            f = {}
            for m in (-2, -1, 1, 2):
                p.data[...] = base + m * h * v
                f[m] = float(loss().data)
            p.data[...] = base
            numeric = (f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * h)
            worst = max(worst, norm_relative_error(np.sum(g * v), numeric))
        errors[name] = worst
    return errors
