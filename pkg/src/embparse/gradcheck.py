"""Finite-difference verification of analytic gradients."""

import numpy as np

from .tensor import NumericError, backward

FD_STEP = 1e-5
REL_FLOOR = 1e-8


def gradient_check(f, params, h=FD_STEP):
    """Compare analytic gradients of a scalar function against central differences.

    ``f`` takes no arguments, is deterministic (dropout disabled), and returns
    a scalar Tensor computed from ``params``, a sequence of tensors whose
    coordinates are all perturbed in turn.  Returns the worst relative error
    max(|analytic - numeric|) / max(|analytic|, |numeric|, 1e-8) over every
    coordinate of every parameter.
    """
    params = list(params)
    for p in params:
        p.grad = None
    loss = f()
    if not np.isfinite(loss.data):
        raise NumericError("gradient_check: loss is not finite")
    backward(loss)
    analytic = []
    for p in params:
        g = np.zeros_like(p.data) if p.grad is None else p.grad.copy()
        if not np.isfinite(g).all():
            raise NumericError("gradient_check: analytic gradient is not finite")
        analytic.append(g)

    worst = 0.0
    for p, ana in zip(params, analytic):
        flat = p.data.reshape(-1)
        ana_flat = ana.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            hi = float(f().data)
            flat[i] = orig - h
            lo = float(f().data)
            flat[i] = orig
            if not (np.isfinite(hi) and np.isfinite(lo)):
                raise NumericError("gradient_check: perturbed loss is not finite")
            num = (hi - lo) / (2.0 * h)
            denom = max(abs(num), abs(ana_flat[i]), REL_FLOOR)
            err = abs(num - ana_flat[i]) / denom
            if err > worst:
                worst = err
    return worst
