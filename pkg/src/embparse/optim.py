"""Adam with bias correction over named parameter tensors."""

import numpy as np

from .tensor import ShapeError


class Adam:
    """Standard Adam; moment buffers are allocated per parameter on first step.

    Parameters with requires_grad unset or a missing gradient are skipped,
    which is how frozen tables stay frozen during training.
    """

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.params = dict(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self.first_moment = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.second_moment = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self):
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name, p in self.params.items():
            if not p.requires_grad or p.grad is None:
                continue
            g = p.grad
            m = self.first_moment[name]
            v = self.second_moment[name]
            if m.shape != p.data.shape:
                raise ShapeError(
                    f"adam: state shape {m.shape} does not match parameter "
                    f"'{name}' of shape {p.data.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            m_hat = m / bc1
            v_hat = v / bc2
            p.data -= self.lr * m_hat / (np.sqrt(v_hat) + self.epsilon)
