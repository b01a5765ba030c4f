"""SGD with momentum and L2 weight decay."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatch


@dataclass
class OptimState:
    velocity: dict = field(default_factory=dict)
    iteration: int = 0


def sgd_step(params, grads, state, lr, momentum=0.9, weight_decay=0.0005):
    """In-place update ``v = momentum*v + g + wd*p; p -= lr*v`` for every key of ``grads``.

    Returns ``(params, state)``.
    """
    for name, g in grads.items():
        p = params[name]
        if g.shape != p.shape:
            raise ShapeMismatch(f"{name}: grad {g.shape} vs param {p.shape}")
        v = state.velocity.get(name)
        if v is None:
            v = state.velocity[name] = np.zeros_like(p)
        v *= momentum
        v += g
        if weight_decay:
            v += weight_decay * p
        p -= lr * v
    state.iteration += 1
    return params, state
