"""Loss terms with analytic gradients.

Every loss returns ``(loss, grad)`` where ``grad`` has the shape of the
prediction it is differentiated against.
"""

from dataclasses import astuple, dataclass

import numpy as np

from .errors import LengthMismatch

TERMS = ("anchor_cls", "anchor_reg", "roi_cls", "roi_reg", "roi_corner")


@dataclass(frozen=True)
class LossWeights:
    anchor_cls: float = 1.0
    anchor_reg: float = 1.0
    roi_cls: float = 1.0
    roi_reg: float = 1.0
    roi_corner: float = 1.0

    def __post_init__(self):
        if any(w < 0 for w in astuple(self)):
            raise ValueError(f"loss weights must be nonnegative: {self}")


@dataclass(frozen=True)
class LossBreakdown:
    anchor_cls: float
    anchor_reg: float
    roi_cls: float
    roi_reg: float
    roi_corner: float
    total: float

    def as_dict(self):
        return {name: getattr(self, name) for name in TERMS + ("total",)}


def smooth_l1(pred, target):
    """Mean smooth-L1 of ``pred - target`` over all elements.

    ``0.5 x**2`` for ``|x| < 1``, ``|x| - 0.5`` otherwise. An empty input has
    zero loss.
    """
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise LengthMismatch(f"pred {pred.shape} vs target {target.shape}")
    if pred.size == 0:
        return 0.0, np.zeros_like(pred)
    diff = pred - target
    ad = np.abs(diff)
    quad = ad < 1.0
    per = np.where(quad, 0.5 * diff * diff, ad - 0.5)
    grad = np.where(quad, diff, np.sign(diff)) / diff.size
    return float(per.mean()), grad


def softmax(logits):
    z = np.asarray(logits, dtype=float)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_log_loss(logits, labels):
    """Two-class log loss, averaged over rows.

    Accepts a single ``(2,)`` logit pair with a scalar label, or ``(N, 2)``
    logits with ``(N,)`` labels.
    """
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels, dtype=int)
    single = logits.ndim == 1
    if single:
        logits, labels = logits[None], labels.reshape(1)
    n = logits.shape[0]
    if n == 0:
        return 0.0, np.zeros_like(logits)
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(n)
    loss = float(np.mean(log_norm - z[rows, labels]))
    grad = np.exp(z - log_norm[:, None])
    grad[rows, labels] -= 1.0
    grad /= n
    return loss, grad[0] if single else grad


def total_loss(terms, weights=LossWeights()):
    """Weighted sum of the five terms (a mapping or a 5-sequence)."""
    if isinstance(terms, dict):
        values = [float(terms[name]) for name in TERMS]
    else:
        values = [float(v) for v in terms]
    if len(values) != 5:
        raise LengthMismatch("expected exactly five loss terms")
    w = astuple(weights)
    # a zero weight removes its term outright, even a non-finite one
    total = sum(wi * vi for wi, vi in zip(w, values) if wi != 0)
    return LossBreakdown(*values, total=float(total))
