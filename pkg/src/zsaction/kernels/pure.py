"""Pure NumPy reference implementation of the numeric kernels.

These functions define the semantics; the compiled backend in
``_native.pyx`` mirrors them operation for operation.  All inputs are
float64 C-contiguous arrays (labels int64); the dispatcher in
``zsaction.kernels`` guarantees that.
"""

import numpy as np
from scipy.special import erf

_INV_SQRT2 = 0.7071067811865476
_INV_SQRT_2PI = 0.3989422804014327


def gelu(x):
    """Elementwise x * Phi(x), exact erf form."""
    return 0.5 * x * (1.0 + erf(x * _INV_SQRT2))


def gelu_grad(x):
    """Derivative of gelu: Phi(x) + x * phi(x)."""
    return 0.5 * (1.0 + erf(x * _INV_SQRT2)) + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def softmax_rows(x):
    """Row-wise softmax with max subtraction."""
    shifted = x - x.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def keep_top_k_rows(x, k):
    """Zero all but the k largest entries of each row.

    Ties are broken toward the lower column index; surviving entries are
    copied through unchanged.
    """
    rows, cols = x.shape
    if k >= cols:
        return x.copy()
    # stable sort of the negated values keeps lower indices first on ties
    order = np.argsort(-x, axis=1, kind="stable")[:, :k]
    out = np.zeros_like(x)
    np.put_along_axis(out, order, np.take_along_axis(x, order, axis=1), axis=1)
    return out


def forward_probs(x, weights, bias):
    """softmax(gelu(x @ W + b)) over rows."""
    return softmax_rows(gelu(x @ weights + bias))


def ce_grads(x, labels, weights, bias):
    """Cross-entropy loss and gradients through softmax(gelu(affine)).

    Returns (loss, dW, db) for a batch; loss is averaged over the batch.
    """
    batch = x.shape[0]
    affine = x @ weights + bias
    hidden = gelu(affine)
    shift = hidden.max(axis=1, keepdims=True)
    e = np.exp(hidden - shift)
    norm = e.sum(axis=1, keepdims=True)
    idx = np.arange(batch)
    log_p = (hidden - shift) - np.log(norm)
    loss = -float(np.mean(log_p[idx, labels]))
    grad_hidden = e / norm
    grad_hidden[idx, labels] -= 1.0
    grad_hidden /= batch
    grad_affine = grad_hidden * gelu_grad(affine)
    grad_w = x.T @ grad_affine
    grad_b = grad_affine.sum(axis=0)
    return loss, grad_w, grad_b
