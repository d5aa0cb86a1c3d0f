"""Pure numpy implementations of the per-event kernels.

Signatures and semantics match the compiled module ``_ckernels`` exactly;
the two are interchangeable up to floating-point summation order.
"""

import numpy as np

# A column whose sd falls below SD_EPS * (|mean| + 1) is treated as constant.
SD_EPS = 1e-12


def standardize_columns(X, cols):
    """Standardize ``X[:, cols]`` in place to mean 0, sd 1 (population sd).

    Constant columns become all zeros.
    """
    for c in cols:
        col = X[:, c]
        n = col.shape[0]
        if n == 0:
            continue
        mean = col.sum() / n
        dev = col - mean
        sd = np.sqrt((dev * dev).sum() / n)
        if sd <= SD_EPS * (abs(mean) + 1.0):
            col[:] = 0.0
        else:
            col[:] = dev / sd


def sample_logits(eta, u):
    """Inverse-CDF draw from the categorical softmax(eta) with one uniform.

    Returns ``(index, log_total)`` where ``log_total = log(sum(exp(eta)))``.
    """
    m = eta.max()
    cum = np.cumsum(np.exp(eta - m))
    total = cum[-1]
    k = int(np.searchsorted(cum, u * total, side="right"))
    if k >= len(eta):
        k = len(eta) - 1
    return k, float(m + np.log(total))


def softmax(eta):
    """Return ``(probabilities, log_total)`` using the max shift."""
    m = eta.max()
    e = np.exp(eta - m)
    total = e.sum()
    return e / total, float(m + np.log(total))


def twopath_update(W, otp, osp, isp, a, b, old, new):
    """Apply the change ``W[a, b]: old -> new`` to the two-path matrices.

    otp[i, j] = sum_h min(W[i, h], W[h, j])
    osp[i, j] = sum_h min(W[i, h], W[j, h])
    isp[i, j] = sum_h min(W[h, i], W[h, j])

    Any of the three may be None. Diagonals of osp/isp are left untouched.
    Only entries of ``W`` other than ``(a, b)`` are read.
    """
    if otp is not None:
        row = W[b, :]
        otp[a, :] += np.minimum(new, row) - np.minimum(old, row)
        col = W[:, a]
        otp[:, b] += np.minimum(col, new) - np.minimum(col, old)
    if osp is not None:
        col = W[:, b]
        d = np.minimum(new, col) - np.minimum(old, col)
        d[a] = 0.0
        osp[a, :] += d
        osp[:, a] += d
    if isp is not None:
        row = W[a, :]
        d = np.minimum(new, row) - np.minimum(old, row)
        d[b] = 0.0
        isp[b, :] += d
        isp[:, b] += d


def weighted_gram(X, w):
    """Return ``(X.T @ w, X.T @ diag(w) @ X)``."""
    return X.T @ w, X.T @ (X * w[:, None])
