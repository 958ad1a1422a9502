"""Numpy fallback for the compiled SGD kernel. Same signatures as ``_kernel``."""
import numpy as np

NAME = "python"


def scores(W, b, indptr, indices, values):
    """(m, n_tags) logits for CSR rows; every row must have at least one entry."""
    contrib = W[indices] * values[:, None]
    return np.add.reduceat(contrib, indptr[:-1], axis=0) + b


def sgd_step(W, b, indptr, indices, values, labels, lr):
    """One SGD update on the summed cross-entropy of the batch. Returns the loss."""
    m = len(indptr) - 1
    s = scores(W, b, indptr, indices, values)
    s -= s.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(s).sum(axis=1))
    rows = np.arange(m)
    loss = float((log_z - s[rows, labels]).sum())
    g = np.exp(s - log_z[:, None])
    g[rows, labels] -= 1.0
    coef = lr
    owner = np.repeat(rows, np.diff(indptr))
    np.add.at(W, indices, -(coef * values)[:, None] * g[owner])
    b -= coef * g.sum(axis=0)
    return loss
