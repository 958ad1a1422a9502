# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled SGD kernel for the softmax output layer over sparse rows."""
import numpy as np

from libc.math cimport exp, log
from libc.stdint cimport int64_t

NAME = "cython"


cdef void _logits(double[:, ::1] W, double[::1] b, int64_t[::1] indptr,
                  int64_t[::1] indices, double[::1] values, double[:, ::1] out) nogil:
    cdef Py_ssize_t m = indptr.shape[0] - 1
    cdef Py_ssize_t K = W.shape[1]
    cdef Py_ssize_t t, p, k
    cdef int64_t j
    cdef double v
    for t in range(m):
        for k in range(K):
            out[t, k] = 0.0
        for p in range(indptr[t], indptr[t + 1]):
            j = indices[p]
            v = values[p]
            for k in range(K):
                out[t, k] += W[j, k] * v
        for k in range(K):
            out[t, k] += b[k]


def scores(double[:, ::1] W, double[::1] b, int64_t[::1] indptr,
           int64_t[::1] indices, double[::1] values):
    """(m, n_tags) logits for CSR rows."""
    out = np.empty((indptr.shape[0] - 1, W.shape[1]), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        _logits(W, b, indptr, indices, values, o)
    return out


def sgd_step(double[:, ::1] W, double[::1] b, int64_t[::1] indptr,
             int64_t[::1] indices, double[::1] values, int64_t[::1] labels, double lr):
    """One SGD update on the summed cross-entropy of the batch. Returns the loss."""
    cdef Py_ssize_t m = indptr.shape[0] - 1
    cdef Py_ssize_t K = W.shape[1]
    buf = np.empty((m, K), dtype=np.float64)
    cdef double[:, ::1] g = buf
    cdef Py_ssize_t t, p, k
    cdef int64_t j
    cdef double mx, z, log_z, coef, step, loss = 0.0
    with nogil:
        _logits(W, b, indptr, indices, values, g)
        for t in range(m):
            mx = g[t, 0]
            for k in range(1, K):
                if g[t, k] > mx:
                    mx = g[t, k]
            z = 0.0
            for k in range(K):
                g[t, k] -= mx
                z += exp(g[t, k])
            log_z = log(z)
            loss += log_z - g[t, labels[t]]
            for k in range(K):
                g[t, k] = exp(g[t, k] - log_z)
            g[t, labels[t]] -= 1.0
        coef = lr
        for t in range(m):
            for p in range(indptr[t], indptr[t + 1]):
                j = indices[p]
                step = coef * values[p]
                if step == 0.0:
                    continue
                for k in range(K):
                    W[j, k] -= step * g[t, k]
        for k in range(K):
            z = 0.0
            for t in range(m):
                z += g[t, k]
            b[k] -= coef * z
    return loss
