"""Hashed sparse token features, optionally with the 14-wide BME tail."""
from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from ..bio import N_BME_FEATURES, encode_bme_features
from ..corpus import Document

DEFAULT_HASH_BITS = 18
FEATURES_PER_TOKEN = 6


def shape_class(tok: str) -> str:
    if tok.isdigit():
        return "d"
    if tok.isalpha():
        if tok.isupper():
            return "X" if len(tok) > 1 else "X1"
        if tok[0].isupper():
            return "Xx"
        if tok.islower():
            return "x"
        return "mixed"
    if any(ch.isalnum() for ch in tok):
        return "alnum"
    return "punct"


def _hash(feature: str, mask: int) -> int:
    return zlib.crc32(feature.encode("utf-8")) & mask


@dataclass(frozen=True)
class TokenFeatures:
    indices: tuple[int, ...]
    dense: np.ndarray | None = None


@dataclass
class DocFeatures:
    """Per-document feature block: ``hashed`` is (n_tokens, 6) int64."""

    hashed: np.ndarray
    dense: np.ndarray | None
    n_hash: int

    def __len__(self):
        return self.hashed.shape[0]

    @property
    def width(self):
        return self.n_hash + (N_BME_FEATURES if self.dense is not None else 0)

    def token(self, i) -> TokenFeatures:
        return TokenFeatures(tuple(int(j) for j in self.hashed[i]),
                             None if self.dense is None else self.dense[i])


def featurize(doc: Document, bme=None, hash_bits=DEFAULT_HASH_BITS) -> DocFeatures:
    """Lowercased form, 3-char prefix/suffix, shape and +-1 neighbours, hashed into 2**hash_bits."""
    n_hash = 1 << hash_bits
    mask = n_hash - 1
    words = [t.text.lower() for t in doc.tokens]
    hashed = np.empty((len(words), FEATURES_PER_TOKEN), dtype=np.int64)
    for i, (w, tok) in enumerate(zip(words, doc.tokens)):
        prev = words[i - 1] if i > 0 else "<s>"
        nxt = words[i + 1] if i + 1 < len(words) else "</s>"
        hashed[i] = [
            _hash("w=" + w, mask),
            _hash("p3=" + w[:3], mask),
            _hash("s3=" + w[-3:], mask),
            _hash("shape=" + shape_class(tok.text), mask),
            _hash("w-1=" + prev, mask),
            _hash("w+1=" + nxt, mask),
        ]
    dense = None if bme is None else encode_bme_features(doc, bme)
    return DocFeatures(hashed, dense, n_hash)


def build_batch(blocks, rng=None, dropout=0.0, dropout_dense=False):
    """Stack token rows into CSR arrays (indptr, indices, values).

    ``blocks`` is a sequence of (DocFeatures, token index range). Dense BME
    bits become sparse entries at ``n_hash + k``. With ``rng`` and
    ``dropout`` > 0, entries are zeroed with that probability and the
    survivors scaled by 1 / (1 - dropout).
    """
    idx_parts, count_parts, flag_parts = [], [], []
    for feats, rows in blocks:
        rows = np.asarray(rows, dtype=np.int64)
        h = feats.hashed[rows]
        if feats.dense is None:
            idx_parts.append(h.ravel())
            count_parts.append(np.full(len(rows), FEATURES_PER_TOKEN, dtype=np.int64))
            flag_parts.append(np.zeros(h.size, dtype=bool))
            continue
        # per row: the hashed ids, then the set BME bits; row-major order keeps rows contiguous
        d = feats.dense[rows].astype(bool)
        bme_ids = np.broadcast_to(np.arange(N_BME_FEATURES) + feats.n_hash, d.shape)
        ids = np.concatenate([h, bme_ids], axis=1)
        mask = np.concatenate([np.ones(h.shape, dtype=bool), d], axis=1)
        idx_parts.append(ids[mask])
        count_parts.append(mask.sum(axis=1).astype(np.int64))
        flag_parts.append(np.concatenate([np.zeros(h.shape, dtype=bool), d], axis=1)[mask])
    indices = np.concatenate(idx_parts) if idx_parts else np.empty(0, dtype=np.int64)
    per_row = np.concatenate(count_parts) if count_parts else np.empty(0, dtype=np.int64)
    indptr = np.zeros(len(per_row) + 1, dtype=np.int64)
    np.cumsum(per_row, out=indptr[1:])
    values = np.ones(len(indices), dtype=np.float64)
    if rng is not None and dropout > 0:
        droppable = np.ones(len(indices), dtype=bool)
        if not dropout_dense:
            droppable = ~np.concatenate(flag_parts)
        keep = rng.random(len(indices)) >= dropout
        values = np.where(droppable, np.where(keep, 1.0 / (1.0 - dropout), 0.0), 1.0)
    return indptr, indices, values
