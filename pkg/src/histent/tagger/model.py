"""Linear softmax output layer over the 25 MHE tags."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..bio import MHE_TAGS, N_BME_FEATURES, N_MHE_TAGS, decode_bio
from ..corpus import Document, Entity
from ..errors import MalformedInput, NonFiniteLoss
from ._backend import kernel
from .features import DEFAULT_HASH_BITS, build_batch, featurize

FORMAT_VERSION = 1


@dataclass
class TrainConfig:
    lr: float = 0.1
    epochs: int = 40
    batch_sentences: int = 8
    dropout: float = 0.10
    dropout_bme: bool = False
    hash_bits: int = DEFAULT_HASH_BITS


@dataclass
class TaggerModel:
    W: np.ndarray
    bias: np.ndarray
    n_hash: int
    with_bme: bool
    seed: int = 0
    config: TrainConfig = field(default_factory=TrainConfig)

    @classmethod
    def zeros(cls, with_bme=False, seed=0, config=None):
        config = config or TrainConfig()
        n_hash = 1 << config.hash_bits
        width = n_hash + (N_BME_FEATURES if with_bme else 0)
        return cls(np.zeros((width, N_MHE_TAGS)), np.zeros(N_MHE_TAGS), n_hash, with_bme, seed, config)

    @property
    def width(self):
        return self.W.shape[0]

    def logits(self, indptr, indices, values) -> np.ndarray:
        return kernel.scores(self.W, self.bias, indptr, indices, values)

    def probabilities(self, indptr, indices, values) -> np.ndarray:
        s = self.logits(indptr, indices, values)
        s -= s.max(axis=1, keepdims=True)
        p = np.exp(s)
        return p / p.sum(axis=1, keepdims=True)

    def predict_tags(self, doc: Document, bme=None) -> list[str]:
        if not doc.tokens:
            return []
        feats = featurize(doc, bme if self.with_bme else None, self.config.hash_bits)
        if self.with_bme and bme is None:
            feats.dense = np.zeros((len(doc.tokens), N_BME_FEATURES), dtype=np.uint8)
        batch = build_batch([(feats, range(len(doc.tokens)))])
        # np.argmax keeps the first maximum, i.e. the lowest tag index on ties
        best = np.argmax(self.logits(*batch), axis=1)
        return [MHE_TAGS[i] for i in best]

    def save(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.dumps())

    def dumps(self) -> str:
        """Text format: header lines, bias, then only the non-zero weight rows."""
        lines = [
            f"histent-tagger {FORMAT_VERSION}",
            f"width {self.width}",
            f"n_hash {self.n_hash}",
            f"n_tags {N_MHE_TAGS}",
            f"with_bme {int(self.with_bme)}",
            f"seed {self.seed}",
            "config " + json.dumps(asdict(self.config), sort_keys=True),
            "tags " + " ".join(MHE_TAGS),
            "bias " + " ".join(repr(float(v)) for v in self.bias),
        ]
        nz = np.flatnonzero(np.any(self.W != 0, axis=1))
        lines.append(f"rows {len(nz)}")
        for r in nz:
            lines.append(f"{r} " + " ".join(repr(float(v)) for v in self.W[r]))
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())

    @classmethod
    def loads(cls, data: str) -> "TaggerModel":
        lines = data.splitlines()
        try:
            head = dict(line.split(" ", 1) for line in lines[:10])
            if head["histent-tagger"] != str(FORMAT_VERSION):
                raise MalformedInput(f"unsupported model version {head['histent-tagger']}")
            width, n_hash = int(head["width"]), int(head["n_hash"])
            if head["tags"].split() != list(MHE_TAGS):
                raise MalformedInput("tag inventory does not match")
            config = TrainConfig(**json.loads(head["config"]))
            bias = np.array([float(v) for v in head["bias"].split()])
            W = np.zeros((width, int(head["n_tags"])))
            for line in lines[10 : 10 + int(head["rows"])]:
                r, *vals = line.split()
                W[int(r)] = [float(v) for v in vals]
        except (KeyError, ValueError, IndexError) as exc:
            raise MalformedInput(f"bad model file: {exc}") from exc
        return cls(W, bias, n_hash, head["with_bme"] == "1", int(head["seed"]), config)


def predict(model: TaggerModel, doc: Document, bme=None) -> list[Entity]:
    """Argmax tag per token, decoded leniently into entities."""
    return decode_bio(model.predict_tags(doc, bme), doc)


def loss_and_grad(model: TaggerModel, indptr, indices, values, labels):
    """Summed cross-entropy over the batch and its exact gradient (dense).

    Pure numpy and independent of the kernel, so it can check it.
    """
    labels = np.asarray(labels)
    m = len(indptr) - 1
    if m == 0:
        raise ValueError("empty batch")
    V = np.zeros((m, model.width))
    for t in range(m):
        for p in range(indptr[t], indptr[t + 1]):
            V[t, indices[p]] += values[p]
    s = V @ model.W + model.bias
    s = s - s.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(s).sum(axis=1))
    loss = float(np.sum(log_z - s[np.arange(m), labels]))
    if not math.isfinite(loss):
        raise NonFiniteLoss(f"loss is {loss}")
    g = np.exp(s - log_z[:, None])
    g[np.arange(m), labels] -= 1.0
    return loss, V.T @ g, g.sum(axis=0)
