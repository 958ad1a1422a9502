"""Document-level k-fold training with out-of-fold predictions."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..bio import encode_bio
from ..corpus import Document, Entity
from ..errors import EmptyFold, MissingBme, NonFiniteLoss
from ._backend import kernel
from .features import build_batch, featurize
from .model import TaggerModel, TrainConfig, predict

MODES = ("basic", "with_bme")
N_FOLDS = 5


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple[tuple[str, ...], ...]

    def __len__(self):
        return len(self.folds)

    def fold_of(self, doc_id: str) -> int:
        for k, ids in enumerate(self.folds):
            if doc_id in ids:
                return k
        raise KeyError(doc_id)

    def validate(self, doc_ids=None):
        seen = set()
        for k, ids in enumerate(self.folds):
            if not ids:
                raise EmptyFold(f"fold {k} has no documents")
            if seen & set(ids):
                raise ValueError("folds overlap")
            seen |= set(ids)
        sizes = [len(f) for f in self.folds]
        if max(sizes) - min(sizes) > 1:
            raise ValueError(f"unbalanced folds {sizes}")
        if doc_ids is not None and seen != set(doc_ids):
            raise ValueError("folds do not cover the corpus")


def make_folds(doc_ids: Sequence[str], k: int = N_FOLDS, seed: int = 0) -> FoldPlan:
    ids = sorted(doc_ids)
    if len(ids) < k:
        raise EmptyFold(f"{len(ids)} documents cannot fill {k} folds")
    random.Random(seed).shuffle(ids)
    plan = FoldPlan(tuple(tuple(sorted(ids[i::k])) for i in range(k)))
    plan.validate(ids)
    return plan


@dataclass
class FoldResult:
    fold: int
    model: TaggerModel
    epoch_losses: list[float]


@dataclass
class TrainResult:
    mode: str
    seed: int
    folds: list[FoldResult]
    predictions: dict[str, list[Entity]] = field(default_factory=dict)

    def predicted_documents(self, docs: Sequence[Document]) -> list[Document]:
        """Copies of ``docs`` carrying the out-of-fold predictions."""
        return [
            Document(d.doc_id, d.text, list(d.gold), list(self.predictions[d.doc_id]),
                     d.tokens, d.sections)
            for d in docs
        ]


def bme_entities(doc: Document, bme: Mapping[str, Sequence[Entity]] | None) -> list[Entity]:
    if bme is not None:
        if doc.doc_id not in bme:
            raise MissingBme(f"no BME entities for {doc.doc_id}")
        return list(bme[doc.doc_id])
    found = [e for e in doc.gold if not e.is_mhe]
    if not found:
        raise MissingBme(f"no BME entities for {doc.doc_id}")
    return found


def _prepare(doc, with_bme, bme, hash_bits):
    feats = featurize(doc, bme_entities(doc, bme) if with_bme else None, hash_bits)
    labels = encode_bio(doc, doc.gold).indices().astype(np.int64)
    return feats, labels, [s for s in doc.sentences() if len(s)]


def train_fold(prepared, seed: int, fold: int, with_bme: bool, config: TrainConfig):
    """SGD over shuffled 8-sentence batches. ``prepared`` holds (features, labels, sentences)."""
    model = TaggerModel.zeros(with_bme, seed, config)
    units = [(p, s) for p in prepared for s in p[2]]
    if not units:
        raise EmptyFold(f"fold {fold} has no training tokens")
    rng = np.random.default_rng([seed, fold])
    losses = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(units))
        total, n_tok = 0.0, 0
        for lo in range(0, len(order), config.batch_sentences):
            chosen = [units[i] for i in order[lo : lo + config.batch_sentences]]
            blocks = [(p[0], s) for p, s in chosen]
            labels = np.concatenate([p[1][s.start : s.stop] for p, s in chosen])
            indptr, indices, values = build_batch(
                blocks, rng, config.dropout, config.dropout_bme
            )
            total += kernel.sgd_step(model.W, model.bias, indptr, indices, values,
                                     labels, config.lr)
            n_tok += len(labels)
        mean = total / n_tok
        if not math.isfinite(mean):
            raise NonFiniteLoss(f"fold {fold} epoch {epoch + 1}: loss {mean}")
        losses.append(mean)
    return FoldResult(fold, model, losses)


def train(docs: Sequence[Document], mode: str = "basic", plan: FoldPlan | None = None,
          seed: int = 0, config: TrainConfig | None = None,
          bme: Mapping[str, Sequence[Entity]] | None = None) -> TrainResult:
    """Train one model per fold and predict each document with the fold that held it out.

    Folds run one after another; the result does not depend on the order.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    config = config or TrainConfig()
    with_bme = mode == "with_bme"
    plan = plan or make_folds([d.doc_id for d in docs], seed=seed)
    plan.validate([d.doc_id for d in docs])
    prepared = {d.doc_id: _prepare(d, with_bme, bme, config.hash_bits) for d in docs}
    result = TrainResult(mode, seed, [])
    by_id = {d.doc_id: d for d in docs}
    for k, held_out in enumerate(plan.folds):
        held = set(held_out)
        train_docs = [prepared[d.doc_id] for d in docs if d.doc_id not in held]
        fold = train_fold(train_docs, seed, k, with_bme, config)
        result.folds.append(fold)
        for doc_id in held_out:
            doc = by_id[doc_id]
            doc_bme = bme_entities(doc, bme) if with_bme else None
            result.predictions[doc_id] = [
                Entity(e.concept, e.start, e.end, doc_id, "predicted")
                for e in predict(fold.model, doc, doc_bme)
            ]
    return result
