"""Small generated corpora with known answers, used by tests and benchmarks."""
from __future__ import annotations

import random

from .corpus import BmeConcept, Concept, Document, Entity

# every concept owns words no other concept uses
PHRASES = {
    Concept.CC: ["chest pain", "headache", "abdominal pain"],
    Concept.HpiLocation: ["left knee", "lower back"],
    Concept.HpiQuality: ["sharp", "throbbing", "burning"],
    Concept.HpiSeverity: ["severe", "mild"],
    Concept.HpiDuration: ["three days", "two weeks"],
    Concept.HpiTiming: ["intermittent", "constant"],
    Concept.HpiContext: ["after lifting boxes", "while jogging"],
    Concept.HpiModifyingFactor: ["relieved by rest", "worse with exertion"],
    Concept.HpiAssocSignsSymptoms: ["nausea", "dizziness", "fever"],
    Concept.PastHistory: ["hypertension", "diabetes", "asthma"],
    Concept.FamilyHistory: ["mother had cancer", "father had stroke"],
    Concept.SocialHistory: ["nonsmoker", "drinks socially", "lives alone"],
}
FILLER = ["patient", "reports", "the", "and", "with", "noted", "today", "is", "a", "he", "she"]

HEADERS = ("CHIEF COMPLAINT", "HISTORY OF PRESENT ILLNESS", "PAST MEDICAL HISTORY",
           "FAMILY HISTORY", "SOCIAL HISTORY")


class _Writer:
    def __init__(self):
        self.parts: list[str] = []
        self.length = 0

    def add(self, s: str) -> tuple[int, int]:
        start = self.length
        self.parts.append(s)
        self.length += len(s)
        return start, self.length

    def text(self):
        return "".join(self.parts)


def separable_corpus(n_docs=40, seed=0, sentences_per_doc=(4, 8)) -> list[Document]:
    """Notes where each entity phrase always carries the same concept."""
    rng = random.Random(seed)
    concepts = list(PHRASES)
    docs = []
    for d in range(n_docs):
        w = _Writer()
        gold = []
        doc_id = f"syn{d:04d}"
        for s in range(rng.randint(*sentences_per_doc)):
            if s % 3 == 0:
                w.add(rng.choice(HEADERS) + ":\n")
            for _ in range(rng.randint(1, 3)):
                w.add(rng.choice(FILLER) + " ")
            concept = rng.choice(concepts)
            start, end = w.add(rng.choice(PHRASES[concept]))
            gold.append(Entity(concept, start, end, doc_id))
            w.add(" " + rng.choice(FILLER) + ".\n")
        docs.append(Document.build(doc_id, w.text(), gold))
    return docs


BME_TO_MHE = {
    BmeConcept.Problem: Concept.CC,
    BmeConcept.Test: Concept.HpiContext,
    BmeConcept.Treatment: Concept.HpiModifyingFactor,
    BmeConcept.Drug: Concept.PastHistory,
    BmeConcept.BodyLocation: Concept.HpiLocation,
    BmeConcept.Severity: Concept.HpiSeverity,
    BmeConcept.Temporal: Concept.HpiDuration,
}


def bme_predictive_corpus(n_docs=40, seed=0, vocab_size=30, tokens_per_doc=(40, 80)):
    """Random words whose MHE labels follow only from the BME spans.

    Returns (docs, bme) where ``bme`` maps doc_id to its BME entities.
    """
    rng = random.Random(seed)
    vocab = [f"w{i:02d}" for i in range(vocab_size)]
    bme_concepts = list(BME_TO_MHE)
    docs, bme = [], {}
    for d in range(n_docs):
        doc_id = f"bme{d:04d}"
        w = _Writer()
        gold, anns = [], []
        n = rng.randint(*tokens_per_doc)
        i = 0
        while i < n:
            if rng.random() < 0.25:
                k = rng.randint(1, 3)
                concept = rng.choice(bme_concepts)
                start, _ = w.add(vocab[rng.randrange(vocab_size)])
                end = start
                for j in range(k):
                    if j:
                        w.add(" ")
                        _, end = w.add(vocab[rng.randrange(vocab_size)])
                    else:
                        end = start + len(w.parts[-1])
                anns.append(Entity(concept, start, end, doc_id))
                gold.append(Entity(BME_TO_MHE[concept], start, end, doc_id))
                i += k
            else:
                w.add(vocab[rng.randrange(vocab_size)])
                i += 1
            w.add(".\n" if rng.random() < 0.1 else " ")
        docs.append(Document.build(doc_id, w.text(), gold))
        bme[doc_id] = anns
    return docs, bme
