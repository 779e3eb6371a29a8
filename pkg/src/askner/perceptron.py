"""Averaged structured perceptron tagger.

A dependency-free baseline for the self-training loop: greedy left-to-right
decoding over BIO tags with an illegal-transition mask, simple lexical and
shape features, and weight averaging over update steps. Deterministic for a
fixed seed, dataset, and step count.
"""

from __future__ import annotations

import pickle
import random
from typing import Sequence

from .annotator import LabeledSentence

START = "<s>"
END = "</s>"
_BIAS = "b"


def word_shape(word: str) -> str:
    """Run-compressed character-class sketch: "Paris" -> "Xx", "IBM" -> "X",
    "iPhone12" -> "xXxd"."""
    out = []
    for ch in word:
        cls = "X" if ch.isupper() else "x" if ch.islower() else "d" if ch.isdigit() else "-"
        if not out or out[-1] != cls:
            out.append(cls)
    return "".join(out)


def _features(words: Sequence[str], i: int, prev_tag: str) -> list[str]:
    w = words[i]
    lower = w.lower()
    return [
        _BIAS,
        f"w={lower}",
        f"shape={word_shape(w)}",
        f"pre={lower[:3]}",
        f"suf={lower[-3:]}",
        f"prev={words[i - 1].lower() if i > 0 else START}",
        f"next={words[i + 1].lower() if i + 1 < len(words) else END}",
        f"ptag={prev_tag}",
    ]


def _legal(prev_tag: str, tag: str) -> bool:
    if tag.startswith("I-"):
        etype = tag[2:]
        return prev_tag in (f"B-{etype}", f"I-{etype}")
    return True


class AveragedPerceptronTagger:
    """Tagger with the train/predict/snapshot/restore contract the
    self-training loop expects."""

    def __init__(self):
        self.tags: list[str] = ["O"]
        self.weights: dict[str, dict[str, float]] = {}
        self._totals: dict[tuple[str, str], float] = {}
        self._stamps: dict[tuple[str, str], int] = {}
        self._ticks = 0

    # -- training ---------------------------------------------------------

    def train(self, dataset: Sequence[LabeledSentence], steps: int, seed: int) -> None:
        """Run ``steps`` single-sentence perceptron updates.

        Sentences are visited in a seeded shuffled order, reshuffled each
        pass; training is cumulative, so restoring a snapshot and training
        further continues from that state.
        """
        if steps < 0:
            raise ValueError(f"steps must be >= 0, got {steps}")
        if not dataset and steps > 0:
            raise ValueError("cannot train on an empty dataset")
        self._register_tags(dataset)
        rng = random.Random(seed)
        order: list[int] = []
        for _ in range(steps):
            if not order:
                order = rng.sample(range(len(dataset)), len(dataset))
            sent = dataset[order.pop(0)]
            self._ticks += 1
            self._update(sent)

    def _register_tags(self, dataset: Sequence[LabeledSentence]) -> None:
        seen = set(self.tags)
        for sent in dataset:
            seen.update(sent.tags)
        self.tags = sorted(seen, key=lambda t: (t != "O", t))

    def _update(self, sent: LabeledSentence) -> None:
        words = sent.tokens
        pred = self._decode(words, averaged=False)
        if list(pred) == list(sent.tags):
            return
        for i in range(len(words)):
            gold_prev = sent.tags[i - 1] if i > 0 else START
            pred_prev = pred[i - 1] if i > 0 else START
            if sent.tags[i] == pred[i] and gold_prev == pred_prev:
                continue
            for feat in _features(words, i, gold_prev):
                self._bump(feat, sent.tags[i], 1.0)
            for feat in _features(words, i, pred_prev):
                self._bump(feat, pred[i], -1.0)

    def _bump(self, feat: str, tag: str, delta: float) -> None:
        row = self.weights.setdefault(feat, {})
        old = row.get(tag, 0.0)
        key = (feat, tag)
        self._totals[key] = self._totals.get(key, 0.0) + old * (self._ticks - self._stamps.get(key, 0))
        self._stamps[key] = self._ticks
        row[tag] = old + delta

    # -- inference --------------------------------------------------------

    def _averaged(self) -> dict[str, dict[str, float]]:
        if not self._ticks:
            return {}
        avg: dict[str, dict[str, float]] = {}
        for feat, row in self.weights.items():
            arow = {}
            for tag, w in row.items():
                key = (feat, tag)
                total = self._totals.get(key, 0.0) + w * (self._ticks - self._stamps.get(key, 0))
                if total:
                    arow[tag] = total / self._ticks
            if arow:
                avg[feat] = arow
        return avg

    def _decode(
        self,
        words: Sequence[str],
        averaged: bool = True,
        table: dict[str, dict[str, float]] | None = None,
    ) -> list[str]:
        if table is None:
            table = self._averaged() if averaged else self.weights
        tags = []
        prev = START
        for i in range(len(words)):
            feats = _features(words, i, prev)
            best_tag = None
            best_score = None
            for tag in self.tags:
                if not _legal(prev, tag):
                    continue
                score = 0.0
                for feat in feats:
                    row = table.get(feat)
                    if row:
                        score += row.get(tag, 0.0)
                if best_score is None or score > best_score:
                    best_tag, best_score = tag, score
            tags.append(best_tag)
            prev = best_tag
        return tags

    def predict(self, sentences: Sequence[Sequence[str]]) -> list[list[str]]:
        """Tag token sequences; output lengths mirror inputs and tags are
        BIO-legal by construction. Ties break toward "O", then tag order."""
        table = self._averaged()
        return [self._decode(words, table=table) for words in sentences]

    # -- state ------------------------------------------------------------

    def snapshot(self) -> bytes:
        """Canonical byte serialization: equal states give equal bytes."""
        state = {
            "tags": list(self.tags),
            "weights": [
                (feat, sorted(row.items()))
                for feat, row in sorted(self.weights.items())
                if row
            ],
            "totals": sorted(self._totals.items()),
            "stamps": sorted(self._stamps.items()),
            "ticks": self._ticks,
        }
        return pickle.dumps(state, protocol=4)

    def restore(self, state: bytes) -> None:
        obj = pickle.loads(state)
        self.tags = list(obj["tags"])
        self.weights = {feat: dict(row) for feat, row in obj["weights"]}
        self._totals = dict(obj["totals"])
        self._stamps = dict(obj["stamps"])
        self._ticks = obj["ticks"]
