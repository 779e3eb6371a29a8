"""Retrieval-side data handling.

The pipeline treats phrase retrieval as an external service: given a
question, it returns ranked (phrase, evidence sentence) pairs. This module
owns the corpus and results file formats, validation, the per-question
sentence budget, a deliberately simple lexical stand-in retriever for tests
and demos, and the HTTP client for a real backend.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, DataError, FetchError

RESULT_FIELDS = ("question_id", "rank", "phrase", "score", "sentence_id", "char_start", "char_end")


@dataclass(frozen=True)
class CorpusSentence:
    """One pre-tokenized sentence; ``candidates`` are optional phrase spans
    used by the stand-in retriever."""

    sentence_id: str
    text: str
    tokens: tuple[tuple[str, int, int], ...]
    candidates: tuple[tuple[int, int], ...] = ()

    def surfaces(self) -> tuple[str, ...]:
        return tuple(t[0] for t in self.tokens)


def _check_sentence(s: CorpusSentence, where: str) -> None:
    prev_end = 0
    for i, (surface, start, end) in enumerate(s.tokens):
        if not 0 <= start < end <= len(s.text):
            raise DataError(f"{where}: token {i} span [{start}, {end}) out of bounds")
        if start < prev_end:
            raise DataError(f"{where}: token {i} overlaps or is out of order")
        if s.text[start:end] != surface:
            raise DataError(
                f"{where}: token {i} surface {surface!r} != text slice {s.text[start:end]!r}"
            )
        if "\t" in surface or "\n" in surface:
            raise DataError(f"{where}: token {i} contains tab/newline, unsupported")
        prev_end = end
    for i, (start, end) in enumerate(s.candidates):
        if not 0 <= start < end <= len(s.text):
            raise DataError(f"{where}: candidate {i} span [{start}, {end}) out of bounds")


def sentence_from_record(obj: object, where: str = "<corpus>") -> CorpusSentence:
    if not isinstance(obj, dict):
        raise DataError(f"{where}: expected an object, got {type(obj).__name__}")
    try:
        sid = obj["sentence_id"]
        text = obj["text"]
        tokens = obj["tokens"]
    except KeyError as e:
        raise DataError(f"{where}: missing field {e.args[0]!r}") from None
    if not isinstance(sid, str) or not sid:
        raise DataError(f"{where}: sentence_id must be a non-empty string")
    if not isinstance(text, str):
        raise DataError(f"{where}: text must be a string")
    try:
        toks = tuple((str(t[0]), int(t[1]), int(t[2])) for t in tokens)
        cands = tuple((int(c[0]), int(c[1])) for c in obj.get("candidates", []))
    except (TypeError, ValueError, IndexError) as e:
        raise DataError(f"{where}: malformed tokens/candidates: {e}") from None
    sent = CorpusSentence(sentence_id=sid, text=text, tokens=toks, candidates=cands)
    _check_sentence(sent, where)
    return sent


def load_corpus(path: str | Path) -> dict[str, CorpusSentence]:
    """Read a JSONL corpus into an ordered {sentence_id: sentence} map."""
    out: dict[str, CorpusSentence] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{where}: invalid JSON: {e}") from None
            sent = sentence_from_record(obj, where)
            if sent.sentence_id in out:
                raise DataError(f"{where}: duplicate sentence_id {sent.sentence_id!r}")
            out[sent.sentence_id] = sent
    return out


@dataclass(frozen=True)
class RetrievedPhrase:
    """One ranked retrieval hit: a phrase span inside an evidence sentence."""

    question_id: str
    rank: int
    surface: str
    score: float
    sentence_id: str
    char_start: int
    char_end: int

    def to_record(self) -> dict:
        return {
            "question_id": self.question_id,
            "rank": self.rank,
            "phrase": self.surface,
            "score": self.score,
            "sentence_id": self.sentence_id,
            "char_start": self.char_start,
            "char_end": self.char_end,
        }


def _phrase_from_record(obj: object, where: str) -> RetrievedPhrase:
    if not isinstance(obj, dict):
        raise DataError(f"{where}: expected an object, got {type(obj).__name__}")
    missing = [f for f in RESULT_FIELDS if f not in obj]
    if missing:
        raise DataError(f"{where}: missing fields {missing}")
    try:
        p = RetrievedPhrase(
            question_id=str(obj["question_id"]),
            rank=int(obj["rank"]),
            surface=str(obj["phrase"]),
            score=float(obj["score"]),
            sentence_id=str(obj["sentence_id"]),
            char_start=int(obj["char_start"]),
            char_end=int(obj["char_end"]),
        )
    except (TypeError, ValueError) as e:
        raise DataError(f"{where}: malformed result record: {e}") from None
    if p.rank < 1:
        raise DataError(f"{where}: rank must be >= 1, got {p.rank}")
    return p


def ingest_results(
    lines: Iterable[str],
    corpus: Mapping[str, CorpusSentence] | None = None,
    source: str = "<results>",
) -> dict[str, list[RetrievedPhrase]]:
    """Parse and validate a results stream, grouped per question, rank-sorted.

    With a corpus, sentence ids must resolve and each phrase must equal its
    evidence-sentence slice; without one, only record-level checks run.
    Scores must be non-increasing with rank within every question.
    """
    groups: dict[str, dict[int, tuple[RetrievedPhrase, str]]] = {}
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        where = f"{source}:{lineno}"
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise DataError(f"{where}: invalid JSON: {e}") from None
        p = _phrase_from_record(obj, where)
        if corpus is not None:
            sent = corpus.get(p.sentence_id)
            if sent is None:
                raise DataError(f"{where}: unknown sentence_id {p.sentence_id!r}")
            if not 0 <= p.char_start < p.char_end <= len(sent.text):
                raise DataError(
                    f"{where}: span [{p.char_start}, {p.char_end}) out of bounds "
                    f"for sentence {p.sentence_id!r}"
                )
            slice_ = sent.text[p.char_start:p.char_end]
            if slice_ != p.surface:
                raise DataError(
                    f"{where}: phrase {p.surface!r} != sentence slice {slice_!r}"
                )
        per_q = groups.setdefault(p.question_id, {})
        if p.rank in per_q:
            raise DataError(
                f"{where}: duplicate rank {p.rank} for question {p.question_id!r} "
                f"(first at {per_q[p.rank][1]})"
            )
        per_q[p.rank] = (p, where)
    out: dict[str, list[RetrievedPhrase]] = {}
    for qid, per_q in groups.items():
        ranked = [per_q[r] for r in sorted(per_q)]
        for (prev, _), (cur, where) in zip(ranked, ranked[1:]):
            if cur.score > prev.score:
                raise DataError(
                    f"{where}: score {cur.score} at rank {cur.rank} exceeds "
                    f"score {prev.score} at rank {prev.rank} for question {qid!r}"
                )
        out[qid] = [p for p, _ in ranked]
    return out


def read_results(
    path: str | Path, corpus: Mapping[str, CorpusSentence] | None = None
) -> dict[str, list[RetrievedPhrase]]:
    with open(path, encoding="utf-8") as fh:
        return ingest_results(fh, corpus, source=str(path))


def serialize_results(groups: Mapping[str, Sequence[RetrievedPhrase]]) -> str:
    """Inverse of ingest_results: one JSON record per line, questions in
    sorted id order, ranks ascending, trailing newline."""
    lines = []
    for qid in sorted(groups):
        for p in sorted(groups[qid], key=lambda p: p.rank):
            lines.append(json.dumps(p.to_record(), ensure_ascii=False, sort_keys=True))
    return "\n".join(lines) + "\n" if lines else ""


@dataclass(frozen=True)
class SentenceBudgetResult:
    """Outcome of walking one question's ranked results under a budget."""

    question_id: str
    kept_sentences: tuple[str, ...]
    kept_phrases: tuple[RetrievedPhrase, ...]
    exhausted: bool


def collect_training_sentences(
    results: Sequence[RetrievedPhrase], k_l: int, question_id: str | None = None
) -> SentenceBudgetResult:
    """Keep results until ``k_l`` distinct sentences have been collected.

    The walk goes in rank order; a phrase is kept iff its sentence is kept,
    which includes later-ranked phrases from already-kept sentences. The
    ``exhausted`` flag records that the results ran out before the budget
    filled.
    """
    if k_l < 0:
        raise ValueError(f"k_l must be >= 0, got {k_l}")
    qids = {p.question_id for p in results}
    if len(qids) > 1:
        raise ValueError(f"results mix several questions: {sorted(qids)}")
    if question_id is None:
        question_id = results[0].question_id if results else ""
    ranks = [p.rank for p in results]
    if any(b <= a for a, b in zip(ranks, ranks[1:])):
        raise ValueError("results must be sorted by strictly increasing rank")
    kept_sentences: list[str] = []
    kept_set: set[str] = set()
    kept_phrases: list[RetrievedPhrase] = []
    for p in results:
        if p.sentence_id in kept_set:
            kept_phrases.append(p)
        elif len(kept_set) < k_l:
            kept_set.add(p.sentence_id)
            kept_sentences.append(p.sentence_id)
            kept_phrases.append(p)
    return SentenceBudgetResult(
        question_id=question_id,
        kept_sentences=tuple(kept_sentences),
        kept_phrases=tuple(kept_phrases),
        exhausted=len(kept_sentences) < k_l,
    )


def toy_retrieve(
    question: str,
    corpus: Mapping[str, CorpusSentence] | Iterable[CorpusSentence],
    top_n: int,
    question_id: str = "",
    content_text: str | None = None,
) -> list[RetrievedPhrase]:
    """Rank corpus candidate spans by lexical overlap with the question.

    A candidate's score is the number of content tokens (by default the
    whole question, lowercased, split on whitespace, punctuation-stripped)
    that occur among the sentence's lowercased tokens. Ties break on
    (sentence_id, char_start, char_end). This is a test/demo stand-in, not a
    retrieval model.
    """
    sentences = list(corpus.values()) if isinstance(corpus, Mapping) else list(corpus)
    if not any(s.candidates for s in sentences):
        raise ConfigError("corpus has no candidate spans; toy retrieval needs them")
    text = question if content_text is None else content_text
    content = [w for w in (w.strip("?.,!:;\"'").lower() for w in text.split()) if w]
    scored = []
    for sent in sentences:
        toks = {t.lower() for t in sent.surfaces()}
        score = sum(1 for w in content if w in toks)
        for start, end in sent.candidates:
            scored.append((-score, sent.sentence_id, start, end))
    scored.sort()
    by_id = {s.sentence_id: s for s in sentences}
    out = []
    for i, (neg, sid, start, end) in enumerate(scored[: max(top_n, 0)]):
        sent = by_id[sid]
        out.append(
            RetrievedPhrase(
                question_id=question_id,
                rank=i + 1,
                surface=sent.text[start:end],
                score=float(-neg),
                sentence_id=sid,
                char_start=start,
                char_end=end,
            )
        )
    return out


def fetch_remote(
    question_text: str,
    endpoint: str,
    top_n: int,
    question_id: str | None = None,
    timeout: float = 10.0,
    attempts: int = 3,
    backoff: float = 0.5,
    session=None,
) -> list[RetrievedPhrase]:
    """GET ranked results from a retrieval service, with retries.

    Sends ``question`` and ``top_n`` as query parameters and expects a JSON
    array of result records. Records are stamped with ``question_id`` before
    validation so replay files line up with the local configuration.
    Connection failures and 5xx responses are retried up to ``attempts``
    times; malformed payloads and 4xx responses are data errors.
    """
    import requests

    if attempts < 1:
        raise ConfigError(f"attempts must be >= 1, got {attempts}")
    http = session if session is not None else requests
    last_error: Exception | None = None
    for attempt in range(1, attempts + 1):
        try:
            resp = http.get(
                endpoint, params={"question": question_text, "top_n": top_n}, timeout=timeout
            )
        except requests.RequestException as e:
            last_error = e
            if attempt < attempts and backoff:
                time.sleep(backoff * attempt)
            continue
        if 500 <= resp.status_code < 600:
            last_error = DataError(f"{endpoint}: server error {resp.status_code}")
            if attempt < attempts and backoff:
                time.sleep(backoff * attempt)
            continue
        if resp.status_code != 200:
            raise DataError(f"{endpoint}: unexpected status {resp.status_code}")
        try:
            payload = resp.json()
        except ValueError as e:
            raise DataError(f"{endpoint}: response is not JSON: {e}") from None
        if not isinstance(payload, list):
            raise DataError(f"{endpoint}: expected a JSON array of result records")
        by_rank: dict[int, RetrievedPhrase] = {}
        for i, obj in enumerate(payload):
            where = f"{endpoint} record {i}"
            if question_id is not None and isinstance(obj, dict):
                obj = dict(obj, question_id=question_id)
            p = _phrase_from_record(obj, where)
            if by_rank and p.question_id != next(iter(by_rank.values())).question_id:
                raise DataError(f"{where}: mixed question ids in one response")
            if p.rank in by_rank:
                raise DataError(f"{where}: duplicate rank {p.rank}")
            by_rank[p.rank] = p
        ranked = [by_rank[r] for r in sorted(by_rank)]
        for prev, cur in zip(ranked, ranked[1:]):
            if cur.score > prev.score:
                raise DataError(
                    f"{endpoint}: score {cur.score} at rank {cur.rank} exceeds "
                    f"score {prev.score} at rank {prev.rank}"
                )
        return ranked
    raise FetchError(
        f"{endpoint}: retrieval failed after {attempts} attempts: {last_error}",
        attempts=attempts,
    )
