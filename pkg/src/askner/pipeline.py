"""Stage orchestration for the command-line entry points.

Each command runs its stages in order, logs per-stage record counts, and
writes every artifact atomically (temp file + rename): an output file is
either fully written or absent. A manifest with input/output digests, the
seed, and the config hash accompanies the main outputs; manifests carry no
timestamps, so identical runs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import __version__
from .annotator import (
    LabeledSentence,
    PseudoDictionary,
    assign_types,
    build_dictionary,
    dump_dictionary,
    emit_bio,
    match_sentences,
)
from .config import PipelineConfig
from .conll import format_conll, read_conll
from .errors import ConfigError, DataError
from .metrics import (
    EvalReport,
    RetrievalJudgments,
    diversity,
    entity_f1,
    EntitySet,
    precision_at_k,
)
from .normalizer import RuleSet, load_stopwords, normalize
from .perceptron import AveragedPerceptronTagger
from .querygen import SubQuestion, build_question_set
from .retrieval import (
    CorpusSentence,
    RetrievedPhrase,
    collect_training_sentences,
    fetch_remote,
    load_corpus,
    read_results,
    serialize_results,
    toy_retrieve,
)
from .selftrain import (
    SelfTrainConfig,
    format_training_log,
    run_self_training,
    save_checkpoint,
)

log = logging.getLogger("askner")


# -- file plumbing ----------------------------------------------------------


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def atomic_write(path: Path, data: str | bytes) -> None:
    """Write via temp file + rename so readers never see partial content."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


class _Artifacts:
    """Tracks files written by one command so a failure can remove the
    partial set; earlier commands' files are never touched."""

    def __init__(self):
        self.written: list[Path] = []
        self.digests: dict[str, str] = {}

    def write(self, path: Path, data: str | bytes) -> None:
        atomic_write(path, data)
        self.written.append(path)
        blob = data.encode("utf-8") if isinstance(data, str) else data
        self.digests[path.name] = sha256_bytes(blob)

    def discard(self) -> None:
        for path in self.written:
            try:
                path.unlink()
            except OSError:
                pass


def load_phrase_list(path: Path) -> list[str]:
    """One phrase per line; blank lines and '#' comments ignored."""
    phrases = []
    for line in path.read_text(encoding="utf-8").splitlines():
        phrase = line.split("#", 1)[0].strip()
        if phrase:
            phrases.append(phrase)
    return phrases


def _require_files(*paths: Path | None) -> None:
    missing = [str(p) for p in paths if p is not None and not Path(p).is_file()]
    if missing:
        raise ConfigError(f"missing input files: {', '.join(missing)}")


def _manifest(
    command: str,
    config: PipelineConfig | None,
    seed: int,
    inputs: Mapping[str, Path],
    artifacts: _Artifacts,
    counts: Mapping[str, int],
    extra: Mapping | None = None,
) -> dict:
    doc = {
        "tool": {"name": "askner", "version": __version__},
        "command": command,
        "seed": seed,
        "config_hash": config.config_hash() if config else None,
        "inputs": {name: sha256_file(Path(p)) for name, p in sorted(inputs.items())},
        "outputs": dict(sorted(artifacts.digests.items())),
        "counts": dict(sorted(counts.items())),
    }
    if extra:
        doc.update(extra)
    return doc


def _dump_json(doc: Mapping) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


# -- retrieval stage --------------------------------------------------------


def _retrieve_groups(
    config: PipelineConfig,
    questions: Sequence[SubQuestion],
    corpus: Mapping[str, CorpusSentence] | None,
    mode: str | None = None,
    endpoint: str | None = None,
    top_n: int | None = None,
) -> dict[str, list[RetrievedPhrase]]:
    settings = config.retrieval
    mode = mode or settings.mode
    top = top_n if top_n is not None else settings.top_n
    groups: dict[str, list[RetrievedPhrase]] = {}
    if mode == "toy":
        if corpus is None:
            corpus = load_corpus(config.corpus_path)
        for q in questions:
            groups[q.question_id] = toy_retrieve(
                q.question_text,
                corpus,
                top,
                question_id=q.question_id,
                content_text=q.type_label,
            )
    elif mode == "remote":
        url = endpoint if endpoint is not None else settings.endpoint
        if not url:
            raise ConfigError("remote retrieval needs an endpoint")
        for q in questions:
            groups[q.question_id] = fetch_remote(
                q.question_text,
                url,
                top,
                question_id=q.question_id,
                timeout=settings.timeout,
                attempts=settings.attempts,
            )
    else:
        raise ConfigError(f"cannot retrieve in mode {mode!r}")
    return groups


def cmd_retrieve(
    config: PipelineConfig,
    endpoint: str | None = None,
    top_n: int | None = None,
    out: Path | None = None,
) -> Path:
    """Run retrieval for every sub-question and write a replay results file."""
    questions = build_question_set(
        config.types, config.template, config.default_k_l, config.default_rules
    )
    mode = "remote" if endpoint else config.retrieval.mode
    if mode == "replay":
        raise ConfigError(
            "retrieval mode is 'replay'; nothing to fetch (use --endpoint or mode toy/remote)"
        )
    corpus = None
    if mode == "toy":
        _require_files(config.corpus_path)
        corpus = load_corpus(config.corpus_path)
    groups = _retrieve_groups(config, questions, corpus, mode=mode, endpoint=endpoint, top_n=top_n)
    for qid, phrases in groups.items():
        log.info("retrieve: %s -> %d results", qid, len(phrases))
    target = out or config.retrieval.results_path or (config.output_dir / "results.jsonl")
    artifacts = _Artifacts()
    try:
        artifacts.write(target, serialize_results(groups))
        inputs = {"corpus": config.corpus_path} if corpus is not None else {}
        manifest = _manifest(
            "retrieve",
            config,
            config.seed,
            inputs,
            artifacts,
            counts={"questions": len(questions),
                    "results": sum(len(v) for v in groups.values())},
        )
        artifacts.write(target.with_name(target.name + ".manifest.json"), _dump_json(manifest))
    except BaseException:
        artifacts.discard()
        raise
    return target


# -- generate ---------------------------------------------------------------


@dataclass
class GenerateResult:
    dataset_path: Path
    dictionary_path: Path
    manifest_path: Path
    counts: dict[str, int]
    dictionary: PseudoDictionary
    labeled: list[LabeledSentence]


def _match_time_rules(questions: Sequence[SubQuestion]) -> tuple[bool, bool]:
    """Rules 9/10 apply to the pooled dictionary, so they are enabled only
    when every sub-question asks for them; disagreements are logged."""
    on9 = {q.rule_toggles[9] for q in questions}
    on10 = {q.rule_toggles[10] for q in questions}
    if len(on9) > 1:
        log.warning("sub-questions disagree on rule 9; leaving it off")
    if len(on10) > 1:
        log.warning("sub-questions disagree on rule 10; leaving it off")
    return on9 == {True}, on10 == {True}


def cmd_generate(config: PipelineConfig, out: Path | None = None) -> GenerateResult:
    """Produce the weakly labeled dataset: retrieve (or replay), budget,
    normalize, build the dictionary, annotate, and write the artifacts."""
    out_dir = out or config.output_dir
    _require_files(
        config.corpus_path,
        config.stopwords_path,
        config.quality_phrases_path,
        config.retrieval.results_path if config.retrieval.mode == "replay" else None,
    )
    corpus = load_corpus(config.corpus_path)
    log.info("generate: corpus %d sentences", len(corpus))
    questions = build_question_set(
        config.types, config.template, config.default_k_l, config.default_rules
    )
    log.info("generate: %d sub-questions", len(questions))
    stopwords = load_stopwords(config.stopwords_path)
    quality = (
        load_phrase_list(config.quality_phrases_path)
        if config.quality_phrases_path
        else []
    )

    inputs: dict[str, Path] = {"corpus": config.corpus_path}
    if config.retrieval.mode == "replay":
        groups = read_results(config.retrieval.results_path, corpus)
        inputs["results"] = config.retrieval.results_path
    else:
        groups = _retrieve_groups(config, questions, corpus)
    results_total = sum(len(v) for v in groups.values())
    log.info("generate: %d retrieval results", results_total)

    kept_ids: set[str] = set()
    kept_total = 0
    normalized = []
    question_rows = []
    for q in questions:
        results = groups.get(q.question_id, [])
        if not results:
            log.warning("generate: no results for %s", q.question_id)
        budget = collect_training_sentences(results, q.k_l, question_id=q.question_id)
        if budget.exhausted:
            log.warning(
                "generate: %s exhausted at %d/%d sentences",
                q.question_id, len(budget.kept_sentences), q.k_l,
            )
        kept_ids.update(budget.kept_sentences)
        kept_total += len(budget.kept_phrases)
        ruleset = RuleSet.from_ids(q.enabled_rules(), stopwords, config.min_length)
        for phrase in budget.kept_phrases:
            normalized.extend(
                normalize(
                    phrase,
                    corpus[phrase.sentence_id],
                    ruleset,
                    q.type_label,
                    output_type=q.output_type,
                )
            )
        question_rows.append(
            {
                "question_id": q.question_id,
                "question": q.question_text,
                "k_l": q.k_l,
                "kept_sentences": len(budget.kept_sentences),
                "kept_phrases": len(budget.kept_phrases),
                "exhausted": budget.exhausted,
            }
        )
    log.info("generate: kept %d sentences, %d phrases, %d normalized",
             len(kept_ids), kept_total, len(normalized))

    dictionary = build_dictionary(normalized, quality)
    log.info("generate: dictionary %d entries, %d abbreviation patterns",
             len(dictionary.entries), len(dictionary.abbreviations))

    sentences = [s for sid, s in corpus.items() if sid in kept_ids]
    rule9, rule10 = _match_time_rules(questions)
    match_rules = RuleSet.from_ids(
        [r for r, on in ((9, rule9), (10, rule10)) if on], stopwords, config.min_length
    )
    if dictionary.entries:
        spans = match_sentences(dictionary, sentences, match_rules)
    else:
        log.warning("generate: empty dictionary, emitting all-O labels")
        spans = []
    assigned = assign_types(dictionary, spans)
    labeled = emit_bio(sentences, assigned)
    log.info("generate: %d matches over %d labeled sentences", len(assigned), len(labeled))

    counts = {
        "corpus_sentences": len(corpus),
        "questions": len(questions),
        "results": results_total,
        "kept_sentences": len(kept_ids),
        "kept_phrases": kept_total,
        "normalized_phrases": len(normalized),
        "dictionary_entries": len(dictionary.entries),
        "abbreviation_patterns": len(dictionary.abbreviations),
        "entities": len(assigned),
        "labeled_sentences": len(labeled),
    }

    artifacts = _Artifacts()
    dataset_path = out_dir / "dataset.conll"
    dictionary_path = out_dir / "dictionary.tsv"
    manifest_path = out_dir / "manifest.json"
    try:
        if config.retrieval.mode != "replay":
            artifacts.write(out_dir / "results.jsonl", serialize_results(groups))
        artifacts.write(dictionary_path, dump_dictionary(dictionary))
        artifacts.write(dataset_path, format_conll(labeled))
        manifest = _manifest(
            "generate", config, config.seed, inputs, artifacts, counts,
            extra={"questions_detail": question_rows},
        )
        artifacts.write(manifest_path, _dump_json(manifest))
    except BaseException:
        artifacts.discard()
        raise
    return GenerateResult(
        dataset_path=dataset_path,
        dictionary_path=dictionary_path,
        manifest_path=manifest_path,
        counts=counts,
        dictionary=dictionary,
        labeled=labeled,
    )


# -- selftrain --------------------------------------------------------------


@dataclass
class SelfTrainOutcome:
    checkpoint_path: Path
    log_path: Path
    report_path: Path
    manifest_path: Path
    best_f1: float
    best_round: int
    teacher_f1: float
    rounds: int


def cmd_selftrain(
    dataset_path: Path,
    validation_path: Path,
    config: PipelineConfig,
    out: Path | None = None,
    unlabeled_path: Path | None = None,
) -> SelfTrainOutcome:
    """Refine the generated labels by teacher-student training and keep the
    best student checkpoint by validation F1.

    The teacher pseudo-labels ``unlabeled_path`` (a JSONL corpus) when given;
    otherwise it re-labels the training sentences themselves. A separate pool
    helps most when it contains mentions the pseudo-dictionary missed.
    """
    if config.selftrain is None:
        raise ConfigError("config has no selftrain section")
    _require_files(dataset_path, validation_path, unlabeled_path)
    dataset = read_conll(dataset_path)
    validation = read_conll(validation_path)
    if not dataset:
        raise DataError(f"{dataset_path}: no sentences")
    if not validation:
        raise DataError(f"{validation_path}: no sentences")
    if unlabeled_path is not None:
        pool = load_corpus(unlabeled_path)
        unlabeled = [s.surfaces() for s in pool.values()]
        if not unlabeled:
            raise DataError(f"{unlabeled_path}: no sentences")
    else:
        unlabeled = [s.tokens for s in dataset]
    schedule = SelfTrainConfig(
        t_begin=config.selftrain.t_begin,
        t_update=config.selftrain.t_update,
        max_iterations=config.selftrain.max_iterations,
        seed=config.seed,
    )
    log.info(
        "selftrain: t_begin=%d t_update=%d max_iterations=%d seed=%d",
        schedule.t_begin, schedule.t_update, schedule.max_iterations, schedule.seed,
    )
    result = run_self_training(
        generated=dataset,
        unlabeled=unlabeled,
        validation=validation,
        tagger_factory=AveragedPerceptronTagger,
        config=schedule,
    )
    for record in result.rounds:
        log.info(
            "selftrain: round %d student_steps=%d f1=%.4f",
            record.round, record.student_steps, record.validation_f1,
        )
    log.info("selftrain: best round %d f1=%.4f", result.best_round, result.best.f1)

    out_dir = out or (config.output_dir / "selftrain")
    artifacts = _Artifacts()
    checkpoint_path = out_dir / "checkpoint.pkl"
    log_path = out_dir / "training_log.jsonl"
    report_path = out_dir / "report.json"
    manifest_path = out_dir / "manifest.json"
    try:
        artifacts.write(checkpoint_path, result.best.state)
        sidecar = {
            "step": result.best.step,
            "f1": result.best.f1,
            "seed": schedule.seed,
            "config_hash": schedule.config_hash(),
        }
        artifacts.write(
            checkpoint_path.with_suffix(checkpoint_path.suffix + ".json"),
            _dump_json(sidecar),
        )
        artifacts.write(log_path, format_training_log(result.rounds))
        report = {
            "teacher": result.teacher_report.to_record(),
            "rounds": [r.to_record() for r in result.rounds],
            "round_reports": [r.to_record() for r in result.reports],
            "best_round": result.best_round,
            "best_f1": result.best.f1,
        }
        artifacts.write(report_path, _dump_json(report))
        inputs = {"dataset": dataset_path, "validation": validation_path}
        if unlabeled_path is not None:
            inputs["unlabeled"] = unlabeled_path
        manifest = _manifest(
            "selftrain",
            config,
            schedule.seed,
            inputs,
            artifacts,
            counts={
                "dataset_sentences": len(dataset),
                "unlabeled_sentences": len(unlabeled),
                "validation_sentences": len(validation),
                "rounds": len(result.rounds),
            },
        )
        artifacts.write(manifest_path, _dump_json(manifest))
    except BaseException:
        artifacts.discard()
        raise
    return SelfTrainOutcome(
        checkpoint_path=checkpoint_path,
        log_path=log_path,
        report_path=report_path,
        manifest_path=manifest_path,
        best_f1=result.best.f1,
        best_round=result.best_round,
        teacher_f1=result.teacher_report.f1,
        rounds=len(result.rounds),
    )


# -- eval / judge-stats -----------------------------------------------------


def cmd_eval(gold_path: Path, pred_path: Path, out: Path | None = None) -> EvalReport:
    """Entity-level comparison of two CoNLL files aligned by position."""
    _require_files(gold_path, pred_path)
    gold = read_conll(gold_path)
    pred = read_conll(pred_path)
    if len(gold) != len(pred):
        raise DataError(
            f"gold has {len(gold)} sentences, prediction has {len(pred)}"
        )
    for g, p in zip(gold, pred):
        if g.tokens != p.tokens:
            raise DataError(f"token mismatch in sentence {g.sentence_id}")
    report = entity_f1(EntitySet.from_sentences(gold), EntitySet.from_sentences(pred))
    if out is not None:
        atomic_write(out, _dump_json(report.to_record()))
    return report


def cmd_judge_stats(
    results_path: Path,
    judgments_path: Path,
    k: int,
    out: Path | None = None,
) -> dict:
    """Per-question precision-at-k and top-k phrase diversity."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    _require_files(results_path, judgments_path)
    groups = read_results(results_path)
    with open(judgments_path, encoding="utf-8") as fh:
        judgments = RetrievalJudgments.from_lines(fh, source=str(judgments_path))
    per_question = {}
    for qid in sorted(groups):
        results = groups[qid]
        per_question[qid] = {
            "precision_at_k": precision_at_k(results, judgments, k),
            "diversity": diversity(results, k),
            "results": len(results),
        }
    if not per_question:
        raise DataError(f"{results_path}: no results to score")
    macro = sum(q["precision_at_k"] for q in per_question.values()) / len(per_question)
    doc = {
        "k": k,
        "per_question": per_question,
        "macro_precision_at_k": macro,
    }
    if out is not None:
        atomic_write(out, _dump_json(doc))
    return doc
