"""Self-contained benchmark generator.

Builds a small two-type corpus (fictional diseases and cities) with known
gold labels, plus a replay-mode retrieval results file, a gold CoNLL file
aligned with the generated dataset, a validation split, and a ready-to-run
config.

30% of each vocabulary (6 of 20 surfaces per type) is held out: those
surfaces occur in the corpus and in the gold labels but are never
retrieved, so the pseudo-dictionary misses them and the generated dataset
labels them O. In the training corpus they sit in strong cue contexts
("cases of X", "clinics in Y") shared with the retrieved surfaces; in the
validation split they stand sentence-initial, where only word identity
helps. That layout rewards self-training: a briefly warmed-up teacher still
tags the held-out surfaces from context when it relabels the training
corpus, and students trained on those pseudo-labels learn the surfaces
themselves, which pays off on the validation split.

The retrieval file also contains junk hits (lowercase nouns, stopwords,
type echoes, ``the``-prefixed spans) that the normalization rules must
remove before they pollute the dictionary. Everything is derived from one
RNG seed, so regenerating with the same seed reproduces every output byte
for byte.
"""

from __future__ import annotations

import argparse
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .annotator import LabeledSentence
from .conll import format_conll
from .retrieval import RetrievedPhrase, serialize_results

DEFAULT_SEED = 7

# Surfaces share suffix tokens ("Fever", "Pox", ...) and character suffixes
# across the seen/held-out split so a feature-based tagger has something to
# generalize from.
DISEASES_SEEN = [
    "Kormid Fever", "Velsan Pox", "Tarnic Syndrome", "Ostrel Plague",
    "Murvane Fever", "Dresor Pox", "Quillen Syndrome", "Harvek Plague",
    "Lormess Fever", "Bantrel Pox", "Sorvin Syndrome", "Ettrim Plague",
    "Waldric Fever", "Norvex Pox",
]
DISEASES_HELD = [
    "Galmid Fever", "Dorsan Pox", "Petrel Syndrome", "Fenvane Plague",
    "Torvek Fever", "Grimess Pox",
]
CITIES_SEEN = [
    "Drenholm", "Oulberg", "Maresford", "Silmouth", "Velgrad", "Quenholm",
    "Ardenberg", "Crowford", "Rokmouth", "Naldgrad", "Port Haslin",
    "Port Ebrin", "Ruvelia", "Vantessa",
]
CITIES_HELD = [
    "Grimholm", "Tharberg", "Helford", "Karsmouth", "Vosgrad", "Port Welden",
]

# {D} / {C} expand to a disease / city surface. Indices 0-10 are strong-cue
# templates (entities sit next to telltale context words); 11-16 are weak-cue
# templates whose entity stands sentence-initial, a position capitalized
# non-entities occupy too. Template 9 retrieves the span with its leading
# "The" (normalization must strip it); template 10 sometimes retrieves the
# span with the trailing "." attached.
_TEMPLATES = [
    "Doctors in {C} reported cases of {D} last winter .",
    "A new outbreak of {D} spread through {C} last spring .",
    "Patients with {D} filled the clinics in {C} .",
    "Researchers from {C} studied {D} for decades .",
    "Several travelers were diagnosed with {D} near {C} .",
    "Health workers in {C} tracked {D} cases daily .",
    "The council of {C} funded research on {D} .",
    "Local nurses in {C} treated {D} without delay .",
    "An epidemic of {D} reached {C} by autumn .",
    "The {D} outbreak of 1987 shocked {C} .",
    "Quarantine rules were lifted after the decline of {D} .",
    "{D} worried the council through January .",
    "{D} stayed in the news until spring .",
    "{D} faded from memory by Monday .",
    "{C} newspapers covered the story again .",
    "{C} officials replied after Thursday .",
    "{C} markets reopened without ceremony .",
]
_THE_PREFIX_TEMPLATE = 9
_TRAILING_DOT_TEMPLATE = 10
_WEAK = tuple(range(11, 17))
# single-slot templates: the one mention must be retrievable (seen), or the
# sentence budget would drop the sentence and break gold alignment
_D_ONLY = {10, 11, 12, 13}
_C_ONLY = {14, 15, 16}

# Junk retrieval hits: (template, [(phrase, question type)]). Each phrase is
# a literal token run in the expanded sentence and must be removed by the
# normalization rules (lowercase-only, too short, stopword, type echo, or
# "The "+type echo).
_JUNK = [
    ("Was the hospital in {C} prepared for fever season ?",
     [("Was", "disease"), ("the hospital", "disease"), ("fever", "disease")]),
    ("Many patients recovered from illness in {C} clinics .",
     [("illness", "disease")]),
    ("Xi oversaw the disease registry for {C} .",
     [("Xi", "disease"), ("disease", "disease")]),
    ("Disease prevention remained a priority in {C} .",
     [("Disease", "disease")]),
    ("The city near {C} grew quickly .",
     [("The city", "city")]),
]

TRAIN_RANDOM = 176
VALIDATION_SIZE = 40
HELD_OUT_TRAIN_RATE = 0.30
HELD_OUT_VALIDATION_RATE = 0.5


@dataclass
class _Draft:
    tokens: list[str]
    # (tok_start, tok_end, type, seen)
    entities: list[tuple[int, int, str, bool]] = field(default_factory=list)
    # retrieval spans: (tok_start, tok_end, question type)
    rows: list[tuple[int, int, str]] = field(default_factory=list)


def _expand(template: str, disease: str | None, city: str | None):
    tokens: list[str] = []
    d_span = c_span = None
    for part in template.split():
        if part == "{D}":
            words = disease.split()
            d_span = (len(tokens), len(tokens) + len(words))
            tokens.extend(words)
        elif part == "{C}":
            words = city.split()
            c_span = (len(tokens), len(tokens) + len(words))
            tokens.extend(words)
        else:
            tokens.append(part)
    return tokens, d_span, c_span


def _find_run(tokens: list[str], phrase: str) -> tuple[int, int]:
    words = phrase.split()
    for i in range(len(tokens) - len(words) + 1):
        if tokens[i:i + len(words)] == words:
            return i, i + len(words)
    raise ValueError(f"phrase {phrase!r} not found in {tokens}")


def _draft_regular(rng: random.Random, t_idx: int, disease: str | None,
                   city: str | None, d_seen: bool, c_seen: bool) -> _Draft:
    tokens, d_span, c_span = _expand(_TEMPLATES[t_idx], disease, city)
    draft = _Draft(tokens=tokens)
    if d_span is not None:
        draft.entities.append((*d_span, "disease", d_seen))
        if d_seen:
            s, e = d_span
            if t_idx == _THE_PREFIX_TEMPLATE:
                s -= 1
            if t_idx == _TRAILING_DOT_TEMPLATE and rng.random() < 0.5:
                e += 1
            draft.rows.append((s, e, "disease"))
    if c_span is not None:
        draft.entities.append((*c_span, "city", c_seen))
        if c_seen:
            draft.rows.append((*c_span, "city"))
    return draft


def _draft_junk(template: str, junk: list[tuple[str, str]], city: str) -> _Draft:
    tokens, _, c_span = _expand(template, None, city)
    draft = _Draft(tokens=tokens)
    draft.entities.append((*c_span, "city", True))
    draft.rows.append((*c_span, "city"))
    for phrase, qtype in junk:
        draft.rows.append((*_find_run(tokens, phrase), qtype))
    return draft


def _fill(rng: random.Random, t_idx: int, held_rate: float):
    """Pick surfaces for a template's slots; None where the slot is absent."""
    disease = city = None
    if t_idx not in _C_ONLY:
        pool = DISEASES_HELD if rng.random() < held_rate else DISEASES_SEEN
        disease = rng.choice(pool)
    if t_idx not in _D_ONLY:
        pool = CITIES_HELD if rng.random() < held_rate else CITIES_SEEN
        city = rng.choice(pool)
    return disease, city


def _offsets(tokens: list[str]) -> list[tuple[int, int]]:
    spans = []
    pos = 0
    for tok in tokens:
        spans.append((pos, pos + len(tok)))
        pos += len(tok) + 1
    return spans


def _tags(draft_tokens: list[str], entities) -> tuple[str, ...]:
    tags = ["O"] * len(draft_tokens)
    for s, e, typ, _ in entities:
        tags[s] = f"B-{typ}"
        for i in range(s + 1, e):
            tags[i] = f"I-{typ}"
    return tuple(tags)


def _sentence_record(sid: str, tokens: list[str]) -> str:
    spans = _offsets(tokens)
    return json.dumps({
        "sentence_id": sid,
        "text": " ".join(tokens),
        "tokens": [[tok, s, e] for tok, (s, e) in zip(tokens, spans)],
    }, ensure_ascii=False)


_CONFIG_TEMPLATE = """\
# Generated benchmark configuration; regenerate with
#   python -m askner.synthetic --out <dir> --seed {seed}
seed: {seed}
corpus: corpus.jsonl
retrieval:
  mode: replay
  results: results.jsonl
types:
  - name: disease
    k_l: {k_disease}
    rules: [2, 3, 4, 5, 6, 7]
    labels: [disease]
  - name: city
    k_l: {k_city}
    rules: [2, 3, 4, 5, 6, 7]
    labels: [city]
selftrain:
  t_begin: 200
  t_update: 100
  max_iterations: 1200
output_dir: out
"""


@dataclass(frozen=True)
class BenchmarkPaths:
    corpus: Path
    results: Path
    gold: Path
    validation: Path
    config: Path

    def all(self) -> tuple[Path, ...]:
        return (self.corpus, self.results, self.gold, self.validation,
                self.config)


def build_benchmark(out_dir: str | Path, seed: int = DEFAULT_SEED) -> BenchmarkPaths:
    """Write the benchmark files into ``out_dir`` and return their paths."""
    rng = random.Random(seed)
    drafts: list[_Draft] = []

    # every seen surface occurs at least once
    for i in range(len(DISEASES_SEEN)):
        drafts.append(_draft_regular(
            rng, i % 9, DISEASES_SEEN[i], CITIES_SEEN[i], True, True))

    for _ in range(TRAIN_RANDOM):
        t = rng.randrange(len(_TEMPLATES))
        disease, city = _fill(rng, t, HELD_OUT_TRAIN_RATE)
        d_seen = disease in DISEASES_SEEN if disease else True
        c_seen = city in CITIES_SEEN if city else True
        if t in _D_ONLY and not d_seen:
            disease, d_seen = rng.choice(DISEASES_SEEN), True
        if t in _C_ONLY and not c_seen:
            city, c_seen = rng.choice(CITIES_SEEN), True
        if not d_seen and not c_seen:
            # keep at least one retrievable mention per sentence so the
            # sentence budget never drops a gold sentence
            city, c_seen = rng.choice(CITIES_SEEN), True
        drafts.append(_draft_regular(rng, t, disease, city, d_seen, c_seen))

    for j, (template, junk) in enumerate(_JUNK):
        for city in (CITIES_SEEN[(2 * j) % 14], CITIES_SEEN[(2 * j + 5) % 14]):
            drafts.append(_draft_junk(template, junk, city))

    rng.shuffle(drafts)

    corpus_lines: list[str] = []
    gold: list[LabeledSentence] = []
    rows_by_type: dict[str, list] = {"disease": [], "city": []}
    for idx, draft in enumerate(drafts, 1):
        sid = f"t{idx:04d}"
        spans = _offsets(draft.tokens)
        text = " ".join(draft.tokens)
        corpus_lines.append(_sentence_record(sid, draft.tokens))
        gold.append(LabeledSentence(sid, tuple(draft.tokens),
                                    _tags(draft.tokens, draft.entities)))
        for s, e, qtype in draft.rows:
            cs, ce = spans[s][0], spans[e - 1][1]
            rows_by_type[qtype].append((sid, cs, ce, text[cs:ce]))

    groups: dict[str, list[RetrievedPhrase]] = {}
    k_l: dict[str, int] = {}
    for qtype, rows in rows_by_type.items():
        qid = f"{qtype}:{qtype}"
        order = rng.sample(rows, len(rows))
        groups[qid] = [
            RetrievedPhrase(qid, i + 1, surf, round(100 - 0.25 * i, 2), sid, cs, ce)
            for i, (sid, cs, ce, surf) in enumerate(order)
        ]
        k_l[qtype] = len({sid for sid, _, _, _ in rows})

    validation: list[LabeledSentence] = []
    for i in range(VALIDATION_SIZE):
        t = rng.choice(_WEAK)
        disease, city = _fill(rng, t, HELD_OUT_VALIDATION_RATE)
        tokens, d_span, c_span = _expand(_TEMPLATES[t], disease, city)
        entities = []
        if d_span is not None:
            entities.append((*d_span, "disease", True))
        if c_span is not None:
            entities.append((*c_span, "city", True))
        validation.append(LabeledSentence(
            f"v{i + 1:04d}", tuple(tokens), _tags(tokens, entities)))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = BenchmarkPaths(
        corpus=out / "corpus.jsonl",
        results=out / "results.jsonl",
        gold=out / "gold.conll",
        validation=out / "validation.conll",
        config=out / "config.yaml",
    )
    paths.corpus.write_text("\n".join(corpus_lines) + "\n", encoding="utf-8")
    paths.results.write_text(serialize_results(groups), encoding="utf-8")
    paths.gold.write_text(format_conll(gold), encoding="utf-8")
    paths.validation.write_text(format_conll(validation), encoding="utf-8")
    paths.config.write_text(_CONFIG_TEMPLATE.format(
        seed=seed, k_disease=k_l["disease"], k_city=k_l["city"]), encoding="utf-8")
    return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        description="regenerate the bundled synthetic benchmark")
    parser.add_argument("--out", default="data/synthetic", help="output directory")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = parser.parse_args(argv)
    for p in build_benchmark(args.out, args.seed).all():
        print(p)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
