"""Phrase normalization.

Raw retrieved phrases are noisy: coordinated lists, stray punctuation,
generic lowercase fragments, echoes of the question itself. An ordered rule
pipeline (rules 1-8) cleans them into dictionary candidates; two further
rules (9-10) apply at dictionary-matching time and live in the annotator.

Rules, in the fixed order they run:

1. split the phrase on standalone ``and``
2. strip leading/trailing punctuation
3. drop fragments containing letters but no uppercase letter
4. strip a leading ``the ``
5. drop fragments shorter than ``min_length`` characters
6. drop fragments whose lowercase form is a stopword
7. drop fragments equal (case-insensitive) to the question's type label
8. attach a parenthetical abbreviation found next to the phrase in its
   evidence sentence

A disabled rule is skipped; enabled rules always run in ascending order.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Mapping

from .errors import ConfigError

if TYPE_CHECKING:  # pragma: no cover
    from .retrieval import CorpusSentence, RetrievedPhrase

#: Rules that operate on dictionary matches rather than on phrases.
MATCH_TIME_RULES = frozenset({9, 10})

DEFAULT_MIN_LENGTH = 3


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load one stopword per line; ``#`` starts a comment. None = bundled list."""
    if path is None:
        text = resources.files("askner").joinpath("data/stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    words = set()
    for line in text.splitlines():
        word = line.split("#", 1)[0].strip().lower()
        if word:
            words.add(word)
    return frozenset(words)


@dataclass(frozen=True)
class RuleSet:
    """Which rules are enabled, plus the knobs rules 5 and 6 read."""

    enabled: Mapping[int, bool]
    stopwords: frozenset[str] = frozenset()
    min_length: int = DEFAULT_MIN_LENGTH

    def __post_init__(self):
        bad = set(self.enabled) - set(range(1, 11))
        if bad:
            raise ConfigError(f"unknown normalization rule ids: {sorted(bad)}")
        if self.min_length < 1:
            raise ConfigError(f"min_length must be >= 1, got {self.min_length}")

    @classmethod
    def from_ids(
        cls,
        ids: Iterable[int],
        stopwords: frozenset[str] = frozenset(),
        min_length: int = DEFAULT_MIN_LENGTH,
    ) -> RuleSet:
        ids = set(ids)
        return cls({r: r in ids for r in range(1, 11)}, stopwords, min_length)

    def is_enabled(self, rule_id: int) -> bool:
        return bool(self.enabled.get(rule_id, False))


@dataclass(frozen=True)
class NormalizedPhrase:
    """One dictionary candidate surviving the rule pipeline.

    ``type_label`` here is the *output* tag the phrase counts toward (several
    sub-question labels may share one output tag). ``abbreviation`` is the
    short form rule 8 found in the evidence sentence, if any.
    """

    surface: str
    origin: "RetrievedPhrase"
    type_label: str
    abbreviation: str | None = None

    def __post_init__(self):
        if not self.surface or self.surface != self.surface.strip():
            raise ValueError(f"surface must be non-empty and trimmed: {self.surface!r}")


@dataclass(frozen=True)
class AbbreviationPair:
    """A (long form, short form) pair whose letters align right-to-left."""

    long_form: str
    short_form: str

    def __post_init__(self):
        if not _chars_match(self.short_form, self.long_form):
            raise ValueError(
                f"short form {self.short_form!r} does not align with {self.long_form!r}"
            )


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _rule_split_and(fragment: str, rules: RuleSet, type_label: str) -> list[str]:
    parts: list[list[str]] = [[]]
    for tok in fragment.split():
        if tok == "and":
            parts.append([])
        else:
            parts[-1].append(tok)
    return [" ".join(p) for p in parts if p]


def _rule_strip_punct(fragment: str, rules: RuleSet, type_label: str) -> list[str]:
    prev = None
    while fragment != prev:
        prev = fragment
        fragment = fragment.strip()
        while fragment and _is_punct(fragment[0]):
            fragment = fragment[1:]
        while fragment and _is_punct(fragment[-1]):
            fragment = fragment[:-1]
    return [fragment]


def _rule_require_uppercase(fragment: str, rules: RuleSet, type_label: str) -> list[str]:
    has_alpha = any(c.isalpha() for c in fragment)
    has_upper = any(c.isupper() for c in fragment)
    if has_alpha and not has_upper:
        return []
    return [fragment]


def _rule_strip_the(fragment: str, rules: RuleSet, type_label: str) -> list[str]:
    if fragment[:4].lower() == "the ":
        return [fragment[4:]]
    return [fragment]


def _rule_min_length(fragment: str, rules: RuleSet, type_label: str) -> list[str]:
    return [fragment] if len(fragment) >= rules.min_length else []


def _rule_stopword(fragment: str, rules: RuleSet, type_label: str) -> list[str]:
    return [] if fragment.lower() in rules.stopwords else [fragment]


def _collapse(text: str) -> str:
    return " ".join(text.split())


def _rule_drop_type_echo(fragment: str, rules: RuleSet, type_label: str) -> list[str]:
    if _collapse(fragment).lower() == _collapse(type_label).lower():
        return []
    return [fragment]


def _rule_abbreviation(fragment: str, rules: RuleSet, type_label: str) -> list[str]:
    # Detection needs the evidence sentence, which normalize() handles; as a
    # pure fragment transform this rule changes nothing.
    return [fragment]


_RULE_FUNCS = {
    1: _rule_split_and,
    2: _rule_strip_punct,
    3: _rule_require_uppercase,
    4: _rule_strip_the,
    5: _rule_min_length,
    6: _rule_stopword,
    7: _rule_drop_type_echo,
    8: _rule_abbreviation,
}


def apply_rule(rule_id: int, fragment: str, *, rules: RuleSet, type_label: str) -> list[str]:
    """Apply one normalization rule to one fragment, unconditionally.

    Returns the surviving fragments (possibly several for rule 1, possibly
    none for the drop rules). Fragments are whitespace-trimmed on the way in
    and out, and empties are discarded, so chaining apply_rule over the
    enabled rules reproduces normalize() exactly.
    """
    if rule_id in MATCH_TIME_RULES:
        raise ValueError(f"rule {rule_id} applies at dictionary-matching time, not here")
    if rule_id not in _RULE_FUNCS:
        raise ValueError(f"unknown normalization rule id: {rule_id}")
    fragment = fragment.strip()
    if not fragment:
        return []
    out = _RULE_FUNCS[rule_id](fragment, rules, type_label)
    return [f.strip() for f in out if f.strip()]


def normalize(
    phrase: "RetrievedPhrase",
    evidence: "CorpusSentence",
    rules: RuleSet,
    type_label: str,
    output_type: str | None = None,
) -> list[NormalizedPhrase]:
    """Run the enabled phrase rules (1-8) over one retrieved phrase.

    ``type_label`` is what rule 7 compares against (the sub-question label);
    ``output_type`` is the tag recorded on the results, defaulting to the
    label itself. Order within the output follows rule 1's split order.
    """
    label = output_type if output_type is not None else type_label
    fragments = [phrase.surface.strip()] if phrase.surface.strip() else []
    for rule_id in range(1, 8):
        if not rules.is_enabled(rule_id):
            continue
        fragments = [
            out
            for frag in fragments
            for out in apply_rule(rule_id, frag, rules=rules, type_label=type_label)
        ]
    results = []
    for frag in fragments:
        abbrev = None
        if rules.is_enabled(8) and frag in evidence.text:
            abbrev = detect_abbreviation(frag, evidence.text)
        results.append(
            NormalizedPhrase(surface=frag, origin=phrase, type_label=label, abbreviation=abbrev)
        )
    return results


def detect_abbreviation(long_form: str, sentence_text: str) -> str | None:
    """Find a parenthesized short form of ``long_form`` in ``sentence_text``.

    The candidate must sit in parentheses immediately after an occurrence of
    the long form, be 2..min(long-form tokens + 5, 2x its own length)
    characters, span at most two tokens, contain a letter, and its characters
    must match right-to-left into the long form with the first character
    landing at a word start. Returns None when nothing qualifies.
    """
    lf_tokens = long_form.split()
    if not lf_tokens:
        return None
    start = 0
    while True:
        idx = sentence_text.find(long_form, start)
        if idx < 0:
            return None
        tail = sentence_text[idx + len(long_form):]
        after = tail.lstrip()
        if after.startswith("("):
            close = after.find(")")
            if close > 1:
                candidate = after[1:close].strip()
                if _valid_short_form(candidate, lf_tokens) and _chars_match(candidate, long_form):
                    return candidate
        start = idx + 1


def _valid_short_form(candidate: str, lf_tokens: list[str]) -> bool:
    n = len(candidate)
    if not 2 <= n <= min(len(lf_tokens) + 5, 2 * n):
        return False
    if len(candidate.split()) > 2:
        return False
    return any(c.isalpha() for c in candidate)


def _chars_match(short_form: str, long_form: str) -> bool:
    """Right-to-left character alignment, first character at a word start."""
    s = len(short_form) - 1
    l = len(long_form) - 1
    while s >= 0:
        c = short_form[s].lower()
        if not c.isalnum():
            s -= 1
            continue
        while l >= 0 and (
            long_form[l].lower() != c
            or (s == 0 and l > 0 and long_form[l - 1].isalnum())
        ):
            l -= 1
        if l < 0:
            return False
        s -= 1
        l -= 1
    return True
