"""Teacher-student self-training over weakly labeled data.

A teacher is trained on the generated dataset for ``t_begin`` steps, then
rounds alternate: the teacher pseudo-labels the (unlabeled) training
sentences, a student initialized from the teacher trains ``t_update`` steps
on those pseudo-labels, is evaluated on held-out validation, and replaces
the teacher. This repeats until ``max_iterations`` student steps have run;
the checkpoint with the best validation F1 (earliest on ties) wins.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

from .annotator import LabeledSentence
from .errors import ConfigError, InternalInvariantError
from .metrics import EntitySet, EvalReport, entity_f1

#: Reference step schedules (t_begin, t_update) tuned per benchmark family.
SCHEDULE_PRESETS: dict[str, tuple[int, int]] = {
    "conll2003": (900, 300),
    "wikigold": (500, 300),
    "wnut16": (900, 450),
    "ncbi_disease": (900, 300),
    "bc5cdr": (500, 200),
    "chemdner": (900, 300),
    "enzyme": (350, 700),
    "astronomical": (500, 300),
    "award": (350, 400),
    "conference": (200, 100),
}

#: Default number of teacher replacements when max_iterations is left unset.
DEFAULT_ROUNDS = 6


class TaggerInterface(Protocol):
    """What the loop needs from a tagger. ``predict`` takes token sequences
    and returns aligned, BIO-well-formed tag sequences; ``snapshot`` and
    ``restore`` must round-trip exactly (equal states, equal bytes)."""

    def train(self, dataset: Sequence[LabeledSentence], steps: int, seed: int) -> None: ...

    def predict(self, sentences: Sequence[Sequence[str]]) -> list[list[str]]: ...

    def snapshot(self) -> bytes: ...

    def restore(self, state: bytes) -> None: ...


@dataclass(frozen=True)
class SelfTrainConfig:
    t_begin: int
    t_update: int
    max_iterations: int
    seed: int = 0

    def __post_init__(self):
        for name in ("t_begin", "t_update", "max_iterations"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")

    @classmethod
    def from_preset(
        cls, name: str, max_iterations: int | None = None, seed: int = 0
    ) -> "SelfTrainConfig":
        try:
            t_begin, t_update = SCHEDULE_PRESETS[name]
        except KeyError:
            raise ConfigError(
                f"unknown schedule preset {name!r}; available: {sorted(SCHEDULE_PRESETS)}"
            ) from None
        if max_iterations is None:
            max_iterations = DEFAULT_ROUNDS * t_update
        return cls(t_begin=t_begin, t_update=t_update, max_iterations=max_iterations, seed=seed)

    def config_hash(self) -> str:
        blob = json.dumps(
            {
                "t_begin": self.t_begin,
                "t_update": self.t_update,
                "max_iterations": self.max_iterations,
                "seed": self.seed,
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Checkpoint:
    """A tagger state captured after a student round."""

    state: bytes
    step: int  # cumulative student steps when captured (0 = teacher warmup)
    f1: float


@dataclass(frozen=True)
class RoundRecord:
    round: int
    teacher_steps: int
    student_steps: int
    validation_f1: float

    def to_record(self) -> dict:
        return {
            "round": self.round,
            "teacher_steps": self.teacher_steps,
            "student_steps": self.student_steps,
            "validation_f1": self.validation_f1,
        }


@dataclass
class SelfTrainResult:
    best: Checkpoint
    best_round: int
    rounds: list[RoundRecord]
    teacher_report: EvalReport  # warmed-up teacher, before any replacement
    reports: list[EvalReport] = field(default_factory=list)


def expected_rounds(config: SelfTrainConfig) -> int:
    """How many teacher replacements the schedule performs."""
    return math.ceil(config.max_iterations / config.t_update)


def _evaluate(
    tagger: TaggerInterface, validation: Sequence[LabeledSentence]
) -> EvalReport:
    tokens = [s.tokens for s in validation]
    predicted = tagger.predict(tokens)
    pred_sentences = []
    for sent, tags in zip(validation, predicted):
        if len(tags) != len(sent.tokens):
            raise InternalInvariantError(
                f"tagger returned {len(tags)} tags for {len(sent.tokens)} tokens "
                f"in {sent.sentence_id}"
            )
        pred_sentences.append(LabeledSentence(sent.sentence_id, sent.tokens, tuple(tags)))
    return entity_f1(
        EntitySet.from_sentences(validation), EntitySet.from_sentences(pred_sentences)
    )


def run_self_training(
    generated: Sequence[LabeledSentence],
    unlabeled: Sequence[Sequence[str]],
    validation: Sequence[LabeledSentence],
    tagger_factory: Callable[[], TaggerInterface],
    config: SelfTrainConfig,
) -> SelfTrainResult:
    """Run the teacher-student schedule and return every round's checkpoint.

    ``unlabeled`` is the token side of the sentences being relabeled each
    round — normally the generated dataset's own tokens. The best checkpoint
    is chosen by validation F1 with earlier rounds winning ties.
    """
    if not generated:
        raise ConfigError("generated dataset is empty")
    if not validation:
        raise ConfigError("validation dataset is empty")
    if not unlabeled:
        raise ConfigError("no unlabeled sentences to relabel")

    teacher = tagger_factory()
    try:
        teacher.train(generated, config.t_begin, config.seed)
    except Exception as e:
        e.args = (f"teacher warmup failed: {e}",)
        raise
    teacher_report = _evaluate(teacher, validation)

    rounds: list[RoundRecord] = []
    reports: list[EvalReport] = []
    checkpoints: list[Checkpoint] = []
    done = 0
    round_no = 0
    while done < config.max_iterations:
        round_no += 1
        steps = min(config.t_update, config.max_iterations - done)
        pseudo_tags = teacher.predict(unlabeled)
        pseudo = [
            LabeledSentence(f"u{idx:06d}", tuple(words), tuple(tags))
            for idx, (words, tags) in enumerate(zip(unlabeled, pseudo_tags), 1)
        ]
        student = tagger_factory()
        student.restore(teacher.snapshot())
        try:
            student.train(pseudo, steps, config.seed + round_no)
        except Exception as e:
            e.args = (f"student training failed in round {round_no}: {e}",)
            raise
        done += steps
        report = _evaluate(student, validation)
        state = student.snapshot()
        checkpoints.append(Checkpoint(state=state, step=done, f1=report.f1))
        rounds.append(
            RoundRecord(
                round=round_no,
                teacher_steps=config.t_begin,
                student_steps=done,
                validation_f1=report.f1,
            )
        )
        reports.append(report)
        teacher.restore(state)
        if teacher.snapshot() != state:
            raise InternalInvariantError("teacher state diverged from student snapshot")

    best_idx = max(range(len(checkpoints)), key=lambda i: (checkpoints[i].f1, -i))
    return SelfTrainResult(
        best=checkpoints[best_idx],
        best_round=best_idx + 1,
        rounds=rounds,
        teacher_report=teacher_report,
        reports=reports,
    )


# -- artifacts -------------------------------------------------------------


def format_training_log(rounds: Sequence[RoundRecord]) -> str:
    lines = [json.dumps(r.to_record(), sort_keys=True) for r in rounds]
    return "\n".join(lines) + "\n" if lines else ""


def save_checkpoint(
    path: str | Path, checkpoint: Checkpoint, seed: int, config_hash: str
) -> None:
    """Write the tagger blob plus a JSON sidecar describing it."""
    path = Path(path)
    path.write_bytes(checkpoint.state)
    sidecar = {
        "step": checkpoint.step,
        "f1": checkpoint.f1,
        "seed": seed,
        "config_hash": config_hash,
    }
    path.with_suffix(path.suffix + ".json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_checkpoint(path: str | Path) -> tuple[bytes, dict]:
    path = Path(path)
    sidecar_path = path.with_suffix(path.suffix + ".json")
    try:
        sidecar = json.loads(sidecar_path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        sidecar = {}
    return path.read_bytes(), sidecar
