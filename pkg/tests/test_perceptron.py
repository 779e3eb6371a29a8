import random

from askner.metrics import extract_entities
from askner.perceptron import AveragedPerceptronTagger, word_shape
from testutil import labeled


def test_word_shape():
    assert word_shape("Paris") == "Xx"
    assert word_shape("IBM") == "X"
    assert word_shape("iPhone12") == "xXxd"
    assert word_shape("3M") == "dX"
    assert word_shape("co-op") == "x-x"
    assert word_shape("") == ""


def _dataset():
    rows = [
        (["Oslo", "froze", "over"], ["B-LOC", "O", "O"]),
        (["Anna", "visited", "Oslo"], ["B-PER", "O", "B-LOC"]),
        (["Bergen", "and", "Oslo", "agreed"], ["B-LOC", "O", "B-LOC", "O"]),
        (["Anna", "met", "Maria"], ["B-PER", "O", "B-PER"]),
        (["snow", "fell", "alone"], ["O", "O", "O"]),
        (["New", "York", "grew"], ["B-LOC", "I-LOC", "O"]),
    ]
    return [labeled(f"s{i}", toks, tags) for i, (toks, tags) in enumerate(rows)]


def test_untrained_tagger_predicts_all_o():
    tagger = AveragedPerceptronTagger()
    out = tagger.predict([["Oslo", "froze"], ["Anna"]])
    assert out == [["O", "O"], ["O"]]


def test_training_fits_the_training_set():
    tagger = AveragedPerceptronTagger()
    tagger.train(_dataset(), steps=60, seed=3)
    got = tagger.predict([s.tokens for s in _dataset()])
    assert got == [list(s.tags) for s in _dataset()]


def test_predictions_are_bio_legal():
    tagger = AveragedPerceptronTagger()
    tagger.train(_dataset(), steps=12, seed=0)
    rng = random.Random(1)
    vocab = ["Oslo", "froze", "Anna", "New", "York", "and", "snow", "IBM", "iPhone12"]
    for _ in range(50):
        words = [rng.choice(vocab) for _ in range(rng.randint(1, 12))]
        (tags,) = tagger.predict([words])
        assert len(tags) == len(words)
        extract_entities(tags)  # raises on malformed tags
        for prev, cur in zip(["O"] + tags, tags):
            if cur.startswith("I-"):
                assert prev in (f"B-{cur[2:]}", f"I-{cur[2:]}")


def test_same_seed_same_model():
    a = AveragedPerceptronTagger()
    b = AveragedPerceptronTagger()
    a.train(_dataset(), steps=25, seed=7)
    b.train(_dataset(), steps=25, seed=7)
    assert a.snapshot() == b.snapshot()
    c = AveragedPerceptronTagger()
    c.train(_dataset(), steps=25, seed=8)
    assert c.snapshot() != a.snapshot()


def test_snapshot_restore_roundtrip():
    a = AveragedPerceptronTagger()
    a.train(_dataset(), steps=20, seed=5)
    blob = a.snapshot()
    b = AveragedPerceptronTagger()
    b.restore(blob)
    assert b.snapshot() == blob
    probe = [["Oslo", "met", "Anna"], ["New", "York"]]
    assert b.predict(probe) == a.predict(probe)


def test_training_is_cumulative_after_restore():
    a = AveragedPerceptronTagger()
    a.train(_dataset(), steps=10, seed=5)
    b = AveragedPerceptronTagger()
    b.restore(a.snapshot())
    b.train(_dataset(), steps=10, seed=6)
    a.train(_dataset(), steps=10, seed=6)
    assert a.snapshot() == b.snapshot()


def test_zero_steps_is_a_no_op():
    a = AveragedPerceptronTagger()
    a.train(_dataset(), steps=0, seed=1)
    assert a.predict([["Oslo"]]) == [["O"]]
