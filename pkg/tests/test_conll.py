import pytest

from askner.conll import format_conll, parse_conll, read_conll, write_conll
from askner.errors import DataError
from testutil import labeled


def _sentences():
    return [
        labeled("s000001", ["Oslo", "froze"], ["B-LOC", "O"]),
        labeled("s000002", ["Anna", "met", "Bo"], ["B-PER", "O", "B-PER"]),
    ]


def test_format_is_tab_separated_with_blank_lines():
    text = format_conll(_sentences())
    assert text == (
        "Oslo\tB-LOC\n"
        "froze\tO\n"
        "\n"
        "Anna\tB-PER\n"
        "met\tO\n"
        "Bo\tB-PER\n"
    )
    assert format_conll([]) == ""


def test_roundtrip_identity():
    original = _sentences()
    again = parse_conll(format_conll(original))
    assert again == original
    # a second trip is byte-stable
    assert format_conll(again) == format_conll(original)


def test_file_roundtrip(tmp_path):
    path = tmp_path / "data.conll"
    write_conll(path, _sentences())
    assert read_conll(path) == _sentences()


def test_reader_synthesizes_positional_ids():
    got = parse_conll("A\tO\n\nB\tO\n")
    assert [s.sentence_id for s in got] == ["s000001", "s000002"]


def test_reader_skips_extra_blank_lines():
    got = parse_conll("A\tO\n\n\n\nB\tO\n\n")
    assert len(got) == 2


def test_reader_rejects_malformed_lines():
    with pytest.raises(DataError, match=":2"):
        parse_conll("A\tO\nB O\n")
    with pytest.raises(DataError, match="empty tag"):
        parse_conll("A\t\n")
    with pytest.raises(DataError, match=":1"):
        parse_conll("one\ttwo\tthree\n")


def test_tags_with_spaces_survive():
    sents = [labeled("s000001", ["Arsenal"], ["B-sports team"])]
    assert parse_conll(format_conll(sents)) == sents


def test_writer_rejects_tabs_in_tokens():
    with pytest.raises(DataError, match="tab"):
        format_conll([labeled("s1", ["a\tb"], ["O"])])


def test_empty_input_parses_to_nothing():
    assert parse_conll("") == []
    assert parse_conll("\n\n") == []
