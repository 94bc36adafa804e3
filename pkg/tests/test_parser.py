import datetime as dt
import io
import json

import pytest
from hypothesis import given, strategies as st

from trolldetect.parser import (
    BUTTONS,
    MODES,
    Kind,
    MalformedLine,
    ParseStats,
    RawRecord,
    classify_message,
    format_event,
    parse_lines,
    parse_record,
    parse_stream,
    serialize_record,
    to_event,
)


def test_parse_figure_record():
    rec = parse_record("<date>2014-02-14</date><time>08:16:23</time><user>yeniuss</user><msg>A</msg>")
    assert rec == RawRecord(dt.date(2014, 2, 14), dt.time(8, 16, 23), "yeniuss", "A")


def test_missing_user_is_malformed():
    with pytest.raises(MalformedLine, match="user"):
        parse_record("<date>2014-02-14</date><time>08:16:23</time><msg>A</msg>")


def test_millisecond_fraction():
    rec = parse_record("<date>2014-02-14</date><time>08:16:23.456</time><user>u</user><msg>left</msg>")
    assert rec.time.microsecond == 456_000
    # 2014-02-14T00:00Z is 1392336000 s; add 8h16m23.456s by hand
    assert rec.timestamp_ms == (1392336000 + 8 * 3600 + 16 * 60 + 23) * 1000 + 456
    assert rec.timestamp_ms == 1392365783456


def test_short_fraction_is_right_padded():
    rec = parse_record("<date>2014-02-14</date><time>08:16:23.4</time><user>u</user><msg>x</msg>")
    assert rec.timestamp_ms % 1000 == 400


@pytest.mark.parametrize("line", [
    "<date>2014-02-14</date><date>2014-02-14</date><time>08:16:23</time><user>u</user><msg>a</msg>",
    "<date>2014-02-30</date><time>08:16:23</time><user>u</user><msg>a</msg>",
    "<date>2014-02-14</date><time>25:16:23</time><user>u</user><msg>a</msg>",
    "<date>14-02-14</date><time>08:16:23</time><user>u</user><msg>a</msg>",
    "<date>2014-02-14</date><time>08:16:23</time><user></user><msg>a</msg>",
    "junk <date>2014-02-14</date><time>08:16:23</time><user>u</user><msg>a</msg>",
    "",
])
def test_malformed_lines(line):
    with pytest.raises(MalformedLine):
        parse_record(line)


def test_tags_in_any_order():
    rec = parse_record("<msg>start</msg><user>bob</user><time>00:00:01</time><date>2014-03-01</date>")
    assert (rec.user, rec.msg) == ("bob", "start")


@pytest.mark.parametrize("msg, kind, command", [
    ("A", Kind.BUTTON, "a"),
    ("anarchy", Kind.MODE_VOTE, "anarchy"),
    ("Praise Helix!", Kind.SPAM, None),
    ("a a a", Kind.SPAM, None),
    ("  Start\t", Kind.BUTTON, "start"),
    ("DEMOCRACY", Kind.MODE_VOTE, "democracy"),
    ("", Kind.SPAM, None),
    ("upp", Kind.SPAM, None),
])
def test_classify(msg, kind, command):
    cls = classify_message(msg)
    assert cls.kind is kind and cls.command == command


def _case_variants(word):
    return st.lists(st.booleans(), min_size=len(word), max_size=len(word)).map(
        lambda flags: "".join(c.upper() if f else c for c, f in zip(word, flags))
    )


@given(st.sampled_from(BUTTONS + MODES).flatmap(lambda c: st.tuples(st.just(c), _case_variants(c))))
def test_classify_recovers_command_for_any_case(pair):
    command, rendered = pair
    assert classify_message(rendered).command == command


_text = st.text(
    alphabet=st.characters(blacklist_characters="<>\r\n", blacklist_categories=("Cs",)), max_size=30
)
_records = st.builds(
    RawRecord,
    st.dates(min_value=dt.date(1970, 1, 1), max_value=dt.date(2999, 12, 31)),
    st.times().map(lambda t: t.replace(microsecond=t.microsecond // 1000 * 1000)),
    _text.filter(bool),
    _text,
)


@given(_records)
def test_record_round_trip(rec):
    assert parse_record(serialize_record(rec)) == rec


@given(_records)
def test_event_round_trip(rec):
    event = to_event(rec)
    assert to_event(parse_record(format_event(event))) == event


@given(st.lists(st.one_of(_records.map(serialize_record), _text), max_size=40))
def test_event_count_is_lines_minus_malformed(lines):
    events, stats = parse_lines(lines)
    assert len(events) == stats.lines - stats.malformed
    assert stats.lines == len(lines)


def test_out_of_order_counted_not_dropped():
    lines = [
        "<date>2014-02-14</date><time>08:00:10</time><user>u</user><msg>a</msg>",
        "<date>2014-02-14</date><time>08:00:05</time><user>u</user><msg>b</msg>",
        "<date>2014-02-14</date><time>08:00:11</time><user>u</user><msg>b</msg>",
        "garbage",
    ]
    stats = ParseStats()
    events = list(parse_stream(io.StringIO("\n".join(lines) + "\n"), stats))
    assert len(events) == 3
    assert json.loads(stats.to_json()) == {"lines": 4, "malformed": 1, "out_of_order": 1}


def test_bytes_lines_accepted():
    events, stats = parse_lines([b"<date>2014-02-14</date><time>08:00:10</time><user>u</user><msg>a</msg>\n"])
    assert events[0].command == "a" and stats.malformed == 0
