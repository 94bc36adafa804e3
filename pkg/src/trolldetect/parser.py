"""Parsing and classification of chat log lines.

A log line looks like::

    <date>2014-02-14</date><time>08:16:23</time><user>yeniuss</user><msg>A</msg>

Tags may appear in any order but each exactly once. The time may carry a
``.mmm`` millisecond fraction.
"""

from __future__ import annotations

import calendar
import datetime as dt
import enum
import json
import re
from dataclasses import asdict, dataclass
from typing import Iterable, Iterator

BUTTONS = ("a", "b", "down", "left", "right", "select", "start", "up")
MODES = ("anarchy", "democracy")

_TAG_RE = re.compile(r"<(date|time|user|msg)>(.*?)</\1>", re.DOTALL)
_DATE_RE = re.compile(r"(\d{4})-(\d{2})-(\d{2})")
_TIME_RE = re.compile(r"(\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,3}))?")
_ASCII_WS = " \t\n\r\x0b\x0c"


class MalformedLine(ValueError):
    """A log line that cannot be turned into a record."""


class Kind(enum.Enum):
    BUTTON = "button"
    MODE_VOTE = "mode_vote"
    SPAM = "spam"


@dataclass(frozen=True, slots=True)
class MessageClass:
    kind: Kind
    command: str | None = None

    @property
    def is_button(self) -> bool:
        return self.kind is Kind.BUTTON

    @property
    def is_mode_vote(self) -> bool:
        return self.kind is Kind.MODE_VOTE

    @property
    def is_spam(self) -> bool:
        return self.kind is Kind.SPAM


SPAM = MessageClass(Kind.SPAM)
_COMMANDS = {b: MessageClass(Kind.BUTTON, b) for b in BUTTONS}
_COMMANDS.update({m: MessageClass(Kind.MODE_VOTE, m) for m in MODES})


def classify_message(msg: str) -> MessageClass:
    """Exact match of the trimmed, case-folded message against the ten commands."""
    return _COMMANDS.get(msg.strip(_ASCII_WS).casefold(), SPAM)


@dataclass(frozen=True, slots=True)
class RawRecord:
    date: dt.date
    time: dt.time
    user: str
    msg: str

    @property
    def timestamp_ms(self) -> int:
        # naive timestamps, mapped onto the epoch as if UTC
        secs = calendar.timegm(
            (self.date.year, self.date.month, self.date.day,
             self.time.hour, self.time.minute, self.time.second)
        )
        return secs * 1000 + self.time.microsecond // 1000


@dataclass(frozen=True, slots=True)
class ChatEvent:
    timestamp_ms: int
    username: str
    message_class: MessageClass
    raw_msg: str

    @property
    def kind(self) -> Kind:
        return self.message_class.kind

    @property
    def command(self) -> str | None:
        return self.message_class.command


def _parse_date(text: str) -> dt.date:
    m = _DATE_RE.fullmatch(text)
    if m is None:
        raise MalformedLine(f"bad date {text!r}")
    try:
        return dt.date(int(m[1]), int(m[2]), int(m[3]))
    except ValueError as exc:
        raise MalformedLine(f"bad date {text!r}") from exc


def _parse_time(text: str) -> dt.time:
    m = _TIME_RE.fullmatch(text)
    if m is None:
        raise MalformedLine(f"bad time {text!r}")
    ms = int(m[4].ljust(3, "0")) if m[4] else 0
    try:
        return dt.time(int(m[1]), int(m[2]), int(m[3]), ms * 1000)
    except ValueError as exc:
        raise MalformedLine(f"bad time {text!r}") from exc


def parse_record(line: str) -> RawRecord:
    """Parse one log line. Raises :class:`MalformedLine`."""
    line = line.rstrip("\r\n")
    fields: dict[str, str] = {}
    leftover = []
    pos = 0
    for m in _TAG_RE.finditer(line):
        leftover.append(line[pos:m.start()])
        pos = m.end()
        tag = m[1]
        if tag in fields:
            raise MalformedLine(f"duplicate <{tag}> tag")
        fields[tag] = m[2]
    leftover.append(line[pos:])
    if "".join(leftover).strip():
        raise MalformedLine("unexpected text outside tags")
    missing = [t for t in ("date", "time", "user", "msg") if t not in fields]
    if missing:
        raise MalformedLine(f"missing tag(s): {', '.join(missing)}")
    if not fields["user"]:
        raise MalformedLine("empty username")
    return RawRecord(
        _parse_date(fields["date"]), _parse_time(fields["time"]), fields["user"], fields["msg"]
    )


def serialize_record(record: RawRecord) -> str:
    t = record.time
    clock = f"{t.hour:02d}:{t.minute:02d}:{t.second:02d}"
    if t.microsecond:
        clock += f".{t.microsecond // 1000:03d}"
    return (
        f"<date>{record.date.isoformat()}</date><time>{clock}</time>"
        f"<user>{record.user}</user><msg>{record.msg}</msg>"
    )


def record_from_event(event: ChatEvent) -> RawRecord:
    stamp = dt.datetime.fromtimestamp(event.timestamp_ms / 1000, dt.timezone.utc)
    # fromtimestamp on floats can round the last millisecond; rebuild it exactly
    stamp = stamp.replace(microsecond=(event.timestamp_ms % 1000) * 1000)
    return RawRecord(stamp.date(), stamp.time().replace(tzinfo=None), event.username, event.raw_msg)


def format_event(event: ChatEvent) -> str:
    return serialize_record(record_from_event(event))


def to_event(record: RawRecord) -> ChatEvent:
    return ChatEvent(record.timestamp_ms, record.user, classify_message(record.msg), record.msg)


@dataclass(slots=True)
class ParseStats:
    lines: int = 0
    malformed: int = 0
    out_of_order: int = 0

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def parse_stream(source: Iterable[str | bytes], stats: ParseStats | None = None) -> Iterator[ChatEvent]:
    """Yield events from a line source, skipping (and counting) malformed lines.

    ``stats`` is updated in place while the generator runs; pass one in to
    read the counts afterwards. Blank lines count as malformed.
    """
    if stats is None:
        stats = ParseStats()
    latest = None
    for line in source:
        if isinstance(line, bytes):
            line = line.decode("utf-8", errors="replace")
        stats.lines += 1
        try:
            record = parse_record(line)
        except MalformedLine:
            stats.malformed += 1
            continue
        event = to_event(record)
        if latest is not None and event.timestamp_ms < latest:
            stats.out_of_order += 1
        else:
            latest = event.timestamp_ms
        yield event


def parse_lines(source: Iterable[str | bytes]) -> tuple[list[ChatEvent], ParseStats]:
    stats = ParseStats()
    events = list(parse_stream(source, stats))
    return events, stats
