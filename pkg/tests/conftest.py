import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from trolldetect.parser import ChatEvent, classify_message  # noqa: E402


def make_event(ts, user, msg):
    return ChatEvent(ts, user, classify_message(msg), msg)


@pytest.fixture
def ev():
    return make_event


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, text in sorted(results, key=lambda r: r[0]):
        verdict = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
        terminalreporter.write_line(f"{verdict} criterion {number:2d}: {text}")
