"""
Parsing a chat log and summarizing it into contexts
===================================================

"""

import io

from trolldetect import build_contexts, parse_record, parse_stream
from trolldetect.contexts import ModeState, spam_moving_average
from trolldetect.parser import ParseStats
from trolldetect.synth import Scenario, generate_stream, serialize_stream

# One line of the log. Tags may come in any order; milliseconds are optional.
rec = parse_record("<date>2014-02-14</date><time>08:00:23.456</time><user>ash</user><msg>Up</msg>")
print(rec, rec.timestamp_ms)

# A small synthetic crowd: 50 users for five minutes, written out as text
stream = generate_stream(Scenario(n_users=50, troll_fraction=0.04, duration_s=300, seed=1))
text = "\n".join(serialize_stream(stream.events)) + "\nthis line is garbage\n"
print(text.splitlines()[0])

# Parse it back; malformed lines are counted, never fatal
stats = ParseStats()
events = list(parse_stream(io.StringIO(text), stats))
print(stats.to_json())

# Fixed 20 second windows. Each holds button counts, spam, and the crowd's goal ranking
contexts = build_contexts(events, 20, ModeState())
for ctx in contexts[:5]:
    print(ctx.window_start_ms, ctx.mode_in_effect, ctx.total_messages, ctx.spam_count, ctx.top(3))

# The mode seen by a window is decided by the votes of the window before it
print("modes:", "".join("D" if c.mode_in_effect == "democracy" else "a" for c in contexts))

# Spam share, one-second periods, 20-period moving average
starts, avg = spam_moving_average(events)
print("spam moving average, first points:", avg[:5].round(3))
