import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from roadwatch import m2m
from roadwatch.runner import unescape_details


def parse_events(path) -> list[tuple[int, str, str]]:
    """events.log lines as (tick, kind, unescaped details)."""
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        tick, kind, details = line.split(" ", 2)
        out.append((int(tick), kind, unescape_details(details)))
    return out


def messages_of_kind(events, log_kind: str, msg_kind: str | None = None):
    """(tick, M2MMessage) pairs for SEND/DELIVER/DROP lines, optionally
    filtered by message kind."""
    out = []
    for tick, kind, details in events:
        if kind != log_kind:
            continue
        msg = m2m.parse(details.encode("utf-8"))
        if msg_kind is None or msg.kind == msg_kind:
            out.append((tick, msg))
    return out
