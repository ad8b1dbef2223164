"""The station-to-station wire format: a minimal plain-text envelope.

Messages are UTF-8 with LF line endings, a fixed header order, and one
single-line body, so serialization is canonical: equal messages give equal
bytes and every accepted byte sequence re-serializes to itself. Parsing is
strict; malformed input is rejected with a named error, never repaired.

Layout::

    M2M/1 <KIND>
    From: <id>
    To: <id>
    Date: <seconds, 3 decimals>
    Seq: <integer>
    Auth: <code>            (control kinds only; FLOW forbids it)

    <body line>

Bodies: FLOW ``road=<id> rate=<2 decimals> unit=veh/min window_s=<int>
count=<int>``; INTERRUPT ``road=<id> text=<display text>``; PAUSE and
RESUME ``road=<id>``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .traffic import FlowSample

FLOW = "FLOW"
INTERRUPT = "INTERRUPT"
PAUSE = "PAUSE"
RESUME = "RESUME"

KINDS = (FLOW, INTERRUPT, PAUSE, RESUME)
AUTH_KINDS = frozenset((INTERRUPT, PAUSE, RESUME))

MAX_TEXT_LEN = 200

_ID_RE = re.compile(r"[A-Za-z0-9_-]{1,32}")
_AUTH_RE = re.compile(r"[A-Za-z0-9_-]{8,64}")
# Canonical decimals: no sign, no leading zeros, fixed fraction width.
_DATE_RE = re.compile(r"(?:0|[1-9][0-9]{0,8})\.[0-9]{3}")
_RATE_RE = re.compile(r"(?:0|[1-9][0-9]{0,6})\.[0-9]{2}")
_INT_RE = re.compile(r"(?:0|[1-9][0-9]{0,19})")

_SEQ_MAX = 2**64 - 1


class WireError(ValueError):
    """A named serialization or parse failure."""

    def __init__(self, code: str, message: str) -> None:
        super().__init__(f"{code}: {message}")
        self.code = code


def is_valid_id(value: str) -> bool:
    """True for a legal station or road identifier."""
    return bool(_ID_RE.fullmatch(value))


def is_valid_auth(value: str) -> bool:
    """True for a legal security code."""
    return bool(_AUTH_RE.fullmatch(value))


@dataclass(frozen=True)
class FlowBody:
    road_id: str
    rate_veh_per_min: float
    window_s: int
    count: int


@dataclass(frozen=True)
class InterruptBody:
    road_id: str
    text: str


@dataclass(frozen=True)
class RoadBody:
    road_id: str


@dataclass(frozen=True)
class M2MMessage:
    """Envelope plus kind-specific payload."""

    kind: str
    from_id: str
    to_id: str
    date_s: float
    seq: int
    auth: str | None
    body: FlowBody | InterruptBody | RoadBody


def _check_id(value: str, what: str) -> None:
    if not isinstance(value, str) or not _ID_RE.fullmatch(value):
        raise WireError("bad-id", f"{what} must be 1-32 chars of [A-Za-z0-9_-], got {value!r}")


def _check_decimal(value: float, pattern: re.Pattern, what: str, decimals: int) -> None:
    text = f"{value:.{decimals}f}"
    if not pattern.fullmatch(text) or float(text) != value:
        raise WireError(
            f"bad-{what}", f"{what} must be a non-negative {decimals}-decimal value, got {value!r}"
        )


def _check_text(text: str) -> None:
    if len(text) > MAX_TEXT_LEN:
        raise WireError("text-too-long", f"display text exceeds {MAX_TEXT_LEN} chars")
    # printable ASCII only: keeps the message single-line and its size bound
    # (<= 512 bytes) valid byte-for-byte
    if any(not 32 <= ord(c) <= 126 for c in text):
        raise WireError("bad-text", "display text must be printable ASCII, one line")


def validate(msg: M2MMessage) -> None:
    """Raise WireError unless the message satisfies every type invariant."""
    if msg.kind not in KINDS:
        raise WireError("bad-kind", f"unknown kind {msg.kind!r}")
    _check_id(msg.from_id, "From")
    _check_id(msg.to_id, "To")
    _check_decimal(msg.date_s, _DATE_RE, "date", 3)
    if not isinstance(msg.seq, int) or not 0 <= msg.seq <= _SEQ_MAX:
        raise WireError("bad-seq", f"seq must be a 64-bit unsigned integer, got {msg.seq!r}")
    if msg.kind in AUTH_KINDS:
        if msg.auth is None:
            raise WireError("auth-required", f"{msg.kind} requires an Auth code")
        if not _AUTH_RE.fullmatch(msg.auth):
            raise WireError("bad-auth", "auth code must be 8-64 chars of [A-Za-z0-9_-]")
    elif msg.auth is not None:
        raise WireError("auth-forbidden", "FLOW must not carry an Auth code")

    body = msg.body
    expected = {FLOW: FlowBody, INTERRUPT: InterruptBody, PAUSE: RoadBody, RESUME: RoadBody}
    if type(body) is not expected[msg.kind]:
        raise WireError("body-mismatch", f"{msg.kind} body must be {expected[msg.kind].__name__}")
    _check_id(body.road_id, "road")
    if isinstance(body, FlowBody):
        _check_decimal(body.rate_veh_per_min, _RATE_RE, "rate", 2)
        if not isinstance(body.window_s, int) or not 1 <= body.window_s <= 999_999_999:
            raise WireError("bad-window", f"window_s out of range: {body.window_s!r}")
        if not isinstance(body.count, int) or not 0 <= body.count <= _SEQ_MAX:
            raise WireError("bad-count", f"count out of range: {body.count!r}")
    elif isinstance(body, InterruptBody):
        _check_text(body.text)


def _body_line(msg: M2MMessage) -> str:
    body = msg.body
    if isinstance(body, FlowBody):
        return (
            f"road={body.road_id} rate={body.rate_veh_per_min:.2f} unit=veh/min"
            f" window_s={body.window_s} count={body.count}"
        )
    if isinstance(body, InterruptBody):
        return f"road={body.road_id} text={body.text}"
    return f"road={body.road_id}"


def serialize(msg: M2MMessage) -> bytes:
    """Canonical bytes for a valid message (raises WireError otherwise)."""
    validate(msg)
    lines = [
        f"M2M/1 {msg.kind}",
        f"From: {msg.from_id}",
        f"To: {msg.to_id}",
        f"Date: {msg.date_s:.3f}",
        f"Seq: {msg.seq}",
    ]
    if msg.auth is not None:
        lines.append(f"Auth: {msg.auth}")
    lines.append("")
    lines.append(_body_line(msg))
    return ("\n".join(lines) + "\n").encode("utf-8")


def _take_header(lines: list[str], idx: int, name: str) -> str:
    if idx >= len(lines):
        raise WireError("missing-header", f"message ends before {name} header")
    line = lines[idx]
    prefix = name + ": "
    if not line.startswith(prefix):
        raise WireError("header-order", f"expected {name!r} header, got {line!r}")
    return line[len(prefix):]


def parse(data: bytes) -> M2MMessage:
    """Parse canonical message bytes; accepts exactly the serialize grammar."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise WireError("not-utf8", str(exc)) from None
    if not text.endswith("\n"):
        raise WireError("bad-ending", "message must end with LF")
    lines = text[:-1].split("\n")

    start = lines[0] if lines else ""
    if " " not in start:
        raise WireError("bad-start-line", f"malformed start line {start!r}")
    version, kind = start.split(" ", 1)
    if version != "M2M/1":
        raise WireError("bad-version", f"unsupported version {version!r}")
    if kind not in KINDS:
        raise WireError("bad-kind", f"unknown kind {kind!r}")

    from_id = _take_header(lines, 1, "From")
    to_id = _take_header(lines, 2, "To")
    date_text = _take_header(lines, 3, "Date")
    seq_text = _take_header(lines, 4, "Seq")
    if not _ID_RE.fullmatch(from_id):
        raise WireError("bad-id", f"malformed From id {from_id!r}")
    if not _ID_RE.fullmatch(to_id):
        raise WireError("bad-id", f"malformed To id {to_id!r}")
    if not _DATE_RE.fullmatch(date_text):
        raise WireError("bad-date", f"malformed Date {date_text!r}")
    if not _INT_RE.fullmatch(seq_text) or int(seq_text) > _SEQ_MAX:
        raise WireError("bad-seq", f"malformed Seq {seq_text!r}")

    idx = 5
    auth = None
    if kind in AUTH_KINDS:
        auth_text = _take_header(lines, idx, "Auth")
        if not _AUTH_RE.fullmatch(auth_text):
            raise WireError("bad-auth", f"malformed Auth code {auth_text!r}")
        auth = auth_text
        idx += 1
    elif idx < len(lines) and lines[idx].startswith("Auth: "):
        raise WireError("auth-forbidden", "FLOW must not carry an Auth header")

    if idx >= len(lines) or lines[idx] != "":
        raise WireError("missing-blank", "expected blank line before body")
    if idx + 1 >= len(lines):
        raise WireError("bad-body", "missing body line")
    if len(lines) > idx + 2:
        raise WireError("trailing-data", "unexpected content after body line")
    body_line = lines[idx + 1]

    body = _parse_body(kind, body_line)
    return M2MMessage(
        kind=kind,
        from_id=from_id,
        to_id=to_id,
        date_s=float(date_text),
        seq=int(seq_text),
        auth=auth,
        body=body,
    )


def _parse_body(kind: str, line: str) -> FlowBody | InterruptBody | RoadBody:
    if not line.startswith("road="):
        raise WireError("bad-body", f"body must start with road=, got {line!r}")
    rest = line[len("road="):]
    if kind == FLOW:
        m = re.fullmatch(
            r"(?P<road>[A-Za-z0-9_-]{1,32}) rate=(?P<rate>(?:0|[1-9][0-9]{0,6})\.[0-9]{2})"
            r" unit=veh/min window_s=(?P<win>[1-9][0-9]{0,8}) count=(?P<count>0|[1-9][0-9]{0,19})",
            rest,
        )
        if not m:
            raise WireError("bad-body", f"malformed FLOW body {line!r}")
        count = int(m["count"])
        if count > _SEQ_MAX:
            raise WireError("bad-count", f"count out of range: {count}")
        return FlowBody(
            road_id=m["road"],
            rate_veh_per_min=float(m["rate"]),
            window_s=int(m["win"]),
            count=count,
        )
    if kind == INTERRUPT:
        # road ids contain no spaces, so the first " text=" is the delimiter
        sep = rest.find(" text=")
        if sep < 0:
            raise WireError("bad-body", f"malformed INTERRUPT body {line!r}")
        road, text = rest[:sep], rest[sep + len(" text="):]
        if not _ID_RE.fullmatch(road):
            raise WireError("bad-road", f"malformed road id {road!r}")
        _check_text(text)
        return InterruptBody(road_id=road, text=text)
    if not _ID_RE.fullmatch(rest):
        raise WireError("bad-road", f"malformed road id {rest!r}")
    return RoadBody(road_id=rest)


def verify_auth(msg: M2MMessage, expected_code: str) -> bool:
    """True iff the kind requires auth and the code matches byte-for-byte.

    FLOW is never an authed kind, so it is always rejected by this check.
    Rejection is a value, not an error.
    """
    if msg.kind not in AUTH_KINDS:
        return False
    return msg.auth is not None and msg.auth == expected_code


def make_flow(from_id: str, to_id: str, date_s: float, seq: int, sample: FlowSample) -> M2MMessage:
    """FLOW message for one closed window; rate is quantized to 2 decimals."""
    msg = M2MMessage(
        kind=FLOW,
        from_id=from_id,
        to_id=to_id,
        date_s=round(date_s, 3),
        seq=seq,
        auth=None,
        body=FlowBody(
            road_id=sample.road_id,
            rate_veh_per_min=round(sample.rate_veh_per_min, 2),
            window_s=sample.window_s,
            count=sample.count,
        ),
    )
    validate(msg)
    return msg


def make_interrupt(
    from_id: str, to_id: str, date_s: float, seq: int, auth: str, road_id: str, text: str
) -> M2MMessage:
    msg = M2MMessage(
        kind=INTERRUPT,
        from_id=from_id,
        to_id=to_id,
        date_s=round(date_s, 3),
        seq=seq,
        auth=auth,
        body=InterruptBody(road_id=road_id, text=text),
    )
    validate(msg)
    return msg


def make_pause(
    from_id: str, to_id: str, date_s: float, seq: int, auth: str, road_id: str
) -> M2MMessage:
    msg = M2MMessage(
        kind=PAUSE,
        from_id=from_id,
        to_id=to_id,
        date_s=round(date_s, 3),
        seq=seq,
        auth=auth,
        body=RoadBody(road_id=road_id),
    )
    validate(msg)
    return msg


def make_resume(
    from_id: str, to_id: str, date_s: float, seq: int, auth: str, road_id: str
) -> M2MMessage:
    msg = M2MMessage(
        kind=RESUME,
        from_id=from_id,
        to_id=to_id,
        date_s=round(date_s, 3),
        seq=seq,
        auth=auth,
        body=RoadBody(road_id=road_id),
    )
    validate(msg)
    return msg
