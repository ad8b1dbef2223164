#!/usr/bin/env python3
"""The plain-text M2M wire format: canonical bytes, strict parsing, auth.

Serialization is canonical (one byte sequence per message, fixed header
order, LF endings) and parsing accepts exactly that grammar, so
parse(serialize(m)) == m and serialize(parse(b)) == b always hold.
"""

from roadwatch import m2m
from roadwatch.traffic import FlowSample

CODE = "demo-code-12345"

flow = m2m.make_flow("sub-R1", "main", 60.0, 3, FlowSample("R1", 0, 10, 5.0, 120))
wire = m2m.serialize(flow)
print("canonical FLOW message:")
print(wire.decode("utf-8"))

assert m2m.parse(wire) == flow
assert m2m.serialize(m2m.parse(wire)) == wire
print("round trip: exact\n")

interrupt = m2m.make_interrupt("operator", "main", 30.0, 0, CODE, "R1", "ROAD CLOSED")
print("operator interrupt (authed):")
print(m2m.serialize(interrupt).decode("utf-8"))

print("auth check with the right code:", m2m.verify_auth(interrupt, CODE))
print("auth check with a wrong code: ", m2m.verify_auth(interrupt, "not-the-code-1"))
print()

# strict parsing: malformed input is rejected with a named error, never fixed
for label, mangled in (
    ("future version", wire.replace(b"M2M/1", b"M2M/9")),
    ("headers out of order", wire.replace(b"From: sub-R1\nTo: main",
                                          b"To: main\nFrom: sub-R1")),
    ("non-canonical date", wire.replace(b"Date: 60.000", b"Date: 60.0")),
    ("auth on a FLOW", wire.replace(b"Seq: 3\n", b"Seq: 3\nAuth: demo-code-12345\n")),
    ("truncated", wire[:40]),
):
    try:
        m2m.parse(mangled)
        print(f"{label}: unexpectedly accepted")
    except m2m.WireError as err:
        print(f"{label}: rejected ({err.code})")
