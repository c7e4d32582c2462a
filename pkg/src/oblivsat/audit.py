"""Transcript leakage audit.

Replays a captured transcript against the protocol's release discipline: the
only frames carrying plaintext after the handshake are the public releases
(REL_PUB), and their decoded contents must be exactly the contradiction and
success flags, the unit/branch indices of the search pattern, and nothing
else.  Everything other than releases must be of an allow-listed ciphertext,
randomness, label, or framing type.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ProtocolError
from .events import BACKTRACK, BRANCH, CONTRADICTION, SUCCESS, UNIT, SearchEvent
from .solver.circuits import index_width
from .transport import (
    ABORT,
    GC_TABLES,
    HELLO,
    OT_REQ,
    OT_RESP,
    OT_SETUP,
    PREP_PHI,
    PREP_PSI,
    REL_B,
    REL_PUB,
    SHUF_OUT,
    SHUF_SIGMA,
    FrameRecord,
    ProtocolTranscript,
)

_CIPHER_TYPES = {
    OT_SETUP,
    OT_REQ,
    OT_RESP,
    PREP_PSI,
    PREP_PHI,
    SHUF_SIGMA,
    SHUF_OUT,
    GC_TABLES,
    REL_B,
}


@dataclass
class ExpectedRelease:
    kind: str  # "cc" | "ind" | "branch"
    bits: Tuple[Optional[int], ...]  # None = unconstrained bit


@dataclass
class AuditReport:
    ok: bool
    issues: List[str] = field(default_factory=list)
    releases: List[Tuple[str, Tuple[int, ...]]] = field(default_factory=list)


def expected_releases(events: Sequence[SearchEvent], n: int) -> List[ExpectedRelease]:
    """Reconstruct the public-release sequence the driver must have produced
    for this event stream (the success flag alongside a contradiction is the
    one bit the events do not pin down)."""
    wi = index_width(n)

    def ind_bits(value: int) -> Tuple[int, ...]:
        return tuple((value >> k) & 1 for k in range(wi))

    out: List[ExpectedRelease] = []
    stack: List[int] = []  # FIRST(+1)/SECOND(-1) markers
    pos = 0
    i = 0
    while pos < len(events):
        if i != 0:
            ev = events[pos]
            if ev.kind == CONTRADICTION:
                pos += 1
                out.append(ExpectedRelease("cc", (1, None)))
                if pos >= len(events):
                    return out  # UNSAT: trail exhausted
                bk = events[pos]
                pos += 1
                if bk.kind != BACKTRACK:
                    raise ProtocolError("contradiction not followed by backtrack or end")
                while stack and stack[-1] < 0:
                    stack.pop()
                if not stack:
                    raise ProtocolError("backtrack event with no open branch")
                i = stack.pop()
                stack.append(-i)  # re-pushed as SECOND
                if len(stack) != bk.arg:
                    raise ProtocolError("backtrack depth mismatch")
                continue
            if ev.kind == SUCCESS:
                out.append(ExpectedRelease("cc", (0, 1)))
                return out
            out.append(ExpectedRelease("cc", (0, 0)))
        ev = events[pos]
        pos += 1
        if ev.kind == UNIT:
            out.append(ExpectedRelease("ind", ind_bits(ev.arg)))
            i = ev.arg
        elif ev.kind == BRANCH:
            out.append(ExpectedRelease("ind", ind_bits(0)))
            out.append(ExpectedRelease("branch", ind_bits(ev.arg)))
            i = ev.arg
            stack.append(i)
        else:
            raise ProtocolError(f"unexpected event {ev.kind} in search position")
    raise ProtocolError("event stream ended without a verdict")


def _frame_bits(rec: FrameRecord, nbits: int) -> Tuple[int, ...]:
    data = np.frombuffer(rec.payload, dtype=np.uint8)
    return tuple(
        int(b) for b in np.unpackbits(data, count=nbits, bitorder="little")
    )


def audit_transcript(
    transcript: ProtocolTranscript, n: int, events: Sequence[SearchEvent]
) -> AuditReport:
    """Check one party's transcript against the allowed leakage profile."""
    report = AuditReport(ok=True)
    if not transcript.keep_payloads:
        raise ProtocolError("audit needs a transcript captured with payloads")

    def issue(msg: str) -> None:
        report.ok = False
        report.issues.append(msg)

    expected = expected_releases(events, n)
    exp_pos = 0
    wi = index_width(n)
    for rec in transcript.records:
        if rec.ftype == ABORT:
            issue(f"frame {rec.index}: abort in transcript")
        elif rec.ftype == HELLO:
            if rec.phase != "handshake":
                issue(f"frame {rec.index}: HELLO outside handshake")
        elif rec.ftype == REL_PUB:
            if rec.phase != "solve":
                issue(f"frame {rec.index}: public release outside solve phase")
                continue
            if exp_pos >= len(expected):
                issue(f"frame {rec.index}: more public releases than the search pattern")
                continue
            exp = expected[exp_pos]
            exp_pos += 1
            nbits = len(exp.bits)
            if len(rec.payload) != (nbits + 7) // 8:
                issue(
                    f"frame {rec.index}: release payload {len(rec.payload)}B, "
                    f"expected {(nbits + 7) // 8}B"
                )
                continue
            got = _frame_bits(rec, nbits)
            for k, (g, e) in enumerate(zip(got, exp.bits)):
                if e is not None and g != e:
                    issue(
                        f"frame {rec.index}: released bit {k} = {g}, pattern implies {e}"
                    )
            report.releases.append((exp.kind, got))
        elif rec.ftype in _CIPHER_TYPES:
            if rec.ftype in (PREP_PSI, PREP_PHI) and rec.phase != "prepare":
                issue(f"frame {rec.index}: preparation frame outside prepare phase")
            if rec.ftype in (SHUF_SIGMA, SHUF_OUT) and rec.phase != "shuffle":
                issue(f"frame {rec.index}: shuffle frame outside shuffle phase")
        else:
            issue(f"frame {rec.index}: unknown frame type 0x{rec.ftype:02x}")
    if exp_pos != len(expected):
        issue(f"missing public releases: saw {exp_pos}, pattern implies {len(expected)}")
    return report


def transcript_shape(transcript: ProtocolTranscript) -> List[Tuple[str, int, int]]:
    return transcript.shape()


def shapes_equal(a: ProtocolTranscript, b: ProtocolTranscript) -> bool:
    """Same frame-length sequence and types: the desk-testable necessary
    condition for transcript indistinguishability."""
    return a.shape() == b.shape()
