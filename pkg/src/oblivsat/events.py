"""Search-pattern events: the only values the solving protocol makes public.

The stream grammar is shared by the two-party solver and the plaintext
reference so traces can be compared byte for byte.  Indices are 1-based
positions in the *permuted* row order; 0 means "none".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

UNIT = "unit"
BRANCH = "branch"
BACKTRACK = "backtrack"
CONTRADICTION = "contradiction"
SUCCESS = "success"


@dataclass(frozen=True)
class SearchEvent:
    kind: str
    arg: int = 0
    t: float = field(default=0.0, compare=False)

    def line(self) -> str:
        if self.kind in (UNIT, BRANCH, BACKTRACK):
            return f"{self.kind} {self.arg}"
        return self.kind


def format_trace(events: List[SearchEvent]) -> str:
    """One event per line; deterministic, suitable for file export and diffing."""
    return "\n".join(ev.line() for ev in events) + ("\n" if events else "")


def parse_trace(text: str) -> List[SearchEvent]:
    events = []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] in (UNIT, BRANCH, BACKTRACK):
            events.append(SearchEvent(parts[0], int(parts[1])))
        elif parts[0] in (CONTRADICTION, SUCCESS):
            events.append(SearchEvent(parts[0]))
        else:
            raise ValueError(f"unknown trace line {line!r}")
    return events
