"""Exception hierarchy shared across the package."""


class OblivsatError(Exception):
    """Base class for all package errors."""


class DimacsError(OblivsatError):
    """Malformed DIMACS input; carries the offending line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class EncodingError(OblivsatError):
    """Invalid CNF/matrix/boolean-model construction."""


class ScenarioError(OblivsatError):
    """Malformed topology/config/agreement declaration."""


class TransportError(OblivsatError):
    """Channel-level failure (peer closed, framing violation, timeout)."""


class HandshakeError(OblivsatError):
    """Session parameter negotiation failed."""


class ProtocolError(OblivsatError):
    """Protocol invariant violated mid-session; the session is dead."""


class MaskReuseError(ProtocolError):
    """A one-time-pad (key, randomness) pair was consumed twice."""
