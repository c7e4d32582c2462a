"""Session transport: typed length-prefixed frames, duplex channels, and the
full transcript both leakage audits and byte metrics are computed from.

Wire format: 1 type byte, 4-byte little-endian payload length, payload.
The protocol is strictly alternating, so all I/O is blocking and lock-step.

Frame type registry (stable on the wire):
  0x01 HELLO        handshake parameters
  0x10 OT_SETUP     B->A   batch element for the base OT
  0x11 OT_REQ       A->B   receiver public keys
  0x12 OT_RESP      B->A   ephemeral element + ciphertext pairs
  0x20 PREP_PSI     A->B   Enc{F^A}{k_A}{R^A}
  0x21 PREP_PHI     B->A   re-encrypted segments and their randomness
  0x30 SHUF_SIGMA   A->B   masked, locally permuted payload + permuted pad
  0x31 SHUF_OUT     B->A   twice-permuted masked payload + permuted pads
  0x40 GC_TABLES    B->A   garbled tables, garbler input labels, decode bits
  0x41 REL_B        A->B   select bits of outputs released to the garbler
  0x42 REL_PUB      A->B   plaintext bits of outputs released to both
  0x7F ABORT        either  fatal error notice
"""

from __future__ import annotations

import hashlib
import queue
import socket
import struct
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .errors import HandshakeError, ProtocolError, TransportError

HELLO = 0x01
OT_SETUP = 0x10
OT_REQ = 0x11
OT_RESP = 0x12
PREP_PSI = 0x20
PREP_PHI = 0x21
SHUF_SIGMA = 0x30
SHUF_OUT = 0x31
GC_TABLES = 0x40
REL_B = 0x41
REL_PUB = 0x42
ABORT = 0x7F

FRAME_NAMES = {
    HELLO: "HELLO",
    OT_SETUP: "OT_SETUP",
    OT_REQ: "OT_REQ",
    OT_RESP: "OT_RESP",
    PREP_PSI: "PREP_PSI",
    PREP_PHI: "PREP_PHI",
    SHUF_SIGMA: "SHUF_SIGMA",
    SHUF_OUT: "SHUF_OUT",
    GC_TABLES: "GC_TABLES",
    REL_B: "REL_B",
    REL_PUB: "REL_PUB",
    ABORT: "ABORT",
}

HEADER = struct.Struct("<BI")
PROTOCOL_VERSION = 1
ROLE_CONSUMER = "consumer"
ROLE_PROVIDER = "provider"


@dataclass
class FrameRecord:
    index: int
    direction: str  # "send" | "recv"
    ftype: int
    nbytes: int  # on-wire bytes including the 5-byte header
    t: float
    phase: str
    payload: bytes = field(repr=False, default=b"")


class ProtocolTranscript:
    """Append-only log of every frame crossing the party boundary."""

    def __init__(self, keep_payloads: bool = False):
        self.records: List[FrameRecord] = []
        self.keep_payloads = keep_payloads
        self.phase = "handshake"

    def set_phase(self, phase: str) -> None:
        self.phase = phase

    def add(self, direction: str, ftype: int, payload: bytes) -> None:
        self.records.append(
            FrameRecord(
                index=len(self.records),
                direction=direction,
                ftype=ftype,
                nbytes=HEADER.size + len(payload),
                t=time.time(),
                phase=self.phase,
                payload=payload if self.keep_payloads else b"",
            )
        )

    @property
    def total_bytes(self) -> int:
        return sum(r.nbytes for r in self.records)

    def bytes_in_phase(self, phase: str) -> int:
        return sum(r.nbytes for r in self.records if r.phase == phase)

    def shape(self) -> List[Tuple[str, int, int]]:
        """(direction, type, length) sequence for indistinguishability checks."""
        return [(r.direction, r.ftype, r.nbytes) for r in self.records]

    def to_csv(self) -> str:
        lines = ["frame,direction,type,bytes,timestamp,phase"]
        for r in self.records:
            name = FRAME_NAMES.get(r.ftype, f"0x{r.ftype:02x}")
            lines.append(
                f"{r.index},{r.direction},{name},{r.nbytes},{r.t:.6f},{r.phase}"
            )
        return "\n".join(lines) + "\n"


class Endpoint:
    """Raw duplex byte transport with wire-byte counters."""

    raw_sent = 0
    raw_received = 0

    def send_bytes(self, data: bytes) -> None:
        raise NotImplementedError

    def recv_bytes(self, n: int) -> bytes:
        raise NotImplementedError

    def close(self) -> None:
        pass


class PipeEndpoint(Endpoint):
    """In-process duplex endpoint over a queue pair; deterministic for tests."""

    def __init__(self, inbox: "queue.Queue[bytes]", outbox: "queue.Queue[bytes]", timeout: float):
        self._inbox = inbox
        self._outbox = outbox
        self._timeout = timeout
        self._buf = b""
        self._closed = False
        self.raw_sent = 0
        self.raw_received = 0

    def send_bytes(self, data: bytes) -> None:
        if self._closed:
            raise TransportError("endpoint closed")
        self.raw_sent += len(data)
        self._outbox.put(data)

    def recv_bytes(self, n: int) -> bytes:
        while len(self._buf) < n:
            if self._closed:
                raise TransportError("peer closed")
            try:
                chunk = self._inbox.get(timeout=self._timeout)
            except queue.Empty:
                raise TransportError("receive timeout") from None
            if chunk == b"":
                self._closed = True
                raise TransportError("peer closed")
            self._buf += chunk
        out, self._buf = self._buf[:n], self._buf[n:]
        self.raw_received += len(out)
        return out

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._outbox.put(b"")


def pipe_pair(timeout: float = 600.0) -> Tuple[PipeEndpoint, PipeEndpoint]:
    qa: "queue.Queue[bytes]" = queue.Queue()
    qb: "queue.Queue[bytes]" = queue.Queue()
    return PipeEndpoint(qa, qb, timeout), PipeEndpoint(qb, qa, timeout)


class TcpEndpoint(Endpoint):
    def __init__(self, sock: socket.socket, timeout: float = 600.0):
        self._sock = sock
        self._sock.settimeout(timeout)
        self.raw_sent = 0
        self.raw_received = 0

    def send_bytes(self, data: bytes) -> None:
        try:
            self._sock.sendall(data)
        except OSError as e:
            raise TransportError(f"send failed: {e}") from None
        self.raw_sent += len(data)

    def recv_bytes(self, n: int) -> bytes:
        chunks = []
        got = 0
        while got < n:
            try:
                chunk = self._sock.recv(n - got)
            except socket.timeout:
                raise TransportError("receive timeout") from None
            except OSError as e:
                raise TransportError(f"recv failed: {e}") from None
            if not chunk:
                raise TransportError("peer closed")
            chunks.append(chunk)
            got += len(chunk)
        self.raw_received += n
        return b"".join(chunks)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


def tcp_listen(host: str, port: int, timeout: float = 600.0) -> TcpEndpoint:
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    srv.bind((host, port))
    srv.listen(1)
    srv.settimeout(timeout)
    conn, _ = srv.accept()
    srv.close()
    return TcpEndpoint(conn, timeout)


def tcp_connect(host: str, port: int, timeout: float = 600.0, retries: int = 50) -> TcpEndpoint:
    last: Optional[Exception] = None
    for _ in range(retries):
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
            return TcpEndpoint(sock, timeout)
        except OSError as e:
            last = e
            time.sleep(0.1)
    raise TransportError(f"connect failed: {last}")


MAX_FRAME = 1 << 31


class FrameChannel:
    def __init__(self, endpoint: Endpoint, transcript: ProtocolTranscript | None = None):
        self.endpoint = endpoint
        self.transcript = transcript or ProtocolTranscript()

    def send(self, ftype: int, payload: bytes) -> None:
        if len(payload) >= MAX_FRAME:
            raise TransportError("frame length overflow")
        self.endpoint.send_bytes(HEADER.pack(ftype, len(payload)) + payload)
        self.transcript.add("send", ftype, payload)

    def recv(self, expect: int | None = None) -> Tuple[int, bytes]:
        ftype, length = HEADER.unpack(self.endpoint.recv_bytes(HEADER.size))
        payload = self.endpoint.recv_bytes(length) if length else b""
        self.transcript.add("recv", ftype, payload)
        if ftype == ABORT:
            raise ProtocolError(f"peer abort: {payload.decode(errors='replace')}")
        if ftype not in FRAME_NAMES:
            raise TransportError(f"unknown frame type 0x{ftype:02x}")
        if expect is not None and ftype != expect:
            raise ProtocolError(
                f"expected {FRAME_NAMES[expect]}, got {FRAME_NAMES.get(ftype)}"
            )
        return ftype, payload

    def abort(self, message: str) -> None:
        try:
            self.send(ABORT, message.encode()[:1000])
        except TransportError:
            pass
        self.endpoint.close()


# ---- session parameters --------------------------------------------------------


@dataclass(frozen=True)
class SessionParams:
    """Shape and mode parameters both parties agree on before any payload moves."""

    version: int
    n_common: int
    n_aux_a: int
    n_aux_b: int
    m_a: int
    m_b: int
    prf_id: int
    ot_group: int
    label_bits: int
    block_packing: bool
    deterministic: bool
    seed: int
    common_hash: bytes

    @property
    def n(self) -> int:
        return self.n_common + self.n_aux_a + self.n_aux_b

    @property
    def m(self) -> int:
        return self.m_a + self.m_b


@dataclass(frozen=True)
class LocalParams:
    role: str
    n_common: int
    n_aux: int
    m: int
    prf_id: int
    ot_group: int
    block_packing: bool
    deterministic: bool
    seed: int
    common_hash: bytes
    label_bits: int = 128


_HELLO_FMT = struct.Struct("<HBHHHBBQIII32s")


def _hello_payload(p: LocalParams) -> bytes:
    return _HELLO_FMT.pack(
        PROTOCOL_VERSION,
        0 if p.role == ROLE_CONSUMER else 1,
        p.prf_id,
        p.ot_group,
        p.label_bits,
        1 if p.block_packing else 0,
        1 if p.deterministic else 0,
        p.seed,
        p.n_common,
        p.n_aux,
        p.m,
        p.common_hash,
    )


def common_names_hash(names) -> bytes:
    h = hashlib.sha256()
    for name in names:
        h.update(name.encode())
        h.update(b"\x00")
    return h.digest()


def handshake(ch: FrameChannel, local: LocalParams) -> SessionParams:
    """Exchange HELLO frames (consumer first) and agree on SessionParams.

    Any disagreement on version, mode, or the shared-variable universe aborts.
    """
    if local.role == ROLE_CONSUMER:
        ch.send(HELLO, _hello_payload(local))
        _, remote_raw = ch.recv(HELLO)
    else:
        _, remote_raw = ch.recv(HELLO)
        ch.send(HELLO, _hello_payload(local))
    try:
        (
            r_ver,
            r_role,
            r_prf,
            r_grp,
            r_lbl,
            r_pack,
            r_det,
            r_seed,
            r_ncommon,
            r_naux,
            r_m,
            r_hash,
        ) = _HELLO_FMT.unpack(remote_raw)
    except struct.error:
        raise HandshakeError("malformed HELLO") from None
    if r_ver != PROTOCOL_VERSION:
        raise HandshakeError(f"version mismatch: {r_ver} != {PROTOCOL_VERSION}")
    my_role = 0 if local.role == ROLE_CONSUMER else 1
    if r_role == my_role:
        raise HandshakeError("both parties claim the same role")
    if r_prf != local.prf_id:
        raise HandshakeError(f"prf_id mismatch: {r_prf} != {local.prf_id}")
    if r_grp != local.ot_group:
        raise HandshakeError("OT group mismatch")
    if r_lbl != local.label_bits:
        raise HandshakeError("label length mismatch")
    if bool(r_pack) != local.block_packing:
        raise HandshakeError("block-packing mode mismatch")
    if bool(r_det) != local.deterministic:
        raise HandshakeError("deterministic-mode mismatch")
    if local.deterministic and r_seed != local.seed:
        raise HandshakeError("deterministic seeds differ")
    if r_ncommon != local.n_common:
        raise HandshakeError(
            f"shape disagreement: n_common {r_ncommon} != {local.n_common}"
        )
    if r_hash != local.common_hash:
        raise HandshakeError("shared-variable name lists disagree")
    if local.role == ROLE_CONSUMER:
        n_aux_a, m_a = local.n_aux, local.m
        n_aux_b, m_b = r_naux, r_m
    else:
        n_aux_a, m_a = r_naux, r_m
        n_aux_b, m_b = local.n_aux, local.m
    return SessionParams(
        version=PROTOCOL_VERSION,
        n_common=local.n_common,
        n_aux_a=n_aux_a,
        n_aux_b=n_aux_b,
        m_a=m_a,
        m_b=m_b,
        prf_id=local.prf_id,
        ot_group=local.ot_group,
        label_bits=local.label_bits,
        block_packing=local.block_packing,
        deterministic=local.deterministic,
        seed=local.seed,
        common_hash=local.common_hash,
    )
