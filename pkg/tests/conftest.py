import threading
from typing import Callable, Tuple

import numpy as np
import pytest

from oblivsat.crypto.groups import OT_GROUP_TEST
from oblivsat.crypto.rng import party_rng
from oblivsat.gc.engine import EVALUATOR, GARBLER, GcSession
from oblivsat.transport import FrameChannel, ProtocolTranscript, pipe_pair

ACCEPTANCE_LINES = []


def record_acceptance(line: str) -> None:
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def run_two_party(
    side_a: Callable, side_b: Callable, timeout: float = 300.0
) -> Tuple[object, object]:
    """Run two callables over a duplex pipe; re-raise the first failure."""
    end_a, end_b = pipe_pair(timeout)
    out, err = {}, {}

    def runner(name, fn, endpoint):
        try:
            out[name] = fn(endpoint)
        except BaseException as e:  # noqa: BLE001
            err[name] = e
            endpoint.close()

    ta = threading.Thread(target=runner, args=("A", side_a, end_a), daemon=True)
    tb = threading.Thread(target=runner, args=("B", side_b, end_b), daemon=True)
    ta.start()
    tb.start()
    ta.join(timeout)
    tb.join(timeout)
    if ta.is_alive() or tb.is_alive():
        end_a.close()
        end_b.close()
        raise TimeoutError("two-party harness timed out")
    for name in ("A", "B"):
        if name in err:
            raise err[name]
    return out["A"], out["B"]


def session_pair(
    script_a: Callable, script_b: Callable, seed: int = 0, keep_payloads: bool = False
):
    """Scripted GC sessions: each script gets (session, channel) and returns
    whatever the test wants to compare."""

    def side(role):
        def run(endpoint):
            ch = FrameChannel(endpoint, ProtocolTranscript(keep_payloads=keep_payloads))
            sess = GcSession(
                ch,
                EVALUATOR if role == "A" else GARBLER,
                party_rng(seed, role),
                OT_GROUP_TEST,
            )
            script = script_a if role == "A" else script_b
            return script(sess, ch)

        return run

    return run_two_party(side("A"), side("B"))


def split_shares(bits: np.ndarray, rng: np.random.Generator):
    """Uniform XOR share split of a bit array."""
    bits = np.asarray(bits, dtype=np.uint8)
    sa = rng.integers(0, 2, bits.shape, dtype=np.uint8)
    return sa, sa ^ bits


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
