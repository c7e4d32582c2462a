import numpy as np
import pytest

from oblivsat.audit import audit_transcript, expected_releases, shapes_equal
from oblivsat.cnf import CnfFormula, random_3cnf
from oblivsat.errors import ProtocolError
from oblivsat.events import SearchEvent
from oblivsat.protocol import VerifyJob, cnf_common_names, run_pair, split_clauses
from oblivsat.transport import ROLE_CONSUMER, ROLE_PROVIDER


def run_formula(f, seed=0, keep=True):
    names = cnf_common_names(f.num_vars)
    fa, fb = split_clauses(f)
    ja = VerifyJob(ROLE_CONSUMER, fa, names, deterministic=True, seed=seed, keep_payloads=keep)
    jb = VerifyJob(ROLE_PROVIDER, fb, names, deterministic=True, seed=seed, keep_payloads=keep)
    return run_pair(ja, jb)


def test_expected_releases_basic_unsat():
    events = [SearchEvent("unit", 1), SearchEvent("contradiction")]
    rel = expected_releases(events, n=1)
    assert [r.kind for r in rel] == ["ind", "cc"]
    assert rel[1].bits == (1, None)


def test_expected_releases_branch_and_success():
    events = [
        SearchEvent("branch", 2),
        SearchEvent("unit", 1),
        SearchEvent("success"),
    ]
    rel = expected_releases(events, n=2)
    assert [r.kind for r in rel] == ["ind", "branch", "cc", "ind", "cc"]


def test_expected_releases_rejects_malformed_stream():
    with pytest.raises(ProtocolError):
        expected_releases([SearchEvent("backtrack", 1)], n=2)


def test_audit_accepts_honest_run():
    rng = np.random.default_rng(0)
    f = random_3cnf(6, 12, rng)
    ra, rb = run_formula(f)
    for res in (ra, rb):
        report = audit_transcript(res.transcript, res.params.n, res.events)
        assert report.ok, report.issues
        assert all(kind in ("cc", "ind", "branch") for kind, _ in report.releases)


def test_audit_catches_forged_release():
    f = CnfFormula(2, [[1, 2], [-1, 2]])
    ra, _ = run_formula(f, seed=2)
    events = list(ra.events)
    events[0] = SearchEvent(events[0].kind, (events[0].arg % 2) + 1)
    report = audit_transcript(ra.transcript, ra.params.n, events)
    assert not report.ok


def test_audit_requires_payloads():
    f = CnfFormula(1, [[1]])
    names = cnf_common_names(1)
    fa, fb = split_clauses(f)
    ja = VerifyJob(ROLE_CONSUMER, fa, names, seed=1)
    jb = VerifyJob(ROLE_PROVIDER, fb, names, seed=1)
    ra, _ = run_pair(ja, jb)
    with pytest.raises(ProtocolError):
        audit_transcript(ra.transcript, ra.params.n, ra.events)


def flip_all_polarities(f: CnfFormula) -> CnfFormula:
    return CnfFormula(f.num_vars, [[-lit for lit in cl] for cl in f.clauses])


def test_same_pattern_different_formulas_same_frame_lengths():
    # flipping every polarity and the default assignments induces the same
    # search pattern on different private inputs
    from oblivsat.protocol import Strategy

    rng = np.random.default_rng(4)
    f = random_3cnf(6, 12, rng)
    g = flip_all_polarities(f)
    names = cnf_common_names(f.num_vars)

    def jobs(formula, assign_value):
        fa, fb = split_clauses(formula)
        strat = Strategy(
            np.arange(formula.num_vars, 0, -1, dtype=np.int64),
            np.full(formula.num_vars, assign_value, dtype=bool),
        )
        return (
            VerifyJob(ROLE_CONSUMER, fa, names, deterministic=True, seed=9, keep_payloads=True),
            VerifyJob(ROLE_PROVIDER, fb, names, strategy=strat, deterministic=True, seed=9, keep_payloads=True),
        )

    ra1, rb1 = run_pair(*jobs(f, True))
    ra2, rb2 = run_pair(*jobs(g, False))
    assert ra1.events == ra2.events
    assert shapes_equal(ra1.transcript, ra2.transcript)
    assert shapes_equal(rb1.transcript, rb2.transcript)
