"""CNF formulas, the two-bit occurrence/polarity matrix encoding, and row alignment.

A formula over n variables and m clauses maps to an n-by-m grid of cells
(O, P): O says the variable occurs in the clause, P its polarity.  Absent
literals are normalised to (0, 0).  Rows are variables so that a row
permutation later hides which variable is which.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .errors import DimacsError, EncodingError

Clause = List[int]


@dataclass
class CnfFormula:
    """Clause list over variables 1..num_vars, literals as signed DIMACS ints."""

    num_vars: int
    clauses: List[Clause] = field(default_factory=list)

    def __post_init__(self):
        for idx, cl in enumerate(self.clauses):
            if not cl:
                raise EncodingError(f"clause {idx + 1} is empty")
            for lit in cl:
                if lit == 0 or not 1 <= abs(lit) <= self.num_vars:
                    raise EncodingError(
                        f"literal {lit} in clause {idx + 1} outside [1, {self.num_vars}]"
                    )

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def dump(self) -> str:
        """Canonical debug dump: one clause per line, literals sorted by variable."""
        lines = [f"p cnf {self.num_vars} {len(self.clauses)}"]
        for cl in self.clauses:
            lines.append(" ".join(str(l) for l in sorted(cl, key=abs)) + " 0")
        return "\n".join(lines) + "\n"


@dataclass
class CnfMatrix:
    """n-by-m matrix of (O, P) bit pairs; O=0 rows/cells have P normalised to 0."""

    O: np.ndarray  # (n, m) uint8
    P: np.ndarray  # (n, m) uint8

    def __post_init__(self):
        self.O = np.ascontiguousarray(self.O, dtype=np.uint8)
        self.P = np.ascontiguousarray(self.P, dtype=np.uint8)
        if self.O.shape != self.P.shape or self.O.ndim != 2:
            raise EncodingError("O and P must be equal-shape 2-d bit arrays")
        if np.any(self.P & ~self.O):
            raise EncodingError("polarity bit set on an absent literal (O=0, P=1)")

    @property
    def n(self) -> int:
        return self.O.shape[0]

    @property
    def m(self) -> int:
        return self.O.shape[1]

    def copy(self) -> "CnfMatrix":
        return CnfMatrix(self.O.copy(), self.P.copy())

    def to_formula(self) -> CnfFormula:
        """Read literals back out; inverse of to_matrix up to duplicate collapse."""
        clauses = []
        for j in range(self.m):
            rows = np.nonzero(self.O[:, j])[0]
            clauses.append(
                [int(i) + 1 if self.P[i, j] else -(int(i) + 1) for i in rows]
            )
        return CnfFormula(self.n, clauses)


@dataclass
class VariableOrder:
    """Canonical row assignment: shared variables first (in the provider's
    published order), then the consumer's auxiliaries, then the provider's."""

    common_names: List[str]
    n_aux_a: int
    n_aux_b: int

    @property
    def n_common(self) -> int:
        return len(self.common_names)

    @property
    def n(self) -> int:
        return self.n_common + self.n_aux_a + self.n_aux_b

    def row_names(self) -> List[str]:
        return (
            list(self.common_names)
            + [f"auxA:{k}" for k in range(1, self.n_aux_a + 1)]
            + [f"auxB:{k}" for k in range(1, self.n_aux_b + 1)]
        )

    def row_of_local(self, var: int, side: str) -> int:
        """Map a party-local DIMACS variable (common vars first, then that
        party's auxiliaries) to its global row index (0-based)."""
        nc = self.n_common
        if var <= nc:
            return var - 1
        k = var - nc - 1
        if side == "A":
            if k >= self.n_aux_a:
                raise EncodingError(f"consumer variable {var} outside declared range")
            return nc + k
        if side == "B":
            if k >= self.n_aux_b:
                raise EncodingError(f"provider variable {var} outside declared range")
            return nc + self.n_aux_a + k
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")


def parse_dimacs(text: str | bytes) -> CnfFormula:
    """Parse strict DIMACS CNF.  Clauses may span lines; a trailing SATLIB-style
    '%' terminator is tolerated.  Errors carry the offending line number."""
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    num_vars = num_clauses = None
    clauses: List[Clause] = []
    current: Clause = []
    current_line = 0
    for lineno, raw in enumerate(io.StringIO(text), start=1):
        s = raw.strip()
        if not s or s.startswith("c"):
            continue
        if s.startswith("%"):
            break
        if s.startswith("p"):
            if num_vars is not None:
                raise DimacsError("duplicate problem line", lineno)
            parts = s.split()
            if len(parts) != 4 or parts[1] != "cnf":
                raise DimacsError(f"malformed header {s!r}", lineno)
            try:
                num_vars, num_clauses = int(parts[2]), int(parts[3])
            except ValueError:
                raise DimacsError(f"non-integer counts in header {s!r}", lineno) from None
            if num_vars < 0 or num_clauses < 0:
                raise DimacsError("negative counts in header", lineno)
            continue
        if num_vars is None:
            raise DimacsError("clause before 'p cnf' header", lineno)
        for tok in s.split():
            try:
                lit = int(tok)
            except ValueError:
                raise DimacsError(f"bad literal token {tok!r}", lineno) from None
            if lit == 0:
                if not current:
                    raise DimacsError("empty clause", lineno)
                clauses.append(current)
                current = []
            else:
                if abs(lit) > num_vars:
                    raise DimacsError(
                        f"literal {lit} out of declared range 1..{num_vars}", lineno
                    )
                current.append(lit)
                current_line = lineno
    if num_vars is None:
        raise DimacsError("missing 'p cnf' header", 0)
    if current:
        raise DimacsError("clause missing terminating 0", current_line)
    if len(clauses) != num_clauses:
        raise DimacsError(
            f"declared {num_clauses} clauses, found {len(clauses)}", current_line
        )
    return CnfFormula(num_vars, clauses)


def to_matrix(
    f: CnfFormula,
    order: VariableOrder | None = None,
    side: str = "A",
    n_rows: int | None = None,
) -> CnfMatrix:
    """Build the (O, P) matrix.  With an order, each party-local variable lands
    on its global row and missing rows stay zero (step-0 padding).  Duplicate
    literals collapse; a tautological clause (x and not-x) cannot be encoded in
    a two-bit cell and is rejected."""
    if order is not None:
        n = order.n
        row_of = lambda v: order.row_of_local(v, side)  # noqa: E731
    else:
        n = n_rows if n_rows is not None else f.num_vars
        if n < f.num_vars:
            raise EncodingError("n_rows smaller than the formula's variable count")
        row_of = lambda v: v - 1  # noqa: E731
    O = np.zeros((n, len(f.clauses)), dtype=np.uint8)
    P = np.zeros((n, len(f.clauses)), dtype=np.uint8)
    for j, cl in enumerate(f.clauses):
        for lit in cl:
            i = row_of(abs(lit))
            pol = 1 if lit > 0 else 0
            if O[i, j] and P[i, j] != pol:
                raise EncodingError(
                    f"tautological clause {j + 1}: variable {abs(lit)} occurs "
                    "with both polarities"
                )
            O[i, j] = 1
            P[i, j] = pol
    return CnfMatrix(O, P)


def align(
    common_a: Sequence[str],
    common_b: Sequence[str],
    n_aux_a: int,
    n_aux_b: int,
    m_a: int,
    m_b: int,
) -> Tuple[VariableOrder, Tuple[int, int], int]:
    """Agree on the joint row order and padded shapes.

    Returns (order, (n, m), m) with n = n_common + n_aux_a + n_aux_b and
    m = m_a + m_b.  Both parties must present the identical shared-variable
    name list (the provider's published translation order).
    """
    if list(common_a) != list(common_b):
        raise EncodingError("shared-variable name lists disagree between parties")
    if n_aux_a < 0 or n_aux_b < 0:
        raise EncodingError("negative auxiliary counts")
    order = VariableOrder(list(common_a), n_aux_a, n_aux_b)
    return order, (order.n, m_a + m_b), m_a + m_b


def eval_assignment(f: CnfFormula, assignment: Sequence[bool]) -> bool:
    """True iff every clause has a satisfied literal under the full assignment."""
    if len(assignment) != f.num_vars:
        raise EncodingError(
            f"assignment length {len(assignment)} != num_vars {f.num_vars}"
        )
    for cl in f.clauses:
        if not any(
            (lit > 0) == bool(assignment[abs(lit) - 1]) for lit in cl
        ):
            return False
    return True


def concat_columns(a: CnfMatrix, b: CnfMatrix) -> CnfMatrix:
    """Join two aligned matrices clause-wise: columns of a, then columns of b."""
    if a.n != b.n:
        raise EncodingError("row counts differ; run align first")
    return CnfMatrix(np.hstack([a.O, b.O]), np.hstack([a.P, b.P]))


def random_3cnf(n: int, m: int, rng: np.random.Generator) -> CnfFormula:
    """Uniform random 3-CNF: m clauses of 3 distinct variables, random signs."""
    clauses = []
    for _ in range(m):
        vs = rng.choice(n, size=min(3, n), replace=False) + 1
        signs = rng.integers(0, 2, size=len(vs))
        clauses.append([int(v) if s else -int(v) for v, s in zip(vs, signs)])
    return CnfFormula(n, clauses)
