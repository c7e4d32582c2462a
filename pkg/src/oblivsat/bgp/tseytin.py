"""Bit-blasting to CNF with structure-sharing Tseytin auxiliaries.

The shared universe bits take variable indices 1..n_common in the published
order, whether or not this party's constraints mention them; auxiliaries
follow.  Gate nodes are cached by (op, child literals) so repeated
sub-expressions cost one auxiliary, and constants fold before any clause is
emitted.  A top-level conjunction asserts its conjuncts as unit clauses
directly.
"""

from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

from ..cnf import CnfFormula
from ..errors import EncodingError
from .model import And, BitVar, BooleanModel, Const, Expr, Not, Or


class _Lowerer:
    def __init__(self, bit_index: Dict[str, int], n_common: int):
        self.bit_index = bit_index
        self.next_var = n_common + 1
        self.clauses: List[List[int]] = []
        self.cache: Dict[Tuple, int] = {}

    def fresh(self) -> int:
        v = self.next_var
        self.next_var += 1
        return v

    def lower(self, x: Expr):
        """Return an int literal, or a bool for constant subtrees."""
        if isinstance(x, Const):
            return x.value
        if isinstance(x, BitVar):
            idx = self.bit_index.get(x.name)
            if idx is None:
                raise EncodingError(f"undeclared variable bit {x.name!r}")
            return idx
        if isinstance(x, Not):
            sub = self.lower(x.x)
            return (not sub) if isinstance(sub, bool) else -sub
        if isinstance(x, (And, Or)):
            is_and = isinstance(x, And)
            lits: List[int] = []
            seen = set()
            for c in x.xs:
                sub = self.lower(c)
                if isinstance(sub, bool):
                    if sub != is_and:
                        return not is_and  # absorbing constant
                    continue  # neutral constant
                if -sub in seen:
                    return not is_and  # x and not-x: absorbing
                if sub not in seen:
                    seen.add(sub)
                    lits.append(sub)
            if not lits:
                return is_and
            if len(lits) == 1:
                return lits[0]
            key = ("and" if is_and else "or", tuple(sorted(lits)))
            hit = self.cache.get(key)
            if hit is not None:
                return hit
            y = self.fresh()
            if is_and:
                for l in lits:
                    self.clauses.append([-y, l])
                self.clauses.append([y] + [-l for l in lits])
            else:
                for l in lits:
                    self.clauses.append([y, -l])
                self.clauses.append([-y] + lits)
            self.cache[key] = y
            return y
        raise TypeError(f"unknown expr {x!r}")


def bitblast_tseytin(
    model: BooleanModel, bit_order: Sequence[str]
) -> Tuple[CnfFormula, int]:
    """Lower a model to an equisatisfiable CNF over the given common-bit
    order; returns the formula and its auxiliary-variable count."""
    declared = set(model.bit_names())
    for name in bit_order:
        if name not in declared:
            raise EncodingError(f"bit {name!r} missing from the model declarations")
    lw = _Lowerer({name: k + 1 for k, name in enumerate(bit_order)}, len(bit_order))
    root = model.constraint
    tops = root.xs if isinstance(root, And) else (root,)
    sat_const = True
    units: List[int] = []
    for top in tops:
        lit = lw.lower(top)
        if isinstance(lit, bool):
            sat_const &= lit
        else:
            units.append(lit)
    if not sat_const:
        v = lw.fresh()
        lw.clauses.append([v])
        lw.clauses.append([-v])
    else:
        for lit in units:
            lw.clauses.append([lit])
    n_aux = lw.next_var - len(bit_order) - 1
    return CnfFormula(len(bit_order) + n_aux, lw.clauses), n_aux
