"""Equality decision procedure.

Two well-formed terms are derivably equal exactly when their normal forms,
computed jointly at a common depth/level over the merged chain list, are
structurally identical.  When they differ, the verdict carries the first
disagreeing leaf and chain column in canonical traversal order.
"""

from __future__ import annotations

from dataclasses import dataclass

from .normalizer import Chain, NormalForm, join_normalize
from .terms import Context, Term


@dataclass
class Witness:
    """First multi-index and chain column where the weight vectors differ."""

    index: tuple[int, ...]
    column: int
    chain: Chain
    left_weight: int
    right_weight: int

    def describe(self, ctx: Context) -> str:
        key = ",".join(map(str, self.index))
        return (f"I=({key}) chain[{self.column}] {self.chain.describe(ctx)}: "
                f"{self.left_weight} vs {self.right_weight}")


@dataclass
class Verdict:
    equal: bool
    left: NormalForm
    right: NormalForm
    witness: Witness | None = None


def equal(ctx: Context, t: Term, u: Term) -> Verdict:
    """Decide derivable (equivalently, denotational) equality of two terms."""
    nf_t, nf_u = join_normalize(ctx, t, u)
    assert nf_t.chains == nf_u.chains and nf_t.k == nf_u.k and nf_t.n == nf_u.n
    for index in nf_t.indices():
        vt, vu = nf_t.weights[index], nf_u.weights[index]
        if vt != vu:
            for column, (a, b) in enumerate(zip(vt, vu)):
                if a != b:
                    witness = Witness(index, column, nf_t.chains[column], a, b)
                    return Verdict(False, nf_t, nf_u, witness)
    return Verdict(True, nf_t, nf_u)
