"""Measure-class fingerprints of weighted left-right measures.

The left-right measure of a masa built from a probability sequence
``alpha = (alpha_1, alpha_2, ...)`` has the class of ``m (x) m`` plus singular
summands living on disjoint diagonal blocks ``E_n x E_n``, block ``n`` carrying
weight ``2^-n``.  The fingerprint records the absolutely continuous part and
the list of ``(alpha_n, 2^-n)`` pairs; two sequences that differ anywhere give
different block lists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

from ..errors import PreconditionError

DEFAULT_NMAX = 32
SUM_TOL = 1e-12


@dataclass(frozen=True)
class MeasureClassFingerprint:
    """Absolutely continuous mass plus sorted singular blocks ``(mass, weight)``."""

    ac: float
    blocks: tuple[tuple[float, float], ...]
    tail: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if any(m <= 0 for m, _ in self.blocks):
            raise PreconditionError("block masses must be positive")
        ordered = tuple(sorted(self.blocks, key=lambda b: (-b[0], -b[1])))
        object.__setattr__(self, "blocks", ordered)

    def to_json(self) -> dict:
        return {"ac": self.ac, "blocks": [list(b) for b in self.blocks]}

    @classmethod
    def from_json(cls, doc: dict) -> "MeasureClassFingerprint":
        unknown = set(doc) - {"ac", "blocks"}
        if unknown:
            raise PreconditionError(f"unknown fingerprint keys: {sorted(unknown)}")
        return cls(float(doc["ac"]), tuple((float(m), float(w)) for m, w in doc["blocks"]))


def geometric_weights(r: float, n_max: int = DEFAULT_NMAX) -> tuple[list[float], float]:
    """``alpha_n = (1 - r) r^(n-1)`` for ``n <= n_max`` and the exact tail ``r^n_max``."""
    if not 0 < r < 1:
        raise PreconditionError("geometric ratio must lie in (0, 1)")
    return [(1 - r) * r ** (n - 1) for n in range(1, n_max + 1)], r**n_max


def fingerprint(
    weights: Sequence[float] | None = None,
    n_max: int = DEFAULT_NMAX,
    *,
    geometric: float | None = None,
    tail: float = 0.0,
) -> MeasureClassFingerprint:
    """Fingerprint of the left-right measure for a weight sequence.

    Pass either an explicit finite list ``weights`` (with an optional declared
    ``tail`` mass beyond the list) or ``geometric=r`` for the family
    ``(1 - r) r^(n-1)``.  The retained weights plus the tail must sum to 1
    within ``1e-12``; nothing is renormalized.
    """
    if (weights is None) == (geometric is None):
        raise PreconditionError("give exactly one of weights or geometric")
    if n_max < 1:
        raise PreconditionError("n_max must be positive")
    if geometric is not None:
        alpha, tail = geometric_weights(geometric, n_max)
    else:
        alpha = [float(a) for a in weights][:n_max]
        tail = float(tail) + math.fsum(float(a) for a in list(weights)[n_max:])
    if not alpha:
        raise PreconditionError("empty weight sequence")
    if any(not (0 < a <= 1) for a in alpha):
        raise PreconditionError("weights must lie in (0, 1]")
    if any(b >= a for a, b in zip(alpha, alpha[1:])):
        raise PreconditionError("weights must be strictly decreasing")
    if tail < 0 or abs(math.fsum(alpha) + tail - 1) > SUM_TOL:
        raise PreconditionError(f"weights sum to {math.fsum(alpha) + tail!r}, not 1; renormalization refused")
    blocks = tuple((a, 2.0 ** -n) for n, a in enumerate(alpha, start=1))
    return MeasureClassFingerprint(1.0, blocks, tail)


def compare(fp1: MeasureClassFingerprint, fp2: MeasureClassFingerprint) -> bool:
    """Exact equality of the ac mass and the sorted block lists."""
    return fp1.ac == fp2.ac and fp1.blocks == fp2.blocks
