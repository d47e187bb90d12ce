"""Cutting-and-stacking rank-one transformations.

The stage-K tower is stored as a permutation: level ``i`` is the interval
``[positions[i] * w_K, (positions[i] + 1) * w_K)``.  All spacer intervals are
fresh subintervals placed to the right of everything already used, so the
stage-K levels tile ``[0, h_K * w_K)`` exactly and endpoints stay rational.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .circle_measures import FourierProfile, profile_from_coefficients
from .errors import EscapesTower, PreconditionError, check_budget

Number = Union[Fraction, float, int]


@dataclass(frozen=True)
class CutSpacerSpec:
    """Column counts ``cuts[k-1] = r_k`` and spacer heights ``spacers[k-1][j]``.

    With ``preset="staircase"`` the stages are generated on demand: stage k cuts
    the stack into k columns and puts j spacers over column j.
    """

    cuts: tuple[int, ...] = ()
    spacers: tuple[tuple[int, ...], ...] = ()
    preset: str | None = None

    def __post_init__(self):
        if self.preset is not None:
            if self.preset != "staircase":
                raise PreconditionError(f"unknown preset {self.preset!r}")
            return
        cuts = tuple(int(r) for r in self.cuts)
        spacers = tuple(tuple(int(s) for s in row) for row in self.spacers)
        if len(cuts) != len(spacers):
            raise PreconditionError("need one spacer row per stage")
        for k, (r, row) in enumerate(zip(cuts, spacers), start=1):
            if r < 1:
                raise PreconditionError(f"stage {k}: need at least one column, got {r}")
            if len(row) != r:
                raise PreconditionError(f"stage {k}: {len(row)} spacer counts for {r} columns")
            if any(s < 0 for s in row):
                raise PreconditionError(f"stage {k}: negative spacer count")
        object.__setattr__(self, "cuts", cuts)
        object.__setattr__(self, "spacers", spacers)

    @classmethod
    def staircase(cls) -> "CutSpacerSpec":
        return cls(preset="staircase")

    @property
    def n_stages(self) -> int | None:
        return None if self.preset else len(self.cuts)

    def stage(self, k: int) -> tuple[int, tuple[int, ...]]:
        if k < 1:
            raise PreconditionError("stages are numbered from 1")
        if self.preset == "staircase":
            return k, tuple(range(1, k + 1))
        if k > len(self.cuts):
            raise PreconditionError(f"spec defines {len(self.cuts)} stages, stage {k} requested")
        return self.cuts[k - 1], self.spacers[k - 1]

    def to_json(self) -> dict:
        if self.preset:
            return {"preset": self.preset}
        return {"cuts": list(self.cuts), "spacers": [list(r) for r in self.spacers]}

    @classmethod
    def from_json(cls, doc: dict) -> "CutSpacerSpec":
        unknown = set(doc) - {"preset", "cuts", "spacers"}
        if unknown:
            raise PreconditionError(f"unknown spec keys: {sorted(unknown)}")
        if doc.get("preset"):
            return cls(preset=doc["preset"])
        return cls(tuple(doc["cuts"]), tuple(tuple(r) for r in doc["spacers"]))


@dataclass
class Tower:
    stage: int
    height: int
    base_width: Fraction
    positions: np.ndarray
    heights: tuple[int, ...]
    widths: tuple[Fraction, ...]
    bases: tuple[int, ...]

    def __post_init__(self):
        self._level_at = np.empty(self.height, dtype=np.int64)
        self._level_at[self.positions] = np.arange(self.height)

    @property
    def total_mass(self) -> Fraction:
        """Raw Lebesgue mass of the stacked region (before normalization)."""
        return self.height * self.base_width

    def level_interval(self, i: int) -> tuple[Fraction, Fraction]:
        left = int(self.positions[i]) * self.base_width
        return left, left + self.base_width

    @property
    def levels(self) -> list[tuple[Fraction, Fraction]]:
        return [self.level_interval(i) for i in range(self.height)]

    def level_of(self, t: Number) -> int:
        """Index of the level containing ``t``."""
        if t < 0 or t >= self.total_mass:
            raise PreconditionError(f"point {t} lies outside the stacked region")
        L = math.floor(t / self.base_width) if isinstance(t, Fraction) else int(
            math.floor(float(t) / float(self.base_width))
        )
        return int(self._level_at[L])

    def base_interval(self, j: int) -> tuple[Fraction, Fraction]:
        """Bottom level of the stage-j tower, j <= stage."""
        if not 0 <= j <= self.stage:
            raise PreconditionError(f"stage {j} is not between 0 and {self.stage}")
        left = self.bases[j] * self.widths[j]
        return left, left + self.widths[j]

    def base_levels(self, j: int) -> np.ndarray:
        """Boolean mask of the stage-K levels lying inside the stage-j base."""
        ratio = self.widths[j] / self.base_width
        assert ratio.denominator == 1
        return (self.positions // ratio.numerator) == self.bases[j]


def build_tower(spec: CutSpacerSpec, K: int) -> Tower:
    """Stage-K tower with exact rational geometry, starting from ``[0, 1)``."""
    if K < 1:
        raise PreconditionError("K must be >= 1")
    positions = np.zeros(1, dtype=np.int64)
    width = Fraction(1)
    free = 1  # first unused position, in units of the current width
    heights, widths, bases = [1], [width], [0]
    for k in range(1, K + 1):
        r, spacer_row = spec.stage(k)
        new_height = r * positions.size + sum(spacer_row)
        check_budget(f"stage-{k} interval count", new_height)
        free *= r
        pieces = []
        for c in range(r):
            pieces.append(positions * r + c)
            s = spacer_row[c]
            if s:
                pieces.append(np.arange(free, free + s, dtype=np.int64))
                free += s
        positions = np.concatenate(pieces)
        width = width / r
        heights.append(int(positions.size))
        widths.append(width)
        bases.append(int(positions[0]))
    assert free == positions.size
    return Tower(
        stage=K,
        height=int(positions.size),
        base_width=width,
        positions=positions,
        heights=tuple(heights),
        widths=tuple(widths),
        bases=tuple(bases),
    )


def apply_T(tower: Tower, t: Number, m: int = 1) -> Number:
    """Image of ``t`` under ``T^m``: translation ``m`` levels up its column."""
    i = tower.level_of(t)
    j = i + int(m)
    if j < 0 or j > tower.height - 1:
        raise EscapesTower(
            f"orbit escapes tower: level {i} + {m} outside 0..{tower.height - 1} "
            f"(deepen K beyond {tower.stage})"
        )
    w = tower.base_width
    if isinstance(t, (Fraction, int)):
        t = Fraction(t)
        return t + (int(tower.positions[j]) - int(tower.positions[i])) * w
    return float(t) + (int(tower.positions[j]) - int(tower.positions[i])) * float(w)


def measure_preserving(tower: Tower) -> bool:
    """Exact check that levels tile the space and T moves each level isometrically."""
    if sorted(tower.positions.tolist()) != list(range(tower.height)):
        return False
    w = tower.base_width
    for i in range(tower.height - 1):
        a, b = tower.level_interval(i)
        ia, ib = apply_T(tower, a, 1), tower.level_interval(i + 1)[1]
        if ib - ia != w or b - a != w:
            return False
    return True


def centered_base_indicator(tower: Tower, j: int | None = None) -> np.ndarray:
    """Per-level values of ``1_B - mass(B)`` for the stage-j base B.

    Defaults to ``j = ceil(K / 2)``; mass is taken under normalized Lebesgue
    measure on the stage-K stack.
    """
    if j is None:
        j = math.ceil(tower.stage / 2)
    ind = tower.base_levels(j).astype(float)
    return ind - ind.mean()


@dataclass
class CorrelationSequence:
    values: np.ndarray
    truncated_mass: np.ndarray
    f_sup: float

    @property
    def bias_bound(self) -> np.ndarray:
        """|c(m) - c_infinite(m)| is at most this when f is extended by its level values."""
        return self.truncated_mass * self.f_sup**2

    def to_profile(self, N0: int = 1) -> FourierProfile:
        return profile_from_coefficients(self.values, N0)


def correlation_sequence(tower: Tower, f: Sequence[float] | None = None, M: int | None = None) -> CorrelationSequence:
    """``c(m) = integral of f * (f o T^m)`` for m = 0..M on the stage-K stack.

    ``f`` gives one value per level and must have mean zero.  Points whose
    orbit leaves the tower before time m are dropped; the dropped fraction is
    returned as ``truncated_mass``.
    """
    h = tower.height
    f = centered_base_indicator(tower) if f is None else np.asarray(f, dtype=float)
    if f.shape != (h,):
        raise PreconditionError(f"f needs one value per level ({h}), got shape {f.shape}")
    scale = max(float(np.abs(f).max()), 1.0)
    if abs(f.mean()) > 1e-12 * scale:
        raise PreconditionError(f"f must have mean zero, mean is {f.mean()}")
    M = h - 1 if M is None else int(M)
    if not 0 <= M <= h - 1:
        raise PreconditionError(f"horizon M={M} exceeds the definable range 0..{h - 1}")
    if M <= 4096:
        c = np.array([f[: h - m] @ f[m:] for m in range(M + 1)]) / h
    else:
        n = 1 << (2 * h - 1).bit_length()
        F = np.fft.rfft(f, n)
        c = np.fft.irfft(F * np.conj(F), n)[: M + 1] / h
    return CorrelationSequence(
        values=c,
        truncated_mass=np.arange(M + 1) / h,
        f_sup=float(np.abs(f).max()) if f.size else 0.0,
    )


def correlation_monte_carlo(
    tower: Tower, j: int, m: int, n_samples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Orbit-sampling estimate of c(m) for the centered stage-j base indicator.

    Evaluates f from interval coordinates and pushes points with :func:`apply_T`,
    so it shares no level bookkeeping with :func:`correlation_sequence`.
    Returns ``(estimate, standard_error)``.
    """
    lo, hi = (float(x) for x in tower.base_interval(j))
    total = float(tower.total_mass)
    p = (hi - lo) / total
    xs = rng.uniform(0.0, total, size=n_samples)
    vals = np.empty(n_samples)
    for k, x in enumerate(xs):
        fx = (lo <= x < hi) - p
        try:
            y = apply_T(tower, float(x), m)
        except EscapesTower:
            vals[k] = 0.0
            continue
        vals[k] = fx * ((lo <= y < hi) - p)
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(n_samples))
