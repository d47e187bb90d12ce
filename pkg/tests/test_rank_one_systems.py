from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sml.errors import BudgetExceeded, EscapesTower, PreconditionError
from sml.rank_one_systems import (
    CutSpacerSpec,
    apply_T,
    build_tower,
    centered_base_indicator,
    correlation_monte_carlo,
    correlation_sequence,
    measure_preserving,
)

STAIRCASE = CutSpacerSpec.staircase()


@pytest.mark.parametrize("K,h", [(1, 2), (2, 7), (3, 27), (4, 118)])
def test_staircase_heights(K, h):
    assert build_tower(STAIRCASE, K).height == h


def test_height_and_width_recurrences():
    tower = build_tower(STAIRCASE, 6)
    for k in range(1, 7):
        r, s = STAIRCASE.stage(k)
        assert tower.heights[k] == r * tower.heights[k - 1] + sum(s)
        assert tower.widths[k] == tower.widths[k - 1] / r


def test_measure_preserving_exact():
    assert measure_preserving(build_tower(STAIRCASE, 6))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 3), st.lists(st.integers(0, 3), min_size=3, max_size=3)), min_size=1, max_size=4))
def test_custom_specs_preserve_measure(stages):
    spec = CutSpacerSpec(tuple(r for r, _ in stages), tuple(tuple(s[:r]) for r, s in stages))
    tower = build_tower(spec, len(stages))
    assert measure_preserving(tower)
    assert tower.total_mass == tower.height * tower.base_width


def test_apply_T_identity_and_translation():
    tower = build_tower(STAIRCASE, 2)
    lo, _ = tower.level_interval(0)
    t = lo + tower.base_width / 3
    assert apply_T(tower, t, 0) == t
    up = apply_T(tower, t, 1)
    assert tower.level_of(up) == 1
    assert up - tower.level_interval(1)[0] == tower.base_width / 3


def test_apply_T_escapes():
    tower = build_tower(STAIRCASE, 2)
    top, _ = tower.level_interval(tower.height - 1)
    with pytest.raises(EscapesTower):
        apply_T(tower, top, 1)


def test_correlation_zero_function():
    tower = build_tower(STAIRCASE, 3)
    assert not correlation_sequence(tower, np.zeros(tower.height), 10).values.any()


def test_correlation_variance_positive():
    tower = build_tower(STAIRCASE, 5)
    f = centered_base_indicator(tower)
    seq = correlation_sequence(tower, f, 0)
    assert seq.values[0] == pytest.approx(np.mean(f**2)) and seq.values[0] > 0


def test_correlation_bounded_by_variance_and_profile():
    tower = build_tower(STAIRCASE, 5)
    seq = correlation_sequence(tower)
    assert np.all(np.abs(seq.values) <= seq.values[0] + 1e-15)
    prof = seq.to_profile()
    c = prof.coefficients
    assert all(c[-n] == np.conj(c[n]) for n in range(1, 20))


def test_fft_path_matches_direct():
    tower = build_tower(STAIRCASE, 6)
    direct = correlation_sequence(tower, M=2000).values
    fft = correlation_sequence(tower, M=tower.height - 1).values[:2001]
    np.testing.assert_allclose(direct, fft, atol=1e-12)


def test_staircase_decay_at_stage_eight():
    tower = build_tower(STAIRCASE, 8)
    seq = correlation_sequence(tower, M=tower.heights[4])
    ratio = np.abs(seq.values[tower.heights[3] :]).max() / seq.values[0]
    assert ratio < 0.2


def test_monte_carlo_agrees_within_three_sigma():
    tower = build_tower(STAIRCASE, 4)
    j, m = 2, 5
    exact = correlation_sequence(tower, centered_base_indicator(tower, j), m).values[m]
    est, se = correlation_monte_carlo(tower, j, m, 10**5, np.random.default_rng(0))
    assert abs(est - exact) <= 3 * se + 1e-12


def test_preconditions():
    tower = build_tower(STAIRCASE, 3)
    with pytest.raises(PreconditionError):
        build_tower(STAIRCASE, 0)
    with pytest.raises(PreconditionError):
        correlation_sequence(tower, np.ones(tower.height))
    with pytest.raises(PreconditionError):
        correlation_sequence(tower, M=tower.height)
    with pytest.raises(PreconditionError):
        CutSpacerSpec((2,), ((1,),))


def test_budget(monkeypatch):
    monkeypatch.setenv("SML_BUDGET", "100")
    with pytest.raises(BudgetExceeded):
        build_tower(STAIRCASE, 4)


def test_spec_round_trip():
    spec = CutSpacerSpec((2, 3), ((0, 1), (1, 0, 2)))
    assert CutSpacerSpec.from_json(spec.to_json()) == spec
    assert CutSpacerSpec.from_json({"preset": "staircase"}) == STAIRCASE


def test_exact_rationals():
    tower = build_tower(STAIRCASE, 3)
    assert isinstance(tower.base_width, Fraction)
    assert tower.base_width == Fraction(1, 6)
