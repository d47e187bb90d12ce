import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sml.circle_measures import (
    CircleMeasure,
    RieszSpec,
    cesaro_equivalence_check,
    fourier_coefficient,
    fourier_coefficients,
    rajchman_profile,
    weak_mixing_profile,
    wiener_atom_energy,
)
from sml.errors import PreconditionError


def quadrature_coefficients(spec: RieszSpec, ns, G=2**14):
    t = np.arange(G) / G
    dens = np.ones(G)
    for n, a in zip(spec.frequencies, spec.coefficients):
        dens *= 1 + a * np.cos(2 * np.pi * n * t)
    return np.array([np.mean(dens * np.exp(2j * np.pi * n * t)) for n in ns])


class TestFourierCoefficient:
    def test_lebesgue_orthogonality(self):
        assert abs(fourier_coefficient(CircleMeasure.lebesgue(), 3)) < 1e-12

    def test_dirac_at_half(self):
        assert fourier_coefficient(CircleMeasure.dirac("1/2"), 1) == pytest.approx(-1)

    def test_riesz_closed_form_matches_quadrature(self):
        mu = CircleMeasure.riesz_product([4, 16, 64], [1, 1, 1])
        assert fourier_coefficient(mu, 20) == pytest.approx(0.25)
        assert abs(quadrature_coefficients(mu.riesz, [20])[0] - 0.25) < 1e-10

    def test_conjugate_symmetry_and_bound(self):
        mu = CircleMeasure(atoms=(("1/3", 0.2), (0.71, 0.3))) + CircleMeasure.lebesgue(0.5)
        ns = np.arange(-40, 41)
        c = fourier_coefficients(mu, ns)
        np.testing.assert_allclose(c, np.conj(c[::-1]), atol=1e-12)
        assert np.all(np.abs(c) <= c[40].real + 1e-12)
        assert c[40].real == pytest.approx(mu.total_mass)

    @settings(max_examples=25, deadline=None)
    @given(
        st.lists(st.integers(1, 4), min_size=1, max_size=4),
        st.lists(st.floats(-1, 1), min_size=4, max_size=4),
    )
    def test_riesz_oracle(self, gaps, coeffs):
        freqs, n = [], 1
        for g in gaps:
            n = 3 * n + g if freqs else g
            freqs.append(n)
        spec = RieszSpec(tuple(freqs), tuple(coeffs[: len(freqs)]))
        ns = np.arange(-200, 201)
        closed = spec.coefficient_array(ns)
        assert np.abs(closed - quadrature_coefficients(spec, ns)).max() < 1e-8

    def test_riesz_rejects_non_dissociate(self):
        with pytest.raises(PreconditionError):
            RieszSpec((4, 10), (1, 1))


class TestWiener:
    def test_unit_dirac(self):
        assert wiener_atom_energy(CircleMeasure.dirac("1/2"), 1000)[-1] == pytest.approx(1.0)

    def test_half_atom_half_lebesgue(self):
        mu = CircleMeasure.dirac(0, 0.5) + CircleMeasure.lebesgue(0.5)
        assert wiener_atom_energy(mu, 10**4)[-1] == pytest.approx(0.25, rel=0.01)

    def test_lebesgue_single_term(self):
        assert wiener_atom_energy(CircleMeasure.lebesgue(), 100)[-1] == pytest.approx(1 / 201)


class TestProfiles:
    def test_rajchman_lebesgue(self):
        assert rajchman_profile(CircleMeasure.lebesgue(), 1, 64).tail_sup < 1e-12

    def test_rajchman_dirac(self):
        assert rajchman_profile(CircleMeasure.dirac(0), 1, 64).tail_sup == pytest.approx(1)

    def test_rajchman_riesz(self):
        prof = rajchman_profile(CircleMeasure.riesz_product([4, 16, 64], [1, 1, 1]), 1, 100)
        assert prof.tail_sup == pytest.approx(0.5)
        assert {abs(n) for n in prof.tail_argmax} == {4, 16, 64}

    def test_rajchman_precondition(self):
        with pytest.raises(PreconditionError):
            rajchman_profile(CircleMeasure.lebesgue(), 5, 5)

    def test_weakmix_lebesgue(self):
        assert weak_mixing_profile(CircleMeasure.lebesgue(), 50)[-1] == pytest.approx(1 / 101)

    def test_weakmix_dirac(self):
        np.testing.assert_allclose(weak_mixing_profile(CircleMeasure.dirac("1/3"), 50), 1.0)

    def test_weakmix_riesz_decays(self):
        prof = weak_mixing_profile(CircleMeasure.riesz_product([4, 16, 64], [0.5, 0.5, 0.5]), 10**4)
        assert prof[-1] < 0.01
        assert prof[-1] < prof[0]

    def test_profile_csv(self):
        text = rajchman_profile(CircleMeasure.dirac(0), 1, 2).to_csv()
        assert text.splitlines()[0] == "n,re,im,abs"
        assert len(text.splitlines()) == 6


class TestCesaroEquivalence:
    def test_zero(self):
        assert cesaro_equivalence_check(lambda k: 0, 10) == (0.0, 0.0)

    def test_ones(self):
        assert cesaro_equivalence_check(lambda k: 1, 10) == (1.0, 1.0)

    def test_powers_of_two(self):
        N = 2**10
        a = lambda k: 1.0 if k != 0 and (abs(k) & (abs(k) - 1)) == 0 and abs(k) > 1 else 0.0  # noqa: E731
        m1, m2 = cesaro_equivalence_check(a, N)
        assert m1 <= 21 / 2049 and m2 <= 21 / 2049

    def test_bound_violation(self):
        with pytest.raises(PreconditionError):
            cesaro_equivalence_check(lambda k: 2.0, 3, bound=1.0)

    @given(st.lists(st.floats(-3, 3), min_size=21, max_size=21))
    def test_inequalities(self, vals):
        m1, m2 = cesaro_equivalence_check(vals, 10, bound=3.0)
        assert m2 <= 3.0 * m1 + 1e-12
        assert m1**2 <= m2 + 1e-12


class TestSerialization:
    def test_round_trip(self):
        mu = CircleMeasure(atoms=(("1/3", 0.25),), density=np.full(8, 0.5), riesz=RieszSpec((2, 7), (0.5, -0.5)))
        again = CircleMeasure.from_json(mu.to_json())
        assert again.to_json() == mu.to_json()

    def test_coincident_atoms_merge(self):
        mu = CircleMeasure(atoms=(("1/2", 0.25), ("1/2", 0.25)))
        assert mu.atoms == ((mu.atoms[0][0], 0.5),)

    def test_invalid_grid(self):
        with pytest.raises(PreconditionError):
            CircleMeasure(density=np.ones(10))

    def test_unknown_key(self):
        with pytest.raises(PreconditionError):
            CircleMeasure.from_json({"atom": []})
