from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sml.bimodule_measures import (
    BivariateMeasure,
    FiniteKoopmanModel,
    GaussianRational,
    compare,
    disintegrate,
    eta_from_vectors,
    fiber_energy_identity,
    fiber_expectation_identity,
    fiber_mass_identity,
    fiber_mixing_profile,
    fingerprint,
    maximal_spectral_type,
    polarization_from_vectors,
    snag_identity_check,
    subgroup_absolute_continuity,
    transport_S,
    transport_identity_defect,
)
from sml.bimodule_measures.exact import exact_root_of_unity
from sml.errors import NotSummable, PreconditionError
from sml.group_masa import GroupAlgebraElement as GA
from sml.groups import GroupPresentationModel

Q = Fraction


def finite_models():
    return {
        "z4_mod2": GroupPresentationModel.from_json({"kind": "finite_cyclic", "n": 4, "marked": ["2"]}),
        "z2_star_z4": GroupPresentationModel.from_json(
            {
                "kind": "free_product",
                "factors": [{"kind": "finite_cyclic", "n": 2}, {"kind": "finite_cyclic", "n": 4}],
                "marked": ["f1[1]"],
            }
        ),
        "free2_x_z3": GroupPresentationModel.from_json(
            {
                "kind": "direct_product",
                "factors": [{"kind": "free", "rank": 2}, {"kind": "finite_cyclic", "n": 3}],
                "marked": ["[e; 1]"],
            }
        ),
    }


def random_vector(model, rng, size=4, R=2, rational=False):
    pool = model.ball(R)
    idx = rng.choice(len(pool), size=min(size, len(pool)), replace=False)
    if rational:
        vals = rng.integers(-3, 4, len(idx)) + 1j * rng.integers(-3, 4, len(idx))
    else:
        vals = rng.standard_normal(len(idx)) + 1j * rng.standard_normal(len(idx))
    return GA(model, {pool[i]: complex(v) for i, v in zip(idx, vals)})


class TestGaussianRational:
    def test_arithmetic(self):
        z = GaussianRational(Q(1, 2), Q(1, 3))
        assert z * z.conjugate() == GaussianRational(Q(13, 36))
        assert (z / z) == 1
        assert exact_root_of_unity(1, 4) == GaussianRational(Q(0), Q(1))
        assert exact_root_of_unity(3, 2) == -1

    def test_rejects_order_three(self):
        with pytest.raises(ValueError):
            exact_root_of_unity(1, 3)


class TestEta:
    def test_zero(self):
        m = finite_models()["z4_mod2"]
        assert eta_from_vectors(m, GA.zero(m), GA.zero(m)).points == {}

    def test_monomial_off_marked(self):
        m = finite_models()["z4_mod2"]
        z = GA.monomial(m, "1")
        eta = eta_from_vectors(m, z, z)
        assert eta.is_exact
        assert eta.points == {(0, 0): Q(1, 2), (1, 1): Q(1, 2)}

    def test_orthogonal_vectors(self):
        m = finite_models()["z2_star_z4"]
        z1 = GA.parse(m, "f0[1]")
        z2 = GA.parse(m, "f0[1]*f1[1]*f0[1]")
        assert eta_from_vectors(m, z1, z2).points == {}

    @pytest.mark.parametrize("name", list(finite_models()))
    def test_pairings_reproduced(self, name):
        m = finite_models()[name]
        rng = np.random.default_rng(4)
        z1, z2 = random_vector(m, rng), random_vector(m, rng)
        eta = eta_from_vectors(m, z1, z2)
        from sml.bimodule_measures.measures import character_value

        for h1 in m.marked.all_elements():
            for h2 in m.marked.all_elements():
                a, b = GA.monomial(m, h1), GA.monomial(m, h2)
                direct = (a * z1 * b).inner(z2)
                via = eta.integrate(lambda t, s: complex(character_value(m, t, h1, False)) * complex(character_value(m, s, h2, False)))
                assert abs(complex(via) - direct) < 1e-12

    def test_infinite_needs_truncation(self, free2):
        b = GA.monomial(free2, "b")
        with pytest.raises(PreconditionError):
            eta_from_vectors(free2, b, b)
        eta = eta_from_vectors(free2, b, b, truncation=8)
        assert eta.total_variation == pytest.approx(1.0)

    def test_not_summable(self, z2):
        b = GA.monomial(z2, "(0,1)")
        with pytest.raises(NotSummable):
            eta_from_vectors(z2, b, b, truncation=8)

    def test_flip_for_self_adjoint_vectors(self):
        m = finite_models()["z2_star_z4"]
        rng = np.random.default_rng(5)
        for _ in range(10):
            z = random_vector(m, rng, rational=True)
            z = z + z.adjoint()
            eta = eta_from_vectors(m, z, z)
            assert eta.is_positive and eta.flip_equivalent()
            assert eta.flip() == eta

    def test_symmetrized_representative(self):
        m = finite_models()["z2_star_z4"]
        z = GA.parse(m, "1*f0[1] + (0,1)*f0[1]*f1[1] + 2*f1[1]*f0[1]")
        eta = eta_from_vectors(m, z, z)
        sym = eta.symmetrized()
        assert sym.flip() == sym and sym.total_mass == eta.total_mass

    def test_json_round_trip(self):
        m = finite_models()["z2_star_z4"]
        eta = eta_from_vectors(m, GA.parse(m, "f0[1] + (0,1)*f1[1]*f0[1]"), GA.parse(m, "f0[1]"))
        again = BivariateMeasure.from_json(eta.to_json())
        assert again == eta and again.to_json() == eta.to_json()


class TestPolarization:
    def test_second_vector_zero(self):
        m = finite_models()["z2_star_z4"]
        z = GA.parse(m, "f0[1] + 2*f0[1]*f1[1]")
        rep = polarization_from_vectors(m, z, GA.zero(m))
        assert rep.polarization_defect == 0 and rep.domination_violation == 0

    def test_equal_vectors(self):
        m = finite_models()["z2_star_z4"]
        z = GA.parse(m, "f0[1] + (0,1)*f0[1]*f1[1]")
        assert eta_from_vectors(m, z, z) == eta_from_vectors(m, z, z.scale(1))

    @pytest.mark.parametrize("name", list(finite_models()))
    def test_random(self, name):
        m = finite_models()[name]
        rng = np.random.default_rng(6)
        for _ in range(5):
            rep = polarization_from_vectors(m, random_vector(m, rng), random_vector(m, rng))
            assert rep.polarization_defect < 1e-12 and rep.domination_violation < 1e-12

    def test_exact_vectors_zero_defect(self):
        m = finite_models()["z2_star_z4"]
        rng = np.random.default_rng(7)
        rep = polarization_from_vectors(m, random_vector(m, rng, rational=True), random_vector(m, rng, rational=True))
        assert rep.polarization_defect == 0


class TestDisintegration:
    def test_spec_example(self):
        beta = BivariateMeasure({(1, 1): Q(1, 3), (1, 2): Q(1, 3), (2, 2): Q(1, 3)})
        fib = disintegrate(beta, 1)
        assert fib.base == {1: Q(2, 3), 2: Q(1, 3)}
        assert fib.fibers[1] == {(1, 1): Q(1, 2), (1, 2): Q(1, 2)}
        assert fib.fibers[2] == {(2, 2): 1}
        assert fib.reconstruct() == beta and fib.concentrated()

    def test_second_axis(self):
        beta = BivariateMeasure({(1, 1): Q(1, 3), (1, 2): Q(1, 3), (2, 2): Q(1, 3)})
        fib = disintegrate(beta, 2)
        assert fib.base == {1: Q(1, 3), 2: Q(2, 3)}
        assert fib.reconstruct() == beta

    def test_product_measure(self):
        mu = {0: Q(1, 2), 1: Q(1, 4), 2: Q(1, 4)}
        beta = BivariateMeasure({(t, s): mu[t] * mu[s] for t in mu for s in mu})
        fib = disintegrate(beta)
        for t in mu:
            assert fib.fibers[t] == {(t, s): mu[s] for s in mu}

    def test_zero(self):
        fib = disintegrate(BivariateMeasure({}))
        assert fib.fibers == {} and fib.reconstruct() == BivariateMeasure({})

    @settings(max_examples=40, deadline=None)
    @given(st.dictionaries(st.tuples(st.integers(0, 4), st.integers(0, 4)), st.fractions(-3, 3), max_size=12), st.sampled_from([1, 2]))
    def test_reconstruction_exact(self, pts, axis):
        beta = BivariateMeasure(pts)
        fib = disintegrate(beta, axis)
        assert fib.reconstruct() == beta and fib.concentrated()

    @pytest.mark.parametrize("name", ["z4_mod2", "z2_star_z4"])
    def test_fiber_mass_identity_exact(self, name):
        m = finite_models()[name]
        rng = np.random.default_rng(8)
        for _ in range(5):
            z1, z2 = random_vector(m, rng, rational=True), random_vector(m, rng, rational=True)
            assert fiber_mass_identity(m, z1, z2) == 0

    def test_fiber_mass_identity_float(self):
        m = finite_models()["free2_x_z3"]
        rng = np.random.default_rng(9)
        assert fiber_mass_identity(m, random_vector(m, rng), random_vector(m, rng)) < 1e-12

    def test_fiber_energy_identity(self):
        m = finite_models()["z2_star_z4"]
        rng = np.random.default_rng(10)
        for w in m.marked.all_elements():
            for b in m.marked.all_elements():
                lhs, rhs = fiber_energy_identity(m, random_vector(m, rng), random_vector(m, rng), w, b)
                assert lhs == pytest.approx(rhs, abs=1e-12)


class TestFiberProfiles:
    def test_uniform_second_marginal(self):
        M = 16
        beta = BivariateMeasure({(t, s): Q(1, M * M) for t in range(M) for s in range(M)}, modulus=M)
        prof = fiber_mixing_profile(disintegrate(beta), 7)
        assert prof.summary["max"] < 1e-12

    def test_point_masses(self):
        beta = BivariateMeasure({(t, (3 * t) % 8): Q(1, 8) for t in range(8)}, modulus=8)
        prof = fiber_mixing_profile(disintegrate(beta), 3)
        assert all(v == pytest.approx(1.0) for v in prof.tail_sup.values())

    def test_needs_circle(self):
        beta = BivariateMeasure({(1, 2): Q(1)})
        with pytest.raises(PreconditionError):
            fiber_mixing_profile(disintegrate(beta), 3)

    def test_koopman_fibers_match_correlations(self):
        model = FiniteKoopmanModel.translation([6])
        rng = np.random.default_rng(11)
        f = rng.standard_normal(6)
        f -= f.mean()
        for m in range(6):
            d1, d2 = fiber_expectation_identity(model, f, [m])
            assert d1 < 1e-12 and d2 < 1e-12


def random_koopman(rng, max_points=12):
    n = int(rng.integers(2, 7))
    copies = int(rng.integers(1, max(2, max_points // n + 1)))
    nX = n * copies
    perm = [(x // n) * n + ((x % n) + 1) % n for x in range(nX)]
    return FiniteKoopmanModel((n,), (tuple(perm),), np.full(nX, 1 / nX))


class TestKoopman:
    def test_structure(self):
        model = FiniteKoopmanModel.translation([2, 3])
        assert model.preserves_measure() and model.characters_orthonormal() and model.projections_resolve_identity()

    def test_rejects_non_preserving(self):
        with pytest.raises(PreconditionError):
            FiniteKoopmanModel((2,), ((1, 0),), np.array([0.3, 0.7]))

    def test_rejects_non_commuting(self):
        with pytest.raises(PreconditionError):
            FiniteKoopmanModel((2, 2), ((1, 0, 2), (0, 2, 1)), np.full(3, 1 / 3))

    def test_snag_trivial(self):
        model = FiniteKoopmanModel.translation([4])
        assert snag_identity_check(model, np.zeros(4), np.zeros(4), 0, 0, 0, 0) == (0, 0, 0)

    def test_snag_identity_entries(self):
        model = FiniteKoopmanModel.translation([4])
        f = np.array([1.0, 0, 0, 0]) - 0.25
        lhs, rhs, d = snag_identity_check(model, f, f, 0, 0, 0, 0)
        assert lhs == pytest.approx(model.inner(f, f)) and d < 1e-12

    def test_snag_requires_mean_zero(self):
        model = FiniteKoopmanModel.translation([4])
        with pytest.raises(PreconditionError):
            snag_identity_check(model, np.ones(4), np.ones(4), 0, 0, 0, 0)

    def test_snag_corrected_formula_random(self):
        rng = np.random.default_rng(12)
        for _ in range(30):
            model = random_koopman(rng)
            f1, f2 = (rng.standard_normal(model.n_points) + 1j * rng.standard_normal(model.n_points) for _ in range(2))
            f1, f2 = f1 - model.mean(f1), f2 - model.mean(f2)
            entries = [int(k) for k in rng.integers(model.order, size=4)]
            _, _, d = snag_identity_check(model, f1, f2, *entries, formula="corrected")
            assert d < 1e-10

    def test_snag_literal_formula_agrees_when_g2_is_two_torsion(self):
        model = FiniteKoopmanModel.translation([6])
        rng = np.random.default_rng(13)
        f1, f2 = (rng.standard_normal(6) + 1j * rng.standard_normal(6) for _ in range(2))
        f1, f2 = f1 - f1.mean(), f2 - f2.mean()
        for g2 in (0, 3):
            for g1, h1, h2 in np.ndindex(6, 6, 6):
                _, _, d = snag_identity_check(model, f1, f2, g1, g2, h1, h2)
                assert d < 1e-10

    def test_snag_literal_formula_differs_in_general(self):
        model = FiniteKoopmanModel.translation([6])
        f1 = np.array([1, 2j, 0, 0, 0, 0])
        f2 = np.array([0, 1, 0, -1j, 0, 0])
        f1, f2 = f1 - f1.mean(), f2 - f2.mean()
        lhs, rhs, d = snag_identity_check(model, f1, f2, 5, 1, 0, 0)
        assert d > 1e-3

    def test_transport_uniform_and_dirac(self):
        n = 4
        eta = transport_S(np.full(n, 1 / n), [n])
        assert len(eta.points) == n * n and eta.total_mass == pytest.approx(1)
        eta = transport_S(np.eye(n)[1], [n])
        assert set(eta.points) == {(c, (c + 1) % n) for c in range(n)}
        assert all(v == pytest.approx(1 / n) for v in eta.points.values())

    def test_maximal_spectral_type(self):
        model = FiniteKoopmanModel.translation([4])
        st_ = maximal_spectral_type(model)
        assert st_.is_maximal and st_.support_size == 3

    @pytest.mark.parametrize("inv", [[1], [2], [3], [4], [2, 2], [5], [6], [7], [8], [2, 4]])
    def test_transport_identity(self, inv):
        assert transport_identity_defect(FiniteKoopmanModel.translation(inv)) < 1e-12

    def test_transport_identity_non_free_action(self):
        perm = (1, 2, 0, 4, 5, 3)
        model = FiniteKoopmanModel((3,), (perm,), np.full(6, 1 / 6))
        assert transport_identity_defect(model) < 1e-12

    def test_subgroup_absolute_continuity(self):
        rows = subgroup_absolute_continuity([2, 4])
        assert [r for r in rows if r["dominates_full"]] == [r for r in rows if r["is_full"]]
        assert sum(r["is_full"] for r in rows) == 1

    def test_json_round_trip(self):
        model = FiniteKoopmanModel((3,), ((1, 2, 0, 4, 5, 3),), np.full(6, 1 / 6))
        again = FiniteKoopmanModel.from_json(model.to_json())
        assert again.to_json() == model.to_json()


class TestFingerprint:
    def test_equal(self):
        assert compare(fingerprint(geometric=0.5), fingerprint(geometric=0.5))

    def test_separates(self):
        a = fingerprint(geometric=0.5, n_max=10)
        b = fingerprint(geometric=1 / 3, n_max=10)
        assert not compare(a, b)
        assert a.blocks[0][0] == 0.5 and b.blocks[0][0] == pytest.approx(2 / 3)

    def test_single_weight(self):
        fp = fingerprint([1.0], 1)
        assert fp.blocks == ((1.0, 0.5),) and fp.ac == 1.0

    def test_refuses_renormalization(self):
        with pytest.raises(PreconditionError):
            fingerprint([0.5, 0.25], 2)
        with pytest.raises(PreconditionError):
            fingerprint([0.25, 0.75], 2)

    def test_order_invariant_comparison(self):
        from sml.bimodule_measures import MeasureClassFingerprint

        x = MeasureClassFingerprint(1.0, ((0.25, 0.25), (0.75, 0.5)))
        y = MeasureClassFingerprint(1.0, ((0.75, 0.5), (0.25, 0.25)))
        assert compare(x, y) and x.blocks[0][0] == 0.75

    def test_json(self):
        fp = fingerprint([0.5, 0.3, 0.2], 3)
        assert fp.to_json() == {"ac": 1.0, "blocks": [[0.5, 0.5], [0.3, 0.25], [0.2, 0.125]]}
