import numpy as np
import pytest

from sml.errors import PreconditionError
from sml.group_masa import (
    GroupAlgebraElement as GA,
    ahp_subsequence,
    cesaro_diagnostics,
    conditional_expectation,
    conjugated_expectation,
    icc_check,
    malnormality_check,
    norm1_in_A,
    st_condition,
    stabilizer_Kg,
    summability_identity,
    wandering_test,
)
from sml.groups import GroupPresentationModel


def random_element(model, rng, R=2, size=4, off_marked=True):
    pool = [g for g in model.ball(R) if not (off_marked and model.in_marked_subgroup(g))]
    idx = rng.choice(len(pool), size=min(size, len(pool)), replace=False)
    coeffs = rng.standard_normal(len(idx)) + 1j * rng.standard_normal(len(idx))
    return GA(model, {pool[i]: c for i, c in zip(idx, coeffs)})


class TestElements:
    def test_parse_and_format(self, free2):
        x = GA.parse(free2, "1.0*b + (0,1)*a*b^-1")
        assert x.coeffs == {free2.form("b"): 1, free2.form("a*b^-1"): 1j}
        assert GA.parse(free2, x.format()) == x

    def test_parse_minus_and_implicit_coefficient(self, free2):
        x = GA.parse(free2, "b - 2*a")
        assert x.coeffs == {free2.form("b"): 1, free2.form("a"): -2}

    def test_zero_pruned(self, free2):
        assert GA.parse(free2, "1*b - 1*b").coeffs == {}

    def test_adjoint(self, free2):
        x = GA.parse(free2, "(0,2)*a*b")
        assert x.adjoint().coeffs == {free2.form("b^-1*a^-1"): -2j}

    def test_trace_of_product_is_inner(self, free2):
        rng = np.random.default_rng(0)
        x, y = random_element(free2, rng), random_element(free2, rng)
        assert (y.adjoint() * x).trace == pytest.approx(x.inner(y))


class TestConditionalExpectation:
    def test_spec_examples(self, free2, z2):
        assert conditional_expectation(GA.monomial(free2, "a^2")) == GA.monomial(free2, "a^2")
        b, a, binv = (GA.monomial(free2, s) for s in ("b", "a", "b^-1"))
        assert conditional_expectation(b * a * binv).coeffs == {}
        b, ak, binv = (GA.monomial(z2, s) for s in ("(0,1)", "(3,0)", "(0,-1)"))
        assert conditional_expectation(b * ak * binv) == GA.monomial(z2, "(3,0)")

    @pytest.mark.parametrize("fixture", ["free2", "z2", "hyperbolic"])
    def test_properties(self, fixture, request):
        model = request.getfixturevalue(fixture)
        rng = np.random.default_rng(1)
        hs = model.marked_ball(2)
        for _ in range(20):
            x = random_element(model, rng, off_marked=False, size=6)
            E = conditional_expectation(x)
            assert conditional_expectation(E) == E
            assert E.trace == x.trace
            assert E.norm2 <= x.norm2 + 1e-15
            h1, h2 = (GA.monomial(model, hs[i]) for i in rng.choice(len(hs), 2))
            assert conditional_expectation(h1 * x * h2).is_close(h1 * E * h2, 1e-12)


class TestST:
    def test_free_holds(self, free2):
        rep = st_condition(free2, ["b", "b^-1"], 8)
        assert rep.verdict == "holds_with_E" and rep.E == []

    def test_abelian_violation(self, z2):
        rep = st_condition(z2, ["(0,1)", "(0,-1)"], 8)
        assert rep.verdict == "violation"
        G = z2.group
        for g, g0, h in rep.witnesses:
            assert z2.in_marked_subgroup(G.mul(G.mul(G.parse(g), G.parse(g0)), G.parse(h)))
        assert rep.unbounded

    def test_hyperbolic_finite_E(self, hyperbolic):
        rep = st_condition(hyperbolic, ["((1,0),0)", "((-1,0),0)"], 10)
        assert rep.verdict == "holds_with_E"
        assert rep.certificate == "exact"

    def test_F_in_marked_rejected(self, free2):
        with pytest.raises(PreconditionError):
            st_condition(free2, ["a"], 3)


class TestStabilizers:
    def test_free_trivial(self, free2):
        assert stabilizer_Kg(free2, "b").trivial

    def test_torsion_order_two(self):
        m = GroupPresentationModel.from_json(
            {
                "kind": "direct_product",
                "factors": [{"kind": "free", "rank": 2}, {"kind": "finite_cyclic", "n": 2}],
                "marked": ["[a; 0]", "[e; 1]"],
            }
        )
        rep = stabilizer_Kg(m, "[b; 0]")
        assert rep.order == 2
        assert sorted(rep.elements) == [("[e; 0]", "[e; 0]"), ("[e; 1]", "[e; 1]")]

    def test_abelian_infinite(self, z2):
        rep = stabilizer_Kg(z2, "(0,1)")
        assert rep.order is None and rep.step is not None

    def test_marked_rejected(self, free2):
        with pytest.raises(PreconditionError):
            stabilizer_Kg(free2, "a^3")


class TestMalnormalICC:
    def test_free_malnormal(self, free2):
        rep = malnormality_check(free2, 5)
        assert rep.malnormal and rep.witness is None

    def test_abelian_not_malnormal(self, z2):
        rep = malnormality_check(z2, 3)
        assert not rep.malnormal
        assert rep.witness[0] in ("(0,1)", "(0,-1)") or not z2.in_marked_subgroup(rep.witness[0])

    def test_free_icc(self, free2):
        assert icc_check(free2, 3).icc_evidence

    def test_abelian_not_icc(self, z2):
        assert not icc_check(z2, 3).icc_evidence


class TestCesaro:
    def test_free(self, free2):
        d = cesaro_diagnostics(free2, GA.monomial(free2, "b"), "a", 50)
        assert d.values == (0, 0, 0, 0) and d.all_vanish

    def test_abelian(self, z2):
        d = cesaro_diagnostics(z2, GA.monomial(z2, "(0,1)"), "(1,0)", 50)
        assert d.values == pytest.approx((1, 1, 1, 1)) and d.none_vanish

    def test_zero(self, free2):
        assert cesaro_diagnostics(free2, GA.zero(free2), "a", 5).values == (0, 0, 0, 0)

    def test_mean_zero_required(self, free2):
        with pytest.raises(PreconditionError):
            cesaro_diagnostics(free2, GA.monomial(free2, "a"), "a", 5)

    @pytest.mark.parametrize("fixture", ["free2", "z2", "hyperbolic"])
    def test_norm_inequalities(self, fixture, request):
        model = request.getfixturevalue(fixture)
        v = model.marked.element((1,))
        rng = np.random.default_rng(2)
        for _ in range(5):
            x = random_element(model, rng)
            for k in range(-3, 4):
                y = conjugated_expectation(x, v, k)
                assert norm1_in_A(y) <= y.norm2 + 1e-9
            assert cesaro_diagnostics(model, x, v, 6).consistent

    def test_norm1_exact_cases(self, free2):
        assert norm1_in_A(GA.parse(free2, "(0,3)*a^2")) == pytest.approx(3)
        # |1 + e(t)| has mean 4/pi
        assert norm1_in_A(GA.parse(free2, "1*e + 1*a")) == pytest.approx(4 / np.pi, abs=1e-5)


class TestAHP:
    def test_free(self, free2):
        fam = [GA.monomial(free2, "b"), GA.monomial(free2, "b^2")]
        assert ahp_subsequence(free2, fam, "a", 5, 100).indices == [1, 2, 3, 4, 5]

    def test_empty_family(self, free2):
        assert ahp_subsequence(free2, [], "a", 3, 10).indices == [1, 2, 3]

    def test_abelian_inconclusive(self, z2):
        assert ahp_subsequence(z2, [GA.monomial(z2, "(0,1)")], "(1,0)", 3, 30).status == "inconclusive"


class TestWandering:
    def test_single_vector(self, free2):
        res = wandering_test(free2, GA.monomial(free2, "b"), "a", 50)
        assert res.wandering and res.max_defect == 0

    def test_cross_term(self, free2):
        res = wandering_test(free2, GA.parse(free2, "b + b*a"), "a", 50)
        assert not res.wandering and res.max_defect > 0

    def test_b_plus_ab_is_wandering(self, free2):
        assert wandering_test(free2, GA.parse(free2, "b + a*b"), "a", 50).wandering

    def test_zero(self, free2):
        assert wandering_test(free2, GA.zero(free2), "a", 5).wandering


class TestSummability:
    def test_spec_examples(self, free2):
        assert summability_identity(free2, GA.zero(free2), GA.zero(free2), "a") == (0, 0)
        b, binv = GA.monomial(free2, "b"), GA.monomial(free2, "b^-1")
        assert summability_identity(free2, b, b, "a") == pytest.approx((1, 1))
        assert summability_identity(free2, b, binv, "a") == pytest.approx((0, 0))

    @pytest.mark.parametrize("fixture,v", [("free2", "a"), ("hyperbolic", "((0,0),1)")])
    def test_random_pairs(self, fixture, v, request):
        model = request.getfixturevalue(fixture)
        rng = np.random.default_rng(3)
        for _ in range(15):
            x1, x2 = random_element(model, rng, R=3), random_element(model, rng, R=3)
            lhs, rhs = summability_identity(model, x1, x2, v)
            assert abs(lhs - rhs) < 1e-10

    def test_requires_generator(self, free2):
        b = GA.monomial(free2, "b")
        with pytest.raises(PreconditionError):
            summability_identity(free2, b, b, "a^2")
