"""Bracket algebra, Lie derivatives, and the pointwise condition checkers."""

import numpy as np
import pytest

from sdstab.exprs import Add, Const, Mul, Var, parse_scalar, coord_names
from sdstab.liecalc import (
    EVEN_BRACKET_NEGATIVE,
    DRIFT_POWER_NEGATIVE,
    FAIL,
    FV_NEGATIVE,
    GV_NONZERO,
    ODD_BRACKET_NONZERO,
    VDOT_NEGATIVE,
    VDOT_ZERO_YDIR_NONZERO,
    WY_NONZERO,
    ExprScalarField,
    ExprVectorField,
    bracket_monomials,
    bracket_order,
    check_corollary1_point,
    check_prop1_point,
    gradient,
    lie_bracket,
    lie_derivative,
    linear_vector_field,
    tree_field,
    tree_label,
)
from sdstab.sysmodel import AffineSystem


def rand_poly_field(rng, dim, degree=3, terms=3):
    """Random polynomial vector field as expression trees."""
    comps = []
    for _ in range(dim):
        node = Const(0.0)
        for _ in range(terms):
            term = Const(float(rng.uniform(-1, 1)))
            for _ in range(int(rng.integers(1, degree + 1))):
                j = int(rng.integers(0, dim))
                term = Mul(term, Var(j, "x%d" % (j + 1)))
            node = Add(node, term)
        comps.append(node)
    return ExprVectorField(comps, dim)


class TestBrackets:
    def test_linear_commutator(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((3, 3))
        B = rng.standard_normal((3, 3))
        br = lie_bracket(linear_vector_field(A), linear_vector_field(B))
        for _ in range(5):
            x = rng.standard_normal(3)
            np.testing.assert_allclose(br(x), (B @ A - A @ B) @ x, atol=1e-12)

    def test_constant_fields_commute(self):
        X = ExprVectorField.from_text("1, 2", 2)
        Y = ExprVectorField.from_text("-3, 5", 2)
        np.testing.assert_allclose(lie_bracket(X, Y)([0.3, -0.7]), [0.0, 0.0])

    def test_integrator_pair(self):
        f = ExprVectorField.from_text("x2, 0", 2)
        g = ExprVectorField.from_text("0, 1", 2)
        np.testing.assert_allclose(lie_bracket(f, g)([1.3, -2.2]), [-1.0, 0.0], atol=1e-14)

    def test_shear_pair(self):
        X = ExprVectorField.from_text("x1^2, 0", 2)
        Y = ExprVectorField.from_text("0, x1", 2)
        x = [0.7, -0.3]
        np.testing.assert_allclose(lie_bracket(X, Y)(x), [0.0, 0.49], atol=1e-14)

    def test_rotation_dilation(self):
        X = ExprVectorField.from_text("x2, -x1", 2)
        Y = ExprVectorField.from_text("x1, x2", 2)
        np.testing.assert_allclose(lie_bracket(X, Y)([1.1, 0.4]), [0.0, 0.0], atol=1e-14)

    def test_trig_pair(self):
        X = ExprVectorField.from_text("sin(x2), 0", 2)
        Y = ExprVectorField.from_text("0, x1", 2)
        x = [0.8, 0.25]
        expect = [-0.8 * np.cos(0.25), np.sin(0.25)]
        np.testing.assert_allclose(lie_bracket(X, Y)(x), expect, atol=1e-12)

    def test_three_dimensional_chain(self):
        X = ExprVectorField.from_text("x2, x3, 0", 3)
        Y = ExprVectorField.from_text("0, 0, x1", 3)
        x = [0.5, -1.5, 2.5]
        np.testing.assert_allclose(lie_bracket(X, Y)(x), [0.0, -0.5, -1.5], atol=1e-14)

    def test_dimension_mismatch(self):
        X = ExprVectorField.from_text("x1", 1)
        Y = ExprVectorField.from_text("x1, x2", 2)
        with pytest.raises(ValueError):
            lie_bracket(X, Y)


class TestBracketProperties:
    def test_antisymmetry_random(self):
        rng = np.random.default_rng(11)
        for trial in range(10):
            dim = int(rng.integers(2, 5))
            X = rand_poly_field(rng, dim)
            Y = rand_poly_field(rng, dim)
            fwd = lie_bracket(X, Y)
            bwd = lie_bracket(Y, X)
            for _ in range(10):
                x = rng.uniform(-0.9, 0.9, dim)
                np.testing.assert_allclose(fwd(x) + bwd(x), np.zeros(dim), atol=1e-10)

    def test_jacobi_identity_random(self):
        rng = np.random.default_rng(13)
        for trial in range(5):
            dim = int(rng.integers(2, 5))
            X, Y, Z = (rand_poly_field(rng, dim) for _ in range(3))
            t1 = lie_bracket(X, lie_bracket(Y, Z))
            t2 = lie_bracket(Y, lie_bracket(Z, X))
            t3 = lie_bracket(Z, lie_bracket(X, Y))
            for _ in range(5):
                x = rng.uniform(-0.9, 0.9, dim)
                total = t1(x) + t2(x) + t3(x)
                np.testing.assert_allclose(total, np.zeros(dim), atol=1e-8)

    def test_leibniz_product_rule(self):
        rng = np.random.default_rng(17)
        names = coord_names(2)
        V = ExprScalarField(parse_scalar("x1^2 + sin(x2)", names), 2)
        W = ExprScalarField(parse_scalar("x2^3 - x1*x2", names), 2)
        VW = ExprScalarField(Mul(V.expr, W.expr), 2)
        X = rand_poly_field(rng, 2)
        for _ in range(10):
            x = rng.uniform(-0.9, 0.9, 2)
            lhs = lie_derivative(X, VW)(x)
            rhs = lie_derivative(X, V)(x) * W(x) + V(x) * lie_derivative(X, W)(x)
            assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


class TestLieDerivatives:
    def test_radial_decay(self):
        V = ExprScalarField.from_text("0.5*x1^2 + 0.5*x2^2", 2)
        X = ExprVectorField.from_text("-x1, -x2", 2)
        x = np.array([0.6, -0.8])
        assert lie_derivative(X, V)(x) == pytest.approx(-1.0, abs=1e-14)

    def test_iterated_integrator(self):
        f = ExprVectorField.from_text("x2, 0", 2)
        V = ExprScalarField.from_text("0.5*x1^2", 2)
        fV = lie_derivative(f, V)
        f2V = lie_derivative(f, fV)
        assert fV([2.0, 3.0]) == pytest.approx(6.0)
        assert f2V([2.0, 3.0]) == pytest.approx(9.0)

    def test_gradient_matches_finite_differences(self):
        V = ExprScalarField.from_text("exp(x1)*sin(x2) + x1*x2^2", 2)
        x = np.array([0.4, -1.1])
        g = gradient(V, x)
        h = 6e-6
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            fd = (V(x + e) - V(x - e)) / (2 * h)
            assert abs(g[i] - fd) <= 1e-6 * (1 + abs(fd))


class TestBracketTrees:
    def test_orders(self):
        assert bracket_order("f") == 1
        assert bracket_order(("f", "g")) == 2
        assert bracket_order((("f", "g"), "g")) == 3

    def test_monomials_exclude_bare_input(self):
        monos = bracket_monomials(2)
        labels = {tree_label(t) for t in monos}
        assert labels == {"f", "[f,g]"}

    def test_monomials_order_three(self):
        labels = {tree_label(t) for t in bracket_monomials(3)}
        assert "g" not in labels
        assert "[f,[f,g]]" in labels or "[[f,g],f]" in labels
        assert all(bracket_order(t) <= 3 for t in bracket_monomials(3))

    def test_tree_field_matches_direct_bracket(self):
        f = ExprVectorField.from_text("x2, 0", 2)
        g = ExprVectorField.from_text("0, 1", 2)
        built = tree_field((("f", "g"), "g"), f, g)
        direct = lie_bracket(lie_bracket(f, g), g)
        for x in ([0.5, 1.0], [-1.0, 2.0]):
            np.testing.assert_allclose(built(x), direct(x), atol=1e-14)


def integrator_system():
    f = ExprVectorField.from_text("x2, 0", 2)
    g = ExprVectorField.from_text("0, 1", 2)
    return AffineSystem(f, g)


class TestPointwiseChecker:
    def test_drift_decrease(self):
        V = ExprScalarField.from_text("0.5*x1^2", 2)
        rep = check_prop1_point(integrator_system(), V, [1.0, -1.0])
        assert rep.classification == FV_NEGATIVE
        assert rep.witnesses["fV"] == pytest.approx(-1.0)

    def test_odd_bracket_on_axis(self):
        V = ExprScalarField.from_text("0.5*x1^2", 2)
        rep = check_prop1_point(integrator_system(), V, [1.0, 0.0])
        assert rep.classification == ODD_BRACKET_NONZERO
        assert rep.n_used == 1
        assert rep.witnesses["[f,g]V"] == pytest.approx(-1.0)

    def test_input_derivative_nonzero(self):
        V = ExprScalarField.from_text("0.5*x1^2 + 0.5*x2^2", 2)
        rep = check_prop1_point(integrator_system(), V, [0.0, 1.0])
        assert rep.classification == GV_NONZERO
        assert rep.witnesses["gV"] == pytest.approx(1.0)

    def test_drift_power_negative(self):
        f = ExprVectorField.from_text("x2, -x1", 2)
        g = ExprVectorField.from_text("0, 1", 2)
        V = ExprScalarField.from_text("0.5*x1^2", 2)
        rep = check_prop1_point(AffineSystem(f, g), V, [1.0, 0.0])
        assert rep.classification == DRIFT_POWER_NEGATIVE
        assert rep.n_used == 1

    def test_even_bracket_negative(self):
        f = ExprVectorField.from_text("-x2^2, 0", 2)
        g = ExprVectorField.from_text("0, 1", 2)
        V = ExprScalarField.from_text("0.5*x1^2", 2)
        rep = check_prop1_point(AffineSystem(f, g), V, [1.0, 0.0])
        assert rep.classification == EVEN_BRACKET_NEGATIVE
        assert rep.n_used == 2

    def test_unclassifiable_point_fails(self):
        V = ExprScalarField.from_text("0.5*x1^2", 2)
        rep = check_prop1_point(integrator_system(), V, [1.0, 1.0])
        assert rep.classification == FAIL

    def test_rescaling_invariance(self):
        names = coord_names(2)
        V = ExprScalarField(parse_scalar("0.5*x1^2", names), 2)
        V2 = ExprScalarField(Mul(Const(2.0), parse_scalar("0.5*x1^2", names)), 2)
        for p in ([1.0, -1.0], [1.0, 0.0], [0.5, 0.25], [1.0, 1.0]):
            a = check_prop1_point(integrator_system(), V, p).classification
            b = check_prop1_point(integrator_system(), V2, p).classification
            assert a == b

    def test_origin_rejected(self):
        V = ExprScalarField.from_text("0.5*x1^2", 2)
        with pytest.raises(ValueError):
            check_prop1_point(integrator_system(), V, [0.0, 0.0])

    def test_n_max_validated(self):
        V = ExprScalarField.from_text("0.5*x1^2", 2)
        with pytest.raises(ValueError):
            check_prop1_point(integrator_system(), V, [1.0, 0.0], n_max=7)


class TestIntegratorFormChecker:
    def setup_method(self):
        self.F = ExprVectorField.from_text("y", 1, with_y=True)
        self.V = ExprScalarField.from_text("0.5*x1^2", 1)
        self.W = ExprScalarField.from_text("0.5*y^2", 1, with_y=True)

    def test_strict_decrease(self):
        rep = check_corollary1_point(self.F, self.V, self.W, "D1", [1.0, -1.0])
        assert rep.classification == VDOT_NEGATIVE
        assert rep.witnesses["DV·F"] == pytest.approx(-1.0)

    def test_bracket_clause_on_axis(self):
        rep = check_corollary1_point(self.F, self.V, self.W, "D1", [1.0, 0.0])
        assert rep.classification == VDOT_ZERO_YDIR_NONZERO
        assert rep.witnesses["DV·dF/dy"] == pytest.approx(1.0)

    def test_second_region_clause(self):
        rep = check_corollary1_point(self.F, self.V, self.W, "D2", [0.0, 1.0])
        assert rep.classification == WY_NONZERO
        assert rep.witnesses["dW/dy"] == pytest.approx(1.0)
        assert rep.witnesses["W"] == pytest.approx(0.5)

    def test_increase_direction_fails(self):
        rep = check_corollary1_point(self.F, self.V, self.W, "D1", [1.0, 1.0])
        assert rep.classification == FAIL

    def test_vanishing_x_part_fails_first_region(self):
        rep = check_corollary1_point(self.F, self.V, self.W, "D1", [0.0, 1.0])
        assert rep.classification == FAIL

    def test_flat_w_fails_second_region(self):
        W_flat = ExprScalarField.from_text("0.5*x1^2", 1, with_y=True)
        rep = check_corollary1_point(self.F, self.V, W_flat, "D2", [1.0, 1.0])
        assert rep.classification == FAIL

    def test_origin_rejected(self):
        with pytest.raises(ValueError):
            check_corollary1_point(self.F, self.V, self.W, "D2", [0.0, 0.0])

    def test_region_name_validated(self):
        with pytest.raises(ValueError):
            check_corollary1_point(self.F, self.V, self.W, "D3", [1.0, 0.0])
