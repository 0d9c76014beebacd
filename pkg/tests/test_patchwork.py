"""Patchwork construction, offset selection, glued evaluation, verification."""

import logging

import numpy as np
import pytest

from sdstab.errors import UncoveredPointError
from sdstab.liecalc import ExprScalarField
from sdstab.patchwork import (
    ClassK,
    LyapunovPiece,
    PatchworkFamily,
    PatchworkW,
    Region,
    _build_envelopes,
    active_index,
    build_family,
    choose_offsets,
    sample_shared_boundaries,
    verify_patchwork,
)

BOX = ([-4.0, -4.0], [4.0, 4.0])
W1 = ClassK.power(0.5, 2)
W2 = ClassK.power(2.0, 2)


def halfplane_pieces():
    r1 = Region.from_text("x1 > 0 && x1^2 + x2^2 < 16", 2, BOX)
    r2 = Region.from_text("0 - x1 > 0 && x1^2 + x2^2 < 16", 2, BOX)
    V = ExprScalarField.from_text("x1^2 + x2^2", 2)
    return [LyapunovPiece(V, r1, W1, W2), LyapunovPiece(V, r2, W1, W2)]


class TestRegion:
    def test_origin_excluded(self):
        with pytest.raises(ValueError):
            Region.from_text("x1^2 + x2^2 < 4", 2, BOX)

    def test_membership_layers(self):
        r = Region.from_text("x1 > 0 && x1^2 + x2^2 < 16", 2, BOX)
        assert r.interior([1.0, 0.0])
        assert not r.interior([0.0, 1.0])
        assert r.in_closure([0.0, 1.0])
        assert r.on_boundary([0.0, 1.0])
        assert not r.in_closure([-1.0, 0.0])

    def test_box_validation(self):
        with pytest.raises(ValueError):
            Region.from_text("x1 > 0", 2, ([0.0, 0.0], [0.0, 1.0]))

    def test_interior_sampling(self):
        r = Region.from_text("x1 > 0 && x1^2 + x2^2 < 16", 2, BOX)
        pts = r.interior_samples(50, seed=1)
        assert len(pts) == 50
        assert all(r.interior(p) for p in pts)


class TestLyapunovPiece:
    def test_nonvanishing_candidate_rejected(self):
        r = Region.from_text("x1 > 0 && x1^2 + x2^2 < 16", 2, BOX)
        V = ExprScalarField.from_text("x1^2 + 1", 2)
        with pytest.raises(ValueError):
            LyapunovPiece(V, r, W1, W2)

    def test_envelope_violation_rejected(self):
        r = Region.from_text("x1 > 0 && x1^2 + x2^2 < 16", 2, BOX)
        V = ExprScalarField.from_text("x1", 2)  # sign-indefinite, below the lower envelope
        with pytest.raises(ValueError):
            LyapunovPiece(V, r, W1, W2)


class TestChooseOffsets:
    def test_equal_pieces_separated(self):
        sel = choose_offsets(halfplane_pieces(), boundary_samples=32)
        assert len(set(sel.offsets)) == 2
        assert all(c > 0 for c in sel.offsets)

    def test_single_region_unconstrained(self):
        r = Region.from_text("x1^2 + x2^2 > 0 && x1^2 + x2^2 < 16", 2, BOX)
        V = ExprScalarField.from_text("x1^2 + x2^2", 2)
        sel = choose_offsets([LyapunovPiece(V, r, W1, W2)])
        assert len(sel.offsets) == 1
        assert sel.boundary_points == []

    def test_collision_forces_delta_shift(self):
        # shared boundary on the circle |x|^2 = 1e-4, where the piece-value
        # gap (2|x|^2 + c1) - (|x|^2 + c2) = |x|^2 - c0*delta vanishes exactly
        # for the first schedule (c0=1e-3, delta=0.1): the search must shift delta
        disc = Region.from_text(
            "x1^2 + x2^2 > 0 && x1^2 + x2^2 < 0.0001", 2, ([-0.011, -0.011], [0.011, 0.011])
        )
        ring = Region.from_text(
            "x1^2 + x2^2 > 0.0001 && x1^2 + x2^2 < 0.0004", 2, ([-0.021, -0.021], [0.021, 0.021])
        )
        V2x = ExprScalarField.from_text("2*x1^2 + 2*x2^2", 2)
        V1x = ExprScalarField.from_text("x1^2 + x2^2", 2)
        lo = ClassK.power(0.5, 2)
        hi = ClassK.power(4.0, 2)
        pieces = [LyapunovPiece(V2x, disc, lo, hi), LyapunovPiece(V1x, ring, lo, hi)]
        sel = choose_offsets(pieces, boundary_samples=16)
        assert not (sel.c0 == pytest.approx(1e-3) and sel.delta == pytest.approx(0.1))
        tol = max(p.region.boundary_tol for p in pieces)
        assert sel.boundary_points
        for bp in sel.boundary_points:
            vi = pieces[0].V(bp.x) + sel.offsets[0]
            vj = pieces[1].V(bp.x) + sel.offsets[1]
            assert abs(vi - vj) > 10 * tol


class TestGluedEvaluation:
    def setup_method(self):
        pieces = halfplane_pieces()
        a1, a2 = _build_envelopes(pieces, [0.1, 0.2])
        self.W = PatchworkW(PatchworkFamily(pieces, [0.1, 0.2], a1=a1, a2=a2))

    def test_interior_rule(self):
        val, active = self.W.eval(np.array([1.0, 0.0]))
        assert val == pytest.approx(1.1)
        assert active == 0

    def test_boundary_max_rule(self):
        val, active = self.W.eval(np.array([0.0, 1.0]))
        assert val == pytest.approx(1.2)
        assert active == [1]

    def test_origin_rule(self):
        assert self.W.eval(np.zeros(2)) == (0.0, None)

    def test_uncovered_raises(self):
        with pytest.raises(UncoveredPointError):
            self.W.eval(np.array([5.0, 0.0]))

    def test_boundary_matches_bruteforce_oracle_exactly(self):
        pieces = self.W.family.pieces
        bps = sample_shared_boundaries(pieces, per_pair=50, seed=4)
        assert bps
        for bp in bps:
            val, _ = self.W.eval(bp.x)
            oracle = max(
                self.W.family.piece_value(i, bp.x)
                for i, p in enumerate(pieces)
                if p.region.in_closure(bp.x)
            )
            assert val == oracle

    def test_interior_equals_piece_exactly(self):
        x = np.array([0.37, -1.2])
        val, active = self.W.eval(x)
        assert val == self.W.family.piece_value(0, x)


class TestActiveIndex:
    def test_larger_offset_wins(self):
        pieces = halfplane_pieces()
        Wa = PatchworkW(PatchworkFamily(pieces, [0.1, 0.2]))
        Wb = PatchworkW(PatchworkFamily(pieces, [0.2, 0.1]))
        x = np.array([0.0, 1.0])
        assert active_index(Wa, x) == 1
        assert active_index(Wb, x) == 0

    def test_interior_point_rejected(self):
        W = PatchworkW(PatchworkFamily(halfplane_pieces(), [0.1, 0.2]))
        with pytest.raises(ValueError):
            active_index(W, np.array([1.0, 0.0]))

    def test_tie_warns_and_takes_largest(self, caplog):
        W = PatchworkW(PatchworkFamily(halfplane_pieces(), [0.1, 0.1]))
        with caplog.at_level(logging.WARNING, logger="sdstab.patchwork"):
            idx = active_index(W, np.array([0.0, 1.0]))
        assert idx == 1
        assert any("distinctness" in rec.message for rec in caplog.records)

    def test_invariant_under_common_offset_shift(self):
        pieces = halfplane_pieces()
        Wa = PatchworkW(PatchworkFamily(pieces, [0.1, 0.2]))
        Wb = PatchworkW(PatchworkFamily(pieces, [0.6, 0.7]))
        for bp in sample_shared_boundaries(pieces, per_pair=20, seed=9):
            assert active_index(Wa, bp.x) == active_index(Wb, bp.x)


class TestVerification:
    def test_good_family_passes(self):
        W, sel = build_family(halfplane_pieces())
        report = verify_patchwork(W, 2.0, samples=4000, seed=3)
        assert report.passed, "\n".join(report.lines())

    def test_equal_offsets_fail_distinctness(self):
        pieces = halfplane_pieces()
        a1, a2 = _build_envelopes(pieces, [0.1, 0.1])
        W = PatchworkW(PatchworkFamily(pieces, [0.1, 0.1], a1=a1, a2=a2))
        report = verify_patchwork(W, 2.0, samples=1000, seed=3)
        failed = {c.name for c in report.checks if not c.passed}
        assert failed == {"boundary-distinctness"}
        witness = next(c.witness for c in report.checks if c.name == "boundary-distinctness")
        assert witness is not None
        assert abs(witness[0]) <= 1e-6  # collision sits on the shared boundary x1 = 0

    def test_min_rule_violates_semicontinuity(self):
        W, _ = build_family(halfplane_pieces())

        class MinRule(PatchworkW):
            def eval(self, x):
                kind, info = self.family.locate(x)
                if kind == "boundary":
                    vals = [(self.family.piece_value(i, x), i) for i in info]
                    bot = min(v for v, _ in vals)
                    return bot, [i for v, i in vals if v == bot]
                return super().eval(x)

        report = verify_patchwork(MinRule(W.family), 2.0, samples=500, seed=3)
        assert not report.passed
        assert any(c.name == "upper-semicontinuity" and not c.passed for c in report.checks)

    def test_single_region_vacuous_boundaries(self):
        r = Region.from_text("x1^2 + x2^2 > 0 && x1^2 + x2^2 < 16", 2, BOX)
        V = ExprScalarField.from_text("x1^2 + x2^2", 2)
        W, _ = build_family([LyapunovPiece(V, r, W1, W2)])
        report = verify_patchwork(W, 2.0, samples=1000, seed=5)
        assert report.passed
        boundary_checks = [c for c in report.checks if c.name == "boundary-distinctness"]
        assert boundary_checks[0].checked == 0

    def test_envelopes_monotone_and_ordered(self):
        W, sel = build_family(halfplane_pieces())
        grid = np.linspace(0.0, 2.0, 1000)
        vals1 = np.array([sel.a1(s) for s in grid])
        vals2 = np.array([sel.a2(s) for s in grid])
        assert np.all(np.diff(vals1) >= 0)
        assert np.all(np.diff(vals2) >= 0)
        assert np.all(vals1 <= vals2)


class TestFamilyValidation:
    def test_offset_count_mismatch(self):
        with pytest.raises(ValueError):
            PatchworkFamily(halfplane_pieces(), [0.1])

    def test_offsets_positive(self):
        with pytest.raises(ValueError):
            PatchworkFamily(halfplane_pieces(), [0.1, -0.2])

    def test_positive_value_away_from_origin(self):
        W, _ = build_family(halfplane_pieces())
        rng = np.random.default_rng(8)
        for _ in range(200):
            x = rng.uniform(-1.5, 1.5, 2)
            if np.linalg.norm(x) < 1e-9:
                continue
            assert W(x) > 0.0
        assert W(np.zeros(2)) == 0.0
