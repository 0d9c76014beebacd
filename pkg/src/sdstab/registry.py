"""Built-in example systems used by the CLI and the acceptance suite.

Entries:

* ``scalar-unstable``   dx = x + u, as a (constant) state-linear system.
* ``statedep-2d``       dx1 = x2, dx2 = sin(x1) x1 + x2^2 x2 + u.
* ``double-integrator`` the feedback-integrator system dx = y, dy = u with
  quadratic pieces on a two-region split of the plane: the piece based on
  x alone where the drift decreases it (or the bracket condition applies),
  the augmented piece elsewhere.
* ``patchwork-halfplanes``  two half-plane regions sharing the x1 = 0
  boundary, equal quadratic pieces forced apart by distinct offsets.
"""

from dataclasses import dataclass

import numpy as np

from .liecalc import ExprScalarField, ExprVectorField, check_corollary1_point, check_prop1_point
from .patchwork import ClassK, LyapunovPiece, PatchworkFamily, PatchworkW, Region, _build_envelopes, build_family
from .sysmodel import AffineSystem, StateLinearSystem


def scalar_unstable():
    return StateLinearSystem(
        lambda x: np.array([[1.0]]), lambda x: np.array([[1.0]]), 1, 1
    )


def statedep_2d():
    def A(x):
        return np.array([[0.0, 1.0], [np.sin(x[0]), x[1] ** 2]])

    def B(x):
        return np.array([[0.0], [1.0]])

    return StateLinearSystem(A, B, 2, 1)


@dataclass
class DoubleIntegratorExample:
    """System, pieces, and region dispatch for the feedback-integrator example."""

    system: AffineSystem
    V1: ExprScalarField          # piece on the drift-decrease region
    V2: ExprScalarField          # augmented piece elsewhere
    F: ExprVectorField           # x-dynamics as a function of (x, y)
    V_cor: ExprScalarField       # corollary-form V (x part only)
    W_cor: ExprScalarField       # corollary-form W (x, y)

    def in_first_region_closure(self, p):
        """Closure of {x1*x2 < 0, |x2| < |x1|}: where the x-based piece applies."""
        x1, x2 = float(p[0]), float(p[1])
        tol = 1e-12 * (1.0 + x1 * x1 + x2 * x2)
        return x1 * x2 <= tol and x1 * x1 - x2 * x2 >= -tol

    def classify(self, p, n_max=2):
        """Pointwise classification using the piece owning the point's region."""
        V = self.V1 if self.in_first_region_closure(p) else self.V2
        return check_prop1_point(self.system, V, p, n_max=n_max)

    def classify_integrator_form(self, p):
        region = "D1" if self.in_first_region_closure(p) else "D2"
        return check_corollary1_point(self.F, self.V_cor, self.W_cor, region, p)


def double_integrator():
    f = ExprVectorField.from_text("x2, 0", 2)
    g = ExprVectorField.from_text("0, 1", 2)
    return DoubleIntegratorExample(
        system=AffineSystem(f, g),
        V1=ExprScalarField.from_text("0.5*x1^2", 2),
        V2=ExprScalarField.from_text("0.5*x1^2 + 0.5*x2^2", 2),
        F=ExprVectorField.from_text("y", 1, with_y=True),
        V_cor=ExprScalarField.from_text("0.5*x1^2", 1),
        W_cor=ExprScalarField.from_text("0.5*y^2", 1, with_y=True),
    )


def patchwork_halfplanes(offsets=None, seed=0):
    """Two half-plane regions with equal quadratic pieces.

    With ``offsets=None`` the offsets come from the selection search;
    explicit offsets (e.g. equal ones) build the family directly, which is
    how the distinctness negative control is constructed.
    """
    dim = 2
    box = ([-4.0, -4.0], [4.0, 4.0])
    r1 = Region.from_text("x1 > 0 && x1^2 + x2^2 < 16", dim, box)
    r2 = Region.from_text("0 - x1 > 0 && x1^2 + x2^2 < 16", dim, box)
    V = ExprScalarField.from_text("x1^2 + x2^2", dim)
    w1 = ClassK.power(0.5, 2)
    w2 = ClassK.power(2.0, 2)
    pieces = [LyapunovPiece(V, r1, w1, w2), LyapunovPiece(V, r2, w1, w2)]
    if offsets is None:
        return build_family(pieces, seed=seed)
    a1, a2 = _build_envelopes(pieces, list(offsets))
    family = PatchworkFamily(pieces, list(offsets), a1=a1, a2=a2)
    return PatchworkW(family), None


SYSTEM_BUILDERS = {
    "scalar-unstable": scalar_unstable,
    "statedep-2d": statedep_2d,
}

AFFINE_BUILDERS = {
    "double-integrator": double_integrator,
}

PATCHWORK_BUILDERS = {
    "patchwork-halfplanes": patchwork_halfplanes,
}
