"""The tangent bundle TM as a 4m-dimensional chart with the phi-Sasaki metric.

Two independent routes to the bundle geometry are provided:

* *structural*: the closed-form horizontal/vertical case formulas for the
  Levi-Civita connection and curvature of the bundle metric, assembled from
  base-manifold data (connection, curvature, its covariant derivative, phi);
* *direct*: the bundle metric written out in the induced natural frame
  ``(d_x, d_v)`` as scalar fields on the 4m-chart, pushed through the same
  generic Christoffel/curvature machinery used on the base with no knowledge
  of the structural formulas.

:func:`verify_structural_vs_direct` compares the two and adjudicates the one
ambiguous symbol in the mixed horizontal-horizontal-vertical curvature
formula (see ``CURVATURE_MIXED_READINGS``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basegeo import (
    ChartManifold,
    GeometryAtPoint,
    JetGeometry,
    SingularMetricError,
    christoffel_jets,
    cov_deriv,
    invert_jet_matrix,
    jet_values,
    riemann_jets,
    sup_norm,
)
from .jetcalc import Jet, jet_space

__all__ = [
    "BundlePoint",
    "LiftedVector",
    "LiftedField",
    "CURVATURE_MIXED_READINGS",
    "DEFAULT_MIXED_READING",
    "sasaki_phi_metric",
    "structural_connection",
    "structural_curvature",
    "direct_bundle_geometry",
    "bundle_metric_jets",
    "verify_structural_vs_direct",
    "coordinate_lift",
    "random_bundle_points",
    "OracleReport",
]

#: Candidate readings of the lone ambiguous vector in the mixed
#: horizontal-horizontal-vertical curvature formula: the quarter-term
#: ``R(R(phi u, Z)Y, X)v`` names a vector ``u`` that every other term writes
#: as ``v``.  "phi_v" reads ``u := v`` (term uses R(phi v, .)); "v" reads
#: ``phi u := v`` (term uses R(v, .)).
CURVATURE_MIXED_READINGS = ("phi_v", "v")
DEFAULT_MIXED_READING = "phi_v"


@dataclass(frozen=True)
class BundlePoint:
    """A point of TM: base point ``p`` and tangent vector ``v`` at ``p``."""

    p: tuple
    v: tuple

    def __init__(self, p, v):
        object.__setattr__(self, "p", tuple(float(x) for x in p))
        object.__setattr__(self, "v", tuple(float(x) for x in v))


@dataclass(frozen=True)
class LiftedVector:
    """An element of T_(p,v)TM stored as (horizontal part, vertical part)."""

    h: np.ndarray
    w: np.ndarray

    def __init__(self, h, w):
        object.__setattr__(self, "h", np.asarray(h, dtype=float))
        object.__setattr__(self, "w", np.asarray(w, dtype=float))

    def __add__(self, other: "LiftedVector") -> "LiftedVector":
        return LiftedVector(self.h + other.h, self.w + other.w)

    def __sub__(self, other: "LiftedVector") -> "LiftedVector":
        return LiftedVector(self.h - other.h, self.w - other.w)

    def __mul__(self, c: float) -> "LiftedVector":
        return LiftedVector(self.h * c, self.w * c)

    __rmul__ = __mul__

    def __neg__(self) -> "LiftedVector":
        return LiftedVector(-self.h, -self.w)

    def sup_norm(self) -> float:
        return max(sup_norm(self.h), sup_norm(self.w))

    @staticmethod
    def zero(n: int) -> "LiftedVector":
        return LiftedVector(np.zeros(n), np.zeros(n))


@dataclass(frozen=True)
class LiftedField:
    """A lift H(W) + V(Z) of base vector fields, given by component expressions.

    Either part may be None (purely horizontal / purely vertical lifts).
    """

    horizontal: tuple | None = None
    vertical: tuple | None = None


def coordinate_lift(manifold: ChartManifold, i: int, kind: str) -> LiftedField:
    """The lift H(d_i) or V(d_i) of a coordinate basis field."""
    from .jetcalc import parse_expr
    comps = tuple(
        parse_expr("1" if k == i else "0", manifold.coords, tuple(manifold.params))
        for k in range(manifold.dim)
    )
    if kind == "H":
        return LiftedField(horizontal=comps)
    if kind == "V":
        return LiftedField(vertical=comps)
    raise ValueError(f"kind must be 'H' or 'V', got {kind!r}")


def _components(xi):
    return getattr(xi, "components", xi)


# ---------------------------------------------------------------------------
# The bundle metric
# ---------------------------------------------------------------------------

def sasaki_phi_metric(manifold: ChartManifold, bp: BundlePoint) -> np.ndarray:
    """The bundle metric in the induced natural frame (d_x, d_v) at (p, v).

    Blocks (with A^a_i = Gamma^a_iq v^q and (g phi)_ab = g_ac phi^c_b):
    xx = g + A^T (g phi) A, xv = A^T (g phi), vv = (g phi).
    """
    jg = JetGeometry(manifold, bp.p, order=1)
    g0, phi0, gamma0 = jg.g, jg.phi, jg.gamma
    v = np.asarray(bp.v)
    gphi = g0 @ phi0
    a = np.einsum("aiq,q->ai", gamma0, v)
    n = manifold.dim
    out = np.empty((2 * n, 2 * n))
    out[:n, :n] = g0 + a.T @ gphi @ a
    out[:n, n:] = a.T @ gphi
    out[n:, :n] = out[:n, n:].T
    out[n:, n:] = gphi
    return out


# ---------------------------------------------------------------------------
# Structural connection (case formulas)
# ---------------------------------------------------------------------------

def _r_apply(R0: np.ndarray, x, y, z) -> np.ndarray:
    """R(x, y)z in components: x^i y^j z^k R^l_kij."""
    return np.einsum("lkij,i,j,k->l", R0, x, y, z)


def structural_connection(manifold: ChartManifold, bp: BundlePoint,
                          a: LiftedField, b: LiftedField) -> LiftedVector:
    """The bundle Levi-Civita connection on lifts of base vector fields.

    Assembled case by case: horizontal-horizontal picks up the curvature
    correction ``-1/2 V(R(W,Z)v)``, horizontal-vertical and vertical-horizontal
    pick up ``1/2 H(R(phi v, .) .)`` terms, vertical-vertical vanishes.
    """
    return _connection_at(JetGeometry(manifold, bp.p, order=2), bp, a, b)


def _connection_at(jg: JetGeometry, bp: BundlePoint,
                   a: LiftedField, b: LiftedField) -> LiftedVector:
    n = jg.n
    v = np.asarray(bp.v)
    R0 = jg.riemann
    phiv = jg.phi @ v

    def values(comps):
        return jet_values(jg.field_jets(comps, order=1))

    h_out = np.zeros(n)
    w_out = np.zeros(n)

    a_h = values(_components(a.horizontal)) if a.horizontal is not None else None
    a_v = values(_components(a.vertical)) if a.vertical is not None else None

    if a_h is not None and b.horizontal is not None:
        bh_jets = jg.field_jets(_components(b.horizontal), order=1)
        nabla_bh = jet_values(cov_deriv(bh_jets, jg.gamma_jets))
        bh0 = jet_values(bh_jets)
        h_out += nabla_bh @ a_h
        w_out += -0.5 * _r_apply(R0, a_h, bh0, v)
    if a_h is not None and b.vertical is not None:
        bv_jets = jg.field_jets(_components(b.vertical), order=1)
        nabla_bv = jet_values(cov_deriv(bv_jets, jg.gamma_jets))
        bv0 = jet_values(bv_jets)
        w_out += nabla_bv @ a_h
        h_out += 0.5 * _r_apply(R0, phiv, bv0, a_h)
    if a_v is not None and b.horizontal is not None:
        bh0 = values(_components(b.horizontal))
        h_out += 0.5 * _r_apply(R0, phiv, a_v, bh0)
    # vertical-vertical: zero

    return LiftedVector(h_out, w_out)


# ---------------------------------------------------------------------------
# Structural curvature (case formulas)
# ---------------------------------------------------------------------------

class _StructuralCurvature:
    """Case formulas bound to one (geometry, fiber point, reading)."""

    def __init__(self, jg: JetGeometry, bp: BundlePoint, reading: str):
        if reading not in CURVATURE_MIXED_READINGS:
            raise ValueError(f"unknown reading {reading!r}; use one of {CURVATURE_MIXED_READINGS}")
        self.n = jg.n
        self.R = jg.riemann
        self.NR = jg.nabla_riemann
        self.phi = jg.phi
        self.v = np.asarray(bp.v)
        self.phiv = self.phi @ self.v
        self.mixed_first_arg = self.phiv if reading == "phi_v" else self.v

    def r(self, x, y, z):
        return _r_apply(self.R, x, y, z)

    def nr(self, d, x, y, z):
        """(nabla_d R)(x, y) z."""
        return np.einsum("mlkij,m,i,j,k->l", self.NR, d, x, y, z)

    def hhh(self, x, y, z) -> LiftedVector:
        v, phiv = self.v, self.phiv
        h = (self.r(x, y, z)
             + 0.5 * self.r(phiv, self.r(x, y, v), z)
             + 0.25 * self.r(phiv, self.r(x, z, v), y)
             - 0.25 * self.r(phiv, self.r(y, z, v), x))
        w = 0.5 * self.nr(z, x, y, v)
        return LiftedVector(h, w)

    def hvv(self, x, y, z) -> LiftedVector:
        h = (-0.5 * self.r(self.phi @ y, z, x)
             - 0.25 * self.r(self.v, y, self.r(self.v, z, x)))
        return LiftedVector(h, np.zeros(self.n))

    def vvh(self, x, y, z) -> LiftedVector:
        h = (0.25 * self.r(self.v, x, self.r(self.v, y, z))
             - 0.25 * self.r(self.v, y, self.r(self.v, x, z))
             + self.r(self.phi @ x, y, z))
        return LiftedVector(h, np.zeros(self.n))

    def hvh(self, x, y, z) -> LiftedVector:
        h = 0.5 * self.nr(x, self.phiv, y, z)
        w = (0.25 * self.r(self.r(self.phiv, y, z), x, self.v)
             + 0.5 * self.r(x, z, y))
        return LiftedVector(h, w)

    def hhv(self, x, y, z) -> LiftedVector:
        h = (0.5 * self.nr(x, self.phiv, z, y)
             - 0.5 * self.nr(y, self.phiv, z, x))
        w = (0.25 * self.r(self.r(self.mixed_first_arg, z, y), x, self.v)
             - 0.25 * self.r(self.r(self.phiv, z, x), y, self.v)
             + self.r(x, y, z))
        return LiftedVector(h, w)

    def apply(self, x: LiftedVector, y: LiftedVector, z: LiftedVector) -> LiftedVector:
        out = LiftedVector.zero(self.n)
        out = out + self.hhh(x.h, y.h, z.h)
        out = out + self.hhv(x.h, y.h, z.w)
        out = out + self.hvh(x.h, y.w, z.h) - self.hvh(y.h, x.w, z.h)
        out = out + self.hvv(x.h, y.w, z.w) - self.hvv(y.h, x.w, z.w)
        out = out + self.vvh(x.w, y.w, z.h)
        # vertical-vertical-vertical: zero
        return out


def structural_curvature(manifold: ChartManifold, bp: BundlePoint,
                         x: LiftedVector, y: LiftedVector, z: LiftedVector,
                         reading: str = DEFAULT_MIXED_READING) -> LiftedVector:
    """Bundle curvature R~(x, y)z from the horizontal/vertical case formulas.

    The curvature is tensorial, so only pointwise lifted vectors are needed;
    mixed inputs are expanded multilinearly over the six pure cases (plus
    antisymmetry in the first two slots).
    """
    jg = JetGeometry(manifold, bp.p, order=3)
    return _StructuralCurvature(jg, bp, reading).apply(x, y, z)


# ---------------------------------------------------------------------------
# Direct oracle: the bundle chart as plain chart geometry
# ---------------------------------------------------------------------------

def bundle_metric_jets(manifold: ChartManifold, bp: BundlePoint, order: int = 2):
    """Order-``order`` jets of the bundle metric in the (x, v) chart at (p, v).

    Base data enters as jets in x only (the v-dependence is polynomial and is
    generated exactly by jet multiplication with the linear v-coordinate
    jets), so no base derivatives beyond order ``order + 1`` are needed.
    """
    n = manifold.dim
    base = JetGeometry(manifold, bp.p, order=order + 1)
    gamma = base.gamma_jets          # order `order`
    g = base.g_jets
    phi = base.phi_jets
    gphi = np.empty((n, n), dtype=object)
    for a_i in range(n):
        for b_i in range(n):
            acc = None
            for c in range(n):
                term = g[a_i, c] * phi[c, b_i]
                acc = term if acc is None else acc + term
            gphi[a_i, b_i] = acc

    bsp = jet_space(2 * n, order)
    bexp_index = bsp.index

    def embed(jet: Jet) -> Jet:
        jet = jet.truncate(order) if jet.order > order else jet
        c = np.zeros(bsp.size)
        for idx, e in enumerate(jet.space.exponents):
            c[bexp_index[e + (0,) * n]] = jet.coeffs[idx]
        return Jet(bsp, c)

    vjet = [Jet.variable(bsp, n + q, bp.v[q]) for q in range(n)]
    a_lift = np.empty((n, n), dtype=object)  # a_lift[a, i] = Gamma^a_iq v^q
    for a_i in range(n):
        for i in range(n):
            acc = None
            for q in range(n):
                term = embed(gamma[a_i, i, q]) * vjet[q]
                acc = term if acc is None else acc + term
            a_lift[a_i, i] = acc

    gphi_e = np.empty((n, n), dtype=object)
    for a_i in range(n):
        for b_i in range(n):
            gphi_e[a_i, b_i] = embed(gphi[a_i, b_i])

    big = np.empty((2 * n, 2 * n), dtype=object)
    for i in range(n):
        for j in range(i, n):
            acc = embed(g[i, j])
            for a_i in range(n):
                for b_i in range(n):
                    acc = acc + a_lift[a_i, i] * gphi_e[a_i, b_i] * a_lift[b_i, j]
            big[i, j] = acc
            big[j, i] = acc
    for i in range(n):
        for j in range(n):
            acc = None
            for a_i in range(n):
                term = a_lift[a_i, i] * gphi_e[a_i, j]
                acc = term if acc is None else acc + term
            big[i, n + j] = acc
            big[n + j, i] = acc
    for i in range(n):
        for j in range(n):
            big[n + i, n + j] = gphi_e[i, j]
    return big


def direct_bundle_geometry(manifold: ChartManifold, bp: BundlePoint) -> GeometryAtPoint:
    """Levi-Civita connection and curvature of the bundle chart, computed with
    no knowledge of the structural case formulas (the oracle side)."""
    big = bundle_metric_jets(manifold, bp, order=2)
    big_inv = invert_jet_matrix(big, bp.p + bp.v)
    gamma_b = christoffel_jets(big, big_inv)
    riem_b = riemann_jets(gamma_b)
    g0 = jet_values(big)
    det = float(np.linalg.det(g0))
    if det == 0.0 or not np.isfinite(det):
        raise SingularMetricError(det, bp.p + bp.v)
    from .basegeo import jet_first_derivs
    return GeometryAtPoint(
        p=bp.p + bp.v,
        g=g0,
        g_inv=jet_values(big_inv),
        det_g=det,
        phi=None,
        gamma=jet_values(gamma_b),
        dgamma=jet_first_derivs(gamma_b),
        curvature=jet_values(riem_b),
    )


# ---------------------------------------------------------------------------
# Structural vs direct comparison
# ---------------------------------------------------------------------------

def _hv_split(t_x: np.ndarray, t_v: np.ndarray, gamma0: np.ndarray, v: np.ndarray):
    """Coordinate components (d_x, d_v) -> (horizontal, vertical) parts."""
    w = t_v + np.einsum("kiq,q,i->k", gamma0, v, t_x)
    return LiftedVector(t_x, w)


def _hv_to_coords(lv: LiftedVector, gamma0: np.ndarray, v: np.ndarray):
    t_x = lv.h
    t_v = lv.w - np.einsum("kiq,q,i->k", gamma0, v, lv.h)
    return t_x, t_v


@dataclass
class OracleCaseResult:
    case: str
    max_residual: float
    worst_point: list


@dataclass
class OracleReport:
    manifold: str
    tol: float
    n_points: int
    n_triples: int
    seed: int
    cases: list
    reading_residuals: dict
    selected_reading: str
    passed: bool

    def to_dict(self) -> dict:
        return {
            "manifold": self.manifold,
            "tol": self.tol,
            "n_points": self.n_points,
            "n_triples": self.n_triples,
            "seed": self.seed,
            "cases": [
                {"case": c.case, "max_residual": c.max_residual,
                 "worst_point": c.worst_point}
                for c in self.cases
            ],
            "reading_residuals": self.reading_residuals,
            "selected_reading": self.selected_reading,
            "passed": self.passed,
        }


def random_bundle_points(manifold: ChartManifold, count: int, seed: int = 0,
                         v_scale: float = 1.0, margin: float = 0.1) -> list:
    """Uniform random interior bundle points; v components in [-v_scale, v_scale]."""
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(count):
        p = [lo + (margin + (1 - 2 * margin) * rng.random()) * (hi - lo)
             for lo, hi in manifold.domain]
        v = v_scale * (2.0 * rng.random(manifold.dim) - 1.0)
        pts.append(BundlePoint(p, v))
    return pts


def verify_structural_vs_direct(manifold: ChartManifold, samples: Sequence[BundlePoint],
                                tol: float = 1e-7, seed: int = 0,
                                n_triples: int = 5) -> OracleReport:
    """Compare the structural case formulas against the direct chart oracle.

    Connection: every pair of coordinate lifts (H d_i, V d_i) is checked.  The
    direct side differentiates the lift coefficient fields (the horizontal
    lift has v-dependent components) and adds the bundle Christoffel action;
    results are compared after projecting onto the horizontal/vertical split.

    Curvature: random lifted triples per point, evaluated under both candidate
    readings of the ambiguous mixed-formula vector; the reading with the
    smaller residual is selected and both residuals are reported.
    """
    rng = np.random.default_rng(seed)
    n = manifold.dim
    conn_worst = (0.0, None)
    curv_worst = {r: (0.0, None) for r in CURVATURE_MIXED_READINGS}

    lift_kinds = [("H", i) for i in range(n)] + [("V", i) for i in range(n)]
    lift_fields = {(kind, i): coordinate_lift(manifold, i, kind) for kind, i in lift_kinds}

    for bp in samples:
        base = JetGeometry(manifold, bp.p, order=3)
        gamma0, dgamma0 = base.gamma, base.dgamma
        v = np.asarray(bp.v)
        direct = direct_bundle_geometry(manifold, bp)
        gamma_b = direct.gamma

        # -- connection over all coordinate-lift pairs ------------------------
        coord_of = {}
        for kind, i in lift_kinds:
            a_x = np.zeros(n)
            a_v = np.zeros(n)
            if kind == "H":
                a_x[i] = 1.0
                a_v = -np.einsum("kq,q->k", gamma0[:, i, :], v)
            else:
                a_v[i] = 1.0
            coord_of[(kind, i)] = np.concatenate([a_x, a_v])

        for ka in lift_kinds:
            a_coord = coord_of[ka]
            for kb in lift_kinds:
                b_coord = coord_of[kb]
                # derivative of B's coefficient fields at (p, v)
                deriv = np.zeros(2 * n)  # a^D d_D B^C accumulated below
                out = np.einsum("cde,d,e->c", gamma_b, a_coord, b_coord)
                if kb[0] == "H":
                    j = kb[1]
                    # B^{v^k} = -Gamma^k_{jq} v^q
                    d_x = -np.einsum("dkq,q->dk", dgamma0[:, :, j, :], v)  # d/dx^d
                    d_v = -gamma0[:, j, :].T                               # d/dv^p -> [p, k]
                    deriv_vpart = a_coord[:n] @ d_x + a_coord[n:] @ d_v
                    deriv[n:] += deriv_vpart
                out = out + deriv
                got = _hv_split(out[:n], out[n:], gamma0, v)
                want = _connection_at(base, bp, lift_fields[ka], lift_fields[kb])
                res = (got - want).sup_norm()
                if res > conn_worst[0]:
                    conn_worst = (res, bp)

        # -- curvature over random lifted triples ----------------------------
        structural = {r: _StructuralCurvature(base, bp, r)
                      for r in CURVATURE_MIXED_READINGS}
        r_direct = direct.curvature
        for _ in range(n_triples):
            coords = rng.uniform(-1.0, 1.0, size=(3, 2 * n))
            out = np.einsum("dcab,a,b,c->d", r_direct, coords[0], coords[1], coords[2])
            got = _hv_split(out[:n], out[n:], gamma0, v)
            lifts = [_hv_split(c[:n], c[n:], gamma0, v) for c in coords]
            for r in CURVATURE_MIXED_READINGS:
                want = structural[r].apply(*lifts)
                res = (got - want).sup_norm()
                if res > curv_worst[r][0]:
                    curv_worst[r] = (res, bp)

    selected = min(CURVATURE_MIXED_READINGS, key=lambda r: curv_worst[r][0])
    cases = [
        OracleCaseResult("connection", conn_worst[0],
                         list(conn_worst[1].p + conn_worst[1].v) if conn_worst[1] else []),
        OracleCaseResult(f"curvature[{selected}]", curv_worst[selected][0],
                         list(curv_worst[selected][1].p + curv_worst[selected][1].v)
                         if curv_worst[selected][1] else []),
    ]
    passed = conn_worst[0] < tol and curv_worst[selected][0] < tol
    return OracleReport(
        manifold=manifold.name, tol=tol, n_points=len(samples), n_triples=n_triples,
        seed=seed, cases=cases,
        reading_residuals={r: curv_worst[r][0] for r in CURVATURE_MIXED_READINGS},
        selected_reading=selected, passed=passed,
    )
