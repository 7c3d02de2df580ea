"""Tension-type operators for vector fields viewed as maps into the bundle.

For a vector field ``xi`` on the base, considered as a map into the tangent
bundle with the phi-Sasaki metric, this module evaluates:

* the rough Laplacian ``lap(xi) = -Tr_g nabla^2 xi`` and its square,
* the curvature term ``S(xi) = Tr_g R(phi xi, nabla_* xi) *``,
* the tension field ``tau(xi) = H S(xi) - V lap(xi)``,
* the bitension field ``tau2(xi)`` (horizontal and vertical blocks),
* the interpolating sesqui-tension ``tau_{d1,d2} = d1 tau + d2 tau2``,

plus harmonicity classifiers and the product-rule identities that relate
``lap(f xi)`` and ``S(f xi)`` to ``f``.  All traces are coordinate traces with
``g^{ij}`` over the full dimension; closed forms stated in orthonormal frames
are compared through explicit frame conversion, never by frame-based
evaluation (indefinite vertical metrics break naive orthonormal frames).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .basegeo import (
    ChartManifold,
    JetGeometry,
    cov_deriv,
    grad_and_laplace,
    jet_values,
    metric_norm,
    sup_norm,
)
from .bundlelift import LiftedVector
from .jetcalc import Jet, ScalarFieldExpr, jet_space, parse_expr

__all__ = [
    "VectorFieldSpec",
    "TensionReport",
    "ClassificationReport",
    "field_from_strings",
    "rough_laplacian",
    "s_field",
    "tension",
    "bitension",
    "sesqui_tension",
    "tension_report",
    "classify",
    "product_rule_check",
    "TensionOperators",
    "tension_operators",
    "tension_values_light",
]


@dataclass(frozen=True)
class VectorFieldSpec:
    """A vector field given by one component expression per base coordinate.

    ``frame`` is a reporting tag only ("natural" components, or the name of a
    declared orthonormal frame the field was originally stated in).
    """

    components: tuple
    name: str = "xi"
    frame: str | None = None


def field_from_strings(sources: Sequence[str], manifold: ChartManifold,
                       name: str = "xi") -> VectorFieldSpec:
    comps = tuple(parse_expr(str(s), manifold.coords, tuple(manifold.params))
                  for s in sources)
    if len(comps) != manifold.dim:
        raise ValueError(f"field has {len(comps)} components, chart has {manifold.dim}")
    return VectorFieldSpec(components=comps, name=name)


def _components(xi) -> tuple:
    comps = getattr(xi, "components", xi)
    return tuple(comps)


# ---------------------------------------------------------------------------
# Jet-level contractions
# ---------------------------------------------------------------------------

def _matvec_jets(m: np.ndarray, x: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    out = np.empty(n, dtype=object)
    for i in range(n):
        acc = None
        for j in range(n):
            term = m[i, j] * x[j]
            acc = term if acc is None else acc + term
        out[i] = acc
    return out


def _laplacian_jets(jg: JetGeometry, xi_jets: np.ndarray) -> np.ndarray:
    """-g^{ij} (nabla^2 xi)^k_{ij} as jets two orders below ``xi_jets``."""
    d1 = cov_deriv(xi_jets, jg.gamma_jets)
    d2 = cov_deriv(d1, jg.gamma_jets)
    n = jg.n
    ginv = jg.ginv_jets
    ginv_zero = [[ginv[i, j].is_zero() for j in range(n)] for i in range(n)]
    out = np.empty(n, dtype=object)
    for k in range(n):
        acc = None
        for i in range(n):
            for j in range(n):
                if ginv_zero[i][j] or d2[k, i, j].is_zero():
                    continue
                term = ginv[i, j] * d2[k, i, j]
                acc = term if acc is None else acc + term
        if acc is None:
            ref = d2[k, 0, 0]
            acc = Jet.constant(jet_space(ref.dim, min(ref.order, ginv[0, 0].order)), 0.0)
        out[k] = -acc
    return out


def _s_field_jets(jg: JetGeometry, xi_jets: np.ndarray, d1: np.ndarray,
                  order: int) -> np.ndarray:
    """S^l = g^{ij} (phi xi)^a (nabla_i xi)^b R^l_{jab}, as jets of ``order``."""
    n = jg.n
    riem = jg.riemann_jets
    ginv = jg.ginv_jets
    phixi = _matvec_jets(jg.phi_jets, xi_jets)
    zero = Jet.constant(jet_space(jg.g_jets[0, 0].dim, order), 0.0)
    # p[b, j] = g^{ij} (nabla_i xi)^b ; q = (phi xi)^a R^l_{jab}
    p = np.empty((n, n), dtype=object)
    for b in range(n):
        for j in range(n):
            acc = None
            for i in range(n):
                if ginv[i, j].is_zero() or d1[b, i].is_zero():
                    continue
                term = ginv[i, j] * d1[b, i]
                acc = term if acc is None else acc + term
            p[b, j] = acc  # may stay None (treated as zero)
    out = np.empty(n, dtype=object)
    for l in range(n):
        acc = None
        for j in range(n):
            for b in range(n):
                if p[b, j] is None:
                    continue
                q = None
                for a in range(n):
                    if phixi[a].is_zero() or riem[l, j, a, b].is_zero():
                        continue
                    term = phixi[a] * riem[l, j, a, b]
                    q = term if q is None else q + term
                if q is None:
                    continue
                term = q * p[b, j]
                acc = term if acc is None else acc + term
        if acc is None:
            out[l] = zero
        else:
            out[l] = acc.truncate(min(order, acc.order))
    return out


# ---------------------------------------------------------------------------
# The operator stack at a point
# ---------------------------------------------------------------------------

@dataclass
class TensionOperators:
    """All operator values of one field at one point (natural components)."""

    p: tuple
    xi: np.ndarray
    nabla_xi: np.ndarray        # [k, i]
    lap: np.ndarray             # rough Laplacian of xi
    lap2: np.ndarray            # iterated rough Laplacian
    s: np.ndarray               # S(xi)
    lap_s: np.ndarray           # rough Laplacian of S(xi)
    trace_term: np.ndarray      # Tr_g((nabla R)(*,S)xi + R(*,nabla S)xi + 2 R(*,S)nabla xi)
    h_curv_term: np.ndarray     # R(phi xi, lap xi) S(xi)
    h_trace: np.ndarray         # the traced horizontal bracket of the bitension
    g: np.ndarray
    ginv: np.ndarray
    phi: np.ndarray

    def tau(self) -> LiftedVector:
        return LiftedVector(self.s, -self.lap)

    def tau2(self) -> LiftedVector:
        return LiftedVector(self.lap_s + self.h_curv_term - self.h_trace,
                            -self.lap2 + self.trace_term)

    def tau_sesqui(self, d1: float, d2: float) -> LiftedVector:
        h = d1 * self.s + d2 * self.lap_s + d2 * self.h_curv_term - d2 * self.h_trace
        w = -d1 * self.lap - d2 * self.lap2 + d2 * self.trace_term
        return LiftedVector(h, w)


def tension_operators(manifold: ChartManifold, xi, p) -> TensionOperators:
    """Evaluate the full operator stack at ``p`` (jets to order 4)."""
    jg = JetGeometry(manifold, p, order=4)
    n = jg.n
    comps = _components(xi)
    xi_jets = jg.field_jets(comps)

    d1 = cov_deriv(xi_jets, jg.gamma_jets)                # order 3
    lap_jets = _laplacian_jets(jg, xi_jets)               # order 2
    lap2 = jg.laplacian_values(lap_jets)                  # values
    s_jets = _s_field_jets(jg, xi_jets, d1, order=2)      # order 2
    lap_s = jg.laplacian_values(s_jets)                   # values

    xi0 = jet_values(xi_jets)
    d1v = jet_values(d1)
    lap0 = jet_values(lap_jets)
    d1lap = jet_values(cov_deriv(lap_jets, jg.gamma_jets))
    s0 = jet_values(s_jets)
    d1s = jet_values(cov_deriv(s_jets, jg.gamma_jets))

    ginv0 = jg.ginv
    phi0 = jg.phi
    rv = jg.riemann
    nr = jg.nabla_riemann
    phixi = phi0 @ xi0
    philap = phi0 @ lap0

    # horizontal bracket -----------------------------------------------------
    h_curv = np.einsum("lkij,i,j,k->l", rv, phixi, lap0, s0)
    t1 = np.einsum("ij,m,a,bi,mljab->l", ginv0, s0, phixi, d1v, nr)
    t2 = np.einsum("ij,a,bi,kj,lkab->l", ginv0, phixi, d1v, d1s, rv)
    inner = np.einsum("k,b,ckib->ci", xi0, s0, rv)        # R(d_i, S) xi
    t3 = np.einsum("ij,a,ci,ljac->l", ginv0, phixi, inner, rv)
    t4 = np.einsum("ij,a,ljai->l", ginv0, s0, rv)
    t5 = np.einsum("ij,a,bi,ljab->l", ginv0, phixi, d1lap, rv)
    t6 = np.einsum("ij,a,bi,ljab->l", ginv0, philap, d1v, rv)
    h_trace = t1 + t2 - t3 + t4 - t5 - t6

    # vertical bracket -------------------------------------------------------
    u1 = np.einsum("ij,k,b,ilkjb->l", ginv0, xi0, s0, nr)
    u2 = np.einsum("ij,k,bj,lkib->l", ginv0, xi0, d1s, rv)
    u3 = np.einsum("ij,kj,b,lkib->l", ginv0, d1v, s0, rv)
    trace_term = u1 + u2 + 2.0 * u3

    return TensionOperators(
        p=tuple(float(x) for x in p), xi=xi0, nabla_xi=d1v, lap=lap0, lap2=lap2,
        s=s0, lap_s=lap_s, trace_term=trace_term, h_curv_term=h_curv,
        h_trace=h_trace, g=jg.g, ginv=ginv0, phi=phi0,
    )


def tension_values_light(manifold: ChartManifold, xi, p):
    """First-order operator data only (for quadrature): returns
    (nabla xi values, S values, lap values, g, ginv, phi, det g)."""
    jg = JetGeometry(manifold, p, order=2)
    comps = _components(xi)
    xi_jets = jg.field_jets(comps)
    d1 = cov_deriv(xi_jets, jg.gamma_jets)
    d2 = cov_deriv(d1, jg.gamma_jets)
    d1v = jet_values(d1)
    lap = -np.einsum("ij,kij->k", jg.ginv, jet_values(d2))
    xi0 = jet_values(xi_jets)
    phixi = jg.phi @ xi0
    s = np.einsum("ij,a,bi,ljab->l", jg.ginv, phixi, d1v, jg.riemann)
    return d1v, s, lap, jg.g, jg.ginv, jg.phi, jg.det_g


# ---------------------------------------------------------------------------
# Public operators
# ---------------------------------------------------------------------------

def rough_laplacian(manifold: ChartManifold, xi, p, iterate: int = 1) -> np.ndarray:
    """The rough Laplacian of ``xi`` at ``p``; ``iterate=2`` applies it twice."""
    if iterate not in (1, 2):
        raise ValueError(f"iterate must be 1 or 2, got {iterate}")
    if iterate == 1:
        jg = JetGeometry(manifold, p, order=2)
        return jg.laplacian_values(jg.field_jets(_components(xi)))
    jg = JetGeometry(manifold, p, order=4)
    lap_jets = _laplacian_jets(jg, jg.field_jets(_components(xi)))
    return jg.laplacian_values(lap_jets)


def s_field(manifold: ChartManifold, xi, p) -> np.ndarray:
    """S(xi) = Tr_g R(phi xi, nabla_* xi) * at ``p``."""
    _, s, _, _, _, _, _ = tension_values_light(manifold, xi, p)
    return s


def tension(manifold: ChartManifold, xi, p) -> LiftedVector:
    """tau(xi) = H S(xi) - V lap(xi) at ``p``."""
    _, s, lap, _, _, _, _ = tension_values_light(manifold, xi, p)
    return LiftedVector(s, -lap)


def bitension(manifold: ChartManifold, xi, p) -> LiftedVector:
    """The bitension field at ``p`` (both blocks, assembled term by term)."""
    return tension_operators(manifold, xi, p).tau2()


def sesqui_tension(manifold: ChartManifold, xi, p, delta1: float, delta2: float) -> LiftedVector:
    """The interpolating sesqui-tension: delta-weighted blocks of tau and tau2."""
    return tension_operators(manifold, xi, p).tau_sesqui(delta1, delta2)


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class TensionReport:
    at: tuple
    S: np.ndarray
    lap: np.ndarray
    lap2: np.ndarray
    tau: LiftedVector
    tau2: LiftedVector
    sesqui: LiftedVector
    delta1: float
    delta2: float
    trace_term: np.ndarray
    norms: dict

    def to_dict(self) -> dict:
        return {
            "at": list(self.at),
            "S": self.S.tolist(),
            "lap": self.lap.tolist(),
            "lap2": self.lap2.tolist(),
            "tau": {"h": self.tau.h.tolist(), "v": self.tau.w.tolist()},
            "tau2": {"h": self.tau2.h.tolist(), "v": self.tau2.w.tolist()},
            "sesqui": {"h": self.sesqui.h.tolist(), "v": self.sesqui.w.tolist()},
            "delta1": self.delta1,
            "delta2": self.delta2,
            "trace_term": self.trace_term.tolist(),
            "norms": self.norms,
        }


def tension_report(manifold: ChartManifold, xi, p, delta1: float = 1.0,
                   delta2: float = 1.0) -> TensionReport:
    ops = tension_operators(manifold, xi, p)
    tau = ops.tau()
    tau2 = ops.tau2()
    sesqui = ops.tau_sesqui(delta1, delta2)
    g = ops.g
    norms = {
        "tau_h_metric": metric_norm(g, tau.h),
        "tau_v_metric": metric_norm(g, tau.w),
        "tau2_h_metric": metric_norm(g, tau2.h),
        "tau2_v_metric": metric_norm(g, tau2.w),
        "tau_sup": tau.sup_norm(),
        "tau2_sup": tau2.sup_norm(),
        "sesqui_sup": sesqui.sup_norm(),
    }
    return TensionReport(
        at=ops.p, S=ops.s, lap=ops.lap, lap2=ops.lap2, tau=tau, tau2=tau2,
        sesqui=sesqui, delta1=delta1, delta2=delta2, trace_term=ops.trace_term,
        norms=norms,
    )


_CRITERIA = ("harmonic_vf", "harmonic_map", "biharmonic_vf", "biharmonic_map",
             "sesqui_vf", "sesqui_map")


@dataclass
class ClassificationReport:
    field: str
    delta1: float
    delta2: float
    tol: float
    n_points: int
    flags: dict
    residuals: dict
    labels: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "field": self.field,
            "delta1": self.delta1,
            "delta2": self.delta2,
            "tol": self.tol,
            "n_points": self.n_points,
            "flags": self.flags,
            "residuals": self.residuals,
            "labels": self.labels,
        }


def classify(manifold: ChartManifold, xi, points, delta1: float, delta2: float,
             tol: float = 1e-8) -> ClassificationReport:
    """Classification flags over a sample of points.

    A criterion's residual is the worst coordinate sup-norm of its defining
    block over all samples; the flag is set when that residual stays below
    ``tol``.  Degenerate delta pairs are permitted and labeled.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    worst = {name: 0.0 for name in _CRITERIA}
    for p in points:
        ops = tension_operators(manifold, xi, p)
        tau2 = ops.tau2()
        sesq = ops.tau_sesqui(delta1, delta2)
        res = {
            "harmonic_vf": sup_norm(ops.lap),
            "harmonic_map": max(sup_norm(ops.lap), sup_norm(ops.s)),
            "biharmonic_vf": sup_norm(tau2.w),
            "biharmonic_map": tau2.sup_norm(),
            "sesqui_vf": sup_norm(sesq.w),
            "sesqui_map": sesq.sup_norm(),
        }
        for name in _CRITERIA:
            worst[name] = max(worst[name], res[name])
    labels = []
    if delta2 == 0.0:
        labels.append("degenerate deltas: sesqui criteria reduce to the harmonic theory")
    if delta1 == 0.0 and delta2 != 0.0:
        labels.append("degenerate deltas: sesqui criteria reduce to the biharmonic theory")
    return ClassificationReport(
        field=getattr(xi, "name", "xi"), delta1=delta1, delta2=delta2, tol=tol,
        n_points=len(points),
        flags={name: bool(worst[name] < tol) for name in _CRITERIA},
        residuals=worst, labels=labels,
    )


def product_rule_check(manifold: ChartManifold, f: ScalarFieldExpr, xi, p):
    """Residuals of the two product rules at ``p``.

    First: lap(f xi) = f lap(xi) - (Delta f) xi - 2 nabla_{grad f} xi.
    Second: S(f xi) = f^2 S(xi).
    Both sides come from independent engine paths; the residual pair should
    vanish to tolerance for all smooth inputs.
    """
    comps = _components(xi)
    fxi = tuple(f * c for c in comps)
    jg = JetGeometry(manifold, p, order=2)
    xi_jets = jg.field_jets(comps)
    xi0 = jet_values(xi_jets)
    d1v = jet_values(cov_deriv(xi_jets, jg.gamma_jets))

    lap_fxi = jg.laplacian_values(jg.field_jets(fxi))
    lap_xi = jg.laplacian_values(xi_jets)
    grad, lap_f = grad_and_laplace(manifold, f, p)
    f0 = jg.scalar_jet(f, order=0).value
    rhs1 = f0 * lap_xi - lap_f * xi0 - 2.0 * (d1v @ grad)
    res1 = sup_norm(lap_fxi - rhs1)

    s_fxi = s_field(manifold, fxi, p)
    s_xi = s_field(manifold, comps, p)
    res2 = sup_norm(s_fxi - f0 * f0 * s_xi)
    return res1, res2
