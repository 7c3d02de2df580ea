"""Base-manifold geometry on a single coordinate chart.

Everything is derived from jet-valued metric data: Christoffel symbols, the
Riemann tensor (convention ``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z -
nabla_[X,Y] Z``, components ``R(d_i, d_j)d_k = R^l_kij d_l``), its covariant
derivative, covariant derivatives of vector fields, gradients/Laplacians of
scalar fields, and validation of the para-Kaehler-Norden axioms for a
structure tensor ``phi``.

The jet-tensor helpers (:func:`invert_jet_matrix`, :func:`christoffel_jets`,
:func:`riemann_jets`, :func:`cov_deriv`) operate on plain object arrays of
jets so they can be reused verbatim on the tangent-bundle chart.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .jetcalc import (
    Jet,
    ScalarFieldExpr,
    eval_jet,
    jet_space,
    parse_expr,
)

__all__ = [
    "ChartManifold",
    "GeometryAtPoint",
    "JetGeometry",
    "OrthonormalFrame",
    "StructureReport",
    "SingularMetricError",
    "make_manifold",
    "christoffel",
    "curvature",
    "curvature_cov_deriv",
    "covariant_derivs_vector",
    "grad_and_laplace",
    "validate_structure",
    "laplacian_sign",
    "sup_norm",
    "metric_norm",
    "jet_values",
    "jet_first_derivs",
    "invert_jet_matrix",
    "christoffel_jets",
    "riemann_jets",
    "cov_deriv",
]


class SingularMetricError(ValueError):
    """Raised when the metric fails to be invertible at a point."""

    def __init__(self, det: float, p=None):
        self.det = det
        self.point = None if p is None else tuple(float(x) for x in p)
        where = "" if p is None else f" at {self.point}"
        super().__init__(f"singular metric{where}: det g = {det}")


# ---------------------------------------------------------------------------
# Manifold definition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChartManifold:
    """A pseudo-Riemannian chart with a (1,1) structure tensor.

    ``metric[i][j]`` and ``structure[i][j]`` are parsed scalar fields; the
    metric table is symmetric by construction.  ``domain`` is a box of open
    coordinate intervals; all geometry is evaluated at interior points only.
    """

    name: str
    coords: tuple
    domain: tuple
    metric: tuple
    structure: tuple
    params: Mapping[str, float] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def contains(self, p) -> bool:
        return all(lo < x < hi for x, (lo, hi) in zip(p, self.domain))

    def ensure_interior(self, p) -> None:
        if len(p) != self.dim:
            raise ValueError(f"point has {len(p)} components, chart has {self.dim}")
        if not self.contains(p):
            raise ValueError(
                f"point {tuple(float(x) for x in p)} is not interior to the domain "
                f"{self.domain} of chart '{self.name}'")

    def grid(self, counts) -> np.ndarray:
        """Uniform interior sample grid, `counts` points per axis."""
        if isinstance(counts, int):
            counts = [counts] * self.dim
        axes = []
        for (lo, hi), c in zip(self.domain, counts):
            pad = (hi - lo) / (c + 1)
            axes.append(np.linspace(lo + pad, hi - pad, c))
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)


def make_manifold(name, coords, domain, metric, structure,
                  params: Mapping[str, float] | None = None) -> ChartManifold:
    """Build a chart from expression strings.

    ``metric`` may be a full row-major table or a dict keyed by (i, j) with
    i <= j; missing off-diagonal entries default to zero.  ``structure`` is a
    full table (it need not be symmetric).
    """
    params = dict(params or {})
    pnames = tuple(params)
    n = len(coords)

    def parse(src):
        return parse_expr(str(src), coords, pnames)

    zero = parse("0")
    if isinstance(metric, Mapping):
        table = [[None] * n for _ in range(n)]
        for (i, j), src in metric.items():
            e = parse(src)
            table[i][j] = e
            table[j][i] = e
        g = tuple(tuple(e if e is not None else zero for e in row) for row in table)
    else:
        rows = [[parse(src) for src in row] for row in metric]
        # symmetrize by construction: keep the upper-triangle entry for both slots
        g = tuple(tuple(rows[min(i, j)][max(i, j)] for j in range(n)) for i in range(n))
    phi = tuple(tuple(parse(src) for src in row) for row in structure)
    dom = tuple((float(lo), float(hi)) for lo, hi in domain)
    return ChartManifold(name=name, coords=tuple(coords), domain=dom,
                         metric=g, structure=phi, params=params)


# ---------------------------------------------------------------------------
# Jet-tensor helpers (chart-agnostic)
# ---------------------------------------------------------------------------

def jet_values(arr: np.ndarray) -> np.ndarray:
    """Extract the value part of an object array of jets."""
    out = np.empty(arr.shape)
    flat_in, flat_out = arr.ravel(), out.ravel()
    for i in range(flat_in.size):
        flat_out[i] = flat_in[i].value
    return out


def jet_first_derivs(arr: np.ndarray) -> np.ndarray:
    """First partials of each entry; the derivative axis comes first."""
    first = arr.ravel()[0]
    n = first.dim
    sp = first.space
    out = np.empty((n,) + arr.shape)
    e = np.eye(n, dtype=int)
    idxs = [sp.index[tuple(e[v])] for v in range(n)]
    for pos in np.ndindex(*arr.shape):
        c = arr[pos].coeffs
        for v in range(n):
            out[(v,) + pos] = c[idxs[v]]
    return out


def invert_jet_matrix(a: np.ndarray, point=None) -> np.ndarray:
    """Invert a matrix of jets by Gauss-Jordan elimination (value pivoting)."""
    n = a.shape[0]
    sp = a[0, 0].space
    work = [[a[i, j] for j in range(n)] for i in range(n)]
    inv = [[Jet.constant(sp, 1.0 if i == j else 0.0) for j in range(n)] for i in range(n)]
    scale = max(abs(a[i, j].value) for i in range(n) for j in range(n))
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(work[r][col].value))
        if abs(work[piv][col].value) <= 1e-14 * max(scale, 1.0):
            vals = np.array([[a[i, j].value for j in range(n)] for i in range(n)])
            raise SingularMetricError(float(np.linalg.det(vals)), point)
        work[col], work[piv] = work[piv], work[col]
        inv[col], inv[piv] = inv[piv], inv[col]
        pivot = work[col][col].reciprocal()
        work[col] = [w * pivot for w in work[col]]
        inv[col] = [w * pivot for w in inv[col]]
        for r in range(n):
            if r == col:
                continue
            factor = work[r][col]
            if factor.value == 0.0 and not factor.coeffs.any():
                continue
            work[r] = [wr - factor * wc for wr, wc in zip(work[r], work[col])]
            inv[r] = [wr - factor * wc for wr, wc in zip(inv[r], inv[col])]
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = inv[i][j]
    return out


def christoffel_jets(g: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Levi-Civita symbols Gamma^k_ij as jets of one lower order than g."""
    n = g.shape[0]
    dg = np.empty((n, n, n), dtype=object)  # dg[i,j,l] = d_l g_ij
    for i in range(n):
        for j in range(i, n):
            for l in range(n):
                d = g[i, j].derivative(l)
                dg[i, j, l] = d
                dg[j, i, l] = d
    gamma = np.empty((n, n, n), dtype=object)
    ginv_zero = [[ginv[k, l].is_zero() for l in range(n)] for k in range(n)]
    zero_low = None
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                acc = None
                for l in range(n):
                    if ginv_zero[k][l]:
                        continue
                    bracket = dg[j, l, i] + dg[i, l, j] - dg[i, j, l]
                    if bracket.is_zero():
                        continue
                    term = ginv[k, l] * bracket
                    acc = term if acc is None else acc + term
                if acc is None:
                    if zero_low is None:
                        sp = jet_space(dg[0, 0, 0].dim, min(dg[0, 0, 0].order,
                                                            ginv[0, 0].order))
                        zero_low = Jet.constant(sp, 0.0)
                    val = zero_low
                else:
                    val = acc * 0.5
                gamma[k, i, j] = val
                gamma[k, j, i] = val
    return gamma


def riemann_jets(gamma: np.ndarray) -> np.ndarray:
    """R^l_kij = d_i Gamma^l_jk - d_j Gamma^l_ik + Gamma^l_im Gamma^m_jk
    - Gamma^l_jm Gamma^m_ik, as jets of one lower order than gamma."""
    n = gamma.shape[0]
    sp_low = jet_space(gamma[0, 0, 0].dim, gamma[0, 0, 0].order - 1)
    zero = Jet.constant(sp_low, 0.0)
    gamma_zero = np.empty((n, n, n), dtype=bool)
    for g_idx in np.ndindex(n, n, n):
        gamma_zero[g_idx] = gamma[g_idx].is_zero()
    out = np.empty((n, n, n, n), dtype=object)
    for l in range(n):
        for k in range(n):
            for i in range(n):
                out[l, k, i, i] = zero
                for j in range(i + 1, n):
                    acc = gamma[l, j, k].derivative(i) - gamma[l, i, k].derivative(j)
                    for m in range(n):
                        if not (gamma_zero[l, i, m] or gamma_zero[m, j, k]):
                            acc = acc + gamma[l, i, m] * gamma[m, j, k]
                        if not (gamma_zero[l, j, m] or gamma_zero[m, i, k]):
                            acc = acc - gamma[l, j, m] * gamma[m, i, k]
                    out[l, k, i, j] = acc
                    out[l, k, j, i] = -acc
    return out


def cov_deriv(t: np.ndarray, gamma: np.ndarray, n_up: int = 1) -> np.ndarray:
    """Covariant derivative of a jet tensor; the new lower slot is appended last.

    Axis layout: the first ``n_up`` axes are contravariant, the rest covariant.
    Entries drop one jet order.
    """
    n = t.shape[0]
    out = np.empty(t.shape + (n,), dtype=object)
    nd = t.ndim
    gamma_zero = np.empty((n, n, n), dtype=bool)
    for g_idx in np.ndindex(n, n, n):
        gamma_zero[g_idx] = gamma[g_idx].is_zero()
    t_zero = {idx: t[idx].is_zero() for idx in np.ndindex(*t.shape)}
    for idx in np.ndindex(*t.shape):
        for m in range(n):
            acc = t[idx].derivative(m)
            for s in range(n_up):
                k = idx[s]
                for a in range(n):
                    jdx = idx[:s] + (a,) + idx[s + 1:]
                    if gamma_zero[k, m, a] or t_zero[jdx]:
                        continue
                    acc = acc + gamma[k, m, a] * t[jdx]
            for s in range(n_up, nd):
                b = idx[s]
                for a in range(n):
                    jdx = idx[:s] + (a,) + idx[s + 1:]
                    if gamma_zero[a, m, b] or t_zero[jdx]:
                        continue
                    acc = acc - gamma[a, m, b] * t[jdx]
            out[idx + (m,)] = acc
    return out


def nabla_riemann_values(riem: np.ndarray, gamma_vals: np.ndarray) -> np.ndarray:
    """(nabla_m R)^l_kij from order>=1 curvature jets and Christoffel values."""
    dR = jet_first_derivs(riem)  # [m, l, k, i, j]
    R0 = jet_values(riem)
    out = dR.copy()
    out += np.einsum("lma,akij->mlkij", gamma_vals, R0)
    out -= np.einsum("amk,laij->mlkij", gamma_vals, R0)
    out -= np.einsum("ami,lkaj->mlkij", gamma_vals, R0)
    out -= np.einsum("amj,lkia->mlkij", gamma_vals, R0)
    return out


# ---------------------------------------------------------------------------
# Per-point geometry
# ---------------------------------------------------------------------------

@dataclass
class GeometryAtPoint:
    """Numeric geometry data at one chart point (indices as in the module doc)."""

    p: tuple
    g: np.ndarray
    g_inv: np.ndarray
    det_g: float
    phi: np.ndarray
    gamma: np.ndarray | None = None
    dgamma: np.ndarray | None = None
    curvature: np.ndarray | None = None
    nabla_R: np.ndarray | None = None
    grad_f: np.ndarray | None = None
    laplace_f: float | None = None


class JetGeometry:
    """Jet-order-`order` geometry of a chart at a point, computed lazily.

    Jet orders decrease with each derivative: metric jets carry ``order``,
    Christoffel jets ``order - 1``, curvature jets ``order - 2``.  The
    covariant derivative of the curvature is produced as plain values and
    needs ``order >= 3``.
    """

    def __init__(self, manifold: ChartManifold, p, order: int):
        manifold.ensure_interior(p)
        if not 1 <= order <= 4:
            raise ValueError(f"geometry order must be 1..4, got {order}")
        self.manifold = manifold
        self.p = tuple(float(x) for x in p)
        self.order = order
        n = manifold.dim
        self.n = n
        params = manifold.params
        g = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(i, n):
                jet = eval_jet(manifold.metric[i][j], self.p, order, params)
                g[i, j] = jet
                g[j, i] = jet
        phi = np.empty((n, n), dtype=object)
        for i in range(n):
            for j in range(n):
                phi[i, j] = eval_jet(manifold.structure[i][j], self.p, order, params)
        self.g_jets = g
        self.phi_jets = phi
        self._cache = {}

    def _get(self, key, build):
        if key not in self._cache:
            self._cache[key] = build()
        return self._cache[key]

    @property
    def ginv_jets(self) -> np.ndarray:
        return self._get("ginv", lambda: invert_jet_matrix(self.g_jets, self.p))

    @property
    def gamma_jets(self) -> np.ndarray:
        return self._get("gamma", lambda: christoffel_jets(self.g_jets, self.ginv_jets))

    @property
    def riemann_jets(self) -> np.ndarray:
        if self.order < 2:
            raise ValueError("curvature needs geometry order >= 2")
        return self._get("riemann", lambda: riemann_jets(self.gamma_jets))

    # -- value views ---------------------------------------------------------

    @property
    def g(self) -> np.ndarray:
        return self._get("g0", lambda: jet_values(self.g_jets))

    @property
    def ginv(self) -> np.ndarray:
        return self._get("ginv0", lambda: jet_values(self.ginv_jets))

    @property
    def det_g(self) -> float:
        return self._get("det", lambda: float(np.linalg.det(self.g)))

    @property
    def phi(self) -> np.ndarray:
        return self._get("phi0", lambda: jet_values(self.phi_jets))

    @property
    def gamma(self) -> np.ndarray:
        return self._get("gamma0", lambda: jet_values(self.gamma_jets))

    @property
    def dgamma(self) -> np.ndarray:
        """d_l Gamma^k_ij with the derivative axis first: [l, k, i, j]."""
        if self.order < 2:
            raise ValueError("dgamma needs geometry order >= 2")
        return self._get("dgamma", lambda: jet_first_derivs(self.gamma_jets))

    @property
    def riemann(self) -> np.ndarray:
        return self._get("riemann0", lambda: jet_values(self.riemann_jets))

    @property
    def nabla_riemann(self) -> np.ndarray:
        if self.order < 3:
            raise ValueError("nabla R needs geometry order >= 3")
        return self._get(
            "nablaR", lambda: nabla_riemann_values(self.riemann_jets, self.gamma))

    # -- scalar and vector fields ---------------------------------------------

    def field_jets(self, components: Sequence[ScalarFieldExpr], order=None) -> np.ndarray:
        order = self.order if order is None else order
        out = np.empty(len(components), dtype=object)
        for i, comp in enumerate(components):
            out[i] = eval_jet(comp, self.p, order, self.manifold.params)
        return out

    def scalar_jet(self, f: ScalarFieldExpr, order=None) -> Jet:
        order = self.order if order is None else order
        return eval_jet(f, self.p, order, self.manifold.params)

    def vector_cov_derivs(self, xi_jets: np.ndarray, depth: int) -> list:
        """[nabla xi, nabla^2 xi, ...] as jet tensors, newest slot last."""
        towers = []
        t = xi_jets
        for _ in range(depth):
            t = cov_deriv(t, self.gamma_jets)
            towers.append(t)
        return towers

    def laplacian_values(self, xi_jets: np.ndarray) -> np.ndarray:
        """Rough Laplacian values: -g^{ij} (nabla^2 xi)^k_{ij}."""
        d2 = self.vector_cov_derivs(xi_jets, 2)[1]
        return -np.einsum("ij,kij->k", self.ginv, jet_values(d2))

    def as_point(self, with_gamma=False, with_curvature=False, with_nabla=False,
                 grad_f=None, laplace_f=None) -> GeometryAtPoint:
        det = self.det_g
        if det == 0.0 or not np.isfinite(det):
            raise SingularMetricError(det, self.p)
        return GeometryAtPoint(
            p=self.p, g=self.g, g_inv=self.ginv, det_g=det, phi=self.phi,
            gamma=self.gamma if with_gamma else None,
            dgamma=self.dgamma if (with_gamma and self.order >= 2) else None,
            curvature=self.riemann if with_curvature else None,
            nabla_R=self.nabla_riemann if with_nabla else None,
            grad_f=grad_f, laplace_f=laplace_f,
        )


# ---------------------------------------------------------------------------
# Public chart operations
# ---------------------------------------------------------------------------

def christoffel(manifold: ChartManifold, p) -> GeometryAtPoint:
    """Levi-Civita connection coefficients at ``p`` (plus metric data)."""
    return JetGeometry(manifold, p, order=2).as_point(with_gamma=True)


def curvature(manifold: ChartManifold, p) -> GeometryAtPoint:
    """Riemann tensor R^l_kij at ``p`` (gamma and dgamma included)."""
    return JetGeometry(manifold, p, order=2).as_point(with_gamma=True, with_curvature=True)


def curvature_cov_deriv(manifold: ChartManifold, p) -> GeometryAtPoint:
    """(nabla_m R)^l_kij at ``p`` (everything below it included)."""
    return JetGeometry(manifold, p, order=3).as_point(
        with_gamma=True, with_curvature=True, with_nabla=True)


def covariant_derivs_vector(manifold: ChartManifold, xi, p, depth: int) -> list:
    """Iterated covariant derivatives of a vector field, as value arrays.

    Returns ``[nabla xi, ..., nabla^depth xi]`` with layout ``[k, i1, ..., id]``
    (component index first, derivative slots in application order).
    """
    if not 1 <= depth <= 4:
        raise ValueError(f"depth must be 1..4, got {depth}")
    components = getattr(xi, "components", xi)
    jg = JetGeometry(manifold, p, order=depth)
    xi_jets = jg.field_jets(components)
    return [jet_values(t) for t in jg.vector_cov_derivs(xi_jets, depth)]


def grad_and_laplace(manifold: ChartManifold, f: ScalarFieldExpr, p):
    """Gradient vector g^{ij} d_j f and the Laplacian of ``f`` at ``p``.

    The Laplacian sign is the one that makes the rough-Laplacian product rule
    hold as written; see :func:`laplacian_sign`.
    """
    jg = JetGeometry(manifold, p, order=2)
    fj = jg.scalar_jet(f)
    df = np.asarray([fj.derivative(i).value for i in range(jg.n)])
    d2f = np.empty((jg.n, jg.n))
    for i in range(jg.n):
        di = fj.derivative(i)
        for j in range(jg.n):
            d2f[i, j] = di.derivative(j).value
    hess = d2f - np.einsum("kij,k->ij", jg.gamma, df)
    grad = jg.ginv @ df
    lap = laplacian_sign() * float(np.einsum("ij,ij->", jg.ginv, hess))
    return grad, lap


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def sup_norm(w) -> float:
    w = np.asarray(w, dtype=float)
    return float(np.max(np.abs(w))) if w.size else 0.0


def metric_norm(g: np.ndarray, w: np.ndarray) -> float:
    """sqrt(|g(w, w)|); indefinite metrics make the sign ambiguous, so the
    absolute value is used (callers needing sign information should evaluate
    g(w, w) directly)."""
    return float(np.sqrt(abs(w @ g @ w)))


# ---------------------------------------------------------------------------
# Laplacian sign convention
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1)
def laplacian_sign() -> float:
    """Sign s in  Delta f := s * Tr_g Hess f,  fixed empirically.

    The product rule  lap(f xi) = f lap(xi) - (Delta f) xi - 2 nabla_{grad f} xi
    for the rough Laplacian is an executable convention anchor: only one sign
    of Delta satisfies it.  It is resolved once on the polar-plane chart and
    cached; reports quote the resolved sign.
    """
    M = make_manifold(
        "polar-sign-check", ("r", "theta"), ((0.3, 3.0), (0.1, 1.4)),
        [["1", "0"], ["0", "r^2"]],
        [["sin(2*theta)", "r*cos(2*theta)"], ["cos(2*theta)/r", "-sin(2*theta)"]],
    )
    p = (2.0, 0.3)
    f = parse_expr("r", M.coords)
    xi = (parse_expr("1", M.coords), parse_expr("0", M.coords))
    jg = JetGeometry(M, p, order=3)
    xi_jets = jg.field_jets(xi)
    fxi_jets = jg.field_jets(tuple(f * c for c in xi))
    fj = jg.scalar_jet(f)

    lap_fxi = jg.laplacian_values(fxi_jets)
    lap_xi = jg.laplacian_values(xi_jets)
    d1 = jet_values(jg.vector_cov_derivs(xi_jets, 1)[0])
    df = np.asarray([fj.derivative(i).value for i in range(jg.n)])
    d2f = np.empty((jg.n, jg.n))
    for i in range(jg.n):
        di = fj.derivative(i)
        for j in range(jg.n):
            d2f[i, j] = di.derivative(j).value
    hess = d2f - np.einsum("kij,k->ij", jg.gamma, df)
    tr_hess = float(np.einsum("ij,ij->", jg.ginv, hess))
    grad = jg.ginv @ df
    xi0 = jet_values(xi_jets)
    nabla_grad_xi = d1 @ grad

    best_sign, best_res = 0.0, np.inf
    for s in (1.0, -1.0):
        rhs = fj.value * lap_xi - s * tr_hess * xi0 - 2.0 * nabla_grad_xi
        res = sup_norm(lap_fxi - rhs)
        if res < best_res:
            best_sign, best_res = s, res
    if best_res > 1e-9:
        raise AssertionError(
            f"no Laplacian sign satisfies the product rule (residual {best_res})")
    return best_sign


def laplacian_sign_label() -> str:
    return "+tr_g(hess)" if laplacian_sign() > 0 else "-tr_g(hess)"


# ---------------------------------------------------------------------------
# Structure validation
# ---------------------------------------------------------------------------

@dataclass
class AxiomResult:
    max_residual: float
    passed: bool
    worst_point: tuple


@dataclass
class StructureReport:
    manifold: str
    tol: float
    n_points: int
    axioms: dict
    all_passed: bool
    det_g_min_abs: float

    def to_dict(self) -> dict:
        return {
            "manifold": self.manifold,
            "tol": self.tol,
            "n_points": self.n_points,
            "det_g_min_abs": self.det_g_min_abs,
            "all_passed": self.all_passed,
            "axioms": {
                name: {
                    "max_residual": r.max_residual,
                    "passed": r.passed,
                    "worst_point": list(r.worst_point),
                }
                for name, r in self.axioms.items()
            },
        }


_AXIOM_NAMES = (
    "phi_squared_identity",     # phi^2 = I
    "norden_purity",            # g phi symmetric
    "phi_parallel",             # nabla phi = 0
    "phi_traceless",            # tr phi = 0 (equal eigenbundle ranks, pointwise)
    "metric_compatibility",     # nabla g = 0
    "curvature_purity_swap",    # R(phi X, Y) = R(X, phi Y)
    "curvature_purity_commute", # R(phi X, Y) = phi R(X, Y)
)


def validate_structure(manifold: ChartManifold, points, tol: float = 1e-10) -> StructureReport:
    """Check the para-Kaehler-Norden axioms at every sample point.

    Report-only: each axiom row carries its max residual over the samples, the
    worst point, and a pass/fail flag at ``tol``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    worst = {name: (0.0, tuple(points[0])) for name in _AXIOM_NAMES}
    det_min = np.inf
    n = manifold.dim
    eye = np.eye(n)
    for p in points:
        jg = JetGeometry(manifold, p, order=2)
        g0, ginv0, phi0 = jg.g, jg.ginv, jg.phi
        gamma0 = jg.gamma
        det_min = min(det_min, abs(jg.det_g))
        R0 = jg.riemann

        res = {}
        res["phi_squared_identity"] = sup_norm(phi0 @ phi0 - eye)
        gphi = g0 @ phi0
        res["norden_purity"] = sup_norm(gphi - gphi.T)
        dphi = jet_first_derivs(jg.phi_jets)  # [i, k, j] = d_i phi^k_j
        nabla_phi = (dphi
                     + np.einsum("kim,mj->ikj", gamma0, phi0)
                     - np.einsum("mij,km->ikj", gamma0, phi0))
        res["phi_parallel"] = sup_norm(nabla_phi)
        res["phi_traceless"] = abs(float(np.trace(phi0)))
        dg = jet_first_derivs(jg.g_jets)  # [k, i, j] = d_k g_ij
        nabla_g = (dg
                   - np.einsum("mki,mj->kij", gamma0, g0)
                   - np.einsum("mkj,im->kij", gamma0, g0))
        res["metric_compatibility"] = sup_norm(nabla_g)
        r_phi_x = np.einsum("ai,lkaj->lkij", phi0, R0)   # R(phi d_i, d_j) d_k
        r_x_phi = np.einsum("aj,lkia->lkij", phi0, R0)   # R(d_i, phi d_j) d_k
        phi_r = np.einsum("la,akij->lkij", phi0, R0)      # phi R(d_i, d_j) d_k
        res["curvature_purity_swap"] = sup_norm(r_phi_x - r_x_phi)
        res["curvature_purity_commute"] = sup_norm(r_phi_x - phi_r)

        for name, val in res.items():
            if val > worst[name][0]:
                worst[name] = (val, tuple(float(x) for x in p))

    axioms = {
        name: AxiomResult(max_residual=v, passed=bool(v < tol), worst_point=pt)
        for name, (v, pt) in worst.items()
    }
    return StructureReport(
        manifold=manifold.name, tol=tol, n_points=len(points), axioms=axioms,
        all_passed=all(a.passed for a in axioms.values()),
        det_g_min_abs=float(det_min),
    )


# ---------------------------------------------------------------------------
# Orthonormal frames
# ---------------------------------------------------------------------------

class OrthonormalFrame:
    """A frame e_a = E^i_a d_i given by expression entries E[i][a].

    Conversion to and from frame components is exact linear algebra at each
    point; it exists for reporting and for comparing against closed forms
    stated in frame components, never for taking traces.
    """

    def __init__(self, manifold: ChartManifold, columns):
        self.manifold = manifold
        n = manifold.dim
        self.matrix_exprs = tuple(
            tuple(parse_expr(str(columns[i][a]), manifold.coords, tuple(manifold.params))
                  for a in range(n))
            for i in range(n)
        )

    def matrix(self, p) -> np.ndarray:
        from .jetcalc import eval_value
        n = self.manifold.dim
        out = np.empty((n, n))
        for i in range(n):
            for a in range(n):
                out[i, a] = eval_value(self.matrix_exprs[i][a], p, self.manifold.params)
        return out

    def to_frame(self, p, w) -> np.ndarray:
        return np.linalg.solve(self.matrix(p), np.asarray(w, dtype=float))

    def from_frame(self, p, w_frame) -> np.ndarray:
        return self.matrix(p) @ np.asarray(w_frame, dtype=float)

    def curvature_in_frame(self, p, riemann: np.ndarray) -> np.ndarray:
        """R(e_a, e_b)e_c expanded in the frame: out[d, c, a, b]."""
        e = self.matrix(p)
        einv = np.linalg.inv(e)
        return np.einsum("dl,lkij,kc,ia,jb->dcab", einv, riemann, e, e, e)
