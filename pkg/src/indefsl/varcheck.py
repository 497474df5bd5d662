"""Volume and second variation of volume for indefinite minimal submanifolds.

Variations are ``W = f xi`` on a chart cube of half-width ``delta`` with
``f = c [1 + cos((2q+1) pi (u^d - u^d_0) / delta)] rho((u' - u'_0) / delta)``,
oscillating along chart axis ``d``; ``xi`` is a unit normal field of fixed
causal type.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConvergenceError, InvalidInputError
from .geometry import Immersion, normal_lorentz_frame, normal_projector

MINIMAL_TOL = 1e-3
DEFAULT_TRANSVERSE_NODES = 129
OSC_NODES_PER_PERIOD = 8


def bump(s) -> np.ndarray:
    """``(1 - |s|^2)^3`` clamped to 0 outside the unit ball (last axis of s)."""
    s = np.asarray(s, dtype=float)
    r2 = np.sum(s * s, axis=-1)
    return np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** 3, 0.0)


def bump_grad(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    r2 = np.sum(s * s, axis=-1, keepdims=True)
    return np.where(r2 < 1.0, -6.0 * s * (1.0 - np.minimum(r2, 1.0)) ** 2, 0.0)


@dataclass(frozen=True)
class Region:
    """Chart cube ``center +- delta`` in every coordinate."""

    center: tuple
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise InvalidInputError("delta must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @property
    def n(self) -> int:
        return len(self.center)


def simpson_weights(nodes: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    if nodes < 3 or nodes % 2 == 0:
        raise InvalidInputError("Simpson needs an odd node count >= 3")
    x = np.linspace(lo, hi, nodes)
    h = (hi - lo) / (nodes - 1)
    w = np.ones(nodes)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return x, w * h / 3.0


def _odd(n: int) -> int:
    return n if n % 2 else n + 1


@dataclass
class VariationField:
    """Oscillation along chart axis ``direction`` with integer ``q``.

    ``normal`` selects the causal type of the unit normal xi
    (``"spacelike"`` or ``"timelike"``); ``amplitude`` scales f.
    """

    direction: int
    delta: float
    q: int
    normal: str = "spacelike"
    amplitude: float = 1.0
    rho: Callable = bump
    rho_grad: Callable = bump_grad

    def __post_init__(self):
        if self.normal not in ("spacelike", "timelike"):
            raise InvalidInputError("normal must be 'spacelike' or 'timelike'")
        if self.q < 0:
            raise InvalidInputError("q must be a non-negative integer")
        if self.delta <= 0:
            raise InvalidInputError("delta must be positive")

    @property
    def wavenumber(self) -> float:
        return (2 * self.q + 1) * np.pi / self.delta

    def values(self, U, center):
        """``(f, grad f)`` at chart points U (last axis = coordinates)."""
        U = np.asarray(U, dtype=float)
        d = self.direction
        rel = U - np.asarray(center, float)
        K = self.wavenumber
        others = [i for i in range(U.shape[-1]) if i != d]
        s = rel[..., others] / self.delta
        osc = 1.0 + np.cos(K * rel[..., d])
        dosc = -K * np.sin(K * rel[..., d])
        r = self.rho(s)
        f = self.amplitude * osc * r
        grad = np.empty(U.shape)
        grad[..., d] = self.amplitude * dosc * r
        if others:
            grad[..., others] = self.amplitude * osc[..., None] * self.rho_grad(s) / self.delta
        return f, grad


@dataclass
class GeometryCache:
    """Per-node geometric data on the tensor Simpson grid of a region."""

    region: Region
    direction: int
    normal: str
    points: np.ndarray  # grid shape + (n,)
    weights: np.ndarray  # grid shape
    dv: np.ndarray
    ginv: np.ndarray  # grid shape + (n, n)
    xi_norm: np.ndarray  # <xi, xi> = +-1
    b: np.ndarray  # <xi, P d_j xi>, grid shape + (n,)
    c: np.ndarray  # <P d_i xi, P d_j xi>, grid shape + (n, n)
    hh: np.ndarray  # <h o h^t(xi), xi>
    H: np.ndarray  # g^{ij} h_ij, grid shape + (N,)
    index: int

    @property
    def max_mean_curvature(self) -> float:
        return float(np.max(np.linalg.norm(self.H, axis=-1)))

    @property
    def min_dv(self) -> float:
        return float(np.min(self.dv))

    def second_variation(self, W: VariationField) -> float:
        if W.direction != self.direction or W.normal != self.normal:
            raise InvalidInputError("variation field does not match the cached geometry")
        f, df = W.values(self.points, self.region.center)
        e = self.xi_norm
        term = (e * np.einsum("...i,...ij,...j->...", df, self.ginv, df)
                + 2.0 * f * np.einsum("...i,...ij,...j->...", df, self.ginv, self.b)
                + f * f * np.einsum("...ij,...ij->...", self.ginv, self.c)
                - f * f * self.hh)
        return float(np.sum(self.weights * term * self.dv))


def _index_of(g) -> int:
    return int(np.sum(np.linalg.eigvalsh(0.5 * (g + g.T)) < 0))


def _grid(region: Region, direction: int, osc_nodes: int, transverse_nodes: int):
    axes, ws = [], []
    for i, c in enumerate(region.center):
        k = osc_nodes if i == direction else transverse_nodes
        x, w = simpson_weights(_odd(k), c - region.delta, c + region.delta)
        axes.append(x)
        ws.append(w)
    P = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    W = ws[0]
    for w in ws[1:]:
        W = np.multiply.outer(W, w)
    return axes, P, W


def geometry_cache(imm: Immersion, region: Region, direction: int, normal: str = "spacelike",
                   q_max: int = 25, transverse_nodes: int = DEFAULT_TRANSVERSE_NODES
                   ) -> GeometryCache:
    """Evaluates metric, normal field and second fundamental form on the grid.

    The grid has ``8 (2 q_max + 1) + 1`` nodes along ``direction`` so every
    ``q <= q_max`` is resolved. Normal derivatives of xi are taken by
    differences along the grid (they only enter multiplied by f, which
    vanishes on the cube faces).
    """
    n = imm.n
    if region.n != n:
        raise InvalidInputError("region dimension differs from the chart dimension")
    if not 0 <= direction < n:
        raise InvalidInputError("direction out of range")
    if normal not in ("spacelike", "timelike"):
        raise InvalidInputError("normal must be 'spacelike' or 'timelike'")
    G = imm.G
    N = imm.N
    c0 = np.array(region.center)
    X0 = imm.jac(c0)
    g0 = X0.T @ G @ X0
    k = _index_of(g0)
    nf, ns = normal_lorentz_frame(X0, G)
    want = 1.0 if normal == "spacelike" else -1.0
    cols = np.where(ns == want)[0]
    if cols.size == 0:
        raise InvalidInputError(f"no {normal} normal direction at the region center")
    ref = nf[:, cols[0]]
    axes, P, Wt = _grid(region, direction, OSC_NODES_PER_PERIOD * (2 * q_max + 1) + 1,
                        transverse_nodes)
    shape = P.shape[:-1]
    flat = P.reshape(-1, n)
    X = np.stack([imm.jac(p) for p in flat])  # (M, N, n)
    D2 = np.stack([imm.hess(p) for p in flat])  # (M, N, n, n)
    g = np.einsum("mai,ab,mbj->mij", X, G, X)
    g = 0.5 * (g + np.swapaxes(g, 1, 2))
    det = (-1.0) ** k * np.linalg.det(g)
    neg = np.sum(np.linalg.eigvalsh(g) < 0, axis=1)
    bad = np.where((det <= 0) | (neg != k))[0]
    if bad.size:
        raise InvalidInputError(f"induced metric changes index inside the region (at {flat[bad[0]]})")
    gi = np.linalg.inv(g)
    # P_N = I - X g^{-1} X^T G
    PN = np.eye(N) - np.einsum("mai,mij,mbj,bc->mac", X, gi, X, G)
    v = PN @ ref
    nv = np.einsum("ma,a,ma->m", v, imm.ambient_signs, v)
    if np.any(nv * want <= 0):
        raise InvalidInputError("normal field changes causal type inside the region")
    v = v / np.sqrt(np.abs(nv))[:, None]
    h = np.einsum("mab,mbij->maij", PN, D2)
    hx = np.einsum("maij,a,ma->mij", h, imm.ambient_signs, v)
    hh = np.einsum("mik,mjl,mij,mkl->m", gi, gi, hx, hx)
    H = np.einsum("maij,mij->ma", h, gi)
    dv = np.sqrt(det).reshape(shape)
    ginv = gi.reshape(shape + (n, n))
    xi = v.reshape(shape + (N,))
    PN = PN.reshape(shape + (N, N))
    hh = hh.reshape(shape)
    H = H.reshape(shape + (N,))
    dxi = np.stack(np.gradient(xi, *axes, axis=tuple(range(n)), edge_order=2), axis=-2)
    Pdxi = np.einsum("...ab,...jb->...ja", PN, dxi)  # grid + (n, N)
    Gs = imm.ambient_signs
    b = np.einsum("...a,...ja->...j", xi * Gs, Pdxi)
    c = np.einsum("...ia,...ja->...ij", Pdxi * Gs, Pdxi)
    return GeometryCache(region, direction, normal, P, Wt, dv, ginv, np.full(shape, want), b, c,
                         hh, H, k)


def volume(imm: Immersion, region: Region, nodes: int = 65) -> float:
    """Tensor Simpson quadrature of ``sqrt((-1)^k det g)``."""
    n = imm.n
    if region.n != n:
        raise InvalidInputError("region dimension differs from the chart dimension")
    G = imm.G
    g0 = imm.jac(np.array(region.center))
    k = _index_of(g0.T @ G @ g0)
    _, P, W = _grid(region, 0, nodes, nodes)
    total = np.empty(W.shape)
    for idx in np.ndindex(*W.shape):
        X = imm.jac(P[idx])
        d = (-1.0) ** k * np.linalg.det(X.T @ G @ X)
        if d < 0:
            raise InvalidInputError(f"induced metric changes index at {P[idx]}")
        total[idx] = np.sqrt(d)
    return float(np.sum(W * total))


def _check_minimal(cache: GeometryCache, tol: float):
    hmax = cache.max_mean_curvature
    if hmax >= tol:
        raise InvalidInputError(f"base is not minimal on the region (max |H| = {hmax:.3e})")


def second_variation(imm: Immersion, W: VariationField, region: Region,
                     transverse_nodes: int = DEFAULT_TRANSVERSE_NODES,
                     minimal_tol: float = MINIMAL_TOL, cache: GeometryCache | None = None
                     ) -> float:
    """``int <grad^perp W, grad^perp W> - <h o h^t(W), W> dv`` over the region."""
    if abs(W.delta - region.delta) > 1e-14 * region.delta:
        raise InvalidInputError("variation field and region have different delta")
    if cache is None:
        cache = geometry_cache(imm, region, W.direction, W.normal, q_max=W.q,
                               transverse_nodes=transverse_nodes)
    _check_minimal(cache, minimal_tol)
    return cache.second_variation(W)


def flat_closed_form(q: int, delta: float, direction: int, chart_signs, normal_sign: float = 1.0,
                     amplitude: float = 1.0) -> float:
    """Exact ``<xi,xi> int g^{ij} f_i f_j`` on a 2-dimensional coordinate plane
    with chart metric ``diag(chart_signs)`` and the default bump."""
    s = np.asarray(chart_signs, dtype=float)
    if s.size != 2:
        raise InvalidInputError("closed form implemented for surfaces")
    P = np.polynomial.Polynomial
    rho = P([1, 0, -1]) ** 3
    r2 = (rho * rho).integ()
    r1 = (rho.deriv() ** 2).integ()
    R2 = r2(1.0) - r2(-1.0)
    R1 = r1(1.0) - r1(-1.0)
    K = (2 * q + 1) * np.pi / delta
    t = 1 - direction
    along = K * K * delta * delta * R2  # int (d_d f)^2
    across = 3.0 * R1  # int (d_t f)^2
    return float(amplitude**2 * normal_sign * (s[direction] * along + s[t] * across))


def chart_axes_by_type(cache_or_ginv) -> dict:
    """Chart axes whose covector is spacelike (``g^{dd} > 0``) or timelike
    everywhere on the grid."""
    gi = cache_or_ginv.ginv if isinstance(cache_or_ginv, GeometryCache) else cache_or_ginv
    diag = np.diagonal(gi, axis1=-2, axis2=-1)
    n = diag.shape[-1]
    flat = diag.reshape(-1, n)
    return {"spacelike": [d for d in range(n) if np.all(flat[:, d] > 0)],
            "timelike": [d for d in range(n) if np.all(flat[:, d] < 0)]}


@dataclass
class ProbeResult:
    q_pos: int
    v_pos: float
    q_neg: int
    v_neg: float
    axis_pos: int
    axis_neg: int
    scan_pos: list = field(default_factory=list)  # (q, V'')
    scan_neg: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"q_pos": self.q_pos, "V_pos": self.v_pos, "q_neg": self.q_neg,
                "V_neg": self.v_neg, "axis_pos": self.axis_pos, "axis_neg": self.axis_neg,
                "scan_pos": self.scan_pos, "scan_neg": self.scan_neg}


def _axis_of_type(imm, region, want):
    c0 = np.array(region.center)
    X = imm.jac(c0)
    gi = np.linalg.inv(X.T @ imm.G @ X)
    d = np.diag(gi)
    cand = [i for i in range(imm.n) if (d[i] > 0) == (want == "spacelike")]
    if not cand:
        raise InvalidInputError(f"no {want} chart axis at the region center")
    return max(cand, key=lambda i: abs(d[i]))


def instability_probe(imm: Immersion, region: Region, q_max: int = 20, normal: str = "spacelike",
                      transverse_nodes: int = DEFAULT_TRANSVERSE_NODES,
                      minimal_tol: float = MINIMAL_TOL) -> ProbeResult:
    """Scans q = 1..q_max along a spacelike axis until V'' > 0 and along a
    timelike axis until V'' < 0 (signs reversed for a timelike normal)."""
    X = imm.jac(np.array(region.center))
    k = _index_of(X.T @ imm.G @ X)
    if not 0 < k < imm.n:
        raise InvalidInputError(
            f"induced metric has index {k}; instability needs 0 < index < {imm.n}")
    want_pos = 1.0 if normal == "spacelike" else -1.0
    out = {}
    for kind, target in (("spacelike", want_pos), ("timelike", -want_pos)):
        axis = _axis_of_type(imm, region, kind)
        cache = geometry_cache(imm, region, axis, normal, q_max=q_max,
                               transverse_nodes=transverse_nodes)
        if chart_axes_by_type(cache)[kind].count(axis) == 0:
            raise InvalidInputError(f"chart axis {axis} is not {kind} on the whole region")
        _check_minimal(cache, minimal_tol)
        scan = []
        for q in range(1, q_max + 1):
            v = cache.second_variation(VariationField(axis, region.delta, q, normal))
            scan.append((q, v))
            if v * target > 0:
                break
        else:
            raise ConvergenceError(f"no {kind} witness with q <= {q_max}")
        out[kind] = (axis, scan)
    (ap, sp), (an, sn) = out["spacelike"], out["timelike"]
    if want_pos > 0:
        return ProbeResult(sp[-1][0], sp[-1][1], sn[-1][0], sn[-1][1], ap, an, sp, sn)
    return ProbeResult(sn[-1][0], sn[-1][1], sp[-1][0], sp[-1][1], an, ap, sn, sp)


@dataclass
class GrowthFit:
    slope: float  # coefficient of (2q+1)^2
    intercept: float
    r2: float


def growth_fit(qs: Sequence[int], values: Sequence[float]) -> GrowthFit:
    """Least squares ``V'' ~ a (2q+1)^2 + b``."""
    x = (2 * np.asarray(qs, float) + 1) ** 2
    y = np.asarray(values, float)
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid**2) / ss) if ss > 0 else 1.0
    return GrowthFit(float(coef[0]), float(coef[1]), r2)


def growth_scan(imm: Immersion, region: Region, direction: int, qs: Sequence[int],
                normal: str = "spacelike", transverse_nodes: int = DEFAULT_TRANSVERSE_NODES):
    """``[(q, V''), ...]`` and the (2q+1)^2 fit along one chart axis."""
    cache = geometry_cache(imm, region, direction, normal, q_max=max(qs),
                           transverse_nodes=transverse_nodes)
    _check_minimal(cache, MINIMAL_TOL)
    rows = [(q, cache.second_variation(VariationField(direction, region.delta, q, normal)))
            for q in qs]
    return rows, growth_fit([r[0] for r in rows], [r[1] for r in rows])


def timelike_plane() -> Immersion:
    """Coordinate plane ``(t, x) -> (t, x, 0)`` in ``R_1^3``."""
    return Immersion(2, np.array([-1.0, 1.0, 1.0]), lambda q: np.array([q[0], q[1], 0.0]),
                     lambda q: np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]),
                     lambda q: np.zeros((3, 2, 2)), name="timelike plane")


def spacelike_plane() -> Immersion:
    """Coordinate plane ``(x, y) -> (0, x, y)`` in ``R_1^3`` (Riemannian control)."""
    return Immersion(2, np.array([-1.0, 1.0, 1.0]), lambda q: np.array([0.0, q[0], q[1]]),
                     lambda q: np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]),
                     lambda q: np.zeros((3, 2, 2)), name="spacelike plane")
