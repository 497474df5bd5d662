"""Extrinsic geometry of immersions into flat pseudo-Euclidean space."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateError, InvalidInputError
from .indlinalg import DEGENERACY_TOL, HermitianForm, apply_J, lorentz_basis
from .planes import Frame, dz_phase, is_lagrangian_plane

FD_STEP = 1e-3


@dataclass
class Immersion:
    """Chart map ``R^n -> R^N`` with ambient metric ``diag(ambient_signs)``.

    ``jacobian(p)`` is N x n, ``second(p)`` is N x n x n. Missing maps are
    replaced by central differences with step ``step`` (first derivatives
    of ``f``, second derivatives from differences of the Jacobian).
    """

    n: int
    ambient_signs: np.ndarray
    f: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    second: Callable[[np.ndarray], np.ndarray] | None = None
    step: float = FD_STEP
    name: str = ""

    def __post_init__(self):
        self.ambient_signs = np.asarray(self.ambient_signs, dtype=float)

    @property
    def N(self) -> int:
        return self.ambient_signs.size

    @property
    def G(self) -> np.ndarray:
        return np.diag(self.ambient_signs)

    def point(self, p):
        return np.asarray(self.f(np.asarray(p, float)), dtype=float)

    def jac(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.jacobian is not None:
            return np.asarray(self.jacobian(p), dtype=float)
        h = self.step
        cols = []
        for i in range(self.n):
            e = np.zeros(self.n)
            e[i] = h
            cols.append((self.point(p + e) - self.point(p - e)) / (2 * h))
        return np.stack(cols, axis=1)

    def hess(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if self.second is not None:
            return np.asarray(self.second(p), dtype=float)
        h = self.step
        n = self.n
        out = np.empty((self.N, n, n))
        if self.jacobian is not None:
            for i in range(n):
                e = np.zeros(n)
                e[i] = h
                out[:, :, i] = (self.jac(p + e) - self.jac(p - e)) / (2 * h)
            return 0.5 * (out + out.transpose(0, 2, 1))
        f0 = self.point(p)
        for i in range(n):
            ei = np.zeros(n)
            ei[i] = h
            out[:, i, i] = (self.point(p + ei) - 2 * f0 + self.point(p - ei)) / h**2
            for j in range(i + 1, n):
                ej = np.zeros(n)
                ej[j] = h
                out[:, i, j] = out[:, j, i] = (
                    self.point(p + ei + ej) - self.point(p + ei - ej)
                    - self.point(p - ei + ej) + self.point(p - ei - ej)
                ) / (4 * h * h)
        return out

    def inner(self, v, w):
        return np.sum(self.ambient_signs * v * w, axis=-1)


def graph_immersion(u, k: int, name: str = "graph") -> Immersion:
    """Graph of ``(grad u) I_{k,m}`` in ``C_k^m = R^{2m}``."""
    from .indlinalg import signature_matrix

    m = u.m
    I = signature_matrix(k, m)
    eps = np.diag(I)

    def f(x):
        return np.concatenate([x, eps * u.grad(x)])

    def jac(x):
        return np.vstack([np.eye(m), I @ u.hess(x)])

    def second(x):
        T = u.d3(x)
        out = np.zeros((2 * m, m, m))
        out[m:] = eps[:, None, None] * T
        return out

    return Immersion(m, HermitianForm(k, m).real_signs, f, jac, second, name=name)


def induced_metric(imm: Immersion, p, tol: float = DEGENERACY_TOL) -> np.ndarray:
    X = imm.jac(p)
    return X.T @ imm.G @ X


def is_degenerate_metric(g, tol: float = DEGENERACY_TOL) -> bool:
    lam = np.linalg.eigvalsh(0.5 * (g + g.T))
    return np.min(np.abs(lam)) <= tol * max(1.0, np.max(np.abs(lam)))


@dataclass
class SecondFundamental:
    h: np.ndarray  # N x n x n, normal-valued
    normal_frame: np.ndarray  # N x p, Lorentz basis of the normal space
    normal_signs: np.ndarray
    tangent: np.ndarray  # N x n
    metric: np.ndarray  # n x n

    def shape_operator(self, xi, G) -> np.ndarray:
        """n x n matrix of ``A_xi`` in the chart basis: ``g(A_xi X, Y) = <h(X,Y), xi>``."""
        B = np.einsum("aij,a->ij", self.h, G @ xi)
        return np.linalg.solve(self.metric, B)


def normal_projector(X, G) -> np.ndarray:
    """Projector onto the G-orthogonal complement of span(X)."""
    g = X.T @ G @ X
    PT = X @ np.linalg.solve(g, X.T @ G)
    return np.eye(X.shape[0]) - PT


def normal_lorentz_frame(X, G):
    N = X.shape[0]
    n = X.shape[1]
    # normal space = kernel of X^T G
    _, _, Vt = np.linalg.svd(X.T @ G)
    B = Vt[n:].T
    if B.shape[1] == 0:
        return np.zeros((N, 0)), np.zeros(0)
    P, signs = lorentz_basis(B.T @ G @ B)
    return B @ P, signs


def second_fundamental(imm: Immersion, p) -> SecondFundamental:
    X = imm.jac(p)
    G = imm.G
    g = X.T @ G @ X
    if is_degenerate_metric(g):
        raise DegenerateError("induced metric is degenerate")
    PN = normal_projector(X, G)
    D2 = imm.hess(p)
    h = np.einsum("ab,bij->aij", PN, D2)
    h = 0.5 * (h + h.transpose(0, 2, 1))
    nf, ns = normal_lorentz_frame(X, G)
    return SecondFundamental(h, nf, ns, X, g)


def tangent_lorentz_frame(imm: Immersion, p, rng: np.random.Generator | None = None):
    """Lorentz tangent frame (columns, ambient coords) and its signs.

    With ``rng`` the frame is additionally boosted/rotated by a random
    element of the metric's isometry group (for frame-independence checks).
    """
    X = imm.jac(p)
    g = X.T @ imm.G @ X
    P, signs = lorentz_basis(g)
    if rng is not None:
        P = P @ random_isometry(signs, rng)
    return X @ P, signs


def random_isometry(signs, rng, scale: float = 0.5) -> np.ndarray:
    """``expm(S)`` with ``S^T D + D S = 0`` for ``D = diag(signs)``."""
    from scipy.linalg import expm

    D = np.diag(signs)
    n = len(signs)
    K = rng.normal(scale=scale, size=(n, n))
    K = K - K.T
    return expm(D @ K)


def mean_curvature(imm: Immersion, p, rng: np.random.Generator | None = None) -> np.ndarray:
    """``H = sum_j eps_j h(e_j, e_j)`` over a Lorentz frame (no 1/n factor)."""
    sf = second_fundamental(imm, p)
    X = sf.tangent
    P, signs = lorentz_basis(sf.metric)
    if rng is not None:
        P = P @ random_isometry(signs, rng)
    hP = np.einsum("aij,ik,jk->ak", sf.h, P, P)
    return hP @ signs


def mean_curvature_trace(imm: Immersion, p) -> np.ndarray:
    sf = second_fundamental(imm, p)
    return np.einsum("aij,ij->a", sf.h, np.linalg.inv(sf.metric))


# ---------------------------------------------------------------------------
# phase and Lagrangian identities


@dataclass
class PhaseReport:
    points: list
    phases: list
    max_deviation: float
    theta: float
    verdict: str  # special | theta-special | not-special | degenerate
    excluded: list = field(default_factory=list)

    def to_dict(self):
        return {
            "points": self.points,
            "phases": [[z.real, z.imag] for z in self.phases],
            "max_deviation": self.max_deviation,
            "theta": self.theta,
            "verdict": self.verdict,
            "excluded": self.excluded,
        }


def _form_of(imm: Immersion) -> HermitianForm:
    m = imm.N // 2
    if imm.N != 2 * m or imm.n != m:
        raise InvalidInputError("phase needs an m-dimensional immersion into R^{2m}")
    eps = imm.ambient_signs[:m]
    k = int(np.sum(eps < 0))
    if not np.array_equal(imm.ambient_signs, HermitianForm(k, m).real_signs):
        raise InvalidInputError("ambient metric is not g_(2k,2m) in (x, y) order")
    return HermitianForm(k, m)


def tangent_frame(imm: Immersion, p) -> Frame:
    return Frame(imm.jac(p).T)


def phase_at(imm: Immersion, p) -> complex:
    form = _form_of(imm)
    return complex(dz_phase(tangent_frame(imm, p), form))


def phase_along(imm: Immersion, points: Sequence, const_tol: float = 1e-6,
                axis_tol: float = 1e-6) -> PhaseReport:
    """Phase ``dz(TM)`` at each point (chart orientation) and its spread."""
    form = _form_of(imm)
    pts, phases, excluded = [], [], []
    for p in points:
        p = np.asarray(p, dtype=float)
        fr = tangent_frame(imm, p)
        status = is_lagrangian_plane(fr, form)
        if status != "lagrangian":
            excluded.append({"point": p.tolist(), "reason": status})
            continue
        pts.append(p.tolist())
        phases.append(complex(dz_phase(fr, form)))
    if not phases:
        return PhaseReport([], [], float("nan"), float("nan"), "degenerate", excluded)
    ph = np.array(phases)
    dev = float(np.max(np.abs(ph[:, None] - ph[None, :]))) if ph.size > 1 else 0.0
    mean = ph.mean()
    theta = float(-np.angle(mean)) if abs(mean) > 0 else float("nan")
    if dev > const_tol:
        verdict = "not-special"
    elif abs(mean.imag) < axis_tol:
        verdict = "special"
    else:
        verdict = "theta-special"
    return PhaseReport(pts, phases, dev, theta, verdict, excluded)


def phase_derivative_identity(imm: Immersion, p, direction, h: float = 1e-4):
    """Compares the directional derivative of the phase with ``i <H, JX> phase``.

    Returns ``(lhs, rhs)``; X is the ambient image of ``direction``.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(direction, dtype=float)
    lhs = (phase_at(imm, p + h * a) - phase_at(imm, p - h * a)) / (2 * h)
    X = imm.jac(p) @ a
    H = mean_curvature(imm, p)
    rhs = 1j * imm.inner(H, apply_J(X)) * phase_at(imm, p)
    return lhs, rhs


@dataclass
class IdentityReport:
    max_cubic_asymmetry: float
    max_weingarten_error: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_cubic_asymmetry <= self.tol and self.max_weingarten_error <= self.tol


def lagrangian_identities_check(imm: Immersion, p, rng: np.random.Generator | None = None,
                                trials: int = 20, tol: float = 5e-6) -> IdentityReport:
    """Symmetry of ``<h(X,Y), JZ>`` and ``A_{JY} X = -J h(X,Y)`` on random triples."""
    rng = rng or np.random.default_rng(0)
    sf = second_fundamental(imm, p)
    X = sf.tangent
    G = imm.G
    n = imm.n
    scale = max(1.0, float(np.max(np.abs(sf.h))))
    asym = werr = 0.0
    for _ in range(trials):
        a, b, c = rng.normal(size=(3, n))
        va, vb, vc = X @ a, X @ b, X @ c
        hab = np.einsum("aij,i,j->a", sf.h, a, b)
        hbc = np.einsum("aij,i,j->a", sf.h, b, c)
        hca = np.einsum("aij,i,j->a", sf.h, c, a)
        t1 = imm.inner(hab, apply_J(vc))
        t2 = imm.inner(hbc, apply_J(va))
        t3 = imm.inner(hca, apply_J(vb))
        asym = max(asym, abs(t1 - t2), abs(t2 - t3))
        A = sf.shape_operator(apply_J(vb), G)
        lhs = X @ (A @ a)
        werr = max(werr, float(np.max(np.abs(lhs + apply_J(hab)))))
    return IdentityReport(asym / scale, werr / scale, tol)
