"""Gradient graphs ``x -> (x, (grad u) I_{k,m})`` and their special Lagrangian equation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateError, InvalidInputError
from .indlinalg import complex_det, signature_matrix
from .planes import Frame

NONDEGENERACY_TOL = 1e-8


def _default_step(x):
    return 1e-4 * (1.0 + np.linalg.norm(x))


@dataclass
class PotentialField:
    """Scalar potential on (a domain of) R^m.

    Missing derivative maps are filled in by central differences. ``third``
    returns the m x m x m array of third derivatives; it is used only for
    second derivatives of the graph immersion.
    """

    m: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray] | None = None
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    third: Callable[[np.ndarray], np.ndarray] | None = None
    step: float | None = None

    @property
    def mode(self) -> str:
        return "analytic" if self.hessian is not None else "finite-difference"

    def _h(self, x):
        return self.step if self.step is not None else _default_step(x)

    def grad(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.gradient is not None:
            return np.asarray(self.gradient(x), dtype=float)
        h = self._h(x)
        g = np.empty(self.m)
        for i in range(self.m):
            e = np.zeros(self.m)
            e[i] = h
            g[i] = (self.value(x + e) - self.value(x - e)) / (2 * h)
        return g

    def hess(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hessian is not None:
            return np.asarray(self.hessian(x), dtype=float)
        h = self._h(x)
        m = self.m
        H = np.empty((m, m))
        if self.gradient is not None:
            for i in range(m):
                e = np.zeros(m)
                e[i] = h
                H[:, i] = (self.grad(x + e) - self.grad(x - e)) / (2 * h)
            return 0.5 * (H + H.T)
        u0 = self.value(x)
        for i in range(m):
            ei = np.zeros(m)
            ei[i] = h
            H[i, i] = (self.value(x + ei) - 2 * u0 + self.value(x - ei)) / h**2
            for j in range(i + 1, m):
                ej = np.zeros(m)
                ej[j] = h
                H[i, j] = H[j, i] = (
                    self.value(x + ei + ej) - self.value(x + ei - ej)
                    - self.value(x - ei + ej) + self.value(x - ei - ej)
                ) / (4 * h * h)
        return H

    def d3(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.third is not None:
            return np.asarray(self.third(x), dtype=float)
        h = self._h(x) * 10
        T = np.empty((self.m,) * 3)
        for i in range(self.m):
            e = np.zeros(self.m)
            e[i] = h
            T[i] = (self.hess(x + e) - self.hess(x - e)) / (2 * h)
        return T


def quadratic_potential(Q) -> PotentialField:
    """``u = x^T Q x / 2`` with analytic derivatives."""
    Q = np.asarray(Q, dtype=float)
    Q = 0.5 * (Q + Q.T)
    m = Q.shape[0]
    return PotentialField(
        m,
        value=lambda x: 0.5 * x @ Q @ x,
        gradient=lambda x: Q @ x,
        hessian=lambda x: Q.copy(),
        third=lambda x: np.zeros((m, m, m)),
    )


def zero_potential(m: int) -> PotentialField:
    return quadratic_potential(np.zeros((m, m)))


def sl_residual(u: PotentialField, k: int, x):
    """``(Im det(I + i Hess(u) I_{k,m}), det)`` at x."""
    H = u.hess(x)
    I = signature_matrix(k, u.m)
    det = complex(complex_det(np.eye(u.m) + 1j * H @ I))
    return det.imag, det


def is_nondegenerate(det: complex, tol: float = NONDEGENERACY_TOL) -> bool:
    return abs(det) > tol


def graph_frame(u: PotentialField, k: int, x, sym_tol: float = 1e-9) -> Frame:
    """Tangent frame ``(e_j, df/dx_j)`` of the graph of ``f = (grad u) I_{k,m}``."""
    H = u.hess(x)
    I = signature_matrix(k, u.m)
    Df = I @ H  # (df_i/dx_j)
    S = Df @ I
    if np.max(np.abs(S - S.T)) > sym_tol * max(1.0, np.max(np.abs(S))):
        raise InvalidInputError("(df/dx) I_{k,m} is not symmetric; f is not a gradient map")
    return Frame(np.hstack([np.eye(u.m), Df.T]))


def graph_point(u: PotentialField, k: int, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.concatenate([x, signature_matrix(k, u.m) @ u.grad(x)])


# ---------------------------------------------------------------------------
# m = 2 wave family


@dataclass
class WavePair:
    """``F`` and ``G`` with derivatives: ``F[d](s)`` is the d-th derivative, d = 0..3."""

    F: tuple
    G: tuple

    @classmethod
    def from_polynomials(cls, pF, pG) -> "WavePair":
        """From numpy Polynomial objects (or coefficient lists, low degree first)."""
        P = np.polynomial.Polynomial
        pF, pG = P(pF), P(pG)
        return cls(tuple(pF.deriv(d) for d in range(4)), tuple(pG.deriv(d) for d in range(4)))

    @classmethod
    def from_splines(cls, sF, sG) -> "WavePair":
        """From scipy CubicSpline (or any object with ``.derivative(nu)``)."""
        return cls((sF,) + tuple(sF.derivative(d) for d in (1, 2, 3)),
                   (sG,) + tuple(sG.derivative(d) for d in (1, 2, 3)))

    def validity(self, x) -> float:
        """``4 F''(x1+x2) G''(x1-x2) + 1``; the graph is nondegenerate where this is nonzero."""
        x = np.asarray(x, dtype=float)
        s, t = x[..., 0] + x[..., 1], x[..., 0] - x[..., 1]
        return 4 * self.F[2](s) * self.G[2](t) + 1


def wave_potential(pair: WavePair) -> PotentialField:
    """``u = F(x1 + x2) + G(x1 - x2)``; solves ``u_11 = u_22`` identically."""
    F, G = pair.F, pair.G

    def value(x):
        return float(F[0](x[0] + x[1]) + G[0](x[0] - x[1]))

    def gradient(x):
        a, b = F[1](x[0] + x[1]), G[1](x[0] - x[1])
        return np.array([a + b, a - b], dtype=float)

    def hessian(x):
        a, b = F[2](x[0] + x[1]), G[2](x[0] - x[1])
        return np.array([[a + b, a - b], [a - b, a + b]], dtype=float)

    def third(x):
        a, b = float(F[3](x[0] + x[1])), float(G[3](x[0] - x[1]))
        T = np.empty((2, 2, 2))
        for i in range(2):
            for j in range(2):
                for l in range(2):
                    n2 = (i == 1) + (j == 1) + (l == 1)
                    T[i, j, l] = a + (-1) ** n2 * b
        return T

    return PotentialField(2, value, gradient, hessian, third)


def random_wave_pair(rng: np.random.Generator, knots: int = 8, bound: float = 0.2,
                     span: float = 6.0) -> WavePair:
    """Cubic-spline pair with ``|F''| |G''| < bound`` on ``[-span, span]``.

    The second derivatives are scaled after construction, so the bound
    holds for the piecewise-linear F'' (its extrema are at the knots).
    """
    from scipy.interpolate import CubicSpline

    s = np.linspace(-span, span, knots)
    sF = CubicSpline(s, rng.normal(size=knots), bc_type="natural", extrapolate=True)
    sG = CubicSpline(s, rng.normal(size=knots), bc_type="natural", extrapolate=True)
    fmax = np.max(np.abs(sF.derivative(2)(s)))
    gmax = np.max(np.abs(sG.derivative(2)(s)))
    c = np.sqrt(0.9 * bound / max(fmax * gmax, 1e-300))
    sF = CubicSpline(s, sF(s) * c, bc_type="natural")
    sG = CubicSpline(s, sG(s) * c, bc_type="natural")
    return WavePair.from_splines(sF, sG)


def induced_graph_metric(u: PotentialField, k: int, x) -> np.ndarray:
    """Gram matrix of the graph tangent vectors under ``g_{(2k,2m)}``."""
    from .indlinalg import HermitianForm

    return graph_frame(u, k, x).gram(HermitianForm(k, u.m))


def conformal_factor(u: PotentialField, x, rtol: float = 1e-9):
    """``(lambda, offdiag)`` with induced metric ``lambda (-dx1^2 + dx2^2)``.

    ``lambda = 1 - u_12^2 + u_22^2``; ``offdiag = -u_12 u_11 + u_12 u_22``.
    """
    if u.m != 2:
        raise InvalidInputError("conformal_factor needs m = 2")
    H = u.hess(x)
    if abs(H[0, 0] - H[1, 1]) > rtol * max(1.0, np.max(np.abs(H))):
        raise InvalidInputError("u does not satisfy u_11 = u_22")
    lam = 1.0 - H[0, 1] ** 2 + H[1, 1] ** 2
    off = -H[0, 1] * H[0, 0] + H[0, 1] * H[1, 1]
    return lam, off


def linearization(u: PotentialField, k: int, x, tol: float = NONDEGENERACY_TOL,
                  diag_check_tol: float = 1e-9) -> np.ndarray:
    """Coefficient matrix ``(-1)^k Re adj(A)`` with ``A = I_{k,m} + i Hess(u)``.

    When Hess(u) is diagonal and u solves the equation at x, the result is
    compared with ``(-1)^k det(A) diag(eps_j / (1 + lam_j^2))``.
    """
    m = u.m
    H = u.hess(x)
    I = signature_matrix(k, m)
    A = I + 1j * H
    det = complex(complex_det(A))
    if abs(det) <= tol:
        raise DegenerateError("I_{k,m} + i Hess(u) is singular")
    adj = det * np.linalg.inv(A)
    a = (-1) ** k * adj.real
    a = 0.5 * (a + a.T)
    if np.allclose(H, np.diag(np.diag(H)), atol=0) and abs(det.imag) < diag_check_tol:
        lam = np.diag(H)
        ref = (-1) ** k * det.real * np.diag(np.diag(I) / (1 + lam**2))
        if np.max(np.abs(ref - a)) > diag_check_tol * max(1.0, abs(det)):
            raise AssertionError("cofactor and diagonal forms of the linearization disagree")
    return a
