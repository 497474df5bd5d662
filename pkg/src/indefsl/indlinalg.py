"""Pseudo-Euclidean and pseudo-Hermitian linear algebra.

Coordinates on R^{2m} = C^m are ordered ``(x_1..x_m, y_1..y_m)`` with
``z_j = x_j + i y_j``. The complex structure acts by ``J(x, y) = (-y, x)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateError, InvalidInputError

DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class SignatureMetric:
    """Flat metric ``-dx_1^2 - ... - dx_n^2 + dx_{n+1}^2 + ... + dx_N^2``."""

    index: int
    dimension: int

    def __post_init__(self):
        if self.dimension < 1 or not 0 <= self.index <= self.dimension:
            raise InvalidInputError(
                f"need 0 <= index <= dimension, got ({self.index}, {self.dimension})"
            )

    @property
    def signs(self) -> np.ndarray:
        s = np.ones(self.dimension)
        s[: self.index] = -1.0
        return s

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.signs)

    def __call__(self, v, w):
        return metric_eval(self, v, w)


def signature_matrix(k: int, m: int) -> np.ndarray:
    """``I_{k,m} = diag(-1,..,-1, 1,..,1)`` with k negative entries."""
    return SignatureMetric(k, m).matrix


def metric_eval(metric: SignatureMetric, v, w) -> float:
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if v.shape[-1] != metric.dimension or w.shape[-1] != metric.dimension:
        raise InvalidInputError(
            f"vectors of length {v.shape[-1]}, {w.shape[-1]} for metric of dimension "
            f"{metric.dimension}"
        )
    return np.sum(metric.signs * v * w, axis=-1)


@dataclass(frozen=True)
class HermitianForm:
    """``h_{(k,m)} = -sum_{j<=k} dz_j dzbar_j + sum_{j>k} dz_j dzbar_j`` on C^m.

    ``h = g - i*omega`` where ``g`` is the real metric of index 2k on R^{2m}
    and ``omega`` the associated symplectic form.
    """

    index: int
    dimension: int

    def __post_init__(self):
        if self.dimension < 1 or not 0 <= self.index <= self.dimension:
            raise InvalidInputError(
                f"need 0 <= k <= m, got ({self.index}, {self.dimension})"
            )

    @property
    def eps(self) -> np.ndarray:
        return SignatureMetric(self.index, self.dimension).signs

    @property
    def real_signs(self) -> np.ndarray:
        return np.concatenate([self.eps, self.eps])

    @property
    def g_matrix(self) -> np.ndarray:
        return np.diag(self.real_signs)

    @property
    def J(self) -> np.ndarray:
        return complex_structure(self.dimension)

    @property
    def omega_matrix(self) -> np.ndarray:
        # omega(v, w) = g(Jv, w) = v^T J^T G w
        return self.J.T @ self.g_matrix

    def g(self, v, w):
        v, w = self._check(v), self._check(w)
        return np.sum(self.real_signs * v * w, axis=-1)

    def omega(self, v, w):
        return omega_eval(self, v, w)

    def hermitian(self, z, w) -> complex:
        """``h(z, w) = sum_j eps_j z_j conj(w_j)`` for complex m-vectors."""
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        return np.sum(self.eps * z * np.conj(w), axis=-1)

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape[-1] != 2 * self.dimension:
            raise InvalidInputError(
                f"expected real vectors of length {2 * self.dimension}, got {v.shape[-1]}"
            )
        return v


def complex_structure(m: int) -> np.ndarray:
    """Real 2m x 2m matrix of J: x_j -> y_j, y_j -> -x_j."""
    J = np.zeros((2 * m, 2 * m))
    J[m:, :m] = np.eye(m)
    J[:m, m:] = -np.eye(m)
    return J


def apply_J(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    m = v.shape[-1] // 2
    return np.concatenate([-v[..., m:], v[..., :m]], axis=-1)


def omega_eval(form: HermitianForm, v, w) -> float:
    """``omega_{(k,m)}(v, w) = sum_j eps_j (v_xj w_yj - v_yj w_xj)``."""
    v, w = form._check(v), form._check(w)
    m = form.dimension
    eps = form.eps
    return np.sum(
        eps * (v[..., :m] * w[..., m:] - v[..., m:] * w[..., :m]), axis=-1
    )


def to_complex(v) -> np.ndarray:
    """Real (x, y) vector(s) to complex z = x + iy."""
    v = np.asarray(v, dtype=float)
    m = v.shape[-1] // 2
    return v[..., :m] + 1j * v[..., m:]


def to_real(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.concatenate([z.real, z.imag], axis=-1)


def complex_det(M) -> complex:
    """Determinant via LU with partial pivoting (LAPACK getrf)."""
    M = np.asarray(M, dtype=complex)
    if M.ndim < 2 or M.shape[-1] != M.shape[-2]:
        raise InvalidInputError(f"square matrix required, got shape {M.shape}")
    return np.linalg.det(M)


def signature_of(S, tol: float = DEGENERACY_TOL, sym_tol: float = 1e-8):
    """Counts ``(negatives, zeros, positives)`` of a symmetric real matrix.

    Eigenvalues with ``|lam| <= tol * max(1, ||S||)`` count as zero.
    """
    S = np.asarray(S, dtype=float)
    scale = max(1.0, np.linalg.norm(S))
    if np.linalg.norm(S - S.T) > sym_tol * scale:
        raise InvalidInputError("matrix is not symmetric")
    lam = np.linalg.eigvalsh(0.5 * (S + S.T))
    thr = tol * scale
    return (int(np.sum(lam < -thr)), int(np.sum(np.abs(lam) <= thr)), int(np.sum(lam > thr)))


def lorentz_basis(gram, tol: float = DEGENERACY_TOL):
    """Change of basis P with ``P^T gram P = diag(signs)``, negatives first.

    Returns ``(P, signs)``. Raises DegenerateError if gram is singular.
    """
    gram = np.asarray(gram, dtype=float)
    gram = 0.5 * (gram + gram.T)
    lam, Q = np.linalg.eigh(gram)
    scale = max(1.0, np.max(np.abs(lam)))
    if np.min(np.abs(lam)) <= tol * scale:
        raise DegenerateError(f"degenerate metric, eigenvalues {lam}")
    order = np.argsort(lam)
    lam, Q = lam[order], Q[:, order]
    P = Q / np.sqrt(np.abs(lam))
    return P, np.sign(lam)


@dataclass
class Diagonalization:
    ok: bool
    eigenvalues: np.ndarray | None = None
    basis: np.ndarray | None = None  # columns, metric-orthonormal
    signs: np.ndarray | None = None
    reason: str = ""
    spectrum: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def reassemble(self) -> np.ndarray:
        E = self.basis
        return E @ np.diag(self.eigenvalues) @ np.linalg.inv(E)


def is_self_adjoint(A, G, tol: float = 1e-9) -> bool:
    A = np.asarray(A, dtype=float)
    GA = G @ A
    return np.linalg.norm(GA - GA.T) <= tol * max(1.0, np.linalg.norm(GA))


def metric_diagonalize(A, metric, tol: float = 1e-8) -> Diagonalization:
    """Metric-orthonormal eigenbasis of an operator self-adjoint w.r.t. ``metric``.

    ``metric`` is a SignatureMetric or a symmetric Gram matrix. Failure
    (complex spectrum, non-semisimple, null eigenspace) is reported in the
    result rather than raised.
    """
    A = np.asarray(A, dtype=float)
    G = metric.matrix if isinstance(metric, SignatureMetric) else np.asarray(metric, float)
    n = A.shape[0]
    if A.shape != (n, n) or G.shape != (n, n):
        raise InvalidInputError("operator and metric shapes disagree")
    if not is_self_adjoint(A, G):
        raise InvalidInputError("operator is not self-adjoint w.r.t. the metric")
    scale = max(1.0, np.linalg.norm(A))
    spec = np.linalg.eigvals(A)
    if np.max(np.abs(spec.imag)) > tol * scale:
        return Diagonalization(False, reason="complex spectrum", spectrum=spec)
    vals = np.sort(spec.real)
    # cluster eigenvalues
    groups = [[vals[0]]]
    for v in vals[1:]:
        if abs(v - groups[-1][-1]) <= 1e-6 * scale:
            groups[-1].append(v)
        else:
            groups.append([v])
    cols, lams, signs = [], [], []
    for grp in groups:
        lam = float(np.mean(grp))
        mult = len(grp)
        _, s, Vt = np.linalg.svd(A - lam * np.eye(n))
        kernel = Vt[n - mult:].T
        if np.any(s[n - mult:] > 1e-6 * scale):
            return Diagonalization(False, reason="non-semisimple", spectrum=spec)
        B = kernel.T @ G @ kernel
        try:
            P, sg = lorentz_basis(B, tol=1e-9)
        except DegenerateError:
            return Diagonalization(False, reason="null eigenspace", spectrum=spec)
        cols.append(kernel @ P)
        lams.extend([lam] * mult)
        signs.extend(sg)
    E = np.hstack(cols)
    return Diagonalization(True, np.array(lams), E, np.array(signs), spectrum=spec)
