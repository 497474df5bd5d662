"""Point-level Lagrangian and special Lagrangian tests.

Frames are oriented real m-planes in R^{2m}; implicit systems are m real
functions on R^{2m} whose common zero set is the candidate submanifold.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateError, InvalidInputError
from .indlinalg import DEGENERACY_TOL, HermitianForm, apply_J, complex_det, to_complex

OMEGA_TOL = 1e-9
PHASE_TOL = 1e-8


@dataclass
class Frame:
    """Rows of ``vectors`` span the plane; ``orientation`` is +1 or -1."""

    vectors: np.ndarray
    orientation: int = 1

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        if self.orientation not in (1, -1):
            raise InvalidInputError("orientation must be +1 or -1")
        m, n2 = self.vectors.shape
        if n2 != 2 * m:
            raise InvalidInputError(f"need m vectors of length 2m, got {self.vectors.shape}")
        if np.linalg.matrix_rank(self.vectors) < m:
            raise InvalidInputError("frame vectors are linearly dependent")

    @property
    def m(self) -> int:
        return self.vectors.shape[0]

    def flipped(self) -> "Frame":
        return Frame(self.vectors.copy(), -self.orientation)

    def gram(self, form: HermitianForm | None = None) -> np.ndarray:
        form = form or HermitianForm(0, self.m)
        V = self.vectors
        return V @ form.g_matrix @ V.T

    def normalized_gram_det(self, form: HermitianForm) -> float:
        V = self.vectors / np.linalg.norm(self.vectors, axis=1, keepdims=True)
        return float(np.linalg.det(V @ form.g_matrix @ V.T))

    def is_degenerate(self, form: HermitianForm, tol: float = DEGENERACY_TOL) -> bool:
        return abs(self.normalized_gram_det(form)) < tol

    def transformed(self, A) -> "Frame":
        """Apply a real m x m matrix diagonally on R^m (+) R^m."""
        A = np.asarray(A, dtype=float)
        m = self.m
        V = self.vectors
        W = np.hstack([V[:, :m] @ A.T, V[:, m:] @ A.T])
        return Frame(W, self.orientation)


def is_lagrangian_plane(frame: Frame, form: HermitianForm, tol: float = OMEGA_TOL,
                        degeneracy_tol: float = DEGENERACY_TOL) -> str:
    """Returns ``"lagrangian"``, ``"not-lagrangian"`` or ``"degenerate"``."""
    if frame.m != form.dimension:
        raise InvalidInputError(f"frame of dimension {frame.m} for C^{form.dimension}")
    if frame.is_degenerate(form, degeneracy_tol):
        return "degenerate"
    V = frame.vectors / np.linalg.norm(frame.vectors, axis=1, keepdims=True)
    Om = V @ form.omega_matrix @ V.T
    return "lagrangian" if np.max(np.abs(Om)) < tol else "not-lagrangian"


def dz_phase(frame: Frame, form: HermitianForm | None = None) -> complex:
    """``dz_1 ^ ... ^ dz_m`` on the frame, divided by ``sqrt|det Gram|``.

    Lagrangian frames give unit-modulus values.
    """
    form = form or HermitianForm(0, frame.m)
    scale = np.linalg.norm(frame.vectors, axis=1)
    V = frame.vectors / scale[:, None]
    gdet = abs(np.linalg.det(V @ form.g_matrix @ V.T))
    if gdet < DEGENERACY_TOL:
        raise DegenerateError("degenerate frame")
    Z = to_complex(V).T  # columns are the complex tangent vectors
    return frame.orientation * complex_det(Z) / np.sqrt(gdet)


@dataclass
class PlaneVerdict:
    verdict: str  # special | not-special | not-lagrangian | degenerate
    phase: complex | None = None
    special_orientation: int | None = None  # which of +frame / -frame is special

    @property
    def special(self) -> bool:
        return self.verdict == "special"


def is_special_plane(frame: Frame, form: HermitianForm, tol: float = PHASE_TOL) -> PlaneVerdict:
    """Lagrangian and ``|Im dz| < tol``; reports whether +frame or -frame has phase 1."""
    lag = is_lagrangian_plane(frame, form)
    if lag == "degenerate":
        return PlaneVerdict("degenerate")
    ph = dz_phase(frame, form)
    if lag != "lagrangian":
        return PlaneVerdict("not-lagrangian", ph)
    if abs(ph.imag) < tol:
        return PlaneVerdict("special", ph, frame.orientation * (1 if ph.real > 0 else -1))
    return PlaneVerdict("not-special", ph)


# ---------------------------------------------------------------------------
# implicit systems


def _fd_jacobian(fun, p, h=1e-6):
    p = np.asarray(p, dtype=float)
    cols = []
    for i in range(p.size):
        e = np.zeros_like(p)
        e[i] = h
        cols.append((np.asarray(fun(p + e)) - np.asarray(fun(p - e))) / (2 * h))
    return np.stack(cols, axis=-1)


@dataclass
class ImplicitSystem:
    """m real functions on R^{2m}.

    ``values(p)`` returns the m function values at a real 2m-vector p;
    ``jacobian(p)``, if given, the m x 2m real derivative matrix
    (columns ordered x_1..x_m, y_1..y_m). Without it, central differences
    with step ``fd_step`` are used.
    """

    m: int
    values: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    fd_step: float = 1e-6
    description: str = ""

    def jac(self, p) -> np.ndarray:
        if self.jacobian is not None:
            return np.asarray(self.jacobian(np.asarray(p, float)), dtype=float)
        return _fd_jacobian(self.values, p, self.fd_step)

    def wirtinger(self, p):
        """``(df/dz, df/dzbar)`` as m x m complex matrices (row j = f_j)."""
        D = self.jac(p)
        m = self.m
        fx, fy = D[:, :m], D[:, m:]
        return 0.5 * (fx - 1j * fy), 0.5 * (fx + 1j * fy)

    def check_wirtinger(self, p, tol=1e-12) -> bool:
        dz, dzb = self.wirtinger(p)
        return bool(np.max(np.abs(dzb - np.conj(dz))) <= tol * max(1.0, np.max(np.abs(dz))))

    def tangent_frame(self, p, eps) -> Frame:
        """Rows ``J grad^g f_i``; these span T_pM when M is Lagrangian."""
        D = self.jac(p)
        signs = np.concatenate([eps, eps])
        grads = D * signs  # grad^g f = G^{-1} df
        return Frame(apply_J(grads))


@dataclass
class PointReport:
    point: list
    residual: float
    omega_brackets: list
    gram_det: float
    passed: bool
    det_dzbar: complex | None = None
    frame_verdict: str | None = None
    parity_value: float | None = None
    note: str = ""


@dataclass
class ImplicitReport:
    check: str
    tolerances: dict
    points: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.points)

    @property
    def max_bracket(self) -> float:
        return max((max(map(abs, p.omega_brackets), default=0.0) for p in self.points), default=0.0)

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, complex):
                return [v.real, v.imag]
            return v
        pts = []
        for p in self.points:
            d = asdict(p)
            pts.append({k: enc(v) for k, v in d.items()})
        return {"check": self.check, "tolerances": self.tolerances,
                "passed": self.passed, "points": pts}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _zero_set_guard(sys: ImplicitSystem, p, tol):
    r = float(np.max(np.abs(sys.values(p))))
    if r > tol:
        raise InvalidInputError(f"point is off the zero set (|f| = {r:.3e})")
    return r


def implicit_lagrangian_check(sys: ImplicitSystem, points: Sequence, form: HermitianForm,
                              tol: float = OMEGA_TOL, gram_tol: float = DEGENERACY_TOL,
                              zero_tol: float = 1e-8) -> ImplicitReport:
    """Evaluates the omega brackets of the gradients (must vanish) and
    ``det g(grad^g f_i, grad^g f_j)`` (must not) at each point.

    Brackets and the Gram determinant are normalized by the Euclidean norms
    of the differentials.
    """
    if sys.m != form.dimension:
        raise InvalidInputError("system size and form dimension disagree")
    m = sys.m
    eps = form.eps
    rep = ImplicitReport("lagrangian", {"omega": tol, "gram": gram_tol, "zero_set": zero_tol})
    for p in points:
        p = np.asarray(p, dtype=float)
        r = _zero_set_guard(sys, p, zero_tol)
        D = sys.jac(p)
        norms = np.linalg.norm(D, axis=1)
        if np.any(norms == 0) or np.linalg.matrix_rank(D, tol=1e-10 * norms.max()) < m:
            raise DegenerateError("differentials are linearly dependent")
        Dn = D / norms[:, None]
        fx, fy = Dn[:, :m], Dn[:, m:]
        br = (fx * eps) @ fy.T - (fy * eps) @ fx.T
        brackets = [float(br[i, j]) for i in range(m) for j in range(i + 1, m)]
        grads = Dn * np.concatenate([eps, eps])
        gram = grads @ np.diag(np.concatenate([eps, eps])) @ grads.T
        gdet = float(np.linalg.det(gram))
        ok = all(abs(b) < tol for b in brackets) and abs(gdet) > gram_tol
        rep.points.append(PointReport(p.tolist(), r, brackets, gdet, ok))
    return rep


def implicit_special_check(sys: ImplicitSystem, points: Sequence, form: HermitianForm,
                           tol: float = PHASE_TOL, zero_tol: float = 1e-8) -> ImplicitReport:
    """``det_C(df_j/dzbar_l)``: Im must vanish for m even, Re for m odd.

    Each point is cross-checked against the plane test on the frame
    ``J grad^g f_i``; disagreement is recorded in the point's note and
    fails the point.
    """
    m = sys.m
    rep = ImplicitReport("special", {"parity": tol, "zero_set": zero_tol})
    lag = implicit_lagrangian_check(sys, points, form, zero_tol=zero_tol)
    for p, lp in zip(points, lag.points):
        p = np.asarray(p, dtype=float)
        _, dzb = sys.wirtinger(p)
        # rows normalized so the tolerance is scale free
        rows = np.linalg.norm(dzb, axis=1)
        det = complex(complex_det(dzb / rows[:, None]))
        val = det.imag if m % 2 == 0 else det.real
        parity_ok = abs(val) < tol
        verdict = is_special_plane(sys.tangent_frame(p, form.eps), form, tol).verdict
        frame_ok = verdict == "special"
        note = ""
        if parity_ok != frame_ok:
            note = f"parity rule ({parity_ok}) disagrees with frame test ({verdict})"
        ok = lp.passed and parity_ok and frame_ok
        rep.points.append(PointReport(p.tolist(), lp.residual, lp.omega_brackets, lp.gram_det,
                                      ok, det, verdict, float(val), note))
    return rep
