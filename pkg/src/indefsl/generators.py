"""Explicit families of indefinite special Lagrangian submanifolds.

* torus-invariant level sets ``F^{-1}(c)`` of the T^{m-1} moment map plus
  ``Re``/``Im`` of ``z_1 ... z_m``;
* SO(k, m-k)-invariant folds ``lambda * t`` with ``t`` on a pseudo-sphere
  or pseudo-hyperbolic space and ``Im(lambda^m) = c``;
* normal bundles ``(x, v)`` over austere submanifolds of ``R_k^m``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DegenerateError, InvalidInputError
from .geometry import Immersion, second_fundamental, tangent_lorentz_frame
from .indlinalg import HermitianForm, complex_det, metric_diagonalize, signature_matrix, to_real
from .planes import Frame, ImplicitSystem, dz_phase


class SingularConeWarning(UserWarning):
    """``c = 0`` fold: a singular union of Lagrangian cones."""


# ---------------------------------------------------------------------------
# moment maps


def su_moment_map(z, k: int) -> np.ndarray:
    """``mu(z) = -(i/2) z z^* I_{k,m}``."""
    z = np.asarray(z, dtype=complex)
    return -0.5j * np.outer(z, np.conj(z)) @ signature_matrix(k, z.size)


def torus_moment_values(z, k: int, m: int | None = None) -> np.ndarray:
    """``|z_j|^2 + |z_m|^2`` for ``j <= k``, ``|z_j|^2 - |z_m|^2`` for ``k < j < m``."""
    z = np.asarray(z, dtype=complex)
    m = m or z.size
    a = np.abs(z) ** 2
    s = np.where(np.arange(m - 1) < k, 1.0, -1.0)
    return a[: m - 1] + s * a[m - 1]


def so_moment_map(z, k: int) -> np.ndarray:
    """Moment map of the diagonal SO(k, m-k) action, as an m x m real matrix."""
    z = np.asarray(z, dtype=complex)
    m = z.size
    mu = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            w = (z[i] * np.conj(z[j])).imag
            if j < k:
                mu[i, j], mu[j, i] = w, -w
            elif i < k:
                mu[i, j] = mu[j, i] = w
            else:
                mu[i, j], mu[j, i] = -w, w
    return mu


def random_u_km(k: int, m: int, rng: np.random.Generator, scale: float = 0.5) -> np.ndarray:
    """``expm(I K)`` with K anti-Hermitian, an element of U(k, m-k)."""
    from scipy.linalg import expm

    K = rng.normal(scale=scale, size=(m, m)) + 1j * rng.normal(scale=scale, size=(m, m))
    K = K - K.conj().T
    return expm(signature_matrix(k, m) @ K)


# ---------------------------------------------------------------------------
# torus-invariant level sets


@dataclass
class LevelSetSpec:
    m: int
    k: int
    c: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        if self.m < 3:
            raise InvalidInputError("torus level sets need m >= 3")
        if not 1 <= self.k < self.m:
            raise InvalidInputError("need 1 <= k < m")
        if self.c.shape != (self.m,):
            raise InvalidInputError(f"level c must have {self.m} entries")
        if np.any(self.c[: self.k] <= 0):
            raise InvalidInputError("c_1..c_k must be positive")

    @property
    def last_is_real_part(self) -> bool:
        return self.m % 2 == 0


def _prod_others(z):
    m = z.size
    out = np.empty(m, dtype=complex)
    for l in range(m):
        out[l] = np.prod(np.delete(z, l))
    return out


def torus_system(spec: LevelSetSpec) -> ImplicitSystem:
    """``f_j - c_j`` as an ImplicitSystem on R^{2m} with analytic Jacobian."""
    m, k, c = spec.m, spec.k, spec.c
    s = np.where(np.arange(m - 1) < k, 1.0, -1.0)
    real_part = spec.last_is_real_part

    def values(p):
        z = p[:m] + 1j * p[m:]
        P = np.prod(z)
        last = P.real if real_part else P.imag
        return np.concatenate([torus_moment_values(z, k, m), [last]]) - c

    def jacobian(p):
        x, y = p[:m], p[m:]
        z = x + 1j * y
        D = np.zeros((m, 2 * m))
        for j in range(m - 1):
            D[j, j], D[j, m + j] = 2 * x[j], 2 * y[j]
            D[j, m - 1], D[j, 2 * m - 1] = 2 * s[j] * x[m - 1], 2 * s[j] * y[m - 1]
        dP = _prod_others(z)
        if real_part:
            D[m - 1, :m], D[m - 1, m:] = dP.real, -dP.imag
        else:
            D[m - 1, :m], D[m - 1, m:] = dP.imag, dP.real
        return D

    return ImplicitSystem(m, values, jacobian, description=f"torus level set m={m} k={k}")


def newton_correct(sys: ImplicitSystem, p0, tol: float = 1e-12, max_iter: int = 50) -> np.ndarray:
    """Minimum-norm Newton steps onto the zero set; step halved on residual increase."""
    p = np.asarray(p0, dtype=float).copy()
    r = sys.values(p)
    nr = np.linalg.norm(r)
    for _ in range(max_iter):
        if nr < tol:
            return p
        step = -np.linalg.pinv(sys.jac(p)) @ r
        t = 1.0
        while True:
            q = p + t * step
            rq = sys.values(q)
            if np.linalg.norm(rq) < nr or t < 1e-6:
                break
            t *= 0.5
        p, r, nr = q, rq, np.linalg.norm(rq)
    if nr < tol:
        return p
    raise ConvergenceError(f"Newton did not converge (|r| = {nr:.3e})")


@dataclass
class LevelSetPoint:
    point: np.ndarray
    frame: Frame
    det_dzbar: complex
    phase: complex


def levelset_point(spec: LevelSetSpec, seed, d_tol: float = 1e-6,
                   tol: float = 1e-12) -> LevelSetPoint:
    sys = torus_system(spec)
    form = HermitianForm(spec.k, spec.m)
    p = newton_correct(sys, seed, tol=tol)
    sv = np.linalg.svd(sys.jac(p), compute_uv=False)
    if sv[-1] < d_tol * sv[0]:
        raise DegenerateError("point lies (numerically) in the critical set D")
    _, dzb = sys.wirtinger(p)
    det = complex(complex_det(dzb))
    fr = sys.tangent_frame(p, form.eps)
    ph = complex(dz_phase(fr, form))
    if ph.real < 0:
        fr = fr.flipped()
        ph = -ph
    return LevelSetPoint(p, fr, det, ph)


def levelset_sample(spec: LevelSetSpec, seeds, count: int, rng: np.random.Generator,
                    spread: float = 0.3, max_attempts: int | None = None):
    """Newton-corrected points of ``F^{-1}(c)``.

    The first point comes from the first seed as given; further seeds are
    random torus rotations of a seed plus Gaussian noise of size ``spread``.
    Returns ``(points, failures)``.
    """
    seeds = [to_real(np.asarray(s, dtype=complex)) if np.iscomplexobj(s) or len(s) == spec.m
             else np.asarray(s, float) for s in seeds]
    m = spec.m
    max_attempts = max_attempts or 20 * count
    points, failures = [], []
    attempts = 0
    while len(points) < count and attempts < max_attempts:
        base = seeds[attempts % len(seeds)]
        if attempts < len(seeds):
            s0 = base
        else:
            z = base[:m] + 1j * base[m:]
            th = rng.uniform(-np.pi, np.pi, size=m - 1)
            z = z * np.exp(1j * np.append(th, -th.sum()))
            z = z + spread * (rng.normal(size=m) + 1j * rng.normal(size=m))
            s0 = to_real(z)
        attempts += 1
        try:
            points.append(levelset_point(spec, s0))
        except (ConvergenceError, DegenerateError) as exc:
            failures.append({"seed": s0.tolist(), "reason": str(exc)})
    return points, failures


# ---------------------------------------------------------------------------
# SO(k, m-k)-invariant folds


@dataclass
class RotFoldSpec:
    m: int
    k: int
    c: float
    causal: str = "spacelike"  # or "timelike"
    branch: int = 0

    def __post_init__(self):
        if self.causal not in ("spacelike", "timelike"):
            raise InvalidInputError("causal type must be 'spacelike' or 'timelike'")
        if self.m < 2 or not 0 <= self.k <= self.m:
            raise InvalidInputError("need m >= 2 and 0 <= k <= m")
        if self.causal == "spacelike" and self.k > self.m - 1:
            raise InvalidInputError("pseudo-sphere needs k <= m - 1")
        if self.causal == "timelike" and self.k < 1:
            raise InvalidInputError("pseudo-hyperbolic space needs k >= 1")
        if self.c != 0 and (-1) ** self.branch != np.sign(self.c):
            raise InvalidInputError("branch parity must match the sign of c")

    @property
    def sigma(self) -> float:
        return 1.0 if self.causal == "spacelike" else -1.0

    @property
    def eps(self) -> np.ndarray:
        return np.diag(signature_matrix(self.k, self.m))

    @property
    def angle_range(self):
        lo = self.branch * np.pi / self.m
        return lo, lo + np.pi / self.m

    def lam(self, phi):
        """Point of ``Im(lambda^m) = c`` at polar angle phi (c != 0)."""
        r = (self.c / np.sin(self.m * phi)) ** (1.0 / self.m)
        return r * np.exp(1j * phi)


def pseudo_norm2(t, eps):
    return float(np.sum(eps * t * t))


def pseudo_sphere_sample(spec: RotFoldSpec, rng: np.random.Generator, scale: float = 0.7):
    m, k, eps = spec.m, spec.k, spec.eps
    if spec.causal == "spacelike":
        tt = rng.normal(scale=scale, size=k)
        w = rng.normal(size=m - k)
        w /= np.linalg.norm(w)
        ts = np.sqrt(1 + tt @ tt) * w
    else:
        ts = rng.normal(scale=scale, size=m - k)
        w = rng.normal(size=k)
        w /= np.linalg.norm(w)
        tt = np.sqrt(1 + ts @ ts) * w
    t = np.concatenate([tt, ts])
    assert abs(pseudo_norm2(t, eps) - spec.sigma) < 1e-9
    return t


def pseudo_sphere_tangent(t, eps) -> np.ndarray:
    """m x (m-1) basis of ``{v : sum eps_j t_j v_j = 0}`` with ``det[t, B] > 0``."""
    _, _, Vt = np.linalg.svd((eps * t)[None, :])
    B = Vt[1:].T
    if np.linalg.det(np.column_stack([t, B])) < 0:
        B[:, -1] *= -1
    return B


def curve_direction(lam: complex, m: int) -> complex:
    """Tangent of ``Im(lambda^m) = const`` at lam with ``lambda^{m-1} lambda' > 0``."""
    return np.conj(lam ** (m - 1))


def rotfold_point(spec: RotFoldSpec, lam: complex, t):
    """Ambient point ``(Re lam t, Im lam t)`` and its special-oriented tangent frame."""
    t = np.asarray(t, dtype=float)
    eps = spec.eps
    if abs(pseudo_norm2(t, eps) - spec.sigma) > 1e-9:
        raise InvalidInputError("t is not on the requested pseudo-sphere")
    if abs((lam ** spec.m).imag - spec.c) > 1e-9 * max(1.0, abs(lam) ** spec.m):
        raise InvalidInputError("lambda is not on Im(lambda^m) = c")
    if spec.c == 0:
        dl = np.exp(1j * np.angle(lam))
        dl = dl * np.sign((lam ** (spec.m - 1) * dl).real or 1.0)
    else:
        dl = curve_direction(lam, spec.m)
    B = pseudo_sphere_tangent(t, eps)
    vecs = [to_real(dl * t)] + [to_real(lam * B[:, j]) for j in range(spec.m - 1)]
    return to_real(lam * t), Frame(np.array(vecs))


@dataclass
class FoldSample:
    point: np.ndarray
    frame: Frame
    lam: complex
    t: np.ndarray
    so_moment: float
    branch: int


def rotfold_sample(spec: RotFoldSpec, count: int, rng: np.random.Generator, margin: float = 0.15):
    """Random samples along the fold; warns for the singular ``c = 0`` case."""
    if spec.c == 0:
        warnings.warn("c = 0: the fold is a singular union of Lagrangian cones",
                      SingularConeWarning, stacklevel=2)
    lo, hi = spec.angle_range
    out = []
    for _ in range(count):
        t = pseudo_sphere_sample(spec, rng)
        if spec.c == 0:
            lam = rng.uniform(0.3, 2.0) * np.exp(1j * lo)
        else:
            phi = rng.uniform(lo + margin * (hi - lo), hi - margin * (hi - lo))
            lam = spec.lam(phi)
        p, fr = rotfold_point(spec, lam, t)
        z = lam * t
        out.append(FoldSample(p, fr, lam, t, float(np.max(np.abs(so_moment_map(z, spec.k)))),
                              spec.branch))
    return out


def rotfold_immersion(spec: RotFoldSpec, phi0: float, t0) -> Immersion:
    """Local chart ``(s, a) -> lambda(s) N(t0 + B a)`` around a fold point.

    ``N`` normalizes onto the pseudo-sphere; s runs along the lambda-curve
    in the direction that makes the chart orientation special.
    """
    t0 = np.asarray(t0, dtype=float)
    eps, sigma, m, c = spec.eps, spec.sigma, spec.m, spec.c
    B = pseudo_sphere_tangent(t0, eps)
    if c == 0:
        r0 = abs(phi0) if phi0 else 1.0
        e = np.exp(1j * spec.angle_range[0])
        sgn = (-1) ** spec.branch

        def lam(s):
            return (r0 + sgn * s) * e

        def dlam(s):
            return sgn * e
    else:
        sgn = -np.sign(c)

        def lam(s):
            return spec.lam(phi0 + sgn * s)

        def dlam(s):
            phi = phi0 + sgn * s
            r = abs(spec.lam(phi))
            return sgn * r * (-1.0 / np.tan(m * phi) + 1j) * np.exp(1j * phi)

    def f(q):
        v = t0 + B @ q[1:]
        t = v / np.sqrt(sigma * np.sum(eps * v * v))
        return to_real(lam(q[0]) * t)

    def jac(q):
        v = t0 + B @ q[1:]
        rho = np.sqrt(sigma * np.sum(eps * v * v))
        dN = np.eye(m) / rho - sigma * np.outer(v, eps * v) / rho**3
        cols = [dlam(q[0]) * v / rho] + list((lam(q[0]) * (dN @ B)).T)
        return np.column_stack([to_real(c) for c in cols])

    # analytic first derivatives keep the Lagrangian test at round-off level
    return Immersion(m, HermitianForm(spec.k, m).real_signs, f, jac,
                     name=f"rotfold m={m} k={spec.k}")


# ---------------------------------------------------------------------------
# austere bases and normal bundles


@dataclass
class ShapeOperatorSample:
    """Shape operators at one point of ``M^n`` in ``R_k^m``.

    ``tangent`` (m x n) and ``normals`` (m x p) are Lorentz frames (columns);
    ``operators[l]`` is ``A_{v_l}`` in the tangent Lorentz basis.
    """

    base_point: np.ndarray
    tangent: np.ndarray
    tangent_signs: np.ndarray
    normals: np.ndarray
    normal_signs: np.ndarray
    operators: list
    ambient_signs: np.ndarray = field(default=None)

    def __post_init__(self):
        self.tangent = np.atleast_2d(np.asarray(self.tangent, float))
        self.normals = np.asarray(self.normals, float).reshape(self.tangent.shape[0], -1)
        self.operators = [np.asarray(A, float) for A in self.operators]
        if self.ambient_signs is None:
            m = self.tangent.shape[0]
            k = int(np.sum(self.tangent_signs < 0) + np.sum(self.normal_signs < 0))
            self.ambient_signs = np.diag(signature_matrix(k, m))
        D = np.diag(self.tangent_signs)
        for A in self.operators:
            DA = D @ A
            if np.max(np.abs(DA - DA.T)) > 1e-8 * max(1.0, np.max(np.abs(A))):
                raise InvalidInputError("shape operator is not self-adjoint")

    @property
    def n(self) -> int:
        return self.tangent.shape[1]

    @property
    def p(self) -> int:
        return self.normals.shape[1]

    def operator(self, coeffs) -> np.ndarray:
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
        return sum(c * A for c, A in zip(coeffs, self.operators))

    def normal_vector(self, coeffs) -> np.ndarray:
        return self.normals @ np.atleast_1d(coeffs)


def shape_sample_from_immersion(imm: Immersion, p) -> ShapeOperatorSample:
    sf = second_fundamental(imm, p)
    E, tsigns = tangent_lorentz_frame(imm, p)
    P = np.linalg.lstsq(sf.tangent, E, rcond=None)[0]  # E = X P
    ops = []
    for l in range(sf.normal_frame.shape[1]):
        AX = sf.shape_operator(sf.normal_frame[:, l], imm.G)
        ops.append(np.linalg.solve(P, AX @ P))
    return ShapeOperatorSample(imm.point(p), E, tsigns, sf.normal_frame, sf.normal_signs, ops,
                               imm.ambient_signs)


def austere_sigmas(sample: ShapeOperatorSample, xi) -> np.ndarray:
    """``sigma_0..sigma_n`` from ``det(t I - A_xi) = sum (-1)^l sigma_l t^{n-l}``."""
    A = sample.operator(xi)
    coeffs = np.poly(A) if A.size else np.array([1.0])
    return np.real(coeffs) * (-1.0) ** np.arange(coeffs.size)


def is_austere(sample: ShapeOperatorSample, rng: np.random.Generator | None = None,
               trials: int = 10, tol: float = 1e-8) -> bool:
    """Odd sigmas vanish for every basis normal and random normal combinations."""
    rng = rng or np.random.default_rng(0)
    p = sample.p
    xis = list(np.eye(p)) + list(rng.normal(size=(trials, p)))
    for xi in xis:
        sig = austere_sigmas(sample, xi)
        scale = max(1.0, float(np.max(np.abs(sample.operator(xi)))))
        if np.any(np.abs(sig[1::2]) > tol * scale ** np.arange(1, sig.size, 2)):
            return False
    return True


@dataclass
class NormalBundleFrame:
    frame: Frame
    predicted_phase: complex | None
    eigenvalues: np.ndarray | None
    failure: str = ""


def normal_bundle_frames(sample: ShapeOperatorSample, coeffs) -> NormalBundleFrame:
    """Frame ``(e_j, A_v e_j) u (0, v_l)`` at the fiber point ``v = sum c_l v_l``.

    The phase predicted from the eigenvalues of ``A_v`` is
    ``i^p prod(1 + i lam_j) / |prod(1 + i lam_j)|``.
    """
    E, V = sample.tangent, sample.normals
    A = sample.operator(coeffs)
    vecs = [np.concatenate([E[:, j], E @ A[:, j]]) for j in range(sample.n)]
    vecs += [np.concatenate([np.zeros(E.shape[0]), V[:, l]]) for l in range(sample.p)]
    orient = 1 if np.linalg.det(np.column_stack([E, V])) > 0 else -1
    fr = Frame(np.array(vecs), orient)
    diag = metric_diagonalize(A, np.diag(sample.tangent_signs))
    if not diag.ok:
        return NormalBundleFrame(fr, None, None, diag.reason)
    lam = diag.eigenvalues
    w = (1j) ** sample.p * np.prod(1 + 1j * lam)
    return NormalBundleFrame(fr, complex(w / abs(w)), lam)


def synthetic_sample(eigenvalues, signs=None, p: int = 1) -> ShapeOperatorSample:
    """Coordinate sample with ``A_{v_1} = diag(eigenvalues)``, other operators zero.

    Tangent axes come first (``signs`` must list timelike entries first),
    then p spacelike normal axes.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    n = lam.size
    signs = np.ones(n) if signs is None else np.asarray(signs, float)
    if np.any(np.diff(signs) < 0):
        raise InvalidInputError("timelike tangent directions must come first")
    m = n + p
    E = np.eye(m)[:, :n]
    V = np.eye(m)[:, n:]
    ops = [np.diag(lam)] + [np.zeros((n, n))] * (p - 1)
    return ShapeOperatorSample(np.zeros(m), E, signs, V, np.ones(p), ops,
                               np.concatenate([signs, np.ones(p)]))


# built-in bases in R_1^3 with coordinates (t, x, y) and metric -dt^2 + dx^2 + dy^2


def helicoid(a: float = 0.5) -> Immersion:
    """``(a v, u cos v, u sin v)``: maximal, spacelike for ``|u| > |a|``."""

    def f(q):
        u, v = q
        return np.array([a * v, u * np.cos(v), u * np.sin(v)])

    def jac(q):
        u, v = q
        return np.array([[0.0, a], [np.cos(v), -u * np.sin(v)], [np.sin(v), u * np.cos(v)]])

    def second(q):
        u, v = q
        out = np.zeros((3, 2, 2))
        out[1] = [[0, -np.sin(v)], [-np.sin(v), -u * np.cos(v)]]
        out[2] = [[0, np.cos(v)], [np.cos(v), -u * np.sin(v)]]
        return out

    return Immersion(2, np.array([-1.0, 1.0, 1.0]), f, jac, second, name="helicoid")


def paraboloid(alpha: float = 0.5) -> Immersion:
    """Spacelike graph ``t = alpha (x^2 + y^2) / 2`` (not austere; control)."""

    def f(q):
        x, y = q
        return np.array([0.5 * alpha * (x * x + y * y), x, y])

    def jac(q):
        x, y = q
        return np.array([[alpha * x, alpha * y], [1.0, 0.0], [0.0, 1.0]])

    def second(q):
        out = np.zeros((3, 2, 2))
        out[0] = alpha * np.eye(2)
        return out

    return Immersion(2, np.array([-1.0, 1.0, 1.0]), f, jac, second, name="paraboloid")


def affine_plane(n: int, m: int, k: int) -> Immersion:
    """Coordinate n-plane spanned by the last n axes of ``R_k^m``, minus timelike ones as needed."""
    signs = np.diag(signature_matrix(k, m))
    cols = list(range(m - n, m))

    def f(q):
        x = np.zeros(m)
        x[cols] = q
        return x

    def jac(q):
        J = np.zeros((m, n))
        J[cols, range(n)] = 1.0
        return J

    return Immersion(n, signs, f, jac, lambda q: np.zeros((m, n, n)), name="affine")


def hypersurface_normal_bundle(base: Immersion, ref_point) -> Immersion:
    """Chart ``(q, s) -> (x(q), s nu(q))`` of the normal bundle of a hypersurface.

    ``nu`` is the unit normal, sign fixed by continuity from ``ref_point``.
    """
    from .geometry import normal_lorentz_frame

    m = base.N
    if base.n != m - 1:
        raise InvalidInputError("base must be a hypersurface")
    nf0, _ = normal_lorentz_frame(base.jac(ref_point), base.G)
    ref = nf0[:, 0]

    def nu(q):
        nf, _ = normal_lorentz_frame(base.jac(q), base.G)
        v = nf[:, 0]
        return v if v @ ref >= 0 else -v

    def f(q):
        return np.concatenate([base.point(q[:-1]), q[-1] * nu(q[:-1])])

    def jac(q):
        # Weingarten: d nu = -x_* g^{-1} h with h_ij = <x_ij, nu>
        p = q[:-1]
        X = base.jac(p)
        v = nu(p)
        g = X.T @ base.G @ X
        h = np.einsum("aij,a->ij", base.hess(p), base.G @ v)
        dnu = -X @ np.linalg.solve(g, h)
        top = np.hstack([X, np.zeros((m, 1))])
        bottom = np.hstack([q[-1] * dnu, v[:, None]])
        return np.vstack([top, bottom])

    k = int(np.sum(base.ambient_signs < 0))
    # analytic first derivatives keep the Lagrangian test at round-off level
    return Immersion(m, HermitianForm(k, m).real_signs, f, jac,
                     name=f"normal bundle of {base.name}")
