"""Explicit Cauchy solver for the k = 1 special Lagrangian potential equation.

The unknown is ``u(t, x')`` on ``R x R^{m-1}`` with ``t = x_1``. The equation
``Im det(I + i Hess(u) I_{1,m}) = 0`` is affine in ``u_tt``, so every node
is advanced by solving one scalar linear relation for ``u_tt`` (leapfrog in
time, centered differences in space, one predictor-corrector pass for the
mixed derivatives ``u_{t x_j}``).

Snapshot files
--------------
Little-endian, written by :func:`write_snapshots`::

    magic    8 bytes  b"INDEFSL\\0"
    version  uint32   (= 1)
    ndim     uint32   number of spatial axes
    dims     uint64 x ndim
    dx, dt   float64 x 2
    count    uint64   number of records
    record   count x (step uint64, time float64, float64 x prod(dims), row-major)
"""
from __future__ import annotations

import math
import struct
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Sequence

import numpy as np

from ._core import BACKEND, kernels
from .errors import BlowUpError, InvalidInputError
from .graphs import PotentialField
from .indlinalg import signature_matrix

# F + box(u) = SIGN_M3 * det(Hess u) when m = 3; fixed by symbolic expansion
SIGN_M3 = 1
DEFAULT_CFL = 0.4
ALPHA_TOL = 1e-6
SPACELIKE_MARGIN = 1e-3
NONDEGENERACY_FLOOR = 1e-8
BLOWUP_BOUND = 1e6


# ---------------------------------------------------------------------------
# nonlinearity


def box_of(zeta) -> np.ndarray:
    """``zeta_11 - sum_{j>1} zeta_jj`` for (batched) symmetric m x m arrays."""
    zeta = np.asarray(zeta, dtype=float)
    d = np.diagonal(zeta, axis1=-2, axis2=-1)
    return d[..., 0] - d[..., 1:].sum(axis=-1)


def sl_operator(zeta) -> np.ndarray:
    """``F(zeta) = Im det(I + i zeta I_{1,m})`` (batched)."""
    zeta = np.asarray(zeta, dtype=float)
    m = zeta.shape[-1]
    I = signature_matrix(1, m)
    return np.linalg.det(np.eye(m) + 1j * zeta @ I).imag


def rhs_nonlinearity(m: int, zeta) -> np.ndarray:
    """``f(zeta) = F(zeta) + box(zeta)``; the equation reads ``box u = f``.

    For m = 3 this equals ``SIGN_M3 * det(zeta)``.
    """
    zeta = np.asarray(zeta, dtype=float)
    if m < 3:
        raise InvalidInputError("the hyperbolic formulation needs m >= 3")
    if zeta.shape[-2:] != (m, m):
        raise InvalidInputError(f"expected trailing shape ({m}, {m}), got {zeta.shape}")
    return sl_operator(zeta) + box_of(zeta)


# ---------------------------------------------------------------------------
# Cauchy data


def bump_profile(radius: float, center=None, power: int = 4) -> Callable:
    """``(1 - r^2 / radius^2)_+^power``, a C^{power-1} bump."""
    if radius <= 0:
        raise InvalidInputError("radius must be positive")

    def f(X):
        X = np.asarray(X, dtype=float)
        c = np.zeros(X.shape[-1]) if center is None else np.asarray(center, float)
        r2 = np.sum((X - c) ** 2, axis=-1) / radius**2
        return np.where(r2 < 1.0, np.clip(1.0 - r2, 0.0, None) ** power, 0.0)

    return f


def gaussian_profile(sigma: float, radius: float, center=None) -> Callable:
    """``exp(-r^2 / (2 sigma^2))`` times a smooth cutoff that is 1 for r < radius/2
    and 0 for r >= radius."""
    if sigma <= 0 or radius <= 0:
        raise InvalidInputError("sigma and radius must be positive")

    def smooth(s):
        s = np.clip(s, 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            a = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
            b = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1.0 - s, 1.0)), 0.0)
        return a / (a + b)

    def f(X):
        X = np.asarray(X, dtype=float)
        c = np.zeros(X.shape[-1]) if center is None else np.asarray(center, float)
        r = np.sqrt(np.sum((X - c) ** 2, axis=-1))
        cut = 1.0 - smooth((r - 0.5 * radius) / (0.5 * radius))
        return np.exp(-0.5 * (r / sigma) ** 2) * cut

    return f


def ring_profile(r0: float, width: float, center=None, power: int = 6,
                 derivative: bool = False) -> Callable:
    """``(1 - ((r - r0) / width)^2)_+^power``; with ``derivative`` its radial
    derivative, which as velocity data makes the ring converge."""
    if r0 <= width or width <= 0:
        raise InvalidInputError("need 0 < width < r0")

    def f(X):
        X = np.asarray(X, dtype=float)
        c = np.zeros(X.shape[-1]) if center is None else np.asarray(center, float)
        s = (np.sqrt(np.sum((X - c) ** 2, axis=-1)) - r0) / width
        inside = np.abs(s) < 1.0
        q = np.clip(1.0 - s * s, 0.0, None)
        if derivative:
            return np.where(inside, -2.0 * power * s * q ** (power - 1) / width, 0.0)
        return np.where(inside, q**power, 0.0)

    return f


def profile_from_spec(spec: dict | None, m: int) -> tuple[Callable, float]:
    """Builds ``(profile, support_radius)`` from a data-spec record.

    Records look like ``{"type": "bump", "radius": 2.0, "amplitude": 1.0,
    "center": [0, 0], "power": 4}``, ``{"type": "gaussian", "sigma": 0.5,
    "radius": 2.0}`` or ``{"type": "ring", "r0": 3.0, "width": 0.5,
    "derivative": false}``; ``None`` or ``{"type": "zero"}`` gives the zero field.
    """
    if spec is None:
        return (lambda X: np.zeros(np.asarray(X).shape[:-1])), 0.0
    spec = dict(spec)
    kind = spec.pop("type", None)
    amp = float(spec.pop("amplitude", 1.0))
    center = spec.pop("center", None)
    if center is not None and len(center) != m - 1:
        raise InvalidInputError(f"center must have {m - 1} entries")
    if kind == "zero":
        base, R = (lambda X: np.zeros(np.asarray(X).shape[:-1])), 0.0
    elif kind == "bump":
        R = float(spec.pop("radius", 1.0))
        base = bump_profile(R, center, int(spec.pop("power", 4)))
    elif kind == "ring":
        r0, w = float(spec.pop("r0", 3.0)), float(spec.pop("width", 0.5))
        R = r0 + w
        base = ring_profile(r0, w, center, int(spec.pop("power", 6)),
                            bool(spec.pop("derivative", False)))
    elif kind == "gaussian":
        R = float(spec.pop("radius", 1.0))
        base = gaussian_profile(float(spec.pop("sigma", R / 4)), R, center)
    else:
        raise InvalidInputError(f"unknown data type {kind!r}")
    if spec:
        raise InvalidInputError(f"unknown data keys {sorted(spec)}")
    off = 0.0 if center is None else float(np.linalg.norm(center))
    return (lambda X: amp * base(X)), R + off


@dataclass
class CauchyData:
    """``u = eps f``, ``u_t = eps h`` on ``{t = 0}``; periodic box ``[-extent, extent)^{m-1}``."""

    m: int
    f: Callable
    h: Callable
    eps: float
    extent: float
    dx: float
    support_radius: float

    def __post_init__(self):
        if self.m < 3:
            raise InvalidInputError("m must be at least 3")
        if self.eps < 0:
            raise InvalidInputError("eps must be non-negative")
        if self.extent <= 0 or self.dx <= 0:
            raise InvalidInputError("extent and dx must be positive")
        n = 2 * self.extent / self.dx
        if abs(n - round(n)) > 1e-9 * n:
            raise InvalidInputError("2*extent must be an integer multiple of dx")
        if self.support_radius > self.extent:
            raise InvalidInputError("support radius exceeds the grid extent")

    @property
    def n(self) -> int:
        return int(round(2 * self.extent / self.dx))

    @property
    def axis(self) -> np.ndarray:
        return -self.extent + self.dx * np.arange(self.n)

    def coordinates(self) -> np.ndarray:
        """Grid of x' with shape ``(n,) * (m-1) + (m-1,)``."""
        axes = np.meshgrid(*([self.axis] * (self.m - 1)), indexing="ij")
        return np.stack(axes, axis=-1)

    def fields(self) -> tuple[np.ndarray, np.ndarray]:
        X = self.coordinates()
        f = self.eps * np.asarray(self.f(X), dtype=float)
        h = self.eps * np.asarray(self.h(X), dtype=float)
        r = np.sqrt(np.sum(X**2, axis=-1))
        outside = r > self.support_radius + 1e-12
        for name, v in (("f", f), ("h", h)):
            if not np.all(np.isfinite(v)):
                raise InvalidInputError(f"initial field {name} is not finite")
            if np.any(np.abs(v[outside]) > 0):
                raise InvalidInputError(f"initial field {name} is nonzero outside the support radius")
        return f, h


# ---------------------------------------------------------------------------
# grid state and stencils


@dataclass
class GridState:
    """Two consecutive time levels: ``u_prev`` at ``t - dt`` and ``u`` at ``t``.

    ``ztt``/``vel`` hold ``u_tt`` and the centered ``u_t`` used at level
    ``t - dt`` by the last step (``None`` before the first step).
    """

    u_prev: np.ndarray
    u: np.ndarray
    t: float
    dt: float
    dx: float
    step: int = 0
    cfl_bound: float = DEFAULT_CFL
    ztt: np.ndarray | None = None
    vel: np.ndarray | None = None

    def validate(self):
        if self.dt / self.dx > self.cfl_bound * (1 + 1e-12):
            raise InvalidInputError(
                f"CFL ratio {self.dt / self.dx:.4g} exceeds the bound {self.cfl_bound}")
        if self.u.shape != self.u_prev.shape:
            raise InvalidInputError("time levels have different shapes")
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.u_prev))):
            raise BlowUpError("grid values are not finite", self.t)

    @property
    def m(self) -> int:
        return self.u.ndim + 1


def _d2(u, axis, dx):
    return (np.roll(u, -1, axis) - 2.0 * u + np.roll(u, 1, axis)) / (dx * dx)


def _d1(u, axis, dx):
    return (np.roll(u, -1, axis) - np.roll(u, 1, axis)) / (2.0 * dx)


def laplacian(u, dx) -> np.ndarray:
    return sum(_d2(u, a, dx) for a in range(u.ndim))


def spatial_hessian(u, v, dx, ztt=None) -> np.ndarray:
    """Full m x m Hessian per node from level ``u``, its time derivative ``v``
    and (optionally) ``u_tt``; centered periodic stencils."""
    d = u.ndim
    m = d + 1
    Z = np.zeros(u.shape + (m, m))
    if ztt is not None:
        Z[..., 0, 0] = ztt
    for a in range(d):
        Z[..., a + 1, a + 1] = _d2(u, a, dx)
        Z[..., 0, a + 1] = Z[..., a + 1, 0] = _d1(v, a, dx)
        for b in range(a + 1, d):
            Z[..., a + 1, b + 1] = Z[..., b + 1, a + 1] = _d1(_d1(u, a, dx), b, dx)
    return Z


@dataclass
class Scheme:
    """``nonlinear=False`` forces the right side to zero (linear wave equation).

    ``boundary`` is ``"periodic"`` or ``"absorbing"``; the latter adds a
    damping layer ``sponge * s^2`` over the outer ``sponge_width`` cells.
    ``backend`` is ``"auto"``, ``"cython"`` or ``"python"`` (m = 3 kernel).
    """

    nonlinear: bool = True
    corrector_steps: int = 1
    boundary: str = "periodic"
    sponge: float = 2.0
    sponge_width: int = 8
    backend: str = "auto"

    def __post_init__(self):
        if self.boundary not in ("periodic", "absorbing"):
            raise InvalidInputError(f"unknown boundary {self.boundary!r}")
        if self.backend not in ("auto", "cython", "python"):
            raise InvalidInputError(f"unknown backend {self.backend!r}")
        if self.corrector_steps < 0:
            raise InvalidInputError("corrector_steps must be non-negative")


def _kernel_module(scheme: Scheme):
    from . import _core

    if scheme.backend == "python":
        return _core.python_kernels
    if scheme.backend == "cython":
        if _core.compiled_kernels is None:
            raise InvalidInputError("compiled kernels are not available")
        return _core.compiled_kernels
    return kernels


def _sponge_profile(shape, width, strength):
    d = len(shape)
    sigma = np.zeros(shape)
    for a in range(d):
        n = shape[a]
        idx = np.arange(n)
        dist = np.minimum(idx, n - 1 - idx)
        s = np.clip((width - dist) / max(width, 1), 0.0, 1.0) ** 2
        sh = [1] * d
        sh[a] = n
        sigma = np.maximum(sigma, strength * s.reshape(sh))
    return sigma


def solve_ztt(u, v, dx, scheme: Scheme):
    """``(u_tt, alpha)`` per node, where ``alpha = dF/d zeta_11``."""
    m = u.ndim + 1
    if not scheme.nonlinear:
        return laplacian(u, dx), -np.ones_like(u)
    if m == 3:
        u = np.ascontiguousarray(u, dtype=float)
        v = np.ascontiguousarray(v, dtype=float)
        z = np.empty_like(u)
        a = np.empty_like(u)
        _kernel_module(scheme).z11_m3(u, v, float(dx), z, a)
        return z, a
    Z = spatial_hessian(u, v, dx)
    F0 = sl_operator(Z)
    Z[..., 0, 0] = 1.0
    alpha = sl_operator(Z) - F0
    with np.errstate(divide="ignore", invalid="ignore"):
        return -F0 / alpha, alpha


def _check_alpha(alpha, t):
    amin = float(np.min(np.abs(alpha)))
    if not np.isfinite(amin) or amin < ALPHA_TOL:
        raise BlowUpError(f"coefficient of u_tt degenerated (min |alpha| = {amin:.3e})", t)


def initial_state(data: CauchyData, cfl: float = DEFAULT_CFL, scheme: Scheme | None = None,
                  cfl_bound: float = DEFAULT_CFL) -> GridState:
    """Second-order Taylor start: ``u(dt) = f + dt h + dt^2/2 u_tt(0)``."""
    scheme = scheme or Scheme()
    f, h = data.fields()
    dt = cfl * data.dx
    ztt, alpha = solve_ztt(f, h, data.dx, scheme)
    _check_alpha(alpha, 0.0)
    u1 = f + dt * h + 0.5 * dt * dt * ztt
    st = GridState(f, u1, dt, dt, data.dx, 1, cfl_bound, ztt, h.copy())
    st.validate()
    return st


def cauchy_step(state: GridState, scheme: Scheme | None = None) -> GridState:
    """One leapfrog step with a predictor-corrector for ``u_{t x_j}``."""
    scheme = scheme or Scheme()
    state.validate()
    dt, dx = state.dt, state.dx
    u0, u1 = state.u_prev, state.u
    if state.ztt is not None:
        # u_tt from the previous step stands in for the value at this level
        v = (u1 - u0) / dt + 0.5 * dt * state.ztt
    else:
        v = (u1 - u0) / dt
    if scheme.boundary == "absorbing":
        sig = _sponge_profile(u1.shape, scheme.sponge_width, scheme.sponge)
        damp_p, damp_m = 1.0 + 0.5 * sig * dt, 1.0 - 0.5 * sig * dt
    else:
        damp_p = damp_m = 1.0
    for _ in range(scheme.corrector_steps + 1):
        ztt, alpha = solve_ztt(u1, v, dx, scheme)
        _check_alpha(alpha, state.t)
        u2 = (2.0 * u1 - damp_m * u0 + dt * dt * ztt) / damp_p
        v = (u2 - u0) / (2.0 * dt)
    if not np.all(np.isfinite(u2)) or np.max(np.abs(u2)) > BLOWUP_BOUND:
        raise BlowUpError("solution left the representable range", state.t + dt)
    return GridState(u1, u2, state.t + dt, dt, dx, state.step + 1, state.cfl_bound, ztt,
                     v)


# ---------------------------------------------------------------------------
# monitors


@dataclass
class Monitors:
    sl_residual_max: float
    nondegeneracy_min: float
    energy: float

    def as_tuple(self):
        return (self.sl_residual_max, self.nondegeneracy_min, self.energy)


def discrete_energy(u_prev, u, dt, dx) -> float:
    """Staggered energy ``sum (D_t^+ u)^2 + sum_a D_a^+ u^{n+1} D_a^+ u^n`` times the cell
    volume; conserved exactly by the linear scheme."""
    vt = (u - u_prev) / dt
    e = np.sum(vt * vt)
    for a in range(u.ndim):
        g1 = (np.roll(u, -1, a) - u) / dx
        g0 = (np.roll(u_prev, -1, a) - u_prev) / dx
        e += np.sum(g1 * g0)
    return float(e * dx ** u.ndim)


def monitors(state: GridState) -> Monitors:
    """Residual and ``|det|`` at level ``t - dt`` (the last level with a full
    Hessian) plus the energy between the two stored levels."""
    if state.ztt is None or state.vel is None:
        Z = spatial_hessian(state.u, np.zeros_like(state.u), state.dx)
    else:
        Z = spatial_hessian(state.u_prev, state.vel, state.dx, state.ztt)
    m = Z.shape[-1]
    det = np.linalg.det(np.eye(m) + 1j * Z @ signature_matrix(1, m))
    return Monitors(float(np.max(np.abs(det.imag))), float(np.min(np.abs(det))),
                    discrete_energy(state.u_prev, state.u, state.dt, state.dx))


def spacelike_margin(u, v, ztt, dx) -> float:
    """Minimum eigenvalue of ``(a_ij)`` restricted to ``{t = 0}``, where ``(a_ij)``
    is the inverse of the linearization coefficients."""
    Z = spatial_hessian(u, v, dx, ztt)
    m = Z.shape[-1]
    A = signature_matrix(1, m) + 1j * Z
    det = np.linalg.det(A)
    adj = det[..., None, None] * np.linalg.inv(A)
    a = -adj.real
    a = 0.5 * (a + np.swapaxes(a, -1, -2))
    g = np.linalg.inv(a)
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    lam = np.linalg.eigvalsh(g[..., 1:, 1:])
    return float(np.min(lam))


# ---------------------------------------------------------------------------
# linear-limit oracle


def standing_wave_errors(levels: Sequence[int] = (32, 64, 128), T: float = 1.0,
                         modes=(1, 2), cfl: float = DEFAULT_CFL, scheme: Scheme | None = None):
    """Errors of the scheme with the right side forced to zero against
    ``cos(a x) cos(b y) cos(w t)`` on the periodic box ``[-pi, pi)^2``.

    Returns ``(errors, orders)``; the time step is adjusted so that T is hit exactly.
    """
    scheme = scheme or Scheme(nonlinear=False)
    if scheme.nonlinear:
        raise InvalidInputError("the standing-wave oracle needs the linear scheme")
    a, b = modes
    errs = []
    for n in levels:
        dx = 2 * np.pi / n
        steps = int(math.ceil(T / (cfl * dx)))
        dt = T / steps
        x = -np.pi + dx * np.arange(n)
        X, Y = np.meshgrid(x, x, indexing="ij")
        w = math.sqrt(a * a + b * b)
        f = np.cos(a * X) * np.cos(b * Y)
        ztt, _ = solve_ztt(f, np.zeros_like(f), dx, scheme)
        st = GridState(f, f + 0.5 * dt * dt * ztt, dt, dt, dx, 1, 1.0, ztt, np.zeros_like(f))
        for _ in range(steps - 1):
            st = cauchy_step(st, scheme)
        exact = f * math.cos(w * T)
        errs.append(float(np.max(np.abs(st.u - exact))))
    errs = np.array(errs)
    orders = np.log2(errs[:-1] / errs[1:]) * (np.log(2) / np.log(np.array(levels[1:], float)
                                                               / np.array(levels[:-1], float)))
    return errs, orders


# ---------------------------------------------------------------------------
# null condition for the first-order system in m = 3


@dataclass
class NullCheckReport:
    samples: int
    max_violation_det: float
    max_violation_cofactor: float
    rank_one_nonnull_max: float
    generic_control_min: float
    q0_nonnull_control_min: float
    q0_null_max: float

    @property
    def max_violation(self) -> float:
        return max(self.max_violation_det, self.max_violation_cofactor)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["max_violation"] = self.max_violation
        return d


def _cofactor3(M):
    """Cofactor matrices of a batch of 3 x 3 matrices (no inversion)."""
    C = np.empty_like(M)
    for i in range(3):
        for j in range(3):
            r = [a for a in range(3) if a != i]
            c = [b for b in range(3) if b != j]
            C[..., i, j] = (-1) ** (i + j) * (M[..., r[0], c[0]] * M[..., r[1], c[1]]
                                              - M[..., r[0], c[1]] * M[..., r[1], c[0]])
    return C


def random_null_vectors(n: int, rng: np.random.Generator, m: int = 3) -> np.ndarray:
    """X with ``X_1^2 = X_2^2 + ... + X_m^2`` and random scale and sign."""
    d = rng.normal(size=(n, m - 1))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    r = rng.uniform(0.1, 3.0, size=(n, 1))
    s = rng.choice([-1.0, 1.0], size=(n, 1))
    return np.hstack([s * r, r * d])


def null_substitution(mu, nu, X):
    """``det(mu_b X_i)`` and ``C^{ij} nu_k X_i X_j`` (k = 1..3) for batched samples."""
    M = X[:, :, None] * mu[:, None, :]  # d_i W_j = mu_j X_i
    det = np.linalg.det(M)
    C = _cofactor3(M)
    XX = X[:, :, None] * X[:, None, :]
    cof = np.einsum("nij,nij->n", C, XX)[:, None] * nu  # k = 1..3
    return det, cof


def null_condition_check(samples: int = 10_000, rng: np.random.Generator | None = None
                         ) -> NullCheckReport:
    """Rank-one substitutions along null X into ``det(d_i W_j)`` and
    ``C(dW)^{ij} d_i d_j W_k``, plus controls.

    Controls: a generic (full-rank) substitution, which must give nonzero
    determinants, and the classical null form ``Q0(phi, psi) = g^{ij} d_i phi d_j psi``
    on non-null X, which must be nonzero. Both cubic terms vanish on rank-one
    substitutions for every X, so ``rank_one_nonnull_max`` is reported as an
    observation only.
    """
    rng = rng or np.random.default_rng(0)
    X = random_null_vectors(samples, rng)
    mu = rng.normal(size=(samples, 3))
    nu = rng.normal(size=(samples, 3))
    det, cof = null_substitution(mu, nu, X)
    Xn = rng.normal(size=(samples, 3))
    Xn[:, 0] *= 2.0  # generic, almost surely non-null
    det_n, cof_n = null_substitution(mu, nu, Xn)
    Mg = rng.normal(size=(samples, 3, 3))
    eta = np.array([1.0, -1.0, -1.0])
    q0 = lambda Y: np.sum(eta * Y * Y, axis=1) * mu[:, 0] * mu[:, 1]
    return NullCheckReport(
        samples=samples,
        max_violation_det=float(np.max(np.abs(det))),
        max_violation_cofactor=float(np.max(np.abs(cof))),
        rank_one_nonnull_max=float(max(np.max(np.abs(det_n)), np.max(np.abs(cof_n)))),
        generic_control_min=float(np.min(np.abs(np.linalg.det(Mg)))),
        q0_nonnull_control_min=float(np.min(np.abs(q0(Xn)))),
        q0_null_max=float(np.max(np.abs(q0(X)))),
    )


# ---------------------------------------------------------------------------
# space-time slab


def _fd4_d1(a, axis, h, periodic):
    if periodic:
        r = lambda s: np.roll(a, -s, axis)
        return (-r(2) + 8 * r(1) - 8 * r(-1) + r(-2)) / (12 * h)
    out = np.full(a.shape, np.nan)
    sl = lambda s: tuple(slice(2 + s, a.shape[axis] - 2 + s) if i == axis else slice(None)
                         for i in range(a.ndim))
    core = tuple(slice(2, a.shape[axis] - 2) if i == axis else slice(None) for i in range(a.ndim))
    out[core] = (-a[sl(2)] + 8 * a[sl(1)] - 8 * a[sl(-1)] + a[sl(-2)]) / (12 * h)
    return out


def _fd4_d2(a, axis, h, periodic):
    if periodic:
        r = lambda s: np.roll(a, -s, axis)
        return (-r(2) + 16 * r(1) - 30 * a + 16 * r(-1) - r(-2)) / (12 * h * h)
    out = np.full(a.shape, np.nan)
    sl = lambda s: tuple(slice(2 + s, a.shape[axis] - 2 + s) if i == axis else slice(None)
                         for i in range(a.ndim))
    out[sl(0)] = (-a[sl(2)] + 16 * a[sl(1)] - 30 * a[sl(0)] + 16 * a[sl(-1)] - a[sl(-2)]) / (
        12 * h * h)
    return out


@dataclass
class Slab:
    """Stored levels ``levels[i]`` at ``times[i]`` on the spatial axis ``axis``."""

    levels: np.ndarray
    times: np.ndarray
    axis: np.ndarray
    dx: float
    dt: float

    @property
    def m(self) -> int:
        return self.levels.ndim

    def derivatives(self):
        """Gradient (m, ...) and Hessian (m, m, ...) at all nodes by 4th-order
        stencils (time edges are NaN)."""
        u = self.levels
        m = u.ndim
        hs = [self.dt] + [self.dx] * (m - 1)
        per = [False] + [True] * (m - 1)
        grad = np.stack([_fd4_d1(u, a, hs[a], per[a]) for a in range(m)])
        H = np.empty((m, m) + u.shape)
        for a in range(m):
            H[a, a] = _fd4_d2(u, a, hs[a], per[a])
            for b in range(a + 1, m):
                H[a, b] = H[b, a] = _fd4_d1(grad[a], b, hs[b], per[b])
        return grad, H

    def residual(self, margin: int = 4) -> float:
        """``max |Im det(I + i Hess I_{1,m})|`` over slab nodes away from the time edges."""
        _, H = self.derivatives()
        Z = np.moveaxis(H, (0, 1), (-2, -1))[margin:-margin]
        return float(np.max(np.abs(sl_operator(Z))))


def solution_to_potential(slab: Slab, window: tuple[float, float]) -> PotentialField:
    """PotentialField in ``(t, x')`` with linearly interpolated 4th-order derivatives."""
    from scipy.interpolate import RegularGridInterpolator

    t0, t1 = window
    lo, hi = slab.times[2], slab.times[-3]
    if not (lo - 1e-12 <= t0 < t1 <= hi + 1e-12):
        raise InvalidInputError(f"window {window} outside the computed slab [{lo}, {hi}]")
    grad, H = slab.derivatives()
    m = slab.m
    sel = slice(2, len(slab.times) - 2)
    coords = (slab.times[sel],) + (slab.axis,) * (m - 1)
    iu = RegularGridInterpolator(coords, slab.levels[sel])
    ig = RegularGridInterpolator(coords, np.moveaxis(grad[:, sel], 0, -1))
    ih = RegularGridInterpolator(coords, np.moveaxis(H[:, :, sel], (0, 1), (-2, -1)))

    def inside(x):
        x = np.asarray(x, dtype=float)
        if not (t0 - 1e-12 <= x[0] <= t1 + 1e-12):
            raise InvalidInputError(f"time {x[0]} outside the window {window}")
        return x[None, :]

    return PotentialField(
        m,
        value=lambda x: float(iu(inside(x))[0]),
        gradient=lambda x: ig(inside(x))[0],
        hessian=lambda x: ih(inside(x))[0],
        step=1e-4,
    )


# ---------------------------------------------------------------------------
# runs


@dataclass
class RunConfig:
    m: int = 3
    eps: float = 1e-3
    extent: float = 12.0
    dx: float = 0.1875
    cfl: float = DEFAULT_CFL
    T: float = 10.0
    data: dict = field(default_factory=lambda: {"f": {"type": "gaussian", "sigma": 0.5,
                                                      "radius": 2.0}, "h": None})
    boundary: str = "periodic"
    output_cadence: int = 1
    snapshot_cadence: int = 0
    slab_window: list | None = None
    nonlinear: bool = True
    backend: str = "auto"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        bad = sorted(set(d) - known)
        if bad:
            raise InvalidInputError(f"unknown run-config keys {bad}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def validate(self):
        if self.m < 3:
            raise InvalidInputError("m must be at least 3")
        if not 0 < self.cfl <= DEFAULT_CFL:
            raise InvalidInputError(f"CFL must lie in (0, {DEFAULT_CFL}]")
        if self.T <= 0 or self.output_cadence < 1 or self.snapshot_cadence < 0:
            raise InvalidInputError("T, output_cadence or snapshot_cadence out of range")
        if not isinstance(self.data, dict) or set(self.data) - {"f", "h"}:
            raise InvalidInputError("data must be a record with keys 'f' and 'h'")
        Scheme(boundary=self.boundary, backend=self.backend)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class RunResult:
    config: RunConfig
    rows: list  # (step, t, sl_residual_max, nondegeneracy_min, energy, max_abs_u)
    spacelike_margin: float
    final: GridState
    slab: Slab | None = None
    snapshots: list = field(default_factory=list)  # (step, t, array)
    blowup: BlowUpError | None = None
    backend: str = BACKEND

    @property
    def energy_growth(self) -> float:
        e0 = self.rows[0][4]
        if e0 == 0:
            return 0.0
        return max(abs(r[4] - e0) for r in self.rows) / abs(e0)

    @property
    def nondegeneracy_min(self) -> float:
        return min(r[3] for r in self.rows)

    @property
    def max_abs_u(self) -> float:
        return max(r[5] for r in self.rows)

    def csv_rows(self) -> list:
        head = ["step", "t", "sl_residual_max", "nondegeneracy_min", "energy", "max_abs_u"]
        return [head] + [[r[0]] + [repr(float(x)) for x in r[1:]] for r in self.rows]


def make_cauchy_data(cfg: RunConfig) -> CauchyData:
    f, Rf = profile_from_spec(cfg.data.get("f"), cfg.m)
    h, Rh = profile_from_spec(cfg.data.get("h"), cfg.m)
    R = max(Rf, Rh)
    data = CauchyData(cfg.m, f, h, cfg.eps, cfg.extent, cfg.dx, R)
    if cfg.boundary == "periodic" and cfg.extent < cfg.T + R:
        raise InvalidInputError(
            f"periodic box too small: extent {cfg.extent} < T + support radius {cfg.T + R}")
    return data


def run(cfg: RunConfig) -> RunResult:
    """Integrates to T; blow-up is recorded in the result rather than raised."""
    cfg.validate()
    data = make_cauchy_data(cfg)
    scheme = Scheme(nonlinear=cfg.nonlinear, boundary=cfg.boundary, backend=cfg.backend)
    steps = int(math.ceil(cfg.T / (cfg.cfl * data.dx) - 1e-9))
    dt = cfg.T / steps
    cfl = dt / data.dx
    f, h = data.fields()
    ztt0, alpha0 = solve_ztt(f, h, data.dx, scheme)
    _check_alpha(alpha0, 0.0)
    margin = spacelike_margin(f, h, ztt0, data.dx)
    if margin < SPACELIKE_MARGIN:
        raise InvalidInputError(
            f"initial surface is not spacelike with margin {SPACELIKE_MARGIN} (margin {margin:.3e})")
    state = initial_state(data, cfl, scheme)
    rows = []
    snaps = []
    window = cfg.slab_window
    slab_levels, slab_times = [], []

    def record(st):
        mon = monitors(st)
        rows.append((st.step, st.t, mon.sl_residual_max, mon.nondegeneracy_min, mon.energy,
                     float(np.max(np.abs(st.u)))))
        if mon.nondegeneracy_min < NONDEGENERACY_FLOOR:
            raise BlowUpError("graph became degenerate", st.t)

    def keep(level, t):
        if window is not None and window[0] - 3 * dt <= t <= window[1] + 3 * dt:
            slab_levels.append(level.copy())
            slab_times.append(t)

    keep(state.u_prev, 0.0)
    keep(state.u, state.t)
    if cfg.snapshot_cadence:
        snaps.append((0, 0.0, state.u_prev.copy()))
    blow = None
    try:
        record(state)
        while state.step < steps:
            state = cauchy_step(state, scheme)
            keep(state.u, state.t)
            if state.step % cfg.output_cadence == 0 or state.step == steps:
                record(state)
            if cfg.snapshot_cadence and state.step % cfg.snapshot_cadence == 0:
                snaps.append((state.step, state.t, state.u.copy()))
    except BlowUpError as exc:
        blow = exc
    slab = None
    if slab_levels:
        slab = Slab(np.array(slab_levels), np.array(slab_times), data.axis, data.dx, dt)
    return RunResult(cfg, rows, margin, state, slab, snaps, blow)


def write_snapshots(path, snapshots, dx: float, dt: float):
    """Writes ``[(step, t, array), ...]`` in the layout described in the module docstring."""
    if not snapshots:
        dims = ()
    else:
        dims = snapshots[0][2].shape
    with open(path, "wb") as fh:
        fh.write(b"INDEFSL\0")
        fh.write(struct.pack("<II", 1, len(dims)))
        fh.write(struct.pack(f"<{len(dims)}Q", *dims))
        fh.write(struct.pack("<ddQ", dx, dt, len(snapshots)))
        for step, t, arr in snapshots:
            if arr.shape != dims:
                raise InvalidInputError("snapshots must share one shape")
            fh.write(struct.pack("<Qd", int(step), float(t)))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_snapshots(path):
    """Inverse of :func:`write_snapshots`: ``(dims, dx, dt, [(step, t, array)])``."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:8] != b"INDEFSL\0":
        raise InvalidInputError("not an indefsl snapshot file")
    version, nd = struct.unpack_from("<II", buf, 8)
    if version != 1:
        raise InvalidInputError(f"unsupported snapshot version {version}")
    off = 16
    dims = struct.unpack_from(f"<{nd}Q", buf, off)
    off += 8 * nd
    dx, dt, count = struct.unpack_from("<ddQ", buf, off)
    off += 24
    size = int(np.prod(dims)) if nd else 0
    out = []
    for _ in range(count):
        step, t = struct.unpack_from("<Qd", buf, off)
        off += 16
        arr = np.frombuffer(buf, dtype="<f8", count=size, offset=off).reshape(dims).copy()
        off += 8 * size
        out.append((step, t, arr))
    return tuple(dims), dx, dt, out
