import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from indefsl import _core
from indefsl.errors import BlowUpError, InvalidInputError
from indefsl.hypersolve import (
    SIGN_M3, CauchyData, GridState, RunConfig, Scheme, box_of, cauchy_step, discrete_energy,
    gaussian_profile, initial_state, make_cauchy_data, monitors, null_condition_check,
    profile_from_spec, read_snapshots, rhs_nonlinearity, run, sl_operator, solution_to_potential,
    solve_ztt, spatial_hessian, standing_wave_errors, write_snapshots,
)

needs_compiled = pytest.mark.skipif(_core.compiled_kernels is None, reason="extension not built")

RING = {"f": {"type": "ring", "r0": 4, "width": 0.6},
        "h": {"type": "ring", "r0": 4, "width": 0.6, "derivative": True}}


def random_sym(rng, shape, m):
    A = rng.normal(size=shape + (m, m))
    return 0.5 * (A + np.swapaxes(A, -1, -2))


def smooth_fields(n=32, extent=4.0, eps=0.05):
    dx = 2 * extent / n
    x = -extent + dx * np.arange(n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    return eps * np.exp(-(X**2 + Y**2)), eps * 0.5 * np.exp(-((X - 0.3) ** 2 + Y**2)), dx


class TestNonlinearity:
    def test_m3_sign_symbolic(self):
        import sympy as sp

        z = sp.symbols("z11 z12 z13 z22 z23 z33", real=True)
        Z = sp.Matrix([[z[0], z[1], z[2]], [z[1], z[3], z[4]], [z[2], z[4], z[5]]])
        I = sp.diag(-1, 1, 1)
        F = sp.im(sp.expand((sp.eye(3) + sp.I * Z * I).det()))
        box = z[0] - z[3] - z[5]
        assert sp.simplify(F + box - SIGN_M3 * Z.det()) == 0

    def test_m3_matches_det(self, rng):
        Z = random_sym(rng, (50,), 3)
        np.testing.assert_allclose(rhs_nonlinearity(3, Z), SIGN_M3 * np.linalg.det(Z),
                                   atol=1e-12)

    @pytest.mark.parametrize("m", [3, 4, 5])
    def test_no_quadratic_part(self, rng, m):
        # f(s Z) / s^3 stays bounded as s -> 0: the nonlinearity starts at cubic order
        Z = random_sym(rng, (), m)
        r = [rhs_nonlinearity(m, s * Z) / s**3 for s in (1e-2, 5e-3)]
        assert r[0] == pytest.approx(r[1], rel=2e-2, abs=1e-6)

    def test_batched_operator(self, rng):
        Z = random_sym(rng, (4, 5), 4)
        I = np.diag([-1.0, 1, 1, 1])
        loop = np.array([[np.linalg.det(np.eye(4) + 1j * Z[i, j] @ I).imag for j in range(5)]
                         for i in range(4)])
        np.testing.assert_allclose(sl_operator(Z), loop, atol=1e-12)
        assert box_of(np.diag([3.0, 1.0, 1.0]))[()] == 1.0

    def test_rejects_small_m(self):
        with pytest.raises(InvalidInputError):
            rhs_nonlinearity(2, np.eye(2))


class TestKernels:
    def test_python_kernel_solves_equation(self):
        f, h, dx = smooth_fields()
        ztt, alpha = solve_ztt(f, h, dx, Scheme(backend="python"))
        Z = spatial_hessian(f, h, dx, ztt)
        assert np.max(np.abs(sl_operator(Z))) < 1e-14
        assert np.all(alpha < 0)

    def test_m3_kernel_matches_general_path(self):
        f, h, dx = smooth_fields()
        z3, a3 = solve_ztt(f, h, dx, Scheme(backend="python"))
        Z = spatial_hessian(f, h, dx)
        F0 = sl_operator(Z)
        Z[..., 0, 0] = 1.0
        alpha = sl_operator(Z) - F0
        np.testing.assert_allclose(z3, -F0 / alpha, atol=1e-14)
        np.testing.assert_allclose(a3, alpha, atol=1e-13)

    @needs_compiled
    def test_compiled_matches_python(self):
        f, h, dx = smooth_fields(48)
        zp, ap = solve_ztt(f, h, dx, Scheme(backend="python"))
        zc, ac = solve_ztt(f, h, dx, Scheme(backend="cython"))
        np.testing.assert_allclose(zc, zp, rtol=0, atol=1e-16)
        np.testing.assert_allclose(ac, ap, rtol=0, atol=1e-15)

    def test_linear_scheme_uses_laplacian(self):
        f, h, dx = smooth_fields()
        ztt, alpha = solve_ztt(f, h, dx, Scheme(nonlinear=False))
        Z = spatial_hessian(f, h, dx)
        np.testing.assert_allclose(ztt, Z[..., 1, 1] + Z[..., 2, 2])
        assert np.all(alpha == -1)

    @pytest.mark.parametrize("kw", [{"boundary": "wall"}, {"backend": "gpu"},
                                    {"corrector_steps": -1}])
    def test_scheme_validation(self, kw):
        with pytest.raises(InvalidInputError):
            Scheme(**kw)


class TestLinearLimit:
    def test_second_order_convergence(self):
        errs, orders = standing_wave_errors((32, 64, 128), T=1.0)
        assert np.all(np.diff(errs) < 0)
        assert np.all((orders > 1.7) & (orders < 2.3))

    def test_energy_conserved(self):
        n = 32
        dx = 2 * np.pi / n
        x = -np.pi + dx * np.arange(n)
        X, Y = np.meshgrid(x, x, indexing="ij")
        f = np.cos(X) * np.cos(2 * Y)
        scheme = Scheme(nonlinear=False)
        dt = 0.4 * dx
        ztt, _ = solve_ztt(f, 0 * f, dx, scheme)
        st = GridState(f, f + 0.5 * dt * dt * ztt, dt, dt, dx, 1, 1.0, ztt, 0 * f)
        e0 = discrete_energy(st.u_prev, st.u, dt, dx)
        for _ in range(100):
            st = cauchy_step(st, scheme)
        assert discrete_energy(st.u_prev, st.u, dt, dx) == pytest.approx(e0, rel=1e-11)

    def test_time_reversal(self, rng):
        scheme = Scheme(nonlinear=False)
        u0 = rng.normal(size=(16, 16))
        u1 = u0 + 0.01 * rng.normal(size=(16, 16))
        st = GridState(u0, u1, 0.1, 0.1, 0.5, 1, 1.0)
        for _ in range(20):
            st = cauchy_step(st, scheme)
        back = GridState(st.u, st.u_prev, 0.0, 0.1, 0.5, 1, 1.0)
        for _ in range(20):
            back = cauchy_step(back, scheme)
        np.testing.assert_allclose(back.u, u0, atol=1e-9)

    def test_cfl_enforced(self):
        st = GridState(np.zeros((4, 4)), np.zeros((4, 4)), 0.1, 0.5, 0.5)
        with pytest.raises(InvalidInputError):
            cauchy_step(st)


class TestCauchyData:
    def test_gaussian_compact_support(self):
        g = gaussian_profile(0.5, 2.0)
        X = np.array([[2.5, 0.0], [0.0, 0.0], [1.0, 1.0]])
        v = g(X)
        assert v[0] == 0 and v[1] == pytest.approx(1.0) and 0 < v[2] < 1

    def test_grid_must_divide(self):
        f, _ = profile_from_spec(None, 3)
        with pytest.raises(InvalidInputError):
            CauchyData(3, f, f, 0.1, 1.0, 0.3, 0.0)

    def test_negative_eps(self):
        f, _ = profile_from_spec(None, 3)
        with pytest.raises(InvalidInputError):
            CauchyData(3, f, f, -0.1, 1.0, 0.25, 0.0)

    @pytest.mark.parametrize("spec", [{"type": "bump", "radius": 1, "colour": 2},
                                      {"type": "square"}, {"type": "bump", "center": [0]}])
    def test_bad_specs(self, spec):
        with pytest.raises(InvalidInputError):
            profile_from_spec(spec, 3)

    def test_support_violation(self):
        f = lambda X: np.ones(X.shape[:-1])
        with pytest.raises(InvalidInputError):
            CauchyData(3, f, f, 0.1, 2.0, 0.25, 1.0).fields()

    def test_initial_state_taylor(self):
        f, R = profile_from_spec({"type": "gaussian", "sigma": 0.5, "radius": 2.0}, 3)
        data = CauchyData(3, f, f, 1e-3, 4.0, 0.25, R)
        st = initial_state(data)
        f0, h0 = data.fields()
        np.testing.assert_allclose(st.u, f0 + st.dt * h0 + 0.5 * st.dt**2 * st.ztt, atol=1e-18)
        assert st.step == 1 and st.t == pytest.approx(0.1)


class TestRuns:
    def test_small_eps_stability(self):
        res = run(RunConfig(T=3.0, extent=6.0))
        assert res.blowup is None
        assert res.energy_growth < 0.05 and res.nondegeneracy_min > 0.5
        assert res.max_abs_u < 1e-3 * 1.01

    def test_zero_data_stays_zero(self):
        res = run(RunConfig(eps=0.0, T=1.0, extent=3.0))
        assert res.max_abs_u == 0 and res.energy_growth == 0

    def test_m4_run(self):
        cfg = RunConfig(m=4, eps=1e-2, extent=3.0, dx=0.25, T=0.5,
                        data={"f": {"type": "gaussian", "sigma": 0.5, "radius": 2.0}, "h": None})
        res = run(cfg)
        assert res.blowup is None and res.final.u.shape == (24, 24, 24)
        assert max(r[2] for r in res.rows[1:]) < 1e-8

    @needs_compiled
    def test_backends_agree(self):
        rows = [run(RunConfig(T=1.0, extent=4.5, backend=b)).rows for b in ("python", "cython")]
        np.testing.assert_allclose(np.array(rows[0]), np.array(rows[1]), rtol=1e-12, atol=1e-18)

    def test_monitor_residual_decays_with_eps(self):
        # the corrector mismatch is higher than cubic order in eps
        r = [max(row[2] for row in run(RunConfig(eps=e, T=1.0, extent=6.0)).rows[1:])
             for e in (0.05, 0.025)]
        assert r[0] < 1e-6
        assert r[0] / r[1] > 8.0

    def test_blowup_recorded(self):
        cfg = RunConfig(eps=0.05, extent=10.0, dx=0.125, T=5.0, data=RING)
        res = run(cfg)
        assert isinstance(res.blowup, BlowUpError) and 0 < res.blowup.time < 5.0

    def test_margin_failure(self):
        with pytest.raises(InvalidInputError, match="spacelike"):
            run(RunConfig(eps=1.0, T=1.0, extent=3.375))

    def test_absorbing_boundary_loses_energy(self):
        data = {"f": {"type": "gaussian", "sigma": 0.5, "radius": 2.0}, "h": None}
        res = run(RunConfig(T=8.0, extent=4.5, boundary="absorbing", data=data))
        assert res.rows[-1][4] < 0.2 * res.rows[0][4]

    @pytest.mark.parametrize("kw", [{"cfl": 0.5}, {"m": 2}, {"T": -1.0},
                                    {"data": {"g": None}}, {"boundary": "wall"}])
    def test_config_validation(self, kw):
        with pytest.raises(InvalidInputError):
            RunConfig(**kw).validate()

    def test_unknown_config_key(self):
        with pytest.raises(InvalidInputError):
            RunConfig.from_dict({"speed": 1})

    def test_periodic_box_too_small(self):
        with pytest.raises(InvalidInputError, match="periodic box"):
            make_cauchy_data(RunConfig(T=10.0, extent=6.0))

    def test_config_roundtrip(self):
        cfg = RunConfig(T=2.0)
        assert RunConfig.from_dict(cfg.to_dict()) == cfg


@pytest.fixture(scope="module")
def slab_result():
    data = {"f": {"type": "gaussian", "sigma": 0.6, "radius": 2.5},
                "h": {"type": "gaussian", "sigma": 0.5, "radius": 2.5}}
    return run(RunConfig(eps=0.05, extent=4.0, dx=0.125, T=1.5, slab_window=[0.5, 1.0], data=data))


class TestSlab:

    def test_slab_residual_small(self, slab_result):
        # O(dx^2) truncation of the second-order scheme at dx = 0.125
        assert slab_result.slab.residual() < 5e-3

    def test_potential_interpolant(self, slab_result):
        pot = solution_to_potential(slab_result.slab, (0.6, 0.9))
        x = np.array([0.7, 0.1, -0.2])
        assert pot.hess(x).shape == (3, 3)
        with pytest.raises(InvalidInputError):
            pot.hess(np.array([0.95, 0.0, 0.0]))
        with pytest.raises(InvalidInputError):
            solution_to_potential(slab_result.slab, (0.0, 0.9))


class TestSnapshots:
    def test_roundtrip(self, tmp_path, rng):
        snaps = [(i, 0.1 * i, rng.normal(size=(3, 4))) for i in range(3)]
        p = tmp_path / "s.bin"
        write_snapshots(p, snaps, 0.5, 0.1)
        dims, dx, dt, out = read_snapshots(p)
        assert dims == (3, 4) and dx == 0.5 and dt == 0.1
        for (s0, t0, a0), (s1, t1, a1) in zip(snaps, out):
            assert s0 == s1 and t0 == t1
            np.testing.assert_array_equal(a0, a1)
        assert p.stat().st_size == 8 + 8 + 16 + 24 + 3 * (16 + 8 * 12)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.bin"
        p.write_bytes(b"NOTASNAP" + bytes(40))
        with pytest.raises(InvalidInputError):
            read_snapshots(p)

    def test_run_snapshots(self):
        res = run(RunConfig(T=1.0, extent=4.5, snapshot_cadence=3))
        assert res.snapshots[0][0] == 0 and all(s[0] % 3 == 0 for s in res.snapshots)


class TestNullCondition:
    def test_null_substitutions_vanish(self):
        rep = null_condition_check(2000, np.random.default_rng(0))
        assert rep.max_violation < 1e-10
        assert rep.generic_control_min > 0 and rep.q0_nonnull_control_min > 0
        assert rep.q0_null_max < 1e-10

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31))
    def test_seeds(self, seed):
        rep = null_condition_check(200, np.random.default_rng(seed))
        assert rep.max_violation < 1e-10 and rep.q0_nonnull_control_min > 1e-12

    def test_monitors_on_flat_state(self):
        st = GridState(np.zeros((8, 8)), np.zeros((8, 8)), 0.1, 0.1, 0.5)
        mon = monitors(st)
        assert mon.as_tuple() == (0.0, 1.0, 0.0)
