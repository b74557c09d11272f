import math

import numpy as np
import pytest

from cslbec.core import (
    CslPoint,
    ExperimentSpec,
    InitialState,
    MziGeometry,
    NoiseModel,
    Protocol,
    RUBIDIUM_87,
    Species,
    SwiGeometry,
)
from cslbec.dynamics import phase_variance
from cslbec.geometry import f_closed, optimal_rc
from cslbec.inference import (
    ExcessVarianceError,
    MODES,
    calibrate_estimator,
    exclusion_curve,
    fisher_information,
    lambda_bound,
    repetitions,
    table1,
    variance_split,
)
from cslbec.scenarios import SCENARIOS

OPT = math.sqrt(2.0 / 3.0)

RB_MZI = SCENARIOS["rb-mzi"]
RB_SWI = SCENARIOS["rb-swi"]
CS_MZI = SCENARIOS["cs-mzi"]
RB_ECHO = SCENARIOS["rb-swi-echo"]

PAPER_K = {"rb-mzi": 2086, "rb-swi": 3381, "cs-mzi": 1033,
           "rb-swi-echo": 3065}
PAPER_K15 = {"rb-mzi": 3775, "rb-swi": 6423, "cs-mzi": 1692,
             "rb-swi-echo": 5771}


def random_spec(rng, mode):
    n_atoms = int(rng.integers(1_000, 1_000_000))
    xi0 = float(rng.uniform(0.5, 2.0))
    t = float(rng.uniform(0.1, 2.0))
    if mode == "mzi":
        geometry = MziGeometry(delta_x=float(rng.uniform(5e-6, 2e-5)),
                               w_x=float(rng.uniform(5e-8, 3e-7)))
        zeta, echo = 0.0, False
    else:
        geometry = SwiGeometry(x0=float(rng.uniform(5e-8, 1e-6)))
        zeta = float(rng.uniform(1e-4, 1e-2))
        echo = mode == "swi_echo"
    xi_t = xi0 * float(rng.uniform(1.01, 1.5))
    return ExperimentSpec(
        species=RUBIDIUM_87,
        geometry=geometry,
        state=InitialState(n_atoms=n_atoms, xi0=xi0),
        protocol=Protocol(t=t, zeta=zeta, echo=echo),
        noise=NoiseModel(),
        xi_t=xi_t,
    )


class TestVarianceSplit:
    def test_mzi_direct_identification(self):
        spec = RB_MZI.spec
        rc = 1e-6
        split = variance_split(spec, rc, "mzi")
        assert split.sigma_conv_sq == pytest.approx(
            0.9 ** 2 / 300_000, rel=1e-12)
        f_p = f_closed(spec.geometry, rc).f_p
        assert split.alpha_csl_sq == pytest.approx(
            2.0 * 86.909180 ** 2 * 0.8 * f_p, rel=1e-12)

    def test_intercept_is_zero_lambda_variance(self):
        cases = [(RB_MZI, "mzi"), (RB_SWI, "swi_plain"),
                 (RB_ECHO, "swi_echo")]
        for sc, mode in cases:
            split = variance_split(sc.spec, sc.rc, mode)
            pv = phase_variance(sc.spec, CslPoint(0.0, sc.rc)).variance
            # abs term absorbs float cancellation of the echo composition,
            # whose intermediate dispersion variance is ~8000 rad^2
            assert split.sigma_conv_sq == pytest.approx(pv, rel=1e-12,
                                                        abs=1e-10)

    @pytest.mark.parametrize("sc,mode", [(RB_MZI, "mzi"),
                                         (RB_SWI, "swi_plain")])
    def test_slope_matches_forward_model(self, sc, mode):
        split = variance_split(sc.spec, sc.rc, mode)
        l1, l2 = 1e-12, 7e-12
        v1 = phase_variance(sc.spec, CslPoint(l1, sc.rc)).variance
        v2 = phase_variance(sc.spec, CslPoint(l2, sc.rc)).variance
        assert (v2 - v1) / (l2 - l1) == pytest.approx(
            split.alpha_csl_sq, rel=1e-12)

    def test_echo_slope_drops_dephasing(self):
        # the echo inference slope is the forward-model slope minus the
        # dephasing contribution 2 (m/u)^2 t f_P, dropped on purpose
        sc = RB_ECHO
        split = variance_split(sc.spec, sc.rc, "swi_echo")
        # probe lambdas large enough that the slope contribution dominates
        # the composition's float-cancellation noise (~4e-12 rad^2)
        l1, l2 = 1e-13, 1e-12
        v1 = phase_variance(sc.spec, CslPoint(l1, sc.rc)).variance
        v2 = phase_variance(sc.spec, CslPoint(l2, sc.rc)).variance
        forward = (v2 - v1) / (l2 - l1)
        f_p = f_closed(sc.spec.geometry, sc.rc).f_p
        dephasing = 2.0 * 86.909180 ** 2 * sc.spec.protocol.t * f_p
        assert forward - dephasing == pytest.approx(
            split.alpha_csl_sq, rel=1e-8)
        assert split.alpha_csl_sq < forward

    def test_noise_inflation(self):
        spec = RB_MZI.spec
        noisy = ExperimentSpec(
            species=spec.species, geometry=spec.geometry, state=spec.state,
            protocol=spec.protocol, noise=NoiseModel(gamma=0.01),
            xi_t=spec.xi_t)
        base = variance_split(noisy, 1e-6, "mzi")
        infl = variance_split(noisy, 1e-6, "mzi", include_noise=True)
        assert infl.sigma_conv_sq - base.sigma_conv_sq == pytest.approx(
            2.0 * 0.01 * 0.8, rel=1e-12)

    def test_invalid_mode(self):
        with pytest.raises(ValueError, match="mode"):
            variance_split(RB_MZI.spec, 1e-6, "ramsey")


class TestLambdaBound:
    def test_mzi_hand_evaluated(self):
        # lambda = (u/m)^2 (xi_t^2 - xi0^2) / (2 N t f_P), f_P = 1
        bound = lambda_bound(RB_MZI.spec, 1e-6, "mzi", fp_cap_one=True)
        by_hand = (1.1 ** 2 - 0.9 ** 2) / 300_000 \
            / (2.0 * 86.909180 ** 2 * 0.8)
        assert bound == pytest.approx(by_hand, rel=1e-12)
        assert bound == pytest.approx(1.103284328489337e-10, rel=1e-9)

    def test_echo_hand_evaluated(self):
        # lambda = 12 (u/m)^2 (xi_t^2 - xi0^2) / (N^3 t^3 zeta^2 f_S)
        sc = RB_ECHO
        bound = lambda_bound(sc.spec, sc.rc, "swi_echo")
        f_s = f_closed(sc.spec.geometry, sc.rc).f_s
        by_hand = 12.0 * (1.15 ** 2 - 1.0) \
            / (86.909180 ** 2 * 50_000 ** 3 * 0.2 ** 3 * 4.0 ** 2 * f_s)
        assert bound == pytest.approx(by_hand, rel=1e-12)
        assert bound == pytest.approx(9.434816072105962e-17, rel=1e-9)

    def test_no_excess_gives_zero(self):
        spec = ExperimentSpec(
            species=RUBIDIUM_87,
            geometry=MziGeometry(delta_x=10e-6, w_x=100e-9),
            state=InitialState(n_atoms=10_000, xi0=1.0),
            protocol=Protocol(t=1.0),
            noise=NoiseModel(),
            xi_t=1.0,
        )
        assert lambda_bound(spec, 1e-6, "mzi") == 0.0

    def test_negative_excess_raises(self):
        spec = ExperimentSpec(
            species=RUBIDIUM_87,
            geometry=MziGeometry(delta_x=10e-6, w_x=100e-9),
            state=InitialState(n_atoms=10_000, xi0=1.0),
            protocol=Protocol(t=1.0),
            noise=NoiseModel(),
            xi_t=0.8,
        )
        with pytest.raises(ExcessVarianceError):
            lambda_bound(spec, 1e-6, "mzi")

    def test_requires_xi_t(self):
        spec = ExperimentSpec(
            species=RUBIDIUM_87,
            geometry=MziGeometry(delta_x=10e-6, w_x=100e-9),
            state=InitialState(n_atoms=10_000, xi0=1.0),
            protocol=Protocol(t=1.0),
            noise=NoiseModel(),
        )
        with pytest.raises(ValueError, match="xi_t"):
            lambda_bound(spec, 1e-6, "mzi")

    @pytest.mark.parametrize("mode", MODES)
    def test_equivalent_to_published_inversions(self, mode):
        # the generic linear inversion agrees with the three dedicated
        # bound formulas written out independently here
        rng = np.random.default_rng(hash(mode) % 2 ** 32)
        for _ in range(100):
            spec = random_spec(rng, mode)
            rc = float(rng.uniform(3e-8, 3e-6))
            f = f_closed(spec.geometry, rc)
            n = spec.state.n_atoms
            t = spec.protocol.t
            zeta = spec.protocol.zeta
            m_sq = spec.species.mass_u ** 2
            excess = spec.xi_t ** 2 - spec.state.xi0 ** 2 \
                - zeta ** 2 * t ** 2 * n * spec.state.sigma_n0 ** 2
            if mode == "mzi":
                expected = excess / (2.0 * n * t * m_sq * f.f_p)
            elif mode == "swi_plain":
                expected = excess / (2.0 * n * t * m_sq
                                     * (f.f_p + n ** 2 / 6.0 * zeta ** 2
                                        * t ** 2 * f.f_s))
            else:
                expected = 12.0 * (spec.xi_t ** 2 - spec.state.xi0 ** 2) \
                    / (m_sq * n ** 3 * t ** 3 * zeta ** 2 * f.f_s)
            if excess < 0 and mode != "swi_echo":
                with pytest.raises(ExcessVarianceError):
                    lambda_bound(spec, rc, mode)
                continue
            assert lambda_bound(spec, rc, mode) == pytest.approx(
                expected, rel=1e-12)


class TestExclusionCurve:
    def test_mzi_curve_shape_and_minimum(self):
        grid = np.geomspace(1e-9, 1e-3, 200)
        curve = exclusion_curve(RB_MZI.spec, "mzi", grid, label="rb")
        assert curve.label == "rb"
        vals = curve.lambda_bound
        assert not np.any(np.isnan(vals))
        low = float(np.nanmin(vals))
        assert low == pytest.approx(1.1e-10, rel=0.05)
        # U shape: both ends far above the minimum
        assert vals[0] > 100 * low and vals[-1] > 100 * low

    def test_swi_echo_minimum_location(self):
        grid = np.geomspace(1e-8, 1e-5, 400)
        curve = exclusion_curve(RB_ECHO.spec, "swi_echo", grid)
        i = int(np.nanargmin(curve.lambda_bound))
        rc_star = optimal_rc(RB_ECHO.spec.geometry)
        # minimum within one grid cell of the analytic optimum
        assert grid[max(i - 1, 0)] <= rc_star <= grid[min(i + 1, len(grid) - 1)]
        assert curve.lambda_bound[i] == pytest.approx(0.943e-16, rel=0.01)

    def test_undefined_points_become_gaps(self):
        # echo inference with zeta = 0 has zero slope everywhere
        spec = ExperimentSpec(
            species=RUBIDIUM_87,
            geometry=SwiGeometry(x0=100e-9),
            state=InitialState(n_atoms=1_000, xi0=1.0),
            protocol=Protocol(t=0.2, zeta=0.0, echo=True),
            noise=NoiseModel(),
            xi_t=1.2,
        )
        curve = exclusion_curve(spec, "swi_echo", np.geomspace(1e-8, 1e-6, 5))
        assert np.all(np.isnan(curve.lambda_bound))


class TestRepetitions:
    def test_negligible_conventional_noise(self):
        # c -> 0 gives the pure statistics floor k = 2 / delta^2
        spec = ExperimentSpec(
            species=RUBIDIUM_87,
            geometry=MziGeometry(delta_x=10e-6, w_x=100e-9),
            state=InitialState(n_atoms=1_000_000, xi0=1e-6),
            protocol=Protocol(t=1.0),
            noise=NoiseModel(),
        )
        est = repetitions(spec, 1e-6, "mzi", lambda_min=1e-6, delta=0.1)
        assert est.k == 200
        assert est.k_inflated == 200

    def test_paper_rows(self):
        for name, sc in (("rb-mzi", RB_MZI), ("cs-mzi", CS_MZI)):
            est = repetitions(sc.spec, sc.rc, sc.mode,
                              lambda_min=sc.lambda_min, delta=0.1,
                              fp_cap_one=True)
            assert est.k == pytest.approx(PAPER_K[name], rel=0.03)
            assert est.k_inflated == pytest.approx(PAPER_K15[name], rel=0.03)

    def test_lambda_min_defaults_to_bound(self):
        est = repetitions(RB_MZI.spec, 1e-6, "mzi", fp_cap_one=True)
        assert est.lambda_min == pytest.approx(
            lambda_bound(RB_MZI.spec, 1e-6, "mzi", fp_cap_one=True),
            rel=1e-12)

    def test_monotonicity_in_lambda_min(self):
        ks = [repetitions(RB_MZI.spec, 1e-6, "mzi", lambda_min=lam,
                          delta=0.1).k
              for lam in (1e-11, 1e-10, 1e-9)]
        assert ks[0] >= ks[1] >= ks[2]
        assert all(k >= 200 for k in ks)

    def test_inflation_identity(self):
        for sc in (RB_MZI, RB_SWI, CS_MZI, RB_ECHO):
            split = variance_split(sc.spec, sc.rc, sc.mode,
                                   fp_cap_one=sc.mode == "mzi")
            c = split.sigma_conv_sq / (sc.lambda_min * split.alpha_csl_sq)
            est = repetitions(sc.spec, sc.rc, sc.mode,
                              lambda_min=sc.lambda_min, delta=0.1,
                              fp_cap_one=sc.mode == "mzi")
            assert est.k == math.ceil(200.0 * (1.0 + c) ** 2)
            assert est.k_inflated == math.ceil(200.0 * (1.0 + 1.5 * c) ** 2)
            assert est.k_inflated >= est.k

    def test_fisher_information_relation(self):
        split = variance_split(RB_MZI.spec, 1e-6, "mzi", fp_cap_one=True)
        lam = 1e-10
        fi = fisher_information(split, lam)
        assert fi == pytest.approx(
            1.0 / (2.0 * (split.sigma_conv_sq / split.alpha_csl_sq
                          + lam) ** 2), rel=1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            repetitions(RB_MZI.spec, 1e-6, "mzi", lambda_min=0.0)
        with pytest.raises(ValueError):
            repetitions(RB_MZI.spec, 1e-6, "mzi", lambda_min=1e-10,
                        delta=0.0)


class TestTable1:
    def test_matches_paper_within_tolerance(self):
        rows = table1()
        assert [name for name, _, _ in rows] == [
            "rb-mzi", "rb-swi", "cs-mzi", "rb-swi-echo"]
        for name, _, est in rows:
            assert est.k == pytest.approx(PAPER_K[name], rel=0.03)
            assert est.k_inflated == pytest.approx(PAPER_K15[name], rel=0.03)

    def test_row_invariants(self):
        for _, _, est in table1():
            assert est.k >= 200
            assert est.k_inflated >= est.k


class TestCalibrateEstimator:
    def make_unit_spec(self, lam_scale=1.0):
        return ExperimentSpec(
            species=Species("unit", 1.0),
            geometry=SwiGeometry(x0=1.0, w_y=1.0 / math.sqrt(6.0)),
            state=InitialState(n_atoms=1_000, xi0=1.0),
            protocol=Protocol(t=1.0, zeta=1e-3),
            noise=NoiseModel(),
        )

    def test_null_calibration(self):
        spec = ExperimentSpec(
            species=RUBIDIUM_87,
            geometry=MziGeometry(delta_x=10e-6, w_x=100e-9),
            state=InitialState(n_atoms=10_000, xi0=1.0),
            protocol=Protocol(t=1.0),
            noise=NoiseModel(),
        )
        res = calibrate_estimator(spec, 1e-6, "mzi", lambda_true=0.0,
                                  k=2000, seed=5)
        se = res.lambda_hat_spread / math.sqrt(res.n_meta)
        assert abs(res.lambda_hat_mean) < 3.0 * se

    def test_spread_reaches_cr_floor(self):
        spec = self.make_unit_spec()
        res = calibrate_estimator(spec, OPT, "swi_plain", lambda_true=0.01,
                                  k=500, seed=17, n_meta=800)
        # sample-variance spread is within a few percent of the floor for
        # Gaussian counts; allow Monte Carlo wobble
        assert res.lambda_hat_spread == pytest.approx(res.cr_floor, rel=0.1)
        assert res.lambda_hat_mean == pytest.approx(
            0.01, abs=3.0 * res.lambda_hat_spread / math.sqrt(res.n_meta))

    def test_deterministic_by_seed(self):
        spec = self.make_unit_spec()
        a = calibrate_estimator(spec, OPT, "swi_plain", 0.01, 200, seed=1)
        b = calibrate_estimator(spec, OPT, "swi_plain", 0.01, 200, seed=1)
        c = calibrate_estimator(spec, OPT, "swi_plain", 0.01, 200, seed=2)
        assert a.lambda_hat_spread == b.lambda_hat_spread
        assert a.lambda_hat_spread != c.lambda_hat_spread

    def test_requires_minimum_k(self):
        with pytest.raises(ValueError, match="k"):
            calibrate_estimator(self.make_unit_spec(), OPT, "swi_plain",
                                0.01, 50, seed=1)
