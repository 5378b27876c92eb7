import math

import numpy as np
import pytest

from mdrdf import (
    DistortionPair,
    LagrangePair,
    ThetaPair,
    evaluate,
    fit_lambdas,
    flat_spectrum,
    high_rate_approx,
    ozarow_rate,
    r0,
    sweep,
    theta_to_distortions,
)
from mdrdf.errors import DomainError, TargetInfeasible
from mdrdf.rdf import rate_density


class TestEvaluate:
    def test_worked_example_cosine(self, example1_point):
        pt = example1_point
        assert pt.rate_bits == pytest.approx(0.7468, abs=1e-3)
        assert pt.d_side == pytest.approx(0.4000, abs=1e-3)
        assert pt.d_central == pytest.approx(0.0801, abs=1e-3)

    def test_flat_source_matches_single_frequency(self):
        lam = LagrangePair(0.9, 1.7)
        pt = evaluate(flat_spectrum(1.0, 512), lam)
        tp = pt.spectra.theta_plus
        tm = pt.spectra.theta_minus
        assert np.ptp(tp) == 0.0 and np.ptp(tm) == 0.0  # flat optimal spectra
        assert pt.rate == pytest.approx(r0(1.0, ThetaPair(tp[0], tm[0])), rel=1e-12)

    def test_tiny_multipliers_zero_rate(self):
        pt = evaluate(flat_spectrum(2.0, 256), LagrangePair(1e-9, 1e-9))
        assert pt.rate == 0.0
        assert pt.d_side == pytest.approx(2.0, rel=1e-12)
        assert pt.d_central == pytest.approx(2.0, rel=1e-12)
        assert np.all(pt.spectra.boundary_mask)

    def test_invariants_on_random_points(self, cosine):
        rng = np.random.default_rng(40)
        for _ in range(20):
            lam = LagrangePair(
                math.exp(rng.uniform(-3, 3)), math.exp(rng.uniform(-3, 3))
            )
            pt = evaluate(cosine, lam)
            assert 0.0 <= pt.d_central <= pt.d_side <= cosine.variance * (1 + 1e-9)
            assert pt.rate >= 0.0

    def test_white_source_reduction_to_closed_form(self):
        # for flat spectra the rate equals the closed form at the induced pair
        rng = np.random.default_rng(41)
        for _ in range(50):
            sigma2 = math.exp(rng.uniform(math.log(0.2), math.log(5.0)))
            lam = LagrangePair(
                math.exp(rng.uniform(math.log(0.05), math.log(30.0))),
                math.exp(rng.uniform(math.log(0.05), math.log(30.0))),
            )
            pt = evaluate(flat_spectrum(sigma2, 128), lam)
            if pt.rate == 0.0:
                continue
            oz = ozarow_rate(sigma2, DistortionPair(pt.d_side, pt.d_central))
            assert abs(pt.rate - oz) < 1e-6


class TestRateDensity:
    def test_zero_rate_corner(self):
        assert rate_density(1.0, 0.5, 0.5) == 0.0

    def test_one_bit(self):
        assert rate_density(1.0, 0.125, 0.125) == pytest.approx(math.log(2), rel=1e-12)

    def test_integral_reproduces_example1_rate(self, example1_point, cosine):
        tp = example1_point.spectra.theta_plus
        tm = example1_point.spectra.theta_minus
        total = np.mean(
            [
                rate_density(S, p, m)
                for S, p, m in zip(cosine.values, tp, tm)
            ]
        )
        assert total / math.log(2) == pytest.approx(0.7468, abs=1e-3)

    def test_domain_guard(self):
        with pytest.raises(DomainError):
            rate_density(1.0, 0.4, 0.3)


class TestFit:
    def test_example1_inverse(self, cosine):
        pt = fit_lambdas(cosine, DistortionPair(0.4, 0.08), tol=1e-9)
        assert pt.lambdas.lambda1 == pytest.approx(0.238, rel=0.02)
        assert pt.lambdas.lambda2 == pytest.approx(2.70, rel=0.02)
        assert pt.rate_bits <= 0.7468 + 1e-3
        assert pt.d_side == pytest.approx(0.4, abs=1e-9)
        assert pt.d_central == pytest.approx(0.08, abs=1e-9)

    def test_flat_matches_closed_form(self):
        target = theta_to_distortions(1.0, ThetaPair(0.1, 0.1))
        pt = fit_lambdas(flat_spectrum(1.0, 128), target, tol=1e-9)
        want = ozarow_rate(1.0, target)
        assert abs(pt.rate - want) < 1e-4

    def test_zero_rate_target(self):
        pt = fit_lambdas(flat_spectrum(1.0, 128), DistortionPair(1.0, 1.0))
        assert pt.rate == 0.0

    def test_infeasible_targets(self):
        with pytest.raises(TargetInfeasible):
            fit_lambdas(flat_spectrum(1.0, 128), DistortionPair(1.5, 0.5))

    def test_slack_central_constraint_returns_feasible_min_rate(self):
        # (0.5, 0.45) has the central constraint inactive: no equality fit
        # exists, the result must still satisfy both as inequalities
        pt = fit_lambdas(flat_spectrum(1.0, 128), DistortionPair(0.5, 0.45), tol=1e-6)
        assert pt.d_side <= 0.5 + 1e-6
        assert pt.d_central <= 0.45 + 1e-6

    def test_lower_envelope(self, cosine, example1_point):
        # no multiplier pair meeting the solved point's distortions beats its rate
        target_ds = example1_point.d_side
        target_dc = example1_point.d_central
        fitted = fit_lambdas(cosine, DistortionPair(target_ds, target_dc), tol=1e-9)
        rng = np.random.default_rng(42)
        for _ in range(40):
            lam = LagrangePair(
                math.exp(rng.uniform(-4, 4)), math.exp(rng.uniform(-4, 4))
            )
            pt = evaluate(cosine, lam)
            if pt.d_side <= target_ds + 1e-9 and pt.d_central <= target_dc + 1e-9:
                assert pt.rate >= fitted.rate - 1e-6


class TestHighRateApprox:
    def test_formula(self):
        t = high_rate_approx(LagrangePair(4.0, 3.0))
        assert t.theta_minus == pytest.approx(1.0 / 16.0, rel=1e-15)
        assert t.theta_plus == pytest.approx(1.0 / 28.0, rel=1e-15)

    def test_limits_against_exact(self):
        from mdrdf import solve_frequency

        lam = LagrangePair(1e4, 1e6)
        for S in (0.5, 1.0, 2.0):
            sol = solve_frequency(S, lam)
            assert abs(lam.lambda1 * sol.theta_minus - 0.25) < 1e-2
            assert abs((lam.lambda1 + lam.lambda2) * sol.theta_plus - 0.25) < 1e-2

    def test_error_decreases_along_diagonal(self):
        from mdrdf import solve_frequency

        errs = []
        for t in (10.0, 100.0, 1000.0):
            lam = LagrangePair(t, t)
            sol = solve_frequency(1.0, lam)
            approx = high_rate_approx(lam)
            errs.append(
                abs(sol.theta_minus - approx.theta_minus) / approx.theta_minus
                + abs(sol.theta_plus - approx.theta_plus) / approx.theta_plus
            )
        assert errs[0] > errs[1] > errs[2]


class TestSweep:
    def test_row_count_and_invariants(self, cosine):
        grid1 = [0.1, 1.0, 10.0]
        grid2 = [0.5, 5.0]
        points = sweep(cosine, grid1, grid2)
        assert len(points) == 6
        for pt in points:
            assert 0.0 <= pt.d_central <= pt.d_side <= cosine.variance * (1 + 1e-9)
            assert pt.rate >= 0.0

    def test_monotone_distortions(self, cosine):
        # D_S nonincreasing in lambda1 at fixed lambda2 = 3, and D_C
        # nonincreasing in lambda2 at fixed lambda1 = 3; rate nondecreasing
        l1s = np.exp(np.linspace(math.log(0.05), math.log(30), 12))
        pts = [evaluate(cosine, LagrangePair(l1, 3.0)) for l1 in l1s]
        ds = [p.d_side for p in pts]
        rates = [p.rate for p in pts]
        assert all(a >= b - 1e-12 for a, b in zip(ds, ds[1:]))
        assert all(a <= b + 1e-12 for a, b in zip(rates, rates[1:]))
        l2s = np.exp(np.linspace(math.log(0.05), math.log(30), 12))
        pts = [evaluate(cosine, LagrangePair(3.0, l2)) for l2 in l2s]
        dc = [p.d_central for p in pts]
        rates = [p.rate for p in pts]
        assert all(a >= b - 1e-12 for a, b in zip(dc, dc[1:]))
        assert all(a <= b + 1e-12 for a, b in zip(rates, rates[1:]))

    def test_zero_rate_band_contract(self, cosine, example1_point):
        # boundary frequencies contribute zero rate and D = S exactly
        mask = example1_point.spectra.boundary_mask
        tp = example1_point.spectra.theta_plus[mask]
        tm = example1_point.spectra.theta_minus[mask]
        S = cosine.values[mask]
        assert np.allclose(tp, S / 2) and np.allclose(tm, S / 2)
