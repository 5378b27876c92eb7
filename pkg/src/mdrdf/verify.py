"""Self-contained analytical property suites behind `mdrdf verify`.

Each suite returns (name, passed, detail). These duplicate the heart of
the test suite in a form that runs from an installed package without
pytest, as a post-install smoke check.
"""

from __future__ import annotations

import math

import numpy as np

from . import spectral_solver as ss
from .rdf import evaluate, high_rate_approx
from .spectra import flat_spectrum
from .spectral_solver import (
    LagrangePair,
    appendix_roots,
    brute_force_frequency,
    cubic_roots,
    discriminant,
    discriminant_product_form,
    lagrangian_gradient,
    solve_frequency,
)
from .white_md import ThetaPair, ozarow_rate, r0, theta_to_distortions


def _random_triples(rng, count, s_range=(0.01, 100.0), l_range=(0.01, 100.0)):
    S = np.exp(rng.uniform(math.log(s_range[0]), math.log(s_range[1]), count))
    l1 = np.exp(rng.uniform(math.log(l_range[0]), math.log(l_range[1]), count))
    l2 = np.exp(rng.uniform(math.log(l_range[0]), math.log(l_range[1]), count))
    return zip(S, l1, l2)


def _relative_residual(diag, x) -> float:
    poly = x**3 + diag.a2 * x**2 + diag.a1 * x + diag.a0
    scale = max(1.0, abs(diag.a0), abs(diag.a1 * x), abs(diag.a2 * x * x), abs(x) ** 3)
    return abs(poly) / scale


def check_cubic_residuals(count=2000, seed=11):
    worst = 0.0
    for S, l1, l2 in _random_triples(np.random.default_rng(seed), count):
        diag = discriminant(S, LagrangePair(l1, l2))
        for x in cubic_roots(diag):
            worst = max(worst, _relative_residual(diag, x))
    return worst < 1e-9, f"worst relative residual {worst:.3g}"


def check_root_ordering(count=2000, seed=12):
    checked = 0
    for S, l1, l2 in _random_triples(np.random.default_rng(seed), count):
        diag = discriminant(S, LagrangePair(l1, l2))
        if diag.xi >= 0:
            continue
        x1, x2, x3 = cubic_roots(diag)
        checked += 1
        if not (x1 >= x3 >= x2):
            return False, f"ordering violated at S={S}, l=({l1},{l2})"
        if not (x3 > 0.5 * S):
            return False, f"x3 <= S/2 at S={S}, l=({l1},{l2})"
    return True, f"{checked} negative-discriminant cases"


def check_appendix_roots(count=400, seed=13):
    rng = np.random.default_rng(seed)
    for S, l1, _ in _random_triples(rng, count):
        roots = appendix_roots(S, l1)
        _, _, xi2, xi3 = roots["xi_disc"]
        want = 1.0 / (4.0 * S) - l1
        if xi3 <= 0:
            return False, f"xi3 <= 0 at S={S}, l1={l1}"
        if abs(want) > 1e-9 and math.copysign(1, xi2) != math.copysign(1, want):
            return False, f"sign(xi2) mismatch at S={S}, l1={l1}"
        for lam2 in (xi2, xi3):
            if lam2 <= 0:
                continue
            diag = discriminant(S, LagrangePair(l1, lam2))
            scale = max(diag.q * diag.q, abs(diag.p) ** 3)
            if abs(diag.xi) > 1e-8 * scale:
                return False, f"xi({lam2}) != 0 at S={S}, l1={l1}"
    return True, f"{count} sweeps"


def check_discriminant_consistency(count=800, seed=14):
    worst = 0.0
    for S, l1, l2 in _random_triples(np.random.default_rng(seed), count):
        diag = discriminant(S, LagrangePair(l1, l2))
        prod = discriminant_product_form(S, l1, l2)
        scale = max(abs(diag.xi), abs(prod), diag.q * diag.q, abs(diag.p) ** 3)
        if scale > 0:
            worst = max(worst, abs(diag.xi - prod) / scale)
        # p, q closed forms against the coefficient forms
        p_ab = diag.a1 / 3.0 - diag.a2**2 / 9.0
        q_ab = (diag.a1 * diag.a2 - 3.0 * diag.a0) / 6.0 - diag.a2**3 / 27.0
        sp = max(1.0, abs(diag.p))
        sq = max(1.0, abs(diag.q))
        worst = max(worst, abs(diag.p - p_ab) / sp, abs(diag.q - q_ab) / sq)
    return worst < 1e-8, f"worst relative gap {worst:.3g}"


def check_high_rate_limits():
    lam = LagrangePair(1e4, 1e6)
    for S in (0.5, 1.0, 2.0):
        sol = solve_frequency(S, lam)
        if abs(lam.lambda1 * sol.theta_minus - 0.25) >= 1e-2:
            return False, f"lambda1*theta_minus off at S={S}"
        if abs((lam.lambda1 + lam.lambda2) * sol.theta_plus - 0.25) >= 1e-2:
            return False, f"(l1+l2)*theta_plus off at S={S}"
    sol = solve_frequency(2.0, LagrangePair(4.0, 3.0))
    tm_db = 10.0 * math.log10(sol.theta_minus)
    tp_db = 10.0 * math.log10(sol.theta_plus)
    if abs(tm_db - (-12.04)) > 1.0 or abs(tp_db - (-14.47)) > 1.0:
        return False, f"asymptotes ({tm_db:.2f}, {tp_db:.2f}) dB out of range"
    ref = high_rate_approx(LagrangePair(1e4, 1e6))
    if abs(1e4 * ref.theta_minus - 0.25) > 1e-12:
        return False, "high_rate_approx inconsistent"
    return True, "Prop-5 limits and the S=2 asymptotes"


def check_white_reduction(count=50, seed=15, grid_size=64):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        sigma2 = math.exp(rng.uniform(math.log(0.1), math.log(10.0)))
        lam = LagrangePair(
            math.exp(rng.uniform(math.log(0.05), math.log(50.0))),
            math.exp(rng.uniform(math.log(0.05), math.log(50.0))),
        )
        pt = evaluate(flat_spectrum(sigma2, grid_size), lam)
        if pt.rate <= 0:
            continue
        oz = ozarow_rate(sigma2, theta_to_distortions(
            sigma2, ThetaPair(float(pt.spectra.theta_plus[0]), float(pt.spectra.theta_minus[0]))
        ))
        r0v = r0(sigma2, ThetaPair(
            float(pt.spectra.theta_plus[0]), float(pt.spectra.theta_minus[0])
        ))
        worst = max(worst, abs(pt.rate - oz), abs(pt.rate - r0v))
    return worst < 1e-6, f"worst rate gap {worst:.3g} nats"


def check_gradient_residuals(count=500, seed=16):
    worst = 0.0
    for S, l1, l2 in _random_triples(np.random.default_rng(seed), count):
        lam = LagrangePair(l1, l2)
        sol = solve_frequency(S, lam)
        if sol.on_boundary:
            continue
        gp, gm = lagrangian_gradient(S, sol.theta_plus, sol.theta_minus, lam)
        worst = max(worst, abs(gp), abs(gm))
    return worst < 1e-8, f"worst gradient residual {worst:.3g}"


def check_oracle_equivalence(count=60, seed=17):
    worst = 0.0
    for S, l1, l2 in _random_triples(np.random.default_rng(seed), count):
        lam = LagrangePair(l1, l2)
        sol = solve_frequency(S, lam)
        tp_b, tm_b = brute_force_frequency(S, lam, grid=200)
        worst = max(worst, abs(sol.theta_plus - tp_b), abs(sol.theta_minus - tm_b))
    return worst < 1e-6, f"worst |theta| gap {worst:.3g} over {count} triples"


SUITES = [
    ("cubic-residuals", check_cubic_residuals),
    ("root-ordering", check_root_ordering),
    ("appendix-roots", check_appendix_roots),
    ("discriminant-consistency", check_discriminant_consistency),
    ("high-rate-limits", check_high_rate_limits),
    ("white-source-reduction", check_white_reduction),
    ("gradient-residuals", check_gradient_residuals),
    ("oracle-equivalence", check_oracle_equivalence),
]


def run_all(perturb_cubic: float = 0.0):
    """Run every suite; optionally perturb the cubic to prove detection."""
    results = []
    original = ss.cubic_coeffs
    if perturb_cubic:
        def perturbed(S, lam):
            a2, a1, a0 = original(S, lam)
            return a2, a1 * (1.0 + perturb_cubic) + perturb_cubic, a0

        ss.cubic_coeffs = perturbed
    try:
        for name, fn in SUITES:
            try:
                ok, detail = fn()
            except Exception as e:  # a suite crash is a failure, not an abort
                ok, detail = False, f"exception: {e!r}"
            results.append((name, ok, detail))
    finally:
        ss.cubic_coeffs = original
    return results
