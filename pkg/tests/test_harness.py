from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from freessep.harness import (
    HarnessState,
    delta_harness_evolve,
    delta_harness_sandwich,
    harness_evolve,
    min_difference,
    rescaled_harness,
    shifted,
    sup_distance,
    theta_step,
    traveling_wave,
    traveling_wave_deviation,
)
from freessep.macro import MacroInterface, stationary_profile
from freessep.macro import sup_distance as macro_sup


def brute_force(K0: HarnessState, J: float, n: int, W: int = 400) -> np.ndarray:
    """Dense iteration on a fixed window with exact cone tails at the edges."""
    x = np.arange(-W, W + 1)
    K = K0.on(-W, W)
    for k in range(1, n + 1):
        c = K0.c + 2 * J * (k - 1)
        left = abs(-W - 1) + c
        pad = np.concatenate([[left], K, [left]])
        K = np.maximum(0.5 * (pad[:-2] + pad[2:]), np.abs(x) + K0.c + 2 * J * k)
    return K


def smooth_state(a: float, b: float, W: int) -> HarnessState:
    return HarnessState.from_function(lambda x: a * x * x + b, -W, W, 0.0)


class TestTheta:
    def test_quadratic(self):
        K = smooth_state(0.25, 3.0, 50)
        out = theta_step(K)
        # interior of the window, away from the cone tails
        x = np.arange(-40, 41)
        np.testing.assert_allclose(out(x), 0.25 * x * x + 3.0 + 0.25)

    def test_kink(self):
        out = theta_step(HarnessState.cone())
        x = np.arange(-6, 7)
        np.testing.assert_array_equal(out(x), np.where(x == 0, 1.0, np.abs(x)))

    def test_linear_unchanged(self):
        K = HarnessState.from_function(lambda x: 0.3 * x + 20.0, -10, 10, 0.0)
        x = np.arange(-8, 9)
        np.testing.assert_allclose(theta_step(K)(x), 0.3 * x + 20.0)

    @given(st.lists(st.floats(0, 5), min_size=5, max_size=5), st.lists(st.floats(0, 5), min_size=5, max_size=5))
    def test_order_and_contraction(self, a, b):
        base = np.abs(np.arange(-2, 3)).astype(float)
        A = HarnessState(-2, base + np.array(a))
        B = HarnessState(-2, base + np.maximum(np.array(a), np.array(b)))
        assert min_difference(theta_step(B), theta_step(A)) >= 0
        assert sup_distance(theta_step(A), theta_step(B)) <= sup_distance(A, B) + 1e-12


class TestEvolve:
    def test_zero_rate_is_heat(self):
        K = harness_evolve(HarnessState.cone(), 0.0, 5)
        H = HarnessState.cone()
        for _ in range(5):
            H = theta_step(H)
        assert sup_distance(K, H) == 0.0

    def test_one_step_from_cone(self):
        J = 0.1
        K = harness_evolve(HarnessState.cone(), J, 1)
        x = np.arange(-5, 6)
        theta = np.where(x == 0, 1.0, np.abs(x).astype(float))
        np.testing.assert_allclose(K(x), np.maximum(theta, np.abs(x) + 2 * J))
        assert K.c == pytest.approx(2 * J)
        assert K(0) == 1.0

    @pytest.mark.parametrize("J", [0.05, 0.07, 0.2])
    def test_matches_brute_force(self, J):
        K0 = HarnessState.from_function(lambda x: max(abs(x), 6 - 0.5 * abs(x)), -12, 12)
        K = harness_evolve(K0, J, 60)
        np.testing.assert_allclose(K.on(-400, 400), brute_force(K0, J, 60), atol=1e-12)

    def test_above_cone(self):
        K = harness_evolve(HarnessState.cone(), 0.3, 40)
        assert K.cone_defect() == 0.0
        assert K.c == pytest.approx(2 * 0.3 * 40)

    def test_history(self):
        K, hist = harness_evolve(HarnessState.cone(), 0.1, 10, keep_every=5)
        assert [h.n for h in hist] == [0, 5, 10]
        assert sup_distance(hist[-1], K) == 0.0

    def test_window_contains_origin(self):
        with pytest.raises(ValueError):
            HarnessState(1, np.array([1.0]))

    def test_csv(self, tmp_path):
        K = harness_evolve(HarnessState.cone(), 0.1, 3)
        p = tmp_path / "k.csv"
        K.to_csv(p)
        lines = p.read_text().splitlines()
        assert lines[0].startswith("# J=0.1 n=3")
        assert lines[1] == "x,K"


class TestTravelingWave:
    def test_values(self):
        K = traveling_wave(0.05)
        assert K(0) == 2.5
        assert K(5) == pytest.approx(5.0)
        assert K(4) == pytest.approx(2.5 + 0.1 * 16)
        assert K(-9) == 9.0

    def test_exact_translation(self):
        assert traveling_wave_deviation(0.05, 100) < 1e-12

    def test_matches_brute_force(self):
        K0 = traveling_wave(0.05)
        dense = brute_force(K0, 0.05, 100)
        np.testing.assert_allclose(dense, K0.on(-400, 400) + 2 * 0.05 * 100, atol=1e-12)

    def test_noninteger_width_reported(self):
        # 1/(4J) not an integer: the profile is not an exact lattice wave
        assert traveling_wave_deviation(0.07, 50) > 1e-6

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            traveling_wave(0.0)


class TestDelta:
    def test_unit_block_is_exact(self):
        K0 = traveling_wave(0.1)
        a = delta_harness_evolve(K0, 0.1, 1, 30, "-")
        assert sup_distance(a, harness_evolve(K0, 0.1, 30)) == 0.0

    def test_zero_rate_all_equal(self):
        K0 = HarnessState.cone()
        a = delta_harness_evolve(K0, 0.0, 4, 20, "-")
        b = delta_harness_evolve(K0, 0.0, 4, 20, "+")
        c = harness_evolve(K0, 0.0, 20)
        assert sup_distance(a, c) == 0.0 and sup_distance(b, c) == 0.0

    @pytest.mark.parametrize("J,d", [(0.05, 3), (0.05, 5), (0.1, 4), (0.02, 10)])
    def test_sandwich_and_gap(self, J, d):
        s = delta_harness_sandwich(traveling_wave(0.05), J, d, 120)
        assert s.order_defect <= 1e-12
        assert s.max_gap <= 2 * J * d + 1e-12

    def test_sign_check(self):
        with pytest.raises(ValueError):
            delta_harness_evolve(HarnessState.cone(), 0.1, 2, 5, "x")


class TestRescaled:
    def test_time_zero_is_rounding(self):
        _, phi = stationary_profile(1.0, 1e-3)
        out = rescaled_harness(phi, 1.0, 0.02, 0.0)
        assert macro_sup(out, phi) < 0.02

    def test_stationary(self):
        j, t = 1.0, 0.5
        _, phi = stationary_profile(j, 1e-3)
        target = MacroInterface(phi.h, phi.xs, phi.ys + 2 * j * t, phi.c + 2 * j * t)
        errs = [macro_sup(rescaled_harness(phi, j, eps, t), target) for eps in (0.04, 0.02)]
        assert errs[0] < 0.05 and errs[1] < 0.05

    def test_overflow_guard(self):
        with pytest.raises(OverflowError):
            rescaled_harness(MacroInterface.cone(0.0, 1e-3), 1.0, 1e-4, 1.0, max_steps=1000)

    def test_shifted(self):
        K = shifted(HarnessState.cone(), 0.5)
        assert K(3) == 3.5
