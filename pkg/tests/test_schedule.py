import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trajood.schedule import NoiseSchedule, forward_noise, make_linear_schedule


def test_constant_beta_product():
    s = make_linear_schedule(2, 0.5, 0.5)
    np.testing.assert_array_equal(s.beta, [0.5, 0.5])
    np.testing.assert_allclose(s.alpha_bar, [0.5, 0.25], rtol=0, atol=0)


def test_three_step_hand_values():
    s = make_linear_schedule(3, 0.1, 0.3)
    np.testing.assert_allclose(s.beta, [0.1, 0.2, 0.3], rtol=1e-15)
    np.testing.assert_allclose(s.alpha_bar, [0.9, 0.72, 0.504], rtol=1e-14)


def test_default_schedule_invariants():
    s = make_linear_schedule()
    assert s.steps == 10
    assert s.beta[0] == 1e-4 and s.beta[-1] == 0.02
    assert np.all(np.diff(s.alpha_bar) < 0)
    assert 0 < s.alpha_bar_at(10) < 1


@given(
    steps=st.integers(2, 200),
    lo=st.floats(1e-6, 0.5),
    width=st.floats(0.0, 0.49),
)
def test_alpha_bar_matches_product(steps, lo, width):
    hi = lo + width
    s = make_linear_schedule(steps, lo, hi)
    assert np.all((s.beta > 0) & (s.beta < 1))
    for t in (1, steps // 2 + 1, steps):
        prod = 1.0
        for b in s.beta[:t]:
            prod *= 1.0 - b
        assert abs(s.alpha_bar_at(t) - prod) <= 1e-12 * prod


def test_deterministic_bitwise():
    a = make_linear_schedule(10, 1e-4, 0.02)
    b = make_linear_schedule(10, 1e-4, 0.02)
    assert a.beta.tobytes() == b.beta.tobytes()
    assert a.alpha_bar.tobytes() == b.alpha_bar.tobytes()
    assert a == b and hash(a) == hash(b)


@pytest.mark.parametrize(
    "args",
    [(0, 0.1, 0.2), (-3, 0.1, 0.2), (10, 0.0, 0.2), (10, 0.1, 1.0), (10, 0.3, 0.2), (2.5, 0.1, 0.2), (1, 0.1, 0.2)],
)
def test_rejects_bad_arguments(args):
    with pytest.raises(ValueError):
        make_linear_schedule(*args)


def test_single_step_schedule_allowed_with_equal_betas():
    s = make_linear_schedule(1, 0.3, 0.3)
    assert s.steps == 1 and s.alpha_bar_at(1) == pytest.approx(0.7)


def test_schedule_is_immutable():
    s = make_linear_schedule()
    with pytest.raises(ValueError):
        s.beta[0] = 0.5


def test_dict_round_trip():
    s = make_linear_schedule(7, 1e-3, 0.05)
    assert NoiseSchedule.from_dict(s.to_dict()) == s
    assert s.to_dict() == {"steps": 7, "beta_start": 1e-3, "beta_end": 0.05}


class TestForwardNoise:
    def test_zero_input(self):
        s = make_linear_schedule()
        eps = np.array([0.3, -1.2, 2.0])
        for t in (1, 5, 10):
            out = forward_noise(np.zeros(3), t, eps, s)
            np.testing.assert_array_equal(out, np.sqrt(1 - s.alpha_bar_at(t)) * eps)

    def test_noiseless(self):
        s = make_linear_schedule()
        x0 = np.array([1.5, -0.5])
        out = forward_noise(x0, 4, np.zeros(2), s)
        np.testing.assert_array_equal(out, np.sqrt(s.alpha_bar_at(4)) * x0)

    def test_hand_arithmetic(self):
        # alpha_bar at t=2 is 0.25 for the constant-0.5 schedule
        s = make_linear_schedule(2, 0.5, 0.5)
        out = forward_noise(np.array([1.0, 0.0]), 2, np.array([0.0, 1.0]), s)
        np.testing.assert_allclose(out, [0.5, np.sqrt(0.75)], rtol=1e-15)

    def test_errors(self):
        s = make_linear_schedule()
        with pytest.raises(ValueError):
            forward_noise(np.zeros(3), 1, np.zeros(2), s)
        for t in (0, 11, -1):
            with pytest.raises(ValueError):
                forward_noise(np.zeros(2), t, np.zeros(2), s)

    @pytest.mark.parametrize("t,seed", [(1, 0), (3, 1), (7, 2), (10, 3)])
    def test_expected_squared_norm(self, t, seed):
        s = make_linear_schedule()
        rng = np.random.default_rng(seed)
        d, n = 6, 20_000
        x0 = rng.normal(size=d) * 2
        eps = rng.standard_normal((n, d))
        norms = np.sum(forward_noise(np.broadcast_to(x0, (n, d)), t, eps, s) ** 2, axis=1)
        ab = s.alpha_bar_at(t)
        expected = ab * x0 @ x0 + (1 - ab) * d
        se = norms.std(ddof=1) / np.sqrt(n)
        assert abs(norms.mean() - expected) <= 3 * se + 1e-12
