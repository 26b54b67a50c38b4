import math

import numpy as np
import pytest

from rainbowhj import (
    MarketModel,
    OptionSpec,
    PathConfig,
    ValidationError,
    bs_closed_form_1d,
    cholesky_factor,
    mc_price,
    sample_correlated_normals,
    simulate_terminal_spots,
    validate_model,
)


def test_standard_normal_mean():
    z = sample_correlated_normals(np.eye(1), 10**6, seed=11)
    assert z.shape == (10**6, 1)
    assert abs(z.mean()) < 4 / math.sqrt(10**6)
    assert z.std() == pytest.approx(1.0, abs=5e-3)


def test_rank_one_factor_gives_equal_components():
    z = sample_correlated_normals(cholesky_factor([[1, 1], [1, 1]]), 1000, seed=2)
    assert np.array_equal(z[:, 0], z[:, 1])


def test_empirical_correlation():
    z = sample_correlated_normals(cholesky_factor([[1, 0.5], [0.5, 1]]), 10**6, seed=5)
    assert abs(np.corrcoef(z.T)[0, 1] - 0.5) < 0.01


def test_stream_is_a_pure_function_of_seed_and_index():
    full = sample_correlated_normals(np.eye(2), 70_000, seed=9)
    tail = sample_correlated_normals(np.eye(2), 10_000, seed=9, start=50_000, workers=3)
    assert np.array_equal(full[50_000:60_000], tail)
    other = sample_correlated_normals(np.eye(2), 10, seed=10)
    assert not np.array_equal(full[:10], other)


def test_zero_vol_paths_are_deterministic():
    vm = validate_model(MarketModel.uniform([100, 80], [0, 0], 0.05, 0.3))
    s = simulate_terminal_spots(vm, 1.0, PathConfig(100))
    assert np.array_equal(s, np.tile([100 * math.exp(0.05), 80 * math.exp(0.05)], (100, 1)))


def test_terminal_mean_is_forward(ref_model):
    s = simulate_terminal_spots(ref_model, 1.0, PathConfig(200_000, seed=4))[:, 0]
    se = s.std(ddof=1) / math.sqrt(len(s))
    assert abs(s.mean() - 100 * math.exp(0.05)) < 3 * se


def test_perfect_correlation_equal_paths():
    vm = validate_model(MarketModel.uniform([100, 100], [0.25, 0.25], 0.05, 1.0))
    s = simulate_terminal_spots(vm, 1.0, PathConfig(5000, seed=1))
    assert np.allclose(s[:, 0], s[:, 1], rtol=1e-14)


def test_zero_vol_price_exact():
    vm = validate_model(MarketModel.single(100, 0.0, 0.05))
    est = mc_price(vm, OptionSpec(90, 1.0), PathConfig(1000, seed=3))
    assert est.price == pytest.approx(100 - 90 * math.exp(-0.05), abs=1e-12)
    assert est.std_error == 0.0


def test_tiny_strike_price_is_spot(ref_model):
    est = mc_price(ref_model, OptionSpec(1e-9, 1.0), PathConfig(100_000, seed=8))
    assert abs(est.price - 100) < 3 * est.std_error


def test_reference_call_within_three_se(ref_model, ref_option):
    est = mc_price(ref_model, ref_option, PathConfig(100_000, seed=0))
    ref = bs_closed_form_1d(100, 100, 0.05, 0.2, 1.0)
    assert abs(est.price - ref) < 3 * est.std_error
    assert est.n_paths == 100_000


def test_antithetic_reduces_error(ref_model, ref_option):
    plain = mc_price(ref_model, ref_option, PathConfig(100_000, seed=1))
    anti = mc_price(ref_model, ref_option, PathConfig(100_000, seed=1, antithetic=True))
    assert anti.std_error < plain.std_error
    assert abs(anti.price - 10.450583572185565) < 3 * anti.std_error


def test_worker_count_does_not_change_result(ref_option):
    vm = validate_model(MarketModel.uniform([100, 95, 105], [0.2, 0.3, 0.25], 0.03, 0.4))
    a = mc_price(vm, ref_option, PathConfig(100_003, seed=42, workers=1))
    b = mc_price(vm, ref_option, PathConfig(100_003, seed=42, workers=4))
    assert a == b


def test_requires_validated_model(ref_option):
    with pytest.raises(TypeError):
        mc_price(MarketModel.single(100, 0.2, 0.05), ref_option, PathConfig(10))


@pytest.mark.parametrize("kw", [{"n_paths": 0}, {"n_paths": 3, "antithetic": True}, {"n_paths": 10, "seed": -1}, {"n_paths": 10, "workers": 0}])
def test_path_config_validation(kw):
    with pytest.raises(ValidationError):
        PathConfig(**kw)
