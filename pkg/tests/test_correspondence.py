import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from oracles import bs_delta
from rainbowhj import (
    BoundaryPoint,
    GridMismatch,
    InsufficientSlices,
    MarketModel,
    OptionSpec,
    ValueSurface,
    closed_form_surface,
    default_grid,
    hamiltonian_field,
    hamiltonian_residual,
    lagrangian_value,
    payoff_max_call,
    short_map_check,
    solution_metric,
    solve_bs_pde,
    validate_model,
)


def closed_surface(model, option, nodes, half_width=1.0):
    x = np.linspace(math.log(100) - half_width, math.log(100) + half_width, nodes)
    t = np.linspace(0.0, 0.5, nodes)
    return closed_form_surface(model, option, x, t)


def test_closed_form_residual_is_small(ref_model, ref_option):
    rep = hamiltonian_residual(ref_model, closed_surface(ref_model, ref_option, 401))
    assert rep.max_abs <= 1e-2
    assert rep.mean_abs <= rep.max_abs
    assert json.loads(rep.to_json())["interior_margin"] == 1


def test_closed_form_residual_second_order(ref_model, ref_option):
    errs = [hamiltonian_residual(ref_model, closed_surface(ref_model, ref_option, n)).max_abs for n in (51, 101, 201)]
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_spot_coordinate_residual(ref_model, ref_option):
    s = np.linspace(60, 160, 201)
    t = np.linspace(0, 0.5, 201)
    from rainbowhj import bs_closed_form_1d

    vals = np.stack([bs_closed_form_1d(s, 100, 0.05, 0.2, 1.0 - tk) for tk in t])
    surf = ValueSurface((s,), t, vals, ("s1",))
    assert hamiltonian_residual(ref_model, surf).max_abs < 5e-3


def test_time_constant_payoff_zero_rates():
    vm = validate_model(MarketModel(spot=[100, 100], vol=[0, 0], rate=0.0, corr=np.eye(2)))
    x = np.linspace(3.5, 5.5, 21)
    s1, s2 = np.meshgrid(np.exp(x), np.exp(x), indexing="ij")
    pay = payoff_max_call(np.stack([s1, s2], -1), 100.0)
    surf = ValueSurface((x, x), np.array([0.0, 0.5, 1.0]), np.stack([pay] * 3), ("x1", "x2"), log_price=True)
    assert hamiltonian_residual(vm, surf).max_abs == 0.0


def test_two_asset_pde_residual_halves(ref_option):
    vm = validate_model(MarketModel.uniform([100, 100], [0.2, 0.3], 0.05, 0.5))
    errs = []
    for n in (41, 81, 161):
        surf = solve_bs_pde(vm, ref_option, default_grid(vm, ref_option, n, n - 1))
        errs.append(hamiltonian_residual(vm, surf, t_max=0.5).max_abs)
    assert errs[0] / errs[1] >= 2 and errs[1] / errs[2] >= 2


def test_residual_needs_three_slices(ref_model, ref_option):
    surf = closed_form_surface(ref_model, ref_option, np.linspace(4, 5, 11), np.array([0.0, 0.5]))
    with pytest.raises(InsufficientSlices):
        hamiltonian_residual(ref_model, surf)


def test_lagrangian_value_definition(ref_model, ref_option):
    surf = closed_surface(ref_model, ref_option, 41)
    H = hamiltonian_field(ref_model, surf, 3)[20]
    assert lagrangian_value(ref_model, surf, 20, 3, 0.0) == pytest.approx(-H)
    assert lagrangian_value(ref_model, surf, 20, 3, H) == 0.0
    with pytest.raises(BoundaryPoint):
        lagrangian_value(ref_model, surf, 0, 3, 0.0)


def test_lagrangian_value_where_operator_vanishes():
    vm = validate_model(MarketModel.single(100, 0.2, 0.0))
    x = np.linspace(math.log(5), math.log(400), 201)
    surf = closed_form_surface(vm, OptionSpec(100, 1.0), x, np.linspace(0, 0.5, 11))
    field = np.abs(hamiltonian_field(vm, surf, 5))
    node = int(np.flatnonzero(field < 1e-9)[0])
    assert lagrangian_value(vm, surf, node, 5, 1.0) == pytest.approx(1.0, abs=1e-9)


def test_metric_examples(ref_model, ref_option):
    surf = closed_surface(ref_model, ref_option, 21)
    v = surf.slice(0)
    assert solution_metric(v, v) == 0.0
    assert solution_metric(surf.values[0], surf.values[0] + 3.5) == pytest.approx(3.5)
    with pytest.raises(GridMismatch):
        solution_metric(np.zeros(3), np.zeros(4))


def test_metric_pde_vs_closed_form(ref_model, ref_option):
    pde = solve_bs_pde(ref_model, ref_option, default_grid(ref_model, ref_option, 400, 400))
    cf = closed_form_surface(ref_model, ref_option, pde.axes[0], pde.times)
    assert solution_metric(pde.slice(0), cf.slice(0)) <= 1e-3 * 10.450583572185565


vec = arrays(np.float64, 7, elements=st.floats(-1e6, 1e6))


@settings(max_examples=200)
@given(vec, vec, vec)
def test_metric_axioms(a, b, c):
    assert solution_metric(a, b) >= 0
    assert solution_metric(a, b) == solution_metric(b, a)
    assert solution_metric(a, c) <= solution_metric(a, b) + solution_metric(b, c) + 1e-9 * (1 + np.abs(a).max())
    assert (solution_metric(a, b) == 0) == np.array_equal(a, b)


@pytest.mark.parametrize("n", [1, 2, 3, 8])
def test_payoff_is_short_map(n, rng):
    pairs = rng.uniform(0, 300, size=(10_000, 2, n))
    rep = short_map_check(lambda s: payoff_max_call(s, 100.0), pairs)
    assert rep.passed and rep.max_ratio <= 1.0


def test_doubled_payoff_fails(rng):
    pairs = rng.uniform(0, 300, size=(10_000, 2, 3))
    rep = short_map_check(lambda s: 2 * payoff_max_call(s, 100.0), pairs)
    assert not rep.passed
    assert rep.max_ratio == pytest.approx(2.0)


def test_call_prices_are_short_map(rng):
    from rainbowhj import bs_closed_form_1d

    pairs = rng.uniform(1, 500, size=(10_000, 2, 1))
    rep = short_map_check(lambda s: bs_closed_form_1d(s[..., 0], 100, 0.05, 0.2, 1.0), pairs)
    assert rep.passed
    # no chord is steeper than the largest closed-form delta in the range
    assert rep.max_ratio <= bs_delta(500, 100, 0.05, 0.2, 1.0) + 1e-12


def test_spot_grid_slice_is_short_map(rng):
    from rainbowhj import bs_closed_form_1d

    s = np.linspace(1, 500, 2001)
    surf = ValueSurface((s,), np.array([0.0]), bs_closed_form_1d(s, 100, 0.05, 0.2, 1.0)[None], ("s1",))
    rep = short_map_check(surf.slice(0), rng.uniform(1, 500, size=(10_000, 2, 1)))
    assert rep.passed
