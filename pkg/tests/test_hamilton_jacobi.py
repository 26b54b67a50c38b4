import numpy as np
import pytest

from oracles import brute_force_hopf_lax
from rainbowhj import (
    CoincidentPair,
    HJProblem,
    LagrangianGapped,
    SupremumNotBracketed,
    ValidationError,
    abs_hamiltonian,
    abs_initial,
    affine_initial,
    bracket_radius,
    hopf_lax_evaluate,
    hopf_lax_solve,
    legendre_transform,
    lipschitz_estimate,
    max_call_initial,
    payoff_max_call,
    polynomial_hamiltonian,
    power4_hamiltonian,
    quadratic_hamiltonian,
    semigroup_residual,
    verify_convex_superlinear,
)

P = np.linspace(-10, 10, 4001)
Q = np.linspace(-3, 3, 601)


@pytest.fixture(scope="module")
def quad_L():
    return legendre_transform(quadratic_hamiltonian(), P, Q)


def moreau_abs(x, t):
    ax = np.abs(x)
    return np.where(ax <= t, x * x / (2 * t), ax - t / 2)


def test_quadratic_is_self_conjugate(quad_L):
    assert np.max(np.abs(quad_L.values - 0.5 * Q**2)) < 1e-6
    q = np.array([-2.345, 0.0, 0.1234, 2.99])
    assert np.allclose(quad_L(q), 0.5 * q**2, atol=1e-6)


def test_legendre_round_trip(quad_L):
    from rainbowhj import HamiltonianSpec

    L_as_H = HamiltonianSpec(lambda q: quad_L(q), name="L")
    back = legendre_transform(L_as_H, Q, np.linspace(-2.5, 2.5, 501))
    p = np.linspace(-2.5, 2.5, 501)
    assert np.max(np.abs(back.values - 0.5 * p**2)) < 1e-6


def test_abs_hamiltonian_conjugate_is_ball_indicator():
    q = np.array([-1.01, -1.0, 0.0, 0.5, 1.5])
    L = legendre_transform(abs_hamiltonian(), P, q, unbracketed="inf")
    assert L.values[2] == 0.0 and L.values[3] == 0.0 and L.values[1] == 0.0
    assert np.isinf(L.values[0]) and np.isinf(L.values[4])
    assert L.closed
    with pytest.raises(SupremumNotBracketed):
        legendre_transform(abs_hamiltonian(), P, q)


def test_power4_conjugate():
    L = legendre_transform(power4_hamiltonian(), P, Q)
    # stationarity p^3 = q, solved by root finding as the oracle
    p_star = np.cbrt(1.0)
    assert float(L(np.array([1.0]))) == pytest.approx(p_star - 0.25 * p_star**4, abs=1e-4)
    assert float(L(np.array([1.0]))) == pytest.approx(0.75, abs=1e-4)


def test_polynomial_hamiltonian_matches_quadratic():
    H = polynomial_hamiltonian([0.0, 0.0, 0.5])
    assert np.allclose(H(np.array([[1.0], [-2.0]])), [0.5, 2.0])


def test_two_dimensional_conjugate():
    ax = np.linspace(-6, 6, 241)
    qx = np.linspace(-2, 2, 41)
    L = legendre_transform(quadratic_hamiltonian(2), (ax, ax), (qx, qx))
    qq = np.stack(np.meshgrid(qx, qx, indexing="ij"), -1)
    assert np.max(np.abs(L.values - 0.5 * np.sum(qq**2, -1))) < 1e-6


def test_convexity_probe_examples():
    good = verify_convex_superlinear(Q, 0.5 * Q**2)
    assert good.convex and good.superlinear
    lin = verify_convex_superlinear(Q, np.abs(Q))
    assert lin.convex and not lin.superlinear
    bad = verify_convex_superlinear(Q, -(Q**2))
    assert not bad.convex and bad.violations


def test_hamiltonian_probe_flags_concave():
    from rainbowhj import HamiltonianSpec

    concave = lambda p: -np.sum(p * p, axis=-1)
    with pytest.raises(ValidationError, match="declared convex"):
        HamiltonianSpec(concave, name="concave").probe(np.linspace(-2, 2, 41))
    report = HamiltonianSpec(concave, declared_convex=False).probe(np.linspace(-2, 2, 41))
    assert not report.convex


def test_constant_initial_datum_is_preserved(quad_L):
    problem = HJProblem(quadratic_hamiltonian(), lambda x: np.full(x.shape[:-1], 3.25), 0.0)
    for x, t in [(0.3, 0.5), (-1.7, 2.0)]:
        assert hopf_lax_evaluate(problem, quad_L, x, t).value == pytest.approx(3.25, abs=1e-12)


def test_affine_exact(quad_L, rng):
    a = 0.7
    problem = HJProblem(quadratic_hamiltonian(), affine_initial(a), abs(a))
    for _ in range(20):
        x, t = rng.uniform(-3, 3), rng.uniform(0.05, 2.0)
        assert hopf_lax_evaluate(problem, quad_L, x, t).value == pytest.approx(a * x - t * a * a / 2, abs=1e-6)


def test_moreau_at_origin(quad_L):
    problem = HJProblem(quadratic_hamiltonian(), abs_initial(), 1.0)
    assert abs(hopf_lax_evaluate(problem, quad_L, 0.0, 1.0).value) < 1e-6


def test_moreau_envelope_surface(quad_L):
    problem = HJProblem(quadratic_hamiltonian(), abs_initial(), 1.0)
    x = np.linspace(-3, 3, 2001)
    surf = hopf_lax_solve(problem, quad_L, x, [0.0, 0.5, 1.0])
    assert np.array_equal(surf.values[0], np.abs(x))
    assert np.max(np.abs(surf.values[2] - moreau_abs(x, 1.0))) < 1e-4
    assert np.max(np.abs(surf.values[1] - moreau_abs(x, 0.5))) < 1e-4


def test_hopf_lax_against_brute_force(quad_L):
    g = max_call_initial(0.5)
    problem = HJProblem(quadratic_hamiltonian(), g, 1.0)
    y = np.linspace(-8, 8, 160_001)
    Lq = lambda q: 0.5 * q * q
    for x, t in [(-1.0, 0.3), (0.4, 1.0), (2.2, 0.7)]:
        oracle = brute_force_hopf_lax(Lq, lambda v: g(v[:, None]), x, t, y)
        assert hopf_lax_evaluate(problem, quad_L, x, t).value == pytest.approx(oracle, abs=1e-6)


def test_affine_two_times(quad_L):
    a = -1.3
    problem = HJProblem(quadratic_hamiltonian(), affine_initial(a, 2.0), abs(a))
    x = np.linspace(-2, 2, 81)
    surf = hopf_lax_solve(problem, quad_L, x, [0.25, 1.5])
    for k, t in enumerate((0.25, 1.5)):
        assert np.max(np.abs(surf.values[k] - (a * x + 2.0 - t * a * a / 2))) < 1e-6


def test_two_dimensional_affine():
    ax = np.linspace(-6, 6, 241)
    qx = np.linspace(-2, 2, 81)
    L = legendre_transform(quadratic_hamiltonian(2), (ax, ax), (qx, qx))
    a = np.array([0.4, -0.6])
    problem = HJProblem(quadratic_hamiltonian(2), affine_initial(a), float(np.linalg.norm(a)), 2)
    xg = np.linspace(-1, 1, 9)
    surf = hopf_lax_solve(problem, L, (xg, xg), [1.0])
    X = np.stack(np.meshgrid(xg, xg, indexing="ij"), -1)
    assert np.max(np.abs(surf.values[0] - (X @ a - 0.5 * a @ a))) < 1e-6


def test_semigroup(quad_L):
    x = np.linspace(-3, 3, 2001)
    problem = HJProblem(quadratic_hamiltonian(), abs_initial(), 1.0)
    assert semigroup_residual(problem, quad_L, x, 0.5, 1.0) <= 2e-3
    assert semigroup_residual(problem, quad_L, x, 0.5, 0.5) == 0.0
    affine = HJProblem(quadratic_hamiltonian(), affine_initial(0.9), 0.9)
    assert semigroup_residual(affine, quad_L, x, 0.4, 1.2) <= 1e-6


def test_bracket_radius_covers_minimizer_velocity(quad_L):
    assert bracket_radius(quad_L, 1.0) >= 2.0
    assert bracket_radius(quad_L, 0.7) >= 1.4


def test_radius_reaching_open_table_edge_is_gapped():
    L = legendre_transform(quadratic_hamiltonian(), P, np.linspace(-1, 1, 201))
    with pytest.raises(LagrangianGapped):
        bracket_radius(L, 1.0)


def test_problem_validation():
    with pytest.raises(ValidationError):
        HJProblem(quadratic_hamiltonian(2), abs_initial(), 1.0, 1)
    problem = HJProblem(quadratic_hamiltonian(), affine_initial(2.0), 1.0)
    with pytest.raises(ValidationError):
        problem.check_lipschitz(np.array([[0.0, 1.0], [2.0, -1.0]]))


def test_lipschitz_estimate_examples(rng):
    pairs = rng.uniform(-1, 1, size=(10_000, 2))
    assert lipschitz_estimate(lambda x: 2 * x[..., 0], pairs) == pytest.approx(2.0, abs=1e-9)
    assert lipschitz_estimate(lambda x: np.zeros(len(x)), pairs) == 0.0
    spots = rng.uniform(0, 300, size=(10_000, 2, 2))
    assert lipschitz_estimate(lambda s: payoff_max_call(s, 100), spots) <= 1 + 1e-12
    with pytest.raises(CoincidentPair):
        lipschitz_estimate(lambda x: x[..., 0], np.array([[1.0, 1.0]]))
