import math

import numpy as np
import pytest
from scipy import integrate

from rainbowhj import MarketModel, OptionSpec, validate_model


def quadrature_call(spot, strike, rate, vol, maturity):
    """Discounted call expectation integrated against the standard normal density."""

    def integrand(z):
        st = spot * math.exp((rate - 0.5 * vol * vol) * maturity + vol * math.sqrt(maturity) * z)
        return max(st - strike, 0.0) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    # split at the kink so quad sees a smooth integrand on each piece
    z_k = (math.log(strike / spot) - (rate - 0.5 * vol * vol) * maturity) / (vol * math.sqrt(maturity))
    val, _ = integrate.quad(integrand, z_k, 12.0, epsabs=1e-12, epsrel=1e-12, limit=200)
    return math.exp(-rate * maturity) * val


@pytest.fixture
def ref_model():
    return validate_model(MarketModel.single(100.0, 0.2, 0.05))


@pytest.fixture
def ref_option():
    return OptionSpec(strike=100.0, maturity=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
