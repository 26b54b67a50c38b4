"""Independent reference values used only by the tests."""

import math

import numpy as np
from scipy.stats import multivariate_normal, norm


def _bvn(a, b, rho):
    return float(multivariate_normal(mean=[0, 0], cov=[[1, rho], [rho, 1]]).cdf([a, b]))


def stulz_max_call(s1, s2, strike, rate, vol1, vol2, rho, maturity):
    """Two-asset European call on the maximum (Stulz 1982)."""
    rt = math.sqrt(maturity)
    vol = math.sqrt(vol1**2 + vol2**2 - 2 * rho * vol1 * vol2)
    d = (math.log(s1 / s2) + 0.5 * vol**2 * maturity) / (vol * rt)
    y1 = (math.log(s1 / strike) + (rate + 0.5 * vol1**2) * maturity) / (vol1 * rt)
    y2 = (math.log(s2 / strike) + (rate + 0.5 * vol2**2) * maturity) / (vol2 * rt)
    rho1 = (vol1 - rho * vol2) / vol
    rho2 = (vol2 - rho * vol1) / vol
    return (
        s1 * _bvn(y1, d, rho1)
        + s2 * _bvn(y2, -d + vol * rt, rho2)
        - strike * math.exp(-rate * maturity) * (1 - _bvn(-y1 + vol1 * rt, -y2 + vol2 * rt, rho))
    )


def bs_delta(spot, strike, rate, vol, maturity):
    d1 = (math.log(spot / strike) + (rate + 0.5 * vol * vol) * maturity) / (vol * math.sqrt(maturity))
    return float(norm.cdf(d1))


def brute_force_hopf_lax(L, g, x, t, y):
    """min over the dense array ``y`` of t L((x - y)/t) + g(y) (1-D)."""
    return float(np.min(t * L((x - y) / t) + g(y)))
