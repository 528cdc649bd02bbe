import numpy as np
import pytest
from scipy.special import gamma as gamma_fn, kv

from abqlab.exceptions import DomainError
from abqlab.kernels import (
    InverseMultiquadric,
    Matern,
    Multiquadric,
    RatePrediction,
    SquaredExponential,
    Wendland,
    chol_with_jitter,
    gram,
    predicted_rate,
)


def bessel_matern(nu, ell, r):
    """General Matern form via the modified Bessel function (oracle)."""
    r = np.asarray(r, dtype=float)
    u = np.sqrt(2 * nu) * r / ell
    out = np.ones_like(u)
    pos = u > 0
    out[pos] = (2 ** (1 - nu) / gamma_fn(nu)) * u[pos] ** nu * kv(nu, u[pos])
    return out


def test_squared_exponential_values():
    k = SquaredExponential(gamma=0.5)
    assert k(np.array([0.3]), np.array([0.3])) == pytest.approx(1.0)
    assert k(np.array([0.0]), np.array([0.5])) == pytest.approx(np.exp(-1.0))


@pytest.mark.parametrize("nu", [0.5, 1.5, 2.5, 3.5])
def test_matern_matches_bessel_oracle(nu):
    ell = 0.37
    k = Matern(nu=nu, ell=ell)
    r = np.linspace(1e-4, 2.0, 200)
    ours = k.pairwise(np.zeros((1, 1)), r[:, None])[0]
    oracle = bessel_matern(nu, ell, r)
    assert np.max(np.abs(ours - oracle)) < 1e-6


def test_matern_rejects_generic_nu():
    with pytest.raises(ValueError):
        Matern(nu=1.0)


def test_kernels_positive_definite_on_distinct_points():
    rng = np.random.default_rng(0)
    X = rng.uniform(0, 1, size=(12, 2))
    for k in (SquaredExponential(0.6), Matern(1.5, 0.4),
              InverseMultiquadric(0.5, 1.0), Wendland(1, 0.8)):
        w = np.linalg.eigvalsh(gram(k, X))
        assert w.min() > -1e-10 * w.max()


def test_wendland_compact_support_and_values():
    k = Wendland(smoothness_index=1, radius=0.5)
    assert k(np.array([0.0]), np.array([0.6])) == 0.0
    # t = 1 - r = 0.5, value = t^4 (4 r + 1) = 0.0625 * 3
    assert k(np.array([0.0]), np.array([0.25])) == pytest.approx(0.1875)
    with pytest.raises(ValueError):
        Wendland(smoothness_index=3)


def test_multiquadric_sign_convention():
    k = Multiquadric(beta=0.5, c=1.0)
    assert k.sign == -1.0
    assert k(np.array([0.0]), np.array([0.0])) == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        Multiquadric(beta=2.0)  # integer exponent


def test_gram_bitwise_symmetric():
    rng = np.random.default_rng(1)
    X = rng.uniform(0, 1, size=(20, 2))
    K = gram(SquaredExponential(0.4), X)
    assert np.array_equal(K, K.T)


def test_chol_with_jitter_reconstructs():
    rng = np.random.default_rng(2)
    X = rng.uniform(0, 1, size=(8, 1))
    K = gram(Matern(2.5, 0.3), X)
    L, jitter = chol_with_jitter(K)
    assert np.allclose(L @ L.T, K + jitter * np.eye(8), atol=1e-12)
    assert jitter <= 1e-10


def test_predicted_rate_forms():
    p = predicted_rate(SquaredExponential(), 2)
    assert p.model == "exponential" and p.exponent == pytest.approx(0.5)
    p = predicted_rate(Matern(1.5, 0.3), 1)
    # r = nu + d/2 = 2, slope -(r/d - 1/2) = -1.5
    assert p.model == "polynomial" and p.exponent == pytest.approx(-1.5)
    p = predicted_rate(Wendland(1, 0.5), 2)
    # r = d/2 + k + 1/2 = 2.5, slope -0.75
    assert p.exponent == pytest.approx(-0.75)


def test_predicted_rate_vacuous_order_rejected():
    class Rough:
        def smoothness(self, d):
            return ("finite", d / 2)

    with pytest.raises(DomainError):
        predicted_rate(Rough(), 2)


def test_rate_prediction_regressors():
    n = np.array([4.0, 9.0])
    assert np.allclose(RatePrediction("exponential", 0.5).regressor(n), [2.0, 3.0])
    assert np.allclose(RatePrediction("polynomial", -1.0).regressor(n), np.log(n))
