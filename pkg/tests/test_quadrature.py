import math

import mpmath
import pytest
from scipy.integrate import quad

from execrisk.quadrature import QuadratureError, adaptive_simpson


@pytest.mark.parametrize(
    "f,a,b",
    [
        (math.sin, 0.0, math.pi),
        (lambda x: math.exp(-x * x), -3.0, 2.0),
        (lambda x: math.log(1.0 + x) / (1.0 + x * x), 0.0, 1.0),
        (lambda x: 1.0 / (x + 1e-3), 0.0, 1.0),
    ],
)
def test_matches_scipy(f, a, b):
    ref, _ = quad(f, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)
    assert adaptive_simpson(f, a, b, tol=1e-11) == pytest.approx(ref, abs=1e-10)


def test_matches_mpmath_on_a_log_integrand():
    f = lambda x: (x * math.log((x + 1e-3) / 1e-3)) ** 2
    ref = float(mpmath.quad(lambda x: (x * mpmath.log((x + mpmath.mpf("1e-3")) / mpmath.mpf("1e-3"))) ** 2, [0, 0.01, 1]))
    assert adaptive_simpson(f, 0.0, 1.0, tol=1e-12) == pytest.approx(ref, abs=1e-11)


def test_exact_for_cubics_and_orientation():
    f = lambda x: 4 * x**3 - x + 2
    assert adaptive_simpson(f, 0.0, 2.0) == pytest.approx(18.0, abs=1e-12)
    assert adaptive_simpson(f, 2.0, 0.0) == pytest.approx(-18.0, abs=1e-12)
    assert adaptive_simpson(f, 1.0, 1.0) == 0.0


def test_depth_limit():
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda x: 1.0 / math.sqrt(abs(x - 0.3) + 1e-300), 0.0, 1.0, tol=1e-14, max_depth=8)
