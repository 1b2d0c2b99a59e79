"""Independent quadrature oracles shared across test modules."""

from scipy.integrate import quad

from burgerslab.fbm import fbm_covariance


def quad_ifbm_covariance(h, s, t):
    """E I(s)I(t) by nested adaptive quadrature of the motion covariance
    (signed rectangle); the inner integral is split at the |u - v| kink."""
    lo_t, hi_t = min(0.0, t), max(0.0, t)

    def inner(u):
        pts = [u] if lo_t < u < hi_t else None
        val, _ = quad(lambda v: fbm_covariance(h, u, v), lo_t, hi_t,
                      points=pts, epsabs=1e-14, epsrel=1e-13, limit=300)
        return val

    val, err = quad(inner, min(0.0, s), max(0.0, s),
                    epsabs=1e-13, epsrel=1e-12, limit=300)
    sign = (1 if s >= 0 else -1) * (1 if t >= 0 else -1)
    return sign * val


def quad_cross_covariance(h, x, t):
    """E w(x)I(t) by adaptive quadrature (signed interval)."""
    val, err = quad(lambda v: fbm_covariance(h, x, v),
                    min(0.0, t), max(0.0, t), epsabs=1e-13, epsrel=1e-12,
                    limit=200)
    return (1 if t >= 0 else -1) * val
