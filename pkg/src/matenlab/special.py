"""Modified Bessel function ratios used by the von Mises angle-noise channels."""

from __future__ import annotations

import math

# beyond this argument the series needs too many terms; switch to the asymptotic form
_ASYMPTOTIC_FROM = 2.0e4


def bessel_ratio(kappa: float, order: int = 2, tol: float = 1e-16) -> float:
    """Return ``I_order(kappa) / I_0(kappa)`` for ``kappa >= 0``.

    For a von Mises angle with concentration ``kappa`` this is ``E[cos(order * eps)]``.

    The power series of both functions share the factor ``(kappa/2)**(2k)/k!**2``;
    the series for ``I_n`` is expressed through the ``I_0`` terms so that the two
    sums are accumulated together and rescaled, which keeps them finite for large
    ``kappa``.  The sum stops once terms fall below ``tol`` relative to the total.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    if kappa < 0 or math.isnan(kappa):
        raise ValueError("kappa must be >= 0")
    if order == 0:
        return 1.0
    if kappa == 0.0:
        return 0.0
    if math.isinf(kappa):
        return 1.0
    if kappa >= _ASYMPTOTIC_FROM:
        return _asymptotic_ratio(kappa, order)

    half_sq = (kappa / 2.0) ** 2
    # t_k = (kappa/2)^(2k) / (k!)^2 ; I_n term_k = (kappa/2)^(2k+n) / (k! (k+n)!)
    #     = t_k * (kappa/2)^n * k! / (k+n)!
    log_pref = order * math.log(kappa / 2.0)
    t = 1.0
    s0 = 0.0
    sn = 0.0
    k = 0
    while True:
        fac = math.exp(log_pref - _log_rising(k + 1, order))
        s0 += t
        sn += t * fac
        k += 1
        t *= half_sq / (k * k)
        if t < tol * s0 and k > kappa:
            break
        if s0 > 1e250:
            s0 *= 1e-250
            sn *= 1e-250
            t *= 1e-250
    return sn / s0


def _log_rising(start: int, count: int) -> float:
    """log(start * (start+1) * ... * (start+count-1))."""
    return math.lgamma(start + count) - math.lgamma(start)


def _asymptotic_ratio(x: float, order: int, n_terms: int = 8) -> float:
    def series(nu: int) -> float:
        mu = 4.0 * nu * nu
        total = 1.0
        term = 1.0
        for k in range(1, n_terms + 1):
            term *= -(mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
            total += term
        return total

    return series(order) / series(0)
