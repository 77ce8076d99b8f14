"""
Power-series evaluation of the normalising constant and its derivatives.

For ``theta = theta(phi, d)`` (value ``phi_i`` repeated ``d_i`` times),

    C / C(0) = sum_k  prod_i [phi_i^{k_i} (d_i/2)_{k_i} / k_i!]  /  (p/2)_{|k|}

where ``(a)_k`` is the rising factorial.  Grouping terms by total degree
``n = |k|`` turns the multi-index sum into a polynomial product: the degree-n
coefficient of ``prod_i A_i(z)`` with ``A_i(z) = sum_k phi_i^k (d_i/2)_k/k! z^k``
divided by ``(p/2)_n``.  Each univariate sequence is built in log space and
the product is formed by truncated convolution, so the cost is O(q N^2)
rather than the number of compositions.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .exceptions import InputError, NumericalError
from .model import GVector, MultiplicityTheta

__all__ = [
    "truncation_bound",
    "truncation_order",
    "partial_sum",
    "series_norm_const",
    "series_log_norm_const",
    "series_grad",
    "series_order",
]

DEFAULT_EPS = 1e-6
DEFAULT_MAX_TERMS = 4000


def _log_truncation_bound(x: float, N: int) -> float:
    if x == 0:
        return 0.0 if N == 0 else -math.inf
    return N * math.log(x) - math.lgamma(N + 1) + math.log((N + 1) / (N + 1 - x))


def truncation_bound(phi_l1: float, N: int) -> float:
    """Upper bound on ``|C - C_N| / C(0)`` for the series truncated at degree N.

    ``(x^N / N!) (N+1) / (N+1-x)`` with ``x = ||phi||_1``; ``C_N`` keeps the
    degrees below N.
    """
    if phi_l1 < 0:
        raise InputError("phi_l1 must be non-negative")
    if not N + 1 > phi_l1:
        raise InputError(f"bound requires N + 1 > ||phi||_1 (N={N}, ||phi||_1={phi_l1})")
    lb = _log_truncation_bound(phi_l1, N)
    return math.exp(lb) if lb < 700 else math.inf


def truncation_order(phi_l1: float, eps: float, max_terms: int = DEFAULT_MAX_TERMS) -> int:
    """Smallest N with ``truncation_bound(phi_l1, N) <= eps``."""
    if not eps > 0:
        raise InputError("eps must be positive")
    if phi_l1 < 0:
        raise InputError("phi_l1 must be non-negative")
    log_eps = math.log(eps)
    N = max(1, int(math.floor(phi_l1)))
    while N > max_terms or _log_truncation_bound(phi_l1, N) > log_eps:
        if N >= max_terms:
            raise NumericalError(
                f"series needs more than {max_terms} terms for ||phi||_1 = {phi_l1:.4g}; "
                "use the holonomic gradient route"
            )
        N += 1
    return N


def _scaled_degree_sum(phi, d, N):
    """Return ``(sign, log|S|)`` of the degree-truncated series ``S = C_N / C(0)``.

    Each factor is tilted by ``r = max |phi|`` (coefficient ``k`` times
    ``r^-k``), so no factor sequence grows geometrically and the convolution
    does not underflow; the tilt is undone per degree in log space.
    """
    phi = np.asarray(phi, dtype=float)
    d = np.asarray(d, dtype=float)
    p = d.sum()
    k = np.arange(N, dtype=float)
    lfact = gammaln(k + 1)
    r = float(np.abs(phi).max()) if phi.size else 0.0
    log_r = math.log(r) if r > 0 else 0.0

    coef = np.zeros(N)
    coef[0] = 1.0
    scale = 0.0
    for x, di in zip(phi, d):
        if x == 0.0:
            continue
        la = k * (math.log(abs(x)) - log_r) + gammaln(k + di / 2) - gammaln(di / 2) - lfact
        top = la.max()
        seq = np.exp(la - top)
        if x < 0:
            seq[1::2] = -seq[1::2]
        scale += top
        coef = np.convolve(coef, seq)[:N]
        m = np.abs(coef).max()
        coef /= m
        scale += math.log(m)

    # undo the tilt and divide by the rising factorial (p/2)_n
    lpoch = gammaln(k + p / 2) - gammaln(p / 2)
    lt = np.log(np.abs(coef), where=coef != 0, out=np.full(N, -np.inf)) + k * log_r - lpoch
    top = lt.max()
    total = float(np.sum(np.sign(coef) * np.exp(lt - top)))
    if total == 0.0:
        return 0.0, -math.inf
    return math.copysign(1.0, total), scale + top + math.log(abs(total))


def partial_sum(phi, d, N: int) -> float:
    """``C_N(theta(phi, d)) / C(0)``: all multi-indices with ``|k| < N``.

    Evaluated exactly at ``phi`` with no re-gauging, so negative entries give
    an alternating series.
    """
    if N < 1:
        return 0.0
    sign, logv = _scaled_degree_sum(phi, d, N)
    return sign * math.exp(logv)


def _nonnegative_gauge(theta: MultiplicityTheta):
    base = float(theta.levels[-1])
    return np.asarray(theta.levels) - base, base


def series_order(theta: MultiplicityTheta, eps: float = DEFAULT_EPS,
                 max_terms: int = DEFAULT_MAX_TERMS) -> int:
    """Truncation degree used for ``theta`` at tolerance ``eps``."""
    psi, _ = _nonnegative_gauge(theta)
    return truncation_order(float(psi.sum()), eps, max_terms)


def series_log_norm_const(theta: MultiplicityTheta, eps: float = DEFAULT_EPS,
                          max_terms: int = DEFAULT_MAX_TERMS):
    """``log(C(theta)/C(0))`` by power series; returns ``(log_value, N)``.

    The series is summed at the shift of ``theta`` whose smallest value is
    zero, where every term is non-negative and the sum is at least one, so
    the absolute tolerance ``eps`` doubles as a relative one.
    """
    psi, base = _nonnegative_gauge(theta)
    N = series_order(theta, eps, max_terms)
    sign, logv = _scaled_degree_sum(psi, theta.d, N)
    return base + logv, N


def series_norm_const(theta: MultiplicityTheta, eps: float = DEFAULT_EPS,
                      max_terms: int = DEFAULT_MAX_TERMS):
    """``C(theta)/C(0)`` at the user's (un-gauged) parameter; returns ``(value, N)``.

    ``eps`` bounds the truncation error of the series summed at the
    non-negative shift, i.e. the relative error of the returned value.
    """
    logv, N = series_log_norm_const(theta, eps, max_terms)
    return math.exp(logv), N


def series_grad(theta: MultiplicityTheta, eps: float = DEFAULT_EPS,
                max_terms: int = DEFAULT_MAX_TERMS) -> GVector:
    """Block derivatives ``dC/dphi_i / C(0)`` at the user's parameter (FULL layout).

    Uses ``dC(theta(phi, d))/dphi_i = d_i/(2 pi) C(theta(phi, d + 2 e_i))``,
    which in normalised form reads ``(d_i / p) C'/C'(0)`` with ``C'`` the
    constant in dimension ``p + 2``.
    """
    psi, base = _nonnegative_gauge(theta)
    N = series_order(theta, eps, max_terms)
    p = theta.p
    out = np.empty(theta.q)
    for i in range(theta.q):
        d2 = np.array(theta.d, dtype=int)
        d2[i] += 2
        _, logv = _scaled_degree_sum(psi, d2, N)
        out[i] = theta.d[i] / p * math.exp(base + logv)
    return GVector.full(out)
