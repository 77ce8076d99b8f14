"""
Independent reference evaluators of ``C(theta)/C(0)``.

Neither routine touches the Pfaffian system or the power series, so both can
be used to cross-check them.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .exceptions import InputError, NumericalError

__all__ = ["McEstimate", "mc_norm_const", "contour_norm_const", "ContourValue"]

CHUNK = 1 << 18


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo estimate of ``C(theta)/C(0)``."""

    mean: float
    stderr: float
    n: int
    seed: int


def _chunk_moments(theta, seed, index, size):
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))
    x = rng.standard_normal((size, theta.size))
    x2 = x * x
    x2 /= x2.sum(axis=1, keepdims=True)
    f = np.exp(x2 @ theta)
    if f.size and np.all(f == f[0]):
        return size, float(f[0]), 0.0
    mean = float(f.mean())
    return size, mean, float(np.sum((f - mean) ** 2))


def mc_norm_const(theta, n: int = 1_000_000, seed: int = 0, workers: int | None = None) -> McEstimate:
    """Average of ``exp(sum theta_i x_i^2)`` over ``n`` uniform points on the sphere.

    Points are normalised standard normal vectors.  Samples are drawn in
    fixed-size chunks, each from its own counter-based stream keyed by
    ``(seed, chunk index)``, so the estimate does not depend on ``workers``.
    The integrand is evaluated at the shift with maximum 0 and rescaled.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    if n < 1:
        raise InputError("n must be positive")
    if theta.size < 2 or not np.all(np.isfinite(theta)):
        raise InputError("theta must be a finite vector with p >= 2")
    shift = float(theta.max())
    th = theta - shift
    sizes = [CHUNK] * (n // CHUNK) + ([n % CHUNK] if n % CHUNK else [])
    if workers is None:
        workers = int(os.environ.get("BINGHAM_HGM_THREADS", "1"))
    jobs = [(th, seed, i, s) for i, s in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda a: _chunk_moments(*a), jobs))
    else:
        parts = [_chunk_moments(*a) for a in jobs]

    # Chan et al. pairwise combination of (count, mean, M2)
    cnt, mean, m2 = parts[0]
    for nb, mb, m2b in parts[1:]:
        tot = cnt + nb
        delta = mb - mean
        if delta != 0.0:
            mean += delta * nb / tot
        m2 += m2b + delta * delta * cnt * nb / tot
        cnt = tot
    var = m2 / (n - 1) if n > 1 else 0.0
    scale = math.exp(shift)
    return McEstimate(mean=mean * scale, stderr=math.sqrt(var / n) * scale, n=n, seed=seed)


@dataclass(frozen=True)
class ContourValue:
    value: float
    imag: float
    abserr: float


def contour_norm_const(theta, margin: float = 1.0, full: bool = False,
                       epsabs: float = 1e-13, limlst: int = 200):
    """``C(theta)/C(0)`` from the Laplace-inversion integral along ``Re t = t0``.

    ::

        C/C(0) = Gamma(p/2) / (2 pi) * int_R prod_k (-theta_k - t0 - i s)^{-1/2} exp(-t0 - i s) ds

    with ``t0 = min_k(-theta_k) - margin``.  Every factor has positive real
    part so principal square roots are continuous along the line.  Each half
    line is integrated as a Fourier integral (QUADPACK QAWF), which handles
    the slow ``|s|^{-p/2}`` decay by extrapolating over oscillation cycles.
    Requires ``p >= 3``.

    Returns the real value, or a :class:`ContourValue` with the imaginary
    residue when ``full`` is true.
    """
    theta = np.asarray(theta, dtype=float).ravel()
    p = theta.size
    if p <= 2:
        raise InputError("contour representation needs p >= 3 (not absolutely integrable for p = 2)")
    if not np.all(np.isfinite(theta)) or not margin > 0:
        raise InputError("theta must be finite and margin positive")
    shift = float(theta.max())
    a = shift - theta  # -theta_k after the gauge; min is 0
    t0 = -margin
    b = a - t0  # >= margin

    def g(s):
        return np.exp(-t0 - 0.5 * np.sum(np.log(b - 1j * s)))

    # finite head where the amplitude still varies on the scale of b, then a
    # Fourier tail over whole cycles
    head = 2 * math.pi * math.ceil(4 * b.max() / (2 * math.pi) + 2)

    def part(fun, weight):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                v1, e1 = integrate.quad(fun, 0.0, head, weight=weight, wvar=1.0,
                                        epsabs=epsabs, epsrel=1e-13, limit=500)
                v2, e2 = integrate.quad(fun, head, np.inf, weight=weight, wvar=1.0,
                                        epsabs=epsabs, limlst=limlst)
            except integrate.IntegrationWarning as exc:
                raise NumericalError(f"contour quadrature did not converge: {exc}") from None
        return v1 + v2, e1 + e2

    # int_0^inf g(s) e^{-is} ds  and  int_0^inf g(-s) e^{is} ds
    rc, e1 = part(lambda s: g(s).real, "cos")
    rs, e2 = part(lambda s: g(s).imag, "sin")
    ic, e3 = part(lambda s: g(s).imag, "cos")
    is_, e4 = part(lambda s: g(s).real, "sin")
    nc, e5 = part(lambda s: g(-s).real, "cos")
    ns, e6 = part(lambda s: g(-s).imag, "sin")
    mc, e7 = part(lambda s: g(-s).imag, "cos")
    ms, e8 = part(lambda s: g(-s).real, "sin")
    re = (rc + rs) + (nc - ns)
    im = (ic - is_) + (mc + ms)
    pref = math.exp(math.lgamma(0.5 * p) + shift) / (2 * math.pi)
    value = pref * re
    out = ContourValue(value=value, imag=pref * im,
                       abserr=pref * (e1 + e2 + e3 + e4 + e5 + e6 + e7 + e8))
    return out if full else value
