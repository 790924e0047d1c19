"""Mittag-Leffler and M-Wright functions, and a grid Riemann-Liouville integral."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import AccuracyError, ParameterError
from .stable_laws import _kanter_integral

# series are trusted only while their largest term stays below this bound
_MAX_TERM = 1e3
_SERIES_TERMS = 600


def _check_beta(beta, allow_one=True):
    ok = 0.0 < beta <= 1.0 if allow_one else 0.0 < beta < 1.0
    if not ok:
        interval = "(0, 1]" if allow_one else "(0, 1)"
        raise ParameterError(f"beta must lie in {interval}, got {beta}")


# ---------------------------------------------------------------------------
# Mittag-Leffler
# ---------------------------------------------------------------------------

def _ml_series(beta, x):
    """``sum (-x)^n / Gamma(beta n + 1)`` or None if it would cancel badly."""
    n = np.arange(_SERIES_TERMS)
    with np.errstate(divide="ignore"):
        logmag = n * math.log(x) - special.gammaln(beta * n + 1)
    if logmag.max() > math.log(_MAX_TERM):
        return None
    small = np.nonzero(logmag < math.log(1e-18))[0]
    small = small[small > 0]
    if small.size == 0:
        return None
    m = int(small[0]) + 1
    terms = (-1.0) ** n[:m] * np.exp(logmag[:m])
    return math.fsum(terms)


def _ml_integral(beta, x):
    """Spectral form of ``E_beta(-x)`` on the negative real axis, ``x > 0``::

        E_beta(-x) = sin(beta pi)/(beta pi) *
                     int_0^inf exp(-y^(1/beta)) x / (y^2 + 2 x y cos(beta pi) + x^2) dy
    """
    cb, sb = math.cos(beta * math.pi), math.sin(beta * math.pi)
    inv = 1.0 / beta

    def f(y):
        return math.exp(-y ** inv) * x / (y * y + 2.0 * x * y * cb + x * x)

    ymax = 745.0 ** beta
    pts = [p for p in (-x * cb, -x * cb + x * sb, 1.0) if 0.0 < p < ymax]
    val, err = integrate.quad(f, 0.0, ymax, points=sorted(set(pts)) or None,
                              limit=400, epsabs=1e-15, epsrel=1e-13)
    scale = sb / (beta * math.pi)
    if err * scale > 1e-11:
        raise AccuracyError("Mittag-Leffler integral did not converge", beta=beta,
                            z=-x, error_estimate=err * scale)
    return val * scale


def mittag_leffler(beta: float, z: float) -> float:
    """``E_beta(z)`` for ``0 < beta <= 1`` and real ``z <= 0``.

    Taylor series while it is free of cancellation, otherwise the real-line
    spectral integral; absolute accuracy ~1e-12.
    """
    _check_beta(beta)
    z = float(z)
    if z > 0.0:
        raise ParameterError("mittag_leffler is implemented for z <= 0 only")
    if z == 0.0:
        return 1.0
    if beta == 1.0:
        return math.exp(z)
    x = -z
    val = _ml_series(beta, x)
    if val is None:
        val = _ml_integral(beta, x)
    return val


def mittag_leffler_array(beta: float, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if beta == 1.0:
        if np.any(z > 0):
            raise ParameterError("mittag_leffler is implemented for z <= 0 only")
        return np.exp(z)
    return np.array([mittag_leffler(beta, v) for v in z.ravel()]).reshape(z.shape)


def mittag_leffler_asymptotic(beta: float, z: float, n_terms: int = 8) -> float:
    """Large-|z| expansion ``E_beta(z) ~ -sum_{n>=1} z^(-n) / Gamma(1 - beta n)``."""
    n = np.arange(1, n_terms + 1)
    return float(-np.sum(float(z) ** (-n) * special.rgamma(1.0 - beta * n)))


# ---------------------------------------------------------------------------
# M-Wright
# ---------------------------------------------------------------------------

def _mw_series(beta, z):
    """``(1/pi) sum_{n>=1} (-z)^(n-1) Gamma(beta n) sin(pi beta n) / (n-1)!``.

    This is ``sum (-z)^n / (n! Gamma(1 - beta - beta n))`` after the
    reflection formula, so no Gamma function is evaluated at a pole.
    """
    n = np.arange(1, _SERIES_TERMS + 1)
    with np.errstate(divide="ignore"):
        logmag = (n - 1) * math.log(z) + special.gammaln(beta * n) - special.gammaln(n)
    if logmag.max() > math.log(_MAX_TERM):
        return None
    small = np.nonzero(logmag < math.log(1e-18))[0]
    if small.size == 0:
        return None
    m = int(small[0]) + 1
    sgn = (-1.0) ** (n[:m] - 1) * np.sin(math.pi * beta * n[:m])
    return math.fsum(sgn * np.exp(logmag[:m])) / math.pi


def _mw_kanter(beta, z):
    """``M_beta`` through the one-sided stable law, ``M(z) = L(z^(-1/b)) z^(-(1+b)/b) / b``.

    With Kanter's integral this reads::

        M(z) = z^(b/(1-b)) / ((1-b) pi) * int_0^pi A(u) exp(-A(u) z^(1/(1-b))) du
    """
    lz = math.log(z)
    val, err = _kanter_integral(beta, lz / (1.0 - beta), 1.0, epsabs=1e-300, epsrel=1e-11)
    fac = math.exp(beta / (1.0 - beta) * lz) / (1.0 - beta)
    return val * fac, err * fac


def m_wright(beta: float, z: float) -> float:
    """M-Wright function ``M_beta(z)`` for ``0 < beta < 1``, ``z >= 0``."""
    _check_beta(beta, allow_one=False)
    z = float(z)
    if z < 0.0:
        raise ParameterError("m_wright is implemented for z >= 0 only")
    if z == 0.0:
        return float(special.rgamma(1.0 - beta))
    val = _mw_series(beta, z)
    if val is None:
        val, err = _mw_kanter(beta, z)
        if err > 1e-11 + 1e-9 * abs(val):
            raise AccuracyError("M-Wright integral did not converge", beta=beta, z=z,
                                error_estimate=err)
    return max(val, 0.0)


def m_wright_tail(beta: float, z: float) -> float:
    """``int_z^inf M_beta(y) dy``, the survival function of the M-Wright law.

    Equals the distribution function of ``L_beta^{-beta}`` at ``z^(-1/beta)``.
    """
    _check_beta(beta, allow_one=False)
    if z <= 0.0:
        return 1.0
    val, _ = _kanter_integral(beta, math.log(z) / (1.0 - beta), 0.0, epsabs=1e-300)
    return min(1.0, val)


# ---------------------------------------------------------------------------
# Riemann-Liouville integral on a grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridFunction:
    """Samples ``values[j]`` of a function at ``start + j * step``."""

    start: float
    step: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if not self.step > 0:
            raise ParameterError("step must be positive")
        if not np.all(np.isfinite(v)):
            raise ParameterError("GridFunction values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def grid(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.values.size)


def riemann_liouville_integral(f: GridFunction, gamma: float) -> GridFunction:
    """``(1/Gamma(g)) int_0^t (t - s)^(g-1) f(s) ds`` at every grid node.

    Product integration: on each cell ``f`` is replaced by the mean of its two
    endpoint samples and the kernel is integrated exactly.  Exact for constant
    ``f``, and for linear ``f`` when ``g = 1``.
    """
    if not gamma > 0:
        raise ParameterError(f"order must be positive, got {gamma}")
    if f.start != 0.0:
        raise ParameterError("the integral starts at 0; grid must start at 0")
    v = f.values
    n = v.size
    out = np.zeros(n)
    if n > 1:
        cell = 0.5 * (v[:-1] + v[1:])
        k = np.arange(n - 1, dtype=float)
        b = (k + 1.0) ** gamma - k ** gamma
        out[1:] = np.convolve(cell, b)[: n - 1]
        out *= f.step ** gamma / math.gamma(gamma + 1.0)
    return GridFunction(0.0, f.step, out)
