"""Analytic fundamental solutions of the space-time fractional diffusion equation.

Two independent evaluators are provided:

* :func:`subordinate_density` integrates the parent stable density against the
  M-Wright directing density in operational time (adaptive ``quad_vec``);
* :func:`green_function_fourier` inverts the Mittag-Leffler characteristic
  function ``E_beta(-|k|^alpha t^beta)`` with fixed Gauss-Legendre panels plus
  an analytically integrated asymptotic tail.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import AccuracyError, DegenerateLawError, ParameterError
from .special_functions import (
    GridFunction,
    m_wright,
    m_wright_tail,
    mittag_leffler,
    riemann_liouville_integral,
)
from .stable_laws import (
    ExtremalStableLaw,
    StableLaw,
    extremal_stable_density,
    stable_cdf,
    stable_pdf,
)

# target for the neglected directing-law mass in the subordination integral
_Q_TAIL = 1e-9
# largest tolerated bound on the analytically dropped Fourier tail
_TAIL_LIMIT = 1e-5


@dataclass(frozen=True)
class DiffusionParams:
    """Orders ``alpha``, ``beta`` and skewness ``theta`` of the diffusion equation."""

    alpha: float
    theta: float
    beta: float

    def __post_init__(self):
        StableLaw(self.alpha, self.theta)  # validates alpha and theta
        if not 0.0 < self.beta <= 1.0:
            raise ParameterError(f"beta must lie in (0, 1], got {self.beta}")

    @property
    def law(self) -> StableLaw:
        return StableLaw(self.alpha, self.theta)


@dataclass
class GridDensity:
    """Density values on a uniform grid plus point masses.

    ``diagnostics`` may hold ``mass_below`` and ``mass_above``, the exact
    probability that falls outside the grid, which :meth:`cdf` and
    :meth:`total_mass` take into account.
    """

    grid: np.ndarray
    values: np.ndarray
    atoms: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.grid.shape != self.values.shape or self.grid.ndim != 1:
            raise ParameterError("grid and values must be 1-d arrays of equal length")
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ParameterError("density values must be finite and nonnegative")
        if any(m < 0 for _, m in self.atoms):
            raise ParameterError("atom masses must be nonnegative")

    @property
    def atom_mass(self) -> float:
        return float(sum(m for _, m in self.atoms))

    @property
    def mass(self) -> float:
        """Mass carried on the grid (trapezoid rule) plus atoms."""
        return float(integrate.trapezoid(self.values, self.grid)) + self.atom_mass

    def total_mass(self) -> float:
        """:attr:`mass` plus the recorded mass outside the grid or below its resolution."""
        d = self.diagnostics
        return (self.mass + d.get("mass_below", 0.0) + d.get("mass_above", 0.0)
                + d.get("mass_unresolved", 0.0))

    def cdf(self) -> np.ndarray:
        """Distribution function at the grid nodes."""
        c = integrate.cumulative_trapezoid(self.values, self.grid, initial=0.0)
        c += self.diagnostics.get("mass_below", 0.0)
        for loc, m in self.atoms:
            c += m * (self.grid >= loc)
        return c


def _as_grid(x_grid) -> np.ndarray:
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size == 0 or not np.all(np.isfinite(x)):
        raise ParameterError("x_grid must be a nonempty 1-d array of finite values")
    return x


def _check_time(t):
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}")


# ---------------------------------------------------------------------------
# directing and parent densities
# ---------------------------------------------------------------------------

def directing_density(beta: float, t_star: float, t: float) -> float:
    """``q(t_*, t) = t^(-beta) M_beta(t_* / t^beta)``, density of operational time.

    The pseudo-space variable ``t_star`` comes first, physical time second.
    """
    if beta == 1.0:
        raise DegenerateLawError("beta = 1: the directing law is the point mass at t_* = t")
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"beta must lie in (0, 1), got {beta}")
    _check_time(t)
    if t_star < 0:
        return 0.0
    tb = t ** beta
    return m_wright(beta, t_star / tb) / tb


def directing_cdf(beta: float, t_star: float, t: float) -> float:
    """``P(t_*(t) <= t_star)``; a unit step at ``t_star = t`` when ``beta = 1``."""
    _check_time(t)
    if beta == 1.0:
        return 1.0 if t_star >= t else 0.0
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"beta must lie in (0, 1], got {beta}")
    if t_star <= 0:
        return 0.0
    return 1.0 - m_wright_tail(beta, t_star / t ** beta)


def parent_density(law: StableLaw, x, t_star: float):
    """``t_*^(-1/alpha) L_alpha^theta(x t_*^(-1/alpha))``; scalar or array ``x``."""
    if not t_star > 0:
        raise ParameterError(f"t_star must be positive, got {t_star}")
    s = t_star ** (-1.0 / law.alpha)
    out = stable_pdf(law, np.asarray(x, dtype=float) * s) * s
    return float(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=64)
def _directing_upper(beta: float, tol: float = _Q_TAIL) -> float:
    """Smallest ``z`` (power of 2) with ``int_z^inf M_beta < tol``; checked numerically."""
    z = 1.0
    while m_wright_tail(beta, z) >= tol:
        z *= 2.0
    return z


def subordinate_cdf(params: DiffusionParams, x, t: float) -> np.ndarray:
    """``P(X(t) <= x)`` by integrating the parent distribution against ``M_beta``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_time(t)
    law, b = params.law, params.beta
    if b == 1.0:
        s = t ** (-1.0 / law.alpha)
        return np.array([stable_cdf(law, v * s) for v in x])
    tb = t ** b

    def f(z):
        s = (tb * z) ** (-1.0 / law.alpha)
        return np.array([stable_cdf(law, v * s) for v in x]) * m_wright(b, z)

    res, err = integrate.quad_vec(f, 0.0, _directing_upper(b), epsabs=1e-11,
                                  epsrel=1e-10, norm="max", limit=2000)
    return np.clip(res, 0.0, 1.0)


def subordinate_density(params: DiffusionParams, x_grid, t: float) -> GridDensity:
    """``u(x, t) = int_0^inf f(x, t_*) q(t_*, t) dt_*`` on ``x_grid``.

    With ``t_* = t^beta v^m`` and ``m = alpha/(alpha - 1)`` the ``t_*^(-1/alpha)``
    singularity of the parent density at ``x = 0`` is removed.  The upper limit
    is chosen so the neglected directing mass is below 1e-9.
    """
    x = _as_grid(x_grid)
    _check_time(t)
    law, a, b = params.law, params.alpha, params.beta
    diag = {"method": "subordination"}
    if b == 1.0:
        values = parent_density(law, x, t)
        diag["error_estimate"] = 0.0
    else:
        if a <= 1.0 and np.any(x == 0.0):
            raise ParameterError("u(0, t) is unbounded for alpha <= 1 and beta < 1; "
                                 "use a grid that avoids x = 0")
        tb = t ** b
        m = min(a / (a - 1.0), 6.0) if a > 1.0 else 2.0
        zmax = _directing_upper(b)

        def f(v):
            v = max(v, 1e-300)
            z = v ** m
            return m * v ** (m - 1.0) * parent_density(law, x, tb * z) * m_wright(b, z)

        values, err = integrate.quad_vec(f, 0.0, zmax ** (1.0 / m), epsabs=1e-10,
                                         epsrel=1e-10, norm="max", limit=4000)
        if not err < 1e-7:
            raise AccuracyError("subordination integral did not converge",
                                alpha=a, theta=params.theta, beta=b, t=t,
                                error_estimate=float(err))
        diag["error_estimate"] = float(err)
        diag["directing_tail"] = m_wright_tail(b, zmax)
    ends = subordinate_cdf(params, np.array([x[0], x[-1]]), t)
    diag["mass_below"] = float(ends[0])
    diag["mass_above"] = float(1.0 - ends[1])
    return GridDensity(x, np.maximum(values, 0.0), [], diag)


# ---------------------------------------------------------------------------
# Fourier inversion of the Mittag-Leffler characteristic function
# ---------------------------------------------------------------------------

def _panels(kmax: float, width: float, order: int = 24):
    """Composite Gauss-Legendre rule on [0, kmax], graded towards the cusp at 0."""
    grade = [g for g in (0.0, 1e-3, 1e-2, 0.05, 0.15, 0.3) if g < min(kmax, width)]
    start = grade[-1]
    n = max(1, int(math.ceil((kmax - start) / width)))
    edges = np.concatenate([grade, np.linspace(start, kmax, n + 1)[1:]])
    x, w = np.polynomial.legendre.leggauss(order)
    lo, hi = edges[:-1, None], edges[1:, None]
    return (0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel(), (0.5 * (hi - lo) * w).ravel()


def _ml_tail_coeffs(beta, tb, n_terms):
    """Coefficients of ``E_beta(-k^a t^b) ~ sum_n c_n k^(-n a)`` for large k."""
    n = np.arange(1, n_terms + 1)
    return n, (-1.0) ** (n + 1) * special.rgamma(1.0 - beta * n) / tb ** n


def _ml_cutoff(alpha, beta, tb, n_terms=8):
    """Wavenumber ``K`` beyond which the ``n_terms`` expansion is used.

    Returns ``(K, bound)`` where ``bound`` limits the first omitted term's
    contribution to the tail integral.
    """
    z = 20.0
    while True:
        k = (z / tb) ** (1.0 / alpha)
        n = n_terms + 1
        p = n * alpha
        c = abs(special.rgamma(1.0 - beta * n)) / tb ** n
        bound = c * k ** (1.0 - p) / (p - 1.0) if p > 1.0 else math.inf
        if bound < 1e-12 or z > 2e3:
            return k, bound
        z *= 1.5


def _fourier_setup(params: DiffusionParams, t: float, xmax: float):
    a, b = params.alpha, params.beta
    tb = t ** b
    kmax, bound = _ml_cutoff(a, b, tb)
    if bound > _TAIL_LIMIT:
        raise AccuracyError("Mittag-Leffler tail expansion too inaccurate at the cutoff",
                            alpha=a, beta=b, t=t, tail_bound=bound)
    nodes, weights = _panels(kmax, min(0.5, math.pi / (4.0 * max(xmax, 1.0))))
    e = np.array([mittag_leffler(b, -(k ** a) * tb) for k in nodes])
    return kmax, bound, nodes, weights * e


def _chunked(fun, x, nodes, weights):
    out = np.empty(len(x))
    for lo in range(0, len(x), 256):
        xs = x[lo:lo + 256, None]
        out[lo:lo + 256] = fun(xs * nodes) @ weights
    return out


def _tail_sum(params, t, kmax, x, part):
    """Tail ``int_K^inf`` of the inversion integrand from the expansion of ``E_beta``.

    ``part`` is ``'cos'`` for the density and ``'sin/k'`` for the distribution
    function.  Each node is one oscillatory (QAWF) quadrature of the summed
    expansion; ``x = 0`` uses the closed form.
    """
    n, c = _ml_tail_coeffs(params.beta, t ** params.beta, 8)
    keep = c != 0.0
    p = n[keep] * params.alpha + (1.0 if part != "cos" else 0.0)
    c = c[keep]

    def f(k):
        return float(np.sum(c * k ** -p))

    out = np.zeros(len(x))
    worst = 0.0
    for j, xv in enumerate(x):
        if xv == 0.0:
            if part == "cos":
                out[j] = float(np.sum(c * kmax ** (1.0 - p) / (p - 1.0)))
            continue
        weight = "cos" if part == "cos" else "sin"
        with warnings.catch_warnings():
            # the error estimate is checked below
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, kmax, np.inf, weight=weight, wvar=abs(xv), limlst=200)
        worst = max(worst, err)
        out[j] = val if part == "cos" else math.copysign(1.0, xv) * val
    if worst > 1e-7:
        raise AccuracyError("oscillatory tail quadrature did not converge",
                            alpha=params.alpha, beta=params.beta, t=t, error_estimate=worst)
    return out


def _far_series(params: DiffusionParams, t: float, x: np.ndarray, kind: str):
    """Large-``|x|`` expansion for ``alpha < 2`` from the small-``k`` terms of ``u_hat``.

    Term ``n`` is the ``n``-th stable tail term with ``t_*^n`` replaced by
    ``E[t_*^n] = t^(n beta) n! / Gamma(1 + n beta)``.  ``kind`` is ``'pdf'``
    or ``'tail'`` (``P(X > x)`` for ``x > 0``, ``P(X < x)`` for ``x < 0``).
    Returns values and a mask of points where the truncated series is
    reliable (smallest term below ``1e-15``, no large cancellation).
    """
    a, th, b = params.alpha, params.theta, params.beta
    n = np.arange(1, 121, dtype=float)[:, None]
    xa = np.abs(x)[None, :]
    th_side = np.where(x >= 0, th, -th)[None, :]
    moment = n * b * math.log(t) - special.gammaln(1.0 + n * b)
    if kind == "pdf":
        logmag = special.gammaln(n * a + 1.0) - (n * a + 1.0) * np.log(xa) + moment
    else:
        logmag = special.gammaln(n * a) - n * a * np.log(xa) + moment
    terms = (-1.0) ** (n + 1) * np.sin(n * np.pi * (a - th_side) / 2.0) * np.exp(logmag) / math.pi
    mags = np.exp(logmag)
    stop = np.argmin(mags, axis=0)
    keep = np.arange(n.shape[0])[:, None] < stop[None, :]
    vals = np.sum(np.where(keep, terms, 0.0), axis=0)
    ok = (mags[stop, np.arange(x.size)] < 1e-15) & (np.max(mags, axis=0) < 1e3) & (xa[0] > 1.0)
    return vals, ok


def _far_split(params: DiffusionParams, t: float, x: np.ndarray, kind: str):
    """Points handled by :func:`_far_series` and their values; the rest go to quadrature."""
    far = np.zeros(x.size, dtype=bool)
    vals = np.zeros(x.size)
    if params.alpha < 2.0 and x.size:
        cand = np.abs(x) > 4.0
        if np.any(cand):
            v, ok = _far_series(params, t, x[cand], kind)
            idx = np.flatnonzero(cand)[ok]
            far[idx] = True
            vals[idx] = v[ok]
    return far, vals


def _check_fourier_support(params: DiffusionParams):
    if params.beta < 1.0 and params.theta != 0.0:
        raise NotImplementedError(
            "Fourier inversion for theta != 0 and beta < 1 needs the Mittag-Leffler "
            "function off the real axis; use subordinate_density")


def _beta_one_nodes(params, t, xmax):
    a, th = params.alpha, params.theta
    c = math.cos(th * math.pi / 2)
    kmax = (40.0 / (c * t)) ** (1.0 / a)
    nodes, weights = _panels(kmax, min(0.5, math.pi / (4.0 * max(xmax, 1.0))))
    return nodes, weights, -t * nodes ** a * complex(c, math.sin(th * math.pi / 2))


def green_function_fourier(params: DiffusionParams, x_grid, t: float) -> GridDensity:
    """``u(x, t) = (1/pi) int_0^inf Re[exp(-i k x) E_beta(-k^alpha i^theta t^beta)] dk``.

    For ``beta < 1`` the integrand decays only like ``k^(-alpha)``; the range
    beyond a cutoff ``K`` is integrated term by term from the large-argument
    expansion of ``E_beta`` (incomplete Gamma functions), so nothing is
    silently truncated.
    """
    x = _as_grid(x_grid)
    _check_time(t)
    _check_fourier_support(params)
    a, b = params.alpha, params.beta
    diag = {"method": "fourier"}
    far, values = _far_split(params, t, x, "pdf")
    near = ~far
    xn = x[near]
    diag["far_field_points"] = int(far.sum())
    if xn.size == 0:
        diag["tail_bound"] = 0.0
    elif b == 1.0:
        if a == 2.0:
            values[near] = np.exp(-xn * xn / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)
        else:
            nodes, weights, expo = _beta_one_nodes(params, t, float(np.max(np.abs(xn))))
            g = np.exp(expo)
            values[near] = (_chunked(np.cos, xn, nodes, weights * g.real)
                            + _chunked(np.sin, xn, nodes, weights * g.imag)) / math.pi
        diag["tail_bound"] = 0.0
    else:
        if a <= 1.0 and np.any(xn == 0.0):
            raise ParameterError("u(0, t) is unbounded for alpha <= 1 and beta < 1; "
                                 "use a grid that avoids x = 0")
        kmax, bound, nodes, we = _fourier_setup(params, t, float(np.max(np.abs(xn))))
        values[near] = (_chunked(np.cos, xn, nodes, we)
                        + _tail_sum(params, t, kmax, xn, "cos")) / math.pi
        diag.update(tail_bound=bound, cutoff=kmax)
    out = GridDensity(x, np.maximum(values, 0.0), [], diag)
    ends = green_function_cdf(params, np.array([x[0], x[-1]]), t)
    out.diagnostics["mass_below"] = float(ends[0])
    out.diagnostics["mass_above"] = float(1.0 - ends[1])
    return out


def green_function_cdf(params: DiffusionParams, x, t: float) -> np.ndarray:
    """``P(X(t) <= x)`` by Gil-Pelaez inversion of the same characteristic function.

    ``F(x) = 1/2 - (1/pi) int_0^inf Im[exp(-i k x) u_hat(k)] / k dk``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _check_time(t)
    _check_fourier_support(params)
    a, b = params.alpha, params.beta
    if b == 1.0:
        s = t ** (-1.0 / a)
        if a == 2.0:
            return special.ndtr(x * s / math.sqrt(2.0))
    far, tail = _far_split(params, t, x, "tail")
    out = np.where(x > 0, 1.0 - tail, tail)
    near = ~far
    xn = x[near]
    if xn.size:
        if b == 1.0:
            out[near] = [stable_cdf(params.law, v * s) for v in xn]
        else:
            kmax, _, nodes, we = _fourier_setup(params, t, float(np.max(np.abs(xn))))
            body = _chunked(np.sin, xn, nodes, we / nodes)
            out[near] = 0.5 + (body + _tail_sum(params, t, kmax, xn, "sin/k")) / math.pi
    return np.clip(out, 0.0, 1.0)


# ---------------------------------------------------------------------------
# directing density through the Riemann-Liouville route
# ---------------------------------------------------------------------------

def leading_density(beta: float, t: float, t_star: float) -> float:
    """``r(t, t_*) = t_*^(-1/beta) L_beta^{-beta}(t t_*^(-1/beta))``, density of physical time."""
    s = t_star ** (-1.0 / beta)
    return extremal_stable_density(ExtremalStableLaw(beta), t * s) * s


def verify_q_via_rl_integral(beta: float, t_grid, t_star: float) -> float:
    """Max discrepancy between ``J_t^(1-beta) r(., t_*)`` and ``q(t_*, .)`` on ``t_grid``.

    ``t_grid`` must be uniform and start at 0; the comparison skips ``t = 0``.
    """
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"beta must lie in (0, 1), got {beta}")
    if not t_star > 0:
        raise ParameterError("t_star must be positive")
    tg = np.asarray(t_grid, dtype=float)
    step = tg[1] - tg[0]
    if tg[0] != 0.0 or not np.allclose(np.diff(tg), step, rtol=1e-9, atol=0.0):
        raise ParameterError("t_grid must be uniform and start at 0")
    r = np.array([leading_density(beta, tv, t_star) for tv in tg])
    q_rl = riemann_liouville_integral(GridFunction(0.0, step, r), 1.0 - beta).values
    q = np.array([directing_density(beta, t_star, tv) for tv in tg[1:]])
    return float(np.max(np.abs(q_rl[1:] - q)))
