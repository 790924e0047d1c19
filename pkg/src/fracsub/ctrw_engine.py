"""Uncoupled continuous-time random walks: laws, series solution, Montroll-Weiss."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, signal, special, stats

from .errors import ParameterError, TruncationError
from .special_functions import m_wright, mittag_leffler
from .stable_laws import (
    ExtremalStableLaw,
    StableLaw,
    extremal_stable_cdf,
    riesz_feller_symbol,
    stable_cdf,
    stable_pdf,
)
from .subordination import DiffusionParams, GridDensity, _as_grid

_WAITING_KINDS = ("exponential", "mittag_leffler", "extremal_stable", "deterministic")
_JUMP_KINDS = ("stable", "gaussian", "grid")
# cap on the half-length (in grid steps) of convolution work arrays
_MAX_HALF = 2 ** 17


def _check_s(s):
    s = complex(s)
    if not s.real > 0:
        raise ParameterError(f"Laplace variable needs Re(s) > 0, got {s}")
    return s


# ---------------------------------------------------------------------------
# waiting-time laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WaitingLaw:
    """Waiting-time law with declared Laplace asymptotics ``1 - phi(s) ~ lambda s^beta``.

    Use the named constructors; ``rate`` only matters for the exponential law.
    """

    kind: str
    beta: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.kind not in _WAITING_KINDS:
            raise ParameterError(f"unknown waiting law {self.kind!r}")
        if not 0.0 < self.beta <= 1.0:
            raise ParameterError(f"beta must lie in (0, 1], got {self.beta}")
        if not self.rate > 0:
            raise ParameterError("rate must be positive")
        if self.kind in ("exponential", "deterministic") and self.beta != 1.0:
            raise ParameterError(f"{self.kind} waiting times have beta = 1")

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "WaitingLaw":
        return cls("exponential", 1.0, rate)

    @classmethod
    def mittag_leffler(cls, beta: float) -> "WaitingLaw":
        return cls("mittag_leffler", beta)

    @classmethod
    def extremal_stable(cls, beta: float) -> "WaitingLaw":
        return cls("extremal_stable", beta)

    @classmethod
    def deterministic_unit(cls) -> "WaitingLaw":
        return cls("deterministic")

    @property
    def lambda_coeff(self) -> float:
        return 1.0 / self.rate if self.kind == "exponential" else 1.0

    def laplace(self, s) -> complex:
        """``phi~(s)`` for complex ``s`` with positive real part."""
        s = _check_s(s)
        if self.kind == "exponential":
            return self.rate / (self.rate + s)
        if self.kind == "mittag_leffler":
            return 1.0 / (1.0 + s ** self.beta)
        if self.kind == "extremal_stable":
            return np.exp(-s ** self.beta)
        return np.exp(-s)

    def survival(self, t: float) -> float:
        if t < 0:
            raise ParameterError("survival is defined for t >= 0")
        if t == 0:
            return 1.0
        if self.kind == "exponential":
            return math.exp(-self.rate * t)
        if self.kind == "mittag_leffler":
            return mittag_leffler(self.beta, -t ** self.beta)
        if self.kind == "extremal_stable" and self.beta < 1.0:
            return 1.0 - extremal_stable_cdf(ExtremalStableLaw(self.beta), t)
        return 1.0 if t < 1.0 else 0.0

    def count_probabilities(self, t: float, n_max: int) -> np.ndarray:
        """``v_n(t)``, the probability of exactly ``n`` renewals in ``[0, t]``, n = 0..n_max."""
        v = np.zeros(n_max + 1)
        if t <= 0:
            v[0] = 1.0
            return v
        n = np.arange(n_max + 1)
        if self.kind == "exponential":
            return stats.poisson.pmf(n, self.rate * t)
        if self.kind == "deterministic" or self.beta == 1.0:
            k = int(math.floor(t))
            if k <= n_max:
                v[k] = 1.0
            return v
        if self.kind == "extremal_stable":
            law = ExtremalStableLaw(self.beta)
            # P(t_n <= t) with t_n distributed as n^(1/beta) S
            cdf = [1.0] + [extremal_stable_cdf(law, t * k ** (-1.0 / self.beta))
                           for k in range(1, n_max + 2)]
            return np.maximum(-np.diff(cdf), 0.0)
        return _ml_counts(self.beta, t, n_max)


def _ml_counts(beta, t, n_max):
    """Renewal counts for Mittag-Leffler waiting times.

    The count is a unit Poisson process run on the inverse stable clock, so
    ``v_n(t) = int_0^inf e^(-y) y^n / n! q(y, t) dy`` with the M-Wright ``q``.
    """
    tb = t ** beta
    v = np.empty(n_max + 1)
    v[0] = mittag_leffler(beta, -tb)
    for n in range(1, n_max + 1):
        def f(z, n=n):
            y = tb * z
            return math.exp(n * math.log(y) - y - math.lgamma(n + 1)) * m_wright(beta, z) if y > 0 else 0.0

        peak = n / tb
        val, _ = integrate.quad(f, 0.0, max(4 * peak, 60.0), points=[peak], limit=400,
                                epsabs=1e-14, epsrel=1e-11)
        tail, _ = integrate.quad(f, max(4 * peak, 60.0), np.inf, limit=200, epsabs=1e-15)
        v[n] = val + tail
    return v


# ---------------------------------------------------------------------------
# jump laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JumpLaw:
    """Jump-size law with declared Fourier asymptotics ``1 - w(k) ~ mu |k|^alpha i^(theta sgn k)``.

    Grid laws carry their own ``(mu, alpha, theta)`` metadata, since these are
    analytic properties that are not estimated from the samples.
    """

    kind: str
    stable: StableLaw | None = None
    variance: float = 2.0
    grid_start: float = 0.0
    grid_step: float = 1.0
    grid_values: tuple = ()
    declared: tuple = (1.0, 2.0, 0.0)

    def __post_init__(self):
        if self.kind not in _JUMP_KINDS:
            raise ParameterError(f"unknown jump law {self.kind!r}")
        if self.kind == "stable" and self.stable is None:
            raise ParameterError("stable jump law needs a StableLaw")
        if not self.variance > 0:
            raise ParameterError("variance must be positive")

    @classmethod
    def stable_law(cls, law: StableLaw) -> "JumpLaw":
        return cls("stable", stable=law)

    @classmethod
    def gaussian(cls, variance: float = 2.0) -> "JumpLaw":
        return cls("gaussian", variance=variance)

    @classmethod
    def from_grid(cls, start, step, values, mu, alpha, theta=0.0) -> "JumpLaw":
        v = np.asarray(values, dtype=float)
        if np.any(v < 0) or not step > 0:
            raise ParameterError("grid jump density must be nonnegative with positive step")
        v = v / (v.sum() * step)
        StableLaw(alpha, theta)
        return cls("grid", grid_start=float(start), grid_step=float(step),
                   grid_values=tuple(v), declared=(float(mu), float(alpha), float(theta)))

    @property
    def mu_coeff(self) -> float:
        if self.kind == "stable":
            return 1.0
        if self.kind == "gaussian":
            return self.variance / 2.0
        return self.declared[0]

    @property
    def alpha(self) -> float:
        if self.kind == "stable":
            return self.stable.alpha
        return 2.0 if self.kind == "gaussian" else self.declared[1]

    @property
    def theta(self) -> float:
        if self.kind == "stable":
            return self.stable.theta
        return 0.0 if self.kind == "gaussian" else self.declared[2]

    def fourier(self, kappa: float) -> complex:
        """``w^(k) = int exp(i k x) w(x) dx``."""
        if self.kind == "stable":
            return complex(np.exp(-riesz_feller_symbol(self.stable, kappa)))
        if self.kind == "gaussian":
            return complex(math.exp(-0.5 * self.variance * kappa * kappa))
        x = self.grid_start + self.grid_step * np.arange(len(self.grid_values))
        return complex(np.sum(np.asarray(self.grid_values) * np.exp(1j * kappa * x)) * self.grid_step)

    def density(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "stable":
            return stable_pdf(self.stable, x)
        if self.kind == "gaussian":
            return np.exp(-x * x / (2 * self.variance)) / math.sqrt(2 * math.pi * self.variance)
        g = self.grid_start + self.grid_step * np.arange(len(self.grid_values))
        return np.interp(x, g, self.grid_values, left=0.0, right=0.0)

    def cdf(self, x: float) -> float:
        if self.kind == "stable":
            return stable_cdf(self.stable, x)
        if self.kind == "gaussian":
            return float(special.ndtr(x / math.sqrt(self.variance)))
        g = self.grid_start + self.grid_step * np.arange(len(self.grid_values))
        c = integrate.cumulative_trapezoid(self.grid_values, g, initial=0.0)
        return float(np.interp(x, g, c, left=0.0, right=1.0))

    def support_halfwidth(self, tol: float = 1e-12) -> float:
        """Half-width outside of which each tail carries less than ``tol``."""
        if self.kind == "gaussian":
            return float(-special.ndtri(tol) * math.sqrt(self.variance))
        if self.kind == "grid":
            g0 = self.grid_start
            return max(abs(g0), abs(g0 + self.grid_step * (len(self.grid_values) - 1)))
        lo, hi = 1.0, 1.0
        while 1.0 - self.cdf(hi) > tol and hi < 1e7:
            hi *= 2.0
        while self.cdf(-lo) > tol and lo < 1e7:
            lo *= 2.0
        return max(lo, hi)


# ---------------------------------------------------------------------------
# the walk
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CtrwSpec:
    """A CTRW with jumps scaled by ``h`` and waiting times scaled by ``tau``."""

    waiting: WaitingLaw
    jump: JumpLaw
    tau: float = 1.0
    h: float = 1.0

    def __post_init__(self):
        if not (self.tau > 0 and self.h > 0):
            raise ParameterError("tau and h must be positive")

    @property
    def rho(self) -> float:
        """``mu h^alpha / (lambda tau^beta)``; the well-scaled limit needs rho = 1."""
        return (self.jump.mu_coeff * self.h ** self.jump.alpha
                / (self.waiting.lambda_coeff * self.tau ** self.waiting.beta))

    def rescaled(self, tau: float, h: float) -> "CtrwSpec":
        return CtrwSpec(self.waiting, self.jump, tau, h)


def well_scaled_h(spec: CtrwSpec, tau: float) -> float:
    """Space scale ``h = (lambda tau^beta / mu)^(1/alpha)`` making ``rho = 1``."""
    lam, b = spec.waiting.lambda_coeff, spec.waiting.beta
    return (lam * tau ** b / spec.jump.mu_coeff) ** (1.0 / spec.jump.alpha)


def survival(waiting: WaitingLaw, t: float) -> float:
    """``Psi(t) = P(T > t)``."""
    return waiting.survival(t)


def _scaled_base(jump: JumpLaw, h: float, dx: float, half: int):
    """Rescaled jump density ``w(x/h)/h`` on ``k dx``, ``|k| <= half``, plus lost tail mass."""
    xs = dx * np.arange(-half, half + 1)
    w = jump.density(xs / h) / h
    if jump.kind == "grid":
        lost = 0.0
    else:
        edge = (half + 0.5) * dx / h
        lost = jump.cdf(-edge) + 1.0 - jump.cdf(edge)
    return np.maximum(w, 0.0), lost


def _uniform_step(x: np.ndarray) -> float:
    if x.size < 2:
        raise ParameterError("x_grid needs at least two points")
    dx = x[1] - x[0]
    if not dx > 0 or not np.allclose(np.diff(x), dx, rtol=1e-9, atol=1e-12):
        raise ParameterError("x_grid must be uniform and increasing")
    return float(dx)


def _window_masses(w, dx, half, x):
    """Mass of a centred work array below and above the window ``[x0, xN]``.

    Endpoint cells count half, matching the trapezoid rule used on the grid.
    """
    xs = dx * np.arange(-half, half + 1)
    tol = 1e-6 * dx  # grid endpoints that sit on a work node must not count twice
    below = dx * (w[xs < x[0] - tol].sum() + 0.5 * np.interp(x[0], xs, w))
    above = dx * (w[xs > x[-1] + tol].sum() + 0.5 * np.interp(x[-1], xs, w))
    return below, above


def ctrw_series_density(spec: CtrwSpec, x_grid, t: float, n_max: int,
                        tol: float = 1e-6) -> GridDensity:
    """``p(x, t) = sum_n v_n(t) w_n(x)`` truncated at ``n_max``.

    The ``n = 0`` term is the atom ``Psi(t)`` at the origin.  ``w_n`` is built
    by iterated discrete convolution on the grid step, on a centred work array
    wide enough for the ``n_max``-fold spread.  Raises :class:`TruncationError`
    when ``1 - sum v_n(t)`` exceeds ``tol``.
    """
    x = _as_grid(x_grid)
    dx = _uniform_step(x)
    if n_max < 0:
        raise ParameterError("n_max must be nonnegative")
    if t < 0:
        raise ParameterError("t must be nonnegative")
    v = spec.waiting.count_probabilities(t / spec.tau, n_max)
    neglected = max(0.0, 1.0 - math.fsum(v))
    diag = {"method": "ctrw_series", "n_max": n_max, "neglected_mass": neglected}
    if neglected > tol:
        raise TruncationError("series truncated too early", n_max=n_max, t=t,
                              neglected_mass=neglected, tolerance=tol)

    window = int(math.ceil(max(abs(x[0]), abs(x[-1])) / dx)) + 1
    base_half = int(math.ceil(spec.jump.support_halfwidth() * spec.h / dx)) + 1
    spread = max(1.0, n_max ** (1.0 / spec.jump.alpha))
    half_cap = min(_MAX_HALF, max(window, int(base_half * spread)))
    base_half = min(base_half, half_cap)
    base, lost = _scaled_base(spec.jump, spec.h, dx, base_half)

    values = np.zeros(x.size)
    below = above = unresolved = 0.0
    wn, half = np.array([1.0 / dx]), 0  # w_0 = delta on the grid
    for n in range(1, n_max + 1):
        wn = signal.fftconvolve(wn, base) * dx
        half += base_half
        if half > half_cap:
            cut = half - half_cap
            wn, half = wn[cut:-cut], half_cap
        wn = np.maximum(wn, 0.0)
        if v[n] == 0.0:
            continue
        xs = dx * np.arange(-half, half + 1)
        values += v[n] * np.interp(x, xs, wn, left=0.0, right=0.0)
        b, a = _window_masses(wn, dx, half, x)
        below += v[n] * b
        above += v[n] * a
        unresolved += v[n] * (1.0 - wn.sum() * dx)
    diag.update(mass_below=below, mass_above=above, mass_unresolved=unresolved,
                base_tail_mass=lost)
    return GridDensity(x, values, [(0.0, float(v[0]))], diag)


def _poisson_cutoff(mean: float, tail: float = 1e-12) -> int:
    n = int(stats.poisson.isf(tail, mean)) if mean > 0 else 0
    while stats.poisson.sf(n, mean) >= tail:
        n += 1
    return n


def compound_poisson_density(m: float, jump: JumpLaw, x_grid, t: float,
                             n_max: int | None = None) -> GridDensity:
    """``p(x, t) = exp(-m t) sum_n (m t)^n / n! w_n(x)``.

    Summed until the Poisson tail is below 1e-12.  Gaussian and stable jumps
    use the closed-form n-fold convolutions; grid laws fall back to discrete
    convolution.
    """
    if not m > 0:
        raise ParameterError("rate m must be positive")
    if t < 0:
        raise ParameterError("t must be nonnegative")
    x = _as_grid(x_grid)
    mean = m * t
    n_need = _poisson_cutoff(mean)
    if n_max is not None and n_max < n_need:
        raise TruncationError("n_max too small for a Poisson tail below 1e-12",
                              n_max=n_max, required=n_need,
                              neglected_mass=float(stats.poisson.sf(n_max, mean)))
    n_top = n_need
    weights = stats.poisson.pmf(np.arange(n_top + 1), mean)
    diag = {"method": "compound_poisson", "n_terms": n_top,
            "neglected_mass": float(stats.poisson.sf(n_top, mean))}
    if jump.kind == "grid":
        spec = CtrwSpec(WaitingLaw.exponential(m), jump)
        out = ctrw_series_density(spec, x, t, n_top, tol=1e-11)
        out.diagnostics.update(diag)
        return out
    values = np.zeros(x.size)
    below = above = 0.0
    for n in range(1, n_top + 1):
        if jump.kind == "gaussian":
            sd = math.sqrt(n * jump.variance)
            values += weights[n] * np.exp(-0.5 * (x / sd) ** 2) / (sd * math.sqrt(2 * math.pi))
            below += weights[n] * special.ndtr(x[0] / sd)
            above += weights[n] * special.ndtr(-x[-1] / sd)
        else:
            c = n ** (-1.0 / jump.alpha)
            values += weights[n] * stable_pdf(jump.stable, x * c) * c
            below += weights[n] * stable_cdf(jump.stable, x[0] * c)
            above += weights[n] * (1.0 - stable_cdf(jump.stable, x[-1] * c))
    diag.update(mass_below=float(below), mass_above=float(above))
    return GridDensity(x, values, [(0.0, float(weights[0]))], diag)


def montroll_weiss(spec: CtrwSpec, kappa: float, s) -> complex:
    """``p^~(k, s) = (1 - phi~(tau s)) / s / (1 - w^(h k) phi~(tau s))``."""
    s = _check_s(s)
    phi = spec.waiting.laplace(spec.tau * s)
    w = spec.jump.fourier(spec.h * kappa)
    return complex((1.0 - phi) / s / (1.0 - w * phi))


def diffusion_limit_symbol(params: DiffusionParams, kappa: float, s) -> complex:
    """``s^(beta-1) / (s^beta + |k|^alpha i^(theta sgn k))``."""
    s = _check_s(s)
    psi = riesz_feller_symbol(params.law, kappa)
    b = params.beta
    return complex(s ** (b - 1.0) / (s ** b + psi))
