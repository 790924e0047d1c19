"""Monte-Carlo ensembles, comparison against analytic laws, and convergence studies."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .ctrw_engine import CtrwSpec, diffusion_limit_symbol, montroll_weiss, well_scaled_h
from .errors import AccuracyError, ParameterError
from .paths import (
    RefinementLevel,
    SamplePath,
    leading_increments,
    leading_path,
    parent_increments,
    parent_path,
    path_streams,
    subordinated_path,
)
from .stable_laws import StableLaw, stable_cdf
from .subordination import (
    DiffusionParams,
    GridDensity,
    green_function_cdf,
    green_function_fourier,
    subordinate_cdf,
    subordinate_density,
)

# evaluation points used for the exact-CDF side of a KS distance
KS_POINTS = 4000


class EnsembleInterrupted(RuntimeError):
    """Raised when an ensemble cannot finish; carries the completed prefix."""

    def __init__(self, message, completed, partial):
        super().__init__(message)
        self.completed = completed
        self.partial = partial


@dataclass(frozen=True)
class RunConfig:
    params: DiffusionParams
    n_paths: int
    n_steps: int
    tau_star: float
    master_seed: int
    observation_times: tuple = (1.0,)
    x_min: float = -10.0
    x_max: float = 10.0
    points: int = 401
    output_dir: str = "run"

    def __post_init__(self):
        if int(self.n_paths) != self.n_paths or self.n_paths < 1:
            raise ParameterError("n_paths must be a positive integer")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ParameterError("n_steps must be a positive integer")
        RefinementLevel(self.tau_star)
        times = tuple(float(t) for t in self.observation_times)
        if not times or any(t <= 0 for t in times) or list(times) != sorted(times):
            raise ParameterError("observation times must be positive and sorted")
        object.__setattr__(self, "observation_times", times)
        if not self.x_min < self.x_max or self.points < 2:
            raise ParameterError("grid needs x_min < x_max and at least 2 points")

    @property
    def x_grid(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.points)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = asdict(self.params)
        d["observation_times"] = list(self.observation_times)
        return d


@dataclass
class ComparisonReport:
    ks_distance: float
    ks_threshold: float
    n_samples: int
    sup_norm_density_gap: float
    sample_moments: list
    analytic_reference: str
    t: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.ks_distance < self.ks_threshold

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sample_moments"] = [list(m) for m in self.sample_moments]
        d["passed"] = self.passed
        return d


# ---------------------------------------------------------------------------
# ensembles
# ---------------------------------------------------------------------------

def terminal_values(params: DiffusionParams, tau: float, master_seed: int, index: int,
                    times, chunk: int = 256) -> np.ndarray:
    """Values of path ``index`` at each of the sorted ``times``.

    Leading increments are drawn in growing chunks until the physical clock
    passes the last time.  Deviates come from a single stream in order, so the
    result does not depend on ``chunk`` and equals evaluating the full
    :func:`subordinated_path` with the same streams.
    """
    times = np.asarray(times, dtype=float)
    lead_rng, par_rng = path_streams(master_seed, index)
    tmax = times[-1]
    if params.beta == 1.0:
        n = int(math.floor(tmax / tau)) + 2
        clock = np.arange(n + 1) * tau
    else:
        parts, total = [], 0.0
        while True:
            inc = leading_increments(params.beta, chunk, tau, lead_rng)
            parts.append(inc)
            total += float(inc.sum())
            if total > tmax:
                clock = np.concatenate([[0.0], np.cumsum(np.concatenate(parts))])
                if clock[-1] > tmax:
                    break
            chunk *= 2
    counts = np.searchsorted(clock, times, side="right") - 1
    n_par = int(counts[-1])
    x = np.zeros(n_par + 1)
    if n_par:
        x[1:] = np.cumsum(parent_increments(params.law, n_par, tau, par_rng))
    return x[counts]


def directing_samples(beta: float, n_paths: int, tau: float, master_seed: int,
                      t: float) -> np.ndarray:
    """``t_*(t) = tau max{n : t_n <= t}`` for ``n_paths`` inverted leading paths.

    Path ``i`` uses the leading stream of :func:`path_streams`, so these are
    the operational times of the ensemble paths with the same seed.
    """
    if not 0.0 < beta < 1.0:
        raise ParameterError(f"beta must lie in (0, 1), got {beta}")
    if not t > 0:
        raise ParameterError("t must be positive")
    out = np.empty(n_paths)
    for i in range(n_paths):
        rng = path_streams(master_seed, i)[0]
        count, total, chunk = 0, 0.0, 256
        while True:
            clock = total + np.cumsum(leading_increments(beta, chunk, tau, rng))
            k = int(np.searchsorted(clock, t, side="right"))
            count += k
            if k < chunk:
                break
            total = float(clock[-1])
            chunk *= 2
        out[i] = count * tau
    return out


def _block(args):
    params, tau, seed, lo, hi, times, chunk = args
    return np.array([terminal_values(params, tau, seed, i, times, chunk) for i in range(lo, hi)])


def run_ensemble(config: RunConfig, workers: int = 1) -> dict:
    """``{t: array of path values at t}`` for every observation time.

    Path ``i`` always uses streams ``(2i, 2i + 1)`` and blocks are merged by
    index, so the result is identical for any worker count.
    """
    if workers < 1:
        raise ParameterError("workers must be at least 1")
    n, times = config.n_paths, config.observation_times
    size = max(1, min(5000, -(-n // workers)))
    blocks = [(config.params, config.tau_star, config.master_seed, lo, min(n, lo + size),
               times, config.n_steps) for lo in range(0, n, size)]
    results = []
    try:
        if workers == 1:
            for b in blocks:
                results.append(_block(b))
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_block, blocks))
    except MemoryError as exc:
        done = sum(len(r) for r in results)
        partial = np.concatenate(results) if results else np.empty((0, len(times)))
        raise EnsembleInterrupted(f"ran out of memory after {done} paths", done, partial) from exc
    values = np.concatenate(results, axis=0)
    return {t: values[:, j].copy() for j, t in enumerate(times)}


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------

def ks_distance(samples, cdf, max_points: int = KS_POINTS) -> float:
    """Kolmogorov-Smirnov distance between ``samples`` and a vectorised ``cdf``.

    With more samples than ``max_points`` the exact CDF is evaluated at evenly
    spaced order statistics only; monotonicity then bounds the distance at the
    skipped ones, and that upper bound is returned.
    """
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    if n == 0:
        raise ParameterError("KS distance needs at least one sample")
    if n <= max_points:
        idx = np.arange(n)
    else:
        idx = np.unique(np.linspace(0, n - 1, max_points).round().astype(int))
    f = np.asarray(cdf(xs[idx]), dtype=float)
    # empirical CDF jumps from idx/n to (idx+1)/n at xs[idx]; ties take the last index
    last = np.searchsorted(xs, xs[idx], side="right")
    first = np.searchsorted(xs, xs[idx], side="left")
    d = max(np.max(last / n - f), np.max(f - first / n))
    if idx.size < n:
        # between consecutive evaluated order statistics i < j
        gap_hi = last[1:] / n - f[:-1]
        gap_lo = f[1:] - first[:-1] / n
        d = max(d, float(np.max(gap_hi)), float(np.max(gap_lo)))
    return float(min(max(d, 0.0), 1.0))


def ks_threshold(n: int) -> float:
    """95% one-sample band plus a 0.005 discretisation allowance."""
    return 1.36 / math.sqrt(n) + 0.005


def analytic_cdf(params: DiffusionParams, t: float, reference: str = "fourier"):
    """Vectorised CDF of ``u(., t)`` and the tag of the evaluator used."""
    if reference == "fourier" and not (params.beta < 1.0 and params.theta != 0.0):
        return (lambda x: green_function_cdf(params, x, t)), "green_function_fourier"
    return (lambda x: subordinate_cdf(params, x, t)), "subordinate_density"


def analytic_density(params: DiffusionParams, x, t: float, reference: str = "fourier") -> GridDensity:
    if reference == "fourier" and not (params.beta < 1.0 and params.theta != 0.0):
        return green_function_fourier(params, x, t)
    return subordinate_density(params, x, t)


def histogram_density(samples, x_grid) -> np.ndarray:
    """Histogram estimate on cells centred at the (uniform) grid nodes."""
    x = np.asarray(x_grid, dtype=float)
    dx = x[1] - x[0]
    edges = np.concatenate([x - dx / 2, [x[-1] + dx / 2]])
    counts, _ = np.histogram(samples, bins=edges)
    return counts / (len(samples) * dx)


def sample_moments(samples) -> list:
    """``(order, value, standard error)`` for the mean and the variance."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    mean = float(x.mean())
    if n < 2:
        return [(1, mean, math.nan), (2, 0.0, math.nan)]
    var = float(x.var(ddof=1))
    m4 = float(np.mean((x - mean) ** 4))
    return [(1, mean, math.sqrt(var / n)),
            (2, var, math.sqrt(max(m4 - var * var, 0.0) / n))]


def compare_to_analytic(samples, params: DiffusionParams, t: float, x_grid,
                        reference: str = "fourier") -> ComparisonReport:
    """KS distance, histogram gap and moments of ``samples`` against ``u(., t)``."""
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise ParameterError("ensemble is empty")
    cdf, tag = analytic_cdf(params, t, reference)
    ks = ks_distance(samples, cdf)
    dens = analytic_density(params, x_grid, t, reference)
    hist = histogram_density(samples, dens.grid)
    gap = float(np.max(np.abs(hist - dens.values)))
    ends = cdf(np.array([dens.grid[0], dens.grid[-1]]))
    return ComparisonReport(
        ks_distance=ks, ks_threshold=ks_threshold(samples.size), n_samples=int(samples.size),
        sup_norm_density_gap=gap, sample_moments=sample_moments(samples),
        analytic_reference=tag, t=float(t),
        extra={"cdf_at_grid_ends": [float(ends[0]), float(ends[1])],
               "grid": dens.grid, "u_analytic": dens.values, "u_empirical": hist},
    )


# ---------------------------------------------------------------------------
# transform-domain limit study
# ---------------------------------------------------------------------------

PROBE_KAPPA = (-4.0, -1.0, -0.25, 0.25, 1.0, 4.0)
PROBE_S = (0.25, 1.0, 4.0, 1.0 + 2.0j)


def transform_gap(spec: CtrwSpec, params: DiffusionParams, kappas=PROBE_KAPPA, svals=PROBE_S) -> float:
    return max(abs(montroll_weiss(spec, k, s) - diffusion_limit_symbol(params, k, s))
               for k in kappas for s in svals)


def ctrw_limit_study(spec: CtrwSpec, params: DiffusionParams, tau_sequence,
                     kappas=PROBE_KAPPA, svals=PROBE_S) -> list:
    """Rows ``{tau, h, rho, gap}`` with ``h`` from the well-scaled relation ``rho = 1``."""
    taus = [float(t) for t in tau_sequence]
    if not taus or any(t <= 0 for t in taus) or any(b >= a for a, b in zip(taus, taus[1:])):
        raise ParameterError("tau_sequence must be positive and strictly decreasing")
    rows = []
    for tau in taus:
        s = spec.rescaled(tau, well_scaled_h(spec, tau))
        rows.append({"tau": tau, "h": s.h, "rho": s.rho, "gap": transform_gap(s, params, kappas, svals)})
    return rows


# ---------------------------------------------------------------------------
# figure data
# ---------------------------------------------------------------------------

FIGURE_CASES = {
    "left": DiffusionParams(2.0, 0.0, 0.80),
    "right": DiffusionParams(1.5, 0.0, 0.90),
}
FIGURE_STEPS = 10000


@dataclass
class FigureData:
    figure: int
    side: str
    params: DiffusionParams
    path: SamplePath
    columns: tuple  # which CSV columns carry data: ("physical_time", "x")
    checks: dict


def reproduce_figures(figure: int, side: str, seed: int) -> FigureData:
    """Path data for the leading (1), parent (2) or subordinated (3) process.

    Figure 3 is the composition of figures 1 and 2 for the same side and
    seed; each figure's statistical property is checked before returning.
    """
    if figure not in (1, 2, 3) or side not in FIGURE_CASES:
        raise ParameterError("figure must be 1, 2 or 3 and side left or right")
    params = FIGURE_CASES[side]
    level = RefinementLevel(1.0)
    lead_rng, par_rng = path_streams(seed, 0)
    checks = {}
    if figure == 1:
        path = leading_path(params.beta, FIGURE_STEPS, level, lead_rng)
        ok = bool(np.all(np.diff(path.values) > 0))
        checks["strictly_increasing"] = ok
        cols = ("physical_time",)
        if not ok:
            raise AccuracyError("leading path is not strictly increasing", figure=1)
    elif figure == 2:
        path = parent_path(params.law, FIGURE_STEPS, level, par_rng)
        inc = np.diff(path.values)
        ks = ks_distance(inc, lambda x: np.array([stable_cdf(params.law, v) for v in x]),
                         max_points=2000)
        checks.update(increment_ks=ks, ks_threshold=ks_threshold(inc.size))
        cols = ("x",)
        if ks >= ks_threshold(inc.size):
            raise AccuracyError("parent increments fail the stable-law KS check", ks=ks)
    else:
        path = subordinated_path(params, FIGURE_STEPS, level, (lead_rng, par_rng))
        lead = leading_path(params.beta, FIGURE_STEPS, level, path_streams(seed, 0)[0])
        par = parent_path(params.law, FIGURE_STEPS, level, path_streams(seed, 0)[1])
        ok = bool(np.array_equal(path.epochs, lead.values) and np.array_equal(path.values, par.values))
        checks["waiting_jump_correspondence"] = ok
        checks["horizontal_segments"] = int(np.count_nonzero(np.diff(path.epochs) > 0))
        cols = ("physical_time", "x")
        if not ok:
            raise AccuracyError("subordinated path is not the composition of its walks", figure=3)
    return FigureData(figure, side, params, path, cols, checks)


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)
