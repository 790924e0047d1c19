"""Sample paths by parametric subordination.

A path is stored by its jump points only.  The leading process maps
operational time to physical time, the parent process maps operational time
to space, and the subordinated path plots one against the other.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .stable_laws import (
    ExtremalStableLaw,
    RngStream,
    StableLaw,
    sample_extremal_stable,
    sample_stable,
)
from .subordination import DiffusionParams


@dataclass(frozen=True)
class SamplePath:
    """Right-continuous staircase through ``(epochs[n], values[n])``.

    ``operational_time`` holds ``n * tau_star`` for paths driven by an
    operational clock.  Equal epochs are allowed; the later index wins.
    """

    epochs: np.ndarray
    values: np.ndarray
    operational_time: np.ndarray | None = None

    def __post_init__(self):
        e = np.asarray(self.epochs, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if e.ndim != 1 or e.shape != v.shape or e.size == 0:
            raise ParameterError("epochs and values must be 1-d arrays of equal, nonzero length")
        if e[0] != 0.0 or v[0] != 0.0:
            raise ParameterError("paths start at the origin")
        if np.any(np.diff(e) < 0):
            raise ParameterError("epochs must be nondecreasing")
        object.__setattr__(self, "epochs", e)
        object.__setattr__(self, "values", v)
        if self.operational_time is not None:
            object.__setattr__(self, "operational_time",
                               np.asarray(self.operational_time, dtype=float))

    def __len__(self):
        return self.epochs.size


@dataclass(frozen=True)
class RefinementLevel:
    """Operational-time step; waiting times scale as ``tau^(1/beta)``, jumps as ``tau^(1/alpha)``."""

    tau_star: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.tau_star <= 1.0:
            raise ParameterError(f"tau_star must lie in (0, 1], got {self.tau_star}")


def _check_steps(n_steps):
    if int(n_steps) != n_steps or n_steps < 1:
        raise ParameterError(f"n_steps must be a positive integer, got {n_steps}")
    return int(n_steps)


def _operational(n_steps, tau):
    return np.arange(n_steps + 1) * tau


def leading_increments(beta: float, n: int, tau: float, rng: RngStream) -> np.ndarray:
    """``n`` waiting times ``tau^(1/beta) T`` with ``T`` one-sided stable."""
    law = ExtremalStableLaw(beta)
    return tau ** (1.0 / beta) * sample_extremal_stable(law, rng, n)


def parent_increments(law: StableLaw, n: int, tau: float, rng: RngStream) -> np.ndarray:
    return tau ** (1.0 / law.alpha) * sample_stable(law, rng, n)


def leading_path(beta: float, n_steps: int, level: RefinementLevel, rng: RngStream) -> SamplePath:
    """Physical time ``t_n`` against operational time ``n tau_star``."""
    n = _check_steps(n_steps)
    tau = level.tau_star
    ops = _operational(n, tau)
    if beta == 1.0:
        return SamplePath(ops, ops.copy(), ops)
    values = np.concatenate([[0.0], np.cumsum(leading_increments(beta, n, tau, rng))])
    return SamplePath(ops, values, ops)


def parent_path(law: StableLaw, n_steps: int, level: RefinementLevel, rng: RngStream) -> SamplePath:
    """Position ``x_n`` against operational time ``n tau_star``."""
    n = _check_steps(n_steps)
    tau = level.tau_star
    ops = _operational(n, tau)
    values = np.concatenate([[0.0], np.cumsum(parent_increments(law, n, tau, rng))])
    return SamplePath(ops, values, ops)


def directing_path_from_leading(leading: SamplePath) -> SamplePath:
    """Generalised inverse ``t_*(t) = tau_star max{n : t_n <= t}`` of a leading path."""
    if np.any(np.diff(leading.values) < 0):
        raise ParameterError("leading path values must be nondecreasing")
    return SamplePath(leading.values, leading.epochs, leading.operational_time)


def subordinated_path(params: DiffusionParams, n_steps: int, level: RefinementLevel,
                      rng: tuple[RngStream, RngStream]) -> SamplePath:
    """``x(t) = y(t_*(t))`` from independent leading and parent streams.

    Jump ``n`` happens at physical time ``t_n`` and lands on ``x_n``; the
    horizontal segments are the waiting times of the leading path.
    """
    leading_rng, parent_rng = rng
    lead = leading_path(params.beta, n_steps, level, leading_rng)
    par = parent_path(params.law, n_steps, level, parent_rng)
    return SamplePath(lead.values, par.values, lead.epochs)


def evaluate_path(path: SamplePath, t):
    """Right-continuous staircase value at ``t >= 0`` (scalar or array)."""
    ta = np.asarray(t, dtype=float)
    if np.any(ta < 0):
        raise ParameterError("paths are evaluated at t >= 0")
    idx = np.searchsorted(path.epochs, ta, side="right") - 1
    out = path.values[idx]
    return float(out) if out.ndim == 0 else out


def path_streams(master_seed: int, index: int) -> tuple[RngStream, RngStream]:
    """Streams ``(2i, 2i+1)`` for the leading and parent walks of path ``i``."""
    return RngStream(master_seed, 2 * index), RngStream(master_seed, 2 * index + 1)


def write_path_csv(path: SamplePath, filename) -> None:
    """Columns ``index, operational_time, physical_time, x``, one row per jump point."""
    ops = path.operational_time
    if ops is None:
        ops = np.full(len(path), np.nan)
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "operational_time", "physical_time", "x"])
        for i in range(len(path)):
            w.writerow([i, "%.17g" % ops[i], "%.17g" % path.epochs[i], "%.17g" % path.values[i]])


def read_path_csv(filename) -> SamplePath:
    data = np.atleast_1d(np.genfromtxt(filename, delimiter=",", names=True))
    return SamplePath(data["physical_time"], data["x"], data["operational_time"])
