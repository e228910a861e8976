"""Path sampling and seeded Monte Carlo estimation.

Two deliberately independent samplers are provided:

* ``sample_finite`` draws the exact grid marginal N(0, A) through a Cholesky
  factor of the closed-form grid covariance;
* ``sample_kl`` synthesizes paths from the truncated eigen-expansion
  sum_n sqrt(lambda_n) * xi_n * phi_n(t), which is exactly periodic.

Disagreement between the two beyond statistical tolerance flags a bug in
either the kernel closed forms or the sampling.

Reproducibility contract: draws are partitioned into fixed-size chunks, each
chunk owns a counter-based Philox stream keyed by (seed, chunk index), and
partial results are reduced in fixed chunk order.  The worker/thread count
therefore cannot change any digit of an estimate.
"""

from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import kernel
from .params import MeasureParams, ParameterError

DEFAULT_GRID = 256
DEFAULT_MODES = 512
DEFAULT_CHUNK = 4096


class FactorizationError(RuntimeError):
    """Grid covariance numerically non-positive-definite."""


class NonFiniteSamplesError(RuntimeError):
    """Too many non-finite functional values for a trustworthy estimate."""


@dataclass(frozen=True)
class PathSample:
    """One discretized trajectory on a uniform grid over [0, beta], periodic."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.times.shape != self.values.shape:
            raise ParameterError("times and values must have equal length")
        if not np.isclose(self.values[0], self.values[-1], rtol=0, atol=1e-9 * (1 + abs(self.values[0]))):
            raise ParameterError("path must close periodically: values[0] == values[-1]")


class PathBatch(Sequence):
    """A batch of paths sharing one time grid; rows of ``values`` are paths."""

    def __init__(self, times: np.ndarray, values: np.ndarray):
        self.times = times
        self.values = values

    def __len__(self) -> int:
        return self.values.shape[0]

    def __getitem__(self, i) -> PathSample:
        return PathSample(self.times, self.values[i])


@dataclass(frozen=True)
class EstimateReport:
    """Monte Carlo estimate with standard error and full reproduction data."""

    estimate: float
    std_error: float
    n_samples: int
    seed: int
    method: str


def _chunk_rng(seed: int, chunk_index: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, chunk_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def grid_times(p: MeasureParams, g: int) -> np.ndarray:
    return p.beta * np.arange(g + 1) / g


def finite_dim_drawer(p: MeasureParams, n_grid: int) -> tuple[np.ndarray, Callable]:
    """Times and a draw(rng, count) -> values closure for the exact grid sampler."""
    gc = kernel.grid_covariance(p, n_grid)
    try:
        chol = np.linalg.cholesky(gc.a)
    except np.linalg.LinAlgError as exc:
        cond = float(np.linalg.cond(gc.a))
        raise FactorizationError(
            f"covariance factorization failed at N={n_grid}, cond(A)~{cond:.3e}"
        ) from exc
    times = grid_times(p, n_grid)

    def draw(rng: np.random.Generator, count: int) -> np.ndarray:
        z = rng.standard_normal((count, n_grid))
        vals = z @ chol.T
        return np.concatenate([vals, vals[:, :1]], axis=1)

    return times, draw


def kl_drawer(p: MeasureParams, n_modes: int, g: int) -> tuple[np.ndarray, Callable]:
    """Times and a draw closure for the truncated eigen-expansion sampler."""
    if n_modes < 0:
        raise ParameterError(f"n_modes must be >= 0, got {n_modes}")
    times = grid_times(p, g)
    indices = np.arange(-n_modes, n_modes + 1)
    sqrt_lam = np.sqrt(kernel.eigenvalue(p, indices))
    basis = np.stack([kernel.eigenfunction(p, n, times) for n in indices])
    basis[:, -1] = basis[:, 0]  # close the period exactly despite rounding in cos/sin

    def draw(rng: np.random.Generator, count: int) -> np.ndarray:
        xi = rng.standard_normal((count, len(indices)))
        return (xi * sqrt_lam) @ basis

    return times, draw


def sample_finite(p: MeasureParams, n_grid: int, n_paths: int, seed: int,
                  chunk_size: int = DEFAULT_CHUNK) -> PathBatch:
    """Draw n_paths exact grid-marginal paths on the uniform N-point grid."""
    times, draw = finite_dim_drawer(p, n_grid)
    return PathBatch(times, _draw_all(draw, n_paths, seed, chunk_size))


def sample_kl(p: MeasureParams, n_modes: int, g: int, n_paths: int, seed: int,
              chunk_size: int = DEFAULT_CHUNK) -> PathBatch:
    """Draw n_paths truncated-expansion paths, exactly periodic by construction."""
    times, draw = kl_drawer(p, n_modes, g)
    return PathBatch(times, _draw_all(draw, n_paths, seed, chunk_size))


def _draw_all(draw: Callable, n_paths: int, seed: int, chunk_size: int) -> np.ndarray:
    parts = []
    for ci, start in enumerate(range(0, n_paths, chunk_size)):
        count = min(chunk_size, n_paths - start)
        parts.append(draw(_chunk_rng(seed, ci), count))
    return np.concatenate(parts, axis=0)


def path_integral(path: PathSample, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """Trapezoidal int_0^beta f(x(t)) dt on the path's grid."""
    return float(np.trapezoid(f(path.values), path.times))


def mc_columns(times: np.ndarray, draw: Callable, eval_fn: Callable,
               n_paths: int, seed: int, chunk_size: int = DEFAULT_CHUNK,
               threads: int = 1, max_bad_fraction: float = 1e-3):
    """Chunked Monte Carlo over paths for a vector-valued per-path statistic.

    eval_fn(times, values) must return an array of shape (count, q).  Returns
    (mean, cov_of_mean, n) where cov_of_mean is the q x q covariance of the
    estimated means.  Results are independent of ``threads`` by construction.
    """
    n_chunks = (n_paths + chunk_size - 1) // chunk_size

    def run_chunk(ci: int):
        start = ci * chunk_size
        count = min(chunk_size, n_paths - start)
        values = draw(_chunk_rng(seed, ci), count)
        cols = np.atleast_2d(np.asarray(eval_fn(times, values), dtype=float))
        if cols.shape[0] != count:
            cols = cols.T
        finite = np.isfinite(cols).all(axis=1)
        bad = int(count - finite.sum())
        cols = np.where(finite[:, None], cols, 0.0)
        return cols.sum(axis=0), cols.T @ cols, bad, count

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run_chunk, range(n_chunks)))
    else:
        results = [run_chunk(ci) for ci in range(n_chunks)]

    s1 = np.sum(np.stack([r[0] for r in results]), axis=0)
    s2 = np.sum(np.stack([r[1] for r in results]), axis=0)
    n_bad = sum(r[2] for r in results)
    n_eff = n_paths - n_bad
    if n_bad > max_bad_fraction * n_paths:
        raise NonFiniteSamplesError(
            f"{n_bad}/{n_paths} non-finite functional values exceeds "
            f"the {max_bad_fraction:.1%} abort threshold"
        )
    mean = s1 / n_eff
    cov = (s2 / n_eff - np.outer(mean, mean)) * n_eff / max(n_eff - 1, 1)
    return mean, cov / n_eff, n_eff


def estimate(p: MeasureParams, functional: Callable, method: str = "finite",
             n_paths: int = 10_000, n_grid: int = DEFAULT_GRID,
             n_modes: int = DEFAULT_MODES, seed: int = 0,
             chunk_size: int = DEFAULT_CHUNK, threads: int = 1) -> EstimateReport:
    """Mean and standard error of a path functional over i.i.d. draws.

    ``functional`` is either batch-aware (has ``evaluate_batch(times, values)``)
    or a plain callable on PathSample.  Deterministic for fixed
    (seed, method, sizes, chunk_size) regardless of the thread count.
    """
    if method in ("finite", "finite_dim"):
        times, draw = finite_dim_drawer(p, n_grid)
        method = "finite_dim"
    elif method == "kl":
        times, draw = kl_drawer(p, n_modes, n_grid)
    else:
        raise ParameterError(f"unknown sampling method {method!r}")

    if hasattr(functional, "evaluate_batch"):
        eval_fn = lambda t, v: functional.evaluate_batch(t, v)[:, None]  # noqa: E731
    else:
        def eval_fn(t, v):
            return np.array([[functional(PathSample(t, row))] for row in v])

    mean, cov_mean, n_eff = mc_columns(times, draw, eval_fn, n_paths, seed,
                                       chunk_size, threads)
    return EstimateReport(
        estimate=float(mean[0]),
        std_error=float(math.sqrt(max(cov_mean[0, 0], 0.0))),
        n_samples=int(n_eff),
        seed=seed,
        method=method,
    )
