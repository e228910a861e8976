"""Registry of path functionals for Monte Carlo estimation and the CLI.

Each functional evaluates on a whole batch at once: ``evaluate_batch(times,
values)`` takes the shared grid and an (n_paths, G+1) value matrix and
returns one number per path.  Calling the functional on a single PathSample
also works.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .params import ParameterError
from .potentials import Potential


@dataclass(frozen=True)
class PathFunctional:
    name: str
    batch_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] = field(repr=False)

    def evaluate_batch(self, times: np.ndarray, values: np.ndarray) -> np.ndarray:
        return self.batch_fn(times, np.atleast_2d(values))

    def __call__(self, path) -> float:
        return float(self.evaluate_batch(path.times, path.values)[0])


def _values_at(times: np.ndarray, values: np.ndarray, at: np.ndarray) -> np.ndarray:
    """Path values at arbitrary times, linearly interpolated on the grid."""
    idx = np.clip(np.searchsorted(times, at, side="right") - 1, 0, len(times) - 2)
    w = (at - times[idx]) / (times[idx + 1] - times[idx])
    return values[:, idx] * (1.0 - w) + values[:, idx + 1] * w


def const(c: float = 1.0) -> PathFunctional:
    return PathFunctional(
        f"const({c})", lambda t, v: np.full(v.shape[0], float(c))
    )


def monomial(times_at: tuple[float, ...]) -> PathFunctional:
    """Product x(t_1)...x(t_n) with path values interpolated on the grid."""
    ts = np.asarray(times_at, dtype=float)

    def batch(t, v):
        out = np.ones(v.shape[0])
        for ti in ts:
            out = out * _values_at(t, v, np.asarray([ti]))[:, 0]
        return out

    return PathFunctional(f"monomial(times={tuple(ts)})", batch)


def time_square_integral() -> PathFunctional:
    """Trapezoidal int_0^beta x(t)^2 dt."""
    return PathFunctional(
        "time_square_integral", lambda t, v: np.trapezoid(v**2, t, axis=1)
    )


def exp_quadratic(lam: float) -> PathFunctional:
    """exp((lambda/2) int x^2 dt)."""
    return PathFunctional(
        f"exp_quadratic(lam={lam})",
        lambda t, v: np.exp(0.5 * lam * np.trapezoid(v**2, t, axis=1)),
    )


def exp_linear(theta: float) -> PathFunctional:
    """exp(theta int x dt)."""
    return PathFunctional(
        f"exp_linear(theta={theta})",
        lambda t, v: np.exp(theta * np.trapezoid(v, t, axis=1)),
    )


def mean_value_squared() -> PathFunctional:
    """(beta^-1 int x dt)^2, the squared time average of the path."""

    def batch(t, v):
        beta = t[-1]
        return (np.trapezoid(v, t, axis=1) / beta) ** 2

    return PathFunctional("mean_value_squared", batch)


def boltzmann_weight(v_pot: Potential, shift: float = 0.0) -> PathFunctional:
    """exp(-int V(x(t) + shift) dt)."""

    def batch(t, vals):
        return np.exp(-np.trapezoid(v_pot(vals + shift), t, axis=1))

    return PathFunctional(f"boltzmann_weight({v_pot.name}, shift={shift})", batch)


_BUILDERS: dict[str, Callable[..., PathFunctional]] = {
    "const": const,
    "monomial": monomial,
    "time_square_integral": time_square_integral,
    "exp_quadratic": exp_quadratic,
    "exp_linear": exp_linear,
    "mean_value_squared": mean_value_squared,
}


def make(name: str, **kwargs) -> PathFunctional:
    if name not in _BUILDERS:
        raise ParameterError(f"unknown functional {name!r}; choices: {sorted(_BUILDERS)}")
    return _BUILDERS[name](**kwargs)
