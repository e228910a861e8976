"""Semigroups attached to the path measure and the Feynman-Kac equation.

Three layers:

* the Ornstein-Uhlenbeck semigroup of the one-point marginal and its
  generator L = -x d/dx + (coth(beta*omega/2)/(2*m*omega)) d^2/dx^2;
* the time-integral (heat) semigroup with diffusion constant 1/(2*m*omega^2)
  and the transformed process y(t) = x(t)/omega + int_0^t x, which has
  independent increments of variance (t - s)/(m*omega^2);
* the fundamental solution u(beta, xi) of
  du/dbeta = (1/(2*m*omega^2)) u_xx - V(xi) u, u(0, .) = delta, computed
  from its Volterra integral form by product integration (the free-kernel
  time mass over each slice is integrated in closed form, which absorbs the
  (beta - tau)^(-1/2) endpoint singularity), cross-checked by a
  Crank-Nicolson finite-difference reference and by mollified Monte Carlo.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft
import scipy.integrate
import scipy.linalg
import scipy.special

from . import sampler
from .params import MeasureParams, ParameterError
from .potentials import Potential

_GH_ORDER = 80


# ---------------------------------------------------------------------------
# Ornstein-Uhlenbeck semigroup of the marginal


def ou_apply(p: MeasureParams, f, t: float, x, gh_order: int = _GH_ORDER):
    """(T(t)f)(x) = E f(e^-t x + sqrt(1 - e^-2t) Y), Y ~ N(0, coth(b/2)/(2 m omega)).

    Gauss-Hermite quadrature in the Gaussian variable; f must be vectorized.
    """
    if t < 0:
        raise ParameterError("semigroup time must be >= 0")
    x = np.asarray(x, dtype=float)
    nodes, weights = np.polynomial.hermite.hermgauss(gh_order)
    sigma = math.sqrt(p.marginal_variance * (1.0 - math.exp(-2.0 * t)))
    args = math.exp(-t) * x[..., None] + math.sqrt(2.0) * sigma * nodes
    out = (f(args) * weights).sum(axis=-1) / math.sqrt(math.pi)
    return float(out) if out.ndim == 0 else out


def ou_generator_check(p: MeasureParams, f, x: float,
                       t_values=(1e-2, 1e-3)) -> list[float]:
    """Residuals |(T(t)f - f)/t - Lf| at small t; should shrink linearly in t."""
    lf = ou_generator_apply(p, f, x)
    out = []
    for t in t_values:
        diff = (ou_apply(p, f, t, x) - float(np.asarray(f(x)))) / t
        out.append(abs(diff - lf))
    return out


def ou_generator_apply(p: MeasureParams, f, x, dx: float = 1e-4):
    """(Lf)(x) = -x f'(x) + (coth(beta*omega/2)/(2 m omega)) f''(x), derivatives
    by central differences."""
    x = np.asarray(x, dtype=float)
    fp = (f(x + dx) - f(x - dx)) / (2.0 * dx)
    fpp = (f(x + dx) - 2.0 * f(x) + f(x - dx)) / dx**2
    out = -x * fp + p.marginal_variance * fpp
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# time-integral semigroup and the independent-increment transform


def heat_apply(p: MeasureParams, f, beta_arg: float, x, gh_order: int = _GH_ORDER):
    """(T(beta)f)(x): Gaussian convolution with variance beta/(m*omega^2)."""
    if beta_arg < 0:
        raise ParameterError("semigroup time must be >= 0")
    x = np.asarray(x, dtype=float)
    if beta_arg == 0:
        out = np.asarray(f(x), dtype=float)
        return float(out) if out.ndim == 0 else out
    nodes, weights = np.polynomial.hermite.hermgauss(gh_order)
    sigma = math.sqrt(beta_arg / (p.m * p.omega**2))
    args = x[..., None] + math.sqrt(2.0) * sigma * nodes
    out = (f(args) * weights).sum(axis=-1) / math.sqrt(math.pi)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TransformedPath:
    """y(t) = x(t)/omega + int_0^t x(tau) dtau on the path's grid."""

    times: np.ndarray
    values: np.ndarray


def transform_y(p: MeasureParams, path: sampler.PathSample) -> TransformedPath:
    running = scipy.integrate.cumulative_trapezoid(path.values, path.times, initial=0.0)
    return TransformedPath(path.times, path.values / p.omega + running)


def transform_y_batch(p: MeasureParams, times: np.ndarray, values: np.ndarray) -> np.ndarray:
    running = scipy.integrate.cumulative_trapezoid(values, times, axis=1, initial=0.0)
    return values / p.omega + running


def y_covariance(p: MeasureParams, t: float, s: float) -> float:
    """E[y(t) y(s)] in closed form; the increments y(t) - y(s) are independent
    across disjoint intervals with variance (t - s)/(m*omega^2)."""
    for v in (t, s):
        if not 0.0 <= v <= p.beta:
            raise ParameterError("times must lie in [0, beta]")
    w, b = p.omega, p.beta
    half = 0.5 * b * w
    pref = 1.0 / (2.0 * p.m * w**2 * math.sinh(half))
    bracket = (
        2.0 * (1.0 / w + min(s, t)) * math.sinh(half)
        - math.cosh(half) / w
        + (math.cosh(w * s - half) + math.sinh(w * s - half)) / w
        + (math.cosh(w * t - half) + math.sinh(w * t - half)) / w
    )
    return pref * bracket


def y_increment_variance(p: MeasureParams, t: float, s: float) -> float:
    return abs(t - s) / (p.m * p.omega**2)


# ---------------------------------------------------------------------------
# Feynman-Kac fundamental solution


def fk_free(p: MeasureParams, beta_arg: float, xi) -> np.ndarray | float:
    """Free fundamental solution sqrt(m*omega^2/(2*pi*beta)) exp(-m*omega^2 xi^2/(2*beta))."""
    if beta_arg <= 0:
        raise ParameterError("need beta > 0 for the free kernel")
    xi = np.asarray(xi, dtype=float)
    c = p.m * p.omega**2
    out = np.sqrt(c / (2.0 * math.pi * beta_arg)) * np.exp(-c * xi**2 / (2.0 * beta_arg))
    return float(out) if out.ndim == 0 else out


def _kernel_time_mass(p: MeasureParams, s_lo: float, s_hi: float, d: np.ndarray) -> np.ndarray:
    """int_{s_lo}^{s_hi} sqrt(c/(2 pi s)) exp(-c d^2/(2 s)) ds, c = m omega^2.

    With w = sqrt(s) and a = c d^2 / 2 the antiderivative is
    2 sqrt(c/(2 pi)) [w exp(-a/w^2) - sqrt(pi a) erfc(sqrt(a)/w)], finite at
    s_lo = 0, so the inverse-square-root endpoint singularity integrates
    exactly.
    """
    c = p.m * p.omega**2
    a = 0.5 * c * d**2

    def anti(w):
        if w == 0.0:
            return np.zeros_like(a)
        return w * np.exp(-a / w**2) - np.sqrt(math.pi * a) * scipy.special.erfc(
            np.sqrt(a) / w
        )

    return 2.0 * math.sqrt(c / (2.0 * math.pi)) * (anti(math.sqrt(s_hi)) - anti(math.sqrt(s_lo)))


@dataclass(frozen=True)
class FKSolution:
    """Fundamental solution on a (beta, xi) product grid."""

    betas: np.ndarray
    xi: np.ndarray
    u: np.ndarray = field(repr=False)  # shape (len(betas), len(xi))
    error_estimate: float

    def at(self, beta_arg: float, xi_val: float) -> float:
        i = int(np.argmin(np.abs(self.betas - beta_arg)))
        return float(np.interp(xi_val, self.xi, self.u[i]))


def _volterra_grid(p: MeasureParams, v_pot: Potential, beta_max: float,
                   n_tau: int, xi: np.ndarray, fixed_point_tol: float,
                   max_fixed_point: int) -> np.ndarray:
    """Right-endpoint product integration of the Volterra equation.

    Convolutions in xi run in a shared zero-padded FFT space; the free-kernel
    time masses over each slice offset are transformed once up front, so step
    k costs one inverse FFT plus a k-term frequency-space accumulation.
    """
    d_tau = beta_max / n_tau
    n_xi = len(xi)
    d_xi = xi[1] - xi[0]
    v_vals = v_pot(xi)
    betas = d_tau * np.arange(n_tau + 1)
    offsets = xi - xi[n_xi // 2]
    n_fft = scipy.fft.next_fast_len(2 * n_xi - 1)
    # same-mode slice of the full linear convolution for a centered kernel
    lo = n_xi // 2
    mass_hat = np.stack([
        np.fft.rfft(_kernel_time_mass(p, i * d_tau, (i + 1) * d_tau, offsets), n_fft)
        for i in range(n_tau)
    ])
    g_hat = np.zeros((n_tau + 1, mass_hat.shape[1]), dtype=complex)
    u = np.zeros((n_tau + 1, n_xi))
    for k in range(1, n_tau + 1):
        rhs = fk_free(p, betas[k], xi)
        if k > 1:
            acc = np.einsum("ij,ij->j", mass_hat[k - 1:0:-1], g_hat[1:k])
            rhs = rhs - d_xi * np.fft.irfft(acc, n_fft)[lo:lo + n_xi]
        # slice j = k enters implicitly: fixed-point iteration, contraction
        # factor ~ ||V|| * (total mass of the short-time kernel) = O(sqrt(d_tau))
        u_k = rhs.copy()
        for _ in range(max_fixed_point):
            gk = np.fft.rfft(v_vals * u_k, n_fft)
            u_next = rhs - d_xi * np.fft.irfft(mass_hat[0] * gk, n_fft)[lo:lo + n_xi]
            delta = float(np.max(np.abs(u_next - u_k)))
            u_k = u_next
            if delta < fixed_point_tol:
                break
        u[k] = u_k
        g_hat[k] = np.fft.rfft(v_vals * u_k, n_fft)
    return u


def fk_solve_volterra(p: MeasureParams, v_pot: Potential, beta_max: float,
                      n_tau: int = 200, n_xi: int = 1025, xi_max: float | None = None,
                      fixed_point_tol: float = 1e-12, max_fixed_point: int = 50,
                      richardson: bool = True) -> FKSolution:
    """Solve u = free - int V u K by product integration in time, FFT in space.

    n_xi should be odd so the grid is centered at xi = 0.  The time stepping
    is first order; with ``richardson`` a halved-step solve is combined as
    2*u(h/2) - u(h) for second order.  The reported error estimate is the
    coarse/fine disagreement on shared slices, a proxy for the remaining
    truncation error.
    """
    if beta_max <= 0 or n_tau < 2:
        raise ParameterError("need beta_max > 0 and n_tau >= 2")
    if n_xi % 2 == 0:
        raise ParameterError("n_xi must be odd so the grid is centered at xi = 0")
    if xi_max is None:
        xi_max = 8.0 * math.sqrt(beta_max / (p.m * p.omega**2))
    xi = np.linspace(-xi_max, xi_max, n_xi)
    u = _volterra_grid(p, v_pot, beta_max, n_tau, xi, fixed_point_tol, max_fixed_point)
    betas = (beta_max / n_tau) * np.arange(n_tau + 1)
    if not richardson:
        return FKSolution(betas=betas, xi=xi, u=u, error_estimate=float("nan"))
    u_fine = _volterra_grid(p, v_pot, beta_max, 2 * n_tau, xi, fixed_point_tol,
                            max_fixed_point)[::2]
    err = float(np.max(np.abs(u_fine - u)))
    return FKSolution(betas=betas, xi=xi, u=2.0 * u_fine - u, error_estimate=err)


def fk_reference_fd(p: MeasureParams, v_pot: Potential, beta_max: float,
                    n_tau: int = 4000, n_xi: int = 2001, xi_max: float | None = None,
                    beta_init: float = 1e-3) -> FKSolution:
    """Crank-Nicolson reference for the same equation, independent of the
    Volterra machinery.

    Starts at a small beta_init from free * exp(-beta_init * V) (the delta
    initial condition regularized by the short-time product formula) and
    marches to beta_max with zero boundary values.
    """
    if xi_max is None:
        xi_max = 8.0 * math.sqrt(beta_max / (p.m * p.omega**2))
    xi = np.linspace(-xi_max, xi_max, n_xi)
    h = xi[1] - xi[0]
    d_tau = (beta_max - beta_init) / n_tau
    diff = 1.0 / (2.0 * p.m * p.omega**2)
    v_vals = v_pot(xi)

    # banded I -+ (d_tau/2) A with A = diff * Lap - diag(V), zero Dirichlet ends
    lower = np.full(n_xi, -0.5 * d_tau * diff / h**2)
    diag = 1.0 + d_tau * (diff / h**2 + 0.5 * v_vals)
    ab = np.zeros((3, n_xi))
    ab[0, 1:] = lower[1:]
    ab[1] = diag
    ab[2, :-1] = lower[:-1]

    u = fk_free(p, beta_init, xi) * np.exp(-beta_init * v_vals)
    keep = max(1, n_tau // 200)
    betas, frames = [beta_init], [u.copy()]
    for step in range(1, n_tau + 1):
        lap = np.zeros_like(u)
        lap[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h**2
        rhs = u + 0.5 * d_tau * (diff * lap - v_vals * u)
        rhs[0] = rhs[-1] = 0.0
        u = scipy.linalg.solve_banded((1, 1), ab, rhs)
        if step % keep == 0:
            betas.append(beta_init + step * d_tau)
            frames.append(u.copy())
    return FKSolution(betas=np.asarray(betas), xi=xi, u=np.stack(frames),
                      error_estimate=float("nan"))


@dataclass(frozen=True)
class FKEstimate:
    """Monte Carlo values of u(beta, xi) with mollification width delta."""

    xi: np.ndarray
    estimate: np.ndarray
    std_error: np.ndarray
    delta: float
    n_samples: int
    seed: int


def fk_estimate_mc(p: MeasureParams, v_pot: Potential, xi,
                   delta: float = 0.05, n_paths: int = 200_000,
                   n_grid: int = sampler.DEFAULT_GRID, seed: int = 0,
                   chunk_size: int = sampler.DEFAULT_CHUNK,
                   threads: int = 1) -> FKEstimate:
    """Estimate u(beta, xi) = E[delta(y(beta) - y(0) - xi) exp(-int V(y - y(0)))]
    with the delta replaced by a centered Gaussian of width ``delta``.

    The measure parameter beta plays the role of the time argument.  The
    mollifier adds a bias of order delta^2 * u''/2 on top of the Monte Carlo
    error.
    """
    if delta <= 0:
        raise ParameterError("mollifier width must be positive")
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    times, draw = sampler.finite_dim_drawer(p, n_grid)

    def eval_fn(t, values):
        y = transform_y_batch(p, t, values)
        y_rel = y - y[:, :1]
        weight = np.exp(-np.trapezoid(v_pot(y_rel), t, axis=1))
        spread = y_rel[:, -1][:, None] - xi[None, :]
        moll = np.exp(-0.5 * (spread / delta) ** 2) / (delta * math.sqrt(2.0 * math.pi))
        return moll * weight[:, None]

    mean, cov_mean, n_eff = sampler.mc_columns(times, draw, eval_fn, n_paths, seed,
                                               chunk_size, threads)
    return FKEstimate(
        xi=xi,
        estimate=mean,
        std_error=np.sqrt(np.clip(np.diag(cov_mean), 0.0, None)),
        delta=delta,
        n_samples=int(n_eff),
        seed=seed,
    )
