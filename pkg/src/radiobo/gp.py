"""Exact GP regression with a constant prior mean.

Hyperparameters are fitted by maximizing the log marginal likelihood with
the bounded L-BFGS in :mod:`radiobo.lbfgsb`, working on log-parameters so
positivity holds by construction. The posterior standard deviation returned
by :func:`posterior` is that of the latent field: the white-noise variance
belongs to the receiver, not to the map.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_solve, cholesky, solve_triangular
from scipy.linalg.lapack import dpotrf, dpotri, dpotrs

from .geo import GeoGrid, GeoPoint, as_coords
from .kernels import JITTER, HyperBounds, HyperParams, build_matrix, cross_rbf, sq_dists
from .lbfgsb import BoxProblem, OptOptions, minimize

log = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


class IllConditionedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainingSet:
    locations: np.ndarray  # (n, 2) [lat, lon]
    powers: np.ndarray  # (n,) dB

    def __post_init__(self):
        loc = as_coords(self.locations)
        pw = np.asarray(self.powers, dtype=float).reshape(-1)
        if loc.shape[0] != pw.shape[0]:
            raise ValueError(f"{loc.shape[0]} locations but {pw.shape[0]} powers")
        if not np.all(np.isfinite(pw)):
            raise ValueError("training powers must be finite")
        object.__setattr__(self, "locations", loc)
        object.__setattr__(self, "powers", pw)

    def __len__(self) -> int:
        return self.powers.shape[0]

    @classmethod
    def empty(cls) -> "TrainingSet":
        return cls(np.empty((0, 2)), np.empty(0))

    def append(self, location: GeoPoint, power: float) -> "TrainingSet":
        return TrainingSet(
            np.vstack([self.locations, [location.lat, location.lon]]),
            np.append(self.powers, power),
        )


@dataclass(frozen=True)
class FittedGP:
    training: TrainingSet
    params: HyperParams
    mean_const_g: float
    cholesky_factor: np.ndarray
    alpha: np.ndarray
    lml: float = float("nan")


@dataclass(frozen=True)
class PosteriorField:
    grid: GeoGrid
    mean: np.ndarray  # (rows, cols)
    std: np.ndarray  # (rows, cols)


def _factor(K: np.ndarray) -> np.ndarray:
    Kj = K.copy()
    Kj[np.diag_indices_from(Kj)] += JITTER
    try:
        return cholesky(Kj, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise IllConditionedError("Cholesky failed on the training covariance") from exc


def _lml_from_sq_dists(D2: np.ndarray, r: np.ndarray, theta: np.ndarray) -> tuple[float, np.ndarray]:
    """LML and gradient given precomputed squared distances and residuals.

    Hot path of the hyperparameter fit, so it talks to LAPACK directly.
    """
    gamma2, ell, noise = theta
    n = r.shape[0]
    E = np.exp(D2 * (-0.5 / ell**2))
    Krbf = gamma2 * E
    K = Krbf.copy()
    K.flat[:: n + 1] += noise + JITTER
    c, info = dpotrf(K, lower=1, clean=1, overwrite_a=1)
    if info != 0:
        raise IllConditionedError("Cholesky failed on the training covariance")
    alpha, _ = dpotrs(c, r, lower=1)
    logdet_half = np.log(c.diagonal()).sum()
    value = -0.5 * (r @ alpha) - logdet_half - 0.5 * n * LOG_2PI
    # dpotri leaves the strict upper triangle zero (c was cleaned), so sums
    # against symmetric matrices are 2*lower - diag.
    Kinv_l, info = dpotri(c, lower=1)
    kd = Kinv_l.diagonal()

    def trace_w(M, Md):
        return (alpha @ M @ alpha) - (2.0 * np.vdot(Kinv_l, M) - kd @ Md)

    KD = Krbf * D2
    grad = 0.5 * np.array(
        [
            trace_w(E, np.ones(n)),
            trace_w(KD, np.zeros(n)) / ell**3,
            alpha @ alpha - kd.sum(),
        ]
    )
    return float(value), grad


def log_marginal_likelihood(training: TrainingSet, params: HyperParams, g: float) -> tuple[float, np.ndarray]:
    """LML and its gradient w.r.t. (scale_gamma2, lengthscale_ell, noise_level)."""
    if len(training) < 1:
        raise ValueError("need at least one training point")
    D2 = sq_dists(training.locations, training.locations)
    return _lml_from_sq_dists(D2, training.powers - g, params.as_array())


def _fit_once(training, init, bounds, g, opts, n_restarts, rng):
    lo = np.log(bounds.lower())
    hi = np.log(bounds.upper())
    D2 = sq_dists(training.locations, training.locations)
    r = training.powers - g

    def objective(z):
        theta = np.exp(z)
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                value, grad = _lml_from_sq_dists(D2, r, theta)
        except IllConditionedError:
            return np.inf, np.full(3, np.nan)
        # chain rule into log space, negated for minimization
        return -value, -grad * theta

    problem = BoxProblem(lo, hi, objective)
    starts = [np.clip(np.log(init.as_array()), lo, hi)]
    for _ in range(n_restarts):
        starts.append(rng.uniform(lo, hi))

    best = None
    for z0 in starts:
        f0, _ = objective(z0)
        if not np.isfinite(f0):
            if best is None and z0 is starts[0]:
                raise IllConditionedError("log marginal likelihood not finite at initial hyperparameters")
            continue
        res = minimize(problem, z0, opts)
        if best is None or res.f_star < best.f_star:
            best = res
    theta = np.clip(np.exp(best.x_star), bounds.lower(), bounds.upper())
    return HyperParams.from_array(theta), -best.f_star


def fit(
    training: TrainingSet,
    init: HyperParams,
    bounds: HyperBounds,
    g: float,
    opts: OptOptions | None = None,
    n_restarts: int = 2,
    rng: np.random.Generator | None = None,
) -> FittedGP:
    """Maximize the LML over hyperparameters and cache the Cholesky solve.

    The first start is ``init`` (clipped into the bounds); ``n_restarts``
    more starts are drawn log-uniformly inside the bounds. If the covariance
    cannot be factorized, the noise lower bound is raised tenfold and the fit
    is retried once.
    """
    if len(training) < 1:
        raise ValueError("fit needs at least one sample")
    rng = rng if rng is not None else np.random.default_rng(0)
    try:
        params, lml = _fit_once(training, bounds.clip(init), bounds, g, opts, n_restarts, rng)
    except IllConditionedError:
        lo, hi = bounds.noise_level
        widened = HyperBounds(bounds.scale_gamma2, bounds.lengthscale_ell, (min(10 * lo, 0.5 * hi), hi))
        log.warning("ill-conditioned fit, retrying with noise lower bound %g", widened.noise_level[0])
        params, lml = _fit_once(training, widened.clip(init), widened, g, opts, n_restarts, rng)
    return condition(training, params, g, lml=lml)


def condition(training: TrainingSet, params: HyperParams, g: float, lml: float = float("nan")) -> FittedGP:
    """Build a FittedGP at fixed hyperparameters (no optimization)."""
    L = _factor(build_matrix(training.locations, params))
    alpha = cho_solve((L, True), training.powers - g, check_finite=False)
    return FittedGP(training, params, float(g), L, alpha, lml)


def predict(fitted: FittedGP, coords) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and latent standard deviation at arbitrary (n, 2) points."""
    Xq = as_coords(coords)
    Ks = cross_rbf(fitted.training.locations, Xq, fitted.params)
    mean = fitted.mean_const_g + Ks.T @ fitted.alpha
    v = solve_triangular(fitted.cholesky_factor, Ks, lower=True, check_finite=False)
    var = fitted.params.scale_gamma2 - np.einsum("ij,ij->j", v, v)
    neg = var < 0
    if np.any(neg):
        worst = -var.min()
        if worst > 1e-8:
            log.debug("clamped negative posterior variance of magnitude %.3g", worst)
        var[neg] = 0.0
    return mean, np.sqrt(var)


def posterior(fitted: FittedGP, grid: GeoGrid) -> PosteriorField:
    mean, std = predict(fitted, grid.coords)
    return PosteriorField(grid, mean.reshape(grid.shape), std.reshape(grid.shape))


def prior_field(grid: GeoGrid, params: HyperParams, g: float) -> PosteriorField:
    """Posterior with no data: constant mean g and prior latent std."""
    return PosteriorField(
        grid,
        np.full(grid.shape, float(g)),
        np.full(grid.shape, math.sqrt(params.scale_gamma2)),
    )


def argmax_node(values: np.ndarray) -> tuple[int, int]:
    # np.argmax returns the first maximum in row-major order, i.e. lowest (row, col)
    idx = int(np.argmax(values))
    return divmod(idx, values.shape[1])


def argmax_mean(field: PosteriorField) -> GeoPoint:
    r, c = argmax_node(field.mean)
    return field.grid.node(r, c)
