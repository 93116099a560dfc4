"""State-space models for the filter and the experiment harness.

Three models live here:

* :class:`PZModel` — a phytoplankton-zooplankton system with stochastic
  growth rate, observed through log-normal noise on the phytoplankton
  concentration.  Continuous dynamics between integer times:

      dP/dt = alpha * P - c * P * Z
      dZ/dt = e * c * P * Z - m_l * Z - m_q * Z**2

  with ``alpha ~ N(mu, sigma^2)`` redrawn at every integer time and held
  fixed in between.  Integration is classical fixed-step RK4 with step
  h = 1/substeps (default 0.01), which is plenty for this smooth drift.

* :class:`LinearGaussianModel` — scalar AR(1) with additive Gaussian
  observation noise.  Exists so the filter can be checked against the
  exact :func:`kalman_filter` recursion.

* :class:`NeutralModel` — constant observation density and identity
  transition; every generation gets exactly uniform weights, which makes
  the genealogy depend on the resampling scheme alone.

Models are vectorized over particles: states are arrays of shape
(n, state_dim) and the sampling/density methods act on whole generations.
Instances are immutable after construction and safe to share across runs.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

__all__ = [
    "PZParams",
    "PZModel",
    "pz_integrate",
    "pz_transition",
    "pz_log_obs_density",
    "LinearGaussianModel",
    "kalman_filter",
    "NeutralModel",
    "generate_synthetic",
    "save_dataset",
    "load_dataset",
]

_LOG_2PI = math.log(2.0 * math.pi)


class StateSpaceModel:
    """Contract shared by the models: vectorized initial sampler,
    transition sampler, observation log-density, observation sampler."""

    state_dim = 1

    def sample_initial(self, rng, n):
        raise NotImplementedError

    def sample_transition(self, rng, states):
        raise NotImplementedError

    def log_obs_density(self, y, states):
        raise NotImplementedError

    def sample_obs(self, rng, state):
        raise NotImplementedError


# ---------------------------------------------------------------------------
# phytoplankton-zooplankton model


@dataclass(frozen=True)
class PZParams:
    """Rates of the plankton dynamics and observation noise (dimensionless)."""

    mu: float = 0.4
    sigma: float = 0.2
    c: float = 0.25
    e: float = 0.3
    m_l: float = 0.1
    m_q: float = 0.1
    sigma_y: float = 0.2

    def __post_init__(self):
        for name in ("mu", "sigma", "c", "e", "m_l", "m_q", "sigma_y"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


@njit(cache=True)
def _rk4_pz(P, Z, alpha, dt, substeps, c, e, m_l, m_q):
    h = dt / substeps
    for i in range(P.shape[0]):
        p = P[i]
        z = Z[i]
        a = alpha[i]
        for _ in range(substeps):
            k1p = a * p - c * p * z
            k1z = e * c * p * z - m_l * z - m_q * z * z
            p2 = p + 0.5 * h * k1p
            z2 = z + 0.5 * h * k1z
            k2p = a * p2 - c * p2 * z2
            k2z = e * c * p2 * z2 - m_l * z2 - m_q * z2 * z2
            p3 = p + 0.5 * h * k2p
            z3 = z + 0.5 * h * k2z
            k3p = a * p3 - c * p3 * z3
            k3z = e * c * p3 * z3 - m_l * z3 - m_q * z3 * z3
            p4 = p + h * k3p
            z4 = z + h * k3z
            k4p = a * p4 - c * p4 * z4
            k4z = e * c * p4 * z4 - m_l * z4 - m_q * z4 * z4
            p = p + h * (k1p + 2.0 * k2p + 2.0 * k3p + k4p) / 6.0
            z = z + h * (k1z + 2.0 * k2z + 2.0 * k3z + k4z) / 6.0
        P[i] = p
        Z[i] = z


def pz_integrate(P, Z, alpha, params, dt=1.0, substeps=100):
    """Integrate the plankton ODE for ``dt`` with growth rates held fixed.

    Accepts scalars or equal-length arrays; returns (P, Z) after ``dt``.
    Raises if any trajectory leaves the valid region (negative or
    non-finite concentrations).
    """
    scalar = np.ndim(P) == 0
    P = np.atleast_1d(np.asarray(P, dtype=np.float64)).copy()
    Z = np.atleast_1d(np.asarray(Z, dtype=np.float64)).copy()
    alpha = np.broadcast_to(np.asarray(alpha, dtype=np.float64), P.shape).copy()
    _rk4_pz(P, Z, alpha, float(dt), int(substeps), params.c, params.e, params.m_l, params.m_q)
    if not (np.all(np.isfinite(P)) and np.all(np.isfinite(Z))):
        raise FloatingPointError("plankton integration produced non-finite state")
    if np.any(P < 0) or np.any(Z < 0):
        raise FloatingPointError("plankton integration left the positive orthant")
    if scalar:
        return float(P[0]), float(Z[0])
    return P, Z


def pz_transition(rng, state, params, dt=1.0, substeps=100):
    """One unit-time transition: redraw alpha, integrate P and Z.

    ``state`` is one (P, Z, alpha) triple or an (n, 3) block of them.
    """
    arr = np.asarray(state, dtype=np.float64)
    single = arr.ndim == 1
    block = arr[None, :] if single else arr
    alpha = rng.normal(params.mu, params.sigma, size=block.shape[0])
    P, Z = pz_integrate(block[:, 0], block[:, 1], alpha, params, dt=dt, substeps=substeps)
    out = np.column_stack([P, Z, alpha])
    return out[0] if single else out


def pz_log_obs_density(y, state, params):
    """Log-density of a log-normal observation of P: log y ~ N(log P, sigma_y).

    The Gaussian is in log space with standard deviation ``sigma_y``; the
    -log(y) term is the Jacobian of the log transform.
    """
    if y <= 0:
        raise ValueError(f"observation must be positive, got {y}")
    arr = np.asarray(state, dtype=np.float64)
    P = arr[..., 0]
    if np.any(P <= 0):
        raise ValueError("phytoplankton concentration must be positive")
    resid = (math.log(y) - np.log(P)) / params.sigma_y
    return -0.5 * resid**2 - math.log(params.sigma_y) - 0.5 * _LOG_2PI - math.log(y)


class PZModel(StateSpaceModel):
    """Plankton model with state rows (P, Z, alpha).

    Initial concentrations are log-normal, log P0 ~ N(log 2, 0.2) and
    log Z0 ~ N(log 2, 0.1) (0.2 and 0.1 are standard deviations), and the
    initial growth rate is drawn from its stationary N(mu, sigma^2).
    """

    state_dim = 3

    def __init__(self, params=None, substeps=100):
        self.params = params if params is not None else PZParams()
        self.substeps = int(substeps)

    def sample_initial(self, rng, n):
        P = np.exp(rng.normal(math.log(2.0), 0.2, size=n))
        Z = np.exp(rng.normal(math.log(2.0), 0.1, size=n))
        alpha = rng.normal(self.params.mu, self.params.sigma, size=n)
        return np.column_stack([P, Z, alpha])

    def sample_transition(self, rng, states):
        return pz_transition(rng, states, self.params, substeps=self.substeps)

    def log_obs_density(self, y, states):
        return pz_log_obs_density(y, states, self.params)

    def sample_obs(self, rng, state):
        P = np.asarray(state, dtype=np.float64)[..., 0]
        if np.any(P <= 0):
            raise ValueError("phytoplankton concentration must be positive")
        return float(np.exp(np.log(P) + self.params.sigma_y * rng.standard_normal()))


# ---------------------------------------------------------------------------
# linear-Gaussian model and its exact filter


class LinearGaussianModel(StateSpaceModel):
    """Scalar AR(1): x_t = a x_{t-1} + eps, y_t = x_t + eta.

    Unit noise variances and x_0 ~ N(0, 1) by default; exists as the
    exactly solvable reference for filter-accuracy checks.
    """

    state_dim = 1

    def __init__(self, a=0.9, state_std=1.0, obs_std=1.0, init_mean=0.0, init_std=1.0):
        self.a = float(a)
        self.state_std = float(state_std)
        self.obs_std = float(obs_std)
        self.init_mean = float(init_mean)
        self.init_std = float(init_std)

    def sample_initial(self, rng, n):
        return self.init_mean + self.init_std * rng.standard_normal((n, 1))

    def sample_transition(self, rng, states):
        return self.a * states + self.state_std * rng.standard_normal(states.shape)

    def log_obs_density(self, y, states):
        resid = (y - states[:, 0]) / self.obs_std
        return -0.5 * resid**2 - math.log(self.obs_std) - 0.5 * _LOG_2PI

    def sample_obs(self, rng, state):
        return float(state[0] + self.obs_std * rng.standard_normal())


def kalman_filter(observations, model):
    """Exact filtering means and variances for a LinearGaussianModel.

    Returns arrays (means, variances) over t = 1..T, i.e. the Gaussian
    posterior of x_t given y_{1..t} starting from the model's initial law.
    """
    obs = np.asarray(observations, dtype=np.float64)
    q2 = model.state_std**2
    r2 = model.obs_std**2
    m = model.init_mean
    v = model.init_std**2
    means = np.empty(obs.shape[0])
    variances = np.empty(obs.shape[0])
    for t, y in enumerate(obs):
        m_pred = model.a * m
        v_pred = model.a**2 * v + q2
        gain = v_pred / (v_pred + r2)
        m = m_pred + gain * (y - m_pred)
        v = (1.0 - gain) * v_pred
        means[t] = m
        variances[t] = v
    return means, variances


# ---------------------------------------------------------------------------
# neutral model: equal weights at every step


class NeutralModel(StateSpaceModel):
    """Identity transition on a token state with constant likelihood.

    The filter run under this model has exactly uniform weights after
    every step, so the genealogy is driven purely by the resampling
    scheme.
    """

    state_dim = 1

    def sample_initial(self, rng, n):
        return np.zeros((n, 1))

    def sample_transition(self, rng, states):
        return states.copy()

    def log_obs_density(self, y, states):
        return np.zeros(states.shape[0])

    def sample_obs(self, rng, state):
        return 0.0


# ---------------------------------------------------------------------------
# synthetic data


def generate_synthetic(model, horizon, rng):
    """Simulate one hidden trajectory and its observations y_{1..T}.

    Returns (hidden, observations) with hidden of shape (T+1, state_dim)
    and observations of shape (T,).
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    hidden = np.empty((horizon + 1, model.state_dim))
    hidden[0] = model.sample_initial(rng, 1)[0]
    obs = np.empty(horizon)
    for t in range(1, horizon + 1):
        hidden[t] = model.sample_transition(rng, hidden[t - 1 : t])[0]
        obs[t - 1] = model.sample_obs(rng, hidden[t])
    return hidden, obs


def save_dataset(path, observations, hidden=None, state_columns=None):
    """Write a dataset CSV with columns t, y and optional hidden states.

    With a 3-column hidden block the state columns are named P, Z, alpha;
    otherwise x0..x{d-1} (override with ``state_columns``).
    """
    obs = np.asarray(observations)
    header = ["t", "y"]
    if hidden is not None:
        hidden = np.asarray(hidden)
        if state_columns is None:
            state_columns = ["P", "Z", "alpha"] if hidden.shape[1] == 3 else [
                f"x{i}" for i in range(hidden.shape[1])
            ]
        header += list(state_columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        if hidden is not None:
            writer.writerow([0, ""] + [repr(float(v)) for v in hidden[0]])
        for t in range(obs.shape[0]):
            row = [t + 1, repr(float(obs[t]))]
            if hidden is not None:
                row += [repr(float(v)) for v in hidden[t + 1]]
            writer.writerow(row)


def load_dataset(path):
    """Read a dataset CSV back into {column: array} (y skips the t=0 row)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [row for row in reader]
    columns = {}
    for j, name in enumerate(header):
        vals = [row[j] for row in rows if row[j] != ""]
        columns[name] = np.array([float(v) for v in vals])
    return columns
