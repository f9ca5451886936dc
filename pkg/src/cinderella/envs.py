"""Benchmark continuous MDPs on [-1, 1]^d and the episode runner.

Every environment exposes its exact transition density and mean reward so the
grid oracles can compute ground truth; learners are expected to touch only the
sampling surface (``learner_view``). Rewards are scaled so every Q-value lies
in [0, 1]: mean rewards stay within [0, 1/H] and reward noise is a truncated
Gaussian, hence subgaussian.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

from .features import TaylorFeatureMap, feature_matrix

REWARD_NOISE_TRUNCATION = 4.0  # reward noise support is +-4 sigma


def _truncated_gaussian(rng: np.random.Generator, sigma: float, size=None) -> np.ndarray:
    """Zero-mean Gaussian(sigma) truncated at +-4 sigma, via inverse CDF."""
    if sigma == 0.0:
        return np.zeros(size) if size is not None else 0.0
    lo, hi = ndtr(-REWARD_NOISE_TRUNCATION), ndtr(REWARD_NOISE_TRUNCATION)
    u = rng.uniform(lo, hi, size=size)
    return sigma * ndtri(u)


@dataclass(frozen=True)
class EnvironmentModel:
    """A finite-horizon MDP with state-action space [-1, 1]^(d_S + d_A).

    Vectorized callables:
      transition_sample(h, Z, rng) -> next states, Z of shape (n, d)
      transition_density(h, Z, S') -> (n, m) densities over states S' (m, d_S)
      reward_mean(h, Z) -> (n,) mean rewards in [0, 1/H]

    Transitions exist for steps h = 1..H-1; rewards for h = 1..H.
    Stateless given an rng, so instances can be shared across runs.
    """

    name: str
    state_dim: int
    action_dim: int
    horizon: int
    transition_sample: Callable[[int, np.ndarray, np.random.Generator], np.ndarray]
    transition_density: Callable[[int, np.ndarray, np.ndarray], np.ndarray]
    reward_mean: Callable[[int, np.ndarray], np.ndarray]
    reward_noise_sigma: float
    smoothness: str  # "mildly-smooth" | "strongly-smooth" | "linear"
    nu: float | None = None
    c_t: float | None = None  # rough bound on the Bellman smoothing constant

    @property
    def dim(self) -> int:
        return self.state_dim + self.action_dim

    def sample_reward(self, h: int, z: np.ndarray, rng: np.random.Generator) -> float:
        mean = float(self.reward_mean(h, np.asarray(z, dtype=float)[None, :])[0])
        return mean + float(_truncated_gaussian(rng, self.reward_noise_sigma))


@dataclass(frozen=True)
class Transition:
    """One observed step: (h, s, a, sampled reward, s'); s' is None at h = H."""

    h: int
    state: np.ndarray
    action: np.ndarray
    reward_sample: float
    next_state: np.ndarray | None


class LearnerView:
    """Sampling-only surface of an environment.

    Deliberately omits ``transition_density`` and ``reward_mean`` so learner
    code cannot peek at ground truth.
    """

    def __init__(self, env: EnvironmentModel):
        self._env = env
        self.state_dim = env.state_dim
        self.action_dim = env.action_dim
        self.horizon = env.horizon

    def sample_transition(self, h, z, rng):
        return self._env.transition_sample(h, np.asarray(z, dtype=float)[None, :], rng)[0]

    def sample_reward(self, h, z, rng):
        return self._env.sample_reward(h, z, rng)


def learner_view(env: EnvironmentModel) -> LearnerView:
    return LearnerView(env)


def run_episode(env, policy, rng: np.random.Generator, s1: np.ndarray | None = None):
    """Roll one episode under ``policy(h, state) -> action``.

    Returns (transitions, total_return). Starts from ``s1`` (origin when
    omitted). Works with a full EnvironmentModel or a LearnerView; raises if
    the policy leaves [-1, 1]^d_A.
    """
    view = env if isinstance(env, LearnerView) else LearnerView(env)
    state = np.zeros(view.state_dim) if s1 is None else np.asarray(s1, dtype=float)
    transitions = []
    total = 0.0
    for h in range(1, view.horizon + 1):
        action = np.atleast_1d(np.asarray(policy(h, state), dtype=float))
        if action.shape != (view.action_dim,) or np.any(np.abs(action) > 1.0):
            raise ValueError(f"policy action out of [-1, 1]^{view.action_dim}: {action}")
        z = np.concatenate([state, action])
        reward = view.sample_reward(h, z, rng)
        next_state = view.sample_transition(h, z, rng) if h < view.horizon else None
        transitions.append(Transition(h, state.copy(), action, float(reward), next_state))
        total += reward
        if next_state is not None:
            state = next_state
    return transitions, total


# ---------------------------------------------------------------------------
# Reward specifications
# ---------------------------------------------------------------------------


def _resolve_reward(spec, horizon: int):
    """Turn a reward spec into a vectorized mean-reward callable.

    ``spec`` is "default" (a smooth sinusoidal bump), "zero", "constant"
    (the maximal flat reward 1/H), or a callable f(s, a) -> [0, 1] that gets
    scaled by 1/H.
    """
    scale = 1.0 / horizon
    if spec == "default" or spec is None:

        def mean(h, Z):
            s = Z[:, 0]
            a = Z[:, 1]
            return scale * (1.0 + np.sin(np.pi * (s + a) / 2.0)) / 2.0

        return mean, np.pi / 4.0 * scale
    if spec == "zero":
        return (lambda h, Z: np.zeros(Z.shape[0])), 0.0
    if spec == "constant":
        return (lambda h, Z: np.full(Z.shape[0], scale)), 0.0
    if callable(spec):

        def mean(h, Z):
            return scale * np.asarray(spec(Z[:, 0], Z[:, 1]), dtype=float)

        return mean, None
    raise ValueError(f"unknown reward spec: {spec!r}")


def _check_normalization(env: EnvironmentModel, grid_per_axis: int = 128) -> None:
    """Assert 0 <= H * reward_mean <= 1 on a dense grid (Q in [0, 1])."""
    axes = [np.linspace(-1, 1, grid_per_axis)] * env.dim
    mesh = np.meshgrid(*axes, indexing="ij")
    Z = np.stack([g.ravel() for g in mesh], axis=-1)
    for h in range(1, env.horizon + 1):
        r = env.reward_mean(h, Z)
        if np.any(r < -1e-12) or np.any(env.horizon * r > 1.0 + 1e-9):
            raise ValueError(
                f"reward at step {h} violates normalization: range "
                f"[{r.min():.6f}, {r.max():.6f}] with H={env.horizon}"
            )


def _check_density_integral(env: EnvironmentModel, n_quad: int = 1024, tol: float = 1e-2):
    """Spot-check that the transition density integrates to 1 over the state grid."""
    if env.horizon < 2:
        return
    rng = np.random.default_rng(0)
    Z = rng.uniform(-1, 1, size=(8, env.dim))
    sp = np.linspace(-1, 1, n_quad)
    grid = np.stack([sp] * env.state_dim, axis=-1) if env.state_dim == 1 else None
    if grid is None:
        return  # multi-d spot check handled by dedicated tests
    w = 2.0 / (n_quad - 1)
    dens = env.transition_density(1, Z, grid)
    totals = dens.sum(axis=1) * w
    if np.any(np.abs(totals - 1.0) > tol):
        raise ValueError(f"transition density integral off by more than {tol}: {totals}")


# ---------------------------------------------------------------------------
# Benchmark environments
# ---------------------------------------------------------------------------


def env_uniform_shift(
    beta: float,
    reward_spec="default",
    horizon: int = 2,
    reward_noise_sigma: float = 0.1,
) -> EnvironmentModel:
    """Uniform-shift kernel: s' ~ Unif(beta*s, beta*s + 1 - beta).

    The support always stays inside [-1, 1] but the density is discontinuous
    in (s, a), so the process is mildly smooth (nu = 1) without being strongly
    smooth. One state and one action dimension.
    """
    if not (0.0 < beta < 1.0):
        raise ValueError(f"beta must be in (0, 1), got {beta}")
    mean_reward, reward_slope = _resolve_reward(reward_spec, horizon)
    width = 1.0 - beta

    def sample(h, Z, rng):
        lo = beta * Z[:, 0]
        return (lo + rng.uniform(0.0, width, size=Z.shape[0]))[:, None]

    def density(h, Z, Sp):
        lo = beta * Z[:, 0]
        s = Sp[:, 0]
        inside = (s[None, :] >= lo[:, None]) & (s[None, :] <= (lo + width)[:, None])
        return inside / width

    # Bellman smoothing: kernel contributes 2/(1-beta), reward its C^1 norm.
    c_t = 2.0 / width + 1.0 + (reward_slope if reward_slope is not None else 1.0 / horizon)
    env = EnvironmentModel(
        name="uniform_shift",
        state_dim=1,
        action_dim=1,
        horizon=horizon,
        transition_sample=sample,
        transition_density=density,
        reward_mean=mean_reward,
        reward_noise_sigma=reward_noise_sigma,
        smoothness="mildly-smooth",
        nu=1.0,
        c_t=c_t,
    )
    _check_normalization(env)
    _check_density_integral(env)
    return env


def env_smooth_drift(
    drift_gain: float,
    noise_sigma: float,
    reward_spec="default",
    horizon: int = 2,
    reward_noise_sigma: float = 0.1,
) -> EnvironmentModel:
    """Drift kernel with smooth Gaussian noise confined to [-1, 1].

    The next state follows a Gaussian centered at s + drift_gain * a,
    renormalized on [-1, 1], so the density is smooth in (s, a) and has no
    boundary atoms; samples are clipped only as a floating-point guard.
    """
    if not np.isfinite(drift_gain):
        raise ValueError("drift gain must be finite")
    if not (noise_sigma > 0.0):
        raise ValueError(f"kernel noise must be positive, got {noise_sigma}")
    # mean can leave the cube, but the kernel must keep mass inside it
    worst_mu = 1.0 + abs(drift_gain)
    if ndtr((1.0 - worst_mu) / noise_sigma) - ndtr((-1.0 - worst_mu) / noise_sigma) <= 1e-12:
        raise ValueError(
            "drift pushes the kernel mass outside [-1, 1]; "
            "reduce |drift_gain| or increase noise_sigma"
        )
    mean_reward, _ = _resolve_reward(reward_spec, horizon)

    def _bounds(Z):
        mu = Z[:, 0] + drift_gain * Z[:, 1]
        lo = ndtr((-1.0 - mu) / noise_sigma)
        hi = ndtr((1.0 - mu) / noise_sigma)
        return mu, lo, hi

    def sample(h, Z, rng):
        mu, lo, hi = _bounds(Z)
        u = rng.uniform(lo, hi)
        out = mu + noise_sigma * ndtri(u)
        return np.clip(out, -1.0, 1.0)[:, None]

    def density(h, Z, Sp):
        mu, lo, hi = _bounds(Z)
        x = (Sp[:, 0][None, :] - mu[:, None]) / noise_sigma
        pdf = np.exp(-0.5 * x * x) / np.sqrt(2.0 * np.pi)
        return pdf / (noise_sigma * (hi - lo))[:, None]

    c_t = 1.0 + (1.0 + abs(drift_gain)) / noise_sigma  # coarse scale estimate
    env = EnvironmentModel(
        name="smooth_drift",
        state_dim=1,
        action_dim=1,
        horizon=horizon,
        transition_sample=sample,
        transition_density=density,
        reward_mean=mean_reward,
        reward_noise_sigma=reward_noise_sigma,
        smoothness="strongly-smooth",
        nu=float("inf"),
        c_t=c_t,
    )
    _check_normalization(env)
    _check_density_integral(env)
    return env


def env_exact_linear(
    theta_true: np.ndarray,
    fmap: TaylorFeatureMap,
    horizon: int | None = None,
    reward_noise_sigma: float = 0.05,
) -> EnvironmentModel:
    """Sanity instance whose Bellman backups are exactly linear in ``fmap``.

    Mean rewards are feature-linear, r_h(z) = phi(z)^T theta_h, and transitions
    ignore the state-action pair (uniform over the state cube). Applying the
    Bellman operator to any feature-linear function then adds a constant,
    which the constant feature absorbs, so the class fits Bellman images with
    zero error.
    """
    theta = np.atleast_2d(np.asarray(theta_true, dtype=float))
    if horizon is None:
        horizon = theta.shape[0]
    if theta.shape != (horizon, fmap.dim_features):
        raise ValueError(
            f"theta must have shape ({horizon}, {fmap.dim_features}), got {theta.shape}"
        )
    if fmap.index_set.indices[0].sum() != 0:
        raise ValueError("feature map must include the constant monomial")
    d_state = 1
    d = fmap.partition.dim

    def mean_reward(h, Z):
        return feature_matrix(fmap, Z) @ theta[h - 1]

    def sample(h, Z, rng):
        return rng.uniform(-1.0, 1.0, size=(Z.shape[0], d_state))

    def density(h, Z, Sp):
        return np.full((Z.shape[0], Sp.shape[0]), 0.5**d_state)

    env = EnvironmentModel(
        name="exact_linear",
        state_dim=d_state,
        action_dim=d - d_state,
        horizon=horizon,
        transition_sample=sample,
        transition_density=density,
        reward_mean=mean_reward,
        reward_noise_sigma=reward_noise_sigma,
        smoothness="linear",
        nu=None,
        c_t=None,
    )
    try:
        _check_normalization(env)
    except ValueError as exc:
        raise ValueError(f"invalid theta for exact-linear environment: {exc}") from exc
    return env
