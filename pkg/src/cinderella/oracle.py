"""Brute-force ground truth: grid dynamic programming and function-class audits.

Values are computed by backward induction on uniform grids. Expectations use
midpoint-style Riemann sums of ``density * value``; the discretized kernel
rows are renormalized to sum to one so that constant functions propagate
exactly through the backup. Every oracle output is reported together with the
grid resolution that produced it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .envs import EnvironmentModel
from .features import TaylorFeatureMap, enumerate_multi_indices, features_at_centers, nu_star
from .geometry import Partition, assign_regions, build_partition

MAX_KERNEL_ENTRIES = 80_000_000  # refuse DP instances whose kernel tensors explode


def _axis_grid(m: int) -> np.ndarray:
    return np.linspace(-1.0, 1.0, m)


def _product_grid(m: int, dim: int) -> np.ndarray:
    axes = [_axis_grid(m)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


@dataclass
class GridDP:
    """Backward-induction tables for one environment on a fixed grid.

    ``v[h]`` and ``q[h]`` are indexed with h starting at 1 (entry 0 unused in
    q; v[horizon + 1] is the terminal zero function). Kernel matrices are the
    row-normalized discretized transition operators.
    """

    m_state: int
    m_action: int
    state_points: np.ndarray  # (n_s, d_S)
    action_points: np.ndarray  # (n_a, d_A)
    v: np.ndarray  # (H + 2, n_s)
    q: np.ndarray  # (H + 1, n_s, n_a)
    kernels: list = field(repr=False)  # kernels[h] for h = 1..H-1, (n_s * n_a, n_s)
    rewards: np.ndarray = field(repr=False)  # (H + 1, n_s, n_a)

    def value_at(self, s: np.ndarray, h: int = 1) -> float:
        """Interpolated V_h at an arbitrary state (linear in each axis)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if s.shape[0] == 1:
            axis = self.state_points[:, 0]
            return float(np.interp(s[0], axis, self.v[h]))
        raise NotImplementedError("interpolation implemented for 1-d states only")

    def greedy_policy(self):
        """Deterministic policy taking the argmax action at the nearest grid state."""

        def policy(h: int, s: np.ndarray):
            s = np.atleast_1d(np.asarray(s, dtype=float))
            idx = int(np.argmin(np.max(np.abs(self.state_points - s[None, :]), axis=1)))
            return self.action_points[int(np.argmax(self.q[h, idx]))]

        return policy

    def report(self, s1: np.ndarray) -> dict:
        return {
            "v_star_at_s1": self.value_at(s1),
            "s1": np.atleast_1d(s1).tolist(),
            "m_state": self.m_state,
            "m_action": self.m_action,
        }


def _discretized_kernel(
    env: EnvironmentModel, h: int, Z: np.ndarray, sp: np.ndarray, m_state: int
):
    """Row-normalized quadrature weights for E[f(s') | z] on the state grid."""
    w = (2.0 / (m_state - 1)) ** sp.shape[1]
    dens = env.transition_density(h, Z, sp) * w
    totals = dens.sum(axis=1, keepdims=True)
    if np.any(totals <= 0):
        raise ValueError("transition density vanished on the whole state grid")
    return dens / totals


def dp_solve(env: EnvironmentModel, m_state: int, m_action: int) -> GridDP:
    """Optimal value tables by backward induction on a uniform grid.

    Q and V tables are clipped to [0, 1], matching the normalization the
    environments guarantee.
    """
    if env.transition_density is None:
        raise ValueError("environment does not expose a transition density")
    if m_state < 2 or m_action < 2:
        raise ValueError("grid resolutions must be at least 2")
    if env.state_dim > 2:
        raise ValueError("grid DP supports at most 2 state dimensions")
    sp = _product_grid(m_state, env.state_dim)
    ap = _product_grid(m_action, env.action_dim)
    n_s, n_a = sp.shape[0], ap.shape[0]
    if n_s * n_a * n_s > MAX_KERNEL_ENTRIES:
        raise ValueError("DP instance too large; reduce grid resolutions")
    Z = np.concatenate(
        [np.repeat(sp, n_a, axis=0), np.tile(ap, (n_s, 1))], axis=1
    )  # (n_s * n_a, d)
    H = env.horizon
    v = np.zeros((H + 2, n_s))
    q = np.zeros((H + 1, n_s, n_a))
    rewards = np.zeros((H + 1, n_s, n_a))
    kernels: list = [None] * H
    for h in range(H, 0, -1):
        r = env.reward_mean(h, Z).reshape(n_s, n_a)
        rewards[h] = r
        backup = r
        if h < H:
            kernels[h] = _discretized_kernel(env, h, Z, sp, m_state)
            backup = r + (kernels[h] @ v[h + 1]).reshape(n_s, n_a)
        q[h] = np.clip(backup, 0.0, 1.0)
        v[h] = q[h].max(axis=1)
    return GridDP(
        m_state=m_state,
        m_action=m_action,
        state_points=sp,
        action_points=ap,
        v=v,
        q=q,
        kernels=kernels,
        rewards=rewards,
    )


def policy_value(env: EnvironmentModel, dp: GridDP, policy, s1: np.ndarray) -> float:
    """Value V^pi_1(s1) of a deterministic policy by backward induction.

    The policy is queried at every grid state; its actions need not lie on the
    oracle action grid (density rows are evaluated at the exact actions).
    """
    sp = dp.state_points
    n_s = sp.shape[0]
    H = env.horizon
    actions = np.zeros((H + 1, n_s, env.action_dim))
    for h in range(1, H + 1):
        for i in range(n_s):
            a = np.atleast_1d(np.asarray(policy(h, sp[i]), dtype=float))
            if np.any(np.abs(a) > 1.0):
                raise ValueError(f"policy action out of range at step {h}: {a}")
            actions[h, i] = a
    v_next = np.zeros(n_s)
    for h in range(H, 0, -1):
        Z = np.concatenate([sp, actions[h]], axis=1)
        r = env.reward_mean(h, Z)
        if h < H:
            kernel = _discretized_kernel(env, h, Z, sp, dp.m_state)
            v_next = np.clip(r + kernel @ v_next, 0.0, 1.0)
        else:
            v_next = np.clip(r, 0.0, 1.0)
    s = np.atleast_1d(np.asarray(s1, dtype=float))
    if s.shape[0] == 1:
        return float(np.interp(s[0], sp[:, 0], v_next))
    raise NotImplementedError("interpolation implemented for 1-d states only")


def random_policy_value(dp: GridDP, s1: np.ndarray, horizon: int) -> float:
    """Value of the uniform-random policy over the oracle action grid."""
    n_s = dp.state_points.shape[0]
    v_next = np.zeros(n_s)
    for h in range(horizon, 0, -1):
        backup = dp.rewards[h].copy()
        if h < horizon:
            backup += (dp.kernels[h] @ v_next).reshape(backup.shape)
        v_next = np.clip(backup, 0.0, 1.0).mean(axis=1)
    s = np.atleast_1d(np.asarray(s1, dtype=float))
    return float(np.interp(s[0], dp.state_points[:, 0], v_next))


# ---------------------------------------------------------------------------
# Function-class audits
# ---------------------------------------------------------------------------


@dataclass
class InherentErrorReport:
    """Estimated worst-case gap between the feature class and its Bellman images.

    The supremum over next-step parameters is sampled, so the estimate is a
    lower bound of the true quantity; grid sizes are recorded alongside.
    """

    estimate: float
    witness_step: int
    witness_point: np.ndarray
    per_step: np.ndarray
    n_candidates: int
    m_state: int
    m_action: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "estimate": self.estimate,
                "witness_step": self.witness_step,
                "witness_point": self.witness_point.tolist(),
                "per_step": self.per_step.tolist(),
                "n_candidates": self.n_candidates,
                "m_state": self.m_state,
                "m_action": self.m_action,
            }
        )


def _chebyshev_fit_residual(phi: np.ndarray, y: np.ndarray, radius: float) -> float:
    """min over theta in the box of max |phi @ theta - y| (linear program)."""
    n, d = phi.shape
    c = np.zeros(d + 1)
    c[-1] = 1.0
    ones = np.ones((n, 1))
    A_ub = np.block([[phi, -ones], [-phi, -ones]])
    b_ub = np.concatenate([y, -y])
    bounds = [(-radius, radius)] * d + [(0.0, None)]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"Chebyshev fit LP failed: {res.message}")
    return float(res.x[-1])


def _candidate_thetas(n_regions, d_feat, radius, n_random, rng):
    """Structured probes of the parameter box: zero, corners, interior points."""
    cands = [np.zeros((n_regions, d_feat))]
    cands.append(np.full((n_regions, d_feat), radius))
    cands.append(np.full((n_regions, d_feat), -radius))
    for _ in range(n_random):
        cands.append(rng.choice([-radius, radius], size=(n_regions, d_feat)))
        cands.append(rng.uniform(-radius, radius, size=(n_regions, d_feat)))
    return cands


def inherent_error_estimate(
    env: EnvironmentModel,
    partition: Partition,
    fmap: TaylorFeatureMap,
    theta_box_radius: float,
    m_state: int = 65,
    m_action: int = 33,
    n_random_candidates: int = 6,
    seed: int = 0,
    extra_candidates=None,
) -> InherentErrorReport:
    """Sampled sup-inf estimate of the inherent Bellman error.

    For each sampled next-step parameter the Bellman image is computed by
    quadrature on a state-action grid; the best per-region Chebyshev fit under
    the box constraint then gives the step's residual. Regions are fitted
    independently, mirroring the product structure of the class. Candidate
    value functions are clipped to [0, 1] before the backup, keeping the
    sampled class inside the normalized range the box family presumes.
    """
    if m_state < 2 or m_action < 2:
        raise ValueError("grid resolutions must be at least 2")
    if not np.isfinite(theta_box_radius):
        raise ValueError("theta box radius must be finite")
    rng = np.random.default_rng(seed)
    sp = _product_grid(m_state, env.state_dim)
    ap = _product_grid(m_action, env.action_dim)
    n_s, n_a = sp.shape[0], ap.shape[0]
    Z = np.concatenate([np.repeat(sp, n_a, axis=0), np.tile(ap, (n_s, 1))], axis=1)
    z_regions = assign_regions(partition, Z)
    z_feats = features_at_centers(fmap, Z, partition.centers[z_regions])
    quad_w = (2.0 / (m_state - 1)) ** env.state_dim
    H = env.horizon
    N, d_feat = partition.n_regions, fmap.dim_features

    per_step = np.zeros(H + 1)
    best = (0.0, 1, Z[0])
    n_cands = 0
    for h in range(1, H + 1):
        if h == H:
            candidates = [np.zeros((N, d_feat))]
        else:
            candidates = _candidate_thetas(N, d_feat, theta_box_radius, n_random_candidates, rng)
            if extra_candidates is not None:
                candidates += [np.asarray(t, dtype=float) for t in extra_candidates]
        n_cands = max(n_cands, len(candidates))
        dens = env.transition_density(h, Z, sp) * quad_w if h < H else None
        worst = 0.0
        for theta_next in candidates:
            target = env.reward_mean(h, Z)
            if h < H:
                q_next = np.einsum("zf,zf->z", z_feats, theta_next[z_regions])
                w_vals = np.clip(q_next.reshape(n_s, n_a), 0.0, 1.0).max(axis=1)
                target = target + dens @ w_vals
            for n in range(N):
                mask = z_regions == n
                if not np.any(mask):
                    continue
                resid = _chebyshev_fit_residual(z_feats[mask], target[mask], theta_box_radius)
                worst = max(worst, resid)
                if resid > best[0]:
                    best = (resid, h, Z[mask][0])
        per_step[h] = worst
    return InherentErrorReport(
        estimate=float(per_step.max()),
        witness_step=best[1],
        witness_point=np.asarray(best[2]),
        per_step=per_step[1:],
        n_candidates=n_cands,
        m_state=m_state,
        m_action=m_action,
    )


def taylor_remainder_check(
    f,
    derivative,
    nu: float,
    epsilon: float,
    n_grid: int = 4001,
    lipschitz: float | None = None,
) -> float:
    """Max gap between ``f`` and its per-cell Taylor fit of degree ceil(nu - 1).

    ``f`` maps an (n, d) array to values; ``derivative(alpha, center)`` returns
    the mixed partial D^alpha f at a point. With ``lipschitz`` given, asserts
    the measured error stays below lipschitz * epsilon^nu.
    """
    dim = 1
    part = build_partition(dim, epsilon)
    degree = nu_star(nu)
    idx = enumerate_multi_indices(dim, degree)
    fmap = TaylorFeatureMap(partition=part, index_set=idx)
    factorials = np.array(
        [np.prod([math.factorial(int(a)) for a in alpha]) for alpha in idx.indices]
    )
    thetas = np.zeros((part.n_regions, idx.size))
    for n in range(part.n_regions):
        c = part.centers[n]
        thetas[n] = np.array([derivative(tuple(alpha), c) for alpha in idx.indices]) / factorials
    pts = _product_grid(n_grid, dim)
    regions = assign_regions(part, pts)
    feats = features_at_centers(fmap, pts, part.centers[regions])
    fit = np.einsum("zf,zf->z", feats, thetas[regions])
    err = float(np.max(np.abs(np.asarray(f(pts), dtype=float) - fit)))
    if lipschitz is not None:
        bound = lipschitz * epsilon**nu
        if err > bound:
            raise AssertionError(f"Taylor remainder {err:.6g} exceeds bound {bound:.6g}")
    return err
