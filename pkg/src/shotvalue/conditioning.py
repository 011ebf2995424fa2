"""Conditioning the shot mixture on partial observations.

Every positional observation is a linear functional of the encoding vector
(time is fixed, so a polynomial or segment evaluation is a dot product with
constant weights). Conditioning is therefore the classic Gaussian linear
update per component, plus a Bayes reweighting of the mixture.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, cholesky, solve_triangular
from scipy.special import logsumexp

from .errors import ConstraintError
from .mixture import MixtureModel

# Tracking jitter floor: regularizes near-singular constraint Gram matrices
# while honestly modeling measurement noise. Zero is allowed for exact
# conditioning.
DEFAULT_OBS_NOISE = 1e-4

_POST_WEIGHT_PRUNE = 1e-8


@dataclass(frozen=True)
class LinearConstraint:
    """One observed linear functional: row . encoding = value (+ noise)."""

    row: np.ndarray
    value: float
    noise_var: float = DEFAULT_OBS_NOISE

    def __post_init__(self):
        row = np.ascontiguousarray(self.row, dtype=float)
        if row.ndim != 1 or not np.any(row != 0.0):
            raise ConstraintError("constraint row must be 1-d with a nonzero entry")
        if not np.isfinite(self.noise_var) or self.noise_var < 0:
            raise ConstraintError(f"noise_var must be finite and >= 0, got {self.noise_var}")
        row.flags.writeable = False
        object.__setattr__(self, "row", row)
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "noise_var", float(self.noise_var))


@dataclass(frozen=True)
class ObservationSet:
    """Constraints plus the bookkeeping needed to serialize them."""

    dim: int
    constraints: tuple = ()
    meta: tuple = field(default=(), repr=False)  # (kind, t, dim_label) per row

    def __post_init__(self):
        for c in self.constraints:
            if c.row.shape != (self.dim,):
                raise ConstraintError(
                    f"constraint row has dim {c.row.shape[0]}, expected {self.dim}"
                )
        if self.meta and len(self.meta) != len(self.constraints):
            raise ConstraintError("meta must align with constraints")

    def __len__(self):
        return len(self.constraints)

    def stacked(self):
        """(C, x, noise) arrays; C is (m, d)."""
        if not self.constraints:
            return np.empty((0, self.dim)), np.empty(0), np.empty(0)
        C = np.vstack([c.row for c in self.constraints])
        x = np.array([c.value for c in self.constraints])
        noise = np.array([c.noise_var for c in self.constraints])
        return C, x, noise


@dataclass(frozen=True)
class ConditionedMixture:
    """Posterior weights and per-component conditional moments."""

    weights: np.ndarray
    means: np.ndarray  # (K, d)
    covariances: np.ndarray  # (K, d, d), possibly rank-deficient
    source: MixtureModel = field(repr=False)
    n_constraints: int = 0

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=float)
        if abs(w.sum() - 1.0) > 1e-12:
            raise ConstraintError(f"posterior weights sum to {w.sum()!r}")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def n_components(self):
        return self.weights.shape[0]


def _poly_row(dim_vec, t, block):
    row = np.zeros(dim_vec)
    row[block] = [1.0, t, t * t, t * t * t]
    return row


def _segment_row(dim_vec, t, block):
    row = np.zeros(dim_vec)
    row[block] = [1.0, t]
    return row


def constraints_from_observations(
    observations, layout, bounce_time_hint=None, noise_var=DEFAULT_OBS_NOISE
):
    """Build an ObservationSet from timestamped positions.

    ``observations`` is an iterable of (kind, t, dim_label, value):

    * kind 'ball' with dim_label in {'x','y','z'}: a polynomial row at the
      arc-1 block, or arc-2 with time rebased by ``bounce_time_hint`` when
      t falls after the hint;
    * kind 'shooter'/'receiver' with dim_label in {'x','y'}: a segment row;
    * kind 'feature' with dim_label a layout feature name: a unit row.

    Ball observations after the bounce require a hint; without one they
    raise ConstraintError (arc attribution is unresolvable).
    """
    rows = []
    meta = []
    d = layout.dim
    for kind, t, dim_label, value in observations:
        if kind == "feature":
            row = np.zeros(d)
            row[layout.index(dim_label)] = 1.0
            rows.append(LinearConstraint(row, value, noise_var))
            meta.append((kind, "", dim_label))
            continue
        t = float(t)
        if t < 0:
            raise ConstraintError(f"negative observation time {t}")
        if kind == "ball":
            if dim_label not in ("x", "y", "z"):
                raise ConstraintError(f"bad ball dimension {dim_label!r}")
            if bounce_time_hint is not None and t > bounce_time_hint:
                if layout.bounce_flag != "one_bounce":
                    raise ConstraintError(
                        "post-bounce observation against a no-bounce layout"
                    )
                row = _poly_row(d, t - bounce_time_hint, layout.arc_block("arc2", dim_label))
            else:
                row = _poly_row(d, t, layout.arc_block("arc1", dim_label))
            rows.append(LinearConstraint(row, value, noise_var))
        elif kind in ("shooter", "receiver"):
            if dim_label not in ("x", "y"):
                raise ConstraintError(f"bad player dimension {dim_label!r}")
            row = _segment_row(d, t, layout.player_block(kind, dim_label))
            rows.append(LinearConstraint(row, value, noise_var))
        else:
            raise ConstraintError(f"unknown observation kind {kind!r}")
        meta.append((kind, repr(t), dim_label))
    return ObservationSet(dim=d, constraints=tuple(rows), meta=tuple(meta))


def condition_gaussian(mean, cov, C, x, noise):
    """Exact Gaussian update for observations x = C a + e, e ~ N(0, diag(noise)).

    Returns (posterior mean, posterior covariance); the covariance is
    symmetrized after the Schur update. Raises ConstraintError when the
    constraint Gram matrix is singular with zero noise (redundant
    constraints).
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    noise = np.broadcast_to(np.asarray(noise, dtype=float), x.shape)
    if C.shape[0] == 0:
        return mean.copy(), cov.copy()

    cross = cov @ C.T  # (d, m)
    gram = C @ cross + np.diag(noise)
    try:
        factor = cho_factor(gram, lower=True)
    except np.linalg.LinAlgError as exc:
        raise ConstraintError(
            "singular constraint Gram matrix (redundant constraints with zero noise)"
        ) from exc
    gain = cho_solve(factor, cross.T).T  # Sigma C' G^{-1}
    post_mean = mean + gain @ (x - C @ mean)
    post_cov = cov - gain @ cross.T
    post_cov = 0.5 * (post_cov + post_cov.T)
    return post_mean, post_cov


def update_weights(model, obs):
    """Posterior mixture weights given the observations (Bayes rule with
    per-component Gaussian evidence, normalized in log space)."""
    C, x, noise = obs.stacked()
    if C.shape[0] == 0:
        return model.weights.copy()
    log_w = np.log(model.weights).copy()
    for k in range(model.n_components):
        pm = C @ model.means[k]
        pc = C @ model.covariances[k] @ C.T + np.diag(noise)
        try:
            L = cholesky(pc, lower=True)
        except np.linalg.LinAlgError as exc:
            raise ConstraintError(
                f"component {k}: singular predicted observation covariance"
            ) from exc
        half = solve_triangular(L, x - pm, lower=True)
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        log_w[k] += -0.5 * (
            half @ half + len(x) * np.log(2.0 * np.pi) + logdet
        )
    if np.all(np.isinf(log_w)):
        worst = int(np.argmax(np.abs(x)))
        raise ConstraintError(
            f"all component likelihoods underflowed; worst observation index {worst} "
            f"(value {x[worst]!r})"
        )
    return np.exp(log_w - logsumexp(log_w))


def condition_mixture(model, obs):
    """Full mixture update: reweight, condition each component, prune."""
    post_w = update_weights(model, obs)
    C, x, noise = obs.stacked()
    keep = post_w >= _POST_WEIGHT_PRUNE
    if not keep.any():
        keep[int(np.argmax(post_w))] = True
    idx = np.where(keep)[0]
    w = post_w[idx]
    w = w / w.sum()
    d = model.dim
    means = np.empty((len(idx), d))
    covs = np.empty((len(idx), d, d))
    for i, k in enumerate(idx):
        means[i], covs[i] = condition_gaussian(
            model.means[k], model.covariances[k], C, x, noise
        )
    return ConditionedMixture(
        weights=w,
        means=means,
        covariances=covs,
        source=model,
        n_constraints=len(obs),
    )


def sample_futures(conditioned, n, seed):
    """n deterministic draws from the conditioned mixture.

    Conditional covariances may be rank-deficient (exact constraints), so
    the factor comes from an eigendecomposition with negative eigenvalues
    clamped to zero.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    comps = rng.choice(conditioned.n_components, size=n, p=conditioned.weights)
    d = conditioned.dim
    out = np.empty((n, d))
    for k in range(conditioned.n_components):
        mask = comps == k
        cnt = int(mask.sum())
        if cnt == 0:
            continue
        vals, vecs = np.linalg.eigh(conditioned.covariances[k])
        factor = vecs * np.sqrt(np.clip(vals, 0.0, None))
        out[mask] = conditioned.means[k] + rng.standard_normal((cnt, d)) @ factor.T
    return out


OBSERVATION_COLUMNS = ("kind", "t", "dim", "value", "noise_var")


def write_observations(obs, stream):
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(OBSERVATION_COLUMNS)
    meta = obs.meta or tuple(("feature", "", str(i)) for i in range(len(obs)))
    for c, (kind, t, dim_label) in zip(obs.constraints, meta):
        w.writerow([kind, t, dim_label, repr(c.value), repr(c.noise_var)])


def read_observations(stream, layout, bounce_time_hint=None):
    reader = csv.reader(stream)
    header = next(reader)
    if [h.strip() for h in header] != list(OBSERVATION_COLUMNS):
        raise ConstraintError(f"expected header {','.join(OBSERVATION_COLUMNS)}")
    constraints = []
    meta = []
    for row in reader:
        if not row or row[0].startswith("#"):
            continue
        kind, t, dim_label, value, noise_var = (f.strip() for f in row)
        one = constraints_from_observations(
            [(kind, float(t) if t else 0.0, dim_label, float(value))],
            layout,
            bounce_time_hint,
            noise_var=float(noise_var),
        )
        constraints.extend(one.constraints)
        meta.extend(one.meta)
    return ObservationSet(dim=layout.dim, constraints=tuple(constraints), meta=tuple(meta))
