"""Truncated Dirichlet-process Gaussian mixture fit by mean-field
coordinate ascent.

The variational family is the standard stick-breaking construction:
Beta posteriors on the sticks, Normal-Wishart posteriors on component
means/precisions, categorical responsibilities per row. Coordinate ascent
updates each block in turn; the evidence lower bound is computed every
iteration and must never decrease.

The fitted artifact is a plain Gaussian mixture (weights, means, full
covariances) extracted from the variational posterior: means from the
Normal-Wishart location, covariances from the inverse-Wishart posterior
mean, and weights from the responsibility mass per component. Components
that attract almost no mass are pruned.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.special import digamma, gammaln, logsumexp

from .errors import FitError

_WEIGHT_PRUNE = 1e-5


@dataclass(frozen=True)
class DpPrior:
    """Stick-breaking concentration and Normal-inverse-Wishart base measure."""

    concentration: float  # alpha of Beta(1, alpha) sticks
    mean: np.ndarray  # base-measure location, (d,)
    mean_precision: float  # kappa: pseudo-count on the location
    degrees_of_freedom: float  # > d - 1
    scale: np.ndarray  # inverse-Wishart scale, (d, d) SPD

    def __post_init__(self):
        mean = np.ascontiguousarray(self.mean, dtype=float)
        scale = np.ascontiguousarray(self.scale, dtype=float)
        d = mean.shape[0]
        if self.concentration <= 0:
            raise FitError(f"concentration must be positive, got {self.concentration}")
        if self.mean_precision <= 0:
            raise FitError("mean_precision must be positive")
        if self.degrees_of_freedom <= d - 1:
            raise FitError(
                f"degrees_of_freedom must exceed dim - 1 = {d - 1}, got "
                f"{self.degrees_of_freedom}"
            )
        if scale.shape != (d, d):
            raise FitError(f"scale must be ({d}, {d}), got {scale.shape}")
        try:
            cholesky(scale, lower=True)
        except np.linalg.LinAlgError as exc:
            raise FitError("prior scale matrix is not positive definite") from exc
        if not np.allclose(scale, scale.T):
            raise FitError("prior scale matrix is not symmetric")
        mean.flags.writeable = False
        scale.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "scale", scale)

    @classmethod
    def default_for(cls, data, concentration=1.0, jitter=0.0):
        """Weakly informative, scale-adaptive prior from the data itself.

        Location at the empirical mean, dof = d + 2 so the prior expected
        covariance equals the (diagonal of the) empirical covariance.
        """
        data = np.asarray(data, dtype=float)
        d = data.shape[1]
        var = data.var(axis=0)
        if np.any(var <= 0):
            if jitter <= 0:
                raise FitError(
                    "singular empirical covariance (zero-variance column) and no jitter"
                )
            var = var + jitter * max(var.mean(), 1.0)
        return cls(
            concentration=concentration,
            mean=data.mean(axis=0),
            mean_precision=1.0,
            degrees_of_freedom=d + 2.0,
            scale=np.diag(var),
        )


@dataclass(frozen=True)
class FitConfig:
    truncation: int = 20
    max_iter: int = 500
    tol: float = 1e-7  # relative ELBO change
    restarts: int = 3
    jitter: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.truncation < 1:
            raise FitError("truncation must be >= 1")
        if self.tol <= 0:
            raise FitError("tol must be positive")


@dataclass(frozen=True)
class FitReport:
    elbo_trace: np.ndarray
    converged: bool
    n_iter: int
    effective_components: int
    restart_elbos: tuple
    heldout_loglik: float | None = None
    jitter_events: tuple = ()


@dataclass(frozen=True)
class MixtureModel:
    """Point-estimate Gaussian mixture: weights, means, full covariances."""

    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, d)
    covariances: np.ndarray  # (K, d, d)
    bounce_flag: str | None = None  # layout key for encoding corpora
    feature_names: tuple | None = None
    prior: DpPrior | None = field(default=None, repr=False)

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=float)
        m = np.ascontiguousarray(self.means, dtype=float)
        c = np.ascontiguousarray(self.covariances, dtype=float)
        if abs(w.sum() - 1.0) > 1e-12:
            raise FitError(f"weights sum to {w.sum()!r}, expected 1")
        if np.any(w <= 0):
            raise FitError("weights must be strictly positive")
        k, d = m.shape
        if w.shape != (k,) or c.shape != (k, d, d):
            raise FitError("inconsistent mixture shapes")
        for j in range(k):
            try:
                cholesky(c[j], lower=True)
            except np.linalg.LinAlgError as exc:
                raise FitError(f"covariance {j} is not positive definite") from exc
        for a in (w, m, c):
            a.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "covariances", c)

    @property
    def n_components(self):
        return self.weights.shape[0]

    @property
    def dim(self):
        return self.means.shape[1]


def _component_log_densities(model, points):
    """(n, K) per-component Gaussian log densities via Cholesky factors."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    if d != model.dim:
        raise FitError(f"points have dim {d}, model has dim {model.dim}")
    out = np.empty((n, model.n_components))
    for k in range(model.n_components):
        L = cholesky(model.covariances[k], lower=True)
        half = solve_triangular(L, (points - model.means[k]).T, lower=True)
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        out[:, k] = -0.5 * (np.sum(half**2, axis=0) + d * np.log(2.0 * np.pi) + logdet)
    return out


def log_density(model, points):
    """Mixture log density, log-sum-exp over components.

    Accepts one point (d,) or a batch (n, d); returns a scalar or (n,).
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    comp = _component_log_densities(model, pts)
    dens = logsumexp(comp + np.log(model.weights), axis=1)
    return float(dens[0]) if single else dens


def holdout_loglik(model, heldout):
    """Mean mixture log density over held-out rows."""
    heldout = np.atleast_2d(np.asarray(heldout, dtype=float))
    if heldout.shape[0] == 0:
        raise FitError("held-out set is empty")
    return float(np.mean(log_density(model, heldout)))


def sample(model, n, seed):
    """n deterministic draws: component from the weights, then a Cholesky
    transform of standard normals."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    comps = rng.choice(model.n_components, size=n, p=model.weights)
    out = np.empty((n, model.dim))
    for k in range(model.n_components):
        mask = comps == k
        cnt = int(mask.sum())
        if cnt == 0:
            continue
        L = cholesky(model.covariances[k], lower=True)
        out[mask] = model.means[k] + rng.standard_normal((cnt, model.dim)) @ L.T
    return out


# ---------------------------------------------------------------------------
# Mean-field coordinate ascent
# ---------------------------------------------------------------------------


def _kmeans_pp_responsibilities(data, k, rng):
    """Soft responsibilities from k-means++ seeding plus a few Lloyd
    sweeps on standardized data."""
    n, _ = data.shape
    sd = data.std(axis=0)
    sd[sd <= 0] = 1.0
    z = (data - data.mean(axis=0)) / sd
    centers = [z[rng.integers(n)]]
    for _ in range(k - 1):
        d2 = np.min([np.sum((z - c) ** 2, axis=1) for c in centers], axis=0)
        total = d2.sum()
        if total <= 0:
            centers.append(z[rng.integers(n)])
            continue
        centers.append(z[rng.choice(n, p=d2 / total)])
    centers = np.array(centers)
    assign = None
    for _ in range(10):
        dist = np.linalg.norm(z[:, None, :] - centers[None, :, :], axis=2)
        new_assign = dist.argmin(axis=1)
        if assign is not None and np.array_equal(new_assign, assign):
            break
        assign = new_assign
        for j in range(k):
            sel = assign == j
            if sel.any():
                centers[j] = z[sel].mean(axis=0)
    # Blending toward uniform keeps early covariance estimates broad, which
    # lets redundant fragments of one true cluster exchange mass and merge
    # instead of freezing into a hard local optimum.
    soft = 0.25
    resp = np.full((n, k), soft / k)
    resp[np.arange(n), assign] += 1.0 - soft
    return resp


def _random_responsibilities(data, k, rng):
    """Near-uniform random responsibilities: the symmetry-breaking init."""
    n = data.shape[0]
    resp = rng.dirichlet(np.full(k, 5.0), size=n)
    return resp


def _log_marginal_niw(stats, prior):
    """Log marginal likelihood of one data subset under the NIW base.

    ``stats`` = (n, sum, raw second moment). Closed form for the Gaussian
    with a Normal-inverse-Wishart prior.
    """
    n, s, raw = stats
    d = len(s)
    kappa0, nu0 = prior.mean_precision, prior.degrees_of_freedom
    mean = s / n
    scatter = raw - n * np.outer(mean, mean)
    dev = mean - prior.mean
    kappa_n = kappa0 + n
    nu_n = nu0 + n
    psi_n = prior.scale + scatter + (kappa0 * n / kappa_n) * np.outer(dev, dev)
    psi_n = 0.5 * (psi_n + psi_n.T)
    sign0, logdet0 = np.linalg.slogdet(prior.scale)
    sign_n, logdet_n = np.linalg.slogdet(psi_n)
    j = np.arange(1, d + 1)
    return float(
        -0.5 * n * d * np.log(np.pi)
        + 0.5 * d * np.log(kappa0 / kappa_n)
        + 0.5 * nu0 * logdet0
        - 0.5 * nu_n * logdet_n
        + np.sum(gammaln((nu_n + 1.0 - j) / 2.0) - gammaln((nu0 + 1.0 - j) / 2.0))
    )


def _merged_kmeans_responsibilities(data, k, rng, prior):
    """k-means++ shards agglomerated by Bayesian evidence before use.

    Mean-field ascent cannot merge two large shards of one true cluster
    (mass flow between near-identical components is exponentially slow),
    so shards are greedily unioned while the NIW marginal likelihood plus
    the partition prior favors the merge. On well-separated data this
    recovers the planted partition; on diffuse corpora it merges little
    and the raw k-means restart can win the ELBO race instead.
    """
    n, d = data.shape
    base = _kmeans_pp_responsibilities(data, k, rng)
    assign = base.argmax(axis=1)
    groups = [g for g in range(k) if np.any(assign == g)]
    stats = {}
    for g in groups:
        sub = data[assign == g]
        stats[g] = (len(sub), sub.sum(axis=0), sub.T @ sub)
    logm = {g: _log_marginal_niw(stats[g], prior) for g in groups}
    log_alpha = np.log(prior.concentration)

    def merge_gain(i, j):
        ni, nj = stats[i][0], stats[j][0]
        pooled = (
            ni + nj,
            stats[i][1] + stats[j][1],
            stats[i][2] + stats[j][2],
        )
        like = _log_marginal_niw(pooled, prior) - logm[i] - logm[j]
        prior_term = gammaln(ni + nj) - gammaln(ni) - gammaln(nj) - log_alpha
        return like + prior_term, pooled

    while len(groups) > 1:
        best = None
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                gain, pooled = merge_gain(groups[a], groups[b])
                if gain > 0 and (best is None or gain > best[0]):
                    best = (gain, groups[a], groups[b], pooled)
        if best is None:
            break
        _, gi, gj, pooled = best
        assign[assign == gj] = gi
        stats[gi] = pooled
        logm[gi] = _log_marginal_niw(pooled, prior)
        del stats[gj], logm[gj]
        groups.remove(gj)

    soft = 0.25
    resp = np.full((n, k), soft / k)
    resp[np.arange(n), assign] += 1.0 - soft
    return resp


class _CaviState:
    """Variational parameters for one restart."""

    def __init__(self, data, prior, config):
        self.x = data
        self.n, self.d = data.shape
        self.prior = prior
        self.T = config.truncation
        self.alpha = prior.concentration
        self.kappa0 = prior.mean_precision
        self.nu0 = prior.degrees_of_freedom
        self.m0 = prior.mean
        # Wishart parametrization of the NIW scale: W0 = scale^{-1}.
        self.W0_inv = prior.scale.copy()
        self.jitter_events = []
        d = self.d
        logdet_W0_inv = 2.0 * np.sum(np.log(np.diag(cholesky(self.W0_inv, lower=True))))
        self.log_b0 = float(
            0.5 * self.nu0 * logdet_W0_inv
            - 0.5 * self.nu0 * d * np.log(2.0)
            - 0.25 * d * (d - 1) * np.log(np.pi)
            - np.sum(gammaln((self.nu0 + 1.0 - np.arange(1, d + 1)) / 2.0))
        )

    def m_step(self, resp, broad=False):
        x, T, d = self.x, self.T, self.d
        nk = resp.sum(axis=0)  # (T,)
        safe = np.maximum(nk, 1e-12)
        xbar = (resp.T @ x) / safe[:, None]
        # Stick posteriors (the last stick is fixed at 1).
        tail = nk.sum() - np.cumsum(nk)
        self.a = 1.0 + nk[: T - 1]
        self.b = self.alpha + tail[: T - 1]
        # Normal-Wishart posteriors.
        self.kappa = self.kappa0 + nk
        self.nu = self.nu0 + nk
        self.m = (self.kappa0 * self.m0 + nk[:, None] * xbar) / self.kappa[:, None]
        if broad:
            # Warm-up: pretend every component has the global scatter so
            # the first responsibilities stay soft; tight k-means shards
            # would otherwise freeze into a fragmented optimum.
            centered = x - x.mean(axis=0)
            global_cov = centered.T @ centered / x.shape[0]
            scatter = safe[:, None, None] * global_cov[None, :, :]
        else:
            # All weighted scatters in one GEMM:
            # raw[t] = sum_i r_it x_i x_i', then recenter about xbar_t.
            raw = np.tensordot(x.T, resp[:, :, None] * x[:, None, :], axes=(1, 0))
            raw = raw.transpose(1, 0, 2)
            scatter = raw - safe[:, None, None] * (xbar[:, :, None] * xbar[:, None, :])
        dev = xbar - self.m0
        coef = (self.kappa0 * nk / self.kappa)[:, None, None]
        self.W_inv = self.W0_inv + scatter + coef * (dev[:, :, None] * dev[:, None, :])
        self.W_inv = 0.5 * (self.W_inv + self.W_inv.transpose(0, 2, 1))
        self.nk = nk
        self.xbar = xbar
        self._refresh_expectations()

    def _refresh_expectations(self):
        T, d = self.T, self.d
        try:
            L = np.linalg.cholesky(self.W_inv)  # batched over components
        except np.linalg.LinAlgError:
            for k in range(T):
                try:
                    np.linalg.cholesky(self.W_inv[k])
                except np.linalg.LinAlgError:
                    bump = 1e-10 * np.trace(self.W_inv[k]) / d
                    self.W_inv[k] += bump * np.eye(d)
                    self.jitter_events.append(f"W_inv[{k}] jittered by {bump:.3e}")
            L = np.linalg.cholesky(self.W_inv)
        self.W = np.linalg.inv(self.W_inv)
        self.W = 0.5 * (self.W + self.W.transpose(0, 2, 1))
        diag = np.einsum("tii->ti", L)
        self.logdet_W = -2.0 * np.sum(np.log(diag), axis=1)
        j = np.arange(1, d + 1)
        self.e_log_lambda = (
            digamma((self.nu[:, None] + 1.0 - j) / 2.0).sum(axis=1)
            + d * np.log(2.0)
            + self.logdet_W
        )
        e_log_v = digamma(self.a) - digamma(self.a + self.b)
        e_log_1mv = digamma(self.b) - digamma(self.a + self.b)
        self.e_log_v = e_log_v
        self.e_log_1mv = e_log_1mv
        cum = np.concatenate([[0.0], np.cumsum(e_log_1mv)])
        # E log pi_k: sticks 1..T-1 plus the final remainder component.
        self.e_log_pi = np.concatenate([e_log_v + cum[:-1], [cum[-1]]])

    def e_step(self):
        """New responsibilities plus the summed log normalizer.

        The normalizer sum equals the z-dependent ELBO terms (expected
        data log-likelihood + assignment prior + assignment entropy) at
        the fresh responsibilities, so the ELBO never has to re-aggregate
        sufficient statistics.
        """
        x, T, d = self.x, self.T, self.d
        # One wide GEMM for all Mahalanobis terms:
        # (x - m)'W(x - m) = x'Wx - 2 (W m)'x + m'W m.
        wide = x @ self.W.transpose(1, 0, 2).reshape(d, T * d)  # (n, T*d)
        blocks = wide.reshape(self.n, T, d)
        xwx = np.einsum("ntd,nd->nt", blocks, x)
        wm = np.einsum("tij,tj->ti", self.W, self.m)  # (T, d)
        xwm = x @ wm.T  # (n, T)
        mwm = np.einsum("ti,ti->t", wm, self.m)  # (T,)
        quad = self.nu * (xwx - 2.0 * xwm + mwm)
        logr = (
            self.e_log_pi
            + 0.5 * self.e_log_lambda
            - 0.5 * d / self.kappa
            - 0.5 * d * np.log(2.0 * np.pi)
            - 0.5 * quad
        )
        norm = logsumexp(logr, axis=1, keepdims=True)
        resp = np.exp(logr - norm)
        return resp, float(norm.sum())

    def elbo(self, z_terms):
        T, d = self.T, self.d
        a, b, alpha = self.a, self.b, self.alpha

        # Sticks: E log p(V) - E log q(V)
        term_v = float(np.sum(np.log(alpha) + (alpha - 1.0) * self.e_log_1mv))
        log_beta_q = gammaln(a) + gammaln(b) - gammaln(a + b)
        e_log_q_v = float(
            np.sum((a - 1.0) * self.e_log_v + (b - 1.0) * self.e_log_1mv - log_beta_q)
        )

        # Normal-Wishart: E log p(mu, Lambda) - E log q(mu, Lambda)
        nu0, kappa0 = self.nu0, self.kappa0
        log_b0 = self.log_b0
        dev = self.m - self.m0  # (T, d)
        wdev = np.einsum("tij,tj->ti", self.W, dev)
        quad_dev = np.einsum("ti,ti->t", wdev, dev)
        tr_w0w = np.einsum("ij,tji->t", self.W0_inv, self.W)
        term_niw = float(
            np.sum(
                0.5
                * (
                    d * np.log(kappa0 / (2.0 * np.pi))
                    + self.e_log_lambda
                    - d * kappa0 / self.kappa
                    - kappa0 * self.nu * quad_dev
                )
                + log_b0
                + 0.5 * (nu0 - d - 1.0) * self.e_log_lambda
                - 0.5 * self.nu * tr_w0w
            )
        )
        j = np.arange(1, d + 1)
        log_bk = (
            -0.5 * self.nu * self.logdet_W
            - 0.5 * self.nu * d * np.log(2.0)
            - 0.25 * d * (d - 1) * np.log(np.pi)
            - gammaln((self.nu[:, None] + 1.0 - j) / 2.0).sum(axis=1)
        )
        wishart_entropy = (
            -log_bk - 0.5 * (self.nu - d - 1.0) * self.e_log_lambda + 0.5 * self.nu * d
        )
        e_log_q_niw = float(
            np.sum(
                0.5 * self.e_log_lambda
                + 0.5 * d * np.log(self.kappa / (2.0 * np.pi))
                - 0.5 * d
                - wishart_entropy
            )
        )
        return float(z_terms + term_v - e_log_q_v + term_niw - e_log_q_niw)


def _run_cavi(data, prior, config, rng, state=None, resp=None, tol=None, trace=None):
    """Coordinate ascent until the relative ELBO change drops below tol.

    Pass an existing (state, resp, trace) to continue a run at a tighter
    tolerance; the appended trace stays non-decreasing because the updates
    simply carry on from the same variational state.
    """
    fresh = state is None
    if fresh:
        state = _CaviState(data, prior, config)
        resp = _kmeans_pp_responsibilities(data, config.truncation, rng)
    tol = config.tol if tol is None else tol
    trace = [] if trace is None else list(trace)
    start = len(trace)
    converged = False
    prev_nk = resp.sum(axis=0)
    drain_budget = 200
    for it in range(config.max_iter):
        state.m_step(resp, broad=fresh and it == 0)
        resp, z_terms = state.e_step()
        value = state.elbo(z_terms)
        if not np.isfinite(value):
            raise FitError(f"non-finite ELBO at iteration {len(trace)}")
        trace.append(value)
        nk = resp.sum(axis=0)
        if len(trace) > start + 1 and abs(value - trace[-2]) <= tol * abs(trace[-2]):
            # Near-empty components drain geometrically with per-iteration
            # ELBO gains below any fixed tolerance; keep going (within a
            # budget) while such a component is still visibly shrinking.
            band = (nk > 0.02) & (nk < 2.0)
            draining = band & (nk < prev_nk * 0.995)
            if not draining.any() or drain_budget <= 0:
                converged = True
                break
            drain_budget -= 1
        prev_nk = nk
    return state, resp, np.array(trace), converged


def _extract_model(state, resp, prior):
    """Point estimates: responsibility-mass weights, posterior-mean moments.

    Weights use the responsibility mass rather than the stick means because
    sticks leave O(1e-4) mass on empty components, which would defeat the
    pruning contract.
    """
    nk = resp.sum(axis=0)
    weights = nk / nk.sum()
    # Besides the weight floor, require half an observation of mass: the
    # broad prior-predictive "background" components that mean-field leaves
    # behind carry a few hundredths of a point each and are noise, not
    # structure.
    keep = (weights >= _WEIGHT_PRUNE) & (nk >= 0.5)
    if not keep.any():
        keep[int(np.argmax(weights))] = True
    weights = weights[keep]
    weights = weights / weights.sum()
    means = state.m[keep]
    d = state.d
    covs = np.empty((keep.sum(), d, d))
    for i, k in enumerate(np.where(keep)[0]):
        # Inverse-Wishart posterior mean of the covariance.
        cov = state.W_inv[k] / (state.nu[k] - d - 1.0)
        covs[i] = 0.5 * (cov + cov.T)
    return MixtureModel(weights=weights, means=means, covariances=covs, prior=prior)


def fit(data, prior=None, config=None, heldout=None):
    """Fit the DP-GMM by coordinate ascent; best of ``config.restarts``.

    Returns (MixtureModel, FitReport). Raises FitError on degenerate input
    (too few rows, non-finite entries, singular empirical covariance
    without jitter).
    """
    data = np.ascontiguousarray(data, dtype=float)
    if data.ndim != 2:
        raise FitError("data must be a 2-d array")
    n, d = data.shape
    if n <= d:
        raise FitError(f"need more rows than dimensions, got n={n}, d={d}")
    if not np.all(np.isfinite(data)):
        raise FitError("data contains non-finite entries")
    config = config or FitConfig()
    if prior is None:
        prior = DpPrior.default_for(data, jitter=config.jitter)

    best = None
    restart_elbos = []
    for r in range(config.restarts):
        rng = np.random.default_rng([config.seed, r])
        state = _CaviState(data, prior, config)
        # Cycle init families across restarts for basin diversity; the
        # best ELBO arbitrates.
        family = r % 3
        if family == 0:
            resp0 = _merged_kmeans_responsibilities(data, config.truncation, rng, prior)
        elif family == 1:
            resp0 = _kmeans_pp_responsibilities(data, config.truncation, rng)
        else:
            resp0 = _random_responsibilities(data, config.truncation, rng)
        state, resp, trace, converged = _run_cavi(
            data, prior, config, rng, state=state, resp=resp0
        )
        restart_elbos.append(trace[-1])
        if best is None or trace[-1] > best[2][-1]:
            best = (state, resp, trace, converged)
    state, resp, trace, converged = best
    # Polish only the winning restart at a tighter tolerance: dying
    # components drain slowly and the coarse tolerance can freeze them with
    # a point or two of residual mass.
    state, resp, trace, converged = _run_cavi(
        data, prior, config, None, state=state, resp=resp, tol=config.tol * 1e-3, trace=trace
    )

    model = _extract_model(state, resp, prior)
    report = FitReport(
        elbo_trace=trace,
        converged=converged,
        n_iter=len(trace),
        effective_components=model.n_components,
        restart_elbos=tuple(restart_elbos),
        heldout_loglik=holdout_loglik(model, heldout) if heldout is not None else None,
        jitter_events=tuple(state.jitter_events),
    )
    return model, report


def responsibilities(model, points):
    """Posterior component probabilities per row under the point-estimate
    mixture (used for cluster-recovery diagnostics)."""
    comp = _component_log_densities(model, points) + np.log(model.weights)
    comp -= logsumexp(comp, axis=1, keepdims=True)
    return np.exp(comp)
