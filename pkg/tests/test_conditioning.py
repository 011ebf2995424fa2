import numpy as np
import pytest

from helpers import random_spd
from shotvalue import conditioning as cond
from shotvalue import mixture as mx
from shotvalue.encoding import layout_for
from shotvalue.errors import ConstraintError


def joint_precision_oracle(mean, cov, C, x, noise):
    """Independent route: build the joint covariance of (a, C a + e) and
    condition by partitioning the joint precision matrix."""
    d = len(mean)
    m = len(x)
    joint = np.zeros((d + m, d + m))
    joint[:d, :d] = cov
    joint[:d, d:] = cov @ C.T
    joint[d:, :d] = C @ cov
    joint[d:, d:] = C @ cov @ C.T + np.diag(noise)
    prec = np.linalg.inv(joint)
    j_aa = prec[:d, :d]
    j_ab = prec[:d, d:]
    mu_b = C @ mean
    post_cov = np.linalg.inv(j_aa)
    post_mean = mean - post_cov @ j_ab @ (x - mu_b)
    return post_mean, post_cov


class TestConditionGaussian:
    def test_bivariate_closed_form(self):
        rho = 0.6
        cov = np.array([[1.0, rho], [rho, 1.0]])
        a = 0.8
        mean, post = cond.condition_gaussian(
            np.zeros(2), cov, np.array([[1.0, 0.0]]), np.array([a]), np.array([0.0])
        )
        assert mean[1] == pytest.approx(rho * a, abs=1e-12)
        assert post[1, 1] == pytest.approx(1 - rho**2, abs=1e-12)
        assert abs(post[0, 0]) < 1e-12

    def test_identity_observation_collapses(self):
        rng = np.random.default_rng(0)
        cov = random_spd(rng, 4)
        x = rng.normal(size=4)
        mean, post = cond.condition_gaussian(
            np.zeros(4), cov, np.eye(4), x, np.zeros(4)
        )
        np.testing.assert_allclose(mean, x, atol=1e-10)
        assert np.max(np.abs(post)) < 1e-9

    def test_matches_joint_precision_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            d, m = 6, 2
            cov = random_spd(rng, d)
            mean = rng.normal(size=d)
            C = rng.normal(size=(m, d))
            x = rng.normal(size=m)
            noise = rng.uniform(0.01, 0.1, m)
            got_m, got_c = cond.condition_gaussian(mean, cov, C, x, noise)
            want_m, want_c = joint_precision_oracle(mean, cov, C, x, noise)
            np.testing.assert_allclose(got_m, want_m, atol=1e-9)
            np.testing.assert_allclose(got_c, want_c, atol=1e-9)

    def test_redundant_zero_noise_constraints_error(self):
        cov = np.eye(3)
        C = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        with pytest.raises(ConstraintError, match="singular"):
            cond.condition_gaussian(np.zeros(3), cov, C, np.array([1.0, 1.0]), np.zeros(2))

    def test_posterior_psd(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            cov = random_spd(rng, 5)
            C = rng.normal(size=(3, 5))
            _, post = cond.condition_gaussian(
                np.zeros(5), cov, C, rng.normal(size=3), np.full(3, 1e-6)
            )
            assert np.linalg.eigvalsh(post).min() >= -1e-9

    def test_sequential_equals_stacked(self):
        # Gaussian consistency: condition on A then B == condition on [A; B].
        rng = np.random.default_rng(3)
        d = 6
        cov = random_spd(rng, d)
        mean = rng.normal(size=d)
        A = rng.normal(size=(2, d))
        B = rng.normal(size=(2, d))
        xa, xb = rng.normal(size=2), rng.normal(size=2)
        na, nb = np.full(2, 0.05), np.full(2, 0.02)
        m1, c1 = cond.condition_gaussian(mean, cov, A, xa, na)
        m1, c1 = cond.condition_gaussian(m1, c1, B, xb, nb)
        m2, c2 = cond.condition_gaussian(
            mean, cov, np.vstack([A, B]), np.concatenate([xa, xb]), np.concatenate([na, nb])
        )
        np.testing.assert_allclose(m1, m2, atol=1e-9)
        np.testing.assert_allclose(c1, c2, atol=1e-9)


def two_component_1d(mu2=10.0):
    return mx.MixtureModel(
        weights=np.array([0.5, 0.5]),
        means=np.array([[0.0], [mu2]]),
        covariances=np.array([[[1.0]], [[1.0]]]),
    )


class TestUpdateWeights:
    def test_empty_observations_keep_prior(self):
        model = two_component_1d()
        obs = cond.ObservationSet(dim=1)
        np.testing.assert_array_equal(cond.update_weights(model, obs), model.weights)

    def test_two_gaussians_observed_zero(self):
        model = two_component_1d()
        obs = cond.ObservationSet(
            dim=1, constraints=(cond.LinearConstraint(np.array([1.0]), 0.0, 0.0),)
        )
        w = cond.update_weights(model, obs)
        expected = 1.0 / (1.0 + np.exp(-50.0))
        assert w[0] == pytest.approx(expected, abs=1e-15)

    def test_identical_predicted_moments_leave_weights(self):
        rng = np.random.default_rng(4)
        d = 3
        covs = np.stack([random_spd(rng, d)] * 2)
        # different means in an unobserved direction only
        means = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
        model = mx.MixtureModel(
            weights=np.array([0.4, 0.6]), means=means, covariances=covs
        )
        row = np.array([1.0, 0.0, 0.0])
        obs = cond.ObservationSet(
            dim=3, constraints=(cond.LinearConstraint(row, 0.5, 0.1),)
        )
        w = cond.update_weights(model, obs)
        np.testing.assert_allclose(w, model.weights, atol=1e-12)

    def test_matches_density_ratio_oracle(self):
        rng = np.random.default_rng(5)
        for d in (1, 3):
            for _ in range(10):
                k = 3
                means = rng.normal(size=(k, d), scale=3)
                covs = np.stack([random_spd(rng, d) for _ in range(k)])
                w = rng.dirichlet(np.ones(k))
                model = mx.MixtureModel(weights=w, means=means, covariances=covs)
                C = rng.normal(size=(2, d))
                x = rng.normal(size=2)
                noise = rng.uniform(0.01, 0.2, 2)
                got = cond.update_weights(
                    model,
                    cond.ObservationSet(
                        dim=d,
                        constraints=tuple(
                            cond.LinearConstraint(C[i], x[i], noise[i]) for i in range(2)
                        ),
                    ),
                )
                # direct density-ratio computation per component
                lik = np.empty(k)
                for j in range(k):
                    pm = C @ means[j]
                    pc = C @ covs[j] @ C.T + np.diag(noise)
                    diff = x - pm
                    lik[j] = np.exp(-0.5 * diff @ np.linalg.solve(pc, diff)) / np.sqrt(
                        (2 * np.pi) ** 2 * np.linalg.det(pc)
                    )
                want = w * lik / np.sum(w * lik)
                np.testing.assert_allclose(got, want, atol=1e-10)


class TestConditionMixture:
    def test_single_component_equals_condition_gaussian(self):
        rng = np.random.default_rng(6)
        d = 4
        cov = random_spd(rng, d)
        mean = rng.normal(size=d)
        model = mx.MixtureModel(
            weights=np.array([1.0]), means=mean[None], covariances=cov[None]
        )
        row = rng.normal(size=d)
        obs = cond.ObservationSet(
            dim=d, constraints=(cond.LinearConstraint(row, 1.5, 0.01),)
        )
        cm = cond.condition_mixture(model, obs)
        assert cm.weights[0] == pytest.approx(1.0)
        want_m, want_c = cond.condition_gaussian(
            mean, cov, row[None, :], np.array([1.5]), np.array([0.01])
        )
        np.testing.assert_allclose(cm.means[0], want_m, atol=1e-12)
        np.testing.assert_allclose(cm.covariances[0], want_c, atol=1e-12)

    def test_conditioning_concentrates_on_source_component(self):
        rng = np.random.default_rng(7)
        d = 4
        means = np.array([[-6.0] * d, [6.0] * d])
        covs = np.stack([np.eye(d)] * 2)
        model = mx.MixtureModel(
            weights=np.array([0.5, 0.5]), means=means, covariances=covs
        )
        draw = rng.normal(means[1], 1.0)
        constraints = tuple(
            cond.LinearConstraint(np.eye(d)[i], draw[i], 1e-4) for i in range(d)
        )
        cm = cond.condition_mixture(
            model, cond.ObservationSet(dim=d, constraints=constraints)
        )
        # component 1 should dominate; component 0 is typically pruned
        idx = int(np.argmax(cm.weights))
        assert cm.weights[idx] > 0.99

    def test_double_conditioning_equals_stacked_duplicates(self):
        rng = np.random.default_rng(8)
        d = 3
        means = rng.normal(size=(2, d))
        covs = np.stack([random_spd(rng, d) for _ in range(2)])
        model = mx.MixtureModel(
            weights=np.array([0.5, 0.5]), means=means, covariances=covs
        )
        row = rng.normal(size=d)
        c1 = cond.LinearConstraint(row, 0.7, 0.05)
        once = cond.condition_mixture(
            model, cond.ObservationSet(dim=d, constraints=(c1, c1))
        )
        # conditioning twice sequentially with the same constraint
        mid = cond.condition_mixture(
            model, cond.ObservationSet(dim=d, constraints=(c1,))
        )
        mid_model = mx.MixtureModel(
            weights=mid.weights, means=mid.means,
            covariances=mid.covariances + 1e-12 * np.eye(d),
        )
        twice = cond.condition_mixture(
            mid_model, cond.ObservationSet(dim=d, constraints=(c1,))
        )
        np.testing.assert_allclose(twice.weights, once.weights, atol=1e-9)
        np.testing.assert_allclose(twice.means, once.means, atol=1e-8)
        np.testing.assert_allclose(twice.covariances, once.covariances, atol=1e-8)


class TestSampleFutures:
    def test_full_observation_degenerate_draws(self):
        rng = np.random.default_rng(9)
        d = 3
        cov = random_spd(rng, d)
        model = mx.MixtureModel(
            weights=np.array([1.0]), means=np.zeros((1, d)), covariances=cov[None]
        )
        x = rng.normal(size=d)
        obs = cond.ObservationSet(
            dim=d,
            constraints=tuple(
                cond.LinearConstraint(np.eye(d)[i], x[i], 0.0) for i in range(d)
            ),
        )
        cm = cond.condition_mixture(model, obs)
        draws = cond.sample_futures(cm, 50, seed=0)
        np.testing.assert_allclose(draws, np.tile(x, (50, 1)), atol=1e-9)

    def test_zero_noise_constraints_hold_in_samples(self):
        rng = np.random.default_rng(10)
        d = 6
        cov = random_spd(rng, d)
        model = mx.MixtureModel(
            weights=np.array([1.0]), means=rng.normal(size=(1, d)), covariances=cov[None]
        )
        C = rng.normal(size=(2, d))
        x = rng.normal(size=2)
        obs = cond.ObservationSet(
            dim=d,
            constraints=tuple(cond.LinearConstraint(C[i], x[i], 0.0) for i in range(2)),
        )
        cm = cond.condition_mixture(model, obs)
        draws = cond.sample_futures(cm, 500, seed=1)
        residuals = draws @ C.T - x
        assert np.max(np.abs(residuals)) < 1e-6

    def test_seed_determinism(self):
        model = two_component_1d()
        cm = cond.condition_mixture(model, cond.ObservationSet(dim=1))
        a = cond.sample_futures(cm, 64, seed=3)
        b = cond.sample_futures(cm, 64, seed=3)
        np.testing.assert_array_equal(a, b)

    def test_sample_mean_matches_conditional_mean(self):
        rng = np.random.default_rng(11)
        d = 4
        cov = random_spd(rng, d)
        model = mx.MixtureModel(
            weights=np.array([1.0]), means=rng.normal(size=(1, d)), covariances=cov[None]
        )
        row = rng.normal(size=d)
        obs = cond.ObservationSet(
            dim=d, constraints=(cond.LinearConstraint(row, 0.2, 0.0),)
        )
        cm = cond.condition_mixture(model, obs)
        draws = cond.sample_futures(cm, 100_000, seed=4)
        se = np.sqrt(np.diag(cm.covariances[0]) / len(draws))
        assert np.all(np.abs(draws.mean(axis=0) - cm.means[0]) <= 4 * se + 1e-12)


class TestObservationBuilding:
    def test_t0_ball_selects_intercept(self):
        layout = layout_for("one_bounce")
        obs = cond.constraints_from_observations(
            [("ball", 0.0, "x", 3.3)], layout, bounce_time_hint=1.0
        )
        row = obs.constraints[0].row
        assert row[layout.index("arc1_x_0")] == 1.0
        assert np.count_nonzero(row) == 1
        assert obs.constraints[0].value == 3.3

    def test_powers_of_time(self):
        layout = layout_for("one_bounce")
        obs = cond.constraints_from_observations(
            [("ball", 0.2, "x", 1.0)], layout, bounce_time_hint=1.0
        )
        row = obs.constraints[0].row
        block = layout.arc_block("arc1", "x")
        np.testing.assert_allclose(row[block], [1.0, 0.2, 0.04, 0.008], atol=1e-15)

    def test_post_bounce_rebased_to_hint(self):
        layout = layout_for("one_bounce")
        obs = cond.constraints_from_observations(
            [("ball", 1.5, "y", -1.0)], layout, bounce_time_hint=1.0
        )
        row = obs.constraints[0].row
        block = layout.arc_block("arc2", "y")
        np.testing.assert_allclose(row[block], [1.0, 0.5, 0.25, 0.125], atol=1e-15)

    def test_player_rows(self):
        layout = layout_for("one_bounce")
        obs = cond.constraints_from_observations(
            [("receiver", 0.4, "x", 2.0)], layout
        )
        row = obs.constraints[0].row
        block = layout.player_block("receiver", "x")
        np.testing.assert_allclose(row[block], [1.0, 0.4])

    def test_feature_unit_row(self):
        layout = layout_for("one_bounce")
        obs = cond.constraints_from_observations(
            [("feature", 0.0, "exit_duration", 0.8)], layout
        )
        row = obs.constraints[0].row
        assert row[layout.index("exit_duration")] == 1.0
        assert np.count_nonzero(row) == 1

    def test_dense_grid_recovers_least_squares(self):
        # conditioning a broad prior on >= 4 exact arc-1 points per
        # dimension reproduces the least-squares fit of those points
        rng = np.random.default_rng(12)
        layout = layout_for("one_bounce")
        d = layout.dim
        prior_model = mx.MixtureModel(
            weights=np.array([1.0]),
            means=np.zeros((1, d)),
            covariances=(np.eye(d) * 100.0)[None],
        )
        ts = np.array([0.05, 0.2, 0.4, 0.6, 0.75])
        coeffs = np.array([1.0, 2.0, -3.0, 0.5])
        values = np.vander(ts, 4, increasing=True) @ coeffs
        triples = [("ball", t, "x", v) for t, v in zip(ts, values)]
        obs = cond.constraints_from_observations(
            triples, layout, bounce_time_hint=2.0, noise_var=1e-12
        )
        cm = cond.condition_mixture(prior_model, obs)
        got = cm.means[0][layout.arc_block("arc1", "x")]
        design = np.vander(ts, 4, increasing=True)
        lsq = np.linalg.lstsq(design, values, rcond=None)[0]
        np.testing.assert_allclose(got, lsq, atol=1e-6)

    def test_serialization_roundtrip(self, tmp_path):
        import io

        layout = layout_for("one_bounce")
        triples = [
            ("ball", 0.1, "x", 1.5),
            ("ball", 0.1, "z", 2.0),
            ("shooter", 0.1, "y", -10.0),
            ("feature", 0.0, "exit_duration", 0.7),
        ]
        obs = cond.constraints_from_observations(triples, layout, 1.0, noise_var=1e-4)
        buf = io.StringIO()
        cond.write_observations(obs, buf)
        buf.seek(0)
        loaded = cond.read_observations(buf, layout, bounce_time_hint=1.0)
        assert len(loaded) == len(obs)
        for a, b in zip(loaded.constraints, obs.constraints):
            np.testing.assert_array_equal(a.row, b.row)
            assert a.value == b.value and a.noise_var == b.noise_var

    def test_unresolvable_arc_attribution(self):
        layout = layout_for("no_bounce")
        with pytest.raises(ConstraintError):
            cond.constraints_from_observations(
                [("ball", 1.5, "x", 0.0)], layout, bounce_time_hint=1.0
            )
