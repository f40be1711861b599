"""
Test suite for counterfactual-distance membership inference attacks.
"""

import unittest
import os
import sys

import numpy as np

# Add the parent directory to the path so we can import privrecourse
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from privrecourse import (
    AttackKind, AttackPipeline, AttackScoreSet, DataError, LinearModel, Mechanism,
    Membership, ParameterError, PrivacyBudget, TrainConfig, cfd_attack_scores,
    counterfactual_distance, generate_synthetic, lrt_attack_scores,
    one_sided_lrt_decision, preprocess, run_attack_experiment, train_shadow_ensemble
)
from privrecourse.attacks import LrtTail, VarianceMode, lrt_threshold, out_distribution


class TestScoreSet(unittest.TestCase):
    """Test AttackScoreSet validation."""

    def test_rejects_non_finite(self):
        """Test NaN scores raise ParameterError."""
        with self.assertRaises(ParameterError):
            AttackScoreSet([0.1, np.nan], [True, False], AttackKind.CFD)

    def test_concatenate(self):
        """Test pooling keeps order and refuses mixed kinds."""
        a = AttackScoreSet([1.0], [True], AttackKind.CFD)
        b = AttackScoreSet([2.0], [False], AttackKind.CFD)
        pooled = AttackScoreSet.concatenate([a, b])
        self.assertEqual(pooled.scores.tolist(), [1.0, 2.0])
        self.assertTrue(pooled.has_both_classes())
        with self.assertRaises(ParameterError):
            AttackScoreSet.concatenate([a, AttackScoreSet([1.0], [True], AttackKind.LRT_LOCAL)])


class TestCfdAttack(unittest.TestCase):
    """Test the CFD thresholding attack."""

    def test_scores_are_distances(self):
        """Test scores equal closed-form recourse costs."""
        model = LinearModel(np.array([1.0, 2.0]), -0.5)
        X = np.array([[0.0, 0.0], [1.0, 1.0], [-2.0, 0.5]])
        scores = cfd_attack_scores(model, X, [True, False, True])
        expected = [counterfactual_distance(model, x).cost for x in X]
        np.testing.assert_allclose(scores.scores, expected)
        self.assertEqual(scores.attack_kind, AttackKind.CFD)

    def test_no_queries(self):
        """Test an empty query set raises ParameterError."""
        with self.assertRaises(ParameterError):
            cfd_attack_scores(LinearModel(np.ones(2)), np.empty((0, 2)), [])


class TestLrtAttack(unittest.TestCase):
    """Test the one-sided CFD likelihood-ratio attack."""

    def test_matches_direct_quantile_test(self):
        """Test score thresholding agrees with the direct lognormal quantile test."""
        rng = np.random.default_rng(0)
        for _ in range(100):
            shadow = rng.lognormal(rng.normal(), rng.uniform(0.1, 1.0), size=(1, int(rng.integers(2, 10))))
            t0 = float(rng.lognormal(rng.normal(), 1.0))
            alpha = float(rng.uniform(0.01, 0.5))
            scores = lrt_attack_scores(shadow, [t0], [True], VarianceMode.LOCAL, LrtTail.LOWER)
            by_score = Membership.MEMBER if scores.scores[0] >= lrt_threshold(alpha) else Membership.NON_MEMBER
            self.assertEqual(by_score, one_sided_lrt_decision(shadow[0], t0, alpha))

    def test_hand_example(self):
        """Test the standardized log distance on a hand-computed case."""
        shadow = np.exp(np.array([[0.0, 2.0]]))
        scores = lrt_attack_scores(shadow, [np.e ** 3], [True], VarianceMode.LOCAL, LrtTail.UPPER)
        self.assertAlmostEqual(scores.scores[0], 2.0)
        lower = lrt_attack_scores(shadow, [np.e ** 3], [True], VarianceMode.LOCAL, LrtTail.LOWER)
        self.assertAlmostEqual(lower.scores[0], -2.0)

    def test_global_scores_scale_invariant(self):
        """Test scaling every CFD by one constant leaves global-mode scores unchanged."""
        rng = np.random.default_rng(4)
        shadow = rng.lognormal(0.0, 0.7, size=(6, 4))
        t0 = rng.lognormal(0.0, 0.7, size=6)
        members = [True, False] * 3
        base = lrt_attack_scores(shadow, t0, members, VarianceMode.GLOBAL)
        for k in (1e-3, 7.3, 250.0):
            scaled = lrt_attack_scores(shadow * k, t0 * k, members, VarianceMode.GLOBAL)
            np.testing.assert_allclose(scaled.scores, base.scores, rtol=0, atol=1e-9)

    def test_global_variance_pools(self):
        """Test global mode uses one pooled variance across points."""
        shadow = np.array([[1.0, np.e ** 2], [np.e, np.e]])
        mu, sigma = out_distribution(shadow, VarianceMode.GLOBAL)
        np.testing.assert_allclose(mu, [1.0, 1.0])
        np.testing.assert_allclose(sigma, [np.sqrt(0.5), np.sqrt(0.5)])

    def test_local_zero_variance(self):
        """Test identical shadow distances fail local mode but not global mode."""
        shadow = np.array([[2.0, 2.0], [1.0, 3.0]])
        with self.assertRaises(DataError):
            out_distribution(shadow, VarianceMode.LOCAL)
        _, sigma = out_distribution(np.full((2, 3), 2.0), VarianceMode.GLOBAL)
        self.assertTrue(np.all(sigma > 0))

    def test_zero_distance_floored(self):
        """Test zero distances produce finite scores."""
        scores = lrt_attack_scores(np.array([[0.0, 1.0]]), [0.0], [True], VarianceMode.LOCAL)
        self.assertTrue(np.isfinite(scores.scores).all())

    def test_mismatched_rows(self):
        """Test shadow and target counts must agree."""
        with self.assertRaises(ParameterError):
            lrt_attack_scores(np.ones((2, 3)), [1.0], [True])

    def test_invalid_alpha(self):
        """Test alpha outside (0, 1) raises ParameterError."""
        with self.assertRaises(ParameterError):
            lrt_threshold(1.0)


class TestShadowEnsemble(unittest.TestCase):
    """Test shadow model training."""

    def setUp(self):
        """Set up test fixtures."""
        self.pool = preprocess(generate_synthetic(5, 120, 0))
        self.pipeline = AttackPipeline(TrainConfig(max_iters=200))

    def test_deterministic(self):
        """Test the same seed yields the same shadow models."""
        a = train_shadow_ensemble(self.pool, self.pipeline, 3, seed=7, sample_size=40)
        b = train_shadow_ensemble(self.pool, self.pipeline, 3, seed=7, sample_size=40)
        for ma, mb in zip(a.models, b.models):
            np.testing.assert_array_equal(ma.weights, mb.weights)

    def test_query_shape(self):
        """Test queries give one column per shadow model."""
        ensemble = train_shadow_ensemble(self.pool, self.pipeline, 3, seed=1, sample_size=40,
                                         queries=self.pool.rows[:10])
        self.assertEqual(ensemble.per_point_cfds.shape, (10, 3))

    def test_oversized_sample(self):
        """Test samples larger than the pool raise DataError."""
        with self.assertRaises(DataError):
            train_shadow_ensemble(self.pool, self.pipeline, 2, seed=0, sample_size=500)

    def test_small_ensemble_tracks_large_reference(self):
        """Test a 10-model out-distribution mean stays near a 50-model reference."""
        data = preprocess(generate_synthetic(5, 340, 2))
        pool = data.subset(np.arange(300))
        queries = data.rows[300:]
        reference = train_shadow_ensemble(pool, self.pipeline, 50, seed=5, sample_size=100, queries=queries)
        small = train_shadow_ensemble(pool, self.pipeline, 10, seed=5, sample_size=100, queries=queries)
        np.testing.assert_array_equal(small.per_point_cfds, reference.per_point_cfds[:, :10])

        mu_ref, sigma_ref = out_distribution(reference.per_point_cfds, VarianceMode.GLOBAL)
        mu_small, _ = out_distribution(small.per_point_cfds, VarianceMode.GLOBAL)
        self.assertLess(abs(np.mean(mu_small) - np.mean(mu_ref)), sigma_ref[0])

    def test_shadow_dp_off(self):
        """Test shadow_dp=False trains plain shadow models."""
        private = AttackPipeline(TrainConfig(), PrivacyBudget(Mechanism.LR, 1.0), shadow_dp=False)
        self.assertFalse(private.for_shadows().budget.is_private)
        self.assertTrue(AttackPipeline(TrainConfig(), PrivacyBudget(Mechanism.LR, 1.0)).for_shadows().budget.is_private)


class TestAttackExperiment(unittest.TestCase):
    """Test the pooled attack experiment."""

    def setUp(self):
        """Set up test fixtures."""
        data = preprocess(generate_synthetic(20, 240, 3))
        self.owner_train = data.subset(np.arange(0, 80))
        self.owner_test = data.subset(np.arange(80, 160))
        self.adversary = data.subset(np.arange(160, 240))
        self.pipeline = AttackPipeline(TrainConfig(max_iters=300))

    def run_experiment(self, pipeline, **kwargs):
        return run_attack_experiment(self.owner_train, self.owner_test, self.adversary, pipeline,
                                     n_ensemble=4, n_shadow=3, seed=5, **kwargs)

    def test_balanced_pooled_scores(self):
        """Test every attack sees equal members and non-members."""
        result = self.run_experiment(self.pipeline)
        for kind in AttackKind:
            scores = result.scores[kind]
            self.assertEqual(scores.scores.size, 160)
            self.assertEqual(int(scores.is_member.sum()), 80)
        self.assertEqual(result.member_cfds.size, 80)
        self.assertIsNone(result.clamp_fraction)
        self.assertTrue(0.0 <= result.test_accuracy <= 1.0)

    def test_reproducible(self):
        """Test identical seeds reproduce every score."""
        a = self.run_experiment(self.pipeline)
        b = self.run_experiment(self.pipeline)
        for kind in AttackKind:
            np.testing.assert_array_equal(a.scores[kind].scores, b.scores[kind].scores)

    def test_laplace_recourse_reports_clamping(self):
        """Test LR runs report a clamp fraction."""
        pipeline = AttackPipeline(TrainConfig(max_iters=300), PrivacyBudget(Mechanism.LR, 0.5))
        result = self.run_experiment(pipeline, attacks=[AttackKind.CFD])
        self.assertIsNotNone(result.clamp_fraction)
        self.assertEqual(list(result.scores), [AttackKind.CFD])

    def test_insufficient_non_members(self):
        """Test too few owner_test rows raise DataError."""
        with self.assertRaises(DataError):
            run_attack_experiment(self.owner_train, self.owner_test.subset(np.arange(5)),
                                  self.adversary, self.pipeline, n_ensemble=4)


if __name__ == "__main__":
    unittest.main()
