"""
Test suite for experiment configuration.
"""

import unittest
import tempfile
import os
import sys
import shutil

# Add the parent directory to the path so we can import privrecourse
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from privrecourse import ConfigError, ExperimentConfig, Mechanism, load_config
from privrecourse.attacks import AttackKind
from privrecourse.config import parse_config, parse_epsilons


class TestParseConfig(unittest.TestCase):
    """Test the key = value format."""

    def test_defaults(self):
        """Test an empty file gives the default config."""
        config = parse_config("")
        self.assertEqual(config, ExperimentConfig())
        self.assertEqual(config.n_shadow, 5)
        self.assertEqual(config.n_ensemble, 20)
        self.assertEqual(config.attack_kinds(), tuple(AttackKind))

    def test_values_and_comments(self):
        """Test typed values, comments and comma lists."""
        config = parse_config(
            "# experiment\n"
            "mechanism = lr   # Laplace Recourse\n"
            "epsilon = 0.5\n"
            "attacks = cfd, lrt_local\n"
            "shadow_dp = false\n"
            "step_size =\n"
            "seed = 12\n"
        )
        self.assertEqual(config.budget().mechanism, Mechanism.LR)
        self.assertEqual(config.epsilon, 0.5)
        self.assertEqual(config.attacks, ("cfd", "lrt_local"))
        self.assertFalse(config.shadow_dp)
        self.assertIsNone(config.step_size)
        self.assertEqual(config.seed, 12)

    def test_unknown_key(self):
        """Test unknown keys are rejected."""
        with self.assertRaises(ConfigError):
            parse_config("n_shadows = 5\n")

    def test_bad_values(self):
        """Test malformed values and lines are rejected."""
        for text in ("n_shadow = five\n", "shadow_dp = maybe\n", "just some words\n", "seed = 1\nseed = 2\n"):
            with self.assertRaises(ConfigError):
                parse_config(text)

    def test_epsilon_iff_private(self):
        """Test epsilon must be present exactly when the mechanism is private."""
        with self.assertRaises(ConfigError):
            parse_config("mechanism = lr\n")
        with self.assertRaises(ConfigError):
            parse_config("mechanism = dpm\nepsilon = 0\n")
        with self.assertRaises(ConfigError):
            parse_config("epsilon = 1.0\n")

    def test_counts_positive(self):
        """Test zero counts and unknown enums are rejected."""
        for text in ("n_shadow = 0\n", "n_ensemble = 0\n", "attacks = cfd, lira\n", "lrt_tail = middle\n",
                     "dataset = parquet\n", "dataset = csv\n", "n_owner = 30\n"):
            with self.assertRaises(ConfigError):
                parse_config(text)


class TestConfigFiles(unittest.TestCase):
    """Test loading from disk."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        """Clean up after tests."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def test_relative_paths(self):
        """Test relative paths resolve against the config's directory."""
        path = os.path.join(self.temp_dir, "exp.cfg")
        with open(path, "w", encoding="utf-8") as f:
            f.write("output_dir = out\nmodel_cache = cache/models.lz4\n")
        config = load_config(path)
        self.assertEqual(config.output_dir, os.path.join(self.temp_dir, "out"))
        self.assertEqual(config.model_cache, os.path.join(self.temp_dir, "cache", "models.lz4"))

    def test_missing_file(self):
        """Test a missing config file raises ConfigError."""
        with self.assertRaises(ConfigError):
            load_config(os.path.join(self.temp_dir, "missing.cfg"))


class TestVariants(unittest.TestCase):
    """Test derived configs."""

    def test_with_epsilon(self):
        """Test a baseline template becomes LR, a DPM template stays DPM."""
        self.assertEqual(ExperimentConfig().with_epsilon(2.0).mechanism, "lr")
        dpm = ExperimentConfig(mechanism="dpm", epsilon=1.0)
        self.assertEqual(dpm.with_epsilon(5.0).mechanism, "dpm")
        self.assertEqual(dpm.as_baseline().epsilon, None)

    def test_to_dict(self):
        """Test the echo lists every key."""
        payload = ExperimentConfig().to_dict()
        self.assertEqual(payload["attacks"], ["cfd", "lrt_global", "lrt_local"])
        self.assertIn("model_cache", payload)

    def test_parse_epsilons(self):
        """Test epsilon lists."""
        self.assertEqual(parse_epsilons("0.5, 1.0"), (0.5, 1.0))
        with self.assertRaises(ConfigError):
            parse_epsilons("")
        with self.assertRaises(ConfigError):
            parse_epsilons("1,-2")
        with self.assertRaises(ConfigError):
            parse_epsilons("1,x")


if __name__ == "__main__":
    unittest.main()
