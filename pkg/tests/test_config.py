import json
import os
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

from sing2ep_test_support import LOG_PREFIXES, PROJECT_ROOT, configure_for_tests

from globals import get_config
from matcore import Tolerances
from utils import Aborting, TOLERANCE_ENV_VAR, apply_env_overrides, deep_merge_config, load_config, log


def quiet_values(**overrides) -> dict:
    values = {"log_verbosity": "ERROR", "log_file_enabled": False}
    values.update({f"log_verbosity_{prefix}": "ERROR" for prefix in LOG_PREFIXES})
    values.update(overrides)
    return values


class ConfigTests(unittest.TestCase):
    def setUp(self):
        configure_for_tests()

    def test_example_config_names_every_tolerance(self):
        with (PROJECT_ROOT / "sing2ep_config.example.json").open("r", encoding="utf-8") as handle:
            example = json.load(handle)

        for name in Tolerances().to_dict():
            with self.subTest(tolerance=name):
                self.assertIn(name, example)
        for prefix in LOG_PREFIXES:
            self.assertIn(f"log_verbosity_{prefix}", example)

    def test_load_config_accepts_path_and_local_override(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            config_path = Path(tmp_dir) / "sing2ep_config.json"
            config_path.write_text(json.dumps(quiet_values(rank_tol=1e-9, default_seed=7)), encoding="utf-8")
            Path(f"{config_path}.local").write_text(json.dumps({"rank_tol": 1e-8}), encoding="utf-8")

            with patch.dict(os.environ):
                os.environ.pop(TOLERANCE_ENV_VAR, None)
                load_config(config_path)

        config = get_config()
        self.assertEqual(config["rank_tol"], 1e-8)
        self.assertEqual(config["default_seed"], 7)
        self.assertEqual(config["kernel_tol"], 1e-8)
        self.assertTrue(config["config_loaded"])
        self.assertEqual(Tolerances.from_config().rank_tol, 1e-8)

    def test_broken_user_config_aborts(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            config_path = Path(tmp_dir) / "sing2ep_config.json"
            config_path.write_text("{", encoding="utf-8")

            with self.assertRaises(Aborting):
                load_config(config_path)

    def test_deep_merge_keeps_sibling_keys(self):
        base = {"outer": {"kept": 1, "replaced": 2}, "flat": 3}

        deep_merge_config(base, {"outer": {"replaced": 5, "added": 6}, "flat": {"now": "nested"}})

        self.assertEqual(base, {"outer": {"kept": 1, "replaced": 5, "added": 6}, "flat": {"now": "nested"}})

    def test_environment_tolerance_overrides_rank_tol(self):
        apply_env_overrides({TOLERANCE_ENV_VAR: "1e-7"})

        self.assertEqual(get_config()["rank_tol"], 1e-7)
        self.assertEqual(Tolerances.from_config().rank_tol, 1e-7)
        self.assertEqual(Tolerances.from_config(rank_tol=1e-6).rank_tol, 1e-6)

    def test_environment_wins_over_config_files(self):
        with tempfile.TemporaryDirectory() as tmp_dir:
            config_path = Path(tmp_dir) / "sing2ep_config.json"
            config_path.write_text(json.dumps(quiet_values(rank_tol=1e-9)), encoding="utf-8")

            with patch.dict(os.environ, {TOLERANCE_ENV_VAR: "1e-7"}):
                load_config(config_path)

        self.assertEqual(get_config()["rank_tol"], 1e-7)

    def test_invalid_environment_tolerances_are_ignored(self):
        for raw in ("", "abc", "-1", "0", "nan", "inf"):
            with self.subTest(value=raw):
                apply_env_overrides({TOLERANCE_ENV_VAR: raw})
                self.assertEqual(get_config()["rank_tol"], 1e-10)

    def test_error_logs_abort(self):
        with self.assertRaises(Aborting):
            log("ERROR", "boom", prefix="UTILS")

    def test_messages_below_the_subject_level_are_dropped(self):
        log("DEBUG", "not shown [bracketed]", prefix="PENCIL")
        log("INFO", "not shown either", prefix="UNKNOWN")


if __name__ == "__main__":
    unittest.main()
