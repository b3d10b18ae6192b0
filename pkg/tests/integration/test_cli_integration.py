#!/usr/bin/env python3
"""
Integration tests for oneway CLI commands.

Runs every subcommand end-to-end through click's CliRunner.
"""

import json
import shutil
import tempfile
import unittest
from pathlib import Path
from unittest import mock

from click.testing import CliRunner

from oneway import __version__
from oneway.cli import EXIT_IMPOSSIBLE_BRANCH, EXIT_IO, EXIT_SCHEMA, EXIT_UNEXPECTED, cli
from oneway.harness import Harness
from oneway.report import ReportRow, read_csv_rows, read_json_rows

TELEPORT = {
    "steps": [{"qubit": 1, "plane": "equatorial", "angle": 0.0}],
    "outputs": [2],
    "byproduct_rules": {"2": {"x": [1], "z": []}},
}


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.test_dir = Path(tempfile.mkdtemp())
        self.runner = CliRunner()

    def tearDown(self):
        shutil.rmtree(self.test_dir, ignore_errors=True)

    def invoke(self, *args):
        return self.runner.invoke(cli, [str(arg) for arg in args])

    def report(self, *args):
        result = self.invoke(*args)
        self.assertEqual(result.exit_code, 0, f"Command failed: {result.output}")
        return json.loads(result.output)


class TestCLIBasics(CliTestCase):
    """Version and help output."""

    def test_version(self):
        result = self.invoke("--version")
        self.assertEqual(result.exit_code, 0)
        self.assertIn(f"oneway version {__version__}", result.output)

    def test_help_lists_commands(self):
        result = self.invoke("--help")
        self.assertEqual(result.exit_code, 0)
        for command in ("rotate", "cnot", "cphase", "fidelity", "enumerate", "ff-compare"):
            self.assertIn(command, result.output)


class TestCLIProtocols(CliTestCase):
    """Integration tests for the single-protocol commands."""

    def test_rotate(self):
        document = self.report("rotate", "--alpha", "pi/4", "--beta", "pi/2")
        self.assertEqual(document["meta"]["command"], "rotation")
        self.assertEqual(len(document["rows"]), 8)
        for row in document["rows"]:
            self.assertAlmostEqual(row["fidelity"], 1.0, places=10)

    def test_rotate_ff_off(self):
        document = self.report("rotate", "--alpha", "0", "--beta", "0", "--ff", "off")
        fidelities = [row["fidelity"] for row in document["rows"]]
        self.assertLess(min(fidelities), 1e-10)

    def test_rotate_ordering_c_rejected(self):
        result = self.invoke("rotate", "--ordering", "c")
        self.assertEqual(result.exit_code, EXIT_SCHEMA)
        self.assertIn("rotation must be a or b", result.output)

    def test_cnot(self):
        document = self.report("cnot", "--alpha", "pi/2", "--oracle", "id")
        joint = [row for row in document["rows"] if row["readout"] == "joint"]
        self.assertEqual(len(joint), 4)
        for row in joint:
            self.assertLess(row["purity"], 0.999)

    def test_cphase(self):
        document = self.report("cphase", "--alpha", "pi/3", "--beta", "-pi/5")
        self.assertEqual(len(document["rows"]), 12)

    def test_fidelity(self):
        document = self.report("fidelity", "--noise-p", "0.872")
        (row,) = document["rows"]
        self.assertAlmostEqual(row["fidelity"], 0.880, places=10)
        self.assertAlmostEqual(row["stabilizer_fidelity"], 0.880, places=10)

    def test_depolarizing_flag(self):
        document = self.report("fidelity", "--depol", "0.1,0,0,0")
        (row,) = document["rows"]
        self.assertEqual(row["depolarizing"], "0.1,0.0,0.0,0.0")
        self.assertLess(row["fidelity"], 1.0)

    def test_sample_mode_is_reproducible(self):
        args = ("rotate", "--alpha", "0.3", "--mode", "sample", "--shots", "500", "--seed", "5")
        first = self.report(*args)
        second = self.report(*args)
        self.assertEqual(first, second)
        self.assertEqual(sum(row["count"] for row in first["rows"]), 500)

    def test_run_uses_config_protocol(self):
        config_path = self.test_dir / "run.yaml"
        config_path.write_text("protocol: cphase\nalpha: pi/4\nbeta: pi/8\n")
        document = self.report("run", "--config", config_path)
        self.assertEqual(document["meta"]["command"], "cphase")

    def test_flag_overrides_config(self):
        config_path = self.test_dir / "run.yaml"
        config_path.write_text("alpha: pi\nseed: 3\n")
        document = self.report("rotate", "--config", config_path, "--seed", "11")
        self.assertEqual(document["meta"]["seed"], 11)
        self.assertAlmostEqual(document["meta"]["config"]["alpha"], 3.141592653589793)


class TestCLIEnumerate(CliTestCase):
    """Integration tests for the 'enumerate' command."""

    def write(self, name, data):
        path = self.test_dir / name
        path.write_text(json.dumps(data))
        return path

    def test_enumerate_teleport(self):
        pattern = self.write("pattern.json", TELEPORT)
        graph = self.write("graph.json", {"n": 2, "edges": [[1, 2]]})
        document = self.report("enumerate", "--pattern-file", pattern, "--state", graph)
        self.assertEqual([row["outcomes"] for row in document["rows"]], ["s1=0", "s1=1"])

    def test_impossible_forced_branch(self):
        pattern = self.write("pattern.json", TELEPORT)
        graph = self.write("graph.json", {"n": 2, "edges": []})
        result = self.invoke(
            "enumerate", "--pattern-file", pattern, "--state", graph,
            "--mode", "force", "--force-bits", "1",
        )
        self.assertEqual(result.exit_code, EXIT_IMPOSSIBLE_BRANCH)
        self.assertIn("Impossible branch", result.output)

    def test_invalid_pattern(self):
        pattern = self.write("pattern.json", {"steps": [{"qubit": 1}], "outputs": []})
        result = self.invoke("enumerate", "--pattern-file", pattern)
        self.assertEqual(result.exit_code, EXIT_SCHEMA)

    def test_missing_pattern_file(self):
        result = self.invoke("enumerate", "--pattern-file", self.test_dir / "missing.json")
        self.assertEqual(result.exit_code, EXIT_IO)


class TestCLIPresets(CliTestCase):
    """Integration tests for the preset sweeps."""

    def test_rotation_table(self):
        document = self.report("rotation-table")
        self.assertEqual(len(document["rows"]), 16)

    def test_cnot_table(self):
        """Test that the C-NOT table has one row per branch and control readout."""
        document = self.report("cnot-table")
        self.assertEqual(len(document["rows"]), 24)

    def test_preset_aliases(self):
        """Test that table1, table2 and fig3 run the same presets."""
        pairs = [
            (("table1",), ("rotation-table",)),
            (("table2",), ("cnot-table",)),
            (
                ("fig3", "--alpha", "pi/4", "--beta", "pi/2"),
                ("ff-compare", "--alpha", "pi/4", "--beta", "pi/2"),
            ),
        ]
        for alias, preset in pairs:
            self.assertEqual(self.report(*alias)["rows"], self.report(*preset)["rows"])

    def test_cphase_avg(self):
        document = self.report("cphase-avg", "--grid", "2")
        self.assertEqual(len(document["rows"]), 10)

    def test_ff_compare(self):
        document = self.report("ff-compare", "--alpha", "pi/4", "--beta", "pi/2")
        self.assertEqual(document["rows"][-1]["readout"], "average")

    def test_ff_compare_needs_angles(self):
        result = self.invoke("ff-compare", "--alpha", "pi/4")
        self.assertNotEqual(result.exit_code, 0)
        self.assertIn("ff-compare needs --alpha and --beta", result.output)


class TestCLIOutput(CliTestCase):
    """Report files, formats and exit codes."""

    def test_out_files_are_byte_identical(self):
        first = self.test_dir / "first.csv"
        second = self.test_dir / "second.csv"
        for path in (first, second):
            result = self.invoke(
                "rotate", "--alpha", "pi/4", "--beta", "pi/2",
                "--format", "csv", "--out", path,
            )
            self.assertEqual(result.exit_code, 0, result.output)
            self.assertIn("Wrote 8 rows", result.output)
        self.assertEqual(first.read_bytes(), second.read_bytes())

    def test_csv_and_json_agree(self):
        csv_path = self.test_dir / "report.csv"
        json_path = self.test_dir / "report.json"
        base = ("cnot", "--alpha", "pi/4", "--oracle", "h")
        self.assertEqual(self.invoke(*base, "--format", "csv", "--out", csv_path).exit_code, 0)
        self.assertEqual(self.invoke(*base, "--format", "json", "--out", json_path).exit_code, 0)
        self.assertEqual(
            read_csv_rows(csv_path.read_text()), read_json_rows(json_path.read_text())
        )

    def test_unwritable_output(self):
        blocker = self.test_dir / "file"
        blocker.write_text("x")
        result = self.invoke("rotate", "--out", blocker / "report.json")
        self.assertEqual(result.exit_code, EXIT_IO)
        self.assertIn("I/O error", result.output)

    def test_out_of_range_result_is_not_io(self):
        """Test that an impossible fidelity exits 1 rather than as an I/O error."""

        def overshoot(harness):
            return [ReportRow(protocol="fidelity", fidelity=1.5)]

        with mock.patch.object(Harness, "fidelity_rows", overshoot):
            result = self.invoke("fidelity")
        self.assertEqual(result.exit_code, EXIT_UNEXPECTED)
        self.assertIn("Invalid result", result.output)
        self.assertIn("column: fidelity", result.output)

    def test_json_log_format(self):
        path = self.test_dir / "report.json"
        result = self.invoke("--log-format", "json", "rotate", "--out", path)
        self.assertEqual(result.exit_code, 0, result.output)
        self.assertIn('"level": "INFO"', result.output)

    def test_bad_angle(self):
        result = self.invoke("rotate", "--alpha", "quarter")
        self.assertEqual(result.exit_code, EXIT_SCHEMA)
        self.assertIn("alpha", result.output)

    def test_missing_config_file(self):
        result = self.invoke("rotate", "--config", self.test_dir / "missing.yaml")
        self.assertEqual(result.exit_code, EXIT_SCHEMA)
        self.assertIn("not found", result.output)


if __name__ == "__main__":
    unittest.main()
