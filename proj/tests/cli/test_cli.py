#!/usr/bin/env python3
"""End-to-end checks of the cdcv binary: exit codes, outputs, schemas, replay."""
import json
import os
import shutil
import subprocess
import sys
import tempfile
import unittest
from pathlib import Path

import jsonschema

CDCV = os.path.abspath(sys.argv.pop(1))
ROOT = Path(sys.argv.pop(1)).resolve()
CORPUS = ROOT / "corpus"
SCHEMAS = {p.name[: -len(".schema.json")]: json.loads(p.read_text()) for p in (ROOT / "schemas").glob("*.schema.json")}

# output file name -> schema
OUTPUT_SCHEMA = {
    "findings.json": "findings",
    "pairs.json": "pairs",
    "syncs.json": "syncs",
    "verdicts.json": "verdicts",
    "coverage.json": "coverage",
    "coverage_report.json": "coverage_report",
    "explore.json": "explore",
    "manifest.json": "manifest",
    "corpus.json": "corpus",
}


def design(case):
    d = CORPUS / case
    return [str(d / "rtl.v"), "-c", str(d / "constraints.cdc")]


class Cli(unittest.TestCase):
    def setUp(self):
        self.tmp = Path(tempfile.mkdtemp(prefix="cdcv_cli_"))
        self.env = {k: v for k, v in os.environ.items() if k != "CDCV_OPTIONS"}

    def tearDown(self):
        shutil.rmtree(self.tmp)

    def run_cdcv(self, *args, env=None):
        return subprocess.run([CDCV, *args], cwd=self.tmp, env=env or self.env, capture_output=True, text=True)

    def validate_tree(self, out):
        seen = 0
        for p in Path(self.tmp / out).rglob("*.json"):
            name = "trace" if p.parent.name == "traces" else OUTPUT_SCHEMA.get(p.name)
            self.assertIsNotNone(name, p)
            jsonschema.validate(json.loads(p.read_text()), SCHEMAS[name])
            seen += 1
        self.assertGreater(seen, 0)

    def test_analyze_exit_codes(self):
        r = self.run_cdcv("analyze", *design("missing_sync"), "--strict", "-o", "bug")
        self.assertEqual(r.returncode, 2, r.stderr)
        rules = [f["rule"] for f in json.loads((self.tmp / "bug/findings.json").read_text())]
        self.assertEqual(rules, ["MISSING_SYNC"])
        self.validate_tree("bug")
        # Findings without --strict are reported but do not fail the run.
        self.assertEqual(self.run_cdcv("analyze", *design("missing_sync"), "-o", "lax").returncode, 0)
        self.assertEqual(self.run_cdcv("analyze", *design("missing_sync_clean"), "--strict", "-o", "ok").returncode, 0)

    def test_analyze_bad_syntax(self):
        (self.tmp / "bad.v").write_text("module top(input a\n")
        r = self.run_cdcv("analyze", "bad.v", "-c", str(CORPUS / "missing_sync/constraints.cdc"))
        self.assertEqual(r.returncode, 1)
        self.assertIn("bad.v:2:1", r.stderr)
        self.assertEqual(self.run_cdcv("analyze", "missing.v", "-c", "nope.cdc").returncode, 1)
        self.assertEqual(self.run_cdcv("frobnicate").returncode, 1)

    def test_options_env_supplies_defaults(self):
        (self.tmp / "defaults.cdc").write_text("option severity.MISSING_SYNC Warning\n")
        env = dict(self.env, CDCV_OPTIONS=str(self.tmp / "defaults.cdc"))
        r = self.run_cdcv("analyze", *design("missing_sync"), "--strict", "-o", "env", env=env)
        self.assertEqual(r.returncode, 0, r.stdout + r.stderr)
        m = json.loads((self.tmp / "env/manifest.json").read_text())
        self.assertEqual(m["options_file"], str(self.tmp / "defaults.cdc"))

    def test_simulate_latency(self):
        stim = str(CORPUS / "msi_latency/stimulus.stim")
        args = ["simulate", *design("msi_latency"), "-s", stim, "--check", "latency:a_q->s1:2:2"]
        r = self.run_cdcv(*args, "--seeds", "1..20", "-o", "msi", "--vcd")
        self.assertEqual(r.returncode, 3, r.stderr)
        self.assertEqual(json.loads((self.tmp / "msi/verdicts.json").read_text())["failing"], ["latency:a_q->s1:2:2"])
        self.validate_tree("msi")
        self.assertEqual(len(list((self.tmp / "msi/vcd").glob("*.vcd"))), 20)

        r = self.run_cdcv(*args, "--no-msi", "-o", "off")
        self.assertEqual(r.returncode, 0, r.stdout)
        cov = json.loads((self.tmp / "off/coverage.json").read_text())
        self.assertTrue(all(sum(b.values()) == 0 for p in cov["pairs"].values() for b in p["bits"]))

        # Same seeds, same bytes.
        self.run_cdcv(*args, "--seeds", "1..20", "-o", "msi2", "--vcd")
        for p in (self.tmp / "msi").rglob("*"):
            if p.is_file() and p.name != "manifest.json":
                self.assertEqual(p.read_bytes(), (self.tmp / "msi2" / p.relative_to(self.tmp / "msi")).read_bytes(), p)

    def test_explore(self):
        stim = str(CORPUS / "msi_latency/stimulus.stim")
        r = self.run_cdcv("explore", *design("msi_latency"), "-s", stim, "--check", "latency:a_q->s1:2:2", "-o", "cex")
        self.assertEqual(r.returncode, 3, r.stderr)
        ex = json.loads((self.tmp / "cex/explore.json").read_text())
        cex = ex["verdicts"]["latency:a_q->s1:2:2"]["counterexample"]
        self.assertEqual([e["kind"] for e in cex["msi"]], ["Setup"])
        self.assertTrue((self.tmp / "cex" / cex["vcd"]).read_text().startswith("$version"))
        self.validate_tree("cex")

        r = self.run_cdcv("explore", *design("msi_latency_clean"), "-s", str(CORPUS / "msi_latency_clean/stimulus.stim"),
                          "--check", "latency:a_q->s1:2:3", "-o", "proof")
        self.assertEqual(r.returncode, 0, r.stdout + r.stderr)

        r = self.run_cdcv("explore", *design("gray_counter"), "-s", str(CORPUS / "gray_counter/stimulus.stim"))
        self.assertEqual(r.returncode, 4)
        self.assertIn("DecisionBudgetExceeded", r.stderr)

    def test_generate_is_deterministic(self):
        for out in ("g1", "g2"):
            self.assertEqual(self.run_cdcv("generate", *design("async_fifo"), "-o", out).returncode, 0)
        a = sorted(p.relative_to(self.tmp / "g1") for p in (self.tmp / "g1").rglob("*") if p.is_file())
        b = sorted(p.relative_to(self.tmp / "g2") for p in (self.tmp / "g2").rglob("*") if p.is_file())
        self.assertEqual(a, b)
        self.assertIn(Path("gen/bind_all.sv"), a)
        for rel in a:
            if rel.name != "manifest.json":
                self.assertEqual((self.tmp / "g1" / rel).read_bytes(), (self.tmp / "g2" / rel).read_bytes())

    def test_merge_and_report(self):
        stim = str(CORPUS / "toggle_coverage/stimulus.stim")
        for seeds in ("1..5", "6..10"):
            r = self.run_cdcv("simulate", *design("toggle_coverage"), "-s", stim, "--seeds", seeds, "-o", "s" + seeds)
            self.assertEqual(r.returncode, 0, r.stdout)
        r = self.run_cdcv("merge-coverage", "s1..5/coverage.json", "s6..10/coverage.json", "-o", "merged")
        self.assertEqual(r.returncode, 0, r.stderr)
        load = lambda p: json.loads((self.tmp / p).read_text())
        m, a, b = load("merged/coverage.json"), load("s1..5/coverage.json"), load("s6..10/coverage.json")
        self.assertEqual(m["seeds"], list(range(1, 11)))
        for pid, meta in m["pairs"].items():
            for i, bins in enumerate(meta["bits"]):
                for k, v in bins.items():
                    self.assertEqual(v, a["pairs"][pid]["bits"][i][k] + b["pairs"][pid]["bits"][i][k])

        r = self.run_cdcv("report", *design("toggle_coverage"), "--coverage", "merged/coverage.json", "-o", "rep")
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertEqual(load("rep/coverage_report.json")["bins_hit"], 4)
        self.validate_tree("rep")
        self.validate_tree("merged")

        other = self.run_cdcv("simulate", *design("msi_latency"), "-s", str(CORPUS / "msi_latency/stimulus.stim"), "-o", "o")
        self.assertEqual(other.returncode, 0)
        self.assertEqual(self.run_cdcv("merge-coverage", "merged/coverage.json", "o/coverage.json", "-o", "x").returncode, 5)
        r = self.run_cdcv("report", *design("gray_counter"), "--coverage", "merged/coverage.json", "-o", "x")
        self.assertEqual(r.returncode, 5)

    def test_corpus(self):
        r = self.run_cdcv("corpus", "--root", str(CORPUS), "--filter", "missing_sync", "-o", "c")
        self.assertEqual(r.returncode, 0, r.stdout)
        self.validate_tree("c")
        broken = self.tmp / "broken"
        shutil.copytree(CORPUS / "missing_sync", broken / "missing_sync")
        (broken / "missing_sync/labels.json").write_text('{"kind": "bug"}')
        r = self.run_cdcv("corpus", "--root", str(broken), "--filter", "missing", "-o", "b")
        self.assertEqual(r.returncode, 3)
        self.assertIn("MissingLabel", r.stdout)

    def test_replay(self):
        shutil.copytree(CORPUS / "msi_latency", self.tmp / "case")
        args = ["simulate", "case/rtl.v", "-c", "case/constraints.cdc", "-s", "case/stimulus.stim", "--seeds", "1..4",
                "-o", "run"]
        self.assertEqual(self.run_cdcv(*args).returncode, 0)
        r = self.run_cdcv("replay", "run/manifest.json")
        self.assertEqual(r.returncode, 0, r.stderr)
        self.assertIn("reproduced", r.stdout)
        # An edited design no longer matches the recorded fingerprint.
        rtl = self.tmp / "case/rtl.v"
        rtl.write_text(rtl.read_text().replace("s2 <= s1;", "s2 <= s1;\n    s3 <= s2;").replace("reg s1, s2;", "reg s1, s2, s3;"))
        r = self.run_cdcv("replay", "run/manifest.json")
        self.assertEqual(r.returncode, 5, r.stdout + r.stderr)

    def test_corpus_labels_match_schema(self):
        for labels in CORPUS.glob("*/labels.json"):
            jsonschema.validate(json.loads(labels.read_text()), SCHEMAS["labels"])


if __name__ == "__main__":
    unittest.main(verbosity=2)
