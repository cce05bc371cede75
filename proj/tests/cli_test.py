"""Runs the wasmleak binary end to end and checks outputs and exit codes.

Usage: cli_test.py /path/to/wasmleak
"""

import pathlib
import subprocess
import sys
import tempfile
import unittest

BINARY = None


def run(*args, cwd):
    return subprocess.run([BINARY, *args], cwd=cwd, capture_output=True, text=True)


def report_value(text, key):
    for line in text.splitlines():
        if line.startswith(key + " = "):
            return line.split(" = ", 1)[1]
    raise KeyError(key)


class CliTest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = pathlib.Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def ok(self, *args):
        r = run(*args, cwd=self.dir)
        self.assertEqual(r.returncode, 0, r.stderr)
        return r

    def test_file_chain_matches_end2end(self):
        common = ["--set", "run.victim_steps=20000"]
        self.ok(*common, "--out", "p", "synth", "--markers")
        self.ok(*common, "--out", "v", "synth")
        self.ok(*common, "--out", "db", "profile", "--trace", "p/trace.csv",
                "--truth", "p/truth.csv")
        self.ok(*common, "--out", "a", "attack", "--trace", "v/trace.csv",
                "--db", "db/db.jsonl")
        chained = self.ok(*common, "--out", "e", "eval", "--predictions",
                          "a/predictions.csv", "--truth", "v/truth.csv").stdout
        whole = self.ok(*common, "--out", "w", "end2end").stdout
        for key in ("regions", "errors", "misses", "insertions", "recall"):
            self.assertEqual(report_value(chained, key), report_value(whole, key))
        self.assertEqual((self.dir / "v/trace.csv").read_bytes(),
                         (self.dir / "w/trace.csv").read_bytes())
        self.assertEqual((self.dir / "db/db.jsonl").read_bytes(),
                         (self.dir / "w/db.jsonl").read_bytes())

    def test_every_subcommand_replays_from_its_config(self):
        common = ["--seed", "2", "--set", "run.victim_steps=5000",
                  "--set", "match.channels=all,-latency"]
        self.ok(*common, "--out", "p", "synth", "--markers")
        self.ok(*common, "--out", "v", "synth")
        steps = {
            "db": ["profile", "--trace", "p/trace.csv", "--truth", "p/truth.csv"],
            "pp": ["preprocess", "--trace", "v/trace.csv"],
            "a": ["attack", "--trace", "v/trace.csv", "--db", "db/db.jsonl"],
            "e": ["eval", "--predictions", "a/predictions.csv", "--truth",
                  "v/truth.csv"],
            "ab": ["ablate", "--trace", "v/trace.csv", "--truth", "v/truth.csv",
                   "--db", "db/db.jsonl"],
        }
        for out, args in steps.items():
            self.ok(*common, "--out", out, *args)
        for out, args in steps.items():
            self.ok("--config", out + "/config.txt", "--out", out + "_again", *args)
            for f in (self.dir / out).iterdir():
                again = self.dir / (out + "_again") / f.name
                self.assertEqual(f.read_bytes(), again.read_bytes(), f)
        self.assertIn("channels=pf_count,mode,class",
                      (self.dir / "a/predictions.csv").read_text())

    def test_ablate_rejects_empty_subset(self):
        self.ok("--set", "run.victim_steps=3000", "--out", "w", "end2end")
        r = run("--out", "ab", "ablate", "--trace", "w/trace.csv", "--truth",
                "w/truth.csv", "--db", "w/db.jsonl", "--subsets", "all;-latency",
                cwd=self.dir)
        self.assertEqual(r.returncode, 4)

    def test_eval_counts(self):
        out = self.ok("eval", "--counts", "213900,44032,2870,1").stdout
        self.assertEqual(report_value(out, "recall_percent"), "78.072")

    def test_ablate_warns_on_duplicate_subsets(self):
        self.ok("--set", "run.victim_steps=5000", "--out", "w", "end2end")
        r = self.ok("--out", "ab", "ablate", "--trace", "w/trace.csv", "--truth",
                    "w/truth.csv", "--db", "w/db.jsonl", "--subsets",
                    "all;all,-latency;mode,class,latency,pf_count")
        self.assertIn("duplicate channel subset", r.stderr)
        rows = (self.dir / "ab/ablation.csv").read_text().splitlines()
        self.assertEqual(len([x for x in rows if not x.startswith("#")]), 3)

    def test_config_file(self):
        (self.dir / "run.conf").write_text(
            "# small run\nrun.victim = primes\nrun.victim_steps = 3000\n")
        self.ok("--config", "run.conf", "--out", "w", "end2end")
        self.assertIn("run.victim = primes",
                      (self.dir / "w/config.txt").read_text())

    def test_exit_codes(self):
        self.assertEqual(run("--bogus", "end2end", cwd=self.dir).returncode, 2)
        self.assertEqual(run(cwd=self.dir).returncode, 2)
        self.assertEqual(run("--set", "noise.colour=3", "end2end",
                             cwd=self.dir).returncode, 2)
        self.assertEqual(run("--set", "noise.ctx_switch_rate=2", "end2end",
                             cwd=self.dir).returncode, 2)
        self.assertEqual(run("attack", "--trace", "missing.csv", "--db", "x",
                             cwd=self.dir).returncode, 2)
        (self.dir / "bad.csv").write_text("address,mode,pf_count,latency\n0x1,Q,1,1\n")
        (self.dir / "db.jsonl").write_text("{}\n")
        self.assertEqual(run("preprocess", "--trace", "bad.csv",
                             cwd=self.dir).returncode, 3)
        self.assertEqual(run("eval", "--counts", "3,2,1,1",
                             cwd=self.dir).returncode, 4)

    def test_layout_seed_mismatch_needs_force(self):
        self.ok("--set", "run.victim_steps=5000", "--out", "a", "end2end")
        self.ok("--seed", "4", "--set", "run.victim_steps=5000", "--out", "b",
                "synth")
        args = ["--out", "e", "eval", "--predictions", "a/predictions.csv",
                "--truth", "b/truth.csv"]
        self.assertEqual(run(*args, cwd=self.dir).returncode, 4)
        self.ok(*args, "--force")


if __name__ == "__main__":
    BINARY = str(pathlib.Path(sys.argv.pop(1)).resolve())
    unittest.main()
