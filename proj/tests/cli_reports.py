#!/usr/bin/env python3
"""End-to-end checks of the igk CLI: exit codes, report schema, determinism."""
import csv
import hashlib
import json
import shutil
import subprocess
import sys
from pathlib import Path

import jsonschema

IGK, SOURCE, WORK = sys.argv[1], Path(sys.argv[2]), Path(sys.argv[3])
SCHEMA = json.loads((SOURCE / "docs" / "report_schema.json").read_text())
MINI = SOURCE / "fixtures" / "mini"
COUNTER = SOURCE / "fixtures" / "counterexample"

failures = []


def check(ok, what):
    print(("PASS " if ok else "FAIL ") + what)
    if not ok:
        failures.append(what)


def run(*args):
    return subprocess.run([IGK, *map(str, args)], capture_output=True, text=True)


def report(path):
    data = json.loads(Path(path).read_text())
    jsonschema.validate(data, SCHEMA)
    return data


def payload(data):
    return json.dumps({k: v for k, v in data.items() if k != "timings"}, sort_keys=True)


def tree_digest(directory):
    h = hashlib.sha256()
    for f in sorted(Path(directory).iterdir()):
        h.update(f.name.encode())
        h.update(f.read_bytes())
    return h.hexdigest()


shutil.rmtree(WORK, ignore_errors=True)
WORK.mkdir(parents=True)
before = tree_digest(MINI)

# kernel
r = run("kernel", "--dataset", MINI, "--kernel", "wloa", "--iterations", 3, "--normalize", "--out", WORK / "k")
check(r.returncode == 0, "kernel exits 0")
k = report(WORK / "k" / "kernel_report.json")
check(len(k["results"]["gram"]) == 3, "kernel writes one entry per iteration")
for h in (1, 2, 3):
    rows = list(csv.reader((WORK / "k" / f"gram_h{h}.csv").open()))
    check(rows[0] == ["graph"] + [str(i) for i in range(10)], f"gram_h{h}.csv header lists graph ids")
    diag = [float(rows[i + 1][i + 1]) for i in range(10)]
    check(all(d == 1.0 for d in diag), f"gram_h{h}.csv has a unit diagonal")
    values = [float(v) for row in rows[1:] for v in row[1:]]
    check(all(float(repr(v)) == v for v in values) and all(f"{v:.17g}" == s for v, s in
          zip(values, [s for row in rows[1:] for s in row[1:]])), f"gram_h{h}.csv uses %.17g")
run("kernel", "--dataset", MINI, "--kernel", "wloa", "--iterations", 3, "--normalize", "--out", WORK / "k2")
check(payload(k) == payload(report(WORK / "k2" / "kernel_report.json")), "kernel report is deterministic")
check(all((WORK / "k" / f).read_bytes() == (WORK / "k2" / f).read_bytes() for f in
          ("gram_h1.csv", "gram_h2.csv", "gram_h3.csv")), "Gram CSVs are byte-identical across runs")

r = run("kernel", "--dataset", COUNTER, "--kernel", "wl-subtree", "--iterations", 2, "--normalize", "--out", WORK / "c")
g1 = float(list(csv.reader((WORK / "c" / "gram_h1.csv").open()))[1][2])
g2 = float(list(csv.reader((WORK / "c" / "gram_h2.csv").open()))[1][2])
check(abs(g1 - 0.0400) <= 5e-4 and abs(g2 - 0.0404) <= 5e-4, f"counterexample Gram entries {g1:.4f} {g2:.4f}")
check(run("kernel", "--dataset", MINI, "--iterations", 0).returncode == 2, "--iterations 0 exits 2")
check(run("kernel", "--dataset", MINI, "--kernel", "rbf").returncode == 2, "unknown kernel exits 2")
bad = WORK / "bad"
bad.mkdir()
(bad / "bad_A.txt").write_text("1, 2\n2, 1\n")
(bad / "bad_graph_indicator.txt").write_text("1\n")
(bad / "bad_graph_labels.txt").write_text("1\n")
check(run("kernel", "--dataset", bad, "--out", WORK / "b").returncode == 3, "out-of-range edge exits 3")

# analyze
for prop in ("monotonic", "order", "wloa-bound", "margin"):
    r = run("analyze", "--dataset", MINI, "--kernel", "wloa", "--iterations", 4, "--property", prop,
            "--out", WORK / f"a_{prop}.json")
    check(r.returncode == 0, f"wloa {prop} on mini exits 0")
    report(WORK / f"a_{prop}.json")
r = run("analyze", "--dataset", COUNTER, "--kernel", "wl-subtree", "--iterations", 2, "--property", "monotonic",
        "--out", WORK / "a_ce.json")
ce = report(WORK / "a_ce.json")
check(r.returncode == 1 and ce["results"]["report"]["violation_count"] == 1,
      "wl-subtree monotonic on counterexample exits 1 with one violation")
check(run("analyze", "--dataset", MINI, "--kernel", "wl-subtree", "--property", "wloa-bound").returncode == 2,
      "wloa-bound on wl-subtree exits 2")
single = WORK / "single"
check(run("generate", "--family", "cycle", "--sizes", "4,5,6", "--out", single).returncode == 0, "generate exits 0")
check(run("analyze", "--dataset", single, "--property", "margin").returncode == 2, "margin on one class exits 2")

# train
cvp = WORK / "cvp"
run("generate", "--family", "cycles-vs-paths", "--count", 60, "--out", cvp)
common = ["train", "--dataset", cvp, "--epochs", 20, "--seed", 3]
r1 = run(*common, "--consistency", "all", "--lambda", 1, "--checkpoint", WORK / "w.bin", "--out", WORK / "t1.json")
r2 = run(*common, "--consistency", "all", "--lambda", 1, "--out", WORK / "t2.json")
check(r1.returncode == 0 and r2.returncode == 0, "train exits 0")
t1, t2 = report(WORK / "t1.json"), report(WORK / "t2.json")
check(payload(t1) == payload(t2), "train report is deterministic")
check((WORK / "w.bin").read_bytes()[:4] == b"IGKW", "checkpoint starts with the IGKW magic")
run(*common, "--consistency", "off", "--out", WORK / "off.json")
run(*common, "--consistency", "all", "--lambda", 0, "--out", WORK / "zero.json")
off, zero = report(WORK / "off.json")["results"], report(WORK / "zero.json")["results"]
check([e["origin_loss"] for e in off["epochs"]] == [e["origin_loss"] for e in zero["epochs"]]
      and off["test_accuracy"] == zero["test_accuracy"], "--consistency off matches --lambda 0")
check(run(*common, "--lambda", -1).returncode == 2, "negative lambda exits 2")
check(run(*common, "--split", "8:1").returncode == 2, "malformed split exits 2")
cfg = WORK / "cfg.json"
cfg.write_text(json.dumps({"epochs": 2, "lambda": 0.5, "consistency": "all", "hidden": 8}))
r = run("--config", cfg, "train", "--dataset", cvp, "--hidden", 4, "--out", WORK / "cfg_out.json")
c = report(WORK / "cfg_out.json")["config"]
check(r.returncode == 0 and c["epochs"] == 2 and c["lambda"] == 0.5 and c["hidden"] == 4,
      "config file supplies defaults and flags override it")
r = run("train", "--dataset", cvp, "--epochs", 5, "--consistency", "all", "--lambda", 1, "--paired", "0,1",
        "--out", WORK / "paired.json")
check(r.returncode == 0 and len(report(WORK / "paired.json")["results"]["paired"]) == 2, "paired runs report")

# verify
r = run("verify", "--check", "all", "--out", WORK / "v.json")
check(r.returncode == 0 and "PASS" in r.stdout and report(WORK / "v.json")["results"]["pass"], "verify all passes")

check(tree_digest(MINI) == before, "commands leave the input dataset untouched")

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
