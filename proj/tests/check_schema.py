#!/usr/bin/env python3
"""Validates reports and block maps written by the CLI against schemas/."""
import copy
import json
import pathlib
import subprocess
import sys
import tempfile

try:
    import jsonschema
except ImportError:
    print("jsonschema not installed; skipping")
    sys.exit(0)


def run(cli, *args):
    out = subprocess.run([cli, *args], check=True, capture_output=True, text=True)
    return json.loads(out.stdout)


def main():
    cli, src = sys.argv[1], pathlib.Path(sys.argv[2])
    golden = src / "tests" / "golden"
    report_schema = json.loads((src / "schemas" / "report.schema.json").read_text())
    map_schema = json.loads((src / "schemas" / "blockmap.schema.json").read_text())
    check_report = jsonschema.Draft202012Validator(report_schema)
    check_map = jsonschema.Draft202012Validator(map_schema)

    reports = {
        "golden": json.loads((golden / "report.json").read_text()),
        "block": run(cli, "replay", str(golden / "run.trace"), "--blockmap", str(golden / "sim.map"),
                     "--granularity", "block", "--format", "json"),
        "no map": run(cli, "replay", str(golden / "run.trace"), "--format", "json"),
    }
    with tempfile.TemporaryDirectory() as tmp:
        scenario = pathlib.Path(tmp) / "s.json"
        scenario.write_text(json.dumps({"seed": 2, "blocks": [
            {"label": "a", "latency": 500, "power": 4, "iterations": 100},
            {"label": "never", "latency": 1, "power": 4, "iterations": 1}]}))
        trace, bmap = pathlib.Path(tmp) / "t.trace", pathlib.Path(tmp) / "t.map"
        subprocess.run([cli, "simulate", str(scenario), "--export-trace", str(trace), "--export-blockmap", str(bmap)],
                       check=True, capture_output=True)
        reports["unsampled"] = run(cli, "replay", str(trace), "--blockmap", str(bmap), "--granularity", "block",
                                   "--format", "json")
    if not reports["unsampled"]["unsampled"]:
        print("FAIL expected an unsampled block")
        return 1

    failures = 0
    for name, report in reports.items():
        errors = list(check_report.iter_errors(report))
        for e in errors:
            print(f"FAIL report {name}: {e.json_path}: {e.message}")
        failures += bool(errors)

    broken = copy.deepcopy(reports["golden"])
    broken["blocks"][0]["proportion"] = 1.5
    if check_report.is_valid(broken):
        print("FAIL schema accepted a proportion above 1")
        failures += 1

    maps = {"symbols": run(cli, "symbols", cli, "--format", "json")}
    for name, doc in maps.items():
        errors = list(check_map.iter_errors(doc))
        for e in errors:
            print(f"FAIL blockmap {name}: {e.json_path}: {e.message}")
        failures += bool(errors)

    print(f"{len(reports)} reports and {len(maps)} block maps checked, {failures} failed")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
