"""Produce one dataset of every kind with the CLI and validate each manifest
against docs/manifest.schema.json."""

import argparse
import json
import math
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def run(cli, *args):
    proc = subprocess.run([cli, *map(str, args)], capture_output=True, text=True)
    if proc.returncode != 0:
        sys.exit(f"{' '.join(map(str, args))} exited with {proc.returncode}: {proc.stderr}")


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--cli", required=True)
    parser.add_argument("--schema", required=True)
    opts = parser.parse_args()

    schema = json.loads(pathlib.Path(opts.schema).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    with tempfile.TemporaryDirectory(prefix="tlsspec-schema-") as tmp:
        root = pathlib.Path(tmp)
        config = {
            "version": 1,
            "name": "schema",
            "ensemble": {"defects": [{"delta_hz": 3.9e9}, {"delta_hz": 4.1e9}], "coupling_hz": 20e6, "gamma_hz": 5e6},
            "pulse": {"amplitude_hz": 60e6, "duration_s": 4e-9},
            "sweep": {"freq_start_hz": 3.8e9, "freq_stop_hz": 4.2e9, "freq_count": 3, "t_end_s": 12e-9},
            "output": str(root / "run"),
        }
        (root / "config.json").write_text(json.dumps(config))
        run(opts.cli, "simulate", "--config", root / "config.json")
        run(opts.cli, "floquet", "--config", root / "config.json")
        population = root / "run" / "tau_4ns" / "population"
        run(opts.cli, "analyze", "fft", population, root / "fft")
        run(opts.cli, "analyze", "g2", population, root / "g2", "--max-lag-ns", "3")
        run(opts.cli, "analyze", "chi", root / "g2", root / "chi")
        run(opts.cli, "analyze", "mean-driven", population, root / "series")

        lines = ["t,i,q"] + [f"{k * 1e-9},{math.exp(-k / 50)},{0.1 * math.exp(-k / 50)}" for k in range(64)]
        (root / "iq.csv").write_text("\n".join(lines) + "\n")
        run(opts.cli, "analyze", "import-iq", root / "iq.csv", root / "iq")
        run(opts.cli, "analyze", "homodyne", root / "iq", root / "amplitude")

        kinds = set()
        errors = 0
        for manifest in sorted(root.rglob("manifest.json")):
            doc = json.loads(manifest.read_text())
            kinds.add(doc.get("kind"))
            for err in validator.iter_errors(doc):
                errors += 1
                print(f"{manifest.relative_to(root)}: {err.message}")
        expected = {"time_trace", "spectrogram", "g2_map", "chi_map", "floquet_spectrum", "series"}
        if kinds != expected:
            print(f"kinds produced {sorted(kinds)}, expected {sorted(expected)}")
            errors += 1
        print(f"checked {len(kinds)} kinds, {errors} problems")
        return 1 if errors else 0


if __name__ == "__main__":
    sys.exit(main())
