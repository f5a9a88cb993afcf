"""Runs every plaols subcommand on small fixtures and validates the JSON
documents against the report schema."""

import json
import random
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema


def write_fixture(path: Path) -> None:
    rng = random.Random(7)
    with path.open("w") as f:
        f.write("a,b,noise,y\n")
        for _ in range(300):
            a, b = rng.gauss(0, 1), rng.gauss(0, 1)
            noise = 3.0 * rng.gauss(0, 1)
            f.write(f"{a!r},{b!r},{noise!r},{a + 0.5 * b + 0.3 * rng.gauss(0, 1)!r}\n")


def main() -> int:
    cli, schema_path = sys.argv[1], Path(sys.argv[2])
    schema = json.loads(schema_path.read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    with tempfile.TemporaryDirectory() as tmp:
        data = Path(tmp) / "data.csv"
        write_fixture(data)
        runs = {
            "pla": ["pla", "--input", str(data), "--tau", "0.3", "--response", "y"],
            "pla_correlation": ["pla", "--input", str(data), "--tau", "0.3", "--basis", "corr"],
            "compare": ["compare", "--input", str(data), "--tau", "0.3", "--response", "y"],
            "bounds": ["bounds", "--seed", "3", "--n", "400"],
            "bounds_population": ["bounds", "--seed", "3", "--eps", "0"],
            "simulate": ["simulate", "--seed", "3", "--reps", "3", "--n", "100", "200", "400"],
            "simulate_fixed_tau": ["simulate", "--seed", "3", "--reps", "2", "--n", "100", "--tau", "0.2"],
        }
        failures = 0
        for name, args in runs.items():
            proc = subprocess.run([cli, *args], capture_output=True, text=True)
            if proc.returncode != 0:
                print(f"FAIL {name}: exit {proc.returncode}: {proc.stderr.strip()}")
                failures += 1
                continue
            doc = json.loads(proc.stdout)
            errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
            if errors:
                failures += 1
                print(f"FAIL {name}:")
                for e in errors[:5]:
                    print(f"  {list(e.path)}: {e.message[:300]}")
            else:
                print(f"ok   {name}")
            broken = dict(doc, schema_version="0")
            if validator.is_valid(broken):
                failures += 1
                print(f"FAIL {name}: schema accepts a wrong schema_version")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
