"""Validates the bundled scenarios, and a solve-node flow document, against schemas/."""
import json
import pathlib
import subprocess
import sys

import jsonschema

root = pathlib.Path(sys.argv[1])
cli = sys.argv[2]
schemas = {}
for path in (root / "schemas").glob("*.schema.json"):
    schema = json.loads(path.read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    schemas[path.name.split(".")[0]] = schema

failed = 0
docs = [(p.name, json.loads(p.read_text())) for p in sorted((root / "scenarios").glob("*.json"))]
out = subprocess.run([cli, "solve-node", "--scenario", str(root / "scenarios/example_two.json"),
                      "--format", "json"], check=True, capture_output=True, text=True).stdout
docs.append(("solve-node output", json.loads(out)))
for name, doc in docs:
    errors = list(jsonschema.Draft202012Validator(schemas[doc["kind"]]).iter_errors(doc))
    for e in errors:
        print(f"{name}: {e.json_path}: {e.message}")
    failed += bool(errors)
    print(f"{name}: {'ok' if not errors else 'INVALID'} ({doc['kind']})")

bad = dict(docs[0][1], unexpected=1)
if not list(jsonschema.Draft202012Validator(schemas[bad["kind"]]).iter_errors(bad)):
    print("unknown field was accepted")
    failed += 1
sys.exit(1 if failed else 0)
