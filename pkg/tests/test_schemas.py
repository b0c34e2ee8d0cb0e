import json
from pathlib import Path

import pytest

jsonschema = pytest.importorskip("jsonschema")

from nehariloop.cli import main

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "docs" / "schemas"

TOML = """
[grid]
dim = 1
n = 101
endpoints = [0.0, 1.0]

[coefficients]
a = [{kind = "bump", center = 0.3, width = 0.1, height = 2.0}, {kind = "constant", value = -0.4}]
b = [{kind = "bump", center = 0.0, width = 0.25, height = 1.0}, {kind = "constant", value = -0.25}]

[exponents]
p = 4.0
q = 1.5

[solve]
lambda = 0.02

[branch]
epsilon = 0.1
ds_max = 0.2
max_steps = 2500

[loop]
eps_list = [0.2, 0.1]
ds_max = 0.2
max_steps = 2500

[eigs]
eps_list = [0.2, 0.1]

[verify]
lambda = 0.02

[output]
seed = 3
"""


def _validator(name: str):
    from referencing import Registry, Resource

    schema = json.loads((SCHEMA_DIR / name).read_text())
    common = json.loads((SCHEMA_DIR / "common.schema.json").read_text())
    registry = Registry().with_resource(
        "common.schema.json", Resource.from_contents(common))
    return jsonschema.Draft7Validator(schema, registry=registry)


@pytest.fixture(scope="module")
def outputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("schemas")
    cfg = root / "run.toml"
    cfg.write_text(TOML)
    paths = {}
    for cmd, json_name in (("solve", "solutions.json"),
                           ("branch", "branch_00_eps_0.1.json"),
                           ("loop", "loop_report.json"),
                           ("eigs", "eigs.json"),
                           ("verify", "verify_report.json")):
        out = root / cmd
        code = main([cmd, "--config", str(cfg), "--out", str(out)])
        assert code == 0, f"{cmd} exited {code}"
        paths[cmd] = out / json_name
    return paths


@pytest.mark.parametrize("cmd,schema", [
    ("solve", "solutions.schema.json"),
    ("branch", "branch_sidecar.schema.json"),
    ("loop", "loop_report.schema.json"),
    ("eigs", "eigs.schema.json"),
    ("verify", "verify_report.schema.json"),
])
def test_output_validates_against_schema(outputs, cmd, schema):
    doc = json.loads(outputs[cmd].read_text())
    _validator(schema).validate(doc)
