import json
import subprocess
import sys

import jsonschema
import pytest

from kripkecells.cli import COMMANDS, atom_table, load_schema, run
from kripkecells.canonical import omega_level
from kripkecells.formula import Workspace
from kripkecells.kripke import KripkeStructure, to_json

DEMO = "K0 p0 | K0 !p0"


def ok(*argv, command=None):
    code, out, err = run(list(argv))
    assert code == 0, err
    assert err == ""
    doc = json.loads(out)
    jsonschema.validate(doc, load_schema(command or argv[0]))
    return doc


def fails(code, *argv):
    got, out, err = run(list(argv))
    assert got == code, (out, err)
    assert out == ""
    doc = json.loads(err)
    jsonschema.validate(doc, load_schema("error"))
    assert doc["exit_code"] == code
    return doc


@pytest.fixture
def model_file(tmp_path):
    K = KripkeStructure.from_blocks(1, [1, 1, 1, 0], [[[0, 1], [2, 3]], [[0], [1, 2], [3]]])
    path = tmp_path / "chain.json"
    path.write_text(json.dumps(to_json(K)))
    return str(path)


def test_every_command_has_a_schema():
    for name in COMMANDS:
        jsonschema.Draft7Validator.check_schema(load_schema(name))
    jsonschema.Draft7Validator.check_schema(load_schema("error"))


def test_parse():
    doc = ok("parse", "-f", "E p0 -> p0")
    assert doc["depth"] == 1
    assert doc["formula"] == "E p0 -> p0"
    assert "K0 p0 & K1 p0" in doc["expanded"]


def test_parse_error_reports_position():
    doc = fails(2, "parse", "-f", "K0 (p0 &")
    assert doc["error"] == "parse" and isinstance(doc["position"], int)
    fails(2, "parse", "-f", "p3")


def test_usage_errors():
    fails(2, "omega")
    fails(2, "nonsense")
    fails(2, "alienate", "-f", DEMO, "--schedule", "3,2", "--target", "4")


def test_eval_on_level():
    doc = ok("eval", "-f", DEMO)
    assert doc["level"] == 1 and doc["count"] == 4 and doc["total"] == 8


def test_eval_on_model(model_file):
    doc = ok("eval", "-f", "K1 p0", "--model", model_file)
    assert doc["points"] == [0, 1, 2]
    assert doc["common_knowledge"] == []
    code, out, _ = run(["eval", "-f", "p0", "--model", model_file, "--format", "dot"])
    assert code == 0 and out.startswith("graph")


def test_missing_model_is_io_error(tmp_path):
    fails(1, "eval", "-f", "p0", "--model", str(tmp_path / "none.json"))


def test_refine(model_file):
    doc = ok("refine", "--model", model_file)
    assert doc["classes"] == 4
    assert len(doc["steps"]) == doc["stable_index"] + 1


def test_omega_stats():
    doc = ok("omega", "--level", "1", "--stats")
    assert doc["count"] == 8 and doc["connected"] is True
    doc = ok("omega", "--level", "1", "--stats", "--agents", "3")
    assert doc["count"] == 16


def test_omega_table_ids():
    doc = ok("omega", "--level", "1")
    assert doc["atoms"] == [f"1.{k}" for k in range(8)]
    _, ids = atom_table(omega_level(Workspace(1, 2), 1))
    assert sorted(v for v in ids.values() if v.startswith("1.")) == doc["atoms"]
    assert {row["id"] for row in doc["table"]} == set(ids.values())


def test_omega_beyond_caps():
    fails(3, "omega", "--level", "3")
    doc = ok("omega", "--level", "3", "--stats")
    assert doc["enumerated"] is False and doc["count"] > 0


def test_classify():
    doc = ok("classify", "-f", DEMO)
    assert doc["gen_level"] == 1 and doc["ck_nonempty"] is True
    doc = ok("classify", "-f", "p0 | !p0")
    assert doc["gen_level"] == 0


def test_tautology():
    assert ok("tautology", "-f", "K0 p0 -> p0")["tautology"] is True
    assert ok("tautology", "-f", "p0 -> K0 p0")["tautology"] is False


def test_extend():
    doc = ok("extend", "-f", DEMO, "--level", "1", "--atom", "0")
    assert doc["least_info"] in doc["extensions"]
    doc = ok("extend", "-f", DEMO, "--level", "1", "--least-info")
    assert "extensions" not in doc
    fails(4, "extend", "-f", DEMO, "--level", "1", "--atom", "99")


def test_alienate():
    doc = ok("alienate", "-f", "p0 | !p0", "--schedule", "0,2:+1", "--target", "2")
    assert doc["levels"] == [0, 2] and doc["partial"] is False
    fails(4, "alienate", "-f", DEMO, "--schedule", "2:+1", "--level", "1", "--target", "3")


def test_separate():
    doc = ok("separate", "-f", "p0 | !p0", "--S", "0:+1", "--T", "0,3:+gap", "--horizon", "3")
    assert doc["separated"] and doc["bound"] >= 1
    doc = ok("separate", "-f", "p0 | !p0", "--S", "0:+1", "--T", "0:+1")
    assert doc["separated"] is False


def test_fanout_fast_and_strict():
    doc = ok("fanout", "-f", DEMO, "--schedule", "3:+1", "--T", "3,5:+1", "--cap", "5")
    assert doc["start"] == 3 and doc["gen"] == 1
    assert doc["checks"]["lemma6"]["status"] == "pass"
    fails(4, "fanout", "-f", DEMO, "--schedule", "3:+1", "--cap", "4", "--strict")


def test_shift():
    doc = ok("shift", "--n", "2")
    assert doc["cells"] == doc["orbits"] == 6
    assert doc["shift_is_tau_sigma"] and doc["max_block"] == 2
    doc = ok("shift", "--n", "1", "--pi", "--structure")
    assert doc["cells"] == 1 and len(doc["structure"]["points"]) == 4
    fails(3, "shift", "--n", "7")


def test_global_options_after_subcommand():
    assert ok("omega", "--level", "1", "--stats", "--agents", "3")["count"] == \
        ok("--agents", "3", "omega", "--level", "1", "--stats", command="omega")["count"]


def test_cap_override():
    fails(3, "--budget", "5", "omega", "--level", "1")


def test_text_and_dot_formats():
    code, out, _ = run(["tautology", "-f", "p0 | !p0", "--format", "text"])
    assert code == 0 and "tautology: true" in out
    code, out, _ = run(["omega", "--level", "1", "--format", "dot"])
    assert code == 0 and out.count("--") > 0
    fails(4, "classify", "-f", DEMO, "--format", "dot")


def _proc(*argv):
    return subprocess.run([sys.executable, "-m", "kripkecells.cli", *argv],
                          capture_output=True, text=True, check=False)


def test_subprocess_determinism():
    argv = ["extend", "-f", DEMO, "--level", "1", "--atom", "3"]
    first, second = _proc(*argv), _proc(*argv)
    assert first.returncode == second.returncode == 0
    assert first.stdout == second.stdout == run(argv)[1]


def test_subprocess_error_goes_to_stderr():
    p = _proc("parse", "-f", "K9 p0")
    assert p.returncode == 2 and p.stdout == ""
    assert json.loads(p.stderr)["error"] == "parse"
