import json
import subprocess
import sys
from pathlib import Path

import pytest

from lcslab.cli import main
from lcslab.coeffalg import ExpScalar
from lcslab.manifest import (
    ManifestError,
    ManifestIOError,
    fixture_names,
    fixture_path,
    manifest_from_json,
    manifest_to_json,
    parse_manifest,
    parse_manifest_text,
)
from lcslab.runner import emit_report, execute
from lcslab.serialize import expscalar_to_json

from conftest import kt, kt_generators

FIXTURES = ["box_exact", "kodaira_thurston", "kodaira_thurston_alt", "kodaira_thurston_literal", "torus_hodge"]


def load(name):
    return json.loads(fixture_path(name).read_text())


def run_cli(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fixture_list():
    assert fixture_names() == FIXTURES


def test_parse_kodaira_thurston():
    m = parse_manifest(fixture_path("kodaira_thurston"))
    ref = kt()
    assert m.coordinates == ("x", "y", "z", "w")
    assert m.structure.Omega == ref.Omega and m.structure.omega == ref.omega
    assert m.structure.generators == kt_generators()


@pytest.mark.parametrize("name", FIXTURES)
def test_round_trip(name):
    m = parse_manifest(fixture_path(name))
    assert manifest_from_json(manifest_to_json(m)) == m
    text = json.dumps(manifest_to_json(m))
    assert parse_manifest_text(text) == m


def test_missing_lee_form_is_schema_error(tmp_path, capsys):
    doc = load("kodaira_thurston")
    del doc["structure"]["omega"]
    with pytest.raises(ManifestError) as info:
        manifest_from_json(doc)
    assert info.value.path == "$.structure"
    p = tmp_path / "m.json"
    p.write_text(json.dumps(doc))
    code, out, err = run_cli(["run", str(p)], capsys)
    assert code == 2 and "$.structure" in err and "omega" in err


def test_float_in_exact_field_rejected():
    doc = load("kodaira_thurston_literal")
    doc["structure"]["omega"][0]["coeff"] = 1.5
    with pytest.raises(ManifestError):
        manifest_from_json(doc)


def test_index_out_of_range():
    doc = load("kodaira_thurston_literal")
    doc["structure"]["omega"][0]["indices"] = [7]
    with pytest.raises(ManifestError) as info:
        manifest_from_json(doc)
    assert info.value.path == "$.structure.omega[0].indices"


def test_bad_json_reports_line(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{\n  "schema_version": "1.0",\n  "dimension": 4,,\n}')
    with pytest.raises(ManifestError) as info:
        parse_manifest(p)
    assert info.value.line == 3
    code, _, err = run_cli(["run", str(p)], capsys)
    assert code == 2 and "line 3" in err


def test_missing_file_is_io_error(tmp_path, capsys):
    with pytest.raises(ManifestIOError):
        parse_manifest(tmp_path / "nope.json")
    code, _, _ = run_cli(["run", str(tmp_path / "nope.json")], capsys)
    assert code == 3


def test_unwritable_output_is_io_error(tmp_path, capsys):
    code, _, _ = run_cli(["run", str(fixture_path("kodaira_thurston_literal")), "--out", str(tmp_path / "no" / "r.json")], capsys)
    assert code == 3


def test_empty_job_list(tmp_path, capsys):
    doc = load("kodaira_thurston_literal")
    doc["jobs"] = []
    m = manifest_from_json(doc)
    assert m.jobs == []
    assert emit_report(execute(m)) == b'{\n  "jobs": []\n}\n'
    assert json.loads(emit_report(execute(m))) == {"jobs": []}
    p = tmp_path / "empty.json"
    p.write_text(json.dumps(doc))
    assert run_cli(["run", str(p)], capsys)[0] == 0


def test_expscalar_json():
    assert expscalar_to_json(ExpScalar([(-1, 0), (1, 1)])) == {
        "terms": [{"q": "-1", "r": "0"}, {"q": "1", "r": "1"}],
        "float": 1.718281828459045,
    }


def _kt_core_manifest():
    doc = load("kodaira_thurston")
    keep = {"structure", "volume", "flux-x-loop", "calabi-H1"}
    doc["jobs"] = [j for j in doc["jobs"] if j["id"] in keep]
    doc["jobs"][2]["backends"] = ["primitive-search"]
    return manifest_from_json(doc)


def test_kodaira_thurston_core_jobs():
    report = execute(_kt_core_manifest())
    jobs = {j["id"]: j for j in report["jobs"]}
    assert all(j["verdict"] == "pass" for j in jobs.values())
    assert jobs["volume"]["volume_form"] == [
        {"indices": [0, 1, 2, 3], "coeff": [{"q": "-1", "powers": [0, 0, 0, 0], "k": ["0", "0", "1", "0"], "r": "0"}]}
    ]
    assert jobs["volume"]["comparison"]["volume_form"]["agrees"] is True
    assert jobs["flux-x-loop"]["flux_form"] == [
        {"indices": [1], "coeff": [{"q": "1", "powers": [0, 0, 0, 0], "k": ["0", "0", "1", "0"], "r": "0"}]}
    ]
    assert jobs["calabi-H1"]["value"]["terms"] == [{"q": "-1", "r": "0"}, {"q": "1", "r": "1"}]
    assert abs(jobs["calabi-H1"]["value"]["float"] - 1.718281828459045) < 1e-12


def test_literal_manifest_fails(capsys):
    code, out, _ = run_cli(["run", str(fixture_path("kodaira_thurston_literal"))], capsys)
    assert code == 1
    (job,) = json.loads(out)["jobs"]
    assert job["verdict"] == "fail"
    assert job["residual"] == [
        {"indices": [0, 1, 2], "coeff": [{"q": "2", "powers": [0, 0, 0, 0], "k": ["0", "0", "1", "0"], "r": "0"}]}
    ]
    assert job["comparison"]["passes"] == {"claim": True, "computed": False, "agrees": False}


def test_torus_hodge_manifest(capsys):
    code, out, _ = run_cli(["run", str(fixture_path("torus_hodge"))], capsys)
    jobs = {j["id"]: j for j in json.loads(out)["jobs"]}
    assert code == 0
    assert jobs["harmonic-1-forms"]["harmonic_dim"] == 2
    assert jobs["twisted-p0"]["harmonic_dim"] == 0 and jobs["twisted-p1"]["harmonic_dim"] == 0


def test_kodaira_thurston_full_manifest(capsys):
    code, out, _ = run_cli(["run", str(fixture_path("kodaira_thurston"))], capsys)
    jobs = {j["id"]: j for j in json.loads(out)["jobs"]}
    assert code == 0
    assert jobs["descent-Omega"]["comparison"]["invariant"]["agrees"] is False
    assert [g["classification"] for g in jobs["descent-Omega"]["generators"]] == ["invariant", "invariant", "fails", "invariant"]
    assert jobs["ce-untwisted"]["betti"] == [1, 3, 4, 3, 1]
    assert jobs["ce-untwisted"]["coframe_derivation"] == {"matches_brackets": True, "coframe_invariant": True}
    twisted = jobs["ce-twisted"]
    assert twisted["betti"][0] == 0 and twisted["euler_characteristic"] == 0
    assert twisted["comparison"]["b1"]["claim"] == 2
    assert twisted["comparison"]["b1"]["computed"] == twisted["betti"][1]
    assert jobs["vanishing-x-loop"]["result"] == "obstructed up to search bounds"
    assert jobs["vanishing-H1"]["result"] == "vanishes"
    assert jobs["flow-H1"]["endpoints"][0][3] == pytest.approx(-0.25, abs=1e-14)


def test_box_exact_manifest(capsys):
    code, out, _ = run_cli(["run", str(fixture_path("box_exact"))], capsys)
    jobs = {j["id"]: j for j in json.loads(out)["jobs"]}
    assert code == 0
    assert jobs["calabi-exact-K-x"]["value"]["terms"] == [{"q": "1/2", "r": "0"}]
    assert jobs["energy-capacity-K-x"]["holds"] is True
    assert abs(jobs["hofer-exact-H1"]["energy"] - 1.718281828459045) < 1e-6


def test_json_output_is_byte_stable(tmp_path, capsys):
    outs = []
    for i in range(2):
        target = tmp_path / f"r{i}.json"
        assert run_cli(["run", str(fixture_path("box_exact")), "--out", str(target)], capsys)[0] == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
    assert b"seconds" not in outs[0]


def test_timing_flag(capsys):
    code, out, _ = run_cli(["run", str(fixture_path("kodaira_thurston_literal")), "--timing"], capsys)
    assert "seconds" in json.loads(out)["jobs"][0]


def test_text_format(capsys):
    code, out, _ = run_cli(["run", str(fixture_path("torus_hodge")), "--format", "text"], capsys)
    assert code == 0
    assert "[PASS] harmonic-1-forms (hodge): harmonic dimension 2" in out
    assert out.rstrip().endswith("3/3 jobs passed")


def test_job_errors_are_isolated():
    doc = load("kodaira_thurston_literal")
    # energy-capacity needs an exact Lee form; the next job must still run
    doc["jobs"] = [{"type": "energy-capacity", "id": "ec", "H": [{"coeff": "1"}]}, {"type": "volume", "id": "vol"}]
    report = execute(manifest_from_json(doc))
    assert report["jobs"][0]["verdict"] == "error" and "ValueError" in report["jobs"][0]["error"]
    assert report["jobs"][1]["verdict"] == "pass"


def test_fixtures_command(capsys):
    code, out, _ = run_cli(["fixtures"], capsys)
    assert code == 0
    assert [line.split("\t")[0] for line in out.strip().splitlines()] == FIXTURES


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lcslab.cli", "fixtures"], capture_output=True, text=True, check=True)
    assert "kodaira_thurston" in proc.stdout
