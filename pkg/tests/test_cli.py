import json

import pytest
from click.testing import CliRunner

from holomotion.api import cli
from holomotion.config import settings
from holomotion.services.motion_file import load_motion_file
from tests.test_flow import fail_cross_edges
from tests.test_motion_file import BAD_EXPRESSION


@pytest.fixture
def invoke(tmp_path):
    runner = CliRunner()

    def run(*args, out="out"):
        out_dir = tmp_path / out
        result = runner.invoke(cli, [*args, "--out", str(out_dir)])
        return result, out_dir

    return run


def read_report(out_dir, subcommand):
    return json.loads((out_dir / f"{subcommand}.json").read_text(encoding="utf-8"))


def verdicts(report):
    return {entry["check"]: entry["verdict"] for entry in report["verdicts"]}


def test_validate_writes_a_report(invoke, motion_dir):
    result, out = invoke("validate", "--input", str(motion_dir("wiggle")))
    assert result.exit_code == 0
    report = read_report(out, "validate")
    assert report["version"] == settings.REPORT_VERSION
    assert report["exit_code"] == 0
    assert report["cause"] is None
    assert report["details"]["validation"]["basepoint_residual"] == 0.0
    assert verdicts(report) == {"axioms": "pass"}
    assert report["tolerances"]["sep"] == 1e-8


def test_malformed_expression_exits_1_with_a_position(invoke, motion_dir):
    result, out = invoke("validate", "--input", str(motion_dir("bad", BAD_EXPRESSION)))
    assert result.exit_code == 1
    report = read_report(out, "validate")
    assert report["cause"] == "MotionFileError"
    assert report["details"]["error"] == {"line": 9, "column": 15}


def test_axiom_violation_exits_2(invoke, motion_dir):
    text = BAD_EXPRESSION.replace('"lam + * 2"', '"lam"').replace('kind = "punctured-disk"', 'kind = "disk"')
    result, out = invoke("validate", "--input", str(motion_dir("collide", text)))
    assert result.exit_code == 2
    report = read_report(out, "validate")
    assert report["cause"] == "ValidationFailure"
    assert report["details"]["error"]["axiom"] == "injectivity"


def test_monodromy_of_the_winding_motion_is_nontrivial(invoke, motion_dir):
    result, out = invoke("monodromy", "--input", str(motion_dir("winding")))
    assert result.exit_code == 3
    report = read_report(out, "monodromy")
    assert report["words"] == [{"generator": 0, "word": "s1 s1", "exponent_sum": 2, "trivial": False}]
    assert verdicts(report)["monodromy"] == "nontrivial"
    assert report["cause"] == "NontrivialMonodromy"
    assert report["artifacts"] == [{"kind": "braid-svg", "path": "braid-0.svg"}]
    assert (out / "braid-0.svg").read_text(encoding="utf-8").lstrip().startswith("<svg")


def test_monodromy_of_a_small_wiggle_is_trivial(invoke, motion_dir):
    result, out = invoke("monodromy", "--input", str(motion_dir("wiggle")))
    assert result.exit_code == 0
    report = read_report(out, "monodromy")
    assert verdicts(report)["generator-0"] == "trivial"
    assert report["words"][0]["word"] == ""


def test_continuous_extension_is_obstructed_by_winding(invoke, motion_dir):
    result, out = invoke("extend", "--mode", "continuous", "--input", str(motion_dir("winding")))
    assert result.exit_code == 3
    report = read_report(out, "extend")
    assert report["cause"] == "NontrivialMonodromy"
    assert report["details"]["error"]["word"] == "s1 s1"


def test_continuous_extension_writes_the_grid(invoke, motion_dir, monkeypatch):
    monkeypatch.setattr(settings, "PARAMETER_SAMPLES", 3)
    result, out = invoke("extend", "--mode", "continuous", "--input", str(motion_dir("disk-moving")))
    assert result.exit_code == 0
    report = read_report(out, "extend")
    assert verdicts(report)["continuous-motion"] == "solved"
    assert {a["path"] for a in report["artifacts"]} == {"grid.json", "beltrami.svg"}
    grid = json.loads((out / "grid.json").read_text(encoding="utf-8"))
    rows, columns = grid["shape"]
    assert rows == columns
    assert settings.GRID_CELLS + 1 <= rows <= settings.MAX_GRID_CELLS + 1
    assert verdicts(report)["cross-edge"] == "pass"


def test_failed_cross_edge_check_exits_4(invoke, motion_dir, monkeypatch):
    monkeypatch.setattr(settings, "PARAMETER_SAMPLES", 3)
    fail_cross_edges(monkeypatch)
    result, out = invoke("extend", "--mode", "continuous", "--input", str(motion_dir("disk-moving")))
    assert result.exit_code == 4
    report = read_report(out, "extend")
    assert verdicts(report)["continuous-motion"] == "solved"
    assert verdicts(report)["cross-edge"] == "fail"
    assert report["cause"] == "CrossEdgeFailure"
    assert "FlowBlowup" in report["message"]


def test_point_extension_writes_a_loadable_motion(invoke, motion_dir, fast_settings):
    result, out = invoke("extend", "--mode", "point", "--point", "1/4", "--input", str(motion_dir("wiggle")))
    assert result.exit_code == 0
    report = read_report(out, "extend")
    assert report["details"]["strand"]["margin"] >= 0.05
    assert report["details"]["strand"]["holomorphy_residual"] < 1e-8
    extended = load_motion_file(out / "extended.toml")
    assert extended.size == 4
    assert extended.base[3] == pytest.approx(0.25)


def test_point_mode_needs_exactly_one_point(invoke, motion_dir):
    result, out = invoke("extend", "--mode", "point", "--input", str(motion_dir("wiggle")))
    assert result.exit_code == 1
    assert read_report(out, "extend")["cause"] == "UsageError"


def test_unknown_mode_exits_1_without_a_report(invoke, motion_dir):
    result, out = invoke("extend", "--mode", "sideways", "--input", str(motion_dir("wiggle")))
    assert result.exit_code == 1
    assert not (out / "extend.json").exists()


def test_unknown_tolerance_key_exits_1(invoke, motion_dir):
    result, _ = invoke("validate", "--tolerance", "nonsense=1", "--input", str(motion_dir("wiggle")))
    assert result.exit_code == 1


def test_tolerance_override_lands_in_the_report(invoke, motion_dir):
    result, out = invoke("validate", "--tolerance", "sep=1e-9", "--input", str(motion_dir("wiggle")))
    assert result.exit_code == 0
    assert read_report(out, "validate")["tolerances"]["sep"] == 1e-9
    assert settings.TOLERANCES.sep == 1e-8


def test_missing_input_is_a_usage_error(invoke):
    result, _ = invoke("validate")
    assert result.exit_code == 1


def test_lift_of_a_trivial_motion(invoke, motion_dir, fast_settings):
    result, out = invoke("lift", "--target", "-1/2", "--input", str(motion_dir("wiggle")))
    assert result.exit_code == 0
    report = read_report(out, "lift")
    assert verdicts(report)["lift"] == "lifted"
    assert report["details"]["cover_point"]["endpoint_residual"] <= 1e-10
    assert len(report["details"]["lift_map"]["probes"]) == fast_settings.PROBE_POINTS


def test_lift_of_the_winding_motion_is_obstructed(invoke, motion_dir):
    result, out = invoke("lift", "--target", "-1/2", "--input", str(motion_dir("winding")))
    assert result.exit_code == 3
    report = read_report(out, "lift")
    assert verdicts(report)["lift"] == "obstructed"
    assert report["details"]["cover_point"]["word"] == "s1"


def test_report_combines_the_checks(invoke, motion_dir, fast_settings):
    result, out = invoke("report", "--input", str(motion_dir("wiggle")))
    assert result.exit_code == 0
    report = read_report(out, "report")
    assert verdicts(report) == {"axioms": "pass", "generator-0": "trivial", "monodromy": "trivial", "lift": "lifted"}
    assert report["artifacts"] == []


def test_reports_are_byte_identical_across_runs(invoke, motion_dir):
    path = str(motion_dir("winding"))
    first, out_a = invoke("monodromy", "--seed", "7", "--input", path, out="a")
    second, out_b = invoke("monodromy", "--seed", "7", "--input", path, out="b")
    assert first.exit_code == second.exit_code == 3
    assert (out_a / "monodromy.json").read_bytes() == (out_b / "monodromy.json").read_bytes()
    assert (out_a / "braid-0.svg").read_bytes() == (out_b / "braid-0.svg").read_bytes()


def test_version_option():
    result = CliRunner().invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert settings.APP_VERSION in result.output


def test_point_extension_is_byte_identical_across_runs(invoke, motion_dir, fast_settings):
    path = str(motion_dir("wiggle"))
    first, out_a = invoke("extend", "--mode", "point", "--point", "1/4", "--input", path, out="a")
    second, out_b = invoke("extend", "--mode", "point", "--point", "1/4", "--input", path, out="b")
    assert first.exit_code == second.exit_code == 0
    assert (out_a / "extend.json").read_bytes() == (out_b / "extend.json").read_bytes()
    assert (out_a / "extended.toml").read_bytes() == (out_b / "extended.toml").read_bytes()


def test_lift_is_byte_identical_across_runs(invoke, motion_dir, fast_settings):
    path = str(motion_dir("wiggle"))
    first, out_a = invoke("lift", "--target", "-1/2", "--input", path, out="a")
    second, out_b = invoke("lift", "--target", "-1/2", "--input", path, out="b")
    assert first.exit_code == second.exit_code == 0
    assert (out_a / "lift.json").read_bytes() == (out_b / "lift.json").read_bytes()
