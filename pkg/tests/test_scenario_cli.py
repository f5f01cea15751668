import json
import math

import numpy as np
import pytest

from lethargy import cli
from lethargy.scenario import (
    Report,
    ScenarioError,
    emit,
    emit_machine,
    load_scenario,
    parse_report,
    parse_scenario,
    run,
)


def base_doc(**over):
    doc = {
        "version": "1",
        "name": "t",
        "ambient_dim": 4,
        "norm_p": 2,
        "chain": {"generator": "coordinate", "n_levels": 2},
        "targets": {"values": [0.5, 0.2], "tail": "zero"},
        "mode": "finite",
        "tolerance": 1e-6,
    }
    doc.update(over)
    return doc


def test_parse_coordinate_generator():
    scn = parse_scenario(base_doc(ambient_dim=4, chain={"generator": "coordinate", "n_levels": 3}))
    assert [Y.rank for Y in scn.chain.levels] == [1, 2, 3]


def test_parse_polynomial_grid_generator():
    doc = base_doc(
        ambient_dim=64,
        norm_p="inf",
        chain={"generator": "polynomial_grid", "n_levels": 4, "grid_points": 64},
        targets={"values": [0.5, 0.3, 0.2, 0.1], "tail": "zero"},
    )
    scn = parse_scenario(doc)
    assert scn.norm.is_sup
    assert [Y.rank for Y in scn.chain.levels] == [1, 2, 3, 4]


def test_polynomial_grid_requires_sup_norm():
    doc = base_doc(chain={"generator": "polynomial_grid", "n_levels": 2, "grid_points": 4})
    with pytest.raises(ScenarioError, match="inf"):
        parse_scenario(doc)


def test_parse_rejects_increasing_targets():
    with pytest.raises(ScenarioError, match="non-increasing"):
        parse_scenario(base_doc(targets={"values": [0.2, 0.5], "tail": "zero"}))


def test_parse_rejects_unknown_fields():
    with pytest.raises(ScenarioError, match="fail-closed"):
        parse_scenario(base_doc(extra_knob=1))
    with pytest.raises(ScenarioError, match="fail-closed"):
        parse_scenario(base_doc(targets={"values": [0.5], "tail": "zero", "foo": 1}))


def test_parse_rejects_bad_version_and_mode():
    with pytest.raises(ScenarioError, match="version"):
        parse_scenario(base_doc(version="2"))
    with pytest.raises(ScenarioError, match="mode"):
        parse_scenario(base_doc(mode="solve"))
    with pytest.raises(ScenarioError, match="N"):
        parse_scenario(base_doc(mode="prefix"))


def test_parse_explicit_levels_and_validation():
    doc = base_doc(
        ambient_dim=3,
        chain={"levels": [[[1.0, 0.0, 0.0]], [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]]},
    )
    scn = parse_scenario(doc)
    assert [Y.rank for Y in scn.chain.levels] == [1, 2]
    bad = base_doc(ambient_dim=2, chain={"levels": [[[1.0, 0.0]], [[0.0, 1.0]]]})
    with pytest.raises(ScenarioError, match="nesting"):
        parse_scenario(bad)


def test_run_finite_report(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(base_doc()))
    rep = run(load_scenario(p.as_posix()))
    assert rep.verdict == "pass"
    assert [row["k"] for row in rep.levels] == [1, 2]
    assert all(row["residual"] <= 1e-6 for row in rep.levels)
    assert 0.5 <= rep.norm_x <= 1.5 + 1e-6


def test_machine_report_round_trip():
    rep = run(parse_scenario(base_doc()))
    text = emit_machine(rep)
    back = parse_report(text)
    assert back == rep  # wall_time excluded from comparison and serialization
    assert "wall_time" not in json.loads(text)


def test_machine_report_deterministic():
    a = emit_machine(run(parse_scenario(base_doc())))
    b = emit_machine(run(parse_scenario(base_doc())))
    assert a == b


def test_emit_text_contains_table():
    rep = run(parse_scenario(base_doc()))
    text = emit(rep, "text_table")
    assert "verdict  : pass" in text
    assert "wall time" in text
    with pytest.raises(ValueError):
        emit(rep, "xml")


def test_check_only_with_subspace_samples():
    doc = base_doc(
        mode="check_only",
        targets={"values": [0.4, 0.16], "tail": "geometric", "ratio": 0.4},
        subspace_condition={"k": 2, "n_samples": 4},
        seed=3,
    )
    rep = run(parse_scenario(doc))
    assert rep.condition["passes"]
    assert rep.subspace_condition is not None
    assert len(rep.subspace_condition["samples"]) == 4


# -- CLI ----------------------------------------------------------------------


def test_cli_pass_and_fail_exit_codes(tmp_path, capsys):
    p = tmp_path / "ok.json"
    p.write_text(json.dumps(base_doc()))
    assert cli.main(["construct", p.as_posix()]) == 0
    f = tmp_path / "fail.json"
    f.write_text(
        json.dumps(
            base_doc(
                mode="check_only",
                targets={"values": [0.5, 0.25], "tail": "geometric", "ratio": 0.5},
            )
        )
    )
    assert cli.main(["check", f.as_posix()]) == 1
    capsys.readouterr()


def test_cli_input_error_exit_codes(tmp_path, capsys):
    assert cli.main(["check", (tmp_path / "missing.json").as_posix()]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main(["check", bad.as_posix()]) == 2
    wrong_mode = tmp_path / "wm.json"
    wrong_mode.write_text(json.dumps(base_doc(mode="finite")))
    assert cli.main(["check", wrong_mode.as_posix()]) == 2
    capsys.readouterr()


def test_cli_solver_failure_exit_code(tmp_path, capsys):
    # targets longer than the chain can carry -> construction error -> exit 3
    doc = base_doc(
        ambient_dim=3,
        chain={"generator": "coordinate", "n_levels": 1},
        targets={"values": [0.5, 0.4, 0.3], "tail": "zero"},
    )
    p = tmp_path / "short.json"
    p.write_text(json.dumps(doc))
    assert cli.main(["construct", p.as_posix()]) == 3
    capsys.readouterr()


def test_cli_demo_listing_and_run(capsys):
    assert cli.main(["demo"]) == 0
    out = capsys.readouterr().out
    assert "coordinate-hilbert-finite" in out
    assert cli.main(["demo", "coordinate-hilbert-finite"]) == 0
    capsys.readouterr()
    assert cli.main(["demo", "no-such-scenario"]) == 2
    capsys.readouterr()


def test_cli_output_flag_writes_machine_report(tmp_path, capsys):
    out = tmp_path / "rep.json"
    assert cli.main(["demo", "coordinate-hilbert-finite", "--output", out.as_posix()]) == 0
    capsys.readouterr()
    rep = parse_report(out.read_text())
    assert isinstance(rep, Report)
    assert rep.verdict == "pass"


def test_cli_tolerance_and_seed_overrides(tmp_path, capsys):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(base_doc()))
    assert cli.main(["construct", p.as_posix(), "--tolerance", "1e-4", "--seed", "9"]) == 0
    capsys.readouterr()
