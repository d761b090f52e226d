import subprocess
import sys
from pathlib import Path

import pytest
import yaml
from hypothesis import given, settings, strategies as st

from vrmcast.cli_io import (
    ConfigDocument, ConfigError, emit_config, emit_instance, emit_solution, format_partition, main, parse_config,
    parse_instance, schema_table,
)
from vrmcast.planner_no_transcode import solve_no_transcode
from vrmcast.scenario import ScenarioConfig, sample_realization

EXAMPLE = Path(__file__).resolve().parents[1] / "data" / "example1.yaml"

EXAMPLE_OUTPUT = """P_{1} = {(1,3), (2,3), (1,4), (1,5)}
P_{2} = {(3,4), (2,6)}
P_{3} = {(4,5), (4,6), (3,7), (4,7)}
P_{1,2} = {(2,4), (2,5)}
P_{2,3} = {(3,5), (3,6)}
I = {{1}, {2}, {3}, {1,2}, {2,3}}
"""


def test_defaults():
    doc = parse_config("")
    assert doc == ConfigDocument()
    s = doc.scenario
    assert (s.bandwidth, s.frame, s.transcode_energy, s.beta) == (150e6, 0.05, 1e-6, 1.0)
    assert s.noise_power == pytest.approx(150e6 * 1.38e-23 * 300)


def test_numbers_in_exponent_form():
    doc = parse_config("scenario:\n  transcode_energy_j: 1e-7\n  bandwidth_hz: 20e6\n")
    assert doc.scenario.transcode_energy == 1e-7 and doc.scenario.bandwidth == 20e6


def test_range_error_names_key():
    with pytest.raises(ConfigError) as exc:
        parse_config("scenario:\n  gamma: -1\n")
    assert "scenario.gamma" in str(exc.value) and exc.value.line == 2


def test_unknown_key_with_position():
    with pytest.raises(ConfigError) as exc:
        parse_config("scenario:\n  users: 2\n  colour: red\n")
    assert "scenario.colour" in str(exc.value) and (exc.value.line, exc.value.column) == (3, 3)
    with pytest.raises(ConfigError):
        parse_config("extra: 1\n")


def test_syntax_error_position():
    with pytest.raises(ConfigError) as exc:
        parse_config("scenario:\n  users: [1, 2\n")
    assert exc.value.line is not None and "syntax" in str(exc.value)


@pytest.mark.parametrize("text", [
    "scenario:\n  users: two\n",
    "scenario:\n  users: 9\n",
    "scenario:\n  quality_lb: 4\n  quality_ub: 2\n",
    "scenario:\n  channel_probs: [0.5, 0.6]\n",
    "scenario:\n  video:\n    encoding_rates_bps: [2e6, 1e6]\n",
    "scenario:\n  users: true\n",
    "solver:\n  dc:\n    rho_growth: 1\n",
    "sweep:\n  param: R\n",
    "sweep:\n  schemes: [proposed_w, magic]\n",
    "sweep:\n  param: rbar\n  values: [1]\n",
    "scenario: 3\n",
    "scenario:\n  users: 1\n  users: 2\n",
])
def test_invalid_configs(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_round_trip_defaults():
    doc = parse_config("")
    assert parse_config(emit_config(doc)) == doc


@settings(max_examples=25, deadline=None)
@given(
    st.integers(1, 8), st.floats(0, 5, allow_nan=False), st.integers(1, 3), st.integers(0, 2),
    st.floats(1e-9, 1e-3), st.integers(0, 10**6), st.sampled_from(["K", "gamma"]),
)
def test_round_trip_property(users, gamma, lb, width, ek, seed, param):
    text = (
        f"scenario:\n  users: {users}\n  gamma: {gamma!r}\n  quality_lb: {lb}\n  quality_ub: {lb + width}\n"
        f"  transcode_energy_j: {ek!r}\n  seed: {seed}\nsweep:\n  param: {param}\n  values: [1, 2]\n"
    )
    doc = parse_config(text)
    assert parse_config(emit_config(doc)) == doc


def test_overrides():
    doc = parse_config("scenario:\n  users: 2\n", ["scenario.users=4", "solver.dc.restarts=3", "sweep.values=[1, 2]"])
    assert doc.scenario.users == 4 and doc.dc.restarts == 3 and doc.sweep.values == (1, 2)
    with pytest.raises(ConfigError) as exc:
        parse_config("", ["scenario.gamma=-2"])
    assert "scenario.gamma" in str(exc.value)
    with pytest.raises(ConfigError):
        parse_config("", ["nonsense"])


def test_schema_lists_units():
    keys = {k: u for k, _, u in schema_table()}
    assert keys["scenario.bandwidth_hz"] == "Hz" and keys["scenario.frame_s"] == "s"
    assert "J" in keys["scenario.transcode_energy_j"]


def test_instance_round_trip():
    inst = sample_realization(ScenarioConfig(users=3), 2).instance
    again = parse_instance(emit_instance(inst))
    assert again == inst and again.partition == inst.partition


def test_instance_errors():
    with pytest.raises(ConfigError):
        parse_instance("users: []\n")
    with pytest.raises(ConfigError):
        parse_instance("users:\n  - tiles: [[1, 1]]\n    colour: 1\n")
    with pytest.raises(ConfigError):
        parse_instance("video: {rows: 2, cols: 2}\nusers:\n  - tiles: [[5, 5]]\n")


def test_solution_dump_has_full_table(example1):
    sol = solve_no_transcode(example1)
    doc = yaml.safe_load(emit_solution("proposed_wo", sol))
    assert len(doc["allocation"]) == example1.channel.n_states * len(sol.allocation.streams)
    row = doc["allocation"][0]
    assert set(row) == {"state", "subset", "level", "t_s", "e_j"}
    assert doc["objective_j"] == pytest.approx(sol.energy)


def test_partition_command(capsys):
    assert main(["partition", str(EXAMPLE)]) == 0
    assert capsys.readouterr().out == EXAMPLE_OUTPUT


def test_format_partition(example1):
    assert format_partition(example1) == EXAMPLE_OUTPUT


def test_solve_single_user_no_transcoding(tmp_path, capsys):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("scenario:\n  users: 1\n")
    dump = tmp_path / "dump.yaml"
    assert main(["solve", "-c", str(cfg), "--scheme", "proposed_w", "--dump", str(dump)]) == 0
    out = yaml.safe_load(capsys.readouterr().out)
    assert main(["solve", "-c", str(cfg), "--scheme", "proposed_wo"]) == 0
    ref = yaml.safe_load(capsys.readouterr().out)
    assert out["objective_j"] == pytest.approx(ref["objective_j"], rel=1e-9)
    assert out["transcoding_energy_j"] == 0.0
    assert "allocation" in yaml.safe_load(dump.read_text())


def test_solve_instance_file(capsys):
    assert main(["solve", "--instance", str(EXAMPLE), "--scheme", "baseline_w"]) == 0
    assert yaml.safe_load(capsys.readouterr().out)["status"] == "optimal"


def test_sweep_twice_identical(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("scenario:\n  realizations: 3\nsweep:\n  param: K\n  values: [1, 2]\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "-c", str(cfg), "-o", str(a)]) == 0
    assert main(["sweep", "-c", str(cfg), "-o", str(b), "--set", "output.csv=ignored.csv"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_text().startswith("param,value,scheme,mean_energy_j,stderr_j,n_ok,n_total\n")


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("scenario:\n  gamma: -1\n")
    assert main(["sweep", "-c", str(bad)]) == 2
    assert "scenario.gamma" in capsys.readouterr().err
    assert main(["solve", "-c", str(tmp_path / "missing.yaml")]) == 2
    assert main(["solve", "--set", "solver.max_iter=1", "--scheme", "proposed_wo"]) == 1


def test_validate_command(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and out.count("PASS") >= 5


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "vrmcast", "partition", str(EXAMPLE)], capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout == EXAMPLE_OUTPUT


def test_config_command(capsys):
    assert main(["config", "--set", "scenario.users=2"]) == 0
    assert parse_config(capsys.readouterr().out).scenario.users == 2
