import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rrcollapse import __version__
from rrcollapse.cli import emit_plot_data, main, parse_config, read_trace, write_trace
from rrcollapse.exceptions import ConfigError, ConfigParseError, OutputError, UnknownObservableError
from rrcollapse.trace import TraceRecord


def _config(tmp_path, data, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data) if not isinstance(data, str) else data)
    return path


TRACE = [
    TraceRecord(0.0, {"p_0": 0.1, "x_mean": -1.5}),
    TraceRecord(0.5, {"p_0": 0.2, "x_mean": 1e-300}),
    TraceRecord(1.0, {"p_0": 1 / 3, "x_mean": 2.0}),
]


class TestParseConfig:
    def test_defaults_applied(self, tmp_path):
        cfg = parse_config(_config(tmp_path, {"experiment": "fermi_decay"}))
        assert cfg.parameters["A"] == 1.0
        assert cfg.seed == 0

    def test_override_precedence(self, tmp_path):
        path = _config(tmp_path, {"experiment": "fermi_decay", "parameters": {"A": 1.0}})
        assert parse_config(path, ["A=2.0"]).parameters["A"] == 2.0
        assert parse_config(path, ["parameters.A=3"]).parameters["A"] == 3.0
        assert parse_config(path, ["seed=5"]).seed == 5

    def test_string_override(self, tmp_path):
        path = _config(tmp_path, {"experiment": "ehrenfest_check"})
        assert parse_config(path, ["potential=free"]).parameters["potential"] == "free"

    def test_bogus_experiment(self, tmp_path):
        with pytest.raises(ConfigError, match="valid names: fermi_decay"):
            parse_config(_config(tmp_path, {"experiment": "bogus"}))

    def test_missing_experiment(self, tmp_path):
        with pytest.raises(ConfigError, match="missing"):
            parse_config(_config(tmp_path, {"seed": 1}))

    def test_malformed_json_location(self, tmp_path):
        path = _config(tmp_path, '{\n  "experiment": "fermi_decay",\n}')
        with pytest.raises(ConfigParseError) as info:
            parse_config(path)
        assert (info.value.line, info.value.column) == (3, 1)
        assert ":3:1:" in str(info.value)

    def test_unknown_top_level_key(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown config key"):
            parse_config(_config(tmp_path, {"experiment": "fermi_decay", "verbose": True}))

    def test_bad_override(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(_config(tmp_path, {"experiment": "fermi_decay"}), ["A"])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            parse_config(tmp_path / "absent.json")


class TestWriteTrace:
    def test_empty_trace_header_only(self, tmp_path):
        path = write_trace([], tmp_path / "t.csv")
        assert path.read_bytes() == b"t\n"

    def test_line_count_and_header(self, tmp_path):
        data = write_trace(TRACE, tmp_path / "t.csv").read_bytes()
        assert b"\r" not in data
        lines = data.decode("utf-8").split("\n")
        assert lines[-1] == ""
        assert len(lines) - 1 == 4
        assert lines[0] == "t,p_0,x_mean"
        assert lines[3] == "1.0,0.3333333333333333,2.0"

    def test_round_trip_exact(self, tmp_path):
        path = write_trace(TRACE, tmp_path / "t.csv")
        assert read_trace(path) == TRACE

    def test_io_error(self, tmp_path):
        with pytest.raises(OutputError, match="missing"):
            write_trace(TRACE, tmp_path / "missing" / "t.csv")


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(allow_nan=False, allow_infinity=False), min_size=1, max_size=20))
def test_round_trip_property(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("rt") / "t.csv"
    trace = [TraceRecord(float(i), {"v": v}) for i, v in enumerate(values)]
    back = read_trace(write_trace(trace, path))
    assert all(math.copysign(1, a["v"]) == math.copysign(1, b["v"]) and a["v"] == b["v"]
               for a, b in zip(trace, back))


class TestPlotData:
    def test_two_observables(self, tmp_path):
        out = emit_plot_data(TRACE, ["p_0", "x_mean"], tmp_path)
        assert [p.name for p in out.data_files] == ["plot_p_0.dat", "plot_x_mean.dat"]
        rows = out.data_files[0].read_text().splitlines()
        assert rows[0] == "# t p_0"
        assert rows[1:] == ["0.0 0.1", "0.5 0.2", "1.0 0.3333333333333333"]
        script = out.script.read_text()
        assert "plot_p_0.dat" in script and "plot_x_mean.dat" in script

    def test_missing_observable(self, tmp_path):
        with pytest.raises(UnknownObservableError, match="available: p_0, x_mean"):
            emit_plot_data(TRACE, ["E_mean"], tmp_path)


class TestMain:
    def test_version_and_list(self, capsys):
        assert main(["version"]) == 0
        assert capsys.readouterr().out.strip() == __version__
        assert main(["list-experiments"]) == 0
        assert "two_well_localization" in capsys.readouterr().out

    def test_run_writes_everything(self, tmp_path):
        cfg = _config(tmp_path, {"experiment": "fermi_decay"})
        out = tmp_path / "out"
        assert main(["run", str(cfg), "--set", "A=2.0", "--out", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config_echo"]["parameters"] == {"p2_initial": 0.99, "A": 2.0, "t_max": 20.0, "dt": 0.01}
        assert manifest["config_echo"]["sample_interval"] == 10
        assert manifest["artifact_version"] == __version__
        assert manifest["files"]
        for name in manifest["files"]:
            assert (out / name).stat().st_size > 0
        assert "figure.png" in manifest["files"]
        assert manifest["summary"]["turning_point_t"] == pytest.approx(math.log(99) / 2, abs=0.01)

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RR_COLLAPSE_OUT", str(tmp_path / "env_out"))
        cfg = _config(tmp_path, {"experiment": "runaway_demo"})
        assert main(["run", str(cfg)]) == 0
        assert (tmp_path / "env_out" / "trace.csv").exists()

    def test_usage_error_one_line(self, tmp_path, capsys):
        cfg = _config(tmp_path, {"experiment": "bogus"})
        assert main(["run", str(cfg), "--out", str(tmp_path)]) == 2
        err = capsys.readouterr().err
        assert err.count("\n") == 1 and "bogus" in err

    def test_failure_exit_code(self, tmp_path, capsys):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        cfg = _config(tmp_path, {"experiment": "fermi_decay"})
        assert main(["run", str(cfg), "--out", str(blocker / "sub")]) == 1
        assert capsys.readouterr().err.count("\n") == 1

    def test_runtime_error_exit_code(self, tmp_path, capsys):
        cfg = _config(tmp_path, {"experiment": "fermi_decay", "parameters": {"A": 20.0}})
        assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 1
        assert "does not resolve" in capsys.readouterr().err

    def test_bit_identical_reruns(self, tmp_path):
        cfg = _config(tmp_path, {"experiment": "three_level_cascade", "seed": 3})
        main(["run", str(cfg), "--out", str(tmp_path / "a")])
        main(["run", str(cfg), "--out", str(tmp_path / "b")])
        assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()

    def test_bad_arguments(self):
        assert main(["frobnicate"]) == 2
