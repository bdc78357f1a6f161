import json

import pytest

from noisymaps import __version__
from noisymaps.cli import main
from noisymaps.config import (
    ConfigError,
    PROCESS_DEFAULTS,
    build_system,
    parse_config,
)

MINIMAL = """
[system]
map = "tent"
[analysis]
kind = "periodic"
period = 2
"""


class TestParseConfig:
    def test_minimal_fills_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.system == {"kind": "map", "name": "tent", "params": {}}
        assert cfg.process == PROCESS_DEFAULTS
        assert cfg.analysis == {"kind": "periodic", "period": 2}
        assert cfg.output == {"json": "report.json"}

    def test_round_trips_to_dict(self):
        cfg = parse_config(MINIMAL)
        d = cfg.to_dict()
        assert set(d) == {"system", "process", "analysis", "output"}
        assert d["analysis"]["period"] == 2

    def test_unknown_section_rejected_with_line(self):
        text = MINIMAL + "\n[extras]\nfoo = 1\n"
        with pytest.raises(ConfigError, match=r"line \d+: unknown section"):
            parse_config(text)

    def test_unknown_key_rejected_with_line(self):
        text = "[system]\nmap = \"tent\"\nflavor = 3\n[analysis]\nkind = \"simulate\"\n"
        with pytest.raises(ConfigError, match=r"line 3: unknown key 'flavor'"):
            parse_config(text)

    def test_unknown_analysis_key_fails_closed(self):
        text = MINIMAL + "grid = 17\n"
        with pytest.raises(ConfigError, match="unknown key 'grid'"):
            parse_config(text)

    def test_missing_sections(self):
        with pytest.raises(ConfigError, match=r"\[system\]"):
            parse_config("[analysis]\nkind = \"simulate\"\n")
        with pytest.raises(ConfigError, match=r"\[analysis\]"):
            parse_config("[system]\nmap = \"tent\"\n")

    def test_empty_analysis_block_rejected(self):
        text = "[system]\nmap = \"tent\"\n[analysis]\n"
        with pytest.raises(ConfigError, match="must name a kind"):
            parse_config(text)

    def test_unknown_kind_and_missing_required(self):
        with pytest.raises(ConfigError, match="unknown analysis kind"):
            parse_config("[system]\nmap = \"tent\"\n[analysis]\nkind = \"zippy\"\n")
        with pytest.raises(ConfigError, match="requires key 'period'"):
            parse_config("[system]\nmap = \"tent\"\n[analysis]\nkind = \"periodic\"\n")

    def test_toml_syntax_error(self):
        with pytest.raises(ConfigError, match="does not parse"):
            parse_config("[system\nmap = tent")

    def test_type_errors(self):
        bad = "[system]\nmap = \"tent\"\n[process]\ntrials = 1.5\n[analysis]\nkind = \"simulate\"\n"
        with pytest.raises(ConfigError, match="trials must be an integer"):
            parse_config(bad)
        bad = MINIMAL.replace('period = 2', 'period = true')
        with pytest.raises(ConfigError, match="period must be an integer"):
            parse_config(bad)

    def test_range_errors(self):
        bad = MINIMAL.replace("[analysis]", "[process]\ndelta = -0.1\n[analysis]")
        with pytest.raises(ConfigError, match="delta must be >= 0"):
            parse_config(bad)

    def test_unknown_gallery_name(self):
        with pytest.raises(ConfigError, match="unknown gallery name 'nosuch'"):
            parse_config(MINIMAL.replace('"tent"', '"nosuch"'))

    def test_map_seq_kind_mismatch(self):
        with pytest.raises(ConfigError, match="is a seq, not a map"):
            parse_config(MINIMAL.replace('"tent"', '"shrinking-spike"'))
        text = "[system]\nseq = \"tent\"\n[analysis]\nkind = \"simulate\"\n"
        with pytest.raises(ConfigError, match="is a map, not a seq"):
            parse_config(text)

    def test_map_and_seq_together_rejected(self):
        text = "[system]\nmap = \"tent\"\nseq = \"shrinking-spike\"\n" \
               "[analysis]\nkind = \"simulate\"\n"
        with pytest.raises(ConfigError, match="not both"):
            parse_config(text)

    def test_inline_map(self):
        text = (
            "[system]\nbreakpoints = [0.0, 0.5, 1.0]\nvalues = [0.0, 1.0, 0.0]\n"
            "[analysis]\nkind = \"periodic\"\nperiod = 1\n"
        )
        kind, obj = build_system(parse_config(text))
        assert kind == "map"
        assert obj.breakpoints == (0.0, 0.5, 1.0)

    def test_inline_map_validated(self):
        text = (
            "[system]\nbreakpoints = [0.0, 0.5]\nvalues = [0.0, 1.0, 0.0]\n"
            "[analysis]\nkind = \"simulate\"\n"
        )
        with pytest.raises(ConfigError, match="bad inline map"):
            parse_config(text)

    def test_builder_params_forwarded(self):
        text = (
            "[system]\nmap = \"truncated-tent\"\n[system.params]\nlam = 0.9\n"
            "[analysis]\nkind = \"simulate\"\n"
        )
        kind, obj = build_system(parse_config(text))
        assert obj.breakpoints[1] == pytest.approx(0.2)

    def test_bad_builder_params_rejected(self):
        text = (
            "[system]\nmap = \"tent\"\n[system.params]\nwobble = 2\n"
            "[analysis]\nkind = \"simulate\"\n"
        )
        with pytest.raises(ConfigError, match="rejected parameters"):
            build_system(parse_config(text))


def run_cli(tmp_path, *argv):
    return main(["--out", str(tmp_path), *argv])


def write_cfg(tmp_path, text, name="exp.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestRunVerb:
    def test_periodic_config_reports_the_orbit(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            MINIMAL + '[output]\njson = "out.json"\n',
        )
        assert run_cli(tmp_path, "run", cfg) == 0
        payload = json.loads((tmp_path / "out.json").read_text())
        assert payload["version"] == __version__
        assert payload["config"]["system"]["name"] == "tent"
        pts = payload["result"]["orbits"][0]["points"]
        assert pts == pytest.approx([0.4, 0.8], abs=1e-9)

    def test_validation_failure_is_exit_1(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, "[system]\nmap = \"tent\"\n[analysis]\n")
        assert run_cli(tmp_path, "run", cfg) == 1
        assert "error:" in capsys.readouterr().err

    def test_missing_file_is_exit_1(self, tmp_path, capsys):
        assert run_cli(tmp_path, "run", str(tmp_path / "absent.toml")) == 1
        assert "cannot read config" in capsys.readouterr().err

    def test_analysis_failure_is_exit_2_with_diagnostics(self, tmp_path):
        # the full tent has a single-band tail: level-1 split must fail
        cfg = write_cfg(
            tmp_path,
            "[system]\nmap = \"tent\"\n[analysis]\nkind = \"decompose\"\n"
            "max_level = 1\norbit_len = 10000\n"
            '[output]\njson = "fail.json"\n',
        )
        assert run_cli(tmp_path, "run", cfg) == 2
        payload = json.loads((tmp_path / "fail.json").read_text())
        assert payload["error"]["type"] == "DecompositionError"
        assert "diagnostics" in payload["error"]
        assert "result" not in payload

    def test_seed_and_trials_overrides_reach_report(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            "[system]\nmap = \"bistable\"\n[process]\ndelta = 0.05\nhorizon = 20\n"
            "[analysis]\nkind = \"simulate\"\n"
            '[output]\njson = "sim.json"\ncsv = "sim.csv"\n',
        )
        assert main(["--out", str(tmp_path), "--seed", "9", "--trials", "7",
                     "run", cfg]) == 0
        payload = json.loads((tmp_path / "sim.json").read_text())
        assert payload["config"]["process"]["master_seed"] == 9
        assert payload["config"]["process"]["trials"] == 7
        lines = (tmp_path / "sim.csv").read_text().splitlines()
        assert lines[0] == "trial,step,x"
        assert len(lines) == 1 + 7 * 21

    def test_byte_identical_reruns_and_worker_counts(self, tmp_path):
        text = (
            "[system]\nmap = \"bistable\"\n"
            "[process]\nx0 = 0.5\ndelta = 0.05\nhorizon = 100\ntrials = 40\n"
            "[analysis]\nkind = \"simulate\"\n"
            '[output]\njson = "r.json"\ncsv = "r.csv"\nsvg = "r.svg"\n'
        )
        outs = []
        for sub, workers in (("a", "1"), ("b", "1"), ("c", "8")):
            d = tmp_path / sub
            cfg = write_cfg(tmp_path, text, name=f"{sub}.toml")
            assert main(["--out", str(d), "--workers", workers, "run", cfg]) == 0
            outs.append(d)
        for name in ("r.json", "r.csv", "r.svg"):
            blobs = [(d / name).read_bytes() for d in outs]
            assert blobs[0] == blobs[1] == blobs[2]

    def test_csv_requested_for_static_analysis_fails(self, tmp_path, capsys):
        cfg = write_cfg(
            tmp_path,
            MINIMAL + '[output]\njson = "x.json"\ncsv = "x.csv"\n',
        )
        assert run_cli(tmp_path, "run", cfg) == 1
        assert "no trajectories" in capsys.readouterr().err

    def test_escape_analysis_runs(self, tmp_path):
        cfg = write_cfg(
            tmp_path,
            "[system]\nseq = \"shrinking-spike\"\n"
            "[process]\nx0 = 0.0\ndelta = 0.19\nhorizon = 10\ntrials = 500\n"
            "[analysis]\nkind = \"escape\"\nregion = [[0.8, 1.19]]\n"
            "within_steps = 10\n"
            '[output]\njson = "esc.json"\n',
        )
        assert run_cli(tmp_path, "run", cfg) == 0
        payload = json.loads((tmp_path / "esc.json").read_text())
        assert payload["result"]["estimate"] > 0.0


class TestFlagVerbs:
    def test_periodic_flags_match_config_run(self, tmp_path):
        assert run_cli(tmp_path, "periodic", "--map", "tent", "--period", "2") == 0
        payload = json.loads((tmp_path / "periodic-report.json").read_text())
        pts = payload["result"]["orbits"][0]["points"]
        assert pts == pytest.approx([0.4, 0.8], abs=1e-9)

    def test_simulate_writes_csv(self, tmp_path):
        assert main([
            "--out", str(tmp_path), "--trials", "3",
            "simulate", "--map", "tent", "--x0", "0.3", "--delta", "0.01",
            "--horizon", "5",
        ]) == 0
        lines = (tmp_path / "simulate-trajectories.csv").read_text().splitlines()
        assert lines[0] == "trial,step,x"
        assert len(lines) == 1 + 3 * 6

    def test_trap_region_parsing(self, tmp_path):
        # states are not clamped, so the basins must be padded by delta
        assert main([
            "--out", str(tmp_path), "--trials", "20",
            "trap", "--map", "bistable", "--x0", "0.5", "--delta", "0.05",
            "--horizon", "200", "--region=-0.05,0.2,0.8,1.05",
        ]) == 0
        payload = json.loads((tmp_path / "trap-report.json").read_text())
        assert payload["result"]["region"] == [[-0.05, 0.2], [0.8, 1.05]]
        assert payload["result"]["trap"] is True
        assert payload["result"]["n_entered"] == 20

    def test_odd_region_bounds_rejected(self, tmp_path, capsys):
        code = main([
            "--out", str(tmp_path), "trap", "--map", "tent", "--region", "0,0.2,0.8",
        ])
        assert code == 1
        assert "even number" in capsys.readouterr().err

    def test_chain_verb(self, tmp_path):
        assert main([
            "--out", str(tmp_path), "chain", "--map", "tent",
            "--start", "0.1", "--target-center", "0.9",
            "--target-radius", "0.025", "--delta-prime", "0.05",
        ]) == 0
        payload = json.loads((tmp_path / "chain-report.json").read_text())
        assert payload["result"]["found"] is True

    def test_liyorke_verb(self, tmp_path):
        assert main([
            "--out", str(tmp_path), "liyorke", "--map", "contraction",
            "--pairs", "50", "--horizon", "500",
            "--closeness", "0.001", "--separation", "0.1",
        ]) == 0
        payload = json.loads((tmp_path / "liyorke-report.json").read_text())
        assert payload["result"]["n_flagged"] == 0

    def test_bad_flag_is_exit_1(self, tmp_path, capsys):
        assert main(["periodic", "--map", "tent"]) == 1  # missing --period
        assert "required" in capsys.readouterr().err

    def test_bad_seed_rejected(self, tmp_path, capsys):
        code = main(["--seed", "-1", "--out", str(tmp_path),
                     "periodic", "--map", "tent", "--period", "1"])
        assert code == 1
        assert "--seed" in capsys.readouterr().err


class TestGalleryVerb:
    def test_list_names(self, capsys):
        assert main(["gallery"]) == 0
        out = capsys.readouterr().out
        for name in ("tent", "bistable", "trapped-tent", "shrinking-spike"):
            assert name in out

    def test_dump_map(self, capsys):
        assert main(["gallery", "ramp"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["breakpoints"] == [0.0, 0.5, 0.75, 1.0]
        assert payload["values"] == [0.0, 0.0, 1.0, 1.0]

    def test_dump_seq_includes_limit(self, capsys):
        assert main(["gallery", "shrinking-spike"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["kind"] == "seq"
        assert payload["limit"]["breakpoints"] == [0.0, 0.5, 0.75, 1.0]

    def test_unknown_name(self, capsys):
        assert main(["gallery", "nosuch"]) == 1
        assert "unknown gallery name" in capsys.readouterr().err


class TestPlotVerb:
    def test_plot_map(self, tmp_path):
        assert run_cli(tmp_path, "plot", "--map", "tent",
                       "--out-file", "tent.svg") == 0
        text = (tmp_path / "tent.svg").read_text()
        assert text.startswith("<?xml")
        assert 'viewBox="0 0 800 800"' in text

    def test_plot_inline_literal(self, tmp_path):
        assert run_cli(tmp_path, "plot", "--breakpoints", "0,0.5,1",
                       "--values", "0.3,0.3,0.3", "--out-file", "c.svg") == 0
        assert (tmp_path / "c.svg").exists()

    def test_plot_csv_roundtrip(self, tmp_path):
        assert main([
            "--out", str(tmp_path), "--trials", "2",
            "simulate", "--map", "tent", "--delta", "0.01", "--horizon", "4",
        ]) == 0
        assert run_cli(
            tmp_path, "plot", "--csv",
            str(tmp_path / "simulate-trajectories.csv"),
            "--out-file", "t.svg",
        ) == 0
        assert (tmp_path / "t.svg").exists()

    def test_malformed_csv_is_exit_1(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("wrong,header,here\n0,0,0.5\n")
        code = run_cli(tmp_path, "plot", "--csv", str(bad), "--out-file", "x.svg")
        assert code == 1
        assert "expected header" in capsys.readouterr().err

    def test_breakpoints_without_values_rejected(self, tmp_path, capsys):
        code = run_cli(tmp_path, "plot", "--breakpoints", "0,1",
                       "--out-file", "x.svg")
        assert code == 1
        assert "--values" in capsys.readouterr().err


class TestShippedConfigs:
    def test_all_shipped_configs_validate(self):
        import pathlib

        from noisymaps.config import load_config

        root = pathlib.Path(__file__).resolve().parent.parent / "configs"
        paths = sorted(root.glob("*.toml"))
        assert len(paths) >= 8
        for path in paths:
            load_config(path)  # must not raise

    def test_tent_period2_shipped_config(self, tmp_path):
        import pathlib

        root = pathlib.Path(__file__).resolve().parent.parent / "configs"
        assert run_cli(tmp_path, "run", str(root / "tent-period2.toml")) == 0
        payload = json.loads((tmp_path / "tent-period2.json").read_text())
        pts = payload["result"]["orbits"][0]["points"]
        assert pts == pytest.approx([0.4, 0.8], abs=1e-9)
        assert (tmp_path / "tent.svg").exists()
