import json
import os

import numpy as np
import pytest

from qflab.cli import ConfigError, RunConfig, main, parse_config


class TestParseConfig:
    def test_empty_file_gives_defaults(self, tmp_path):
        cfgfile = tmp_path / "empty.cfg"
        cfgfile.write_text("")
        cfg = parse_config(str(cfgfile))
        assert (cfg.d, cfg.L, cfg.spins) == (1, 64, 1)
        assert cfg.beta == 1.0 and cfg.disorder == 4.0 and cfg.eps == 1.0
        assert cfg.window == "full" and cfg.seed == 0

    def test_no_file_gives_defaults(self):
        cfg = parse_config(None)
        assert cfg == RunConfig()

    def test_eps_range_enforced(self):
        with pytest.raises(ConfigError, match=r"eps must lie in \(0, 1\]"):
            parse_config(None, {"eps": "1.5"})

    def test_unknown_key_with_line_number(self, tmp_path):
        cfgfile = tmp_path / "bad.cfg"
        cfgfile.write_text("L = 32\nwibble = 7\n")
        with pytest.raises(ConfigError, match=r"bad.cfg:2.*wibble"):
            parse_config(str(cfgfile))

    def test_malformed_line_reported(self, tmp_path):
        cfgfile = tmp_path / "bad.cfg"
        cfgfile.write_text("just words\n")
        with pytest.raises(ConfigError, match=r"bad.cfg:1"):
            parse_config(str(cfgfile))

    def test_bad_value_reported(self, tmp_path):
        cfgfile = tmp_path / "bad.cfg"
        cfgfile.write_text("L = not_a_number\n")
        with pytest.raises(ConfigError, match="cannot parse"):
            parse_config(str(cfgfile))

    def test_override_beats_file(self, tmp_path):
        cfgfile = tmp_path / "c.cfg"
        cfgfile.write_text("L = 32\nbeta = 2.0\n")
        cfg = parse_config(str(cfgfile), {"L": "16"})
        assert cfg.L == 16 and cfg.beta == 2.0

    def test_comments_and_blank_lines(self, tmp_path):
        cfgfile = tmp_path / "c.cfg"
        cfgfile.write_text("# a comment\n\nL = 24\n")
        assert parse_config(str(cfgfile)).L == 24

    def test_tuple_keys(self):
        cfg = parse_config(None, {"gaps": "2,4,8", "s_fracs": "0,1"})
        assert cfg.gaps == (2, 4, 8)
        assert cfg.s_fracs == (0.0, 1.0)

    def test_window_parsing(self):
        cfg = parse_config(None, {"window": "-1.5,2.0"})
        w = cfg.energy_window()
        assert w.lo == -1.5 and w.hi == 2.0
        with pytest.raises(ConfigError):
            parse_config(None, {"window": "2.0,-1.0"})

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="does not exist"):
            parse_config("/nonexistent/path.cfg")


class TestThreads:
    def test_env_variable_honoured(self, monkeypatch):
        monkeypatch.setenv("QFLAB_THREADS", "3")
        assert parse_config(None).effective_threads() == 3

    def test_flag_beats_env(self, monkeypatch):
        monkeypatch.setenv("QFLAB_THREADS", "3")
        assert parse_config(None, {"threads": 5}).effective_threads() == 5

    def test_bad_env_rejected(self, monkeypatch):
        monkeypatch.setenv("QFLAB_THREADS", "lots")
        with pytest.raises(ConfigError):
            parse_config(None).effective_threads()


def run_cli(args):
    return main(args)


class TestSubcommands:
    def test_usage_error_exit_code(self, tmp_path, capsys):
        code = run_cli(["condition", "--set", "eps=2.0", "--out", str(tmp_path)])
        assert code == 2
        assert "eps" in capsys.readouterr().err

    def test_condition_outputs(self, tmp_path):
        out = tmp_path / "run"
        code = run_cli([
            "condition", "--out", str(out), "--set", "samples=4", "--set", "L=24",
            "--set", "t_max=8", "--set", "r_max=10",
        ])
        assert code == 0
        assert (out / "curve.csv").is_file()
        assert (out / "curve.png").is_file()
        assert (out / "run_meta.json").is_file()
        report = json.loads((out / "report.json").read_text())
        assert report["command"] == "condition"
        assert report["config"]["L"] == 24
        assert "threads" not in report["config"]
        header = (out / "curve.csv").read_text().splitlines()[0]
        assert header == "R,mean,stderr,n"

    def test_condition_byte_identical_across_threads(self, tmp_path):
        outs = []
        for threads in (1, 4):
            out = tmp_path / f"t{threads}"
            code = run_cli([
                "condition", "--out", str(out), "--threads", str(threads),
                "--set", "samples=4", "--set", "L=16", "--set", "t_max=4",
                "--set", "r_max=6",
            ])
            assert code == 0
            outs.append(out)
        assert (outs[0] / "curve.csv").read_bytes() == (outs[1] / "curve.csv").read_bytes()
        assert (outs[0] / "report.json").read_bytes() == (outs[1] / "report.json").read_bytes()

    def test_det_decay_runs(self, tmp_path):
        out = tmp_path / "det"
        code = run_cli([
            "det-decay", "--out", str(out), "--set", "samples=4", "--set", "L=32",
            "--set", "t_max=8", "--set", "r_max=10", "--set", "n_det=2",
            "--set", "gaps=2,5",
        ])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["experiment"]["bound_pass_rate"] == 1.0
        assert (out / "decay.csv").is_file()
        assert (out / "decay.png").is_file()

    def test_pf_decay_runs(self, tmp_path):
        out = tmp_path / "pf"
        code = run_cli([
            "pf-decay", "--out", str(out), "--set", "samples=4", "--set", "L=32",
            "--set", "t_max=8", "--set", "r_max=10", "--set", "n_pf=1",
            "--set", "spacings=2,5",
        ])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["experiment"]["kind"] == "pfaffian-decay"

    def test_verify_runs(self, tmp_path, capsys):
        out = tmp_path / "verify"
        code = run_cli(["verify", "--out", str(out)])
        assert code == 0
        text = capsys.readouterr().out
        assert "[PASS]" in text and "[FAIL]" not in text
        report = json.loads((out / "report.json").read_text())
        assert report["all_passed"] is True

    def test_hadamard_runs_small(self, tmp_path):
        out = tmp_path / "had"
        code = run_cli([
            "hadamard", "--out", str(out),
            "--set", "h_pair_count=2", "--set", "h_interior=2",
            "--set", "h_span_factor=4", "--set", "h_spacing_frac=0.25",
        ])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["convexity"]["passed"] is True
        assert report["boundary"]["passed"] is True
        assert (out / "convexity.csv").is_file()
        assert (out / "convexity.png").is_file()

    def test_det_decay_disjoint_window_trivial_pass(self, tmp_path):
        out = tmp_path / "disjoint"
        code = run_cli([
            "det-decay", "--out", str(out), "--set", "window=500,600",
            "--set", "samples=4", "--set", "L=24", "--set", "t_max=8",
            "--set", "r_max=8", "--set", "n_det=2", "--set", "gaps=2,4",
        ])
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert report["experiment"]["violations"] == 0
        assert all(c["mean"] == 0.0 for c in report["experiment"]["checks"])

    def test_condition_disjoint_window_reports_fit_error(self, tmp_path, capsys):
        out = tmp_path / "nofit"
        code = run_cli([
            "condition", "--out", str(out), "--set", "window=500,600",
            "--set", "samples=4", "--set", "L=24", "--set", "t_max=4",
            "--set", "r_max=8",
        ])
        assert code == 2
        assert "positive points" in capsys.readouterr().err

    def test_seed_flag_changes_outputs(self, tmp_path):
        texts = []
        for seed in (0, 1):
            out = tmp_path / f"s{seed}"
            run_cli(["condition", "--out", str(out), "--seed", str(seed),
                     "--set", "samples=4", "--set", "L=16", "--set", "t_max=4",
                     "--set", "r_max=6"])
            texts.append((out / "curve.csv").read_text())
        assert texts[0] != texts[1]
