import csv
import json

import numpy as np
import pytest

from rodbreak.cli import main

TWO_PI = 6.283185307179586


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return str(p)


def invoke(tmp_path, command, cfg, *extra, out="out"):
    out_dir = tmp_path / out
    code = main([command, "--config", write(tmp_path, cfg), "--out", str(out_dir), "--quiet", *extra])
    return code, out_dir


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestAnalyze:
    def test_peakon(self, tmp_path):
        cfg = {"gamma": 1, "grid": {"L": 80, "N": 2048}, "profile": {"kind": "peakon", "params": {"c": 1}}}
        code, out = invoke(tmp_path, "analyze", cfg)
        assert code == 0
        doc = json.loads((out / "criteria.json").read_text())
        bre = next(v for v in doc["verdicts"] if v["name"] == "brandolese")
        assert bre["triggered"] is False and bre["margin"] == 0.0
        assert doc["blowup_bound"] is None

    def test_gaussian(self, tmp_path):
        cfg = {"gamma": 1, "grid": {"L": 64, "N": 2048}, "profile": {"kind": "gaussian", "params": {"w": 1}}}
        code, out = invoke(tmp_path, "analyze", cfg)
        assert code == 0
        doc = json.loads((out / "criteria.json").read_text())
        bre = doc["verdicts"][0]
        assert bre["name"] == "brandolese" and bre["triggered"] is True
        assert bre["witness"] == pytest.approx(1.0, abs=1e-12)
        assert doc["blowup_bound"]["T_upper"] == pytest.approx(6.701166708895684, rel=1e-9)
        assert all(v["applicable"] for v in doc["verdicts"])

    def test_malformed_json(self, tmp_path):
        code, out = invoke(tmp_path, "analyze", '{"gamma": 1,')
        assert code == 2
        assert not out.exists()

    def test_unknown_key(self, tmp_path):
        cfg = {"gamma": 1, "grid": {"L": 64, "N": 2048}, "profile": {"kind": "zero"}, "colour": "red"}
        code, out = invoke(tmp_path, "analyze", cfg)
        assert code == 2 and not out.exists()

    def test_unknown_nested_key(self, tmp_path):
        cfg = {"gamma": 1, "grid": {"L": 64, "N": 2048, "M": 3}, "profile": {"kind": "zero"}}
        assert invoke(tmp_path, "analyze", cfg)[0] == 2

    @pytest.mark.parametrize("profile", [
        {"kind": "solitary_wave", "params": {"gamma": 2.0}},
        {"kind": "expression", "params": {"expr": "__import__('os')"}},
        {"kind": "gaussian", "params": {"w": -1}},
        {"kind": "extremal", "params": {}},
    ])
    def test_bad_profile(self, tmp_path, profile):
        cfg = {"gamma": 1, "grid": {"L": 64, "N": 256}, "profile": profile}
        code, out = invoke(tmp_path, "analyze", cfg)
        assert code == 2 and not out.exists()

    def test_bad_grid(self, tmp_path):
        cfg = {"gamma": 1, "grid": {"L": 64, "N": 100}, "profile": {"kind": "zero"}}
        assert invoke(tmp_path, "analyze", cfg)[0] == 2

    def test_output_dir_from_config(self, tmp_path):
        out = tmp_path / "from_cfg"
        cfg = {"gamma": 2, "grid": {"L": 40, "N": 256}, "profile": {"kind": "gaussian"}, "output_dir": str(out)}
        assert main(["analyze", "--config", write(tmp_path, cfg), "--quiet"]) == 0
        assert (out / "criteria.json").exists()


class TestSimulate:
    def test_zero(self, tmp_path):
        cfg = {"gamma": 1, "grid": {"L": 10, "N": 64}, "profile": {"kind": "zero"},
               "solver": {"dt_initial": 0.05, "t_end": 0.5}}
        code, out = invoke(tmp_path, "simulate", cfg, "--seed-grid", "4")
        assert code == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["status"] == "completed"
        assert summary["T_upper"] is None
        frames = sorted(out.glob("frame_*.csv"))
        assert len(frames) == 11
        for f in frames:
            assert all(float(r[1]) == 0.0 for r in read_rows(f)[1:])
        assert len(list(out.glob("trace_*.csv"))) == 4

    def test_bbm(self, tmp_path):
        cfg = {"gamma": 0, "grid": {"L": 80, "N": 512}, "profile": {"kind": "gaussian"},
               "solver": {"dt_initial": 0.05, "t_end": 50, "frame_stride": 100}}
        code, out = invoke(tmp_path, "simulate", cfg)
        assert code == 0
        assert json.loads((out / "summary.json").read_text())["status"] == "completed"
        rows = read_rows(out / "series.csv")
        assert rows[0] == ["t", "E", "F", "h1", "linf", "min_ux"]
        assert float(rows[-1][0]) == pytest.approx(50.0)

    def test_breaking_sine(self, tmp_path):
        cfg = {"gamma": 1, "grid": {"L": TWO_PI, "N": 2048},
               "profile": {"kind": "expression", "params": {"expr": "-10*sin(x)"}},
               "solver": {"dt_initial": 0.01, "t_end": 1.0}, "characteristics": {"seeds": [0.0]}}
        code, out = invoke(tmp_path, "simulate", cfg, "--seed-grid", "16")
        assert code == 0
        s = json.loads((out / "summary.json").read_text())
        assert s["status"] == "blowup_detected"
        assert s["monotonicity_ok"] is True
        assert s["estimated_T_star"] <= s["T_upper"]
        assert s["identity_residual_max"] < 1e-4
        rows = read_rows(out / "trace_000.csv")
        assert rows[0] == ["t", "q", "qx", "u", "ux", "A", "B", "residual"]

    def test_kinked_rejected(self, tmp_path):
        cfg = {"gamma": 1, "grid": {"L": 40, "N": 256}, "profile": {"kind": "peakon"},
               "solver": {"dt_initial": 0.01, "t_end": 1}}
        code, out = invoke(tmp_path, "simulate", cfg)
        assert code == 2 and not out.exists()

    def test_missing_solver(self, tmp_path):
        cfg = {"gamma": 1, "grid": {"L": 40, "N": 256}, "profile": {"kind": "gaussian"}}
        assert invoke(tmp_path, "simulate", cfg)[0] == 2

    def test_numerical_failure(self, tmp_path, monkeypatch):
        from rodbreak import solver

        def poisoned(self, uh, gamma, dt):
            return uh * np.nan
        monkeypatch.setattr(solver._Spectral, "rk4", poisoned)
        cfg = {"gamma": 1, "grid": {"L": 10, "N": 64}, "profile": {"kind": "gaussian"},
               "solver": {"dt_initial": 0.1, "t_end": 1}}
        code, out = invoke(tmp_path, "simulate", cfg)
        assert code == 3
        assert json.loads((out / "summary.json").read_text())["status"] == "numerical_failure"

    def test_sparse_frames_exit(self, tmp_path):
        cfg = {"gamma": 1, "grid": {"L": 16, "N": 1024}, "profile": {"kind": "gaussian", "params": {"c": 10}},
               "solver": {"dt_initial": 0.01, "t_end": 0.2, "frame_stride": 25}}
        code, _ = invoke(tmp_path, "simulate", cfg, "--seed-grid", "2")
        assert code == 3


class TestSweep:
    def test_beta_table(self, tmp_path):
        code, out = invoke(tmp_path, "sweep", {"flavor": "beta-table", "gamma_list": [4, 1, 3]})
        assert code == 0
        rows = read_rows(out / "sweep.csv")
        assert rows[0] == ["gamma", "beta"]
        got = [(float(a), float(b)) for a, b in rows[1:]]
        assert got == [(1.0, 1.0), (3.0, 0.0), (4.0, 0.5)]

    def test_beta_table_domain(self, tmp_path):
        assert invoke(tmp_path, "sweep", {"flavor": "beta-table", "gamma_list": [0.5]})[0] == 2

    def test_gaussian_all_trigger(self, tmp_path):
        cfg = {"grid": {"L": 32, "N": 1024}, "gamma_list": [3, 1, 2],
               "profile_list": [{"id": "g", "kind": "gaussian"}, {"id": "bump", "kind": "gaussian", "params": {"c": 2}}]}
        code, out = invoke(tmp_path, "sweep", cfg)
        assert code == 0
        rows = read_rows(out / "sweep.csv")
        assert rows[0] == ["gamma", "profile_id", "brandolese_margin", "triggered", "T_upper",
                           "estimated_T_star", "status"]
        body = rows[1:]
        assert len(body) == 6
        assert [(r[0], r[1]) for r in body] == sorted((r[0], r[1]) for r in body)
        assert all(r[3] == "true" for r in body)
        assert all(float(r[4]) > 0 for r in body)

    def test_with_solver(self, tmp_path):
        cfg = {"grid": {"L": 16, "N": 1024}, "gamma_list": [2],
               "profile_list": [{"id": "big", "kind": "gaussian", "params": {"c": 10}}],
               "solver": {"dt_initial": 0.01, "t_end": 0.5}}
        code, out = invoke(tmp_path, "sweep", cfg)
        assert code == 0
        row = read_rows(out / "sweep.csv")[1]
        assert row[6] == "blowup_detected"
        assert float(row[5]) <= float(row[4])

    def test_empty_gamma_list(self, tmp_path):
        cfg = {"grid": {"L": 32, "N": 64}, "gamma_list": [], "profile_list": [{"kind": "zero"}]}
        code, out = invoke(tmp_path, "sweep", cfg)
        assert code == 2 and not out.exists()

    def test_duplicate_ids(self, tmp_path):
        cfg = {"grid": {"L": 32, "N": 64}, "gamma_list": [1],
               "profile_list": [{"id": "a", "kind": "zero"}, {"id": "a", "kind": "gaussian"}]}
        assert invoke(tmp_path, "sweep", cfg)[0] == 2

    def test_byte_identical_reruns(self, tmp_path):
        cfg = {"grid": {"L": 32, "N": 512}, "gamma_list": [1, 2.5],
               "profile_list": [{"id": "g", "kind": "gaussian"}, {"id": "p", "kind": "peakon"}]}
        _, a = invoke(tmp_path, "sweep", cfg, out="a")
        _, b = invoke(tmp_path, "sweep", cfg, out="b")
        assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()


def test_analyze_rerun_identical(tmp_path):
    cfg = {"gamma": 1, "grid": {"L": 40, "N": 512}, "profile": {"kind": "from_potential",
           "params": {"bumps": [{"c": 1, "x0": -1}, {"c": -1, "x0": 1}]}}}
    _, a = invoke(tmp_path, "analyze", cfg, out="a")
    _, b = invoke(tmp_path, "analyze", cfg, out="b")
    assert (a / "criteria.json").read_bytes() == (b / "criteria.json").read_bytes()


def test_missing_config_file(tmp_path):
    assert main(["analyze", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "o"), "--quiet"]) == 2


def test_overflow_is_numerical(tmp_path):
    cfg = {"gamma": 1, "grid": {"L": 10, "N": 64},
           "profile": {"kind": "expression", "params": {"expr": "1e200*exp(-x*x)"}}}
    assert invoke(tmp_path, "analyze", cfg)[0] == 3
