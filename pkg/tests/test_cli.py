import csv
import json
import math
import os

import numpy as np
import pytest

from su2mzi import __version__
from su2mzi.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_VERIFY, build_config, format_value, main


def read_csv(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = [line for line in lines if not line.startswith("#")]
    meta = "\n".join(line[2:] for line in lines if line.startswith("# "))
    rows = list(csv.reader(body))
    return rows[0], [[float(v) for v in r] for r in rows[1:]], json.loads(meta)


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return doc["columns"], [[float(v) for v in r] for r in doc["rows"]], doc["metadata"]


def run(tmp_path, *argv, name="out"):
    path = tmp_path / name
    code = main([*argv, "--out", str(path)])
    return code, path


class TestFormatting:
    @pytest.mark.parametrize(
        "value, text",
        [(math.inf, "inf"), (0.1, "0.10000000000000001"), (2.0, "2"), (True, "1"), (np.int64(3), "3")],
    )
    def test_values(self, value, text):
        assert format_value(value) == text

    def test_nan_never_serialized(self):
        with pytest.raises(ValueError):
            format_value(math.nan)

    def test_round_trip_is_exact(self, rng):
        for x in rng.normal(size=200) * 10.0 ** rng.integers(-30, 30, size=200):
            assert float(format_value(x)) == x


class TestQfiSweep:
    def test_columns_and_shape(self, tmp_path):
        code, path = run(tmp_path, "qfi-sweep")
        assert code == EXIT_OK
        cols, rows, meta = read_csv(path)
        assert cols[:5] == ["tau_sq", "f_a", "f_b", "f_c", "f_sql"]
        assert len(rows) == 101
        assert meta["version"] == __version__
        assert meta["config"]["tau_sq"] == "0.0:1.0:101"
        f_c = np.array([r[cols.index("f_c")] for r in rows])
        assert int(np.argmax(f_c)) == 50
        np.testing.assert_allclose(f_c, f_c[::-1], atol=1e-12)
        f_a = np.array([r[cols.index("f_a")] for r in rows])
        assert np.all(f_a >= f_c - 1e-9)

    def test_csv_and_json_agree(self, tmp_path):
        _, c = run(tmp_path, "qfi-sweep", "--j", "3", "--tau-sq", "0:1:21", "--oracle", name="a.csv")
        _, j = run(tmp_path, "qfi-sweep", "--j", "3", "--tau-sq", "0:1:21", "--oracle", "--format", "json", name="a.json")
        cc, rc, _ = read_csv(c)
        cj, rj, _ = read_json(j)
        assert cc == cj
        for a, b in zip(rc, rj):
            for x, y in zip(a, b):
                assert x == y or abs(x - y) <= 1e-15 * max(abs(x), 1.0)

    def test_oracle_columns_track_closed_forms(self, tmp_path):
        _, path = run(tmp_path, "qfi-sweep", "--tau-sq", "0.05:0.95:7", "--oracle", "--lambda-phase", "0.4")
        cols, rows, _ = read_csv(path)
        for r in rows:
            for k in "abc":
                assert r[cols.index(f"oracle_f_{k}")] == pytest.approx(r[cols.index(f"f_{k}")], rel=1e-6)

    def test_zero_lambda_is_degenerate(self, tmp_path):
        _, path = run(tmp_path, "qfi-sweep", "--lambda-mag", "0", "--tau-sq", "0:1:5")
        cols, rows, _ = read_csv(path)
        for r in rows:
            assert r[cols.index("f_a")] == r[cols.index("f_b")] == r[cols.index("f_c")] == 0
            assert r[cols.index("degenerate")] == 1
            assert math.isinf(r[cols.index("qcrb_c")])

    def test_workers_do_not_change_output(self, tmp_path):
        _, a = run(tmp_path, "qfi-sweep", "--oracle", "--tau-sq", "0:1:11", name="serial")
        _, b = run(tmp_path, "qfi-sweep", "--oracle", "--tau-sq", "0:1:11", "--workers", "4", name="pool")
        assert a.read_bytes() == b.read_bytes()


class TestSensitivitySweep:
    def test_balanced_optimum_reaches_bound(self, tmp_path):
        _, path = run(tmp_path, "sensitivity-sweep", "--scheme", "di", "smi")
        cols, rows, _ = read_csv(path)
        assert len(rows) == 2000
        qc = rows[0][cols.index("qcrb_c")]
        for s in ("di", "smi"):
            best = min(r[cols.index(f"delta_phi_{s}")] for r in rows)
            assert best == pytest.approx(qc, rel=1e-2)

    def test_unbalanced_misses_bound(self, tmp_path):
        _, path = run(tmp_path, "sensitivity-sweep", "--tau-sq", "0.9", "--tau-p-sq", "0.1", "--scheme", "smi", "di")
        cols, rows, _ = read_csv(path)
        qc = rows[0][cols.index("qcrb_c")]
        for s in ("smi", "di"):
            assert min(r[cols.index(f"delta_phi_{s}")] for r in rows) > qc

    def test_pi_row_is_divergent(self, tmp_path):
        _, path = run(tmp_path, "sensitivity-sweep", "--phi-stop", str(math.pi), "--phi-count", "3", "--scheme", "smi", "di")
        text = path.read_text()
        cols, rows, _ = read_csv(path)
        last = rows[-1]
        assert last[cols.index("phi")] == pytest.approx(math.pi)
        for s in ("smi", "di"):
            assert math.isinf(last[cols.index(f"delta_phi_{s}")])
            assert last[cols.index(f"divergent_{s}")] == 1
        assert "nan" not in text.lower()

    def test_oracle_columns(self, tmp_path):
        _, path = run(tmp_path, "sensitivity-sweep", "--phi-count", "9", "--phi-start", "0.2", "--phi-stop", "3.0", "--oracle",
                      "--tau-sq", "0.3", "--tau-p-sq", "0.6", "--format", "json")
        cols, rows, _ = read_json(path)
        for r in rows:
            for s in ("smi", "di", "bh"):
                closed = r[cols.index(f"delta_phi_{s}")]
                if math.isfinite(closed) and closed < 1e4:
                    assert r[cols.index(f"oracle_{s}")] == pytest.approx(closed, rel=1e-5)

    def test_homodyne_two_param_rejected(self, tmp_path):
        code, path = run(tmp_path, "sensitivity-sweep", "--scenario", "c")
        assert code == EXIT_CONFIG
        assert not path.exists()

    def test_intensity_only_two_param_allowed(self, tmp_path):
        code, _ = run(tmp_path, "sensitivity-sweep", "--scenario", "c", "--scheme", "di", "--phi-count", "5")
        assert code == EXIT_OK


class TestStateInfo:
    def test_half_spin(self, tmp_path):
        _, path = run(tmp_path, "state-info", "--j", "1/2")
        cols, rows, meta = read_csv(path)
        np.testing.assert_allclose([r[cols.index("amplitude_re")] for r in rows], [0.7071067811865476] * 2, atol=1e-15)
        assert float(meta["moments"]["nu_re"]) == pytest.approx(0.5)

    def test_spin_one_distribution(self, tmp_path):
        _, path = run(tmp_path, "state-info", "--j", "1", "--format", "json")
        cols, rows, meta = read_json(path)
        probs = [r[cols.index("probability")] for r in rows]
        np.testing.assert_allclose(probs, [0.25, 0.5, 0.25], atol=1e-15)
        np.testing.assert_allclose(probs, [r[cols.index("binomial")] for r in rows], atol=1e-15)
        assert float(meta["moments"]["var_n"]) == pytest.approx(0.5)

    def test_zero_lambda(self, tmp_path):
        _, path = run(tmp_path, "state-info", "--j", "2", "--lambda-mag", "0")
        cols, rows, _ = read_csv(path)
        assert [r[cols.index("probability")] for r in rows] == [1, 0, 0, 0, 0]


class TestVerify:
    def test_report_is_deterministic(self, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        assert main(["verify", "--seed", "7", "--samples", "8", "--out", str(a)]) == EXIT_OK
        assert main(["verify", "--seed", "7", "--samples", "8", "--workers", "3", "--out", str(b)]) == EXIT_OK
        assert a.read_bytes() == b.read_bytes()
        report = json.loads(a.read_text())
        assert report["passed"] and report["seed"] == 7
        assert all(s["passed"] for s in report["suites"].values())

    def test_zero_tolerance_fails_with_deviations(self, tmp_path):
        code, path = run(tmp_path, "verify", "--tolerance", "0", "--samples", "4")
        assert code == EXIT_VERIFY
        report = json.loads(path.read_text())
        assert not report["passed"]
        failed = [s for s in report["suites"].values() if not s["passed"]]
        assert failed and all(s["max_deviation"] > 0 for s in failed)


class TestConfig:
    def test_file_then_flags(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"j": "3/2", "lambda_mag": 2.0, "tau_sq": "0.1:0.9:3", "format": "json"}))
        code, path = run(tmp_path, "qfi-sweep", "--config", str(cfg_path), "--lambda-mag", "0.5")
        assert code == EXIT_OK
        _, rows, meta = read_json(path)
        assert meta["config"]["j"] == 1.5
        assert meta["config"]["lambda_mag"] == 0.5
        assert len(rows) == 3

    def test_defaults(self):
        cfg = build_config("sensitivity-sweep", {}, {})
        assert cfg.tau_sq == 0.5 and cfg.phi_count == 2000 and cfg.phi_l is None

    @pytest.mark.parametrize(
        "argv",
        [
            ["qfi-sweep", "--j", "0.3"],
            ["qfi-sweep", "--tau-sq", "0.5:0.2:4"],
            ["qfi-sweep", "--tau-sq", "0:1:1"],
            ["qfi-sweep", "--tau-sq", "1.5"],
            ["sensitivity-sweep", "--tau-sq", "0:1:5"],
            ["sensitivity-sweep", "--phi-count", "1"],
            ["sensitivity-sweep", "--phi-start", "2", "--phi-stop", "1"],
            ["state-info", "--lambda-mag", "-1"],
            ["qfi-sweep", "--scenario", "d"],
            ["qfi-sweep", "--no-such-flag"],
        ],
    )
    def test_invalid(self, tmp_path, argv, capsys):
        code, path = run(tmp_path, *argv)
        assert code == EXIT_CONFIG
        assert not path.exists()
        assert capsys.readouterr().err

    def test_unknown_config_key(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"jj": 1}))
        assert main(["qfi-sweep", "--config", str(cfg_path)]) == EXIT_CONFIG

    def test_malformed_config(self, tmp_path):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text("{not json")
        assert main(["qfi-sweep", "--config", str(cfg_path)]) == EXIT_CONFIG


class TestIo:
    def test_missing_directory(self, tmp_path):
        code = main(["qfi-sweep", "--out", str(tmp_path / "nope" / "x.csv")])
        assert code == EXIT_IO

    def test_missing_config_file(self, tmp_path):
        assert main(["qfi-sweep", "--config", str(tmp_path / "absent.json")]) == EXIT_IO

    def test_no_temporary_files_left(self, tmp_path):
        run(tmp_path, "qfi-sweep", "--tau-sq", "0:1:3")
        assert sorted(os.listdir(tmp_path)) == ["out"]

    def test_stdout(self, capsys):
        assert main(["state-info", "--j", "1/2"]) == EXIT_OK
        assert capsys.readouterr().out.startswith("eta,amplitude_re")
