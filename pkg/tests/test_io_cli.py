import json
import math

import numpy as np
import pytest

from collrat.cli import main
from collrat.errors import DataError, ResourceLimitError
from collrat.inference import aggregate
from collrat.io import emit_report, load_config, parse_responses, scan_subsets, write_responses
from collrat.core import OptionSet
from collrat.inference import PanelDataset


TOY = """subject,option_a,option_b,choice
s1,apple,banana,a
s1,apple,cherry,b
s1,banana,cherry,a
s2,banana,apple,a
s2,apple,cherry,a
s2,cherry,banana,b
"""


def _write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestParsing:
    def test_toy_file(self, tmp_path):
        data = parse_responses(_write(tmp_path, TOY))
        assert data.n_subjects == 2
        assert data.options.labels == ("apple", "banana", "cherry")
        # s2 row "banana,apple,a" means banana chosen: canonical response 0
        i = data.subjects.index("s2")
        assert data.rho_bar[i, 0] == 0.0
        # s2 row "cherry,banana,b" means banana chosen: canonical response 1
        assert data.rho_bar[i, 2] == 1.0

    def test_repeats_accumulate(self, tmp_path):
        text = TOY + "s1,apple,banana,b\n"
        data = parse_responses(_write(tmp_path, text))
        i = data.subjects.index("s1")
        assert data.counts[i, 0] == 2
        assert data.rho_bar[i, 0] == pytest.approx(0.5)

    def test_explicit_repeat_duplicates_rejected(self, tmp_path):
        text = (
            "subject,option_a,option_b,choice,repeat\n"
            "s1,apple,banana,a,0\n"
            "s1,banana,apple,b,0\n"
        )
        with pytest.raises(DataError) as err:
            parse_responses(_write(tmp_path, text))
        assert "duplicate" in str(err.value)

    def test_malformed_row_reports_line(self, tmp_path):
        text = "subject,option_a,option_b,choice\ns1,apple,banana\n"
        with pytest.raises(DataError) as err:
            parse_responses(_write(tmp_path, text))
        assert ":2:" in str(err.value)

    def test_bad_choice_letter(self, tmp_path):
        text = "subject,option_a,option_b,choice\ns1,apple,banana,x\n"
        with pytest.raises(DataError):
            parse_responses(_write(tmp_path, text))

    def test_unknown_label_with_explicit_options(self, tmp_path):
        path = _write(tmp_path, TOY)
        with pytest.raises(DataError) as err:
            parse_responses(path, labels=("apple", "banana"))
        assert "cherry" in str(err.value)

    def test_missing_file(self):
        with pytest.raises(DataError):
            parse_responses("/nonexistent/responses.csv")

    def test_roundtrip_identity(self, tmp_path):
        data = parse_responses(_write(tmp_path, TOY))
        out = tmp_path / "echo.csv"
        write_responses(data, out)
        back = parse_responses(out)
        assert back.subjects == data.subjects
        assert np.array_equal(back.counts, data.counts)
        assert np.allclose(back.rho_bar, data.rho_bar)


def _snack_like_panel(n=17, seed=0):
    rng = np.random.default_rng(seed)
    m = n * (n - 1) // 2
    opts = OptionSet(tuple(f"snack{i:02d}" for i in range(n)))
    N = 31
    rho = rng.random((N, m))
    rb = rng.binomial(1, rho).astype(float)
    return PanelDataset(opts, tuple(f"s{i}" for i in range(N)), rb, np.ones((N, m), int))


class TestScan:
    def test_totals_match_binomials(self):
        data = _snack_like_panel()
        reports = scan_subsets(data, sizes=(3, 4, 5))
        assert [r.total for r in reports] == [680, 2380, 6188]
        for r in reports:
            for rate in r.violation_rates.values():
                assert 0.0 <= rate <= 1.0

    def test_sixteen_options_per_reference(self):
        data = _snack_like_panel(n=16, seed=1)
        reports = scan_subsets(data, sizes=(3,))
        assert reports[0].total == 560

    def test_single_scalable_agent_never_violates(self):
        # one agent whose rates follow a scalable rule: no individual violations
        n = 6
        opts = OptionSet(tuple(f"o{i}" for i in range(n)))
        u = np.linspace(2.0, -2.0, n)
        m = n * (n - 1) // 2
        vals = []
        for i in range(n):
            for j in range(i + 1, n):
                vals.append(1.0 / (1.0 + math.exp(-(u[i] - u[j]))))
        data = PanelDataset(opts, ("only",), np.array([vals]), np.ones((1, m), int))
        reports = scan_subsets(data, sizes=(3, 4, 5))
        for r in reports:
            assert r.violation_rates["ss"] == 0.0
            assert r.violation_rates["css"] == 0.0

    def test_cap(self):
        data = _snack_like_panel()
        with pytest.raises(ResourceLimitError):
            scan_subsets(data, sizes=(5,), subset_cap=100)

    def test_reports_deterministic(self):
        data = _snack_like_panel(seed=2)
        a = emit_report(scan_subsets(data, sizes=(3, 4)), fmt="csv")
        b = emit_report(scan_subsets(data, sizes=(3, 4)), fmt="csv")
        assert a == b
        assert a.splitlines()[0].startswith("size,total,ss,mu,wu,css")


class TestEmit:
    def test_json_and_csv_and_table(self, tmp_path):
        rows = [{"size": 3, "total": 680, "ss": 0.25}, {"size": 4, "total": 2380, "ss": 0.5}]
        as_json = emit_report(rows, fmt="json")
        assert json.loads(as_json)[0]["total"] == 680
        as_csv = emit_report(rows, fmt="csv", path=tmp_path / "out.csv")
        assert (tmp_path / "out.csv").read_text().startswith("size,total,ss")
        as_table = emit_report(rows, fmt="table")
        assert "size" in as_table.splitlines()[0]

    def test_bad_format(self):
        with pytest.raises(Exception):
            emit_report([], fmt="yaml")

    def test_config_loading(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text('{"alpha": 0.1, "boot": 250}')
        cfg = load_config(p)
        assert cfg["alpha"] == 0.1
        bad = tmp_path / "bad.json"
        bad.write_text("[1, 2]")
        with pytest.raises(DataError):
            load_config(bad)


class TestCli:
    def test_check_command(self, capsys):
        code = main(["check", "--model", "css", "--vector", "0.65,0.1,0.65"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["member"] is False
        assert payload["distance"] == pytest.approx(0.1154700538, abs=1e-8)

    def test_check_witness(self, capsys):
        code = main(["check", "--model", "cwu", "--vector", "0.65,0.1,0.65"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["member"] is True and "witness" in payload

    def test_project_command(self, capsys):
        code = main(["project", "--model", "css", "--vector", "0.65,0.1,0.65"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["projected"] == pytest.approx([0.5833333, 0.1666667, 0.5833333], abs=1e-6)

    def test_vertices_command(self, capsys):
        code = main(["vertices", "--model", "ss", "--n", "3", "--order", "1,2,3"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["count"] == 5
        assert ["1/2", "1", "1/2"] in payload["points"]

    def test_ranking_command(self, capsys):
        code = main(["ranking", "--loop", "0.6,0.55,0.35", "--pi", "1,3,2"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["rationalizable"] is True

    def test_test_command_and_seed_env(self, tmp_path, capsys, monkeypatch):
        path = _write(tmp_path, TOY)
        monkeypatch.setenv("COLLRAT_SEED", "11")
        code = main(["test", str(path), "--model", "css", "--boot", "150"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["seed"] == 11
        assert payload["n_boot"] == 150

    def test_volume_command(self, capsys):
        code = main(["volume", "--model", "wu", "--n", "4", "--method", "exact"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["value"] == 0.375

    def test_scan_command(self, tmp_path, capsys):
        path = _write(tmp_path, TOY)
        code = main(["--format", "csv", "scan", str(path), "--sizes", "3"])
        assert code == 0
        out = capsys.readouterr().out
        assert out.splitlines()[0].startswith("size,total")

    def test_nesting_command(self, capsys):
        code = main(["nesting", "--n", "3"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["conv_ss_eq_conv_mu"] is True

    def test_lr_and_subsample_and_split(self, tmp_path, capsys):
        rng = np.random.default_rng(23)
        lines = ["subject,option_a,option_b,choice"]
        labels = ("a", "b", "c")
        for s in range(12):
            for i in range(3):
                for j in range(i + 1, 3):
                    pick = "a" if rng.random() < 0.6 else "b"
                    lines.append(f"s{s},{labels[i]},{labels[j]},{pick}")
        path = _write(tmp_path, "\n".join(lines) + "\n")
        assert main(["lr-test", str(path)]) == 0
        capsys.readouterr()
        assert main(["subsample-test", str(path), "--b", "5", "--draws", "60"]) == 0
        capsys.readouterr()
        assert main(["split-test", str(path), "--sizes", "3", "--boot", "120"]) == 0
        capsys.readouterr()

    def test_mc_command_small(self, capsys):
        code = main(
            ["--seed", "3", "mc", "--dgp", "table1:mu4p", "--n", "120", "--reps", "100",
             "--boot", "150"]
        )
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["rate"] > 0.8

    def test_exit_codes(self, tmp_path, capsys):
        assert main(["check", "--model", "css"]) == 1  # missing required option
        capsys.readouterr()
        assert main(["test", str(tmp_path / "missing.csv")]) == 2
        capsys.readouterr()
        assert main(["vertices", "--model", "wu", "--n", "6"]) == 3
        capsys.readouterr()
        bad = _write(tmp_path, "subject,option_a,option_b,choice\ns1,x,y\n", "bad.csv")
        assert main(["scan", str(bad)]) == 2
        capsys.readouterr()

    def test_out_file(self, tmp_path):
        out = tmp_path / "res.json"
        code = main(["--out", str(out), "volume", "--model", "mu", "--n", "3"])
        assert code == 0
        assert json.loads(out.read_text())["value"] == 0.5

    def test_config_defaults(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"alpha": 0.2, "boot": 120, "seed": 5}')
        path = _write(tmp_path, TOY)
        code = main(["--config", str(cfg), "test", str(path)])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["alpha"] == 0.2
        assert payload["n_boot"] == 120
        assert payload["seed"] == 5
