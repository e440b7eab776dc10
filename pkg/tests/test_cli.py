"""End-to-end command-line behavior: outputs, determinism, exit codes."""

import json
from pathlib import Path

import pytest

from evidential_weight import cli, mc

STUDY_JSON = {
    "H1": {"id": 3663, "inc": 1856, "exc": 450},
    "H2": {"id": 6, "inc": 455, "exc": 3622},
}


def read_json(path: Path) -> dict:
    return json.loads(path.read_text())


def run(argv) -> int:
    return cli.main([str(a) for a in argv])


class TestCoinCommand:
    def test_reference_values(self, tmp_path):
        assert run(["coin", "--seq", "HHHHHTTT", "--out", tmp_path]) == 0
        result = read_json(tmp_path / "result.json")
        assert result["prob_next_heads"] == {"A": 0.5, "B": 0.6, "C": 0.325}

    def test_csv_format(self, tmp_path):
        assert run(["coin", "--seq", "HT", "--out", tmp_path, "--format", "csv"]) == 0
        text = (tmp_path / "result.csv").read_text()
        assert text.startswith("# manifest=")
        assert "prob_next_heads.B," in text

    def test_bad_sequence_exits_2(self, tmp_path, capsys):
        assert run(["coin", "--seq", "HHQT", "--out", tmp_path]) == 2
        assert "toss 3" in capsys.readouterr().err


class TestScalarCommand:
    def test_default_priors_at_nine(self, tmp_path):
        assert run(["scalar", "--r", "9", "--out", tmp_path]) == 0
        result = read_json(tmp_path / "result.json")
        assert result["lr_estimate"]["lr"] == pytest.approx(1.8333, abs=2e-3)
        curve = (tmp_path / "lr_curve.csv").read_text().splitlines()
        assert curve[0].startswith("# manifest=")
        assert curve[1] == "r,density_h1,density_h2,lr_a"
        assert len(curve) == 2 + 121

    def test_validation_updates_posteriors(self, tmp_path):
        csv_path = tmp_path / "scalar.csv"
        rows = ["scenario,log10_lr"]
        rows += [f"H1,{v}" for v in (7.0, 8.0, 9.0)]
        rows += [f"H2,{v}" for v in (-11.0, -13.0)]
        csv_path.write_text("\n".join(rows) + "\n")
        out = tmp_path / "out"
        assert run(["scalar", "--r", "8", "--validation", csv_path, "--out", out]) == 0
        result = read_json(out / "result.json")
        assert result["posteriors"]["H1"]["n_mu"] == 4.0
        assert result["posteriors"]["H2"]["n_mu"] == 3.0
        assert result["lr_estimate"]["lr"] > 10.0

    def test_malformed_row_cites_line(self, tmp_path, capsys):
        csv_path = tmp_path / "bad.csv"
        csv_path.write_text("scenario,log10_lr\nH1,2.0\nH1,not-a-number\n")
        assert run(["scalar", "--r", "1", "--validation", csv_path, "--out", tmp_path]) == 2
        err = capsys.readouterr().err
        assert "bad.csv" in err and ":3" in err

    def test_custom_priors_file(self, tmp_path):
        priors = {
            "H1": {"mu0": 2.0, "n_mu": 1.0, "tau0": 1.0, "n_tau": 1.0},
            "H2": {"mu0": -2.0, "n_mu": 1.0, "tau0": 1.0, "n_tau": 1.0},
        }
        path = tmp_path / "priors.json"
        path.write_text(json.dumps(priors))
        assert run(["scalar", "--r", "0", "--priors", path, "--out", tmp_path]) == 0
        assert read_json(tmp_path / "result.json")["lr_estimate"]["lr"] == pytest.approx(1.0)


class TestCategoricalCommand:
    def test_prior_run_outputs(self, tmp_path):
        assert run(
            ["categorical", "--conclusion", "id", "--samples", 150_000,
             "--seed", 7, "--out", tmp_path]
        ) == 0
        result = read_json(tmp_path / "result.json")
        assert result["lr_estimate"]["lr"] == pytest.approx(4.0, rel=0.05)
        assert result["lr_estimate"]["seed"] == 7
        for name in ("density_grid_id.csv", "density_grid_inc.csv", "density_grid_exc.csv"):
            lines = (tmp_path / name).read_text().splitlines()
            assert lines[1] == "p_bin,q_bin,density"
            assert len(lines) == 2 + 100 * 100
        manifest = read_json(tmp_path / "manifest.json")
        assert manifest["seed"] == 7
        assert manifest["n_samples"] == 150_000

    def test_validation_and_sweep(self, tmp_path):
        counts = tmp_path / "counts.json"
        counts.write_text(json.dumps(STUDY_JSON))
        out = tmp_path / "out"
        assert run(
            ["categorical", "--conclusion", "id", "--validation", counts,
             "--samples", 100_000, "--sweep", "500,2000", "--out", out]
        ) == 0
        result = read_json(out / "result.json")
        assert result["lr_estimate"]["lr"] == pytest.approx(358.0, rel=0.05)
        sweep = (out / "sweep.csv").read_text().splitlines()
        assert sweep[1] == "size,conclusion,lr,mc_std_err,asymptote"
        assert len(sweep) == 2 + 6

    def test_csv_validation_rows(self, tmp_path):
        rows = ["scenario,conclusion", "H1,id", "H1,id", "H1,exc", "H2,exc", "H2,inc"]
        path = tmp_path / "rows.csv"
        path.write_text("\n".join(rows) + "\n")
        assert run(
            ["categorical", "--validation", path, "--samples", 20_000, "--out", tmp_path]
        ) == 0

    def test_malformed_conclusion_cites_row(self, tmp_path, capsys):
        path = tmp_path / "rows.csv"
        path.write_text("scenario,conclusion\nH1,id\nH2,perhaps\n")
        assert run(
            ["categorical", "--validation", path, "--samples", 1000, "--out", tmp_path]
        ) == 2
        assert ":3" in capsys.readouterr().err

    def test_intractable_constraints_exit_3(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setattr(mc, "INTRACTABLE_PROBE", 4 * mc.CHUNK_SIZE)
        counts = tmp_path / "counts.json"
        # all-exclusion mated and all-identification non-mated data make
        # the discriminating-expert region unreachable
        counts.write_text(json.dumps({
            "H1": {"id": 0, "inc": 0, "exc": 10**9},
            "H2": {"id": 10**9, "inc": 0, "exc": 0},
        }))
        assert run(
            ["categorical", "--validation", counts, "--samples", 1000, "--out", tmp_path]
        ) == 3
        assert "acceptance rate" in capsys.readouterr().err


@pytest.mark.filterwarnings("ignore:width hyperprior")
class TestIntervalCommand:
    def test_prior_run(self, tmp_path):
        assert run(
            ["interval", "--lo", "1e8", "--hi", "1e10", "--out", tmp_path,
             "--w-grid", "0.5:8:9"]
        ) == 0
        result = read_json(tmp_path / "result.json")
        assert result["midpoint"] == 9.0
        assert result["width"] == 2.0
        assert result["lr_w"] == 1.0
        assert result["lr_estimate"]["lr"] == pytest.approx(result["lr_m"], rel=1e-12)
        curve = (tmp_path / "width_curve.csv").read_text().splitlines()
        assert curve[1] == "w,density_h1,density_h2,lr_w"
        assert len(curve) == 2 + 9

    def test_validation_updates(self, tmp_path):
        rows = ["scenario,log10_lo,log10_hi"]
        rows += [f"H1,{lo},{lo + 4.5}" for lo in (3.0, 4.0, 5.0)]
        rows += [f"H2,{lo},{lo + 2.0}" for lo in (-4.0, -5.0, -6.0)]
        path = tmp_path / "iv.csv"
        path.write_text("\n".join(rows) + "\n")
        out = tmp_path / "out"
        assert run(
            ["interval", "--lo", "1e3", "--hi", "1e8", "--validation", path,
             "--out", out, "--w-grid", "1:6:6"]
        ) == 0
        result = read_json(out / "result.json")
        assert result["lr_w"] > 1.0

    def test_degenerate_interval_exit_2(self, tmp_path):
        assert run(["interval", "--lo", "10", "--hi", "10", "--out", tmp_path]) == 2

    def test_quadrature_budget_exhaustion_exit_3(self, tmp_path, capsys):
        code = run(
            ["interval", "--lo", "1e8", "--hi", "1e10", "--out", tmp_path,
             "--quad-rel-tol", "1e-15", "--quad-max-refinements", "1"]
        )
        assert code == 3
        assert "numerical failure" in capsys.readouterr().err


class TestTwoExpertCommand:
    def test_default_preset_headline_value(self, tmp_path):
        assert run(["two-expert", "--x", "2,1.4771", "--out", tmp_path]) == 0
        result = read_json(tmp_path / "result.json")
        assert result["lr_estimate"]["lr"] == pytest.approx(4.35, rel=0.05)
        assert result["df_convention"] == "n0"
        assert result["wishart_matrix"] == "rate"

    def test_literal_formula_flags(self, tmp_path):
        assert run(
            ["two-expert", "--x", "2,1.4771", "--df", "n0-1", "--wishart", "scale",
             "--out", tmp_path]
        ) == 0
        result = read_json(tmp_path / "result.json")
        assert result["lr_estimate"]["lr"] == pytest.approx(1.5346, rel=1e-3)

    def test_sweep_output(self, tmp_path):
        assert run(
            ["two-expert", "--x", "2,1.4771", "--sweep", "0,10,100", "--out", tmp_path]
        ) == 0
        lines = (tmp_path / "pair_sweep.csv").read_text().splitlines()
        assert lines[1] == "m,lr_a"
        values = {int(line.split(",")[0]): float(line.split(",")[1]) for line in lines[2:]}
        assert values[100] > values[0]

    def test_validation_csv(self, tmp_path):
        rows = ["scenario,log10_lr_b,log10_lr_c"]
        rows += [f"H1,{3.0 + d},{2.0 + d}" for d in (-1.0, 0.0, 1.0)]
        rows += [f"H2,{-3.0 + d},{-2.0 + d}" for d in (-1.0, 0.0, 1.0)]
        path = tmp_path / "pairs.csv"
        path.write_text("\n".join(rows) + "\n")
        out = tmp_path / "out"
        assert run(
            ["two-expert", "--x", "2,1.4771", "--validation", path, "--out", out]
        ) == 0
        result = read_json(out / "result.json")
        assert result["lr_estimate"]["lr"] > 4.0

    def test_alt_preset_runs(self, tmp_path):
        assert run(
            ["two-expert", "--x", "2,1.4771", "--prior-preset", "alt",
             "--df", "n0", "--wishart", "scale", "--out", tmp_path]
        ) == 0


class TestReproducibility:
    @pytest.mark.parametrize(
        "argv",
        [
            ["categorical", "--conclusion", "id", "--samples", 50_000, "--seed", 9],
            ["scalar", "--r", "9", "--grid=-10:10:21"],
            ["coin", "--seq", "HHHHHTTT"],
            ["two-expert", "--x", "2,1.4771", "--sweep", "0,10"],
        ],
    )
    def test_byte_identical_reruns(self, tmp_path, argv):
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        assert run(argv + ["--out", out_a]) == 0
        assert run(argv + ["--out", out_b]) == 0
        names_a = sorted(p.name for p in out_a.iterdir() if p.name != "manifest.json")
        names_b = sorted(p.name for p in out_b.iterdir() if p.name != "manifest.json")
        assert names_a == names_b
        for name in names_a:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_manifest_digest_stable_and_embedded(self, tmp_path):
        out = tmp_path / "run"
        assert run(["scalar", "--r", "2", "--out", out]) == 0
        manifest = read_json(out / "manifest.json")
        digest = manifest["manifest_digest"]
        assert read_json(out / "result.json")["manifest_digest"] == digest
        first_line = (out / "lr_curve.csv").read_text().splitlines()[0]
        assert first_line == f"# manifest={digest}"

    def test_manifest_core_fields(self, tmp_path):
        out = tmp_path / "run"
        counts = tmp_path / "c.json"
        counts.write_text(json.dumps(STUDY_JSON))
        assert run(
            ["categorical", "--validation", counts, "--samples", 20_000, "--out", out]
        ) == 0
        manifest = read_json(out / "manifest.json")
        for key in ("command", "seed", "n_samples", "input_digests",
                    "tool_version", "wall_time_s", "parameters"):
            assert key in manifest
        assert "c.json" in manifest["input_digests"]
        assert len(manifest["input_digests"]["c.json"]) == 64
