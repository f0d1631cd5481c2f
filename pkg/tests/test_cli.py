import numpy as np
import pytest

from dweuler.cli import main
from dweuler.config import (ExperimentConfig, config_hash, parse_config_items,
                            parse_config_text)
from dweuler.eos import GasParams
from dweuler.errors import UsageError
from dweuler.grid import read_field
from dweuler.ic import KHConfig, kelvin_helmholtz
from dweuler.grid import Grid


class TestConfig:
    def test_roundtrip_through_canonical_text(self):
        cfg = ExperimentConfig(scheme="vfv", tend=0.25, kh_inner=(2.5, -1.0, 0.0, 3.0))
        back = parse_config_text(cfg.canonical_text())
        assert back == cfg

    def test_unknown_key_rejected(self):
        with pytest.raises(UsageError):
            parse_config_items("no_such_key = 3")

    def test_bad_value_rejected(self):
        with pytest.raises(UsageError):
            parse_config_items("cfl = fast")

    def test_comments_and_blanks_ignored(self):
        items = parse_config_items("# hello\n\n  tend = 0.5 # trailing\n")
        assert items == {"tend": 0.5}

    def test_validation(self):
        with pytest.raises(UsageError):
            ExperimentConfig(n_lo=2, n_hi=1)
        with pytest.raises(UsageError):
            ExperimentConfig(n_hi=7)
        with pytest.raises(UsageError):
            ExperimentConfig(ic="shocktube")

    def test_hash_changes_with_config(self):
        a = config_hash(ExperimentConfig())
        b = config_hash(ExperimentConfig(seed=43))
        assert a != b and len(a) == 12


class TestRunCommand:
    def test_zero_time_snapshot_equals_initial(self, tmp_path, gas):
        out = tmp_path / "run0"
        rc = main(["run", "--out", str(out), "--n-lo", "1", "--n-hi", "1",
                   "--tend", "0"])
        assert rc == 0
        field, t, gamma = read_field(out / "state_n1.dwfld")
        expected = kelvin_helmholtz(KHConfig(), Grid(64), GasParams(1.4))
        assert np.array_equal(field.data, expected.data)
        assert t == 0.0 and gamma == 1.4

    def test_byte_identical_reruns(self, tmp_path):
        args = ["--n-lo", "1", "--n-hi", "1", "--tend", "0.05"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["run", "--out", str(out1)] + args) == 0
        assert main(["run", "--out", str(out2)] + args) == 0
        b1 = (out1 / "state_n1.dwfld").read_bytes()
        b2 = (out2 / "state_n1.dwfld").read_bytes()
        assert b1 == b2

    def test_manifest_reproduces_run(self, tmp_path):
        out1 = tmp_path / "first"
        assert main(["run", "--out", str(out1), "--n-lo", "1", "--n-hi", "1",
                     "--tend", "0.03", "--seed", "7"]) == 0
        out2 = tmp_path / "second"
        assert main(["run", "--config", str(out1 / "manifest.txt"),
                     "--out", str(out2)]) == 0
        assert (out1 / "state_n1.dwfld").read_bytes() == \
            (out2 / "state_n1.dwfld").read_bytes()

    def test_stability_csv_written_with_header(self, tmp_path):
        out = tmp_path / "run"
        assert main(["run", "--out", str(out), "--n-lo", "1", "--n-hi", "1",
                     "--tend", "0.02"]) == 0
        lines = (out / "stability_n1.csv").read_text().splitlines()
        assert lines[0].startswith("# dweuler")
        assert "config=" in lines[0]
        assert lines[1].split(",")[0] == "index"

    def test_snapshot_every(self, tmp_path):
        out = tmp_path / "movie"
        assert main(["run", "--out", str(out), "--n-lo", "1", "--n-hi", "1",
                     "--tend", "0.02", "--snapshot-every", "5"]) == 0
        assert (out / "state_n1_step000005.dwfld").is_file()

    def test_workers_parallel_matches_serial(self, tmp_path):
        base = ["--n-lo", "1", "--n-hi", "2", "--tend", "0.02"]
        serial, parallel = tmp_path / "s", tmp_path / "p"
        assert main(["run", "--out", str(serial), "--workers", "1"] + base) == 0
        assert main(["run", "--out", str(parallel), "--workers", "2"] + base) == 0
        for name in ("state_n1.dwfld", "state_n2.dwfld"):
            assert (serial / name).read_bytes() == (parallel / name).read_bytes()

    def test_env_out_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DWEULER_OUT", str(tmp_path / "envout"))
        assert main(["run", "--n-lo", "1", "--n-hi", "1", "--tend", "0"]) == 0
        assert (tmp_path / "envout" / "state_n1.dwfld").is_file()

    def test_bad_config_file_exit_2(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("definitely_not_a_key = 1\n")
        assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2

    def test_missing_config_file_exit_2(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "nope.cfg"),
                     "--out", str(tmp_path / "o")]) == 2

    def test_numerical_failure_exit_3_with_dump(self, tmp_path):
        out = tmp_path / "blowup"
        rc = main(["run", "--out", str(out), "--n-lo", "1", "--n-hi", "1",
                   "--tend", "1.0", "--scheme", "vfv",
                   "--alpha-u", "1.99", "--alpha-rho", "1.99"])
        assert rc == 3
        assert (out / "state_n1_failed.dwfld").is_file()


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("ladder")
    assert main(["run", "--out", str(out), "--n-lo", "1", "--n-hi", "3",
                 "--tend", "0.05"]) == 0
    return out


class TestAnalyzeCommand:

    def test_analyze_writes_tables_and_defects(self, run_dir):
        assert main(["analyze", str(run_dir)]) == 0
        for name in ("refinement_errors.csv", "cesaro_cauchy.csv",
                     "trace_compat.csv", "defects_N2.dwfld",
                     "defects_N3.dwfld", "cesaro_N1.dwfld"):
            assert (run_dir / name).is_file(), name
        field, t, gamma = read_field(run_dir / "defects_N3.dwfld")
        assert field.components == 6

    def test_missing_snapshot_exit_2(self, tmp_path, run_dir):
        import shutil
        broken = tmp_path / "missing"
        shutil.copytree(run_dir, broken)
        (broken / "state_n2.dwfld").unlink()
        assert main(["analyze", str(broken)]) == 2

    def test_corrupt_magic_exit_2(self, tmp_path, run_dir):
        import shutil
        broken = tmp_path / "tampered"
        shutil.copytree(run_dir, broken)
        path = broken / "state_n1.dwfld"
        raw = bytearray(path.read_bytes())
        raw[:6] = b"BADMAG"
        path.write_bytes(bytes(raw))
        assert main(["analyze", str(broken)]) == 2

    def test_identical_snapshots_zero_tables(self, tmp_path):
        out = tmp_path / "flat"
        # tend=0 at three resolutions of eps=0 data: all restrict to the
        # same coarse field, so every distance and defect vanishes
        assert main(["run", "--out", str(out), "--n-lo", "1", "--n-hi", "3",
                     "--tend", "0", "--kh-eps", "0"]) == 0
        assert main(["analyze", str(out)]) == 0
        field, _, _ = read_field(out / "defects_N3.dwfld")
        assert np.abs(field.data).max() <= 1e-12
        rows = [l for l in (out / "refinement_errors.csv").read_text().splitlines()
                if not l.startswith(("#", "n_coarse"))]
        for row in rows:
            assert all(abs(float(v)) <= 1e-13 for v in row.split(",")[2:])


class TestConsistencyCommand:
    def test_uniform_data_residuals_tiny(self, tmp_path):
        out = tmp_path / "const"
        assert main(["consistency", "--out", str(out), "--n-lo", "1",
                     "--n-hi", "1", "--tend", "0.05", "--ic", "uniform"]) == 0
        lines = (out / "consistency.csv").read_text().splitlines()
        header = lines[1].split(",")
        idx = {name: k for k, name in enumerate(header)}
        for line in lines[2:]:
            parts = line.split(",")
            if parts[idx["form"]] in ("continuity", "momentum1", "momentum2"):
                assert abs(float(parts[idx["residual"]])) <= 1e-10

    def test_k0_continuity_telescopes(self, tmp_path):
        out = tmp_path / "kh"
        assert main(["consistency", "--out", str(out), "--n-lo", "1",
                     "--n-hi", "1", "--tend", "0.05"]) == 0
        lines = (out / "consistency.csv").read_text().splitlines()
        header = lines[1].split(",")
        idx = {name: k for k, name in enumerate(header)}
        for line in lines[2:]:
            parts = line.split(",")
            if (parts[idx["form"]] == "continuity"
                    and parts[idx["k1"]] == "0" and parts[idx["k2"]] == "0"):
                assert abs(float(parts[idx["residual"]])) <= 1e-12


class TestConvergenceCommand:
    def test_rate_table(self, tmp_path):
        out = tmp_path / "conv"
        assert main(["convergence", "--out", str(out), "--n-lo", "1",
                     "--n-hi", "2"]) == 0
        lines = (out / "convergence.csv").read_text().splitlines()
        assert lines[1].split(",")[0] == "n"
        rows = [line.split(",") for line in lines[2:]]
        errs = [float(r[3]) for r in rows]
        assert errs[0] > errs[1] > 0
