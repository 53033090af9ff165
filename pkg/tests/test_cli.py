import numpy as np
import pytest

from spdhg import cli


MINIMAL = """
# desk-scale smoke configuration
rows=16
cols=16
n_coils=2
sampling_factor=2
noise_sigma=0.05
regularizer=l2
alpha=0.01
seed=5
algorithms=spdhg
epochs=10
gamma_grid=1
gamma_search_epochs=10
log_every=1
target_mode=oracle
"""


def write_config(tmp_path, text=MINIMAL):
    path = tmp_path / "config.txt"
    path.write_text(text)
    return path


def read_csv(path):
    lines = path.read_text().strip().splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


class TestConfig:
    def test_defaults_load_without_file(self):
        config = cli.load_config()
        assert config.rows == 64 and config.n_coils == 4
        assert config.gamma_grid == cli.DEFAULT_GAMMA_GRID

    def test_file_plus_overrides(self, tmp_path):
        path = write_config(tmp_path)
        config = cli.load_config(path, overrides=[("epochs", "3"), ("seed", "9")])
        assert config.rows == 16
        assert config.epochs == 3.0
        assert config.seed == 9
        assert config.algorithms == ("spdhg",)

    def test_unknown_key_rejected(self, tmp_path):
        path = write_config(tmp_path, "rows=16\nbogus=1\n")
        with pytest.raises(cli.ConfigError, match="bogus"):
            cli.load_config(path)

    def test_oracle_target_with_tv_rejected(self):
        with pytest.raises(cli.ConfigError, match="long_run"):
            cli.load_config(overrides=[("regularizer", "tv")])

    def test_long_run_must_exceed_run_epochs(self):
        with pytest.raises(cli.ConfigError, match="exceed"):
            cli.load_config(overrides=[("target_mode", "long_run"),
                                       ("target_epochs", "50")])


class TestWriteImage:
    def test_constant_image_maps_to_white(self, tmp_path):
        cli.write_image(np.ones((4, 6), dtype=complex), tmp_path / "img")
        data = (tmp_path / "img.pgm").read_bytes()
        header, pixels = data[:len(b"P5\n6 4\n255\n")], data[len(b"P5\n6 4\n255\n"):]
        assert header == b"P5\n6 4\n255\n"
        assert pixels == bytes([255] * 24)

    def test_zero_image_maps_to_black(self, tmp_path):
        cli.write_image(np.zeros((3, 3), dtype=complex), tmp_path / "img")
        data = (tmp_path / "img.pgm").read_bytes()
        assert data.endswith(bytes([0] * 9))
        meta = (tmp_path / "img.meta").read_text()
        assert "min=0.0" in meta and "max=0.0" in meta

    def test_raw_float_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        img = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
        cli.write_image(img, tmp_path / "img")
        raw = np.fromfile(tmp_path / "img.f32", dtype="<f4").reshape(8, 8)
        assert np.max(np.abs(raw - np.abs(img))) < 1e-6

    def test_linear_rescale(self, tmp_path):
        img = np.array([[0.0, 1.0], [2.0, 4.0]], dtype=complex)
        cli.write_image(img, tmp_path / "img")
        pixels = (tmp_path / "img.pgm").read_bytes()[-4:]
        assert list(pixels) == [0, 64, 128, 255]


@pytest.fixture(scope="module")
def experiment(tmp_path_factory):
    out = tmp_path_factory.mktemp("exp")
    config = cli.load_config(overrides=[
        ("rows", "16"), ("cols", "16"), ("n_coils", "2"),
        ("noise_sigma", "0.05"), ("alpha", "0.01"), ("seed", "5"),
        ("algorithms", "spdhg"), ("epochs", "10"), ("gamma_grid", "1"),
        ("gamma_search_epochs", "10"), ("log_every", "1"),
        ("target_mode", "oracle"), ("output_dir", str(out))])
    summary = cli.run_experiment(config)
    return config, out, summary


class TestRunExperiment:
    def test_csv_has_expected_rows_and_schema(self, experiment):
        _, out, _ = experiment
        header, rows = read_csv(out / "convergence.csv")
        assert header == cli.CSV_HEADER
        assert len(rows) == 11  # epochs 0..10 at log_every=1
        epochs = [float(r[3]) for r in rows]
        assert epochs == list(range(11))

    def test_relative_objective_starts_at_one(self, experiment):
        _, out, _ = experiment
        _, rows = read_csv(out / "convergence.csv")
        assert float(rows[0][5]) == 1.0

    def test_images_written(self, experiment):
        _, out, _ = experiment
        for stem in ("ground_truth", "target", "recon_spdhg"):
            for suffix in (".f32", ".meta", ".pgm"):
                assert (out / f"{stem}{suffix}").exists()

    def test_manifest_records_resolved_parameters(self, experiment):
        _, out, summary = experiment
        manifest = dict(line.split("=", 1)
                        for line in (out / "manifest.txt").read_text().splitlines())
        assert "mask_sha256" in manifest and len(manifest["mask_sha256"]) == 64
        assert "block_norms" in manifest
        assert manifest["gamma_star_spdhg"] == "1"
        assert manifest["rows"] == "16"
        assert float(summary["gamma_star"]["spdhg"]) == 1.0

    def test_rerun_reproduces_numeric_content(self, experiment, tmp_path):
        config, out, _ = experiment
        import dataclasses
        config2 = dataclasses.replace(config, output_dir=str(tmp_path / "again"))
        cli.run_experiment(config2)
        _, rows_a = read_csv(out / "convergence.csv")
        _, rows_b = read_csv(tmp_path / "again" / "convergence.csv")
        strip = [r[:8] + [r[9]] for r in rows_a]  # drop wall_time_s
        strip_b = [r[:8] + [r[9]] for r in rows_b]
        assert strip == strip_b


class TestMain:
    def test_validate_subcommand(self, capsys, tmp_path):
        code = cli.main(["validate", "--rows", "16", "--cols", "16",
                         "--n_coils", "2", "--gamma_grid", "0.1,1,10"])
        assert code == 0
        outp = capsys.readouterr().out
        assert "satisfied" in outp
        assert "||A_0||" in outp

    def test_oracle_subcommand(self, capsys):
        code = cli.main(["oracle", "--rows", "16", "--cols", "16",
                         "--n_coils", "2", "--alpha", "0.01"])
        assert code == 0
        outp = capsys.readouterr().out
        assert "fixed-point residual" in outp

    def test_oracle_rejects_tv(self, capsys):
        code = cli.main(["oracle", "--regularizer", "tv",
                         "--target_mode", "long_run"])
        assert code == 1

    def test_config_error_exit_code(self, capsys):
        assert cli.main(["run", "--epochs", "-3"]) == 1
        assert cli.main(["run", "--config", "/nonexistent/path.txt"]) == 1

    def test_run_subcommand_end_to_end(self, tmp_path, capsys):
        code = cli.main([
            "run", "--rows", "16", "--cols", "16", "--n_coils", "2",
            "--alpha", "0.01", "--algorithms", "spdhg", "--epochs", "2",
            "--gamma_grid", "1", "--gamma_search_epochs", "2",
            "--target_mode", "oracle", "--output_dir", str(tmp_path / "run")])
        assert code == 0
        assert (tmp_path / "run" / "convergence.csv").exists()

    def test_run_tv_with_long_run_target(self, tmp_path, capsys):
        code = cli.main([
            "run", "--rows", "16", "--cols", "16", "--n_coils", "2",
            "--regularizer", "tv", "--algorithms", "spdhg", "--epochs", "3",
            "--gamma_grid", "1", "--gamma_search_epochs", "3",
            "--target_mode", "long_run", "--target_epochs", "30",
            "--output_dir", str(tmp_path / "tv")])
        assert code == 0
        lines = (tmp_path / "tv" / "convergence.csv").read_text().splitlines()
        rows = [line.split(",") for line in lines[1:]]
        assert len(rows) == 4  # epochs 0..3
        assert all(r[7] == "" for r in rows)  # no bregman gap under tv
        assert float(rows[0][5]) == 1.0

    def test_bad_usage_exits_one(self, capsys):
        assert cli.main(["run", "--epochs"]) == 1
