"""Command-line interface: config parsing, output schema, determinism."""

import json
import os

import numpy as np
import pytest

from contourdyn.cli import (
    ConfigError,
    DIAG_HEADER,
    DISPERSION_HEADER,
    load_config,
    main,
    parse_config_text,
)

BASE_CONFIG = """
# two-interface run
model.mu = 1.0
model.nu = 2.0
growth.kind = linear
growth.G0 = 1.0
growth.pM = 1.0
geometry.r0 = 1.0
geometry.R0 = 1.5
modes.h = 2:1e-3:0
modes.H = 3:1e-3:0
resolution.N = 64
resolution.N_rho = 128
resolution.N_omega = 64
resolution.N_w = 128
resolution.N_xi = 512
time.dt = 1e-3
time.T_end = 3e-3
output.every = 1
"""


def write_config(tmp_path, text, name="config.cfg"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def config_with(tmp_path, replacements=(), extra=""):
    lines = []
    for line in BASE_CONFIG.strip().splitlines():
        key = line.split("=")[0].strip()
        for rk, rv in replacements:
            if key == rk:
                line = f"{rk} = {rv}" if rv is not None else ""
                break
        if line:
            lines.append(line)
    if extra:
        lines.append(extra)
    return write_config(tmp_path, "\n".join(lines) + "\n")


class TestParsing:
    def test_comments_and_blanks_ignored(self):
        values = parse_config_text("# c\n\na.b = 1 ; trailing\n x = y # z\n")
        assert values == {"a.b": "1", "x": "y"}

    def test_malformed_line(self):
        with pytest.raises(ConfigError, match="key = value"):
            parse_config_text("just words\n")

    def test_roundtrip_defaults(self, tmp_path):
        cfg = load_config(config_with(tmp_path))
        assert cfg.mu == 1.0 and cfg.nu == 2.0
        assert cfg.etd_order == 1
        assert cfg.pressure_tol == 1e-10
        assert cfg.output_dir == "out"
        assert cfg.modes_h == ((2, 1e-3, 0.0),)
        # delta defaults to the standard band for (r0, R0)
        assert 0.0 < cfg.delta < (cfg.R0 - cfg.r0) / cfg.R0

    def test_initial_pair_modes(self, tmp_path):
        cfg = load_config(config_with(tmp_path))
        pair = cfg.initial_pair()
        assert pair.h.mode_amplitude(2) == pytest.approx(1e-3)
        assert pair.H.mode_amplitude(3) == pytest.approx(1e-3)

    def test_tabulated_law(self, tmp_path):
        path = config_with(
            tmp_path,
            replacements=[
                ("growth.kind", "tabulated"),
                ("growth.G0", None),
                ("growth.pM", None),
            ],
            extra="growth.table = 0:1.0, 0.5:0.5, 1:0",
        )
        cfg = load_config(path)
        assert cfg.law(0.0) == pytest.approx(1.0)
        assert cfg.law(0.25) == pytest.approx(0.75)


class TestValidationErrors:
    @pytest.mark.parametrize(
        "replacements,pattern",
        [
            ([("model.mu", "0")], "positive"),
            ([("growth.kind", "quadratic")], "linear or tabulated"),
            ([("geometry.r0", "2.0")], "0 < r0 < R0"),
            ([("resolution.N", "48")], "power of two"),
            ([("resolution.N", "32")], "power of two"),
            ([("resolution.N_xi", "256"), ("resolution.N", "512"),
              ("resolution.N_w", "512")], "multiple"),
            ([("time.dt", "1.0")], "0 < dt < T_end"),
            ([("modes.h", "0:1e-3:0")], "mode numbers"),
            ([("modes.h", "2:1e-3")], "k:amplitude:phase"),
            ([("modes.h", "2:0.3:0")], "initial geometry invalid"),
            ([("output.every", "0")], "output.every"),
        ],
    )
    def test_bad_values_rejected(self, tmp_path, replacements, pattern):
        with pytest.raises(ConfigError, match=pattern):
            load_config(config_with(tmp_path, replacements=replacements))

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError, match="unknown configuration keys"):
            load_config(config_with(tmp_path, extra="model.rho = 1"))

    def test_missing_required_key(self, tmp_path):
        with pytest.raises(ConfigError, match="missing required"):
            load_config(config_with(tmp_path, replacements=[("model.mu", None)]))

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config("/nonexistent/config.cfg")

    def test_bad_integrator_order(self, tmp_path):
        with pytest.raises(ConfigError, match="integrator.order"):
            load_config(config_with(tmp_path, extra="integrator.order = 3"))


@pytest.fixture(scope="module")
def sim_outputs(tmp_path_factory):
    """One short simulation shared by the output-schema tests."""
    tmp_path = tmp_path_factory.mktemp("sim")
    out_dir = tmp_path / "out"
    path = config_with(tmp_path, extra=f"output.dir = {out_dir}")
    rc = main(["simulate", path])
    assert rc == 0
    return out_dir


class TestSimulate:
    def test_bad_config_exit_code(self, tmp_path, capsys):
        path = write_config(tmp_path, "model.mu = 0\n")
        assert main(["simulate", path]) == 1
        assert "config error" in capsys.readouterr().err

    def test_outputs_exist(self, sim_outputs):
        assert (sim_outputs / "trajectory.jsonl").exists()
        assert (sim_outputs / "diagnostics.csv").exists()

    def test_diagnostics_schema(self, sim_outputs):
        lines = (sim_outputs / "diagnostics.csv").read_text().splitlines()
        assert lines[0] == DIAG_HEADER
        assert len(lines) == 1 + 4  # initial state + 3 steps
        for line in lines[1:]:
            cells = [float(c) for c in line.split(",")]
            assert len(cells) == len(DIAG_HEADER.split(","))
            assert cells[1] > 0.0  # annulus area

    def test_trajectory_schema(self, sim_outputs):
        records = [
            json.loads(line)
            for line in (sim_outputs / "trajectory.jsonl").read_text().splitlines()
        ]
        assert len(records) == 4
        assert records[0]["time"] == 0.0
        for rec in records:
            assert set(rec) == {"time", "r", "R", "delta", "h", "H", "diagnostics"}
            assert len(rec["h"]) == 64 and len(rec["H"]) == 64
        times = [rec["time"] for rec in records]
        assert times == pytest.approx([0.0, 1e-3, 2e-3, 3e-3])

    def test_reruns_are_byte_identical(self, sim_outputs, tmp_path):
        out2 = tmp_path / "out2"
        cfg_dir = tmp_path
        path = config_with(cfg_dir, extra=f"output.dir = {out2}")
        assert main(["simulate", path]) == 0
        for name in ("trajectory.jsonl", "diagnostics.csv"):
            assert (out2 / name).read_bytes() == (sim_outputs / name).read_bytes()


class TestDispersion:
    def test_writes_rate_table(self, tmp_path):
        out_dir = tmp_path / "disp"
        path = config_with(tmp_path, extra=f"output.dir = {out_dir}")
        assert main(["dispersion", path]) == 0
        lines = (out_dir / "dispersion.csv").read_text().splitlines()
        assert lines[0] == DISPERSION_HEADER
        assert len(lines) == 1 + (64 // 2 - 1)
        # mu < nu: every mode decays
        for line in lines[1:]:
            cells = line.split(",")
            assert cells[-1] == "0"
            assert float(cells[1]) < 0.0 and float(cells[3]) < 0.0

    def test_unstable_contrast_flagged(self, tmp_path):
        out_dir = tmp_path / "disp2"
        path = config_with(
            tmp_path,
            replacements=[("model.mu", "2.0"), ("model.nu", "1.0")],
            extra=f"output.dir = {out_dir}",
        )
        assert main(["dispersion", path]) == 0
        lines = (out_dir / "dispersion.csv").read_text().splitlines()
        flags = [line.split(",")[-1] for line in lines[1:]]
        assert "1" in flags


class TestRender:
    def test_frames_from_trajectory(self, sim_outputs, tmp_path):
        frames = tmp_path / "frames"
        rc = main(["render", str(sim_outputs / "trajectory.jsonl"), str(frames)])
        assert rc == 0
        names = sorted(os.listdir(frames))
        assert names == [f"frame_{i:04d}.svg" for i in range(4)]
        svg = (frames / "frame_0000.svg").read_text()
        assert svg.count("<polyline") == 2
        assert svg.count("<circle") == 2

    def test_missing_trajectory(self, tmp_path, capsys):
        assert main(["render", "/nonexistent.jsonl", str(tmp_path / "f")]) == 1
        assert "cannot read trajectory" in capsys.readouterr().err

    def test_malformed_record(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"time": 0.0, "r": 1.0}\n')
        assert main(["render", str(bad), str(tmp_path / "f")]) == 1


class TestValidateCommand:
    def test_list_only(self, capsys):
        assert main(["validate", "--list"]) == 0
        out = capsys.readouterr().out
        for name in (
            "kernel-identities",
            "circle-exactness",
            "radial-pressure",
            "conservation",
            "dispersion",
            "output-schema",
        ):
            assert name in out

    def test_all_suites_pass(self, capsys):
        assert main(["validate"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out

    def test_command_required(self):
        with pytest.raises(SystemExit):
            main([])


class TestSerialization:
    def test_float_format_roundtrip(self, sim_outputs):
        # 17 significant digits reproduce the binary double exactly
        lines = (sim_outputs / "diagnostics.csv").read_text().splitlines()
        cells = lines[1].split(",")
        for cell in cells:
            x = float(cell)
            assert format(x, ".17g") == cell

    def test_mode_amplitude_column_tracks_initial_data(self, sim_outputs):
        lines = (sim_outputs / "diagnostics.csv").read_text().splitlines()
        header = lines[0].split(",")
        row0 = lines[1].split(",")
        h2 = float(row0[header.index("h_k2")])
        big_h3 = float(row0[header.index("H_k3")])
        assert h2 == pytest.approx(1e-3, rel=1e-12)
        assert big_h3 == pytest.approx(1e-3, rel=1e-12)
