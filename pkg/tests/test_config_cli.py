import csv
import math
from dataclasses import replace

import numpy as np
import pytest

from slowpairs import cli, config
from slowpairs.errors import ConfigError
from slowpairs.montecarlo import ExperimentSpec
from slowpairs.sweep import SWEEP_COLUMNS, ZWM_COLUMNS, read_csv, run_sweep, write_csv

MINIMAL = """\
[waveguide]
length_m = 1e-3
alpha_db_per_m = 0.0
group_index = 4.0
phase_index = 3.0
gamma_eff_per_w_m = 0.0

[pump]
wavelength_m = 1.55e-6
avg_power_w = 1e-4
rep_rate_hz = 1e8
pulse_width_s = 1e-10

[channel]
bandwidth_hz = 25e9
detuning_hz = 100e9
fwm_half_bandwidth_hz = 125e9

[detection]
filter_db = 0.0
quantum_efficiency = 0.5
gate_width_s = 1e-9
dark_per_gate = 0.0
dead_time_s = 0.0

[sweep]
powers_w = [1e-4]

[run]
pulses = 1000000
seed = 7
"""


def line_of(text, prefix):
    return next(i for i, l in enumerate(text.splitlines(), 1) if l.startswith(prefix))


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


# ---------------------------------------------------------------- config


def test_bundled_configs_load(crow, reference):
    assert crow.spec.waveguide.length == 420e-6
    assert crow.spec.detection_sig.coupling_db == -9.0
    assert crow.spec.detection_sig.gate_rate == 1e8
    assert crow.spec.pulses == 12_000_000_000
    assert len(crow.powers) == 9 and min(crow.powers) == 2e-5 and max(crow.powers) == 3e-4
    assert reference.spec.waveguide.gamma_eff == 650.0
    assert reference.spec.detection_sig.coupling_db == -8.0


@pytest.mark.parametrize("name", ["crow", "reference"])
def test_round_trip(name):
    conf = config.load(name)
    again = config.loads(config.dumps(conf))
    assert again.spec == conf.spec
    assert again.powers == conf.powers
    assert config.loads(config.dumps(again)).spec == conf.spec


def test_round_trip_minimal_with_overrides():
    conf = config.loads(MINIMAL).with_overrides(seed=3, statistics="multimode_thermal", alpha_scaling="fixed")
    assert config.loads(config.dumps(conf)).spec == conf.spec


def test_log_grid_sweep():
    text = MINIMAL.replace("powers_w = [1e-4]", "start_w = 1e-5\nstop_w = 1e-3\npoints = 3\nspacing = \"log\"")
    assert np.allclose(config.loads(text).powers, [1e-5, 1e-4, 1e-3])


@pytest.mark.parametrize(
    "old,new,marker",
    [
        ("quantum_efficiency = 0.5", "quantum_efficiency = 1.5", "quantum_efficiency"),
        ("length_m = 1e-3", "length_m = -1e-3", "length_m"),
        ("seed = 7", "seed = 7\nbogus = 1", "bogus"),
        ("pulse_width_s = 1e-10", 'pulse_width_s = "fast"', "pulse_width_s"),
        ("seed = 7", 'seed = 7\nstatistics = "gaussian"', "statistics"),
    ],
)
def test_errors_are_line_anchored(old, new, marker):
    text = MINIMAL.replace(old, new)
    line = line_of(text, marker)
    with pytest.raises(ConfigError) as err:
        config.loads(text, "bad.toml")
    assert err.value.line == line
    assert str(err.value).startswith(f"bad.toml:{line}:")


def test_missing_section_and_syntax_error():
    with pytest.raises(ConfigError):
        config.loads(MINIMAL.replace("[channel]", "[chanel]"))
    with pytest.raises(ConfigError) as err:
        config.loads(MINIMAL.replace("seed = 7", "seed = = 7"), "x.toml")
    assert err.value.line == line_of(MINIMAL, "seed")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        config.load(tmp_path / "nope.toml")


# ---------------------------------------------------------------- CLI


def run_cli(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def report(text):
    return {k: v for k, _, v in (line.partition(" = ") for line in text.splitlines())}


def test_device_crow(capsys):
    code, out, _ = run_cli(capsys, "device", "--config", "crow")
    assert code == 0
    rep = report(out)
    assert float(rep["effective_length_m"]) == pytest.approx(381.879e-6, rel=1e-5)
    assert float(rep["eta_sig"]) == pytest.approx(5.376e-3, rel=1e-3)
    assert float(rep["slowdown"]) == pytest.approx(38 / 3)
    code, out, _ = run_cli(capsys, "device", "--config", "crow", "--alpha-scaling", "proportional-s")
    assert float(report(out)["effective_length_m"]) == pytest.approx(2.2002378225174015e-4, rel=1e-12)


def test_device_lossless(tmp_path, capsys):
    code, out, _ = run_cli(capsys, "device", "--config", write(tmp_path, MINIMAL))
    assert code == 0
    assert float(report(out)["effective_length_m"]) == 1e-3


def test_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, MINIMAL.replace("dead_time_s = 0.0", "dead_time_s = -1.0"))
    code, _, err = run_cli(capsys, "device", "--config", bad)
    assert code == cli.EXIT_CONFIG and f"c.toml:{line_of(MINIMAL, 'dead_time_s')}:" in err
    code, _, _ = run_cli(capsys, "sweep", "--config", write(tmp_path, MINIMAL), "--out", tmp_path / "no" / "dir.csv")
    assert code == cli.EXIT_IO
    one_row = tmp_path / "one.csv"
    one_row.write_text("power_w,mu_c_est,mu_c_sigma\n1e-4,1.0,0.1\n")
    code, _, _ = run_cli(capsys, "fit", one_row)
    assert code == cli.EXIT_RUNTIME
    with pytest.raises(SystemExit) as exc:
        cli.main(["device"])
    assert exc.value.code == 2
    assert len({cli.EXIT_OK, cli.EXIT_CONFIG, cli.EXIT_RUNTIME, cli.EXIT_IO, 2}) == 5


def test_zero_source_rows(tmp_path, capsys):
    path = write(tmp_path, MINIMAL)
    out = tmp_path / "s.csv"
    assert run_cli(capsys, "sweep", "--config", path, "--out", out)[0] == 0
    (row,) = read_csv(out)
    for key in ("mu_c_true", "d_c", "d_ca", "n_sig", "mu_c_est", "mu_s_est", "v", "v_sigma"):
        assert row[key] == 0.0, key
    assert math.isnan(row["car_mc"])
    zout = tmp_path / "z.csv"
    assert run_cli(capsys, "zwm", "--config", path, "--out", zout)[0] == 0
    with open(zout) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == ZWM_COLUMNS
    assert float(rows[1][1]) == 0.0


def test_sweep_is_deterministic_and_jobs_independent(tmp_path, capsys):
    outs = []
    for i, jobs in enumerate((1, 1, 3)):
        out = tmp_path / f"s{i}.csv"
        code, _, _ = run_cli(capsys, "sweep", "--config", "crow", "--pulses", 20_000_000, "--out", out, "--jobs", jobs)
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    header = outs[0].decode().splitlines()[0].split(",")
    assert tuple(header) == SWEEP_COLUMNS
    powers = [r["power_w"] for r in read_csv(tmp_path / "s0.csv")]
    assert powers == sorted(powers)
    code, _, _ = run_cli(capsys, "sweep", "--config", "crow", "--pulses", 20_000_000, "--seed", 99, "--out", tmp_path / "o.csv")
    assert (tmp_path / "o.csv").read_bytes() != outs[0]


def test_fit_accepts_sweep_output(tmp_path, capsys):
    out = tmp_path / "s.csv"
    run_cli(capsys, "sweep", "--config", "crow", "--pulses", 400_000_000, "--out", out)
    code, text, _ = run_cli(capsys, "fit", out, "--config", "crow")
    assert code == 0
    rep = report(text)
    gamma, sigma = float(rep["gamma_eff_per_w_m"]), float(rep["gamma_eff_sigma"])
    assert abs(gamma - 9000) < 4 * sigma
    code, text, _ = run_cli(capsys, "fit", out, "--model", "poly2_no_constant")
    assert code == 0 and float(report(text)["b"]) > 0


def _noiseless_csv(tmp_path, crow, ycol="mu_c_true"):
    rows = run_sweep(replace(crow.spec, pulses=1000), crow.powers)
    out = tmp_path / "n.csv"
    write_csv(out, rows)
    return out


def test_fit_noiseless_true_column(tmp_path, capsys, crow):
    out = _noiseless_csv(tmp_path, crow)
    code, text, _ = run_cli(capsys, "fit", out, "--y", "mu_c_true", "--config", "crow")
    rep = report(text)
    assert float(rep["gamma_eff_per_w_m"]) == pytest.approx(9000.0, rel=1e-10)
    assert float(rep["weighted"]) == 0.0


def test_fit_poly2_linear_data(tmp_path, capsys):
    p = tmp_path / "lin.csv"
    p.write_text("power_w,y\n" + "".join(f"{x!r},{3 * x!r}\n" for x in (1e-5, 5e-5, 1e-4, 2e-4)))
    code, text, _ = run_cli(capsys, "fit", p, "--model", "poly2_no_constant", "--y", "y")
    rep = report(text)
    assert float(rep["a"]) == pytest.approx(3.0, rel=1e-10)
    assert abs(float(rep["b"])) < 1e-6


def test_malformed_csv(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("power_w,mu_c_est\n1e-4,1\n2e-4,oops\n")
    code, _, err = run_cli(capsys, "fit", p)
    assert code == cli.EXIT_RUNTIME and "bad.csv:3" in err


@pytest.mark.slow
def test_zwm_classical_surrogate_cli(tmp_path, capsys):
    text = config.bundled_text("crow").replace("classical_surrogate = false", "classical_surrogate = true")
    out = tmp_path / "z.csv"
    code, _, _ = run_cli(capsys, "zwm", "--config", write(tmp_path, text), "--out", out, "--pulses", 2_000_000_000, "--jobs", 4)
    assert code == 0
    assert all(abs(r["v_over_sigma"]) < 3 for r in read_csv(out))


@pytest.mark.slow
def test_zwm_crow_interior_peak(tmp_path, capsys):
    out = tmp_path / "z.csv"
    assert run_cli(capsys, "zwm", "--config", "crow", "--out", out, "--jobs", 4)[0] == 0
    rows = read_csv(out)
    ratio = [r["v_over_sigma"] for r in rows]
    assert all(r["v"] > 0 for r in rows)
    peak = int(np.argmax(ratio))
    assert 0 < peak < len(rows) - 1


def test_csv_cells_are_plain_decimals(tmp_path):
    out = tmp_path / "np.csv"
    write_csv(out, [{"a": np.float64(0.1), "b": np.int64(3), "c": 2.5e-5}], ("a", "b", "c"))
    assert out.read_text() == "a,b,c\n0.1,3,2.5e-05\n"
