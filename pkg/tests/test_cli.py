import pytest

from qmimo.cli import UsageError, cli_main, parse_snr_grid
from qmimo.harness import read_csv


def test_snr_grid_forms():
    assert parse_snr_grid("0:2:6") == [0.0, 2.0, 4.0, 6.0]
    assert parse_snr_grid("-4,1.5") == [-4.0, 1.5]
    assert parse_snr_grid("5:-5:-5") == [5.0, 0.0, -5.0]
    with pytest.raises(UsageError):
        parse_snr_grid("0:0:3")
    with pytest.raises(UsageError):
        parse_snr_grid("a,b")


def test_sweep_writes_csv_and_plot(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = cli_main(["--mod", "qpsk", "--bits", "2", "--antennas", "16", "--users", "4",
                     "--snr", "0,4", "--min-errors", "100", "--out", str(out), "--workers", "1"])
    assert code == 0
    curve = read_csv(out)
    assert curve.config.b == 2 and curve.config.quantizer_kind == "lloyd_max"
    assert len(curve.points) == 2
    assert (tmp_path / "run_plot.py").exists()
    assert "BER sim" in capsys.readouterr().out


def test_negative_snr_grid_accepted(tmp_path):
    out = tmp_path / "neg.csv"
    assert cli_main(["--mod", "16qam", "--bits", "2", "--antennas", "16", "--users", "4",
                     "--snr", "-10:4:-2", "--min-errors", "100", "--out", str(out), "--workers", "1"]) == 0
    assert [p.snr_db_per_bit for p in read_csv(out).points] == [-10.0, -6.0, -2.0]


def test_default_is_full_precision(tmp_path):
    out = tmp_path / "full.csv"
    assert cli_main(["--antennas", "8", "--users", "2", "--snr", "0", "--min-errors", "100",
                     "--out", str(out), "--workers", "1"]) == 0
    assert read_csv(out).config.quantizer_kind == "none"


def test_table2_analytical_only(capsys):
    assert cli_main(["--preset", "table2", "--analytical-only"]) == 0
    text = capsys.readouterr().out
    assert text.count("not simulated") == 12


def test_degradation_preset(tmp_path, capsys):
    out = tmp_path / "deg.csv"
    assert cli_main(["--preset", "degradation", "--out", str(out)]) == 0
    assert "unreachable" in capsys.readouterr().out
    assert out.exists()


@pytest.mark.parametrize("argv", [
    ["--bits", "1", "--quantizer", "none"],
    ["--mod", "8psk"],
    ["--quantizer", "sigma-delta"],
    ["--bits", "two"],
    ["--bits", "12"],
    ["--snr", "1:0:2"],
    ["--no-such-flag"],
])
def test_usage_errors_exit_1(argv, capsys):
    assert cli_main(argv) == 1
    assert "usage" in capsys.readouterr().err


def test_unwritable_output_exits_2(tmp_path, capsys):
    bad = tmp_path / "nope" / "x.csv"
    code = cli_main(["--antennas", "8", "--users", "2", "--snr", "0", "--min-errors", "100",
                     "--out", str(bad), "--workers", "1"])
    assert code == 2
    assert "cannot write" in capsys.readouterr().err
