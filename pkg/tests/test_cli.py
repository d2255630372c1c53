import json
import subprocess
import sys

import pytest

from dampwave.cli import EXIT_INPUT, EXIT_IO, EXIT_NUMERIC, EXIT_OK, main


def run_json(capsys, argv):
    code = main(argv + ["--json"])
    return code, json.loads(capsys.readouterr().out or "null")


def test_exponents(capsys):
    code, out = run_json(capsys, ["exponents", "--N", "1", "--mu", "1", "--p", "3"])
    assert code == EXIT_OK
    assert out["theta"] == pytest.approx(6.0)
    assert out["regime"] == "Subcritical"


def test_hyp2f1(capsys):
    code, out = run_json(capsys, ["hyp2f1", "--a", "1", "--b", "1", "--c", "2", "--z", "0.5"])
    assert code == EXIT_OK
    assert out["value"] == pytest.approx(1.3862943611198906, rel=1e-14)
    assert out["method"] == "DirectSeries"


def test_verify_identities(capsys):
    code, out = run_json(capsys, ["verify-identities", "--beta", "1.2", "--mu", "0.8", "--N", "2"])
    assert code == EXIT_OK and out["pass"]


def test_blowup_ode(capsys):
    code, out = run_json(capsys, ["blowup-ode", "--case", "i", "--p", "2",
                                  "--eps-range", "1e-3:1e-1:4"])
    assert code == EXIT_OK
    assert out["slope"] == pytest.approx(-0.5, rel=0.1)


def test_simulate_then_functionals(tmp_path, capsys):
    run = tmp_path / "run"
    code, rep = run_json(capsys, ["simulate", "--N", "2", "--mu", "0.8", "--p", "2.2",
                                  "--eps", "1", "--amp-g", "1", "--T-max", "1",
                                  "--snapshot-every", "1", "--output", str(run)])
    assert code == EXIT_OK and rep["status"] == "CompletedNoBlowup"
    assert {"config.json", "report.json", "snapshots.csv"} <= {p.name for p in run.iterdir()}
    code, fr = run_json(capsys, ["functionals", "--run", str(run), "--q", "3"])
    assert code == EXIT_OK
    assert fr["base_gap_t0"] < 1e-10 and fr["trick_gap"] < 1e-4
    assert fr["fitted_constants"]["C1_i"] > 0
    assert (run / "functionals.csv").read_text().startswith("t,G,H,J")


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"N": 1, "mu": 1, "p": 2.5}))
    code, out = run_json(capsys, ["exponents", "--config", str(cfg), "--p", "3"])
    assert code == EXIT_OK and out["theta"] == pytest.approx(6.0)


def test_sweep_and_fit(tmp_path, capsys):
    out = tmp_path / "sw"
    code, fit = run_json(capsys, ["sweep", "--N", "1", "--mu", "1", "--p", "3", "--amp-f", "6",
                                  "--T-cap", "40", "--eps-range", "0.6:1:4",
                                  "--min-decades", "0.2", "--output", str(out)])
    assert code == EXIT_OK and fit["consistent"] is True
    code, refit = run_json(capsys, ["fit", "--N", "1", "--mu", "1", "--p", "3",
                                    "--min-decades", "0.2", "--output", str(out)])
    assert code == EXIT_OK and refit["slope"] == fit["slope"]
    code, gated = run_json(capsys, ["fit", "--N", "1", "--mu", "1", "--p", "3",
                                    "--output", str(out)])
    assert code == EXIT_OK and gated["model"] is None


@pytest.mark.parametrize("argv", [
    ["exponents", "--N", "1", "--mu", "1"],                      # missing p
    ["exponents", "--N", "0", "--mu", "1", "--p", "3"],          # N < 1
    ["hyp2f1", "--a", "1", "--b", "1", "--c", "0", "--z", "0.5"],
    ["hyp2f1", "--a", "1", "--b", "1", "--c", "2", "--z", "1.5"],
    ["blowup-ode", "--case", "i", "--p", "2", "--eps-range", "0.1:0.05:2"],
    ["nonsense"],
])
def test_input_errors_exit_one(argv, capsys):
    assert main(argv) == EXIT_INPUT
    assert "error" in capsys.readouterr().err


def test_numerical_failure_exits_two(capsys):
    # the series budget runs out long before convergence
    argv = ["hyp2f1", "--a", "0.5", "--b", "0.5", "--c", "1", "--z", "0.4", "--max-terms", "5"]
    assert main(argv) == EXIT_NUMERIC


def test_unwritable_output_exits_three(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    argv = ["simulate", "--N", "1", "--mu", "1", "--p", "3", "--eps", "1", "--T-max", "0.5",
            "--output", str(blocker / "sub")]
    assert main(argv) == EXIT_IO


def test_missing_config_exits_three(tmp_path):
    assert main(["exponents", "--config", str(tmp_path / "nope.json")]) == EXIT_IO


def test_console_script_module():
    res = subprocess.run([sys.executable, "-m", "dampwave.cli", "exponents", "--N", "4",
                          "--mu", "0", "--p", "1.5", "--quiet"], capture_output=True, text=True)
    assert res.returncode == EXIT_OK and res.stdout == ""
