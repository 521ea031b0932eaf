"""Tests for the command-line entry point."""

import json

import numpy as np
import pytest


def run_json(capsys, argv):
    """Run main and decode its JSON output."""
    from src.cli import main

    code = main(argv)
    return code, json.loads(capsys.readouterr().out)


@pytest.mark.unit
def test_info_symmetric_rank_three(capsys):
    """Test n = 6 and d = 1 for Sym(3, R)."""
    code, document = run_json(capsys, ["info", "--family", "symr", "--rank", "3"])

    assert code == 0
    assert document["schema"] == "jordan-zeta/1"
    assert document["info"]["dim"] == 6
    assert document["info"]["degree"] == 1
    assert document["info"]["n_over_r"] == pytest.approx(2.0)


@pytest.mark.unit
@pytest.mark.parametrize(
    "argv,expected",
    [
        (["--rank", "2", "--x", "[1, 1, 0]"], "Omega_0"),
        (["--rank", "3", "--x", "[[1, 0, 0], [0, -1, 0], [0, 0, 0]]"], "S_{2,1}"),
        (["--family", "spin", "--dim", "5", "--x", "(-3|1,0,0,0)"], "Omega_2"),
    ],
)
def test_orbit_labels(capsys, argv, expected):
    """Test orbit of e, of diag(1, -1, 0) and of a negative-definite Spin element."""
    code, document = run_json(capsys, ["orbit"] + argv)

    assert code == 0
    assert document["orbit"] == expected


@pytest.mark.unit
def test_spectral_command(capsys):
    """Test eigenvalues of diag(2, -1)."""
    code, document = run_json(capsys, ["spectral", "--x", "[2, -1, 0]"])

    assert code == 0
    assert np.allclose(document["eigenvalues"], [2.0, -1.0])
    assert document["determinant"] == pytest.approx(-2.0)


@pytest.mark.unit
def test_increasing_partition_is_usage_error():
    """Test exit code 2 for a non-partition."""
    from src.cli import EXIT_USAGE, main

    assert main(["criticals", "--m", "1,2"]) == EXIT_USAGE


@pytest.mark.unit
def test_malformed_element_reports_position(capsys):
    """Test exit code 2 and the character position of a parse error."""
    from src.cli import EXIT_USAGE, main

    assert main(["orbit", "--x", "[1, 2"]) == EXIT_USAGE
    assert "position" in capsys.readouterr().err


@pytest.mark.unit
def test_parse_element_literals():
    """Test the Spin literal, coordinates and family mismatches."""
    from src.algebra_core import det, make_algebra
    from src.cli import InputParseError, parse_element

    spin = make_algebra("spin", None, 5)
    assert det(parse_element(spin, "(3|1,2,0,0)")) == pytest.approx(4.0)
    with pytest.raises(InputParseError):
        parse_element(spin, "[[1, 0], [0, 1]]")
    with pytest.raises(InputParseError) as info:
        parse_element(spin, "(3|1,x,0,0)")
    assert info.value.position > 3

    symr2 = make_algebra("symr", 2)
    assert np.allclose(parse_element(symr2, "[1, 2, 3]").coords, [1, 2, 3])
    with pytest.raises(InputParseError):
        parse_element(symr2, "(1|0)")
    with pytest.raises(InputParseError):
        parse_element(symr2, "[1, 2]")


@pytest.mark.unit
def test_criticals_csv(capsys):
    """Test the CSV table of critical points."""
    from src.cli import main

    code = main(["criticals", "--m", "2,0", "--window=-2,1", "--format", "csv"])
    lines = capsys.readouterr().out.strip().splitlines()

    assert code == 0
    assert lines[0] == "multiplicity,s0"
    assert [line.split(",")[1] for line in lines[1:]] == ["1", "0", "-1", "-3/2", "-2"]


@pytest.mark.unit
def test_poleatlas_empty_window(capsys):
    """Test an empty window gives an empty table and exit 0."""
    code, document = run_json(capsys, ["poleatlas", "--window=5,6"])

    assert code == 0
    assert document["rows"] == []


@pytest.mark.unit
def test_poleatlas_hermitian(capsys):
    """Test predicted orders of Phi_0 on Herm(2, C)."""
    code, document = run_json(capsys, ["poleatlas", "--family", "hermc", "--window=-2,-1", "--c", "1,0,0"])

    assert code == 0
    orders = {row["s0"]: row["predicted_order"] for row in document["rows"]}
    assert orders == {"-1": 1, "-2": 2}


@pytest.mark.unit
def test_gamma_command_and_pole(capsys):
    """Test Gamma_Omega output and exit 2 at a pole."""
    from src.cli import EXIT_USAGE, main

    code, document = run_json(capsys, ["gamma", "--rank", "1", "--s", "2"])
    assert code == 0
    assert document["rows"][0]["re"] == pytest.approx(2.0)
    assert main(["gamma", "--rank", "1", "--s=-1"]) == EXIT_USAGE


@pytest.mark.unit
def test_zeta_command_on_line(capsys):
    """Test Phi_0(exp(-x^2/2), -1/2) through the command line."""
    from scipy.special import gamma

    code, document = run_json(capsys, ["zeta", "--rank", "1", "--j", "0", "--s=-0.5"])

    assert code == 0
    assert document["rows"][0]["re"] == pytest.approx(2 ** -0.75 * gamma(0.25), rel=1e-6)


@pytest.mark.unit
def test_non_spherical_weight_is_rejected():
    """Test the spherical gate."""
    from src.cli import EXIT_USAGE, main

    assert main(["info", "--weight", "0,1"]) == EXIT_USAGE


@pytest.mark.unit
def test_extra_arguments_rejected():
    """Test that only verify takes positional check names."""
    from src.cli import EXIT_USAGE, main

    assert main(["info", "chart"]) == EXIT_USAGE
    assert main(["nonsense"]) == EXIT_USAGE


@pytest.mark.integration
def test_verify_equivariance(tmp_path, capsys):
    """Test verify writes reports and exits 0."""
    from src.cli import main

    out = tmp_path / "reports"
    code = main(["verify", "equivariance", "--m", "1,0", "--out", str(out)])

    assert code == 0
    assert (out / "00_equivariance.json").exists()
    assert (out / "summary.csv").exists()
    assert "PASS equivariance" in capsys.readouterr().out


@pytest.mark.unit
def test_indeterminate_laurent_is_budget_exit():
    """Test exit code 3 when every Laurent coefficient is below the noise floor."""
    from src.cli import EXIT_BUDGET, main

    # Phi_0 - Phi_1 vanishes for the even default Gaussian
    assert main(["laurent", "--rank", "1", "--c", "1,-1", "--s=-2"]) == EXIT_BUDGET


@pytest.mark.integration
def test_verify_appends_summary_and_controls(tmp_path, capsys):
    """Test control rows in the output and one summary row per check and run."""
    import csv

    from src.cli import main

    out = tmp_path / "reports"
    argv = ["verify", "equivariance", "--m", "1,0", "--out", str(out)]
    assert main(argv) == 0
    assert main(argv) == 0

    assert "PASS equivariance_control" in capsys.readouterr().out
    with (out / "summary.csv").open() as handle:
        names = [row["name"] for row in csv.DictReader(handle)]
    assert names == ["equivariance", "equivariance_control"] * 2
