"""Tests for the command line and the command functions."""

import argparse
import csv
import json
import math

import pytest

from svadi import __version__
from svadi.__main__ import main
from svadi.cli import create_parser
from svadi.models import RunConfig
from svadi.tools import converge, price, stability
from svadi.tools.register_tools import float_list
from svadi.validation import load_run_config


SMALL_CONFIG = {
    "L1": -3.2,
    "K1": 3.2,
    "L2": 0.2,
    "K2": 5.0,
    "h": 0.4,
    "h_list": [0.8, 0.4],
    "h_ref": 0.2,
    "gamma_list": [0.5, 1.0],
}


@pytest.fixture(autouse=True)
def serial_workers(monkeypatch):
    monkeypatch.setenv("SVADI_THREADS", "1")


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL_CONFIG))
    return str(path)


def _read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


class TestParser:
    """Tests for the argument parser."""

    def test_list_flags(self):
        """Test comma separated lists, including negative values."""
        args = create_parser().parse_args(["converge", "--rho=-0.5,0", "--h", "0.4,0.2"])
        assert args.rho == [-0.5, 0.0]
        assert args.h == [0.4, 0.2]
        assert args.command == "converge"
        assert args.handler is converge

    def test_float_list_rejects_garbage(self):
        """Test that empty or non-numeric lists are refused."""
        for text in ("", "a,b"):
            with pytest.raises(argparse.ArgumentTypeError):
                float_list(text)

    def test_version(self, capsys):
        """Test that --version prints the package version."""
        assert main(["--version"]) == 0
        assert __version__ in capsys.readouterr().out

    def test_command_required(self):
        """Test that a missing subcommand is a usage error."""
        assert main([]) == 2


class TestPriceCommand:
    """Tests for svadi price."""

    def test_writes_results(self, tmp_path, config_path, capsys):
        """Test the output files and their headers."""
        out = tmp_path / "out"
        assert main(["price", "--config", config_path, "--out", str(out)]) == 0
        surface = _read_csv(out / "surface.csv")
        assert surface[0] == ["S", "sigma", "V"]
        assert len(surface) == 1 + 17 * 13
        assert _read_csv(out / "u.csv")[0] == ["x", "y", "u"]
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["factorization_passes"] == 2
        assert meta["grid"]["M"] == 17
        assert meta["version"] == __version__
        assert "Priced" in capsys.readouterr().out

    def test_metadata_echoes_config(self, tmp_path, config_path):
        """Test that the echoed config validates back to the one used."""
        out = tmp_path / "echo"
        assert main(["price", "--config", config_path, "--out", str(out), "--scheme", "second"]) == 0
        meta = json.loads((out / "metadata.json").read_text())
        assert RunConfig.model_validate(meta["config"]) == load_run_config(config_path, scheme="second")

    def test_empty_h_list_in_config_exits_2(self, tmp_path):
        """Test that a config with no spacings is refused before any run."""
        path = tmp_path / "empty.json"
        path.write_text(json.dumps({"h_list": []}))
        assert main(["converge", "--config", str(path), "--out", str(tmp_path / "o")]) == 2

    def test_invalid_rho_exits_2(self, tmp_path, config_path, capsys):
        """Test that |rho| > 1 is a configuration error."""
        assert main(["price", "--config", config_path, "--out", str(tmp_path), "--rho", "1.5"]) == 2
        assert "rho" in capsys.readouterr().err

    def test_empty_list_exits_2(self, tmp_path, config_path):
        """Test that an empty spacing list is a usage error."""
        assert main(["price", "--config", config_path, "--h="]) == 2

    def test_list_flag_needs_single_value(self, tmp_path, config_path):
        """Test that price takes exactly one h."""
        assert main(["price", "--config", config_path, "--out", str(tmp_path), "--h=0.4,0.2"]) == 2

    def test_unsmoothed_payoff_from_config(self, tmp_path):
        """Test that smooth_payoff is read from the config file and echoed."""
        path = tmp_path / "raw.json"
        path.write_text(json.dumps({**SMALL_CONFIG, "smooth_payoff": False}))
        out = tmp_path / "raw"
        assert main(["price", "--config", str(path), "--out", str(out)]) == 0
        meta = json.loads((out / "metadata.json").read_text())
        assert meta["config"]["smooth_payoff"] is False

    def test_missing_config_exits_2(self, tmp_path):
        """Test that a config path that does not exist is refused."""
        assert main(["price", "--config", str(tmp_path / "none.json")]) == 2

    async def test_tool_call_returns_dict(self, tmp_path, config_path):
        """Test the command function directly."""
        result = await price(config_path=config_path, out=str(tmp_path / "direct"))
        assert result["status"] == "success"
        assert result["details"]["files"] == ["surface.csv", "u.csv", "metadata.json"]


class TestStudyCommands:
    """Tests for svadi converge and svadi stability."""

    def test_converge_outputs(self, tmp_path, config_path):
        """Test headers and one row per spacing."""
        out = tmp_path / "conv"
        assert main(["converge", "--config", config_path, "--out", str(out)]) == 0
        errors = _read_csv(out / "errors.csv")
        assert errors[0] == ["scheme", "rho", "gamma", "h", "eps_l2", "eps_linf", "order_pair"]
        assert [row[3] for row in errors[1:]] == ["0.8", "0.4"]
        assert errors[1][6] == ""
        orders = _read_csv(out / "orders.csv")
        assert orders[0] == ["scheme", "rho", "gamma", "slope_l2", "slope_linf"]
        assert len(orders) == 2

    def test_converge_is_deterministic(self, tmp_path, config_path):
        """Test that two runs write identical files."""
        for name in ("a", "b"):
            assert main(["converge", "--config", config_path, "--out", str(tmp_path / name), "--scheme", "second"]) == 0
        assert (tmp_path / "a" / "errors.csv").read_text() == (tmp_path / "b" / "errors.csv").read_text()

    def test_stability_per_rho(self, tmp_path, config_path):
        """Test one file per correlation when several are given."""
        out = tmp_path / "stab"
        assert main(["stability", "--config", config_path, "--out", str(out), "--rho=-0.5,0", "--gamma", "0.5"]) == 0
        for name in ("stability_rho=-0.5.csv", "stability_rho=0.0.csv"):
            rows = _read_csv(out / name)
            assert rows[0] == ["gamma", "h", "rel_eps_l2", "unstable_flag"]
            assert len(rows) == 3
            assert all(row[3] in ("0", "1") for row in rows[1:])

    async def test_stability_tool_call(self, tmp_path, config_path):
        """Test the single-correlation file name and the summary."""
        result = await stability(config_path=config_path, out=str(tmp_path / "s"))
        assert result["status"] == "success"
        assert result["details"]["files"] == ["stability.csv"]
        assert result["details"]["max_rel_eps_l2"] is not None


@pytest.mark.slow
class TestDefaultPrice:
    """Default-config pricing run."""

    def test_surface_bounds(self, tmp_path):
        """Test the S -> 0 column and nonnegativity of the surface."""
        out = tmp_path / "default"
        assert main(["price", "--out", str(out)]) == 0
        rows = [tuple(map(float, r)) for r in _read_csv(out / "surface.csv")[1:]]
        smallest = min(r[0] for r in rows)
        discounted = 100.0 * math.exp(-0.05 * 0.5)
        low_column = [r[2] for r in rows if r[0] == smallest]
        assert max(abs(v - discounted) for v in low_column) < 1e-2 * discounted
        assert min(r[2] for r in rows) >= -1e-8 * 100.0
