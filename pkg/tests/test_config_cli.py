"""Configuration round-trips, CSV schemas, CLI determinism, and exit codes."""

import csv
import io
from dataclasses import replace

import pytest

import slotshare as ss
from slotshare import cli
from slotshare.config import (
    ConfigError,
    SlotScenario,
    default_config,
    emit_config,
    parse_config,
    slots_from_scenario,
)


class TestConfig:
    def test_slot_scenario_expansion(self):
        slots = slots_from_scenario(SlotScenario.SMALL_COLLISION, beta=0.01)
        assert slots.idle == 0.01
        assert slots.success == 1.01
        assert slots.collision == pytest.approx(0.101, abs=1e-15)
        assert slots_from_scenario(SlotScenario.EQUAL_SLOTS).collision == 1.01
        assert slots_from_scenario(SlotScenario.LARGE_COLLISION).collision == 2.02

    def test_round_trip_default(self):
        config = default_config()
        assert parse_config(emit_config(config)) == config

    def test_round_trip_modified(self):
        config = default_config()
        scenario = replace(
            config.scenario,
            sizes=ss.NetworkSizes(7, 3),
            alpha=0.123456789,
            p_r=0.875,
            initial_age=2.5,
        )
        config = replace(
            config,
            scenario=scenario,
            n_runs=123,
            master_seed=987654321,
            alphas=(0.25, 0.5, 0.75),
        )
        assert parse_config(emit_config(config)) == config

    def test_round_trip_explicit_slots(self):
        config = default_config()
        scenario = replace(config.scenario, slots=ss.SlotLengths(0.02, 1.5, 0.7))
        config = replace(config, scenario=scenario, slot_scenario=None)
        assert parse_config(emit_config(config)) == config

    def test_parse_reads_named_scenario_and_grids(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text(
            "[scenario]\n"
            "n_aon = 2\n"
            "slot_scenario = small_collision\n"
            "alpha = 0.8\n"
            "[run]\n"
            "n_runs = 50\n"
            "[grids]\n"
            "alpha_grid = 0.1:0.9:5\n"
            "ages = 1.0, 2.0\n"
        )
        config = parse_config(str(path))
        assert config.scenario.sizes.n_aon == 2
        assert config.scenario.slots.collision == pytest.approx(0.101)
        assert config.scenario.alpha == 0.8
        assert config.n_runs == 50
        assert config.alpha_grid == pytest.approx((0.1, 0.3, 0.5, 0.7, 0.9))
        assert config.ages == (1.0, 2.0)

    def test_field_errors_carry_location(self):
        with pytest.raises(ConfigError, match="scenario.alpha"):
            parse_config("[scenario]\nalpha = not-a-number\n")
        with pytest.raises(ConfigError, match="grids.alpha_grid"):
            parse_config("[grids]\nalpha_grid = 0.1:0.9\n")
        with pytest.raises(ConfigError, match="scenario"):
            parse_config("[scenario]\nalpha = 1.7\n")

    def test_paper_scale(self):
        config = default_config().at_paper_scale()
        assert (config.n_runs, config.n_stages) == (100_000, 1_000)


def run_cli(args):
    buffer = io.StringIO()
    import contextlib

    with contextlib.redirect_stdout(buffer):
        code = cli.main(args)
    return code, buffer.getvalue()


class TestCli:
    def test_msne_table_thresholds(self, tmp_path):
        config = tmp_path / "c.ini"
        config.write_text(
            "[scenario]\nslot_scenario = small_collision\n[grids]\nages = 1.0, 4.646\n"
        )
        code, out = run_cli(["msne", "--config", str(config)])
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 3
        assert "-0.68125" in lines[1]
        assert "4.545" in lines[1]
        # tau_ton column is 1/N_T in every row
        assert all("0.2" in line.split()[2] for line in lines[1:])

    def test_msne_table_silent_row(self, tmp_path):
        config = tmp_path / "c.ini"
        config.write_text("[grids]\nages = 4.9\n")  # equal slots, N=5: threshold 5.0
        code, out = run_cli(["msne", "--config", str(config)])
        assert code == 0
        row = out.strip().splitlines()[1].split()
        assert float(row[1]) == 0.0
        assert row[-1] == "forced_zero"

    def test_stage_table_runs(self):
        code, out = run_cli(["stage"])
        assert code == 0
        assert "cooperate" in out and "compete" in out

    def test_simulate_csv_schema(self, tmp_path):
        out_path = tmp_path / "sim.csv"
        code, _ = run_cli(
            ["simulate", "--mode", "competitive", "--runs", "20", "--stages", "30",
             "--out", str(out_path)]
        )
        assert code == 0
        rows = list(csv.reader(out_path.read_text().splitlines()))
        assert rows[0] == cli.SIMULATE_COLUMNS
        assert len(rows) == 2
        assert rows[1][0] == "competitive"

    def test_simulate_degenerate_scenario_constant_payoff(self, tmp_path):
        # One TON node against a silenced AON succeeds every stage: the mean
        # hits the truncated geometric sum exactly and the error bar is zero.
        config = tmp_path / "c.ini"
        config.write_text(
            "[scenario]\nn_aon = 1\nn_ton = 1\nslot_scenario = large_collision\n"
            "alpha = 0.9\n[run]\nn_runs = 5\nn_stages = 40\n"
        )
        code, out = run_cli(["simulate", "--mode", "competitive", "--config", str(config)])
        assert code == 0
        row = list(csv.DictReader(io.StringIO(out)))[0]
        assert float(row["U_ton_mean"]) == pytest.approx((1 - 0.9**40) * 1.01, abs=1e-12)
        assert float(row["U_ton_se"]) == pytest.approx(0.0, abs=1e-15)

    def test_simulate_deterministic_across_threads(self, tmp_path):
        outputs = []
        for threads in (1, 4, 16):
            out_path = tmp_path / f"sim{threads}.csv"
            code, _ = run_cli(
                ["simulate", "--mode", "cooperative", "--runs", "64", "--stages", "40",
                 "--threads", str(threads), "--seed", "5", "--out", str(out_path)]
            )
            assert code == 0
            outputs.append(out_path.read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]

    def test_freq_csv(self, tmp_path):
        config = tmp_path / "c.ini"
        config.write_text("[grids]\nn_aon_list = 1, 3\n")
        code, out = run_cli(
            ["freq", "--config", str(config), "--runs", "10", "--stages", "20"]
        )
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0] == cli.FREQ_COLUMNS
        assert [r[0] for r in rows[1:]] == ["1", "3"]

    def test_gain_self_test_is_zero(self, tmp_path):
        config = tmp_path / "c.ini"
        config.write_text("[grids]\nalphas = 0.5\npr_grid = 0.4\n")
        code, out = run_cli(
            ["gain", "--config", str(config), "--runs", "15", "--stages", "25",
             "--self-test"]
        )
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0] == cli.GAIN_COLUMNS
        assert float(rows[1][2]) == 0.0
        assert float(rows[1][3]) == 0.0

    def test_region_csv_intersection(self, tmp_path):
        config = tmp_path / "c.ini"
        config.write_text(
            "[scenario]\nn_aon = 2\nn_ton = 2\n"
            "[grids]\nalpha_grid = 0.3, 0.9\npr_grid = 0.3, 0.6\n"
        )
        code, out = run_cli(
            ["region", "--config", str(config), "--runs", "150", "--stages", "80"]
        )
        assert code == 0
        rows = list(csv.reader(out.splitlines()))
        assert rows[0] == cli.REGION_COLUMNS
        assert len(rows) == 5
        for row in rows[1:]:
            ton, aon, spe, indet = (int(row[i]) for i in (2, 3, 4, 5))
            assert indet in (0, 1)
            if -1 not in (ton, aon):
                assert spe == min(ton, aon)
            if ton == 0 or aon == 0:
                assert spe == 0

    def test_config_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[scenario]\nalpha = 2.0\n")
        code, _ = run_cli(["msne", "--config", str(bad)])
        assert code == cli.EXIT_CONFIG

    def test_io_error_exit_code(self, tmp_path):
        code, _ = run_cli(["msne", "--out", str(tmp_path / "missing" / "x.txt")])
        assert code == cli.EXIT_IO

    def test_numeric_regime_exit_code(self, monkeypatch):
        def explode(config):
            raise ss.OutOfRangeError("interior formula escaped")

        monkeypatch.setattr(cli, "cmd_msne", explode)
        code, _ = run_cli(["msne"])
        assert code == cli.EXIT_NUMERIC

    def test_missing_config_file_is_io_error(self):
        code, _ = run_cli(["msne", "--config", "/nonexistent/path.ini"])
        assert code == cli.EXIT_IO


class TestPublishedShapes:
    def test_competitive_ton_payoff_increases_with_collision_ratio(self):
        # Longer collision slots push the AON toward silence and help the TON.
        means = []
        for scenario_name in ("small_collision", "equal_slots", "large_collision"):
            config = parse_config(f"[scenario]\nslot_scenario = {scenario_name}\n")
            config = replace(config, n_runs=400, n_stages=150)
            text = cli.cmd_simulate(config, ss.Mode.COMPETITIVE)
            row = list(csv.DictReader(io.StringIO(text)))[0]
            means.append(float(row["U_ton_mean"]))
        assert means[0] < means[1] < means[2]

    def test_cooperative_aon_payoff_increases_with_bias(self):
        means = []
        for p_r in (0.2, 0.5, 0.8):
            config = parse_config(f"[scenario]\np_r = {p_r}\n")
            config = replace(config, n_runs=400, n_stages=150)
            text = cli.cmd_simulate(config, ss.Mode.COOPERATIVE)
            row = list(csv.DictReader(io.StringIO(text)))[0]
            means.append(float(row["U_aon_mean"]))
        assert means[0] < means[1] < means[2]
