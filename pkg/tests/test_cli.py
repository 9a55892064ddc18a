import csv
import itertools
import json

import numpy as np
import pytest
from click.testing import CliRunner

from evbet.cli import main
from evbet.domain import SampleSpace
from evbet.multiround import MultiRoundCoinBet, coinbet_eprocess, eprocess_to_csv


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, args):
    return runner.invoke(main, args, catch_exceptions=False)


def write_separation_table(path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "x2", "value"])
        for x1, x2 in itertools.product((0.0, 0.5, 1.0), repeat=2):
            w.writerow([x1, x2, 4.0 if (x1, x2) == (1.0, 0.5) else 0.0])


class TestSimulate:
    def test_sure_rejection_example(self, runner, tmp_path):
        out = tmp_path / "ledger.csv"
        result = invoke(
            runner,
            ["simulate", "--mu", "0.1", "--dist", "point:1", "--strategy", "constant:10",
             "--n", "5", "--delta", "0.05", "--out", str(out)],
        )
        assert result.exit_code == 0
        summary = json.loads(result.output)
        assert summary["rejected_at"] == 2
        rows = list(csv.DictReader(out.open()))
        assert [r["rejected"] for r in rows] == ["0", "1", "1", "1", "1"]
        assert float(rows[-1]["log_wealth"]) == pytest.approx(5 * np.log(10.0))

    def test_point_mass_at_mean_never_rejects(self, runner, tmp_path):
        out = tmp_path / "ledger.csv"
        result = invoke(
            runner,
            ["simulate", "--mu", "0.5", "--dist", "point:0.5", "--strategy", "up",
             "--n", "100", "--delta", "0.05", "--seed", "1", "--out", str(out)],
        )
        summary = json.loads(result.output)
        assert summary["rejected_at"] is None
        rows = list(csv.DictReader(out.open()))
        assert all(float(r["log_wealth"]) <= 1e-12 for r in rows)

    def test_byte_identical_reruns(self, runner, tmp_path):
        args = ["simulate", "--mu", "0.4", "--dist", "bernoulli:0.6", "--strategy", "up:101",
                "--n", "50", "--seed", "9"]
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        r1 = invoke(runner, args + ["--out", str(out1)])
        r2 = invoke(runner, args + ["--out", str(out2)])
        assert r1.output == r2.output
        assert out1.read_bytes() == out2.read_bytes()

    def test_ledger_round_trip(self, runner, tmp_path):
        out = tmp_path / "ledger.csv"
        invoke(runner, ["simulate", "--mu", "0.3", "--dist", "uniform-grid:5",
                        "--strategy", "up:51", "--n", "30", "--seed", "4", "--out", str(out)])
        rows = list(csv.DictReader(out.open()))
        wealth = 0.0
        for row in rows:
            e = float(row["e_value"])
            wealth = -np.inf if e == 0 else wealth + np.log(e)
            assert float(row["log_wealth"]) == wealth

    def test_config_error_exit_2(self, runner):
        result = CliRunner().invoke(
            main, ["simulate", "--mu", "0.5", "--dist", "gauss:1", "--n", "5"]
        )
        assert result.exit_code == 2

    def test_bad_strategy_exit_2(self, runner):
        result = CliRunner().invoke(
            main, ["simulate", "--mu", "0.5", "--dist", "point:0.5", "--strategy",
                   "constant:9", "--n", "5"]
        )
        assert result.exit_code == 2

    def test_up_raw_flag_runs(self, runner, tmp_path):
        out = tmp_path / "ledger.csv"
        result = invoke(
            runner,
            ["simulate", "--mu", "0.5", "--dist", "bernoulli:0.5", "--strategy", "up:51",
             "--n", "20", "--seed", "2", "--up-raw", "--out", str(out)],
        )
        assert result.exit_code == 0


class TestCs:
    def test_interval_schema_and_coverage(self, runner, tmp_path):
        out = tmp_path / "cs.csv"
        result = invoke(
            runner,
            ["cs", "--dist", "bernoulli:0.5", "--strategy", "up:101", "--n", "400",
             "--grid", "99", "--seed", "12", "--out", str(out)],
        )
        assert result.exit_code == 0
        rows = list(csv.DictReader(out.open()))
        assert len(rows) == 400
        final = rows[-1]
        assert float(final["lower"]) <= 0.5 <= float(final["upper"])
        assert 0 < int(final["alive"]) <= 99

    def test_seeded_golden_interval(self, runner, tmp_path):
        # Frozen from the first computation of this exact run (both backends
        # give the same grid-valued bounds); the interval must contain 0.5.
        out = tmp_path / "cs.csv"
        result = invoke(
            runner,
            ["cs", "--dist", "bernoulli:0.5", "--strategy", "up:101", "--n", "1000",
             "--grid", "99", "--seed", "2024", "--out", str(out)],
        )
        assert result.exit_code == 0
        final = list(csv.DictReader(out.open()))[-1]
        assert (final["t"], int(final["alive"])) == ("1000", 11)
        assert float(final["lower"]) == pytest.approx(0.46)
        assert float(final["upper"]) == pytest.approx(0.56)
        assert float(final["lower"]) <= 0.5 <= float(final["upper"])

    def test_running_intersect_widths_non_increasing(self, runner, tmp_path):
        out = tmp_path / "cs.csv"
        invoke(
            runner,
            ["cs", "--dist", "bernoulli:0.7", "--strategy", "up:101", "--n", "300",
             "--grid", "49", "--seed", "3", "--running-intersect", "--out", str(out)],
        )
        widths = []
        for row in csv.DictReader(out.open()):
            if int(row["alive"]) == 0:
                widths.append(0.0)
            else:
                widths.append(float(row["upper"]) - float(row["lower"]))
        assert all(b <= a + 1e-15 for a, b in zip(widths, widths[1:]))

    def test_membership_matrix(self, runner, tmp_path):
        out = tmp_path / "cs.csv"
        member = tmp_path / "m.csv"
        invoke(
            runner,
            ["cs", "--dist", "bernoulli:0.5", "--strategy", "constant:0.5", "--n", "10",
             "--grid", "5", "--seed", "1", "--out", str(out), "--membership", str(member)],
        )
        rows = list(csv.DictReader(member.open()))
        assert len(rows) == 50
        alive_from_matrix = sum(int(r["in_set"]) for r in rows if r["t"] == "10")
        cs_rows = list(csv.DictReader(out.open()))
        assert alive_from_matrix == int(cs_rows[-1]["alive"])

    def test_constant_fraction_invalid_somewhere_on_grid_exit_2(self, runner):
        # constant:1.9 is fine at mu=0.5 but outside I_mu at mu=0.9
        result = CliRunner().invoke(
            main, ["cs", "--dist", "bernoulli:0.5", "--strategy", "constant:1.9",
                   "--n", "5", "--grid", "9"]
        )
        assert result.exit_code == 2

    def test_json_format(self, runner, tmp_path):
        out = tmp_path / "cs.json"
        invoke(
            runner,
            ["cs", "--dist", "point:0.5", "--strategy", "constant:0.0", "--n", "3",
             "--grid", "9", "--seed", "1", "--format", "json", "--out", str(out)],
        )
        rows = json.loads(out.read_text())
        assert len(rows) == 3
        assert rows[0]["lower"] == pytest.approx(0.1)
        assert rows[0]["alive"] == 9

    def test_trivial_strategy_full_span(self, runner, tmp_path):
        out = tmp_path / "cs.csv"
        invoke(
            runner,
            ["cs", "--dist", "bernoulli:0.9", "--strategy", "constant:0.0", "--n", "20",
             "--grid", "9", "--seed", "1", "--out", str(out)],
        )
        for row in csv.DictReader(out.open()):
            assert (float(row["lower"]), float(row["upper"])) == (0.1, 0.9)
            assert int(row["alive"]) == 9


class TestCompare:
    def test_zero_schedule_all_zero(self, runner, tmp_path):
        out = tmp_path / "cmp.csv"
        invoke(
            runner,
            ["compare", "--mu", "0.5", "--dist", "bernoulli:0.5", "--n", "25",
             "--alpha", "0", "--seed", "5", "--out", str(out)],
        )
        for row in csv.DictReader(out.open()):
            assert float(row["logW_hoeffding"]) == 0.0
            assert float(row["logW_coinbet"]) == 0.0
            assert float(row["gap"]) == 0.0

    def test_gap_nonnegative_and_grows_on_binary_data(self, runner, tmp_path):
        out = tmp_path / "cmp.csv"
        invoke(
            runner,
            ["compare", "--mu", "0.5", "--dist", "bernoulli:0.4", "--n", "200",
             "--alpha", "1.0", "--seed", "6", "--out", str(out)],
        )
        gaps = [float(r["gap"]) for r in csv.DictReader(out.open())]
        assert min(gaps) >= -1e-12
        assert gaps[-1] > 0.0

    def test_alpha_file_schedule(self, runner, tmp_path):
        sched = tmp_path / "alphas.txt"
        sched.write_text("\n".join(["0.5"] * 10))
        out = tmp_path / "cmp.csv"
        result = invoke(
            runner,
            ["compare", "--mu", "0.3", "--dist", "bernoulli:0.3", "--n", "10",
             "--alpha-file", str(sched), "--seed", "2", "--out", str(out)],
        )
        assert result.exit_code == 0
        assert len(list(csv.DictReader(out.open()))) == 10

    def test_short_alpha_file_exit_2(self, runner, tmp_path):
        sched = tmp_path / "alphas.txt"
        sched.write_text("0.5\n")
        result = CliRunner().invoke(
            main, ["compare", "--mu", "0.3", "--dist", "point:0.3", "--n", "10",
                   "--alpha-file", str(sched)]
        )
        assert result.exit_code == 2


class TestCheckAndDominate:
    def test_constant_one_valid(self, runner, tmp_path):
        table = tmp_path / "t.csv"
        table.write_text("point,value\n0.0,1.0\n0.5,1.0\n1.0,1.0\n")
        result = invoke(runner, ["check", "--table", str(table), "--mu", "0.5"])
        verdict = json.loads(result.output)
        assert verdict["valid"] is True
        assert verdict["certificate"]["lambda_hat"] == 0.0

    def test_envelope_refuted_with_witness(self, runner, tmp_path):
        table = tmp_path / "t.csv"
        table.write_text("point,value\n0.0,2.0\n0.5,1.0\n1.0,2.0\n")
        result = invoke(runner, ["check", "--table", str(table), "--mu", "0.5"])
        verdict = json.loads(result.output)
        assert verdict["valid"] is False
        assert (verdict["witness"]["a"], verdict["witness"]["b"]) == (0.0, 1.0)
        assert verdict["witness"]["expectation"] == pytest.approx(2.0)
        strict = CliRunner().invoke(
            main, ["check", "--table", str(table), "--mu", "0.5", "--strict"]
        )
        assert strict.exit_code == 3

    def test_dominate_single_round(self, runner, tmp_path):
        table = tmp_path / "t.csv"
        table.write_text("point,value\n0.0,0.5\n0.5,1.0\n1.0,1.5\n")
        result = invoke(runner, ["dominate", "--table", str(table), "--mu", "0.5"])
        verdict = json.loads(result.output)
        assert verdict["certified"] is True
        assert verdict["lambda_hat"] == pytest.approx(1.0)

    def test_dominate_t2_refutes_separation_table(self, runner, tmp_path):
        table = tmp_path / "sep.csv"
        write_separation_table(table)
        result = invoke(runner, ["dominate", "--table", str(table), "--mu", "0.5", "--t2"])
        verdict = json.loads(result.output)
        assert verdict["certified"] is False
        assert verdict["witness"]["expectation"] == pytest.approx(2.0)
        strict = CliRunner().invoke(
            main, ["dominate", "--table", str(table), "--mu", "0.5", "--t2", "--strict"]
        )
        assert strict.exit_code == 3

    def test_dominate_t2_certifies_constant(self, runner, tmp_path):
        table = tmp_path / "ones.csv"
        with open(table, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x1", "x2", "value"])
            for x1, x2 in itertools.product((0.0, 0.5, 1.0), repeat=2):
                w.writerow([x1, x2, 1.0])
        result = invoke(runner, ["dominate", "--table", str(table), "--mu", "0.5", "--t2"])
        verdict = json.loads(result.output)
        assert verdict["certified"] is True
        assert verdict["lambda1"] == 0.0


class TestAudit:
    @pytest.fixture
    def coinbet_csv(self, tmp_path, rng):
        space = SampleSpace((0.0, 0.5, 1.0), 0.5)
        tables = []
        for t in range(1, 4):
            tables.append(
                {
                    prefix: float(rng.uniform(-2, 2))
                    for prefix in itertools.product(space.points, repeat=t - 1)
                }
            )
        process = coinbet_eprocess(MultiRoundCoinBet(0.5, tuple(tables)), space)
        path = tmp_path / "ep.csv"
        with open(path, "w", newline="") as fh:
            eprocess_to_csv(process, space, 3, fh)
        return path

    def test_coinbet_process_passes(self, runner, coinbet_csv):
        result = invoke(
            runner,
            ["audit", "--table", str(coinbet_csv), "--mu", "0.5", "--depth", "3",
             "--random", "200", "--seed", "7"],
        )
        report = json.loads(result.output)
        assert report["pass"] is True
        assert report["max"] == pytest.approx(1.0, abs=1e-9)
        assert set(report) == {"max", "d", "mask", "pass"}

    def test_strict_refutation_exit_3(self, runner, tmp_path, coinbet_csv):
        # scale the depth-2 values by 1.5 in the CSV to break the process
        rows = list(csv.DictReader(open(coinbet_csv)))
        bad = tmp_path / "bad.csv"
        with open(bad, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["depth", "path", "value"])
            for r in rows:
                v = float(r["value"])
                if int(r["depth"]) == 2:
                    v *= 1.5
                w.writerow([r["depth"], r["path"], repr(v)])
        result = CliRunner().invoke(
            main, ["audit", "--table", str(bad), "--mu", "0.5", "--depth", "2",
                   "--random", "50", "--strict"]
        )
        assert result.exit_code == 3
        report = json.loads(result.output)
        assert report["pass"] is False
        assert report["max"] >= 1.5 - 1e-9


class TestIidCheck:
    def test_separation_table_verdicts(self, runner, tmp_path):
        table = tmp_path / "sep.csv"
        write_separation_table(table)
        result = invoke(runner, ["iid-check", "--table", str(table)])
        verdict = json.loads(result.output)
        assert verdict["iid_valid"] is True
        assert verdict["brute_force"]["valid"] is True
        assert verdict["conditional_valid"] is False
        assert verdict["conditional_witness"]["expectation"] == pytest.approx(2.0)

    def test_xi_literal(self, runner):
        result = invoke(runner, ["iid-check", "--xi", "1,1,1"])
        verdict = json.loads(result.output)
        assert verdict["iid_valid"] is True
        assert verdict["brute_force"]["max_expectation"] == pytest.approx(1.0)

    def test_invalid_xi_strict_exit_3(self, runner):
        result = CliRunner().invoke(main, ["iid-check", "--xi", "1,1.01,1", "--strict"])
        assert result.exit_code == 3

    def test_conflicting_inputs_exit_2(self, runner):
        result = CliRunner().invoke(main, ["iid-check", "--xi", "1,1,1", "--table", "x.csv"])
        assert result.exit_code == 2
