import csv
import io
import json

import pytest

from strsub import cli
from strsub.instances import ParseError, dump_instance, instance_from_dict, load_instance
from strsub.optimize import OptimalResult
from strsub.properties import factor_thm3
from strsub.task_assignment import ta_random_instance


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def body(text):
    doc = json.loads(text)
    doc.pop("timings")
    return doc


@pytest.fixture
def task_file(tmp_path):
    path = tmp_path / "task.json"
    path.write_text(json.dumps({
        "schema_version": 1, "model": "task_assignment", "n": 1, "m": 2, "K": 2,
        "L": [[0.5, 0.5]], "U": [[0.9, 0.9]], "p": [[[0.6, 0.7], [0.6, 0.7]]],
    }))
    return str(path)


@pytest.fixture
def table_file(tmp_path):
    # gains increase with length: not K-diminishing
    values = [{"string": list(s), "value": float(len(s)) ** 2}
              for s in [(0,), (1,), (0, 0), (0, 1), (1, 0), (1, 1)]]
    path = tmp_path / "table.json"
    path.write_text(json.dumps({"schema_version": 1, "model": "table", "alphabet_size": 2, "K": 2, "values": values}))
    return str(path)


class TestSolve:
    def test_task_instance(self, task_file, capsys):
        code, out, _ = run(["solve", "--instance", task_file], capsys)
        assert code == 0
        doc = json.loads(out)
        assert doc["greedy"]["value"] == pytest.approx(0.91, abs=1e-12)
        assert doc["optimal"]["value"] == pytest.approx(0.91, abs=1e-12)
        assert doc["bounds"]["ratio"] == 1.0
        assert set(doc) >= {"config", "greedy", "optimal", "bounds", "curvatures", "evaluations", "timings"}

    def test_measurement_generated(self, capsys):
        code, out, _ = run(["solve", "--model", "adaptive_measurement", "--sigma-sq", "1,1",
                            "--grid-points", "3", "--format", "csv"], capsys)
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 1
        assert float(rows[0]["ratio"]) >= 0.75
        assert float(rows[0]["factor_thm3"]) == factor_thm3(2)

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(["solve", "--instance", str(tmp_path / "none.json")], capsys)
        assert code == 1 and "cannot read" in err

    def test_malformed_json_reports_line(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{\n  "schema_version": 1,\n  "model": \n}')
        code, _, err = run(["solve", "--instance", str(path)], capsys)
        assert code == 1 and "bad.json:4:" in err

    def test_field_diagnostics(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"schema_version": 1, "model": "task_assignment", "n": 1, "m": 2, "K": 2,
                                    "L": [[0.5, 0.5]], "U": [[0.9, 0.9]], "p": [[[0.6, 0.7]]]}))
        code, _, err = run(["solve", "--instance", str(path)], capsys)
        assert code == 1 and "'p'" in err

    def test_budget(self, capsys):
        code, _, err = run(["solve", "--model", "task_assignment", "--m", "5", "--K", "5", "--budget", "100"], capsys)
        assert code == 2 and "budget" in err

    def test_usage_errors(self, capsys, task_file):
        assert run(["solve"], capsys)[0] == 1
        assert run(["solve", "--model", "task_assignment"], capsys)[0] == 1
        assert run(["solve", "--instance", task_file, "--K", "3"], capsys)[0] == 1
        assert run(["solve", "--K", "0", "--model", "task_assignment"], capsys)[0] == 1
        assert run(["frobnicate"], capsys)[0] == 1

    def test_invariant_violation(self, capsys, task_file, monkeypatch):
        monkeypatch.setattr(cli, "exhaustive_optimal", lambda *a, **k: OptimalResult((0, 0), 0.1, 6))
        code, _, err = run(["solve", "--instance", task_file], capsys)
        assert code == 3 and "invariant" in err

    def test_writes_out_file(self, capsys, task_file, tmp_path):
        out = tmp_path / "rep.json"
        code, stdout, _ = run(["solve", "--instance", task_file, "--out", str(out)], capsys)
        assert code == 0 and stdout == ""
        json.loads(out.read_text())


class TestVerify:
    def test_task_all_pass(self, capsys):
        code, out, _ = run(["verify", "--model", "task_assignment", "--m", "3", "--K", "3",
                            "--p-low", "0.6", "--p-high", "0.9", "--seed", "4"], capsys)
        assert code == 0
        doc = json.loads(out)
        assert all(doc["properties"][k]["holds"] for k in ("k_monotone", "k_diminishing", "go_concave"))
        assert doc["conditions"]["diminishing"]["holds"]
        assert doc["conditions"]["half"]["margin"] == pytest.approx(0.1)

    def test_table_counterexample(self, table_file, capsys):
        code, out, _ = run(["verify", "--instance", table_file], capsys)
        assert code == 0
        dim = json.loads(out)["properties"]["k_diminishing"]
        assert not dim["holds"]
        M, N, a = dim["counterexample"]
        sq = lambda s: float(len(s)) ** 2
        assert (sq(M + [a]) - sq(M)) - (sq(N + [a]) - sq(N)) == dim["worst_margin"]

    def test_measurement_decreasing(self, capsys):
        code, out, _ = run(["verify", "--model", "adaptive_measurement", "--sigma-sq", "4,1,0.25",
                            "--grid-points", "5"], capsys)
        assert code == 0
        doc = json.loads(out)
        cond = doc["conditions"]
        assert not cond["sigma_nondecreasing"]["holds"]
        assert isinstance(doc["properties"]["k_diminishing"]["holds"], bool)
        assert all(s["agrees"] for s in cond["go_product_form"])

    def test_go_index_flag(self, capsys, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(json.dumps({
            "schema_version": 1, "model": "task_assignment", "n": 1, "m": 2, "K": 3,
            "L": [[0.1, 0.1]], "U": [[0.9, 0.9]], "p": [[[0.9, 0.1], [0.1, 0.9], [0.1, 0.9]]],
        }))
        _, out, _ = run(["verify", "--instance", str(path)], capsys)
        cond = json.loads(out)["conditions"]
        assert cond["go"]["name"] == "go_oi" and cond["go_alternate"]["name"] == "go_oj"
        _, out, _ = run(["verify", "--instance", str(path), "--go-index-oj"], capsys)
        assert json.loads(out)["conditions"]["go"]["name"] == "go_oj"


class TestSweep:
    def test_l_hat(self, capsys):
        code, out, _ = run(["sweep", "--model", "task_assignment", "--n", "2", "--m", "3", "--K", "4",
                            "--param", "L_hat", "--values", "0.40,0.45,0.50,0.55", "--seeds", "0:5"], capsys)
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert len(rows) == 20
        for r in rows:
            if float(r["value"]) >= 0.5:
                assert float(r["ratio"]) >= float(r["factor_thm3"]) - 1e-9

    def test_k_on_fixed_instance(self, capsys, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(dump_instance("task_assignment", ta_random_instance(0, 1, 2, 5, 0.5, 0.9)))
        code, out, _ = run(["sweep", "--instance", str(path), "--param", "K", "--values", "2,3,4,5"], capsys)
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        got = [float(r["factor_thm3"]) for r in rows]
        assert got == pytest.approx([0.75, 1 - (2 / 3) ** 3, 1 - 0.75**4, 0.67232], abs=1e-12)

    def test_empty_seeds(self, capsys):
        code, out, _ = run(["sweep", "--model", "task_assignment", "--K", "2", "--param", "L_hat",
                            "--values", "0.5", "--seeds", ""], capsys)
        assert code == 0
        assert out.strip() == ",".join(cli.CSV_COLUMNS)

    def test_unknown_parameter(self, capsys):
        code, _, err = run(["sweep", "--model", "task_assignment", "--K", "2", "--param", "zeta",
                            "--values", "1"], capsys)
        assert code == 1 and "unknown parameter" in err

    def test_measurement_order(self, capsys):
        code, out, _ = run(["sweep", "--model", "adaptive_measurement", "--K", "2", "--grid-points", "5",
                            "--param", "sigma_order", "--values", "increasing,decreasing", "--seeds", "1"], capsys)
        assert code == 0
        rows = list(csv.DictReader(io.StringIO(out)))
        assert float(rows[0]["cond_sigma_margin"]) >= 0 > float(rows[1]["cond_sigma_margin"])


class TestGen:
    @pytest.mark.parametrize("argv", [
        ["--model", "task_assignment", "--n", "2", "--m", "3", "--K", "3", "--seed", "5"],
        ["--model", "adaptive_measurement", "--K", "3", "--grid-points", "7", "--seed", "2"],
    ])
    def test_round_trip(self, argv, capsys, tmp_path):
        out = tmp_path / "inst.json"
        assert run(["gen", *argv, "--out", str(out)], capsys)[0] == 0
        model, inst = load_instance(out)
        assert dump_instance(model, inst) == out.read_text()

    def test_table_round_trip(self, table_file):
        model, inst = load_instance(table_file)
        again = instance_from_dict(json.loads(dump_instance(model, inst)))[1]
        assert again.table == inst.table

    def test_grid_spec_object(self):
        _, inst = instance_from_dict({"schema_version": 1, "model": "adaptive_measurement", "K": 1,
                                      "sigma_sq": [1.0], "e_grid": {"count": 3, "min": 0.5, "max": 1.0}})
        assert inst.e_grid == (0.5, 0.75, 1.0)

    @pytest.mark.parametrize("doc", [
        {"schema_version": 2, "model": "table"},
        {"schema_version": 1, "model": "nope"},
        {"schema_version": 1, "model": "table", "alphabet_size": 2, "K": 1, "values": [{"string": [5], "value": 1}]},
        {"schema_version": 1, "model": "adaptive_measurement", "K": 2, "sigma_sq": [1.0], "e_grid": [0.5]},
    ])
    def test_rejects(self, doc):
        with pytest.raises(ParseError):
            instance_from_dict(doc)


class TestDeterminism:
    @pytest.mark.parametrize("argv", [
        ["solve", "--model", "task_assignment", "--n", "3", "--m", "3", "--K", "4", "--seed", "3"],
        ["verify", "--model", "adaptive_measurement", "--K", "3", "--grid-points", "11", "--seed", "3"],
        ["sweep", "--model", "task_assignment", "--m", "3", "--K", "3", "--param", "L_hat",
         "--values", "0.45,0.5", "--seeds", "0:3"],
    ])
    def test_reruns_and_threads(self, argv, capsys):
        outs = []
        for threads in ("1", "1", "8"):
            code, out, _ = run([*argv, "--threads", threads], capsys)
            assert code == 0
            outs.append(out if argv[0] == "sweep" else json.dumps(body(out)))
        assert outs[0] == outs[1] == outs[2]
