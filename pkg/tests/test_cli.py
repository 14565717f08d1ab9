from __future__ import annotations

import csv
import io
import json
import pathlib

import pytest
from click.testing import CliRunner

import lebesgue_engine
import normal_functionals
from data.reports import RunReport
from main import main

GOLDEN = pathlib.Path(__file__).parent / "golden"
INPUTS = json.loads((GOLDEN / "inputs.json").read_text(encoding="utf-8"))


@pytest.fixture
def runner():
    return CliRunner(mix_stderr=False)


@pytest.fixture
def put(tmp_path):
    def _put(name: str, payload=None, raw: str | None = None) -> str:
        path = tmp_path / f"{name}.json"
        path.write_text(raw if raw is not None else json.dumps(INPUTS[name] if payload is None else payload),
                        encoding="utf-8")
        return str(path)
    return _put


def assert_matches(actual, expected, path="$"):
    """Совпадение с эталоном: числа приближённо, лишние ключи в actual допускаются."""
    if isinstance(expected, dict):
        assert isinstance(actual, dict), path
        for key, value in expected.items():
            assert key in actual, f"{path}.{key} missing"
            assert_matches(actual[key], value, f"{path}.{key}")
    elif isinstance(expected, list):
        assert isinstance(actual, list) and len(actual) == len(expected), path
        for i, (a, e) in enumerate(zip(actual, expected)):
            assert_matches(a, e, f"{path}[{i}]")
    elif isinstance(expected, float):
        assert actual == pytest.approx(expected, abs=1e-8), path
    else:
        assert actual == expected, path


def read_rows(path) -> list[dict]:
    return list(csv.DictReader(io.StringIO(pathlib.Path(path).read_text(encoding="utf-8"))))


def assert_csv_matches(path, golden_name):
    text = pathlib.Path(path).read_text(encoding="utf-8")
    assert text.splitlines()[0] == "k,n,gap_trace,c_bound"
    expected = list(csv.DictReader(io.StringIO((GOLDEN / golden_name).read_text(encoding="utf-8"))))
    rows = read_rows(path)
    assert len(rows) == len(expected)
    for row, exp in zip(rows, expected):
        assert (row["k"], row["n"]) == (exp["k"], exp["n"])
        assert float(row["gap_trace"]) == pytest.approx(float(exp["gap_trace"]), abs=1e-12)
        assert float(row["c_bound"]) == pytest.approx(float(exp["c_bound"]), rel=1e-9)


def assert_single_error_line(result, code: int):
    assert result.exit_code == code, result.output + result.stderr
    lines = result.stderr.strip().splitlines()
    assert len(lines) == 1
    assert lines[0].startswith("error:")


# ==================== DECOMPOSE ====================
def test_decompose_golden(runner, put, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(main, ["decompose", put("identity2"), put("e1"), str(out)])
    assert result.exit_code == 0, result.stderr
    report = RunReport.from_json(out.read_text(encoding="utf-8"))
    expected = json.loads((GOLDEN / "decompose_identity_vs_e1.json").read_text(encoding="utf-8"))
    assert_matches(report.payload, expected)
    assert report.result["iterations"]


def test_decompose_is_byte_deterministic(runner, put, tmp_path):
    s, t = put("contraction"), put("e1")
    reports = []
    for name in ("a.json", "b.json"):
        out = tmp_path / name
        assert runner.invoke(main, ["decompose", s, t, str(out)]).exit_code == 0
        reports.append(json.loads(out.read_text(encoding="utf-8")))
    assert reports[0]["payload"] == reports[1]["payload"]
    assert reports[0]["payload_sha256"] == reports[1]["payload_sha256"]


def test_decompose_sequences(runner, put, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(main, ["decompose", put("slow_tail"), put("halves"), str(out), "--truncate", "16"])
    assert result.exit_code == 0, result.stderr
    payload = RunReport.from_json(out.read_text(encoding="utf-8")).payload
    assert payload["result"]["unique"] is False
    assert payload["result"]["c"] is None
    assert payload["tolerance"]["truncate"] == 16
    assert payload["inputs"]["S"]["infinite_support"] is True


def test_decompose_sequences_check_size_follows_flag(runner, put, tmp_path, monkeypatch):
    sizes = []
    original = normal_functionals._random_hermitian_panel

    def recording(dim, count, seed, complex_):
        sizes.append(dim)
        return original(dim, count, seed, complex_)

    monkeypatch.setattr(normal_functionals, "_random_hermitian_panel", recording)
    out = tmp_path / "report.json"
    assert runner.invoke(main, ["decompose", put("slow_tail"), put("halves"), str(out),
                                "--truncate", "9"]).exit_code == 0
    assert sizes == [max(9, len(INPUTS["slow_tail"]["prefix"]), len(INPUTS["halves"]["prefix"]), 1)]


def test_decompose_convergence_failure(runner, put, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(main, ["decompose", put("identity2"), put("identity2", INPUTS["identity2"]),
                                  str(out), "--max-iters", "1", "--quiet"])
    assert_single_error_line(result, 3)
    report = RunReport.from_json(out.read_text(encoding="utf-8"))
    assert report.result["converged"] is False
    assert [step["k"] for step in report.result["iterations"]] == [0, 1]
    assert "ac" not in report.result


def test_decompose_runs_the_iteration_once(runner, put, tmp_path, monkeypatch):
    calls = []
    original = lebesgue_engine.ac_part_iterative

    def counting(*args, **kwargs):
        calls.append(1)
        return original(*args, **kwargs)

    monkeypatch.setattr(lebesgue_engine, "ac_part_iterative", counting)
    out = tmp_path / "report.json"
    assert runner.invoke(main, ["decompose", put("contraction"), put("e1"), str(out)]).exit_code == 0
    assert len(calls) == 1
    assert RunReport.from_json(out.read_text(encoding="utf-8")).result["iterations"]


def test_parallel_oracles_flag(runner, put, tmp_path, monkeypatch):
    seen = []
    original = normal_functionals.decompose

    def recording(S, T, cfg=None):
        seen.append(cfg.parallel_oracles)
        return original(S, T, cfg)

    monkeypatch.setattr(normal_functionals, "decompose", recording)
    reports = []
    for name, extra in (("seq.json", []), ("par.json", ["--parallel-oracles"])):
        out = tmp_path / name
        assert runner.invoke(main, ["decompose", put("contraction"), put("e1"), str(out), *extra]).exit_code == 0
        reports.append(json.loads(out.read_text(encoding="utf-8"))["payload"])
    assert seen == [False, True]
    assert reports[0]["tolerance"]["parallel_oracles"] is False
    assert reports[1]["tolerance"]["parallel_oracles"] is True
    assert_matches(reports[1]["result"]["ac"], reports[0]["result"]["ac"])


def test_parallel_oracles_from_environment(runner, put, tmp_path, monkeypatch):
    monkeypatch.setenv("LEBESGUE_PARALLEL_ORACLES", "true")
    out = tmp_path / "report.json"
    assert runner.invoke(main, ["decompose", put("identity2"), put("e1"), str(out)]).exit_code == 0
    assert json.loads(out.read_text(encoding="utf-8"))["payload"]["tolerance"]["parallel_oracles"] is True


# ==================== CHECK-UNIQUE ====================
def test_check_unique_matrix_pair(runner, put):
    result = runner.invoke(main, ["check-unique", put("identity2"), put("e1")])
    assert result.exit_code == 0, result.stderr
    answer = json.loads(result.stdout)
    assert answer["unique"] is True
    assert answer["c"] == pytest.approx(1.0)


def test_check_unique_sequence_pairs(runner, put):
    result = runner.invoke(main, ["check-unique", put("slow_tail"), put("halves")])
    assert result.exit_code == 0
    assert json.loads(result.stdout) == {"unique": False, "c": None}

    result = runner.invoke(main, ["check-unique", put("halves"), put("halves")])
    assert result.exit_code == 0
    assert result.stdout.strip() == '{"c": 1.0, "unique": true}'


def test_check_unique_self_pair_matrix(runner, put):
    result = runner.invoke(main, ["check-unique", put("contraction"), put("contraction", INPUTS["contraction"])])
    answer = json.loads(result.stdout)
    assert answer["unique"] is True
    assert answer["c"] == pytest.approx(1.0, rel=1e-9)


# ==================== COUNTEREXAMPLE ====================
def test_counterexample_golden(runner, put, tmp_path):
    out = tmp_path / "counter.json"
    result = runner.invoke(main, ["counterexample", put("halves"), str(out)])
    assert result.exit_code == 0, result.stderr
    payload = RunReport.from_json(out.read_text(encoding="utf-8")).payload
    expected = json.loads((GOLDEN / "counterexample_halves.json").read_text(encoding="utf-8"))
    assert_matches(payload["result"], expected["result"])
    head = expected["S_head"]
    assert payload["result"]["S"]["prefix"][: len(head)] == pytest.approx(head, rel=1e-12)
    assert payload["result"]["S"]["tail"]["r"] == pytest.approx(0.5 ** 0.5)


@pytest.mark.parametrize("name, fragment", [("finite", "finite"), ("not_summable", "summable")])
def test_counterexample_rejects(runner, put, tmp_path, name, fragment):
    out = tmp_path / "counter.json"
    result = runner.invoke(main, ["counterexample", put(name), str(out), "--quiet"])
    assert_single_error_line(result, 2)
    assert fragment in result.stderr
    assert not out.exists()


# ==================== CONVERGE-REPORT ====================
def test_converge_report_identity(runner, put, tmp_path):
    out = tmp_path / "trace.csv"
    result = runner.invoke(main, ["converge-report", put("contraction"), put("identity2"), str(out)])
    assert result.exit_code == 0, result.stderr
    assert_csv_matches(out, "converge_identity.csv")


def test_converge_report_singular_pair(runner, put, tmp_path):
    out = tmp_path / "trace.csv"
    assert runner.invoke(main, ["converge-report", put("ones2"), put("e1"), str(out)]).exit_code == 0
    assert_csv_matches(out, "converge_singular.csv")


def test_converge_report_truncated_counterexample(runner, put, tmp_path):
    counter = tmp_path / "counter.json"
    assert runner.invoke(main, ["counterexample", put("halves"), str(counter)]).exit_code == 0
    result = json.loads(counter.read_text(encoding="utf-8"))["payload"]["result"]
    s, t = put("mu", result["S"]), put("lam", result["T"])

    out = tmp_path / "trace.csv"
    assert runner.invoke(main, ["converge-report", s, t, str(out), "--truncate", "32"]).exit_code == 0
    bounds = [float(r["c_bound"]) for r in read_rows(out)]
    assert bounds == pytest.approx([1, 2, 4, 8, 16, 32], rel=1e-9)
    assert all(b > a for a, b in zip(bounds, bounds[1:]))


def test_converge_report_parallel_schedule(runner, put, tmp_path):
    out = tmp_path / "trace.csv"
    result = runner.invoke(main, ["converge-report", put("contraction"), put("identity2"), str(out),
                                  "--schedule", "parallel"])
    assert result.exit_code == 0
    rows = read_rows(out)
    assert len(rows) > 1
    assert [int(r["n"]) for r in rows] == [2 ** k for k in range(len(rows))]
    assert float(rows[-1]["gap_trace"]) < 1e-9


def test_converge_report_writes_trace_on_failure(runner, put, tmp_path):
    out = tmp_path / "trace.csv"
    result = runner.invoke(main, ["converge-report", put("eight"), put("identity2"), str(out),
                                  "--max-iters", "1", "--quiet"])
    assert_single_error_line(result, 3)
    rows = read_rows(out)
    assert [r["k"] for r in rows] == ["0", "1"]


def test_converge_report_is_byte_deterministic(runner, put, tmp_path):
    s, t = put("contraction"), put("identity2")
    texts = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert runner.invoke(main, ["converge-report", s, t, str(out), "--schedule", "parallel"]).exit_code == 0
        texts.append(out.read_bytes())
    assert texts[0] == texts[1]


# ==================== ОШИБКИ ВВОДА ====================
def test_non_hermitian_input(runner, put):
    result = runner.invoke(main, ["check-unique", put("non_hermitian"), put("identity2"), "--quiet"])
    assert_single_error_line(result, 2)


def test_dimension_mismatch(runner, put, tmp_path):
    result = runner.invoke(main, ["decompose", put("identity3"), put("identity2"),
                                  str(tmp_path / "out.json"), "--quiet"])
    assert_single_error_line(result, 2)


def test_mixed_kinds(runner, put):
    result = runner.invoke(main, ["check-unique", put("halves"), put("identity2"), "--quiet"])
    assert_single_error_line(result, 2)


def test_malformed_json(runner, put):
    result = runner.invoke(main, ["check-unique", put("broken", raw="{not json"), put("identity2"), "--quiet"])
    assert_single_error_line(result, 2)
    assert "malformed JSON" in result.stderr


def test_missing_file(runner, put, tmp_path):
    result = runner.invoke(main, ["check-unique", str(tmp_path / "nope.json"), put("identity2"), "--quiet"])
    assert_single_error_line(result, 2)


def test_bad_truncate(runner, put, tmp_path):
    result = runner.invoke(main, ["converge-report", put("halves"), put("halves", INPUTS["halves"]),
                                  str(tmp_path / "t.csv"), "--truncate", "0", "--quiet"])
    assert_single_error_line(result, 2)


def test_environment_overrides_defaults(runner, put, tmp_path, monkeypatch):
    monkeypatch.setenv("LEBESGUE_TRUNCATE", "8")
    out = tmp_path / "report.json"
    assert runner.invoke(main, ["decompose", put("halves"), put("halves", INPUTS["halves"]), str(out)]).exit_code == 0
    payload = json.loads(out.read_text(encoding="utf-8"))["payload"]
    assert payload["tolerance"]["truncate"] == 8
