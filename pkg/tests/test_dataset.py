import math

import pytest

from bugloc.dataset import (
    BugReport,
    ingest_benchmark_tsv,
    load_bug_reports,
    save_bug_reports,
    split_chronological,
)
from bugloc.metrics import DataError


def bug_at(i, t):
    return BugReport(
        bug_id=f"b{i}", summary=f"s{i}", description="", version_id="v", report_time=float(t)
    )


def test_roundtrip(tmp_path):
    bugs = [
        BugReport("b1", "sum", "desc", "v1", ("a/A.java",), 100.0),
        BugReport("b2", "sum2", "", "v2", ("b/B.java", "c/C.java"), 200.0),
    ]
    path = tmp_path / "bugs.jsonl"
    save_bug_reports(bugs, path)
    assert load_bug_reports(path) == bugs


def test_duplicate_bug_id_rejected(tmp_path):
    path = tmp_path / "bugs.jsonl"
    line = '{"bug_id": "b1", "summary": "s", "description": "", "version_id": "v"}'
    path.write_text(line + "\n" + line + "\n", encoding="utf-8")
    with pytest.raises(DataError):
        load_bug_reports(path)


def test_time_formats_accepted(tmp_path):
    path = tmp_path / "bugs.jsonl"
    path.write_text(
        "\n".join(
            [
                '{"bug_id": "b1", "summary": "s", "version_id": "v", "report_time": 123.5}',
                '{"bug_id": "b2", "summary": "s", "version_id": "v", "report_time": "2013-07-03 10:00:00"}',
                '{"bug_id": "b3", "summary": "s", "version_id": "v", "report_time": "2013-07-03T10:00:00+00:00"}',
            ]
        )
        + "\n",
        encoding="utf-8",
    )
    bugs = load_bug_reports(path)
    assert bugs[0].report_time == 123.5
    assert bugs[1].report_time == bugs[2].report_time


def test_split_ten_bugs_six_four():
    bugs = [bug_at(i, i) for i in range(10)]
    historical, evaluation = split_chronological(bugs)
    assert len(historical) == 6
    assert len(evaluation) == 4
    assert [b.bug_id for b in evaluation] == ["b6", "b7", "b8", "b9"]


def test_split_orders_by_time_not_input_order():
    bugs = [bug_at(0, 50), bug_at(1, 10), bug_at(2, 40), bug_at(3, 20), bug_at(4, 30)]
    historical, evaluation = split_chronological(bugs)
    assert [b.bug_id for b in historical] == ["b1", "b3", "b4"]
    assert [b.bug_id for b in evaluation] == ["b2", "b0"]


def test_split_equal_timestamps_tie_by_bug_id():
    bugs = [bug_at(i, 7) for i in (3, 1, 0, 2)]
    historical, evaluation = split_chronological(bugs)
    assert [b.bug_id for b in historical] == ["b0", "b1", "b2"]
    assert [b.bug_id for b in evaluation] == ["b3"]


def test_split_missing_timestamps_is_data_error():
    bug = BugReport("b", "s", "d", "v", (), None)
    with pytest.raises(DataError):
        split_chronological([bug])


def test_full_scale_split_reproduces_evaluation_count():
    # project sizes from the benchmark: per-project 60/40 chronological splits
    # leave exactly 9,097 evaluation bugs in total
    project_sizes = {"aspectj": 593, "birt": 4178, "eclipse": 6495, "jdt": 6274, "swt": 4151, "tomcat": 1056}
    total_eval = 0
    for project, size in project_sizes.items():
        bugs = [
            BugReport(f"{project}-{i}", "s", "", "v", (), float(i)) for i in range(size)
        ]
        historical, evaluation = split_chronological(bugs)
        assert len(historical) == math.ceil(size * 0.6)
        total_eval += len(evaluation)
    assert total_eval == 9097


def test_ingest_benchmark_tsv(tmp_path):
    path = tmp_path / "project.txt"
    rows = [
        "id\tbug_id\tsummary\tdescription\treport_time\treport_timestamp\tstatus\tcommit\tcommit_timestamp\tfiles",
        "1\t101\tNPE on save\tSteps to crash\t2013-07-03 10:00:00\t1372845600\tresolved fixed\tabc123\t1372900000\torg/x/A.java org/y/B.java",
        "2\t102\tUI freeze\t\t2013-07-04 11:00:00\t1372932000\tresolved fixed\tdef456\t1372990000\torg/z/C.java",
    ]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")
    bugs = ingest_benchmark_tsv(path)
    assert len(bugs) == 2
    assert bugs[0].bug_id == "101"
    assert bugs[0].version_id == "abc123"
    assert bugs[0].ground_truth == ("org/x/A.java", "org/y/B.java")
    assert bugs[0].report_time == 1372845600.0
    assert bugs[1].summary == "UI freeze"
