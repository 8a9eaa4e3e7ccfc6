import csv
import json

from io import StringIO

import pytest

from di_poisson.core.report import CSV_COLUMNS, ErrorRateReport, SweepLog


def make_report(n: int, type1: float = 0.0802, avg: float = 0.0032, top: float = 0.0052):
    return ErrorRateReport(
        n=n,
        size=268,
        empirical_type1=type1,
        type1_errors=int(type1 * 700_000),
        std_error_type1=0.000325,
        empirical_type2_avg=avg,
        empirical_type2_max=top,
        type2_targets=267,
        type2_trials_per_target=2622,
        trials_used=700_000,
        seed=7,
        repeats=1,
        pair_policy="all-pairs-fixed-sender",
    )


def test_format_log():
    # arrange
    sweep_log = SweepLog()

    # act
    sweep_log.update_log(make_report(19))
    sweep_log.update_log(make_report(20, type1=0.0712345678))
    csv_log = sweep_log.format_log()

    # assert
    csv_rows = list(csv.reader(StringIO(csv_log)))

    assert len(csv_rows) == 3
    assert csv_rows[0] == CSV_COLUMNS
    assert all(len(row) == 8 for row in csv_rows)
    assert csv_rows[2][2] == "0.0712346"
    assert csv_rows[1][-1] == "7"


def test_format_log_without_type2():
    sweep_log = SweepLog()

    sweep_log.update_log(make_report(1, avg=None, top=None))
    row = list(csv.reader(StringIO(sweep_log.format_log())))[1]

    assert row[4] == "" and row[5] == ""


def test_failures_are_kept_apart():
    sweep_log = SweepLog()

    sweep_log.update_log(make_report(19))
    sweep_log.record_failure(20, "stalled")
    document = json.loads(sweep_log.to_json())

    assert len(sweep_log) == 1
    assert document["failures"] == {"20": "stalled"}
    assert document["reports"][0]["n"] == 19


def test_report_rejects_non_probabilities():
    with pytest.raises(ValueError):
        make_report(19, type1=1.5)


def test_report_requires_max_not_below_average():
    with pytest.raises(ValueError):
        make_report(19, avg=0.01, top=0.005)
