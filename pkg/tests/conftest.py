import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> {"title", "expected": test count, "outcomes": [(nodeid, outcome)], "notes"}
CRITERIA: dict[int, dict] = {}


@pytest.hookimpl(tryfirst=True)
def pytest_collection_modifyitems(items):
    # runs before -m/-k deselection, so "expected" counts every test of a criterion
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            n, title = mark.args
            entry = CRITERIA.setdefault(n, {"title": title, "expected": 0, "outcomes": [], "notes": []})
            entry["expected"] += 1


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            entry = CRITERIA[value]
            entry["outcomes"].append((report.nodeid, report.outcome))
        elif key == "criterion_note":
            n, text = value
            CRITERIA[n]["notes"].append(text)


def pytest_runtest_setup(item):
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        item.user_properties.append(("criterion", mark.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        entry = CRITERIA[n]
        outcomes = entry["outcomes"]
        states = {o for _, o in outcomes}
        if not states:
            status = "NOT RUN"
        elif "failed" in states:
            status = "FAIL"
        elif states == {"passed"} and len(outcomes) == entry["expected"]:
            status = "PASS"
        elif "passed" in states:
            status = "PARTIAL"
        else:
            status = "SKIP"
        notes = "; ".join(entry["notes"])
        ran = f" ({len(outcomes)}/{entry['expected']} tests run)" if len(outcomes) < entry["expected"] else ""
        tr.write_line(f"criterion {n} [{status}] {entry['title']}{ran}" + (f" -- {notes}" if notes else ""))
