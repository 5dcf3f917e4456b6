import re

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+?)(\[.*\])?$")
_results: dict[int, dict] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid.split("::")[-1])
    if not m or report.when not in ("setup", "call"):
        return
    if report.when == "setup" and report.passed:
        return
    entry = _results.setdefault(int(m.group(1)), {"name": m.group(2), "ok": True, "notes": []})
    if not report.passed:
        entry["ok"] = False
        lines = report.longreprtext.splitlines()
        errs = [ln[1:].strip() for ln in lines if ln.startswith("E ")]
        entry["notes"].append(f"{m.group(3) or ''} {errs[0] if errs else report.outcome}".strip())


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_results):
        e = _results[k]
        line = f"criterion {k:2d} {e['name']:<28} {'PASS' if e['ok'] else 'FAIL'}"
        if e["notes"]:
            line += "  " + " | ".join(e["notes"])[:300]
        terminalreporter.write_line(line)
