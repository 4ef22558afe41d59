"""Shared test plumbing: the acceptance suite records one line per
criterion and this hook prints them as a block at the end of the run."""

_ACCEPTANCE_LINES = []


def record_acceptance(label, failures):
    _ACCEPTANCE_LINES.append((label, list(failures)))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, failures in _ACCEPTANCE_LINES:
        status = "PASS" if not failures else "FAIL"
        line = f"[acceptance] {label}: {status}"
        if failures:
            line += " (" + "; ".join(failures) + ")"
        terminalreporter.write_line(line)
