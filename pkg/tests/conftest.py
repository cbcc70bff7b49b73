import os

import pytest

_RESULTS: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    os.environ.setdefault("SELGEN_OUTPUT_DIR", "")


@pytest.fixture
def criterion_detail(request):
    """Attach a one-line measurement to the acceptance summary of this test."""

    def note(text: str) -> None:
        request.node.user_properties.append(("detail", text))

    return note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    label = marker.args[0]
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "SKIP" if rep.skipped else ("PASS" if rep.passed else "FAIL")
        _RESULTS[label] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_RESULTS, key=lambda s: int(s.split()[0])):
        status, detail = _RESULTS[label]
        line = f"[{status}] criterion {label}"
        terminalreporter.write_line(line + (f" :: {detail}" if detail else ""))
