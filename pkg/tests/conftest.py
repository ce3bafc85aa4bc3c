import re
import time

import pytest

_AC_RESULTS: dict[int, tuple[str, str, float]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = re.match(r"test_ac(\d+)_", item.name)
    if not m or item.module.__name__.split(".")[-1] != "test_acceptance":
        return
    n = int(m.group(1))
    title = (item.function.__doc__ or item.name).strip().splitlines()[0]
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _AC_RESULTS[n] = (status, title, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _AC_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_AC_RESULTS):
        status, title, dur = _AC_RESULTS[n]
        terminalreporter.write_line(f"AC{n} {status} ({dur:.2f} s) {title}")


@pytest.fixture
def timer():
    class Timer:
        def __enter__(self):
            self.t0 = time.perf_counter()
            return self

        def __exit__(self, *exc):
            self.seconds = time.perf_counter() - self.t0

    return Timer
