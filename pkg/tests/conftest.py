import numpy as np
import pytest


@pytest.fixture
def write_csv(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_ACCEPTANCE_LINES = []


class _Criterion:
    """Collects the checks of one acceptance criterion and reports a single line."""

    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.checks = []

    def check(self, ok, detail):
        self.checks.append((bool(ok), detail))

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None and all(c for c, _ in self.checks)
        details = [d if c else f"{d} [out of range]" for c, d in self.checks]
        if exc_type is not None:
            details.append(f"raised {exc_type.__name__}: {exc}")
        line = f"criterion {self.number}: {'PASS' if ok else 'FAIL'}  {self.title}  ({'; '.join(details)})"
        _ACCEPTANCE_LINES.append((self.number, line))
        print(line)
        if exc_type is None and not ok:
            raise AssertionError(line)
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_ACCEPTANCE_LINES, key=lambda x: x[0]):
        terminalreporter.write_line(line)
