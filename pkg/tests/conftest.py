import pytest

from llg.builtins import builtin

# criterion number -> (title, passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.fixture(scope="session")
def groups():
    return {name: builtin(name) for name in ("abelian:2", "abelian:3", "heisenberg3", "affine2", "uppertriangular3")}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[num]
        line = f"criterion {num} ({title}): {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f" - {detail}"
        terminalreporter.write_line(line)
