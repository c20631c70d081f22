import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def acceptance(request):
    """record(number, title, parts) with parts = [(label, measured, tolerance), ...].

    Stores one PASS/FAIL line per criterion; the lines are repeated in the
    terminal summary so they survive output capture.
    """
    lines = request.config.stash[_LINES]

    def record(number, title, parts):
        ok = all(m == m and m <= tol for _, m, tol in parts)
        detail = "; ".join(f"{label} {m:.3e} (tol {tol:.1e})" for label, m, tol in parts)
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def p1_measure():
    """B-mode N-extremal measure of the pure P1 chain at c = 1, about 40 support points.

    Shared because the weight sums take several seconds.
    """
    from cubic_bdp.spectral import MASS_SPACING, n_extremal_measure

    return n_extremal_measure("P1", 1.0, (MASS_SPACING * 40) ** 3)
