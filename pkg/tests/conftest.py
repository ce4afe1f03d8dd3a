import numpy as np
import pytest

from iontool.fieldsolve import assemble_bem, five_segment_trap, icosphere, solve_surface, unit_solutions


@pytest.fixture(scope="session")
def trap():
    """Default five-segment trap: (geometry, assembled system, unit solutions for every electrode)."""
    geom = five_segment_trap()
    system = assemble_bem(geom)
    return geom, system, unit_solutions(system)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def trap_refined():
    """Same trap with twice the axial element count."""
    geom = five_segment_trap(refine=2)
    system = assemble_bem(geom)
    return geom, system, unit_solutions(system)


@pytest.fixture(scope="session")
def sphere():
    """Unit sphere (1280 triangles) at 1 V: (system, solution)."""
    geom = icosphere(1.0, level=3)
    system = assemble_bem(geom)
    return system, solve_surface(system, {"sphere": 1.0})


ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance(request):
    """``record(n, ok, detail)``: store one acceptance line for the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def record(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        reporter = request.config.pluginmanager.get_plugin("terminalreporter")
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
