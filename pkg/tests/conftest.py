import functools

import pytest
from hypothesis import settings

from isosystolic.dual import solve_dual
from isosystolic.mesh import build_mesh
from isosystolic.primal import solve_primal

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@functools.lru_cache(maxsize=None)
def mesh(n, N_c, scheme="auto"):
    return build_mesh(n, N_c, scheme)


@functools.lru_cache(maxsize=None)
def primal(n, N_c, max_iter=200_000):
    return solve_primal(mesh(n, N_c), max_iter=max_iter)


@functools.lru_cache(maxsize=None)
def dual(n, N_c):
    return solve_dual(mesh(n, N_c))


@pytest.fixture(scope="session")
def solved():
    """Cached solvers shared across test modules."""
    return {"mesh": mesh, "primal": primal, "dual": dual}


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    prev = ACCEPTANCE.get(criterion)
    if prev is not None:
        ok, detail = prev[0] and ok, f"{prev[1]}; {detail}"
    ACCEPTANCE[criterion] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
