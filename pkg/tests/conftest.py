import os
import shutil
import sys
from pathlib import Path

import pytest

TESTS_DIR = Path(__file__).resolve().parent
FRAGMENT_SOLVER = TESTS_DIR / "fragment_solver.py"


def find_solver() -> str | None:
    """Solver command for SMT round-trips, or None if nothing usable.

    Preference order: MASKCHECK_SOLVER from the environment, a real
    solver on PATH, then the bundled brute-force fragment checker.
    """
    env = os.environ.get("MASKCHECK_SOLVER")
    if env:
        return env
    for binary in ("z3", "cvc5", "bitwuzla", "boolector"):
        found = shutil.which(binary)
        if found:
            return found
    if FRAGMENT_SOLVER.exists():
        return f"{sys.executable} {FRAGMENT_SOLVER}"
    return None


@pytest.fixture(scope="session")
def solver_cmd() -> str:
    cmd = find_solver()
    if cmd is None:
        pytest.skip("no SMT solver available (set MASKCHECK_SOLVER)")
    return cmd
