import shlex
import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent


@pytest.fixture
def stub_command() -> str:
    """Command template for the external backend that runs the scipy-based stub solver."""
    return f"{shlex.quote(sys.executable)} {shlex.quote(str(HERE / 'stub_solver.py'))} {{lp}} {{sol}} {{time_limit}}"
