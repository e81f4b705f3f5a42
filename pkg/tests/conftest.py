import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from diaglab import table1_dpi  # noqa: E402
from diaglab.synthgen import load_suite  # noqa: E402

SUITE_DIR = Path(__file__).resolve().parents[1] / "benchmarks" / "suite"

D1 = ("ax1", "ax3")
D2 = ("ax1", "ax4")
D3 = ("ax2", "ax3")
D4 = ("ax2", "ax5")


@pytest.fixture
def t1():
    return table1_dpi()


@pytest.fixture(scope="session")
def suite():
    return load_suite(SUITE_DIR)
