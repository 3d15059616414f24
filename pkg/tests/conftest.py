import os
import sys
import tempfile
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# keep the suite away from the user's cache directory
os.environ.setdefault("CRCENSUS_CACHE_DIR", tempfile.mkdtemp(prefix="crcensus-test-cache-"))

from crcensus.quadrature import compute_structural_constants  # noqa: E402

BETA_GRID = (2.0, 2.5, 3.0, 3.9)


@pytest.fixture(scope="session")
def constants():
    """Structural constants on the beta grid, computed once per session."""
    return {b: compute_structural_constants(b) for b in BETA_GRID}


@pytest.fixture(scope="session")
def c2(constants):
    return constants[2.0]


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    if module is None or not module.RESULTS:
        return
    RESULTS = module.RESULTS
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)
