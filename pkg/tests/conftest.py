import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from slowpairs import config  # noqa: E402
from slowpairs.detection import DetectionSpec  # noqa: E402


@pytest.fixture(scope="session")
def crow():
    return config.load("crow")


@pytest.fixture(scope="session")
def reference():
    return config.load("reference")


def make_detector(qe=1.0, dark=0.0, dead_time=0.0, coupling_db=0.0, filter_db=0.0, rate=1e8):
    return DetectionSpec(
        coupling_db=coupling_db,
        filter_db=filter_db,
        quantum_efficiency=qe,
        gate_rate=rate,
        gate_width=0.8e-9,
        dark_per_gate=dark,
        dead_time=dead_time,
    )
