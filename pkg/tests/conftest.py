import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from featurefield.camera import CameraRig, intrinsics  # noqa: E402
from featurefield.field_core import FieldParams  # noqa: E402

CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for line in CRITERIA:
        terminalreporter.write_line(line)


@pytest.fixture
def record():
    def _record(number, description, ok, detail=""):
        tag = "PASS" if ok else "FAIL"
        CRITERIA.append(f"[{tag}] {number}. {description}" + (f" ({detail})" if detail else ""))
        return ok
    return _record


@pytest.fixture
def nadir():
    return CameraRig.nadir()


@pytest.fixture
def identity_rig():
    return CameraRig(intrinsics(400.0, 300.0, 360.0, 240.0), np.eye(3))


@pytest.fixture
def params():
    return FieldParams.from_degrees(r=50.0, s=150.0, theta_cs_hat_deg=30.0, lam=0.45)
