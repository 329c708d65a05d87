import pytest

from mono3d.geometry import CameraModel
from mono3d.scene import bundled_scenario_path, load_scene

# filled by test_acceptance; printed at the end of the session
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def sim6():
    return load_scene(bundled_scenario_path("sim6.scenario"))


@pytest.fixture
def cam():
    return CameraModel(640, 480, 90.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])


@pytest.fixture
def record():
    def _record(key, passed, detail):
        status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
        ACCEPTANCE[key] = f"{status:<4} {key} {detail}"
    return _record
