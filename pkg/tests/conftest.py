import os
import sys
from pathlib import Path

import pytest

DATA_ENV = "LSHITABLES_DATA_DIR"
REPO_DATA = Path(__file__).resolve().parent.parent / "data"


def data_dir() -> Path:
    return Path(os.environ.get(DATA_ENV, REPO_DATA))


def dataset_path(name: str) -> Path:
    """Path of ``<name>.csv``, failing loudly when the file has not been supplied."""
    path = data_dir() / f"{name}.csv"
    if not path.exists():
        pytest.fail(f"{path} not found; place the {name} benchmark there or set ${DATA_ENV}")
    return path


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria (slow)")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(results):
        cells = results[crit]
        status = "PASS" if all(ok for ok, _ in cells) else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {crit}: " + " | ".join(d for _, d in cells))
