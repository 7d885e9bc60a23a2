"""
Shared fixtures and hooks for the afnet / aftest test suite
"""

import os
import platform
import shutil

import allure
import numpy as np
import pytest
import sklearn
from click.testing import CliRunner

from tests.allure_helper import FAILURE_CATEGORIES, write_categories, write_environment


@pytest.fixture(scope="session")
def worker_temp_dir(tmp_path_factory, worker_id):
    """One scratch root per xdist worker ("master" when running serially)"""
    root = tmp_path_factory.mktemp(f"aftest_{worker_id}")
    yield root
    shutil.rmtree(root, ignore_errors=True)


@pytest.fixture
def isolated_temp_dir(worker_temp_dir, request):
    path = worker_temp_dir / request.node.name
    path.mkdir(parents=True, exist_ok=True)
    yield path
    shutil.rmtree(path, ignore_errors=True)


@pytest.fixture
def runner():
    return CliRunner()


def pytest_configure(config):
    # workers inherit the controller's results dir; write it once
    if hasattr(config, "workerinput"):
        return
    write_environment(
        {
            "Python": platform.python_version(),
            "Platform": f"{platform.system()} {platform.machine()}",
            "NumPy": np.__version__,
            "scikit-learn": sklearn.__version__,
            "AFTEST_SEED": os.getenv("AFTEST_SEED", "42"),
        }
    )
    write_categories(FAILURE_CATEGORIES)


def pytest_collection_modifyitems(config, items):
    for item in items:
        if "integration" not in item.keywords:
            item.add_marker(pytest.mark.unit)


def pytest_xdist_auto_num_workers(config):
    # numpy already uses several threads per process
    if os.environ.get("CI"):
        return max(1, (os.cpu_count() or 2) // 2)
    return None


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call":
        return
    if report.failed:
        allure.attach(report.longreprtext, name="Failure", attachment_type=allure.attachment_type.TEXT)
    allure.dynamic.parameter("Duration", f"{report.duration:.2f}s")
