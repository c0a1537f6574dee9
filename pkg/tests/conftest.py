import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from buginject import pipeline, runtime, templates  # noqa: E402
from buginject.minic import load  # noqa: E402

DATA = resources.files("buginject") / "data"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def host_text():
    return (DATA / "grepish.mc").read_text()


@pytest.fixture(scope="session")
def host(host_text):
    return load(host_text, "grepish.mc")


@pytest.fixture(scope="session")
def suite():
    return runtime.parse_suite((DATA / "grepish.suite").read_text())


@pytest.fixture(scope="session")
def catalog():
    return {t.name: t for t in templates.parse_templates((DATA / "catalog.bt").read_text())}


@pytest.fixture(scope="session")
def host_db(host, suite):
    db, outcomes, builder = pipeline.collect_traces(host, suite, 1_000_000)
    return db, outcomes, builder
