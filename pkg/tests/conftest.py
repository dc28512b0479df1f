import random

import pytest
from hypothesis import settings

from flexcover.catalog import load_catalog
from flexcover.cli import data_dir
from flexcover.matching import build_matrix, load_overlay, load_synonyms
from support import shipped_inventories

settings.register_profile("seeded", derandomize=True, deadline=None, max_examples=100)
settings.load_profile("seeded")


def pytest_addoption(parser):
    parser.addoption("--seed", type=int, default=20240611, help="seed for randomized oracle tests")


@pytest.fixture
def seed(request) -> int:
    return request.config.getoption("--seed")


@pytest.fixture
def rng(seed) -> random.Random:
    return random.Random(seed)


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()


@pytest.fixture(scope="session")
def inventories():
    return shipped_inventories()


@pytest.fixture(scope="session")
def synonyms():
    return load_synonyms(data_dir() / "synonyms.tsv")


@pytest.fixture(scope="session")
def overlay():
    return load_overlay(data_dir() / "overlay.json")


@pytest.fixture(scope="session")
def auto_matrix(catalog, inventories, synonyms):
    return build_matrix(catalog, inventories, synonyms)


@pytest.fixture(scope="session")
def pinned_matrix(catalog, inventories, synonyms, overlay):
    return build_matrix(catalog, inventories, synonyms, overlay)


def pytest_terminal_summary(terminalreporter):
    from support import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
