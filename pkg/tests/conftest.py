import os
import random

import pytest

from awc.crawler import setup_index
from awc.index import InvertedIndex
from awc.pairing import keygen

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(os.path.dirname(HERE), "fixtures")

TABLE1 = {
    "computer": [6, 8, 9],
    "disk": [1, 2, 4, 5, 6, 7],
    "hard": [1, 3, 5, 7, 8, 9],
    "memory": [1, 4, 7],
    "mouse": [2, 5],
    "port": [3, 5, 9],
    "ram": [5, 6, 7],
    "system": [1, 7],
}


@pytest.fixture(scope="session")
def keys8():
    return keygen(8, random.Random(8))


@pytest.fixture(scope="session")
def keys64():
    return keygen(64, random.Random(64))


@pytest.fixture
def table1_index():
    return InvertedIndex.from_postings(TABLE1)


@pytest.fixture
def table1(keys8):
    """Crawler over the toy postings with literal ids 1..9 and n=8."""
    return setup_index(InvertedIndex.from_postings(TABLE1), keys=keys8)


@pytest.fixture(scope="session")
def table1_dir():
    return os.path.join(FIXTURES, "table1")
