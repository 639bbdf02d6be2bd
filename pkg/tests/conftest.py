from pathlib import Path

import numpy as np
import pytest

from fragtree.solvers import SolveCache
from fragtree.synthetic import CorpusSpec, generate_corpus

from oracles import toy_graph

CORPUS_CONFIG = Path(__file__).resolve().parent.parent / "configs" / "corpus.json"


@pytest.fixture
def toy():
    return toy_graph()


@pytest.fixture
def toy_transitive():
    return toy_graph(transitive=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def corpus_spec():
    return CorpusSpec.load(CORPUS_CONFIG)


@pytest.fixture(scope="session")
def corpus(corpus_spec):
    """The shipped 200-compound synthetic corpus as (generated, built) pairs."""
    return list(generate_corpus(corpus_spec))


@pytest.fixture(scope="session")
def solve_cache():
    return SolveCache()


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
