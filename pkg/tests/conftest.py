import functools

import numpy as np
import pytest

from levishell.catalog import make_catalog_spec


@functools.lru_cache(maxsize=None)
def _spec(name, items=()):
    return make_catalog_spec(name, dict(items))


@pytest.fixture(scope="session")
def spec():
    """``spec("model", beta=2)``, cached across the session."""

    def get(name, **params):
        return _spec(name, tuple(sorted(params.items())))

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.format_line(k))
