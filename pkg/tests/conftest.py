import pytest
from hypothesis import settings

from fixedtime_etc import config as C
from fixedtime_etc.simulator import run_safely

settings.register_profile("default", max_examples=200, deadline=None)
settings.load_profile("default")

_cache = {}


def cached_run(name_or_cfg):
    cfg = C.preset(name_or_cfg) if isinstance(name_or_cfg, str) else name_or_cfg
    key = C.dumps(cfg)
    if key not in _cache:
        _cache[key] = run_safely(cfg)
    return _cache[key]


@pytest.fixture(scope="session")
def run_cached():
    return cached_run


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    if test_acceptance.REPORT:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.REPORT:
            terminalreporter.write_line(line)
