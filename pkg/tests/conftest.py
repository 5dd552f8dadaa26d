import os

import pytest
from hypothesis import settings

from embqe.index import build_index
from embqe.textpipe import AnalyzedDocument

settings.register_profile("ci", max_examples=200, deadline=None)
settings.register_profile("dev", max_examples=50, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))


def make_index(*docs):
    """Index from token lists; doc ids d1, d2, ..."""
    return build_index(AnalyzedDocument(f"d{i}", tuple(toks)) for i, toks in enumerate(docs, 1))


@pytest.fixture
def toy_index():
    # 10 tokens, cf(a)=4
    return make_index(["a", "a", "b"], ["a", "c", "c", "d"], ["a", "b", "e"])


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(RESULTS):
        status, title = RESULTS[num]
        terminalreporter.write_line(f"[{status}] criterion {num:2d}: {title}")
