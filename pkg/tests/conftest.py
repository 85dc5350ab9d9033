import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

import corpus  # noqa: E402


@pytest.fixture(scope="session")
def corpus_paths(tmp_path_factory):
    return corpus.write_corpus(tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def worked_example(tmp_path_factory):
    root = tmp_path_factory.mktemp("worked")
    graph, fixtures = corpus.write_worked_example(root)
    return {"graph": graph, "fixtures": fixtures}
