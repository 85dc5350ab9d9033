from pathlib import Path

import pytest

from model_server.config import MINIATURE, FinetuneConfig
from model_server.training import fine_tune
from model_server.vocabulary import load_relations, special_tokens

RELATIONS_FILE = Path(__file__).parents[2] / "src" / "dblpqa" / "data" / "relations.txt"

AUTHORED_BY = "https://dblp.org/rdf/schema#authoredBy"

NAMES = [
    "Maria Keller", "Tomas Vogel", "Ana Ruiz", "Kenji Sato", "Lena Fischer",
    "Peter Novak", "Ingrid Olsen", "Ruijie Wang", "Luca Rossetto", "Jane Doe",
    "Li Wei", "Omar Haddad", "Eva Novak", "Sam Hill", "Mia Park", "Leo Maas",
]


def toy_pairs() -> list[tuple[str, str]]:
    pairs = []
    for name in NAMES:
        pairs.append((
            f"how many papers did {name} write",
            "SELECT COUNT(DISTINCT ?answer) AS ?count WHERE { "
            f"?answer <{AUTHORED_BY}> <{name}> . }}"))
        pairs.append((
            f"list the papers {name} published",
            "SELECT DISTINCT ?answer WHERE { "
            f"?answer <{AUTHORED_BY}> <{name}> . }}"))
    assert len(pairs) == 32
    return pairs


@pytest.fixture(scope="session")
def relations():
    return load_relations(RELATIONS_FILE)


@pytest.fixture(scope="session")
def vocabulary(relations):
    return special_tokens(relations)


@pytest.fixture(scope="session")
def pairs():
    return toy_pairs()


@pytest.fixture(scope="session")
def trained(pairs, vocabulary, tmp_path_factory):
    """One thorough training run shared by the memorization and serving
    tests; artifacts land on disk for the save/load round trip."""
    out = tmp_path_factory.mktemp("artifacts")
    cfg = FinetuneConfig(base_model_id=MINIATURE, special_tokens=vocabulary,
                         epochs=150, batch_size=8, learning_rate=5e-4,
                         seed=13, output_dir=str(out))
    model, losses = fine_tune(pairs, cfg)
    return {"model": model, "losses": losses, "dir": out}
