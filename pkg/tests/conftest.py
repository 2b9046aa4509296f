import json

import pytest
from hypothesis import settings

from strategies import group_corpus
from topolab.finite_lab import cyclic_group

settings.register_profile("ci", deadline=None, derandomize=True)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def corpus():
    return group_corpus()


@pytest.fixture
def z4():
    return cyclic_group(4)


@pytest.fixture
def write_json(tmp_path):
    """Write a JSON document to a temporary file and return its path."""
    def write(document, name="doc.json"):
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return str(path)
    return write


@pytest.fixture(autouse=True)
def _clean_env(monkeypatch):
    monkeypatch.delenv("TOPOLAB_INDEX_CAP", raising=False)
    monkeypatch.delenv("TOPOLAB_SEED", raising=False)
