from __future__ import annotations

from pathlib import Path

import pytest

from mdb.ingest import build_graph, import_file, parse_import
from mdb.storage import Database

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_text(name: str) -> str:
    return (FIXTURES / f"{name}.dg").read_text(encoding="utf-8")


def fixture_graph(name: str):
    return build_graph(parse_import(fixture_text(name)))


@pytest.fixture(scope="session")
def fig1_db(tmp_path_factory):
    path = tmp_path_factory.mktemp("fig1") / "db"
    import_file(FIXTURES / "fig1.dg", path)
    db = Database.open(path)
    yield db
    db.close()


@pytest.fixture(scope="session")
def fig5_db(tmp_path_factory):
    path = tmp_path_factory.mktemp("fig5") / "db"
    import_file(FIXTURES / "fig5.dg", path)
    db = Database.open(path)
    yield db
    db.close()
