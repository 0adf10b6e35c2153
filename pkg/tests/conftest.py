import pytest
from sqlalchemy.orm import sessionmaker

from database.database import init_db, make_engine
from snp.document import parse_system
from snp.fixtures import fixture_path, load_fixture
from snp.models import SystemDescription


@pytest.fixture
def load():
    """load('split_child', d=2) -> SystemDescription"""

    def _load(name: str, **params) -> SystemDescription:
        return load_fixture(name, params)

    return _load


@pytest.fixture
def document():
    """Raw text of a shipped fixture."""

    def _document(name: str) -> str:
        return fixture_path(name).read_text(encoding="utf-8")

    return _document


@pytest.fixture
def parse():
    def _parse(text: str, **params) -> SystemDescription:
        return parse_system(text, params)

    return _parse


@pytest.fixture
def memory_engine():
    engine = make_engine("sqlite://")
    init_db(engine)
    yield engine
    engine.dispose()


@pytest.fixture
def db_session(memory_engine):
    session = sessionmaker(autocommit=False, autoflush=False, bind=memory_engine)()
    try:
        yield session
    finally:
        session.close()


@pytest.fixture
def client(db_session):
    from fastapi.testclient import TestClient

    from database.database import get_db
    from main import app

    app.dependency_overrides[get_db] = lambda: db_session
    yield TestClient(app)
    app.dependency_overrides.clear()
