import shutil
import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def toy_source() -> str:
    return (FIXTURES / "toy" / "utils.py").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def chooser_source() -> str:
    return (FIXTURES / "chooser.py").read_text(encoding="utf-8")


@pytest.fixture()
def toy_repo(tmp_path) -> Path:
    repo = tmp_path / "toy_repo"
    shutil.copytree(FIXTURES / "toy", repo)
    return repo


@pytest.fixture()
def two_module_repo(tmp_path) -> Path:
    repo = tmp_path / "two_modules"
    shutil.copytree(FIXTURES / "two_modules", repo)
    return repo


@pytest.fixture(scope="session")
def toy_build(tmp_path_factory):
    from dtg.builder import build_repo

    repo = tmp_path_factory.mktemp("toy_session") / "repo"
    shutil.copytree(FIXTURES / "toy", repo)
    return build_repo(repo), repo


@pytest.fixture(scope="session")
def chooser_build(tmp_path_factory):
    from dtg.builder import build_repo

    repo = tmp_path_factory.mktemp("chooser_session") / "repo"
    repo.mkdir()
    shutil.copy(FIXTURES / "chooser.py", repo / "chooser.py")
    return build_repo(repo), repo
