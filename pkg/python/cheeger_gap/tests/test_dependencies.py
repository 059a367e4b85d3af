"""Tests that the declared runtime dependencies are the ones the package imports."""

import ast
import re
import tomllib
from pathlib import Path

PACKAGE_DIR = Path(__file__).resolve().parents[1]
PYPROJECT = PACKAGE_DIR.parents[1] / "pyproject.toml"

# Distribution name -> top-level import name, where they differ.
IMPORT_NAMES = {"python-dotenv": "dotenv"}


def _declared() -> set[str]:
    with PYPROJECT.open("rb") as f:
        deps = tomllib.load(f)["project"]["dependencies"]
    return {re.split(r"[<>=!~;\[ ]", dep, maxsplit=1)[0] for dep in deps}


def _imported() -> set[str]:
    names: set[str] = set()
    for path in PACKAGE_DIR.rglob("*.py"):
        if "tests" in path.relative_to(PACKAGE_DIR).parts:
            continue
        for node in ast.walk(ast.parse(path.read_text(encoding="utf-8"))):
            if isinstance(node, ast.Import):
                names.update(alias.name.split(".")[0] for alias in node.names)
            elif isinstance(node, ast.ImportFrom) and node.level == 0 and node.module:
                names.add(node.module.split(".")[0])
    return names


def test_every_dependency_is_imported() -> None:
    imported = _imported()
    unused = {dep for dep in _declared() if IMPORT_NAMES.get(dep, dep) not in imported}
    assert not unused


def test_typing_backports_are_not_needed() -> None:
    assert "typing_extensions" not in _imported()
    assert "typing-extensions" not in _declared()
