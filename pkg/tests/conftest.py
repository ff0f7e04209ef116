from __future__ import annotations

import functools
import json
from pathlib import Path

import numpy as np
import pytest

from step_parts.brep import build_brep
from step_parts.carrier import Carrier
from step_parts.step_parser import parse_step

FIXTURE_DIR = Path(__file__).parent / "fixtures"
MANIFEST = json.loads((FIXTURE_DIR / "manifest.json").read_text())
FIXTURE_NAMES = sorted(k for k in MANIFEST if not k.startswith("_"))
CLOSED_FIXTURES = [n for n in FIXTURE_NAMES if n not in ("planar_patch", "bspline_patch")]


def fixture_text(name: str) -> str:
    return (FIXTURE_DIR / f"{name}.step").read_text()


@functools.lru_cache(maxsize=None)
def load_graph(name: str):
    return parse_step(fixture_text(name))


@functools.lru_cache(maxsize=None)
def load_solid(name: str):
    return build_brep(load_graph(name))


def grid_carrier(labels_by_cell: np.ndarray) -> Carrier:
    """Unit squares split into two triangles; ``labels_by_cell[r, c]`` gives both triangles' label."""
    rows, cols = labels_by_cell.shape
    xs, ys = np.meshgrid(np.arange(cols + 1, dtype=float), np.arange(rows + 1, dtype=float))
    V = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(xs.size)])
    vid = lambda r, c: r * (cols + 1) + c  # noqa: E731
    tris, labels = [], []
    for r in range(rows):
        for c in range(cols):
            a, b, d, e = vid(r, c), vid(r, c + 1), vid(r + 1, c + 1), vid(r + 1, c)
            tris += [(a, b, d), (a, d, e)]
            labels += [labels_by_cell[r, c]] * 2
    n = len(tris)
    return Carrier(V, np.array(tris, np.int64), np.array(labels, np.int64), np.zeros(n, np.int64),
                   np.array(["Plane"] * n, dtype="<U24"), {})


@pytest.fixture(scope="session")
def manifest():
    return MANIFEST


@pytest.fixture(scope="session")
def fixture_dir():
    return FIXTURE_DIR


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for ac in sorted(results, key=lambda k: int(k[2:])):
        ok, detail = results[ac]
        terminalreporter.write_line(f"{ac} {'PASS' if ok else 'FAIL'}: {detail}")
