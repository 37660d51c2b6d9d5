from __future__ import annotations

import copy
import json
from importlib import resources

import pytest

from tsgen.spec_io import parse_document

FIXTURES = resources.files("tsgen") / "fixtures"

TRANSITIONS = [
    [0.6, 0.3, 0.05, 0.05],
    [0.25, 0.4, 0.25, 0.1],
    [0.1, 0.3, 0.4, 0.2],
    [0.05, 0.05, 0.4, 0.5],
]
MEANS = [20.0, 40.0, 60.0, 80.0]


def fixture_text(name: str) -> str:
    return (FIXTURES / f"{name}.json").read_text(encoding="utf-8")


def fixture_json(name: str) -> dict:
    return json.loads(fixture_text(name))


def spec_from(doc: dict):
    return parse_document(json.dumps(doc)).network


@pytest.fixture
def hmm_doc() -> dict:
    return copy.deepcopy(fixture_json("hmm_example1"))


@pytest.fixture
def hmm_spec():
    return parse_document(fixture_text("hmm_example1")).network
