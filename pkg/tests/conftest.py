from __future__ import annotations

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))


@pytest.fixture(autouse=True)
def exact_mode(monkeypatch):
    monkeypatch.delenv("BANACHFORGE_MODE", raising=False)
