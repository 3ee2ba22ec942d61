from __future__ import annotations

from pathlib import Path

import pytest

from sjpc import _backend

DATA = Path(__file__).parent / "data"

FOUR_ROWS = [
    (b"a1", b"b1", b"c1"),
    (b"a2", b"b2", b"c2"),
    (b"a1", b"b1", b"c3"),
    (b"a3", b"b2", b"c2"),
]

# two relations where the similarity join exceeds the mean of the self-joins
JOIN_A = [(b"a", b"b", b"c", b"d")]
JOIN_B_S2 = [(b"a", b"b", b"cx", b"dx"), (b"ax", b"bx", b"c", b"d")]
JOIN_B_S3 = [(b"ax", b"b", b"c", b"d"), (b"a", b"bx", b"c", b"d"), (b"a", b"b", b"cx", b"d")]


@pytest.fixture
def four_rows():
    return list(FOUR_ROWS)


@pytest.fixture
def data_dir() -> Path:
    return DATA


BACKENDS = [_backend.python] + ([_backend.compiled] if _backend.compiled is not None else [])


@pytest.fixture(params=BACKENDS, ids=lambda m: m.NAME)
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    from sjpc import estimator, hashing, records, sketch, subvalues

    for mod in (estimator, hashing, records, sketch, subvalues):
        monkeypatch.setattr(mod, "kernels", request.param)
    return request.param
