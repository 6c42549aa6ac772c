import os

import numpy as np
import pytest

from indicial import Session, evaluate_expression
from indicial.algebra import decsym

SEED = int(os.environ.get("INDICIAL_SEED", "20260801"))


def make_rng(offset: int = 0) -> np.random.Generator:
    return np.random.default_rng(SEED + offset)


@pytest.fixture
def session() -> Session:
    s = Session()
    s.set_metric("g")
    return s


@pytest.fixture
def sym_session() -> Session:
    """Metric plus one antisymmetric and one symmetric rank-2 tensor."""
    s = Session()
    s.set_metric("g")
    decsym(s, "T", 2, 0, [("anti", "all")], [])
    decsym(s, "S", 2, 0, [("sym", "all")], [])
    return s


def ev(text: str, session: Session):
    return evaluate_expression(text, session)
