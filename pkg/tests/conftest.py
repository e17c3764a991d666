import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from ppns.ratings import RatingMatrix, ingest_movielens

ROOT = Path(__file__).resolve().parents[1]
ML100K = ROOT / "data" / "ml-100k" / "u.data"


def ml100k_path() -> Path:
    if not ML100K.exists():
        subprocess.run([sys.executable, str(ROOT / "scripts" / "fetch_ml100k.py")], check=True)
    return ML100K


@pytest.fixture(scope="session")
def ml_path():
    return ml100k_path()


@pytest.fixture(scope="session")
def ml(ml_path):
    return ingest_movielens(ml_path)


@pytest.fixture
def fixture_file(tmp_path):
    p = tmp_path / "u.data"
    p.write_text("1\t10\t4\t0\n1\t11\t3\t0\n2\t10\t5\t0\n")
    return p


def random_matrix(seed, n_users=30, n_items=25, density=0.3) -> RatingMatrix:
    rng = np.random.default_rng(seed)
    triples = [
        (u, i, int(rng.integers(1, 6)))
        for u in range(n_users)
        for i in range(n_items)
        if rng.random() < density
    ]
    return RatingMatrix.from_triples(triples)
