import csv
from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def table1():
    """Reference ``m_q`` values for odd primes below 1000, as decimal strings."""
    with open(DATA / "table1.csv") as fh:
        return {int(r["q"]): r["m_q"] for r in csv.DictReader(fh)}


@pytest.fixture(scope="session")
def model_samples():
    """One million model draws at P = 10^4, seed 42 (shared by the slow tests)."""
    from lchi.randmodel import RandomModelConfig, sample_ld

    cfg = RandomModelConfig(prime_cutoff=10_000, samples=1_000_000, seed=42)
    return cfg, sample_ld(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(autouse=True)
def _isolated_cache(monkeypatch):
    monkeypatch.delenv("LCHI_CACHE_DIR", raising=False)


# criterion number -> list of (ok, detail) parts, filled by test_acceptance
ACCEPTANCE: dict[int, list] = {}


@pytest.fixture(scope="session")
def acceptance():
    def record(n, ok, detail):
        ACCEPTANCE.setdefault(n, []).append((bool(ok), detail))
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in range(1, 10):
        parts = ACCEPTANCE.get(n)
        if not parts:
            terminalreporter.write_line(f"criterion {n}: NOT RUN")
            continue
        ok = all(p[0] for p in parts)
        detail = "; ".join(p[1] for p in parts)
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
