"""Shared test fixtures for mudkit tests."""
import json
import math

import numpy as np
import pytest

from src.mudkit.core.metrics import Scenario
from src.mudkit.distributions import (Binomial, Deterministic, NegBinomial, Poisson,
                                      PoissonBinomial, spread_probs)


@pytest.fixture
def rng():
    """Seeded generator for randomized property tests."""
    return np.random.default_rng(20240611)


@pytest.fixture
def five_variants():
    """One member of each count variant, all with mean 4."""
    return {
        "deterministic": Deterministic(4),
        "binomial": Binomial(8, 0.5),
        "negbinomial": NegBinomial(4.0, 0.5),
        "poisson": Poisson(4.0),
        "pb": PoissonBinomial(tuple(spread_probs(8, 4.0, 0.5))),
    }


@pytest.fixture
def scenario_factory():
    """Build a Scenario around a count with keyword overrides."""
    def make(count, **kwargs):
        return Scenario(count, **kwargs)
    return make


def random_quadruple(rng, mean=None):
    """Equal-mean (NB, Poisson, Binomial, PB) members for the ordering chain."""
    size = int(rng.integers(4, 40))
    if mean is not None:
        size = max(size, int(math.ceil(2.0 * mean)))
    mean = float(rng.uniform(0.5, 0.6 * size)) if mean is None else mean
    probs = rng.uniform(0.0, 1.0, size)
    probs = probs / probs.sum() * mean
    while probs.max() >= 1.0:
        probs = np.minimum(probs, 0.95)
        probs = probs / probs.sum() * mean
    probs = probs / probs.sum() * mean
    nb_p = float(rng.uniform(0.05, 0.95))
    return (
        NegBinomial(mean * (1.0 - nb_p) / nb_p, nb_p),
        Poisson(mean),
        Binomial(size, mean / size),
        PoissonBinomial(tuple(float(p) for p in probs)),
    )


@pytest.fixture
def quadruple_factory():
    return random_quadruple


@pytest.fixture
def write_scenario(tmp_path):
    """Write a scenario document (dict or raw text) and return its path."""
    def write(document, name="scenario.json"):
        path = tmp_path / name
        text = document if isinstance(document, str) else json.dumps(document, indent=2)
        path.write_text(text)
        return str(path)
    return write


@pytest.fixture
def binomial_scenario_doc():
    return {
        "scenario": {"count": {"kind": "binomial", "L": 8, "p": 0.5}, "snr": 10, "rate": 1},
        "mc": {"trials": 2000, "seed": 11},
    }
