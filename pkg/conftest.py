import copy
import json

import numpy as np
from pytest import fixture

from filtration import build_tree
from kernel import kernel_from_increasing, kernel_from_process, kernel_rational
from models import gen_binomial_martingale, random_increasing_process, random_rational_model, random_tree

R1_SCHEDULE = [1.0, 0.5, 0.25]

R1_CONFIG = {
    "tree": {"branching": [2, 2], "probabilities": [["1/2", "1/2"], ["1/2", "1/2"]], "times": [0, 1, 2]},
    "kernel": {
        "type": "rational",
        "alpha": {"kind": "geometric", "initial": 1, "ratio": 0.5},
        "beta": {"kind": "geometric", "initial": 1, "ratio": 0.5},
        "martingale": {"kind": "multiplicative-binomial", "up": 1.2, "down": 0.8, "probability": 0.5, "initial": 1},
    },
    "assets": [
        {"id": "frn", "dividends": "short-rate", "redemption": 1, "value": "fundamental"},
        {"id": "money-market", "dividends": "zero", "value": "money-market"},
        {"id": "zero", "dividends": "zero"},
    ],
    "fx": [{"id": "foreign", "dividends": {"deterministic": [0.5, 0.5], "start": 1}, "redemption": 1}],
    "outputs": {"from": 0, "asset": "frn"},
}

CHAIN_CONFIG = {
    "tree": {"branching": [1, 1]},
    "kernel": {"type": "explicit", "process": {"deterministic": [1.0, 0.5, 0.25]}},
    "assets": [{"id": "coupon", "dividends": {"deterministic": [1, 1], "start": 1}}],
}


@fixture
def r1_tree():
    """Binary tree of depth 2 with probability 1/2 on every branch."""
    return build_tree([2, 2], [["1/2", "1/2"], ["1/2", "1/2"]], times=[0, 1, 2])


@fixture
def r1_martingale(r1_tree):
    return gen_binomial_martingale(r1_tree, 1.2, 0.8, 0.5, 1.0)


@fixture
def r1_kernel(r1_tree, r1_martingale):
    """pi_i = 2^-i (1 + N_i): pi_0 = 2, pi_1 = (1.1, 0.9), pi_2 = (0.61, 0.49, 0.49, 0.41)."""
    return kernel_rational(r1_tree, R1_SCHEDULE, R1_SCHEDULE, r1_martingale)


@fixture
def chain_tree():
    return build_tree([1, 1])


@fixture
def chain_kernel(chain_tree):
    """Deterministic kernel pi_i = 2^-i."""
    return kernel_from_process(chain_tree, [[1.0], [0.5], [0.25]])


@fixture
def rng():
    return np.random.default_rng(20240601)


@fixture(params=[("rational", seed) for seed in range(100)] + [("increasing", seed) for seed in range(50)],
         ids=lambda param: f"{param[0]}-{param[1]}")
def random_kernel(request):
    """Seeded kernels from rational models and from strictly increasing processes."""
    family, seed = request.param
    if family == "rational":
        rng = np.random.default_rng(4000 + seed)
        model = random_rational_model(rng, int(rng.integers(1, 7)))
        return kernel_rational(model.tree, model.alpha, model.beta, model.martingale)
    rng = np.random.default_rng(5000 + seed)
    tree = random_tree(rng, int(rng.integers(2, 5)))
    kernel, _ = kernel_from_increasing(tree, random_increasing_process(rng, tree))
    return kernel


def _write(tmp_path, name, document):
    path = tmp_path / name
    path.write_text(json.dumps(document), encoding="utf-8")
    return path


@fixture
def r1_config():
    return copy.deepcopy(R1_CONFIG)


@fixture
def r1_config_path(tmp_path):
    return _write(tmp_path, "r1.json", R1_CONFIG)


@fixture
def chain_config_path(tmp_path):
    return _write(tmp_path, "chain.json", CHAIN_CONFIG)


@fixture
def write_config(tmp_path):
    """Write an arbitrary configuration document and return its path."""
    def write(document, name="model.json"):
        if isinstance(document, str):
            path = tmp_path / name
            path.write_text(document, encoding="utf-8")
            return path
        return _write(tmp_path, name, document)
    return write
