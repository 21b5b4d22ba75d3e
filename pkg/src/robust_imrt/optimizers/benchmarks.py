"""Analytic test functions with known minima, used to validate the optimizers."""

import numpy as np

from ..errors import UnknownBenchmark


def sphere(x):
    x = np.asarray(x, dtype=float)
    return float(np.sum(x**2))


def rosenbrock(x):
    x = np.asarray(x, dtype=float)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def rastrigin(x):
    x = np.asarray(x, dtype=float)
    return float(10.0 * x.size + np.sum(x**2 - 10.0 * np.cos(2.0 * np.pi * x)))


BENCHMARKS = {"sphere": sphere, "rosenbrock": rosenbrock, "rastrigin": rastrigin}

# location of the global minimum (value 0) for a given dimension
OPTIMA = {
    "sphere": lambda d: np.zeros(d),
    "rosenbrock": lambda d: np.ones(d),
    "rastrigin": lambda d: np.zeros(d),
}


def evaluate_benchmark(name: str, x) -> float:
    try:
        fn = BENCHMARKS[name]
    except KeyError:
        raise UnknownBenchmark(name) from None
    return fn(x)
