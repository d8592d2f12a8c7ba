"""Shared fixtures and independent oracles.

The oracles here deliberately avoid the library's own code paths: covariance
integrals are done by composite Simpson quadrature on the defining integral,
and Gaussian moments by brute-force enumeration of pair partitions. Expected
values in the tests were computed with these and then frozen.
"""

from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg

from ou_spectra import validate_model
from ou_spectra.worked_examples import Section5Params, section4_model, section5_model


@pytest.fixture
def model4():
    return section4_model()


@pytest.fixture
def params5():
    return Section5Params(2, 1, 1)


@pytest.fixture
def model5(params5):
    return section5_model(params5)


@pytest.fixture
def model_1d():
    return validate_model([[1]], [[-1]])


@pytest.fixture
def jordan2():
    return validate_model([[1, 0], [0, 1]], [[-1, 1], [0, -1]])


@pytest.fixture
def jordan3():
    identity3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
    return validate_model(identity3, [[-2, 0, 0], [1, -2, 0], [0, 1, -2]])


def small_test_models():
    """Assorted valid models exercised by cross-cutting invariants."""
    return [
        section4_model(),
        section5_model(Section5Params(2, 1, 1)),
        section5_model(Section5Params(3, 1, 2)),
        validate_model([[1]], [[-1]]),
        validate_model([[1, 0], [0, 1]], [[-1, 1], [0, -1]]),
        validate_model([[2, 1], [1, 3]], [[-2, 1], [0, -1]]),
    ]


def simpson_covariance(model, t: float, panels: int | None = None) -> np.ndarray:
    """Composite Simpson quadrature of the defining covariance integral
    int_0^t e^(sB) Q e^(sB^T) ds."""
    if panels is None:
        panels = 512 * max(1, int(np.ceil(t)))
    assert panels % 2 == 0
    B, Q = model.B, model.Q

    def f(s):
        E = scipy.linalg.expm(s * B)
        return E @ Q @ E.T

    h = t / panels
    total = f(0.0) + f(t)
    for k in range(1, panels):
        total = total + (4.0 if k % 2 else 2.0) * f(k * h)
    return total * (h / 3.0)


def isserlis_bruteforce(sigma_rows, alpha):
    """E[x^alpha] for N(0, Sigma) by summing covariance products over all
    perfect matchings of the index multiset. Exact for rational Sigma."""
    idx = []
    for i, a in enumerate(alpha):
        idx.extend([i] * a)
    if len(idx) % 2 == 1:
        return Fraction(0)

    def rec(rest):
        if not rest:
            return Fraction(1)
        first, tail = rest[0], rest[1:]
        total = Fraction(0)
        for j in range(len(tail)):
            partner = tail[j]
            remaining = tail[:j] + tail[j + 1 :]
            total += Fraction(sigma_rows[first][partner]) * rec(remaining)
        return total

    return rec(idx)
