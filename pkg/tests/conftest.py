"""Shared small instances used across the test suite."""

from __future__ import annotations

from fractions import Fraction

import pytest

from kapranov.algebra import AlgebraElement, LieAlgebraData, ce_algebra


@pytest.fixture
def sl2():
    """[h,e] = 2e, [h,f] = -2f, [e,f] = h, basis order (h, e, f)."""
    return LieAlgebraData(
        ["h", "e", "f"],
        {(0, 1): {1: Fraction(2)},
         (0, 2): {2: Fraction(-2)},
         (1, 2): {0: Fraction(1)}})


@pytest.fixture
def borel():
    """Borel of sl2: [h,e] = 2e, basis order (h, e)."""
    return LieAlgebraData(["h", "e"], {(0, 1): {1: Fraction(2)}})


@pytest.fixture
def affine():
    """Two-dimensional nonabelian Lie algebra: [x,y] = y."""
    return LieAlgebraData(["x", "y"], {(0, 1): {1: Fraction(1)}})


@pytest.fixture
def heisenberg():
    """[x,y] = z, z central."""
    return LieAlgebraData(["x", "y", "z"], {(0, 1): {2: Fraction(1)}})
