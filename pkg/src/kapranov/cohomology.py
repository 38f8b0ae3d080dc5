"""Cohomology of finite-dimensional cochain complexes over Q.

A dg module over a finite-dimensional algebra is a finite-dimensional
cochain complex over the ground field; this module slices it by degree
and runs exact rational row reduction to get kernels, images, and
deterministic representatives of cohomology classes.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .algebra import AlgebraElement, Monomial
from .graded import ONE, ZERO
from .modules import DgModule, ModuleElement, apply_module_differential

Vector = list[Fraction]
Matrix = list[Vector]


def rref(m: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form (fresh copy) and pivot column list."""
    m = [row[:] for row in m]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if m[i][c]), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        pv = m[r][c]
        m[r] = [x / pv for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def kernel_basis(m: Matrix, n_cols: int) -> list[Vector]:
    """Basis of the null space of m (rows are equations), standard form.

    One vector per free column, with 1 in the free slot; deterministic.
    """
    if not m:
        return [[ONE if i == j else ZERO for i in range(n_cols)]
                for j in range(n_cols)]
    red, pivots = rref(m)
    pivot_set = set(pivots)
    free = [c for c in range(n_cols) if c not in pivot_set]
    out = []
    for fc in free:
        v = [ZERO] * n_cols
        v[fc] = ONE
        for r, pc in enumerate(pivots):
            v[pc] = -red[r][fc]
        out.append(v)
    return out


def solve_linear(m: Matrix, b: Vector) -> Vector | None:
    """One solution of m x = b (free variables zero), or None."""
    rows = len(m)
    if rows == 0:
        return []
    n_cols = len(m[0])
    aug = [row[:] + [bb] for row, bb in zip(m, b)]
    red, pivots = rref(aug)
    if n_cols in pivots:
        return None
    x = [ZERO] * n_cols
    for r, pc in enumerate(pivots):
        x[pc] = red[r][n_cols]
    return x


class RowSpace:
    """Incremental RREF row space, for reduction mod a growing span."""

    def __init__(self, n_cols: int):
        self.n_cols = n_cols
        self.rows: list[Vector] = []   # kept in echelon form
        self.pivots: list[int] = []

    def reduce(self, v: Vector) -> Vector:
        v = v[:]
        for row, pc in zip(self.rows, self.pivots):
            if v[pc]:
                f = v[pc]
                v = [a - f * b for a, b in zip(v, row)]
        return v

    def add(self, v: Vector) -> bool:
        """Insert v; returns True if it enlarged the space."""
        v = self.reduce(v)
        pc = next((c for c in range(self.n_cols) if v[c]), None)
        if pc is None:
            return False
        pv = v[pc]
        v = [a / pv for a in v]
        for i, row in enumerate(self.rows):
            if row[pc]:
                f = row[pc]
                self.rows[i] = [a - f * b for a, b in zip(row, v)]
        pos = next((k for k, p in enumerate(self.pivots) if p > pc), len(self.pivots))
        self.rows.insert(pos, v)
        self.pivots.insert(pos, pc)
        return True

    @property
    def dim(self) -> int:
        return len(self.rows)


class CochainComplex:
    """Degree-sliced view of a dg module as a complex over Q."""

    def __init__(self, module: DgModule):
        self.module = module
        self._kbasis: dict[int, list[tuple[Monomial, int]]] = {}
        self._index: dict[int, dict[tuple[Monomial, int], int]] = {}
        for key in module.kbasis():
            d = module.kdegree(key)
            self._kbasis.setdefault(d, []).append(key)
        for d, keys in self._kbasis.items():
            self._index[d] = {k: i for i, k in enumerate(keys)}
        self._dmat: dict[int, Matrix] = {}

    def degrees(self) -> list[int]:
        return sorted(self._kbasis)

    def slice_basis(self, n: int) -> list[tuple[Monomial, int]]:
        return self._kbasis.get(n, [])

    def dim(self, n: int) -> int:
        return len(self._kbasis.get(n, []))

    def to_vector(self, v: ModuleElement, n: int) -> Vector:
        idx = self._index.get(n, {})
        out = [ZERO] * self.dim(n)
        for i, a in v.coeffs.items():
            for mon, c in a.terms.items():
                key = (mon, i)
                if key not in idx:
                    raise ValueError(
                        f"element has a term outside degree {n}: {key}")
                out[idx[key]] += c
        return out

    def from_vector(self, vec: Sequence[Fraction], n: int) -> ModuleElement:
        out = self.module.zero()
        for c, key in zip(vec, self.slice_basis(n)):
            if c:
                mon, i = key
                out = out + ModuleElement(self.module,
                                          {i: AlgebraElement.monomial(mon, c)})
        return out

    def diff_matrix(self, n: int) -> Matrix:
        """Rows: images of the degree-n slice basis, in the degree-n+1 slice."""
        if n not in self._dmat:
            rows = []
            for key in self.slice_basis(n):
                dv = apply_module_differential(self.module,
                                               self.module.kbasis_element(key))
                rows.append(self.to_vector(dv, n + 1))
            self._dmat[n] = rows
        return self._dmat[n]

    def _diff_as_equations(self, n: int) -> Matrix:
        """Matrix with columns = degree-n basis, rows = degree-n+1 coords."""
        rows = self.diff_matrix(n)
        dim_out = self.dim(n + 1)
        return [[rows[j][i] for j in range(len(rows))] for i in range(dim_out)]

    def cocycles(self, n: int) -> list[Vector]:
        return kernel_basis(self._diff_as_equations(n), self.dim(n))

    def coboundary_space(self, n: int) -> RowSpace:
        space = RowSpace(self.dim(n))
        for row in self.diff_matrix(n - 1):
            space.add(row)
        return space

    def cohomology_basis(self, n: int) -> list[ModuleElement]:
        """Deterministic representatives of a basis of H^n."""
        image = self.coboundary_space(n)
        reps = []
        seen = RowSpace(self.dim(n))
        for row in image.rows:
            seen.add(row)
        for z in self.cocycles(n):
            if seen.add(z):
                reps.append(self.from_vector(z, n))
        return reps

    def betti(self, n: int) -> int:
        n_cocycles = len(self.cocycles(n))
        return n_cocycles - self.coboundary_space(n).dim

    def is_cocycle(self, v: ModuleElement) -> bool:
        return apply_module_differential(self.module, v).is_zero()

    def is_coboundary(self, v: ModuleElement) -> ModuleElement | None:
        """A primitive of v (free variables zero), or None.

        Raises ValueError when v is not closed.
        """
        if v.is_zero():
            return self.module.zero()
        n = v.degree()
        if not self.is_cocycle(v):
            raise ValueError("is_coboundary called on a non-cocycle")
        rows = self.diff_matrix(n - 1)
        target = self.to_vector(v, n)
        if not rows:
            return None if any(target) else self.module.zero()
        eqs = [[rows[j][i] for j in range(len(rows))] for i in range(self.dim(n))]
        x = solve_linear(eqs, target)
        if x is None:
            return None
        return self.from_vector(x, n - 1)

    def classes_equal(self, v: ModuleElement, w: ModuleElement) -> bool:
        diff = v - w
        if diff.is_zero():
            return True
        return self.is_coboundary(diff) is not None

    def class_coordinates(self, v: ModuleElement) -> list[Fraction] | None:
        """Coordinates of [v] in the cohomology_basis of its degree.

        Returns None for v = 0 in a degree with no classes... (empty list).
        """
        if v.is_zero():
            return []
        n = v.degree()
        if not self.is_cocycle(v):
            raise ValueError("class_coordinates called on a non-cocycle")
        reps = self.cohomology_basis(n)
        rep_vecs = [self.to_vector(r, n) for r in reps]
        bd_rows = self.diff_matrix(n - 1)
        # solve [reps | coboundaries] . x = v
        cols = rep_vecs + bd_rows
        dim = self.dim(n)
        eqs = [[col[i] for col in cols] for i in range(dim)]
        target = self.to_vector(v, n)
        x = solve_linear(eqs, target)
        if x is None:
            raise ValueError("closed element not in span of classes and coboundaries")
        return x[:len(reps)]
