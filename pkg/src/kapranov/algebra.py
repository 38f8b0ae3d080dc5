"""Finite-dimensional commutative dg algebras (exterior form).

An algebra here is a free graded-commutative algebra on finitely many
degree-1 generators, equipped with a degree-1 differential; this is
exactly the shape of a Chevalley-Eilenberg algebra.  Elements are sparse
sums of monomials; a monomial is a strictly increasing tuple of generator
indices, and its degree is its length.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterator, Sequence

from .graded import ONE, ZERO, GradedBasis, Scalar

Monomial = tuple[int, ...]


def _merge_monomials(a: Monomial, b: Monomial) -> tuple[int, Monomial]:
    """Sign and result of the wedge of two increasing monomials.

    Returns ``(0, ())`` when the product vanishes (repeated generator).
    Since every generator has odd degree, the sign is the parity of the
    number of transpositions needed to interleave ``b`` into ``a``.
    """
    if not a:
        return 1, b
    if not b:
        return 1, a
    if set(a) & set(b):
        return 0, ()
    merged: list[int] = []
    sign = 1
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i] < b[j]:
            merged.append(a[i])
            i += 1
        else:
            merged.append(b[j])
            # b[j] jumps over the remaining len(a)-i odd generators
            if (len(a) - i) % 2:
                sign = -sign
            j += 1
    merged.extend(a[i:])
    merged.extend(b[j:])
    return sign, tuple(merged)


class AlgebraElement:
    """Sparse element of an exterior algebra: dict monomial -> coefficient."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict[Monomial, Fraction] | None = None):
        self.terms: dict[Monomial, Fraction] = {}
        if terms:
            for mon, c in terms.items():
                c = Fraction(c)
                if c:
                    self.terms[tuple(mon)] = c

    @classmethod
    def scalar(cls, c) -> "AlgebraElement":
        return cls({(): Fraction(c)})

    @classmethod
    def generator(cls, i: int) -> "AlgebraElement":
        return cls({(i,): ONE})

    @classmethod
    def monomial(cls, mon: Monomial, c=ONE) -> "AlgebraElement":
        return cls({tuple(mon): Fraction(c)})

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int | None:
        degs = {len(m) for m in self.terms}
        if not degs:
            return None
        if len(degs) == 1:
            return degs.pop()
        raise ValueError(f"element is not homogeneous: {self}")

    def homogeneous_parts(self) -> dict[int, "AlgebraElement"]:
        parts: dict[int, AlgebraElement] = {}
        for mon, c in self.terms.items():
            parts.setdefault(len(mon), AlgebraElement()).terms[mon] = c
        return parts

    def scalar_part(self) -> Fraction:
        return self.terms.get((), ZERO)

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        out = dict(self.terms)
        for mon, c in other.terms.items():
            s = out.get(mon, ZERO) + c
            if s:
                out[mon] = s
            else:
                out.pop(mon, None)
        return AlgebraElement(out)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-other)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement({m: -c for m, c in self.terms.items()})

    def scale(self, c) -> "AlgebraElement":
        c = Fraction(c)
        if not c:
            return AlgebraElement()
        return AlgebraElement({m: c * v for m, v in self.terms.items()})

    def __rmul__(self, c) -> "AlgebraElement":
        return self.scale(c)

    def __mul__(self, other: "AlgebraElement") -> "AlgebraElement":
        out: dict[Monomial, Fraction] = {}
        for ma, ca in self.terms.items():
            for mb, cb in other.terms.items():
                sign, mon = _merge_monomials(ma, mb)
                if sign == 0:
                    continue
                s = out.get(mon, ZERO) + sign * ca * cb
                if s:
                    out[mon] = s
                else:
                    out.pop(mon, None)
        return AlgebraElement(out)

    def __eq__(self, other) -> bool:
        return isinstance(other, AlgebraElement) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def pretty(self, names: Sequence[str]) -> str:
        if not self.terms:
            return "0"
        parts = []
        for mon in sorted(self.terms, key=lambda m: (len(m), m)):
            c = self.terms[mon]
            word = "^".join(names[i] for i in mon) if mon else "1"
            parts.append(f"({c})*{word}" if mon else f"({c})")
        return " + ".join(parts)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{c}*g{list(m)}" for m, c in sorted(self.terms.items(),
                                                               key=lambda kv: (len(kv[0]), kv[0])))


class CdgaPresentation:
    """Free graded-commutative algebra on degree-1 generators with a differential.

    ``diff`` assigns to each generator index a degree-2 value; the
    differential extends as a degree-1 derivation.
    """

    def __init__(self, generator_names: Sequence[str],
                 diff: dict[int, AlgebraElement] | None = None):
        self.generators = GradedBasis(generator_names, [1] * len(generator_names))
        self.diff: dict[int, AlgebraElement] = {}
        for i, val in (diff or {}).items():
            if not (0 <= i < len(generator_names)):
                raise ValueError(f"differential on unknown generator index {i}")
            if not val.is_zero():
                if val.degree() != 2:
                    raise ValueError(
                        f"d({generator_names[i]}) must be homogeneous of degree 2")
                self.diff[i] = val

    @property
    def n_generators(self) -> int:
        return len(self.generators)

    def monomials(self, degree: int | None = None) -> Iterator[Monomial]:
        """All monomials, in (degree, lexicographic) order."""
        n = self.n_generators
        degrees = range(n + 1) if degree is None else [degree]
        for k in degrees:
            if 0 <= k <= n:
                yield from itertools.combinations(range(n), k)

    def dimension(self) -> int:
        return 2 ** self.n_generators

    def top_degree(self) -> int:
        return self.n_generators

    def apply_differential(self, a: AlgebraElement) -> AlgebraElement:
        """Extend the generator values as a degree-1 derivation."""
        out = AlgebraElement()
        for mon, c in a.terms.items():
            for t in range(len(mon)):
                dv = self.diff.get(mon[t])
                if dv is None:
                    continue
                sign = -1 if t % 2 else 1
                prefix = AlgebraElement.monomial(mon[:t])
                suffix = AlgebraElement.monomial(mon[t + 1:])
                out = out + (prefix * dv * suffix).scale(sign * c)
        return out

    def __eq__(self, other) -> bool:
        return (isinstance(other, CdgaPresentation)
                and self.generators == other.generators
                and self.diff == other.diff)

    def __repr__(self) -> str:
        return f"CdgaPresentation({list(self.generators.names)})"


def validate_cdga(alg: CdgaPresentation) -> list[str]:
    """Check d^2 = 0 on generators (hence everywhere).  Returns failures."""
    failures = []
    for i in range(alg.n_generators):
        d2 = alg.apply_differential(alg.diff.get(i, AlgebraElement()))
        if not d2.is_zero():
            failures.append(
                f"d^2({alg.generators.names[i]}) = {d2.pretty(alg.generators.names)}")
    return failures


class LieAlgebraData:
    """A finite-dimensional Lie algebra given by structure constants.

    ``brackets[(i, j)]`` for ``i < j`` is a dict ``k -> c`` meaning
    ``[x_i, x_j] = sum_k c * x_k``.
    """

    def __init__(self, basis_names: Sequence[str],
                 brackets: dict[tuple[int, int], dict[int, Fraction]]):
        self.names = tuple(basis_names)
        self.dim = len(self.names)
        self.brackets: dict[tuple[int, int], dict[int, Fraction]] = {}
        for (i, j), row in brackets.items():
            if not (0 <= i < self.dim and 0 <= j < self.dim):
                raise ValueError(f"bracket on unknown basis indices ({i},{j})")
            if i >= j:
                raise ValueError("structure constants must be keyed by i < j")
            clean = {k: Fraction(c) for k, c in row.items() if Fraction(c)}
            if clean:
                self.brackets[(i, j)] = clean

    def bracket(self, i: int, j: int) -> dict[int, Fraction]:
        """[x_i, x_j] as a coefficient dict (antisymmetry built in)."""
        if i == j:
            return {}
        if i < j:
            return dict(self.brackets.get((i, j), {}))
        return {k: -c for k, c in self.brackets.get((j, i), {}).items()}

    def bracket_vectors(self, v: dict[int, Fraction],
                        w: dict[int, Fraction]) -> dict[int, Fraction]:
        out: dict[int, Fraction] = {}
        for i, a in v.items():
            for j, b in w.items():
                for k, c in self.bracket(i, j).items():
                    s = out.get(k, ZERO) + a * b * c
                    if s:
                        out[k] = s
                    else:
                        out.pop(k, None)
        return out

    def jacobi_failures(self) -> list[str]:
        out = []
        for i, j, k in itertools.combinations(range(self.dim), 3):
            acc: dict[int, Fraction] = {}
            for (a, b, c) in ((i, j, k), (j, k, i), (k, i, j)):
                inner = self.bracket(b, c)
                for m, cf in inner.items():
                    for l, cf2 in self.bracket(a, m).items():
                        s = acc.get(l, ZERO) + cf * cf2
                        if s:
                            acc[l] = s
                        else:
                            acc.pop(l, None)
            if acc:
                out.append(f"Jacobi fails on ({self.names[i]},{self.names[j]},{self.names[k]}): {acc}")
        return out


def ce_algebra(lie: LieAlgebraData, name_fn=None) -> CdgaPresentation:
    """Chevalley-Eilenberg algebra of a Lie algebra.

    Generators xi^k dual to the basis, with
    ``d(xi^k) = - sum_{i<j} c^k_ij xi^i ^ xi^j``.
    """
    if name_fn is None:
        name_fn = lambda n: n + "^"
    gen_names = [name_fn(n) for n in lie.names]
    diff: dict[int, AlgebraElement] = {}
    for (i, j), row in lie.brackets.items():
        for k, c in row.items():
            diff.setdefault(k, AlgebraElement())
            diff[k] = diff[k] + AlgebraElement.monomial((i, j), -c)
    diff = {k: v for k, v in diff.items() if not v.is_zero()}
    return CdgaPresentation(gen_names, diff)
