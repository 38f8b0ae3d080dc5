"""Finite-rank dg modules over a commutative dg algebra.

A module is free over the algebra on a graded basis; its differential is
recorded by the matrix of its values on basis elements, with coefficients
in the algebra.  Elements are dicts mapping basis indices to algebra
coefficients (coefficients act from the left).
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterator, Sequence

from .algebra import AlgebraElement, CdgaPresentation, Monomial
from .graded import ONE, ZERO, GradedBasis


class ModuleElement:
    """Sparse element of a free dg module: dict basis index -> algebra coeff."""

    __slots__ = ("module", "coeffs")

    def __init__(self, module: "DgModule",
                 coeffs: dict[int, AlgebraElement] | None = None):
        self.module = module
        self.coeffs: dict[int, AlgebraElement] = {}
        if coeffs:
            for i, a in coeffs.items():
                if not a.is_zero():
                    self.coeffs[i] = a

    @classmethod
    def basis_vector(cls, module: "DgModule", i: int, coeff=None) -> "ModuleElement":
        if coeff is None:
            coeff = AlgebraElement.scalar(1)
        return cls(module, {i: coeff})

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int | None:
        degs = set()
        for i, a in self.coeffs.items():
            for mon in a.terms:
                degs.add(len(mon) + self.module.basis.degrees[i])
        if not degs:
            return None
        if len(degs) == 1:
            return degs.pop()
        raise ValueError(f"module element is not homogeneous: {self}")

    def homogeneous_parts(self) -> dict[int, "ModuleElement"]:
        parts: dict[int, ModuleElement] = {}
        for i, a in self.coeffs.items():
            bd = self.module.basis.degrees[i]
            for mon, c in a.terms.items():
                d = bd + len(mon)
                part = parts.setdefault(d, ModuleElement(self.module))
                cur = part.coeffs.setdefault(i, AlgebraElement())
                part.coeffs[i] = cur + AlgebraElement.monomial(mon, c)
        return parts

    def __add__(self, other: "ModuleElement") -> "ModuleElement":
        out = dict(self.coeffs)
        for i, a in other.coeffs.items():
            s = out.get(i, AlgebraElement()) + a
            if s.is_zero():
                out.pop(i, None)
            else:
                out[i] = s
        return ModuleElement(self.module, out)

    def __sub__(self, other: "ModuleElement") -> "ModuleElement":
        return self + (-other)

    def __neg__(self) -> "ModuleElement":
        return ModuleElement(self.module, {i: -a for i, a in self.coeffs.items()})

    def scale(self, c) -> "ModuleElement":
        return ModuleElement(self.module, {i: a.scale(c) for i, a in self.coeffs.items()})

    def __rmul__(self, c) -> "ModuleElement":
        return self.scale(c)

    def left_mul(self, a: AlgebraElement) -> "ModuleElement":
        """a . m  (no sign: coefficients live on the left)."""
        return ModuleElement(self.module, {i: a * b for i, b in self.coeffs.items()})

    def right_mul(self, a: AlgebraElement) -> "ModuleElement":
        """m . a = (-1)^{|m||a|} a . m, per homogeneous components."""
        out = ModuleElement(self.module)
        for i, b in self.coeffs.items():
            bd = self.module.basis.degrees[i]
            acc = AlgebraElement()
            for mon_b, cb in b.terms.items():
                dm = bd + len(mon_b)
                for mon_a, ca in a.terms.items():
                    sign = -1 if (dm * len(mon_a)) % 2 else 1
                    acc = acc + (AlgebraElement.monomial(mon_a)
                                 * AlgebraElement.monomial(mon_b)).scale(sign * ca * cb)
            if not acc.is_zero():
                out = out + ModuleElement(self.module, {i: acc})
        return out

    def __eq__(self, other) -> bool:
        return (isinstance(other, ModuleElement)
                and self.module.basis == other.module.basis
                and self.coeffs == other.coeffs)

    def pretty(self) -> str:
        if not self.coeffs:
            return "0"
        names = self.module.algebra.generators.names
        return " + ".join(
            f"[{self.coeffs[i].pretty(names)}]*{self.module.basis.names[i]}"
            for i in sorted(self.coeffs))

    def __repr__(self) -> str:
        return self.pretty()


class DgModule:
    """Free dg module over a :class:`CdgaPresentation`.

    ``diff_matrix[(i, j)]`` is the algebra coefficient of basis vector j in
    the differential of basis vector i; each entry is homogeneous of degree
    ``1 + |e_i| - |e_j|``.
    """

    def __init__(self, algebra: CdgaPresentation, basis: GradedBasis,
                 diff_matrix: dict[tuple[int, int], AlgebraElement] | None = None,
                 label: str = ""):
        self.algebra = algebra
        self.basis = basis
        self.label = label
        self.diff_matrix: dict[tuple[int, int], AlgebraElement] = {}
        for (i, j), a in (diff_matrix or {}).items():
            if not (0 <= i < len(basis) and 0 <= j < len(basis)):
                raise ValueError(f"differential entry at unknown indices ({i},{j})")
            if not a.is_zero():
                self.diff_matrix[(i, j)] = a
        # set by dual_module so contraction can recognize the predual
        self.dual_of: DgModule | None = None

    @property
    def rank(self) -> int:
        return len(self.basis)

    def zero(self) -> ModuleElement:
        return ModuleElement(self)

    def diff_of_basis(self, i: int) -> ModuleElement:
        return ModuleElement(self, {j: a for (k, j), a in self.diff_matrix.items()
                                    if k == i})

    def element(self, coeffs: dict[int, AlgebraElement]) -> ModuleElement:
        return ModuleElement(self, coeffs)

    def kbasis(self, degree: int | None = None) -> list[tuple[Monomial, int]]:
        """Ground-field basis: pairs (monomial, module basis index).

        Enumerated basis-index major, monomials in (degree, lex) order.
        """
        out = []
        for i in range(self.rank):
            for mon in self.algebra.monomials():
                if degree is None or len(mon) + self.basis.degrees[i] == degree:
                    out.append((mon, i))
        return out

    def kbasis_element(self, key: tuple[Monomial, int]) -> ModuleElement:
        mon, i = key
        return ModuleElement(self, {i: AlgebraElement.monomial(mon)})

    def kdegree(self, key: tuple[Monomial, int]) -> int:
        mon, i = key
        return len(mon) + self.basis.degrees[i]

    def __eq__(self, other) -> bool:
        return (isinstance(other, DgModule)
                and self.algebra == other.algebra
                and self.basis == other.basis
                and self.diff_matrix == other.diff_matrix)

    def __repr__(self) -> str:
        return f"DgModule({self.label or list(self.basis.names)})"


def apply_module_differential(module: DgModule, v: ModuleElement) -> ModuleElement:
    """d(a.e) = dA(a).e + (-1)^{|a|} a.d(e), per homogeneous coefficient parts."""
    out = module.zero()
    for i, a in v.coeffs.items():
        de = module.diff_of_basis(i)
        for mon, c in a.terms.items():
            am = AlgebraElement.monomial(mon, c)
            da = module.algebra.apply_differential(am)
            if not da.is_zero():
                out = out + ModuleElement(module, {i: da})
            sign = -1 if len(mon) % 2 else 1
            out = out + de.left_mul(am).scale(sign)
    return out


def validate_dg_module(module: DgModule) -> list[str]:
    """Degree homogeneity of the matrix and d^2 = 0 on basis vectors."""
    failures = []
    names = module.basis.names
    for (i, j), a in module.diff_matrix.items():
        want = 1 + module.basis.degrees[i] - module.basis.degrees[j]
        try:
            deg = a.degree()
        except ValueError:
            failures.append(f"diff entry ({names[i]},{names[j]}) is not homogeneous")
            continue
        if deg is not None and deg != want:
            failures.append(
                f"diff entry ({names[i]},{names[j]}) has degree {deg}, expected {want}")
    for i in range(module.rank):
        d2 = apply_module_differential(module, module.diff_of_basis(i))
        if not d2.is_zero():
            failures.append(f"d^2({names[i]}) = {d2.pretty()}")
    return failures


def dual_module(module: DgModule, name_fn=None) -> DgModule:
    """Dual dg module, with the pairing-compatible differential.

    With d(e_i) = sum_j a_ij e_j, the dual satisfies
    d(e_i*) = sum_j c_ij e_j* where c_ij = -(-1)^{|e_i|(1+|e_j|)} a_ji.
    """
    if name_fn is None:
        name_fn = lambda n: n + "*"
    basis = GradedBasis([name_fn(n) for n in module.basis.names],
                        [-d for d in module.basis.degrees])
    diff: dict[tuple[int, int], AlgebraElement] = {}
    for (j, i), a in module.diff_matrix.items():
        p = module.basis.degrees[i]
        q = module.basis.degrees[j]
        sign = -1 if (p * (1 + q)) % 2 == 0 else 1
        # sign above is -(-1)^{p(1+q)}
        diff[(i, j)] = a.scale(sign)
    dual = DgModule(module.algebra, basis, diff,
                    label=f"{module.label}*" if module.label else "")
    dual.dual_of = module
    return dual


def pair(beta: ModuleElement, v: ModuleElement) -> AlgebraElement:
    """Evaluation pairing dual(M) x M -> A.

    <e_i*, e_j> = delta_ij; <a.beta, v> = a<beta, v>;
    <beta, a.v> = (-1)^{|a||beta|} a <beta, v>.
    """
    dual = beta.module
    if dual.dual_of is None or dual.dual_of.basis != v.module.basis:
        raise ValueError("pairing requires an element of the dual module")
    out = AlgebraElement()
    for i, b in beta.coeffs.items():
        a = v.coeffs.get(i)
        if a is None:
            continue
        bd = dual.basis.degrees[i]  # = -|e_i|
        for mon_b, cb in b.terms.items():
            # <a.e_i*, c.e_i> = (-1)^{|c| |e_i*|} a ^ c; the coefficient a
            # is already out front, so only the basis covector degree signs
            for mon_a, ca in a.terms.items():
                sign = -1 if (len(mon_a) * bd) % 2 else 1
                out = out + (AlgebraElement.monomial(mon_b)
                             * AlgebraElement.monomial(mon_a)).scale(sign * cb * ca)
    return out


def tensor_module(m: DgModule, n: DgModule, label: str = "") -> DgModule:
    """Tensor product over the algebra, with the graded Leibniz differential."""
    if m.algebra != n.algebra:
        raise ValueError("tensor factors must share the algebra")
    names = [f"{a}(x){b}" for a in m.basis.names for b in n.basis.names]
    degs = [da + db for da in m.basis.degrees for db in n.basis.degrees]
    basis = GradedBasis(names, degs)
    rn = n.rank

    def idx(i: int, j: int) -> int:
        return i * rn + j

    diff: dict[tuple[int, int], AlgebraElement] = {}

    def add(i: int, j: int, a: AlgebraElement) -> None:
        if a.is_zero():
            return
        cur = diff.get((i, j), AlgebraElement())
        s = cur + a
        if s.is_zero():
            diff.pop((i, j), None)
        else:
            diff[(i, j)] = s

    for i in range(m.rank):
        di = m.basis.degrees[i]
        for j in range(n.rank):
            # d(e_i (x) f_j) = d(e_i) (x) f_j + (-1)^{|e_i|} e_i (x) d(f_j)
            for (ii, k), a in m.diff_matrix.items():
                if ii == i:
                    add(idx(i, j), idx(k, j), a)
            for (jj, l), b in n.diff_matrix.items():
                if jj != j:
                    continue
                try:
                    bd = b.degree()
                except ValueError:
                    bd = None
                if bd is None:
                    continue
                sign = -1 if (di * (1 + bd)) % 2 else 1
                # (-1)^{|e_i|} from Leibniz, (-1)^{|b||e_i|} to move b left
                add(idx(i, j), idx(i, l), b.scale(sign))
    t = DgModule(m.algebra, basis, diff, label=label or f"{m.label}(x){n.label}")
    t.tensor_factors = (m, n)
    return t


def tensor_index(t: DgModule, i: int, j: int) -> int:
    m, n = t.tensor_factors
    return i * n.rank + j


def tensor_split(t: DgModule, k: int) -> tuple[int, int]:
    m, n = t.tensor_factors
    return divmod(k, n.rank)


def simple_tensor(t: DgModule, v: ModuleElement, w: ModuleElement) -> ModuleElement:
    """v (x) w inside a tensor module (coefficients move to the left)."""
    m, n = t.tensor_factors
    if v.module.basis != m.basis or w.module.basis != n.basis:
        raise ValueError("tensor factors do not match")
    out = t.zero()
    for i, a in v.coeffs.items():
        for j, b in w.coeffs.items():
            di = m.basis.degrees[i]
            acc = AlgebraElement()
            for mon_b, cb in b.terms.items():
                sign = -1 if (len(mon_b) * di) % 2 else 1
                acc = acc + (AlgebraElement.monomial(mon_b)).scale(sign * cb)
            out = out + ModuleElement(t, {tensor_index(t, i, j): a * acc})
    return out


class ModuleMorphism:
    """A-linear map between dg modules, given on basis vectors.

    ``matrix[(i, j)]`` is the coefficient of the target basis vector j in
    the image of source basis vector i.  A morphism of internal degree r
    extends by ``f(a.e) = (-1)^{r|a|} a.f(e)``.
    """

    def __init__(self, source: DgModule, target: DgModule, degree: int,
                 matrix: dict[tuple[int, int], AlgebraElement] | None = None,
                 label: str = ""):
        if source.algebra != target.algebra:
            raise ValueError("morphism endpoints must share the algebra")
        self.source = source
        self.target = target
        self.degree = degree
        self.label = label
        self.matrix: dict[tuple[int, int], AlgebraElement] = {}
        for (i, j), a in (matrix or {}).items():
            if not a.is_zero():
                self.matrix[(i, j)] = a

    @classmethod
    def identity(cls, module: DgModule) -> "ModuleMorphism":
        mat = {(i, i): AlgebraElement.scalar(1) for i in range(module.rank)}
        return cls(module, module, 0, mat, label="id")

    def of_basis(self, i: int) -> ModuleElement:
        return ModuleElement(self.target,
                             {j: a for (k, j), a in self.matrix.items() if k == i})

    def __call__(self, v: ModuleElement) -> ModuleElement:
        out = self.target.zero()
        for i, a in v.coeffs.items():
            img = self.of_basis(i)
            if img.is_zero():
                continue
            for mon, c in a.terms.items():
                sign = -1 if (self.degree * len(mon)) % 2 else 1
                out = out + img.left_mul(AlgebraElement.monomial(mon)).scale(sign * c)
        return out

    def is_dg_morphism(self) -> bool:
        return not self.dg_failures()

    def dg_failures(self) -> list[str]:
        """d o f - (-1)^{deg f} f o d on basis vectors."""
        failures = []
        sgn = -1 if self.degree % 2 else 1
        for i in range(self.source.rank):
            lhs = apply_module_differential(self.target, self.of_basis(i))
            rhs = self(self.source.diff_of_basis(i)).scale(sgn)
            if lhs != rhs:
                failures.append(
                    f"not a chain map on {self.source.basis.names[i]}: "
                    f"d(f(e)) = {lhs.pretty()}, (-1)^r f(d(e)) = {rhs.pretty()}")
        return failures

    def compose(self, other: "ModuleMorphism") -> "ModuleMorphism":
        """self o other."""
        if other.target.basis != self.source.basis:
            raise ValueError("composition mismatch")
        mat: dict[tuple[int, int], AlgebraElement] = {}
        for i in range(other.source.rank):
            img = self(other.of_basis(i))
            for j, a in img.coeffs.items():
                cur = mat.get((i, j), AlgebraElement()) + a
                if cur.is_zero():
                    mat.pop((i, j), None)
                else:
                    mat[(i, j)] = cur
        return ModuleMorphism(other.source, self.target,
                              self.degree + other.degree, mat)

    def dual(self) -> "ModuleMorphism":
        """Dual of a degree-0 morphism: <f*(beta), e> = <beta, f(e)>."""
        if self.degree != 0:
            raise ValueError("dualization implemented for degree-0 morphisms")
        src = dual_module(self.target)
        tgt = dual_module(self.source)
        mat: dict[tuple[int, int], AlgebraElement] = {}
        for (i, j), a in self.matrix.items():
            try:
                da = a.degree()
            except ValueError:
                raise ValueError("morphism matrix entries must be homogeneous")
            if da is None:
                continue
            q = self.target.basis.degrees[j]
            sign = -1 if (da * q) % 2 else 1
            mat[(j, i)] = a.scale(sign)
        return ModuleMorphism(src, tgt, 0, mat, label=f"{self.label}*")

    def __eq__(self, other) -> bool:
        return (isinstance(other, ModuleMorphism)
                and self.source.basis == other.source.basis
                and self.target.basis == other.target.basis
                and self.degree == other.degree
                and self.matrix == other.matrix)


def hom_module(m: DgModule, n: DgModule, label: str = "") -> DgModule:
    """Internal hom as a free dg module.

    Basis u_ij sends e_i to f_j (degree |f_j| - |e_i|); the differential is
    the graded commutator d_N o u - (-1)^{|u|} u o d_M, expressed in the
    same basis.
    """
    if m.algebra != n.algebra:
        raise ValueError("hom endpoints must share the algebra")
    names = [f"[{a}->{b}]" for a in m.basis.names for b in n.basis.names]
    degs = [db - da for da in m.basis.degrees for db in n.basis.degrees]
    basis = GradedBasis(names, degs)
    rn = n.rank

    def idx(i: int, j: int) -> int:
        return i * rn + j

    diff: dict[tuple[int, int], AlgebraElement] = {}

    def add(r: int, s: int, a: AlgebraElement) -> None:
        if a.is_zero():
            return
        cur = diff.get((r, s), AlgebraElement()) + a
        if cur.is_zero():
            diff.pop((r, s), None)
        else:
            diff[(r, s)] = cur

    for i in range(m.rank):
        for j in range(n.rank):
            u_deg = n.basis.degrees[j] - m.basis.degrees[i]
            # d_N o u_ij: contributes a_jl . u_il
            for (jj, l), a in n.diff_matrix.items():
                if jj == j:
                    add(idx(i, j), idx(i, l), a)
            # -(-1)^{|u|} u_ij o d_M: for each k with d(e_k) = a_ki e_i + ...
            # u_ij(a_ki e_i) = (-1)^{|a_ki||u|} a_ki f_j, landing on u_kj
            for (k, ii), a in m.diff_matrix.items():
                if ii != i:
                    continue
                try:
                    da = a.degree()
                except ValueError:
                    raise ValueError("hom_module needs homogeneous diff entries")
                if da is None:
                    continue
                sign = -1 if (u_deg + da * u_deg) % 2 == 0 else 1
                # sign = -(-1)^{|u|} * (-1)^{|a||u|}
                add(idx(i, j), idx(k, j), a.scale(sign))
    h = DgModule(m.algebra, basis, diff, label=label or f"Hom({m.label},{n.label})")
    h.hom_factors = (m, n)
    return h


def end_module(m: DgModule) -> DgModule:
    return hom_module(m, m, label=f"End({m.label})")


def hom_element_to_morphism(h: DgModule, x: ModuleElement, degree: int) -> ModuleMorphism:
    """Interpret a homogeneous element of hom_module(M, N) as an A-linear map."""
    m, n = h.hom_factors
    mat: dict[tuple[int, int], AlgebraElement] = {}
    for k, a in x.coeffs.items():
        i, j = divmod(k, n.rank)
        cur = mat.get((i, j), AlgebraElement()) + a
        if not cur.is_zero():
            mat[(i, j)] = cur
    return ModuleMorphism(m, n, degree, mat)


def morphism_to_hom_element(h: DgModule, f: ModuleMorphism) -> ModuleElement:
    m, n = h.hom_factors
    coeffs: dict[int, AlgebraElement] = {}
    for (i, j), a in f.matrix.items():
        coeffs[i * n.rank + j] = a
    return ModuleElement(h, coeffs)


def contract(b: ModuleElement, w: ModuleElement) -> ModuleElement:
    """Contraction iota_b: (Omega (x) E) -> E for b in dual(Omega).

    On a term a.(f_j (x) e_k) with b = c.f_i*:
    result = (-1)^{|b||a|} (a ^ <c.f_i*, f_j>).e_k.
    """
    t = w.module
    omega, e_mod = t.tensor_factors
    dual = b.module
    if dual.dual_of is None or dual.dual_of.basis != omega.basis:
        raise ValueError("contraction requires an element of the dual of the left factor")
    out = e_mod.zero()
    for idx_t, a in w.coeffs.items():
        j, k = tensor_split(t, idx_t)
        cterm = b.coeffs.get(j)
        if cterm is None:
            continue
        bd = dual.basis.degrees[j]  # degree of f_j*
        for mon_c, cc in cterm.terms.items():
            db = len(mon_c) + bd
            for mon_a, ca in a.terms.items():
                sign = -1 if (db * len(mon_a)) % 2 else 1
                coeff = (AlgebraElement.monomial(mon_a)
                         * AlgebraElement.monomial(mon_c)).scale(sign * ca * cc)
                if not coeff.is_zero():
                    out = out + ModuleElement(e_mod, {k: coeff})
    return out
