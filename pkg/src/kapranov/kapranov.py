"""Higher bracket towers generated by a delta-connection.

Given a dg derivation delta: A -> Omega and a delta-connection nabla on
B = dual(Omega), the tower

    R_1 = d_B,   R_2 = [nabla, d] (the Atiyah cocycle),
    R_{k+1}(b_0, ..., b_k) = (-1)^{|b_0|} [nabla_{b_0}, R_k](b_1, ..., b_k)

makes B a strongly homotopy Leibniz algebra with all brackets of degree 1.
This module fills those towers as explicit tables over a ground-field
basis and mechanically checks every identity they are supposed to
satisfy: the generalized Jacbi identities, the morphism equations, the
module identities, and homotopy invariance.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from .algebra import AlgebraElement, Monomial
from .cohomology import CochainComplex
from .connections import DeltaConnection, atiyah_cocycle
from .derivations import DerivationHomotopy, DerivationMorphism, homotopy_offset
from .graded import (Element, GradedBasis, MultilinearMap, koszul_sign,
                     ordered_partitions, partition_sign, shuffles)
from .modules import (DgModule, ModuleElement, ModuleMorphism,
                      apply_module_differential, contract, simple_tensor)


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("KAPRANOV_THREADS", "1"))
    return max(1, threads)


def _parallel_map(fn, items, threads):
    """Order-preserving map, optionally fanned out over a thread pool."""
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, (len(items) + threads - 1) // threads)
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


class KBasis:
    """Ground-field basis of a dg module, with conversions both ways."""

    def __init__(self, module: DgModule):
        self.module = module
        self.keys = module.kbasis()
        self.index = {key: i for i, key in enumerate(self.keys)}
        names = []
        for mon, i in self.keys:
            word = "^".join(module.algebra.generators.names[g] for g in mon)
            name = module.basis.names[i] if not word else f"{word}.{module.basis.names[i]}"
            names.append(name)
        degrees = [module.kdegree(key) for key in self.keys]
        self.basis = GradedBasis(names, degrees)

    def to_kvec(self, v: ModuleElement) -> Element:
        out = Element(self.basis)
        for i, a in v.coeffs.items():
            for mon, c in a.terms.items():
                idx = self.index[(mon, i)]
                out.coeffs[idx] = out.coeffs.get(idx, Fraction(0)) + c
        out.coeffs = {k: c for k, c in out.coeffs.items() if c}
        return out

    def to_module_element(self, e: Element) -> ModuleElement:
        out = self.module.zero()
        for idx, c in e.coeffs.items():
            mon, i = self.keys[idx]
            out = out + ModuleElement(self.module,
                                      {i: AlgebraElement.monomial(mon, c)})
        return out

    def degree(self, idx: int) -> int:
        return self.basis.degrees[idx]


# ---------------------------------------------------------------------------
# tensors of module elements, and derivations acting on them

def tensor_of_elements(args: list[ModuleElement],
                       modules: list[DgModule]) -> dict[tuple, AlgebraElement]:
    """Expand v_1 (x) ... (x) v_k into basis tensors, coefficients on the left.

    Moving the coefficient of slot t to the front passes the basis vectors
    of slots 1..t-1 and picks up the Koszul sign.
    """
    items: dict[tuple, AlgebraElement] = {(): AlgebraElement.scalar(1)}
    prefix_degrees: dict[tuple, int] = {(): 0}
    for arg, mod in zip(args, modules):
        new: dict[tuple, AlgebraElement] = {}
        new_deg: dict[tuple, int] = {}
        for key, coeff in items.items():
            pdeg = prefix_degrees[key]
            for i, a in arg.coeffs.items():
                for mon, c in a.terms.items():
                    sign = -1 if (len(mon) * pdeg) % 2 else 1
                    add = coeff * AlgebraElement.monomial(mon, sign * c)
                    if add.is_zero():
                        continue
                    nk = key + (i,)
                    cur = new.get(nk, AlgebraElement()) + add
                    if cur.is_zero():
                        new.pop(nk, None)
                    else:
                        new[nk] = cur
                        new_deg[nk] = pdeg + mod.basis.degrees[i]
        for key in new:
            prefix_degrees[key] = new_deg[key]
        items = new
    return items


def derive_tensor(tensor: dict[tuple, AlgebraElement], ops, op_degree: int,
                  modules: list[DgModule]) -> dict[tuple, AlgebraElement]:
    """Extend slotwise operators as a degree-r derivation of the tensor.

    ``ops[t]`` maps a basis index of slot t to a ModuleElement of that
    slot's module.  The operator passes the coefficient and the preceding
    slots with Koszul signs; the value's own coefficients move left too.
    """
    out: dict[tuple, AlgebraElement] = {}
    for key, coeff in tensor.items():
        for cd, cpart in coeff.homogeneous_parts().items():
            pdeg = 0
            for t in range(len(key)):
                val = ops[t](key[t])
                if val is not None and not val.is_zero():
                    for j, a in val.coeffs.items():
                        for mon, c in a.terms.items():
                            exp = op_degree * (cd + pdeg) + len(mon) * pdeg
                            sign = -1 if exp % 2 else 1
                            add = cpart * AlgebraElement.monomial(mon, sign * c)
                            if add.is_zero():
                                continue
                            nk = key[:t] + (j,) + key[t + 1:]
                            cur = out.get(nk, AlgebraElement()) + add
                            if cur.is_zero():
                                out.pop(nk, None)
                            else:
                                out[nk] = cur
                pdeg += modules[t].basis.degrees[key[t]]
    return out


def eval_table_on_tensor(table: dict[tuple, ModuleElement], degree: int,
                         tensor: dict[tuple, AlgebraElement],
                         out_module: DgModule) -> ModuleElement:
    """Apply an A-multilinear table of internal degree r to an expanded tensor."""
    out = out_module.zero()
    for key, coeff in tensor.items():
        val = table.get(key)
        if val is None:
            continue
        for cd, cpart in coeff.homogeneous_parts().items():
            sign = -1 if (degree * cd) % 2 else 1
            out = out + val.left_mul(cpart).scale(sign)
    return out


def eval_table_on_elements(table, degree, args, modules, out_module):
    tensor = tensor_of_elements(args, modules)
    return eval_table_on_tensor(table, degree, tensor, out_module)


def covariant_tensor_derivative(connections, b: ModuleElement,
                                args: list[ModuleElement]) -> dict[tuple, AlgebraElement]:
    """nabla_b acting as a derivation of v_1 (x) ... (x) v_k.

    ``connections[t]`` is the delta-connection governing slot t; the
    operator degree is |b|.
    """
    db = b.degree() or 0
    modules = [c.module for c in connections]
    tensor = tensor_of_elements(args, modules)
    ops = []
    for conn in connections:
        cache: dict[int, ModuleElement] = {}

        def op(i, conn=conn, cache=cache):
            if i not in cache:
                cache[i] = contract(b, conn(ModuleElement.basis_vector(conn.module, i)))
            return cache[i]
        ops.append(op)
    return derive_tensor(tensor, ops, db, modules)


# ---------------------------------------------------------------------------
# bracket families

class BracketFamily:
    """Degree-1 multibrackets on a dg module, tabulated over its k-basis.

    ``brackets[k]`` is the fully extended table over the ground-field
    basis; ``module_tables[k]`` (k >= 2) is the A-multilinear core on
    module-basis tuples that generated it.
    """

    def __init__(self, module: DgModule, kb: KBasis,
                 brackets: dict[int, MultilinearMap],
                 module_tables: dict[int, dict[tuple, ModuleElement]],
                 connection: DeltaConnection | None = None,
                 label: str = ""):
        self.module = module
        self.kb = kb
        self.brackets = brackets
        self.module_tables = module_tables
        self.connection = connection
        self.label = label

    def bracket(self, k: int) -> MultilinearMap | None:
        m = self.brackets.get(k)
        if m is None or m.is_zero():
            return None
        return m

    def max_arity(self) -> int:
        return max(self.brackets) if self.brackets else 0

    def nonzero_arities(self) -> list[int]:
        return sorted(k for k, m in self.brackets.items() if not m.is_zero())


def differential_table(module: DgModule, kb: KBasis) -> MultilinearMap:
    m = MultilinearMap.uniform(1, 1, kb.basis)
    for idx, key in enumerate(kb.keys):
        dv = apply_module_differential(module, module.kbasis_element(key))
        m.set((idx,), kb.to_kvec(dv))
    return m


def extend_module_table(kb: KBasis, table: dict[tuple, ModuleElement],
                        arity: int, degree: int,
                        input_kbs: list[KBasis] | None = None,
                        output_kb: KBasis | None = None) -> MultilinearMap:
    """A-multilinear extension of a module-basis table to the full k-basis.

    lam(m_1.b_1, ..., m_k.b_k) picks up (-1)^{sum |m_t|(r + |b_1|+...+|b_{t-1}|)}
    times the wedge of the coefficients.
    """
    if input_kbs is None:
        input_kbs = [kb] * arity
    if output_kb is None:
        output_kb = kb
    out = MultilinearMap(arity, degree, [k.basis for k in input_kbs], output_kb.basis)
    if not table:
        return out
    mon_lists = [list(k.module.algebra.monomials()) for k in input_kbs]
    for base_key, val in table.items():
        for mons in itertools.product(*mon_lists[:arity]):
            coeff = AlgebraElement.scalar(1)
            exp = 0
            running = 0
            ok = True
            kb_key = []
            for t, (mon, bidx) in enumerate(zip(mons, base_key)):
                exp += len(mon) * (degree + running)
                running += input_kbs[t].module.basis.degrees[bidx]
                coeff = coeff * AlgebraElement.monomial(mon)
                if coeff.is_zero():
                    ok = False
                    break
                kb_key.append(input_kbs[t].index[(mon, bidx)])
            if not ok:
                continue
            sign = -1 if exp % 2 else 1
            value = val.left_mul(coeff).scale(sign)
            if not value.is_zero():
                out.set(tuple(kb_key), output_kb.to_kvec(value))
    return out


def kapranov_brackets(connection: DeltaConnection, max_arity: int = 5,
                      label: str = "") -> BracketFamily:
    """The bracket tower of a delta-connection on B = dual(Omega)."""
    module = connection.module
    if module.dual_of is None or module.dual_of.basis != connection.delta.target.basis:
        raise ValueError("the carrier must be the dual of the derivation target")
    kb = KBasis(module)
    brackets = {1: differential_table(module, kb)}
    module_tables: dict[int, dict[tuple, ModuleElement]] = {}
    if max_arity >= 2:
        at = atiyah_cocycle(connection)
        table2: dict[tuple, ModuleElement] = {}
        for i in range(module.rank):
            bi = ModuleElement.basis_vector(module, i)
            for j in range(module.rank):
                bj = ModuleElement.basis_vector(module, j)
                v = at.bilinear(bi, bj)
                if not v.is_zero():
                    table2[(i, j)] = v
        module_tables[2] = table2
    for k in range(2, max_arity):
        module_tables[k + 1] = _next_bracket_table(connection, module_tables[k], k)
    for k, table in module_tables.items():
        brackets[k] = extend_module_table(kb, table, k, 1)
    return BracketFamily(module, kb, brackets, module_tables, connection, label)


def _next_bracket_table(connection: DeltaConnection,
                        prev: dict[tuple, ModuleElement],
                        k: int) -> dict[tuple, ModuleElement]:
    """R_{k+1}(b_0,...,b_k) = (-1)^{|b_0|} nabla_{b_0}(R_k(b_1..b_k))
    - R_k(nabla_{b_0}-derivative of b_1 (x) ... (x) b_k)."""
    module = connection.module
    out: dict[tuple, ModuleElement] = {}
    for b0 in range(module.rank):
        b0_elt = ModuleElement.basis_vector(module, b0)
        d0 = module.basis.degrees[b0]
        cache: dict[int, ModuleElement] = {}

        def op(i):
            if i not in cache:
                cache[i] = contract(b0_elt, connection(
                    ModuleElement.basis_vector(module, i)))
            return cache[i]

        sign0 = -1 if d0 % 2 else 1
        for args in itertools.product(range(module.rank), repeat=k):
            total = module.zero()
            prev_val = prev.get(args)
            if prev_val is not None:
                total = total + contract(b0_elt, connection(prev_val)).scale(sign0)
            derived = derive_tensor({args: AlgebraElement.scalar(1)},
                                    [op] * k, d0, [module] * k)
            total = total - eval_table_on_tensor(prev, 1, derived, module)
            if not total.is_zero():
                out[(b0,) + args] = total
        cache.clear()
    return out


def bracket_on_elements(fam: BracketFamily, k: int,
                        args: list[ModuleElement]) -> ModuleElement:
    """Evaluate R_k through the recursion itself on arbitrary elements.

    Used to certify A-multilinearity: the result must agree with the
    Koszul-signed extension of the basis table.
    """
    conn = fam.connection
    module = fam.module
    if k == 1:
        return apply_module_differential(module, args[0])
    if k == 2:
        return atiyah_cocycle(conn).bilinear(args[0], args[1])
    total = module.zero()
    b0 = args[0]
    for d0, b0p in b0.homogeneous_parts().items():
        sign0 = -1 if d0 % 2 else 1
        inner = bracket_on_elements(fam, k - 1, args[1:])
        total = total + contract(b0p, conn(inner)).scale(sign0)
        derived = covariant_tensor_derivative([conn] * (k - 1), b0p, args[1:])
        total = total - eval_table_on_tensor(fam.module_tables[k - 1], 1,
                                             derived, module)
    return total


# ---------------------------------------------------------------------------
# the generalized Jacobi identity checker

def _leibniz_structures(n: int, active):
    """All (i, j, k, sigma) index data of the identity at weight n."""
    out = []
    for j in range(1, n + 1):
        i = n + 1 - j
        if i not in active or j not in active:
            continue
        for k in range(j, n + 1):
            for sigma in shuffles(k - j, j - 1):
                out.append((i, j, k, sigma))
    return out


def leibniz_residual(fam: BracketFamily, keys: tuple[int, ...],
                     structures) -> Element:
    degs = [fam.kb.degree(i) for i in keys]
    zero = Element(fam.kb.basis)
    total = zero
    for (i, j, k, sigma) in structures:
        lam_i = fam.brackets[i]
        lam_j = fam.brackets[j]
        eps = koszul_sign(sigma, degs[:k - 1])
        front = sum(degs[sigma[t] - 1] for t in range(k - j))
        sign = eps * (-1 if front % 2 else 1)
        inner_key = tuple(keys[sigma[t] - 1] for t in range(k - j, k - 1)) + (keys[k - 1],)
        inner = lam_j.table.get(inner_key)
        if inner is None:
            continue
        outer_args = ([Element.basis_vector(fam.kb.basis, keys[sigma[t] - 1])
                       for t in range(k - j)]
                      + [inner]
                      + [Element.basis_vector(fam.kb.basis, keys[t])
                         for t in range(k, len(keys))])
        total = total + lam_i(*outer_args).scale(sign)
    return total


def check_leibniz_infinity(fam: BracketFamily, n_max: int,
                           threads: int | None = None,
                           max_witnesses: int = 10) -> dict:
    """Exhaustively verify the degree-1 generalized Jacobi identities.

    Returns a report dict with per-weight tuple counts and any failing
    tuples (with their residuals).
    """
    threads = thread_count(threads)
    active = set(fam.nonzero_arities())
    report = {"passed": True, "weights": []}
    n_keys = len(fam.kb.keys)
    for n in range(1, n_max + 1):
        structures = _leibniz_structures(n, active)
        entry = {"n": n, "terms": len(structures), "tuples": 0, "failures": []}
        if structures:
            tuples = list(itertools.product(range(n_keys), repeat=n))
            entry["tuples"] = len(tuples)

            def job(keys):
                r = leibniz_residual(fam, keys, structures)
                return (keys, r) if not r.is_zero() else None

            for hit in _parallel_map(job, tuples, threads):
                if hit is not None and len(entry["failures"]) < max_witnesses:
                    keys, r = hit
                    entry["failures"].append({
                        "tuple": [fam.kb.basis.names[i] for i in keys],
                        "residual": repr(r),
                    })
                    report["passed"] = False
        report["weights"].append(entry)
    return report


# ---------------------------------------------------------------------------
# morphism families

class MorphismFamily:
    """Maps f_k: B^{(x)k} -> B' forming a morphism of bracket towers."""

    def __init__(self, source: BracketFamily, target: BracketFamily,
                 maps: dict[int, MultilinearMap],
                 module_tables: dict[int, dict[tuple, ModuleElement]] | None = None,
                 a_multilinear: bool = True, label: str = ""):
        self.source = source
        self.target = target
        self.maps = maps
        self.module_tables = module_tables or {}
        self.a_multilinear = a_multilinear
        self.label = label

    def map(self, k: int) -> MultilinearMap | None:
        m = self.maps.get(k)
        if m is None or m.is_zero():
            return None
        return m

    def nonzero_arities(self) -> list[int]:
        return sorted(k for k, m in self.maps.items() if not m.is_zero())


def _morphism_lhs_structures(n: int, f_active, lam_active):
    out = []
    for p in range(0, n):
        if (p + 1) not in lam_active or (n - p) not in f_active:
            continue
        for k in range(0, n - p):
            for sigma in shuffles(k, p):
                out.append((k, p, sigma))
    return out


def _morphism_rhs_structures(n: int, f_active, lamp_active):
    out = []
    for q in range(1, n + 1):
        if q not in lamp_active:
            continue
        for blocks in ordered_partitions(n, q):
            if all(len(b) in f_active for b in blocks):
                out.append(blocks)
    return out


def morphism_residual(mor: MorphismFamily, keys: tuple[int, ...],
                      lhs_structs, rhs_structs) -> Element:
    skb = mor.source.kb
    tkb = mor.target.kb
    degs = [skb.degree(i) for i in keys]
    n = len(keys)
    total = Element(tkb.basis)
    for (k, p, sigma) in lhs_structs:
        lam = mor.source.brackets[p + 1]
        f = mor.maps[n - p]
        eps = koszul_sign(sigma, degs[:k + p])
        front = sum(degs[sigma[t] - 1] for t in range(k))
        sign = eps * (-1 if front % 2 else 1)
        inner_key = tuple(keys[sigma[t] - 1] for t in range(k, k + p)) + (keys[k + p],)
        inner = lam.table.get(inner_key)
        if inner is None:
            continue
        args = ([Element.basis_vector(skb.basis, keys[sigma[t] - 1])
                 for t in range(k)]
                + [inner]
                + [Element.basis_vector(skb.basis, keys[t])
                   for t in range(k + p + 1, n)])
        total = total + f(*args).scale(sign)
    for blocks in rhs_structs:
        q = len(blocks)
        lamp = mor.target.brackets[q]
        eps = partition_sign(blocks, degs)
        args = []
        for block in blocks:
            fk = mor.maps[len(block)]
            val = fk.table.get(tuple(keys[b - 1] for b in block))
            if val is None:
                args = None
                break
            args.append(val)
        if args is None:
            continue
        total = total - lamp(*args).scale(eps)
    return total


def check_linfty_morphism(mor: MorphismFamily, n_max: int,
                          threads: int | None = None,
                          max_witnesses: int = 10) -> dict:
    """Verify the morphism equation on all source basis tuples, n <= n_max."""
    threads = thread_count(threads)
    f_active = set(mor.nonzero_arities())
    lam_active = set(mor.source.nonzero_arities())
    lamp_active = set(mor.target.nonzero_arities())
    report = {"passed": True, "weights": []}
    n_keys = len(mor.source.kb.keys)
    for n in range(1, n_max + 1):
        lhs = _morphism_lhs_structures(n, f_active, lam_active)
        rhs = _morphism_rhs_structures(n, f_active, lamp_active)
        entry = {"n": n, "terms": len(lhs) + len(rhs), "tuples": 0, "failures": []}
        if lhs or rhs:
            tuples = list(itertools.product(range(n_keys), repeat=n))
            entry["tuples"] = len(tuples)

            def job(keys):
                r = morphism_residual(mor, keys, lhs, rhs)
                return (keys, r) if not r.is_zero() else None

            for hit in _parallel_map(job, tuples, threads):
                if hit is not None and len(entry["failures"]) < max_witnesses:
                    keys, r = hit
                    entry["failures"].append({
                        "tuple": [mor.source.kb.basis.names[i] for i in keys],
                        "residual": repr(r),
                    })
                    report["passed"] = False
        report["weights"].append(entry)
    return report


def dual_morphism_between(phi: ModuleMorphism, source: DgModule,
                          target: DgModule) -> ModuleMorphism:
    """Transpose of a degree-0 morphism, expressed between given duals."""
    mat: dict[tuple[int, int], AlgebraElement] = {}
    for (i, j), a in phi.matrix.items():
        da = a.degree()
        if da is None:
            continue
        q = phi.target.basis.degrees[j]
        sign = -1 if (da * q) % 2 else 1
        mat[(j, i)] = a.scale(sign)
    return ModuleMorphism(source, target, 0, mat)


def kapranov_morphism(phi: DerivationMorphism, source_fam: BracketFamily,
                      target_fam: BracketFamily, max_arity: int = 4,
                      label: str = "") -> MorphismFamily:
    """The morphism tower of a derivation morphism (contravariant).

    phi carries delta' to delta; the tower goes from the brackets of
    delta's connection (source_fam) to those of delta''s (target_fam):
    f_1 = transpose of phi, and
    f_{k+1}(b_0,...,b_k) = nabla'_{f_1(b_0)}(f_k(b_1..b_k))
                           - f_k(nabla_{b_0}-derivative of b_1 (x)...(x) b_k).
    """
    conn = source_fam.connection
    conn_p = target_fam.connection
    if conn.delta.target.basis != phi.phi.target.basis:
        raise ValueError("source family must belong to the morphism's target derivation")
    if conn_p.delta.target.basis != phi.phi.source.basis:
        raise ValueError("target family must belong to the morphism's source derivation")
    b_mod = source_fam.module
    bp_mod = target_fam.module
    f1 = dual_morphism_between(phi.phi, b_mod, bp_mod)
    tables: dict[int, dict[tuple, ModuleElement]] = {}
    tables[1] = {(i,): f1.of_basis(i) for i in range(b_mod.rank)
                 if not f1.of_basis(i).is_zero()}
    for k in range(1, max_arity):
        prev = tables[k]
        new: dict[tuple, ModuleElement] = {}
        for b0 in range(b_mod.rank):
            b0_elt = ModuleElement.basis_vector(b_mod, b0)
            f1b0 = f1(b0_elt)
            d0 = b_mod.basis.degrees[b0]
            cache: dict[int, ModuleElement] = {}

            def op(i):
                if i not in cache:
                    cache[i] = contract(b0_elt, conn(
                        ModuleElement.basis_vector(b_mod, i)))
                return cache[i]

            for args in itertools.product(range(b_mod.rank), repeat=k):
                total = bp_mod.zero()
                prev_val = prev.get(args)
                if prev_val is not None and not f1b0.is_zero():
                    total = total + contract(f1b0, conn_p(prev_val))
                derived = derive_tensor({args: AlgebraElement.scalar(1)},
                                        [op] * k, d0, [b_mod] * k)
                total = total - eval_table_on_tensor(prev, 0, derived, bp_mod)
                if not total.is_zero():
                    new[(b0,) + args] = total
            cache.clear()
        tables[k + 1] = new
    maps = {k: extend_module_table(source_fam.kb, table, k, 0,
                                   output_kb=target_fam.kb)
            for k, table in tables.items()}
    return MorphismFamily(source_fam, target_fam, maps, tables, label=label)


def compose_morphism_families(outer: MorphismFamily, inner: MorphismFamily,
                              max_arity: int = 3) -> MorphismFamily:
    """(outer o inner)_n = sum over ordered partitions with the Koszul sign."""
    if inner.target is not outer.source and \
            inner.target.module.basis != outer.source.module.basis:
        raise ValueError("families are not composable")
    skb = inner.source.kb
    maps: dict[int, MultilinearMap] = {}
    for n in range(1, max_arity + 1):
        m = MultilinearMap.uniform(n, 0, skb.basis, outer.target.kb.basis)
        for keys in itertools.product(range(len(skb.keys)), repeat=n):
            degs = [skb.degree(i) for i in keys]
            total = Element(outer.target.kb.basis)
            for q in range(1, n + 1):
                g = outer.map(q)
                if g is None:
                    continue
                for blocks in ordered_partitions(n, q):
                    eps = partition_sign(blocks, degs)
                    args = []
                    for block in blocks:
                        fk = inner.map(len(block))
                        val = fk.table.get(tuple(keys[b - 1] for b in block)) \
                            if fk else None
                        if val is None:
                            args = None
                            break
                        args.append(val)
                    if args is None:
                        continue
                    total = total + g(*args).scale(eps)
            m.set(keys, total)
        maps[n] = m
    return MorphismFamily(inner.source, outer.target, maps,
                          a_multilinear=inner.a_multilinear and outer.a_multilinear)


def trivialization(fam: BracketFamily, max_arity: int = 4) -> MorphismFamily:
    """phi_1 = id, phi_{k+1}(b_0,...) = nabla_{b_0}(phi_k(b_1,...,b_k)).

    A morphism over the ground field from (B, {d, 0, 0, ...}) to the
    bracket tower; NOT A-multilinear once delta is nonzero.
    """
    conn = fam.connection
    kb = fam.kb
    n_keys = len(kb.keys)
    trivial_source = BracketFamily(fam.module, kb,
                                   {1: differential_table(fam.module, kb)},
                                   {}, conn, label="trivial")
    maps: dict[int, MultilinearMap] = {}
    m1 = MultilinearMap.uniform(1, 0, kb.basis)
    for i in range(n_keys):
        m1.set((i,), Element.basis_vector(kb.basis, i))
    maps[1] = m1
    for k in range(1, max_arity):
        prev = maps[k]
        m = MultilinearMap.uniform(k + 1, 0, kb.basis)
        for key0 in range(n_keys):
            b0 = kb.to_module_element(Element.basis_vector(kb.basis, key0))
            for rest in itertools.product(range(n_keys), repeat=k):
                val = prev.table.get(rest)
                if val is None:
                    continue
                out = contract(b0, conn(kb.to_module_element(val)))
                if not out.is_zero():
                    m.set((key0,) + rest, kb.to_kvec(out))
        maps[k + 1] = m
    return MorphismFamily(trivial_source, fam, maps, a_multilinear=False,
                          label="trivialization")


def a_multilinearity_violations(mor: MorphismFamily, arity: int = 2,
                                max_witnesses: int = 10) -> list[dict]:
    """Witnesses that a k-linear map table is not the A-multilinear
    extension of its module-basis restriction."""
    kb = mor.source.kb
    out_kb = mor.target.kb
    m = mor.maps.get(arity)
    if m is None:
        return []
    base_table: dict[tuple, ModuleElement] = {}
    base_keys = {}
    for idx, (mon, i) in enumerate(kb.keys):
        if mon == ():
            base_keys[i] = idx
    for key_ids in itertools.product(sorted(base_keys), repeat=arity):
        kb_key = tuple(base_keys[i] for i in key_ids)
        val = m.table.get(kb_key)
        if val is not None:
            base_table[key_ids] = out_kb.to_module_element(val)
    expected = extend_module_table(kb, base_table, arity, 0, output_kb=out_kb)
    witnesses = []
    all_keys = set(m.table) | set(expected.table)
    zero = Element(out_kb.basis)
    for key in sorted(all_keys):
        got = m.table.get(key, zero)
        want = expected.table.get(key, zero)
        if got != want:
            witnesses.append({
                "tuple": [kb.basis.names[i] for i in key],
                "got": repr(got),
                "a_multilinear_extension": repr(want),
            })
            if len(witnesses) >= max_witnesses:
                break
    return witnesses


# ---------------------------------------------------------------------------
# homotopy invariance

class HatConnection:
    """An h-connection: hat(a.e) = h(a) (x) e + (-1)^{|a|} a.hat(e)."""

    def __init__(self, h: DerivationHomotopy, module: DgModule,
                 values: dict[int, ModuleElement]):
        self.h = h
        self.module = module
        from .modules import tensor_module
        self.tensor = tensor_module(h.target, module)
        self.values: dict[int, ModuleElement] = {}
        for i, v in values.items():
            if v.is_zero():
                continue
            if v.module.basis != self.tensor.basis:
                v = ModuleElement(self.tensor, dict(v.coeffs))
            d = v.degree()
            if d is not None and d != module.basis.degrees[i] - 1:
                raise ValueError(
                    f"hat({module.basis.names[i]}) must have degree "
                    f"{module.basis.degrees[i] - 1}")
            self.values[i] = v

    def __call__(self, v: ModuleElement) -> ModuleElement:
        out = self.tensor.zero()
        for i, a in v.coeffs.items():
            ha = self.h(a)
            if not ha.is_zero():
                out = out + simple_tensor(
                    self.tensor, ha, ModuleElement.basis_vector(self.module, i))
            val = self.values.get(i)
            if val is not None:
                for mon, c in a.terms.items():
                    sign = -1 if len(mon) % 2 else 1
                    out = out + val.left_mul(
                        AlgebraElement.monomial(mon)).scale(sign * c)
        return out

    def along(self, b: ModuleElement, v: ModuleElement) -> ModuleElement:
        return contract(b, self(v))


def homotopy_iso(conn: DeltaConnection, h: DerivationHomotopy,
                 hat: HatConnection, max_arity: int = 4,
                 delta_prime=None) -> tuple[MorphismFamily, DeltaConnection]:
    """The isomorphism tower between the towers of homotopic derivations.

    Builds nabla' = nabla + [d, hat] (a connection for
    delta' = delta + [d, h]), checks R_2 is unchanged, then fills

      g_1 = id,  g_2 = 0,
      g_{k+1}(b_0,...,b_k) =
        (-1)^{|b_0|} sum_{p=2..k} sum_{partitions} eps(I) [hat_{b_0}, R_p](g(b_I),...)
        + [nabla'_{b_0}, g_k](b_1,...,b_k),

    a morphism from (B, R^{nabla'}) to (B, R^{nabla}).
    """
    module = conn.module
    if hat.module.basis != module.basis:
        raise ValueError("hat connection lives on the wrong module")
    delta = conn.delta
    dp = homotopy_offset(delta, h)
    if delta_prime is not None and dp != delta_prime:
        raise ValueError("homotopy_offset(delta, h) does not match delta_prime")
    values: dict[int, ModuleElement] = {}
    for i in range(module.rank):
        e = ModuleElement.basis_vector(module, i)
        v = (conn.values.get(i, conn.tensor.zero())
             + apply_module_differential(hat.tensor, hat(e))
             + hat(module.diff_of_basis(i)))
        if not v.is_zero():
            values[i] = v
    conn_prime = DeltaConnection(dp, module, values, label="nabla'")
    target_fam = kapranov_brackets(conn, max_arity)
    source_fam = kapranov_brackets(conn_prime, max_arity)
    if source_fam.module_tables.get(2, {}) != target_fam.module_tables.get(2, {}):
        raise ValueError("R_2 changed under the homotopy: inconsistent input")

    tables: dict[int, dict[tuple, ModuleElement]] = {
        1: {(i,): ModuleElement.basis_vector(module, i)
            for i in range(module.rank)},
        2: {},
    }
    r_tables = target_fam.module_tables
    for k in range(2, max_arity):
        prev = tables[k]
        new: dict[tuple, ModuleElement] = {}
        for b0 in range(module.rank):
            b0_elt = ModuleElement.basis_vector(module, b0)
            d0 = module.basis.degrees[b0]
            sign0 = -1 if d0 % 2 else 1
            hat_cache: dict[int, ModuleElement] = {}
            cp_cache: dict[int, ModuleElement] = {}

            def hat_op(i):
                if i not in hat_cache:
                    hat_cache[i] = contract(b0_elt, hat(
                        ModuleElement.basis_vector(module, i)))
                return hat_cache[i]

            def cp_op(i):
                if i not in cp_cache:
                    cp_cache[i] = contract(b0_elt, conn_prime(
                        ModuleElement.basis_vector(module, i)))
                return cp_cache[i]

            for args in itertools.product(range(module.rank), repeat=k):
                degs = [module.basis.degrees[i] for i in args]
                total = module.zero()
                # partition terms: [hat_{b_0}, R_p](g(b_I1), ..., g(b_Ip))
                for p in range(2, k + 1):
                    rp = r_tables.get(p)
                    if not rp:
                        continue
                    for blocks in ordered_partitions(k, p):
                        eps = partition_sign(blocks, degs)
                        g_args = []
                        for block in blocks:
                            gt = tables.get(len(block), {})
                            val = gt.get(tuple(args[b - 1] for b in block))
                            if val is None:
                                g_args = None
                                break
                            g_args.append(val)
                        if g_args is None:
                            continue
                        inner = eval_table_on_elements(rp, 1, g_args,
                                                       [module] * p, module)
                        term = contract(b0_elt, hat(inner))
                        derived = covariant_tensor_derivative_with(
                            hat, g_args, b0_elt, d0 - 1, module)
                        sgn = -1 if (d0 - 1) % 2 else 1
                        term = term - eval_table_on_tensor(rp, 1, derived,
                                                           module).scale(sgn)
                        total = total + term.scale(eps * sign0)
                # commutator with nabla': nabla'_{b_0}(g_k(...)) - g_k(nabla'_{b_0}...)
                prev_val = prev.get(args)
                if prev_val is not None:
                    total = total + contract(b0_elt, conn_prime(prev_val))
                derived = derive_tensor({args: AlgebraElement.scalar(1)},
                                        [cp_op] * k, d0, [module] * k)
                total = total - eval_table_on_tensor(prev, 0, derived, module)
                if not total.is_zero():
                    new[(b0,) + args] = total
        tables[k + 1] = new
    maps = {k: extend_module_table(source_fam.kb, table, k, 0,
                                   output_kb=target_fam.kb)
            for k, table in tables.items()}
    mor = MorphismFamily(source_fam, target_fam, maps, tables,
                         label="homotopy_iso")
    return mor, conn_prime


def covariant_tensor_derivative_with(hat: HatConnection,
                                     args: list[ModuleElement],
                                     b0_elt: ModuleElement, op_degree: int,
                                     module: DgModule) -> dict:
    """hat_{b_0} acting as a degree-(|b_0|-1) derivation of a tensor."""
    cache: dict[int, ModuleElement] = {}

    def op(i):
        if i not in cache:
            cache[i] = contract(b0_elt, hat(ModuleElement.basis_vector(module, i)))
        return cache[i]

    tensor = tensor_of_elements(args, [module] * len(args))
    return derive_tensor(tensor, [op] * len(args), op_degree,
                         [module] * len(args))


# ---------------------------------------------------------------------------
# module actions

class ModuleActionFamily:
    """Action maps mu_k: B^{(x)(k-1)} (x) E -> E over a bracket tower."""

    def __init__(self, algebra_family: BracketFamily, carrier: DgModule,
                 kb_e: KBasis, actions: dict[int, MultilinearMap],
                 module_tables: dict[int, dict[tuple, ModuleElement]],
                 connection_e: DeltaConnection | None = None, label: str = ""):
        self.algebra_family = algebra_family
        self.carrier = carrier
        self.kb_e = kb_e
        self.actions = actions
        self.module_tables = module_tables
        self.connection_e = connection_e
        self.label = label

    def action(self, k: int) -> MultilinearMap | None:
        m = self.actions.get(k)
        if m is None or m.is_zero():
            return None
        return m

    def nonzero_arities(self) -> list[int]:
        return sorted(k for k, m in self.actions.items() if not m.is_zero())


def kapranov_module(fam: BracketFamily, conn_e: DeltaConnection,
                    max_arity: int = 4, label: str = "") -> ModuleActionFamily:
    """The action tower on a module with its own delta-connection.

    mu_1 = d_E, mu_2 = the Atiyah cocycle of nabla^E as a bilinear map,
    mu_{k+1}(b_0, ..., b_{k-1}, e) = (-1)^{|b_0|} nabla^E_{b_0}(mu_k(...))
      - mu_k(nabla_{b_0}-derivative, nabla on B-slots and nabla^E on E).
    """
    conn_b = fam.connection
    if conn_e.delta != conn_b.delta:
        raise ValueError("module connection must extend the same derivation")
    b_mod = fam.module
    e_mod = conn_e.module
    kb_e = KBasis(e_mod)
    tables: dict[int, dict[tuple, ModuleElement]] = {}
    at_e = atiyah_cocycle(conn_e)
    table2: dict[tuple, ModuleElement] = {}
    for i in range(b_mod.rank):
        bi = ModuleElement.basis_vector(b_mod, i)
        for j in range(e_mod.rank):
            ej = ModuleElement.basis_vector(e_mod, j)
            v = at_e.bilinear(bi, ej)
            if not v.is_zero():
                table2[(i, j)] = v
    tables[2] = table2
    for k in range(2, max_arity):
        prev = tables[k]
        new: dict[tuple, ModuleElement] = {}
        slot_modules = [b_mod] * (k - 1) + [e_mod]
        slot_conns = [conn_b] * (k - 1) + [conn_e]
        for b0 in range(b_mod.rank):
            b0_elt = ModuleElement.basis_vector(b_mod, b0)
            d0 = b_mod.basis.degrees[b0]
            sign0 = -1 if d0 % 2 else 1
            ops = []
            for conn in slot_conns:
                cache: dict[int, ModuleElement] = {}

                def op(i, conn=conn, cache=cache):
                    if i not in cache:
                        cache[i] = contract(b0_elt, conn(
                            ModuleElement.basis_vector(conn.module, i)))
                    return cache[i]
                ops.append(op)
            for args in itertools.product(
                    *([range(b_mod.rank)] * (k - 1) + [range(e_mod.rank)])):
                total = e_mod.zero()
                prev_val = prev.get(args)
                if prev_val is not None:
                    total = total + contract(b0_elt, conn_e(prev_val)).scale(sign0)
                derived = derive_tensor({args: AlgebraElement.scalar(1)},
                                        ops, d0, slot_modules)
                total = total - eval_table_on_tensor(prev, 1, derived, e_mod)
                if not total.is_zero():
                    new[(b0,) + args] = total
        tables[k + 1] = new
    actions: dict[int, MultilinearMap] = {1: differential_table(e_mod, kb_e)}
    for k, table in tables.items():
        input_kbs = [fam.kb] * (k - 1) + [kb_e]
        actions[k] = extend_module_table(fam.kb, table, k, 1,
                                         input_kbs=input_kbs, output_kb=kb_e)
    return ModuleActionFamily(fam, e_mod, kb_e, actions, tables, conn_e, label)


def _module_structures(n: int, lam_active, mu_active):
    part1 = []
    for j in range(1, n + 1):
        i = n + 1 - j
        if j not in lam_active or i not in mu_active:
            continue
        for k in range(j, n):
            for sigma in shuffles(k - j, j - 1):
                part1.append((i, j, k, sigma))
    part2 = []
    for j in range(1, n + 1):
        i = n + 1 - j
        if j not in mu_active or i not in mu_active:
            continue
        for sigma in shuffles(n - j, j - 1):
            part2.append((i, j, sigma))
    return part1, part2


def module_residual(m: ModuleActionFamily, keys: tuple[int, ...], ekey: int,
                    part1, part2) -> Element:
    fam = m.algebra_family
    skb = fam.kb
    ekb = m.kb_e
    n = len(keys) + 1
    degs = [skb.degree(i) for i in keys]
    total = Element(ekb.basis)
    e_vec = Element.basis_vector(ekb.basis, ekey)
    for (i, j, k, sigma) in part1:
        lam = fam.brackets[j]
        mu = m.actions[i]
        eps = koszul_sign(sigma, degs[:k - 1])
        front = sum(degs[sigma[t] - 1] for t in range(k - j))
        sign = eps * (-1 if front % 2 else 1)
        inner_key = tuple(keys[sigma[t] - 1] for t in range(k - j, k - 1)) + (keys[k - 1],)
        inner = lam.table.get(inner_key)
        if inner is None:
            continue
        args = ([Element.basis_vector(skb.basis, keys[sigma[t] - 1])
                 for t in range(k - j)]
                + [inner]
                + [Element.basis_vector(skb.basis, keys[t])
                   for t in range(k, n - 1)]
                + [e_vec])
        total = total + mu(*args).scale(sign)
    for (i, j, sigma) in part2:
        mu_j = m.actions[j]
        mu_i = m.actions[i]
        eps = koszul_sign(sigma, degs)
        front = sum(degs[sigma[t] - 1] for t in range(n - j))
        sign = eps * (-1 if front % 2 else 1)
        inner_key = tuple(keys[sigma[t] - 1] for t in range(n - j, n - 1)) + (ekey,)
        inner = mu_j.table.get(inner_key)
        if inner is None:
            continue
        args = ([Element.basis_vector(skb.basis, keys[sigma[t] - 1])
                 for t in range(n - j)]
                + [inner])
        total = total + mu_i(*args).scale(sign)
    return total


def check_module_identities(m: ModuleActionFamily, n_max: int,
                            threads: int | None = None,
                            max_witnesses: int = 10) -> dict:
    threads = thread_count(threads)
    lam_active = set(m.algebra_family.nonzero_arities())
    mu_active = set(m.nonzero_arities())
    report = {"passed": True, "weights": []}
    nb = len(m.algebra_family.kb.keys)
    ne = len(m.kb_e.keys)
    for n in range(1, n_max + 1):
        part1, part2 = _module_structures(n, lam_active, mu_active)
        entry = {"n": n, "terms": len(part1) + len(part2), "tuples": 0,
                 "failures": []}
        if part1 or part2:
            tuples = list(itertools.product(
                *([range(nb)] * (n - 1) + [range(ne)])))
            entry["tuples"] = len(tuples)

            def job(full_key):
                keys, ekey = full_key[:-1], full_key[-1]
                r = module_residual(m, keys, ekey, part1, part2)
                return (full_key, r) if not r.is_zero() else None

            for hit in _parallel_map(job, tuples, threads):
                if hit is not None and len(entry["failures"]) < max_witnesses:
                    full_key, r = hit
                    names = ([m.algebra_family.kb.basis.names[i]
                              for i in full_key[:-1]]
                             + [m.kb_e.basis.names[full_key[-1]]])
                    entry["failures"].append({"tuple": names, "residual": repr(r)})
                    report["passed"] = False
        report["weights"].append(entry)
    return report


# ---------------------------------------------------------------------------
# cohomology-level structures

class CohomologyBracket:
    """The binary bracket induced on cohomology classes.

    [[b1],[b2]] = (-1)^{|b1|} [R_2(b1, b2)], tabulated on deterministic
    representatives of H(B).
    """

    def __init__(self, fam: BracketFamily):
        self.fam = fam
        self.complex = CochainComplex(fam.module)
        self.reps: list[tuple[int, ModuleElement]] = []
        for n in self.complex.degrees():
            for rep in self.complex.cohomology_basis(n):
                self.reps.append((n, rep))
        self.table: dict[tuple[int, int], list[Fraction]] = {}
        for a, (da, ra) in enumerate(self.reps):
            for b, (db, rb) in enumerate(self.reps):
                z = self.bracket_cocycle(ra, rb)
                if not z.is_zero() and not self.complex.is_cocycle(z):
                    raise ValueError("bracket output is not closed")
                self.table[(a, b)] = self.complex.class_coordinates(z)

    def bracket_cocycle(self, x: ModuleElement, y: ModuleElement) -> ModuleElement:
        table2 = self.fam.module_tables.get(2, {})
        out = self.fam.module.zero()
        for dx, xp in x.homogeneous_parts().items():
            sign = -1 if dx % 2 else 1
            out = out + eval_table_on_elements(
                table2, 1, [xp, y], [self.fam.module] * 2,
                self.fam.module).scale(sign)
        return out

    def class_coords(self, z: ModuleElement) -> list[Fraction]:
        return self.complex.class_coordinates(z)

    def is_skew(self) -> bool:
        return self.nonskew_witness() is None

    def nonskew_witness(self):
        """A pair of representative indices with [[a],[b]] != -[[b],[a]]."""
        for (a, b), coords in sorted(self.table.items()):
            rev = self.table.get((b, a), [])
            width = max(len(coords), len(rev))
            lhs = coords + [Fraction(0)] * (width - len(coords))
            rhs = [-c for c in rev] + [Fraction(0)] * (width - len(rev))
            if lhs != rhs:
                return (a, b)
        return None

    def leibniz_failures(self) -> list[tuple]:
        """[x,[y,z]] - [[x,y],z] - (-1)^{<x><y>}[y,[x,z]] on classes,
        with <x> the shifted degree |x| + 1."""
        out = []
        for a, (da, ra) in enumerate(self.reps):
            for b, (db, rb) in enumerate(self.reps):
                for c, (dc, rc) in enumerate(self.reps):
                    z1 = self.bracket_cocycle(ra, self.bracket_cocycle(rb, rc))
                    z2 = self.bracket_cocycle(self.bracket_cocycle(ra, rb), rc)
                    sign = -1 if ((da + 1) * (db + 1)) % 2 else 1
                    z3 = self.bracket_cocycle(rb, self.bracket_cocycle(ra, rc))
                    resid = z1 - z2 - z3.scale(sign)
                    if resid.is_zero():
                        continue
                    if self.complex.is_coboundary(resid) is None:
                        out.append((a, b, c))
        return out


def cohomology_leibniz_bracket(fam: BracketFamily) -> CohomologyBracket:
    return CohomologyBracket(fam)


def bracket_nonskew_witness(fam: BracketFamily):
    """A pair of module basis indices with R_2(i, j) != -R_2(j, i).

    The binary bracket of a tower is a Leibniz bracket, not a Lie
    bracket; this exhibits the asymmetry at the cochain level.
    """
    table = fam.module_tables.get(2, {})
    for (i, j) in sorted(set(table) | {(j, i) for (i, j) in table}):
        lhs = table.get((i, j), fam.module.zero())
        rhs = table.get((j, i), fam.module.zero()).scale(-1)
        if lhs != rhs:
            return (i, j)
    return None


class CohomologyAction:
    """[b] |> [e] = (-1)^{|b|} [mu_2(b, e)] on representatives."""

    def __init__(self, action_family: ModuleActionFamily):
        self.family = action_family
        self.b_complex = CochainComplex(action_family.algebra_family.module)
        self.e_complex = CochainComplex(action_family.carrier)
        self.b_reps: list[tuple[int, ModuleElement]] = []
        for n in self.b_complex.degrees():
            for rep in self.b_complex.cohomology_basis(n):
                self.b_reps.append((n, rep))
        self.e_reps: list[tuple[int, ModuleElement]] = []
        for n in self.e_complex.degrees():
            for rep in self.e_complex.cohomology_basis(n):
                self.e_reps.append((n, rep))
        self.table: dict[tuple[int, int], list[Fraction]] = {}
        for a, (da, ra) in enumerate(self.b_reps):
            for b, (db, rb) in enumerate(self.e_reps):
                z = self.action_cocycle(ra, rb)
                if not z.is_zero() and not self.e_complex.is_cocycle(z):
                    raise ValueError("action output is not closed")
                self.table[(a, b)] = self.e_complex.class_coordinates(z)

    def action_cocycle(self, b: ModuleElement, e: ModuleElement) -> ModuleElement:
        table2 = self.family.module_tables.get(2, {})
        fam = self.family.algebra_family
        out = self.family.carrier.zero()
        for db, bp in b.homogeneous_parts().items():
            sign = -1 if db % 2 else 1
            out = out + eval_table_on_elements(
                table2, 1, [bp, e], [fam.module, self.family.carrier],
                self.family.carrier).scale(sign)
        return out

    def naturality_failures(self, lam: ModuleMorphism) -> list[tuple]:
        """[b] |> lam([e]) = lam([b] |> [e]) for a dg morphism into a module
        with an action built from the same derivation."""
        out = []
        for a, (da, ra) in enumerate(self.b_reps):
            for b, (db, rb) in enumerate(self.e_reps):
                lhs = self.action_cocycle(ra, lam(rb))
                rhs = lam(self.action_cocycle(ra, rb))
                diff = lhs - rhs
                if diff.is_zero():
                    continue
                cx = CochainComplex(lam.target)
                if not cx.is_cocycle(diff) or cx.is_coboundary(diff) is None:
                    out.append((a, b))
        return out


def cohomology_action(action_family: ModuleActionFamily) -> CohomologyAction:
    return CohomologyAction(action_family)
