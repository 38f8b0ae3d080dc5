"""Bracket towers, morphism towers, module actions, homotopy invariance."""

from __future__ import annotations

from fractions import Fraction

import pytest

from kapranov.algebra import AlgebraElement
from kapranov.builders import sl2_borel_pair, splitting_homotopy
from kapranov.connections import DeltaConnection
from kapranov.derivations import DerivationMorphism
from kapranov.kapranov import (HatConnection, MorphismFamily, MultilinearMap,
                               a_multilinearity_violations, bracket_on_elements,
                               check_leibniz_infinity, check_linfty_morphism,
                               check_module_identities,
                               compose_morphism_families, homotopy_iso,
                               kapranov_brackets, kapranov_module,
                               kapranov_morphism, tensor_of_elements,
                               trivialization)
from kapranov.graded import Element
from kapranov.modules import ModuleElement, ModuleMorphism, simple_tensor

F = Fraction


@pytest.fixture(scope="module")
def setup():
    return sl2_borel_pair()


@pytest.fixture(scope="module")
def fam0(setup):
    return kapranov_brackets(setup.connection, max_arity=5)


@pytest.fixture(scope="module")
def conn1(setup):
    """Second connection on the same derivation: nabla(f~) = f~^ (x) f~."""
    v = simple_tensor(setup.connection.tensor,
                      ModuleElement.basis_vector(setup.delta.target, 0),
                      ModuleElement.basis_vector(setup.bmod, 0))
    return DeltaConnection(setup.delta, setup.bmod, {0: v}, label="nabla1")


@pytest.fixture(scope="module")
def fam1(conn1):
    return kapranov_brackets(conn1, max_arity=5)


class TestBracketTower:
    def test_canonical_connection_truncates(self, fam0, setup):
        # delta(e^) = 0 and nabla(f~) = 0 make every recursion step vanish:
        # R_2(f~, f~) = 2 e^.f~ and R_k = 0 for k >= 3
        assert fam0.nonzero_arities() == [1, 2]
        assert fam0.module_tables[2] == {
            (0, 0): ModuleElement(setup.bmod,
                                  {0: AlgebraElement.monomial((1,), 2)})}

    def test_second_connection_r2(self, fam1, setup):
        # At(f~, f~) = nabla_{df~}f~ - d(nabla_{f~}f~) + nabla_{f~}(df~)
        #            = (2e^ - 2h^).f~ by hand
        want = ModuleElement(setup.bmod,
                             {0: AlgebraElement.monomial((1,), 2)
                              + AlgebraElement.monomial((0,), -2)})
        assert fam1.module_tables[2] == {(0, 0): want}

    def test_second_connection_r3(self, fam1, setup):
        # R_3(f~,f~,f~) = nabla_{f~}(R_2(f~,f~)) - 2 R_2(f~,f~)
        #              = (4e^ - 2h^).f~ - (4e^ - 4h^).f~ = 2h^.f~ by hand
        want = ModuleElement(setup.bmod, {0: AlgebraElement.monomial((0,), 2)})
        assert fam1.module_tables[3] == {(0, 0, 0): want}

    def test_all_brackets_have_degree_one(self, fam1):
        for k, m in fam1.brackets.items():
            assert m.degree == 1
            assert m.check_degrees() == [], k

    def test_extension_sign(self, fam1):
        # lam_2(h^.f~, f~) = -h^ ^ R_2(f~, f~): the degree-1 coefficient
        # crosses the degree-1 bracket
        kb = fam1.kb
        key = (kb.index[((0,), 0)], kb.index[((), 0)])
        got = kb.to_module_element(fam1.brackets[2].table[key])
        want = fam1.module_tables[2][(0, 0)].left_mul(
            AlgebraElement.monomial((0,))).scale(-1)
        assert got == want

    def test_leibniz_identities_canonical(self, fam0):
        report = check_leibniz_infinity(fam0, 5)
        assert report["passed"], report

    def test_leibniz_identities_second_connection(self, fam1):
        # all five arities are nonzero here, so every weight is exercised
        assert fam1.nonzero_arities() == [1, 2, 3, 4, 5]
        report = check_leibniz_infinity(fam1, 5)
        assert report["passed"], report

    def test_a_multilinearity_of_recursion(self, fam1, setup):
        # evaluating the recursion on coefficient-bearing elements agrees
        # with the Koszul-signed extension of the basis table
        for mon in setup.algebra.monomials():
            args = [ModuleElement(setup.bmod, {0: AlgebraElement.monomial(mon)}),
                    ModuleElement.basis_vector(setup.bmod, 0),
                    ModuleElement.basis_vector(setup.bmod, 0)]
            direct = bracket_on_elements(fam1, 3, args)
            via_table = fam1.kb.to_module_element(
                fam1.brackets[3](*[fam1.kb.to_kvec(x) for x in args]))
            assert direct == via_table, mon

    def test_carrier_must_be_the_dual(self, setup):
        with pytest.raises(ValueError):
            kapranov_brackets(
                DeltaConnection(setup.delta, setup.omega, {}), 3)

    def test_corrupted_bracket_fails_identities(self, fam1):
        import copy
        bad = copy.copy(fam1)
        bad.brackets = dict(fam1.brackets)
        m = MultilinearMap.uniform(3, 1, fam1.kb.basis,
                                   table=dict(fam1.brackets[3].table))
        key = next(iter(m.table))
        m.set(key, m.table[key].scale(2))
        bad.brackets[3] = m
        report = check_leibniz_infinity(bad, 4)
        assert not report["passed"]


class TestMorphismTower:
    def test_identity_connection_change_is_strict(self, setup, fam0):
        phi = ModuleMorphism.identity(setup.omega)
        dm = DerivationMorphism(setup.delta, setup.delta, phi)
        mor = kapranov_morphism(dm, fam0, fam0, max_arity=4)
        assert mor.nonzero_arities() == [1]

    def test_connection_change(self, setup, fam0, fam1):
        phi = ModuleMorphism.identity(setup.omega)
        dm = DerivationMorphism(setup.delta, setup.delta, phi)
        mor = kapranov_morphism(dm, fam0, fam1, max_arity=4)
        # f_2(f~, f~) = nabla1_{f~}(f~) - 0 = f~ by hand
        assert mor.module_tables[2][(0, 0)] == \
            ModuleElement.basis_vector(setup.bmod, 0)
        report = check_linfty_morphism(mor, 4)
        assert report["passed"], report

    def test_connection_change_reverse(self, setup, fam0, fam1):
        phi = ModuleMorphism.identity(setup.omega)
        dm = DerivationMorphism(setup.delta, setup.delta, phi)
        mor = kapranov_morphism(dm, fam1, fam0, max_arity=4)
        report = check_linfty_morphism(mor, 4)
        assert report["passed"], report

    def test_composition_round_trip(self, setup, fam0, fam1):
        phi = ModuleMorphism.identity(setup.omega)
        dm = DerivationMorphism(setup.delta, setup.delta, phi)
        fwd = kapranov_morphism(dm, fam0, fam1, max_arity=3)
        back = kapranov_morphism(dm, fam1, fam0, max_arity=3)
        loop = compose_morphism_families(back, fwd, max_arity=3)
        report = check_linfty_morphism(loop, 3)
        assert report["passed"], report
        # arity 1 of the composite is the identity
        kb = fam0.kb
        for i in range(len(kb.keys)):
            assert loop.maps[1].table[(i,)] == Element.basis_vector(kb.basis, i)

    def test_composition_with_identity(self, setup, fam0, fam1):
        phi = ModuleMorphism.identity(setup.omega)
        dm = DerivationMorphism(setup.delta, setup.delta, phi)
        fwd = kapranov_morphism(dm, fam0, fam1, max_arity=3)
        ident = MorphismFamily(fam0, fam0, {
            1: kapranov_morphism(dm, fam0, fam0, max_arity=1).maps[1]})
        comp = compose_morphism_families(fwd, ident, max_arity=3)
        for k in (1, 2, 3):
            assert comp.maps[k].table == fwd.maps[k].table


class TestTrivialization:
    def test_is_a_morphism_over_the_ground_field(self, fam1):
        triv = trivialization(fam1, max_arity=4)
        report = check_linfty_morphism(triv, 4)
        assert report["passed"], report

    def test_phi2_value(self, fam1, setup):
        # phi_2(f~, h^.f~) = nabla1_{f~}(h^.f~) = -e^.f~ + h^.f~ by hand
        triv = trivialization(fam1, max_arity=2)
        kb = fam1.kb
        key = (kb.index[((), 0)], kb.index[((0,), 0)])
        got = kb.to_module_element(triv.maps[2].table[key])
        want = ModuleElement(setup.bmod,
                             {0: AlgebraElement.monomial((1,), -1)
                              + AlgebraElement.monomial((0,), 1)})
        assert got == want

    def test_not_a_multilinear_when_delta_nonzero(self, fam0, fam1):
        # the dichotomy: over the ground field the tower trivializes, but
        # the trivializing maps cannot be A-multilinear unless delta = 0
        for fam in (fam0, fam1):
            triv = trivialization(fam, max_arity=2)
            assert a_multilinearity_violations(triv, 2)


class TestHomotopyInvariance:
    def test_iso_between_the_two_splittings(self, setup):
        other = sl2_borel_pair({0: {1: 1}})
        h = splitting_homotopy(setup, other)
        hat = HatConnection(h, setup.bmod, {})
        mor, conn_prime = homotopy_iso(setup.connection, h, hat, max_arity=4)
        assert conn_prime.delta == other.delta
        # g_1 = id, g_2 = 0
        assert 2 not in mor.nonzero_arities()
        assert mor.module_tables[1] == {
            (0,): ModuleElement.basis_vector(setup.bmod, 0)}
        report = check_linfty_morphism(mor, 4)
        assert report["passed"], report

    def test_r2_is_homotopy_invariant(self, setup):
        other = sl2_borel_pair({0: {1: 1}})
        h = splitting_homotopy(setup, other)
        hat = HatConnection(h, setup.bmod, {})
        mor, _ = homotopy_iso(setup.connection, h, hat, max_arity=3)
        assert mor.source.module_tables[2] == mor.target.module_tables[2]

    def test_trivial_homotopy_gives_strict_iso(self, setup):
        h = splitting_homotopy(setup, setup)
        hat = HatConnection(h, setup.bmod, {})
        mor, conn_prime = homotopy_iso(setup.connection, h, hat, max_arity=4)
        assert conn_prime.delta == setup.delta
        assert mor.nonzero_arities() == [1]

    def test_hat_degree_guard(self, setup):
        h = splitting_homotopy(setup, setup)
        bad = simple_tensor(setup.connection.tensor,
                            ModuleElement.basis_vector(setup.omega, 0),
                            ModuleElement.basis_vector(setup.bmod, 0))
        with pytest.raises(ValueError):
            HatConnection(h, setup.bmod, {0: bad})


class TestModuleAction:
    def test_regular_case_reproduces_brackets(self, fam1, conn1):
        mf = kapranov_module(fam1, conn1, max_arity=4)
        for k in (2, 3, 4):
            assert mf.module_tables.get(k, {}) == fam1.module_tables.get(k, {})

    def test_regular_case_identities(self, fam1, conn1):
        mf = kapranov_module(fam1, conn1, max_arity=4)
        report = check_module_identities(mf, 4)
        assert report["passed"], report

    def test_action_degrees(self, fam1, conn1):
        mf = kapranov_module(fam1, conn1, max_arity=4)
        for k, m in mf.actions.items():
            assert m.check_degrees() == [], k

    def test_mismatched_derivation_rejected(self, fam1, setup):
        other = sl2_borel_pair({0: {1: 1}})
        with pytest.raises(ValueError):
            kapranov_module(fam1, other.connection, max_arity=3)


class TestTensorHelpers:
    def test_tensor_of_elements_koszul_sign(self, setup):
        # moving a degree-1 coefficient in slot 2 past the degree-0 basis
        # vector in slot 1 keeps the sign; past a degree-1 entry it flips
        b = setup.bmod
        e = ModuleElement.basis_vector(b, 0)
        ae = ModuleElement(b, {0: AlgebraElement.monomial((0,))})
        t = tensor_of_elements([e, ae], [b, b])
        assert t == {(0, 0): AlgebraElement.monomial((0,))}
        t2 = tensor_of_elements([ae, ae], [b, b])
        # prefix degree after slot 1 is |h^.f~| = 1, so the second h^
        # picks up a sign before wedging: -(h^ ^ h^) = 0
        assert t2 == {}
