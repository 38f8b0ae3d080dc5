"""Batch front end: parse instance documents, run checks, emit JSON reports.

Reports are deterministic: fixed key order (sorted), rationals as "p/q"
strings, no timing in the body (elapsed time goes to stderr).  Exit
status is 0 exactly when every requested check passed, 1 on a failing
check, 2 on input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from importlib import resources

import jsonschema

from .algebra import AlgebraElement, LieAlgebraData, validate_cdga
from .builders import LiePair, LinearMapObject, lie_pair_setup, linear_map_setup
from .cohomology import CochainComplex
from .connections import (AtiyahClass, DeltaConnection, atiyah_cocycle,
                          connection_difference_element, extend_connection,
                          flat_connection_exists)
from .derivations import (DerivationMorphism, DgDerivation, find_homotopy,
                          validate_dg_derivation)
from .graded import GradedBasis
from .kapranov import (HatConnection,
                       bracket_nonskew_witness, check_leibniz_infinity,
                       check_linfty_morphism, cohomology_leibniz_bracket,
                       homotopy_iso, kapranov_brackets, kapranov_morphism,
                       thread_count)
from .modules import (DgModule, ModuleElement, ModuleMorphism,
                      apply_module_differential, dual_module,
                      validate_dg_module)


class DocumentError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing

def parse_rational(s) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as e:
        raise DocumentError(f"bad rational {s!r}: {e}") from None


def parse_monomial(s: str) -> tuple[int, ...]:
    if not s:
        return ()
    return tuple(int(p) for p in s.split("."))


def parse_algebra_element(d: dict) -> AlgebraElement:
    out = AlgebraElement()
    for mon, c in d.items():
        out = out + AlgebraElement.monomial(parse_monomial(mon),
                                            parse_rational(c))
    return out


def parse_module_element(module: DgModule, d: dict) -> ModuleElement:
    return ModuleElement(module, {int(i): parse_algebra_element(a)
                                  for i, a in d.items()})


def parse_index_pair(s: str) -> tuple[int, int]:
    i, j = s.split(",")
    return int(i), int(j)


def parse_lie(d: dict) -> LieAlgebraData:
    brackets = {}
    for key, row in d.get("brackets", {}).items():
        brackets[parse_index_pair(key)] = {int(k): parse_rational(c)
                                           for k, c in row.items()}
    return LieAlgebraData(d["basis"], brackets)


def parse_splitting(d: dict | None) -> dict:
    if not d:
        return {}
    return {int(b): {int(a): parse_rational(c) for a, c in row.items()}
            for b, row in d.items()}


def parse_connection_values(delta: DgDerivation, bmod: DgModule,
                            d: dict | None) -> DeltaConnection:
    base = extend_connection(delta, bmod)
    if not d:
        return base
    values = {}
    for i, row in d.items():
        v = base.tensor.zero()
        for jk, elem in row.items():
            j, k = parse_index_pair(jk)
            idx = j * bmod.rank + k
            v = v + ModuleElement(base.tensor, {idx: parse_algebra_element(elem)})
        values[int(i)] = v
    return DeltaConnection(delta, bmod, values)


class Instance:
    """A fully assembled instance plus whatever its document also carries."""

    def __init__(self, doc: dict):
        self.doc = doc
        self.label = doc.get("label", "")
        self.options = doc.get("options", {})
        self.lie: LieAlgebraData | None = None
        self.pair_setup = None
        self.second_pair_setup = None
        self.second_connection: DeltaConnection | None = None
        self.linear_setup = None
        if "lie_pair" in doc:
            self.kind = "lie_pair"
            d = doc["lie_pair"]
            self.lie = parse_lie(d)
            pair = LiePair(self.lie, d["subalgebra"], label=self.label)
            self.pair_setup = lie_pair_setup(
                pair, parse_splitting(d.get("splitting")), label=self.label)
            if "second_splitting" in d:
                self.second_pair_setup = lie_pair_setup(
                    pair, parse_splitting(d["second_splitting"]),
                    label=self.label + "'")
            if "second_connection" in d:
                self.second_connection = parse_connection_values(
                    self.delta, self.bmod, d["second_connection"])
        elif "linear_map_object" in doc:
            self.kind = "linear_map_object"
            d = doc["linear_map_object"]
            self.lie = parse_lie(d["lie"])
            actions = {int(a): {parse_index_pair(ij): parse_rational(c)
                                for ij, c in row.items()}
                       for a, row in d["actions"].items()}
            psi = {int(i): {int(a): parse_rational(c) for a, c in row.items()}
                   for i, row in d["psi"].items()}
            self.linear_setup = linear_map_setup(
                LinearMapObject(self.lie, d["module_basis"], actions, psi,
                                label=self.label))
        else:
            self.kind = "raw"
            d = doc["raw"]
            from .algebra import CdgaPresentation
            diff = {int(i): parse_algebra_element(a)
                    for i, a in d.get("differential", {}).items()}
            self.algebra = CdgaPresentation(d["generators"], diff)
            om = d["omega"]
            om_diff = {parse_index_pair(k): parse_algebra_element(a)
                       for k, a in om.get("differential", {}).items()}
            self.omega = DgModule(self.algebra,
                                  GradedBasis(om["basis"], om["degrees"]),
                                  om_diff, label="Omega")
            self.delta_raw = DgDerivation(
                self.algebra, self.omega,
                {int(i): parse_module_element(self.omega, v)
                 for i, v in d.get("delta", {}).items()})
            self.bmod_raw = dual_module(self.omega)
            self.connection_raw = parse_connection_values(
                self.delta_raw, self.bmod_raw, d.get("connection"))

    @property
    def setup(self):
        return self.pair_setup or self.linear_setup

    @property
    def algebra_(self):
        return self.setup.algebra if self.setup else self.algebra

    @property
    def omega_(self):
        return self.setup.omega if self.setup else self.omega

    @property
    def delta(self):
        return self.setup.delta if self.setup else self.delta_raw

    @property
    def bmod(self):
        return self.setup.bmod if self.setup else self.bmod_raw

    @property
    def connection(self):
        return self.setup.connection if self.setup else self.connection_raw

    def max_arity(self, args) -> int:
        if args.max_arity is not None:
            return args.max_arity
        return self.options.get("max_arity", 4)


def load_document(path: str) -> dict:
    try:
        with open(path) as f:
            doc = json.load(f)
    except OSError as e:
        raise DocumentError(f"cannot read {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise DocumentError(
            f"{path}: invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}"
        ) from None
    schema = json.loads(resources.files("kapranov.schemas")
                        .joinpath("instance.schema.json").read_text())
    validator = jsonschema.Draft7Validator(schema)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        locs = "; ".join(
            f"at {'/'.join(str(p) for p in e.absolute_path) or '<root>'}: "
            f"{e.message}" for e in errors[:5])
        raise DocumentError(f"{path}: document does not match the schema: {locs}")
    return doc


# ---------------------------------------------------------------------------
# serialization

def frac_json(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def algebra_elem_json(a: AlgebraElement, names) -> dict:
    out = {}
    for mon in sorted(a.terms, key=lambda m: (len(m), m)):
        word = "^".join(names[g] for g in mon) if mon else "1"
        out[word] = frac_json(a.terms[mon])
    return out


def module_elem_json(v: ModuleElement) -> dict:
    names = v.module.algebra.generators.names
    return {v.module.basis.names[i]: algebra_elem_json(v.coeffs[i], names)
            for i in sorted(v.coeffs)}


# ---------------------------------------------------------------------------
# commands

def named_check(name: str, failures: list[str]) -> dict:
    return {"name": name, "passed": not failures, "failures": list(failures)}


def cmd_validate(inst: Instance, args) -> dict:
    checks = []
    if inst.lie is not None:
        checks.append(named_check("jacobi", inst.lie.jacobi_failures()))
    checks.append(named_check("cdga_d_squared", validate_cdga(inst.algebra_)))
    checks.append(named_check("module_d_squared", validate_dg_module(inst.omega_)))
    checks.append(named_check("dual_module_d_squared",
                              validate_dg_module(inst.bmod)))
    checks.append(named_check("derivation_compatibility",
                              validate_dg_derivation(inst.delta)))
    conn_fail = []
    try:
        at = atiyah_cocycle(inst.connection)
        if not at.is_closed():
            conn_fail.append("Atiyah cocycle of the canonical connection "
                             "is not closed")
    except ValueError as e:
        conn_fail.append(str(e))
    checks.append(named_check("connection", conn_fail))
    return {"command": "validate", "label": inst.label, "checks": checks,
            "passed": all(c["passed"] for c in checks)}


def cmd_atiyah(inst: Instance, args) -> dict:
    at = atiyah_cocycle(inst.connection)
    cls = AtiyahClass(inst.delta, inst.bmod, inst.connection)
    class_zero = cls.is_zero()
    flat = flat_connection_exists(inst.delta, inst.bmod)
    checks = [named_check("cocycle_closed",
                          [] if at.is_closed() else ["[nabla, d] is not closed"]),
              named_check("flat_agrees_with_class_vanishing",
                          [] if (flat is not None) == class_zero else
                          ["flat connection search disagrees with the class"])]
    out = {
        "command": "atiyah",
        "label": inst.label,
        "class_zero": class_zero,
        "flat_connection_found": flat is not None,
    }
    if flat is not None:
        out["flat_connection_values"] = {
            inst.bmod.basis.names[i]: module_elem_json(v)
            for i, v in sorted(flat.values.items())}
    if inst.second_connection is not None:
        at2 = atiyah_cocycle(inst.second_connection)
        d_elt = connection_difference_element(inst.connection,
                                              inst.second_connection)
        want = apply_module_differential(at.om_end, d_elt).scale(-1)
        ok = at.element - at2.element == want
        checks.append(named_check(
            "cocycle_difference_exact",
            [] if ok else ["cocycle difference is not -d(connection difference)"]))
        checks.append(named_check(
            "class_connection_independent",
            [] if cls.equals(AtiyahClass(inst.delta, inst.bmod,
                                         inst.second_connection))
            else ["classes of the two connections differ"]))
    out["checks"] = checks
    out["passed"] = all(c["passed"] for c in checks)
    return out


def bracket_tables_json(fam) -> dict:
    tables = {}
    for k in sorted(fam.module_tables):
        entries = []
        for key in sorted(fam.module_tables[k]):
            entries.append({
                "args": [fam.module.basis.names[i] for i in key],
                "value": module_elem_json(fam.module_tables[k][key]),
            })
        tables[str(k)] = entries
    return tables


def cmd_brackets(inst: Instance, args) -> dict:
    fam = kapranov_brackets(inst.connection, inst.max_arity(args),
                            label=inst.label)
    degree_failures = []
    for k, m in sorted(fam.brackets.items()):
        degree_failures.extend(f"arity {k}: {msg}" for msg in m.check_degrees())
    diff_entries = []
    for i in range(inst.bmod.rank):
        dv = inst.bmod.diff_of_basis(i)
        if not dv.is_zero():
            diff_entries.append({"arg": inst.bmod.basis.names[i],
                                 "value": module_elem_json(dv)})
    checks = [named_check("bracket_degrees", degree_failures)]
    return {
        "command": "brackets",
        "label": inst.label,
        "max_arity": inst.max_arity(args),
        "differential": diff_entries,
        "tables": bracket_tables_json(fam),
        "nonzero_arities": fam.nonzero_arities(),
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }


def cmd_check_leibniz(inst: Instance, args) -> dict:
    n_max = inst.max_arity(args)
    fam = kapranov_brackets(inst.connection, n_max, label=inst.label)
    report = check_leibniz_infinity(fam, n_max, threads=args.threads)
    return {
        "command": "check-leibniz",
        "label": inst.label,
        "max_arity": n_max,
        "nonzero_arities": fam.nonzero_arities(),
        "tables": bracket_tables_json(fam),
        "weights": report["weights"],
        "passed": report["passed"],
    }


def cmd_morphism(inst: Instance, args) -> dict:
    n_max = min(inst.max_arity(args), 4)
    fam0 = kapranov_brackets(inst.connection, n_max, label=inst.label)
    phi = ModuleMorphism.identity(inst.omega_)
    dm = DerivationMorphism(inst.delta, inst.delta, phi)
    checks = []
    if inst.second_connection is not None:
        fam1 = kapranov_brackets(inst.second_connection, n_max)
        mor = kapranov_morphism(dm, fam0, fam1, max_arity=n_max)
        kind = "connection_change"
    else:
        mor = kapranov_morphism(dm, fam0, fam0, max_arity=n_max)
        kind = "identity"
        strict = mor.nonzero_arities() == [1] or mor.nonzero_arities() == []
        checks.append(named_check(
            "identity_is_strict",
            [] if strict else [f"unexpected arities {mor.nonzero_arities()}"]))
    report = check_linfty_morphism(mor, n_max, threads=args.threads)
    checks.append(named_check(
        "morphism_equation",
        [f"n={w['n']}: {f['tuple']}" for w in report["weights"]
         for f in w["failures"]]))
    return {
        "command": "morphism",
        "label": inst.label,
        "kind": kind,
        "map_arities": mor.nonzero_arities(),
        "weights": report["weights"],
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }


def cmd_homotopy(inst: Instance, args) -> dict:
    if inst.second_pair_setup is None:
        raise DocumentError(
            "the homotopy command needs a lie_pair document with a "
            "second_splitting section")
    from .builders import splitting_homotopy
    s0, s1 = inst.pair_setup, inst.second_pair_setup
    checks = []
    h = splitting_homotopy(s0, s1)
    checks.append(named_check("offset_matches", []))  # verified on build
    found = find_homotopy(s0.delta, s1.delta)
    checks.append(named_check(
        "homotopy_search",
        [] if found is not None else ["find_homotopy returned nothing"]))
    hat = HatConnection(h, s0.bmod, {})
    mor, conn_prime = homotopy_iso(s0.connection, h, hat, max_arity=4)
    checks.append(named_check(
        "g2_vanishes", [] if 2 not in mor.nonzero_arities()
        else ["g_2 is nonzero"]))
    report = check_linfty_morphism(mor, 4, threads=args.threads)
    checks.append(named_check(
        "iso_morphism_equation",
        [f"n={w['n']}: {f['tuple']}" for w in report["weights"]
         for f in w["failures"]]))
    cls0 = AtiyahClass(s0.delta, s0.bmod, s0.connection)
    cls1 = AtiyahClass(s1.delta, s1.bmod, s1.connection)
    checks.append(named_check(
        "classes_equal", [] if cls0.equals(cls1)
        else ["twisted Atiyah classes of the two splittings differ"]))
    return {
        "command": "homotopy",
        "label": inst.label,
        "homotopy_values": {
            s0.algebra.generators.names[i]: module_elem_json(v)
            for i, v in sorted(h.values.items())},
        "iso_arities": mor.nonzero_arities(),
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }


def cmd_cohomology(inst: Instance, args) -> dict:
    fam = kapranov_brackets(inst.connection, 2, label=inst.label)
    cx = CochainComplex(inst.bmod)
    degrees = [args.degree] if args.degree is not None else cx.degrees()
    betti = {str(n): cx.betti(n) for n in degrees}
    cb = cohomology_leibniz_bracket(fam)
    reps = [{"degree": d, "representative": module_elem_json(r)}
            for d, r in cb.reps]
    table = []
    for (a, b) in sorted(cb.table):
        coords = cb.table[(a, b)]
        if any(coords):
            table.append({"args": [a, b],
                          "coordinates": [frac_json(c) for c in coords]})
    witness = bracket_nonskew_witness(fam)
    leib = cb.leibniz_failures()
    checks = [named_check(
        "class_leibniz_identity",
        [f"representatives {t}" for t in leib])]
    out = {
        "command": "cohomology",
        "label": inst.label,
        "betti": betti,
        "class_representatives": reps,
        "class_bracket_table": table,
        "class_bracket_skew": cb.is_skew(),
        "cochain_nonskew_witness": (
            [fam.module.basis.names[witness[0]],
             fam.module.basis.names[witness[1]]] if witness else None),
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }
    return out


COMMANDS = {
    "validate": cmd_validate,
    "atiyah": cmd_atiyah,
    "brackets": cmd_brackets,
    "check-leibniz": cmd_check_leibniz,
    "morphism": cmd_morphism,
    "homotopy": cmd_homotopy,
    "cohomology": cmd_cohomology,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kapranov",
        description="Build and verify the higher bracket towers of a "
                    "finite-dimensional instance.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", required=True, help="instance document (JSON)")
        p.add_argument("--max-arity", type=int, default=None,
                       help="highest bracket arity / identity weight")
        p.add_argument("--degree", type=int, default=None,
                       help="restrict cohomology output to one degree")
        p.add_argument("--output", default=None,
                       help="write the report here instead of stdout")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: KAPRANOV_THREADS or 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.monotonic()
    try:
        doc = load_document(args.input)
        inst = Instance(doc)
        report = COMMANDS[args.command](inst, args)
    except DocumentError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {args.input}: {e}", file=sys.stderr)
        return 2
    args.threads = thread_count(args.threads)
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.output:
        with open(args.output, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    print(f"elapsed: {time.monotonic() - start:.3f}s", file=sys.stderr)
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
