import dataclasses
import json
import random
from fractions import Fraction

import pytest
from sympy import Rational
from sympy.physics.wigner import wigner_6j

from qjpd.atomdata import (
    builtin_species,
    gamma_over_omega3_mismatch,
    load_species,
    resolve_species,
    save_species,
    species_from_dict,
    species_to_dict,
    validate_species,
)
from qjpd.errors import SpeciesFormatError, SpeciesLookupError


def _R(x):
    x = Fraction(x)
    return Rational(x.numerator, x.denominator)


def sixj_absorption(J, Jp, I, F, Fp):
    """Hyperfine line strength with the (2J'+1)/(2J+1) line weight folded in."""
    J, Jp, I, F, Fp = map(_R, (J, Jp, I, F, Fp))
    s = (2 * J + 1) * (2 * Fp + 1) * wigner_6j(J, Jp, 1, Fp, F, I) ** 2
    return Fraction(str((2 * Jp + 1) / (2 * J + 1) * s))


def sixj_branching(J, Jp, I, Fp, F):
    J, Jp, I, F, Fp = map(_R, (J, Jp, I, F, Fp))
    return Fraction(str((2 * Jp + 1) * (2 * F + 1) * wigner_6j(J, Jp, 1, Fp, F, I) ** 2))


@pytest.mark.parametrize("name", ["rubidium-87", "sodium-23"])
def test_tables_regenerate_from_6j(name):
    sp = builtin_species(name)
    I = sp.nuclear_spin
    for ln in sp.lines:
        J, Jp = sp.J(ln.lower_term), sp.J(ln.upper_term)
        for (F, Fe), v in ln.absorption_strengths.items():
            assert v == sixj_absorption(J, Jp, I, F, Fe), (ln.name, F, Fe)
        for (Fe, Ff), v in ln.branching.items():
            assert v == sixj_branching(J, Jp, I, Fe, Ff), (ln.name, Fe, Ff)
        # every allowed cell is present
        assert len(ln.absorption_strengths) == len(sp.ground_F) * len(ln.excited_F)


def test_builtin_rb_valid_and_aggregates(rb):
    assert validate_species(rb) == []
    assert rb.transfer_sum(1, 2) == Fraction(10, 9)
    assert rb.transfer_sum(2, 1) == Fraction(2, 3)
    assert rb.probe_transfer() == Fraction(5, 12)
    assert rb.transfer_sum(1, 2) / rb.probe_transfer() == Fraction(8, 3)


def test_sodium_valid():
    na = builtin_species("na23")
    assert validate_species(na) == []
    assert na.transfer_sum(1, 2) == Fraction(10, 9)


def test_branching_rows_sum_to_one(rb):
    for ln in rb.lines:
        for Fe in ln.excited_F:
            assert sum(v for (a, _), v in ln.branching.items() if a == Fe) == 1


def test_gamma_omega3_factorisation(rb):
    assert gamma_over_omega3_mismatch(rb) < 0.02


def test_defaults(rb):
    assert rb.gamma0 == pytest.approx(2 * 3.141592653589793 * 6.065e6)
    assert rb.lambda0 == 780e-9
    assert rb.nuclear_spin == Fraction(3, 2)
    assert rb.ground_F == (1, 2)


def _mutate(sp, line_name, table, key, value):
    lines = []
    for ln in sp.lines:
        if ln.name == line_name:
            t = dict(getattr(ln, table))
            t[key] = value
            ln = dataclasses.replace(ln, **{table: t})
        lines.append(ln)
    return dataclasses.replace(sp, lines=tuple(lines))


def test_violation_branching_row(rb):
    bad = _mutate(rb, "D2", "branching", (Fraction(1), Fraction(2)), Fraction(1, 6) - Fraction(1, 10))
    v = validate_species(bad)
    assert len(v) == 1
    assert "F'=1" in v[0].cell and "D2" in v[0].cell


def test_violation_selection_rule(rb):
    bad = _mutate(rb, "D2", "absorption_strengths", (Fraction(1), Fraction(3)), Fraction(1, 10))
    v = validate_species(bad)
    assert len(v) == 1 and "selection rule" in v[0].rule
    assert "[1,3]" in v[0].cell


def test_violation_negative_and_F_range(rb):
    bad = _mutate(rb, "D1", "absorption_strengths", (Fraction(1), Fraction(1)), Fraction(-1, 6))
    assert any("negative" in x.rule for x in validate_species(bad))
    bad = dataclasses.replace(rb, nuclear_spin=Fraction(1, 2))
    assert any("F" in x.cell for x in validate_species(bad))
    bad = dataclasses.replace(rb, gamma0=0.0)
    assert any(x.cell == "gamma0" for x in validate_species(bad))


def test_round_trip_bit_exact(rb, tmp_path):
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_species(rb, p1)
    back = load_species(p1)
    save_species(back, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert species_to_dict(back) == species_to_dict(rb)
    assert back.polarizability_transitions == rb.polarizability_transitions
    assert back.ground_hyperfine == rb.ground_hyperfine


def test_aggregates_stable_under_permutation(rb):
    rng = random.Random(3)
    for _ in range(10):
        doc = species_to_dict(rb)
        rng.shuffle(doc["lines"])
        for ln in doc["lines"]:
            rng.shuffle(ln["excited_F"])
            rng.shuffle(ln["absorption_strengths"])
            rng.shuffle(ln["branching"])
        sp = species_from_dict(doc)
        assert sp.transfer_sum(1, 2) == Fraction(10, 9)
        assert sp.transfer_sum(2, 1) == Fraction(2, 3)


def test_lookup_and_format_errors(rb, tmp_path):
    with pytest.raises(SpeciesLookupError):
        builtin_species("caesium-133")
    with pytest.raises(SpeciesLookupError):
        resolve_species(str(tmp_path / "missing.json"))
    with pytest.raises(SpeciesLookupError):
        rb.line("D3")
    doc = species_to_dict(rb)
    del doc["schema_version"]
    with pytest.raises(SpeciesFormatError):
        species_from_dict(doc)
    doc = species_to_dict(rb)
    doc["schema_version"] = 99
    with pytest.raises(SpeciesFormatError):
        species_from_dict(doc)
    doc = species_to_dict(rb)
    del doc["lines"][0]["branching"]
    with pytest.raises(SpeciesFormatError):
        species_from_dict(doc)


def test_resolve_species_from_file(rb, tmp_path):
    p = tmp_path / "custom.json"
    p.write_text(json.dumps(species_to_dict(rb)))
    assert resolve_species(str(p)).transfer_sum(1, 2) == Fraction(10, 9)
