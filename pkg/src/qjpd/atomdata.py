"""Atomic species data: hyperfine levels, D-line strength tables, dipole list.

Species live in JSON documents under ``qjpd/data``. Angular-momentum
quantum numbers and strength factors are held as :class:`fractions.Fraction`
so the aggregate branching sums come out exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .constants import CONST
from .errors import SpeciesFormatError, SpeciesLookupError

SCHEMA_VERSION = 1

_BUILTIN = {
    "rubidium-87": "rubidium-87.json",
    "rb87": "rubidium-87.json",
    "sodium-23": "sodium-23.json",
    "na23": "sodium-23.json",
}
DEFAULT_SPECIES = "rubidium-87"


def _frac(x):
    return Fraction(str(x)) if not isinstance(x, Fraction) else x


def _fstr(x: Fraction) -> str:
    return str(x)


@dataclass(frozen=True)
class HyperfineLevel:
    term_label: str
    F: Fraction
    energy_offset: float  # Hz


@dataclass(frozen=True)
class LineData:
    """One fine-structure line with its hyperfine strength tables.

    ``absorption_strengths[(F_i, F_e)]`` already includes the line weight
    (2J'+1)/(2J+1), so that summing ``absorption * branching`` over both
    D lines yields rates in units of the common scaling rate.
    """

    name: str
    lower_term: str
    upper_term: str
    wavelength: float  # m
    natural_linewidth: float  # rad/s
    excited_F: tuple[Fraction, ...]
    absorption_strengths: dict = field(hash=False)
    branching: dict = field(hash=False)

    @property
    def omega(self):
        return 2 * math.pi * CONST.c / self.wavelength


@dataclass(frozen=True)
class PolarizabilityTransition:
    lower: str
    upper: str
    wavelength: float  # m
    reduced_dipole_au: float  # |<J_lower||d||J_upper>| in e a0
    linewidth: float  # rad/s


@dataclass(frozen=True)
class Violation:
    cell: str
    rule: str

    def __str__(self):
        return f"{self.cell}: {self.rule}"


@dataclass(frozen=True)
class AtomSpecies:
    name: str
    nuclear_spin: Fraction
    terms: dict = field(hash=False)  # term label -> J
    ground_hyperfine: tuple[HyperfineLevel, ...] = ()
    lines: tuple[LineData, ...] = ()
    gamma0: float = 2 * math.pi * 6.065e6
    lambda0: float = 780e-9
    polarizability_transitions: tuple[PolarizabilityTransition, ...] = ()
    probe: tuple[str, Fraction, Fraction] = ("D2", Fraction(1), Fraction(2))
    note: str = ""

    @property
    def ground_F(self):
        return tuple(level.F for level in self.ground_hyperfine)

    @property
    def omega0(self):
        return 2 * math.pi * CONST.c / self.lambda0

    def line(self, name):
        for ln in self.lines:
            if ln.name == name:
                return ln
        raise SpeciesLookupError(f"{self.name} has no line {name!r}")

    def J(self, term):
        try:
            return self.terms[term]
        except KeyError:
            raise SpeciesLookupError(f"{self.name} has no term {term!r}") from None

    def transfer_sum(self, F_i, F_f):
        """Sum over excited levels of both D lines of f(F_i,F_e) f(F_e,F_f)."""
        F_i, F_f = _frac(F_i), _frac(F_f)
        total = Fraction(0)
        for ln in self.lines:
            for F_e in ln.excited_F:
                total += ln.absorption_strengths.get((F_i, F_e), 0) * ln.branching.get((F_e, F_f), 0)
        return total

    def probe_transfer(self):
        """Contribution of the probed hyperfine transition to the 1 -> 2 sum."""
        line_name, F_i, F_e = self.probe
        ln = self.line(line_name)
        F_f = next(F for F in self.ground_F if F != F_i)
        return ln.absorption_strengths.get((F_i, F_e), 0) * ln.branching.get((F_e, F_f), 0)


def validate_species(species):
    """Return a list of :class:`Violation`; empty iff the tables are consistent."""
    out = []
    if not species.gamma0 > 0:
        out.append(Violation("gamma0", "must be positive"))
    if not species.lambda0 > 0:
        out.append(Violation("lambda0", "must be positive"))
    I = species.nuclear_spin
    for lvl in species.ground_hyperfine:
        J = species.terms.get(lvl.term_label)
        if J is None:
            out.append(Violation(f"ground F={lvl.F}", f"unknown term {lvl.term_label!r}"))
        elif not (abs(J - I) <= lvl.F <= J + I):
            out.append(Violation(f"ground F={lvl.F}", f"outside |J-I| <= F <= J+I for J={J}, I={I}"))
    for ln in species.lines:
        for table_name, table in (("absorption", ln.absorption_strengths), ("branching", ln.branching)):
            for (a, b), v in sorted(table.items()):
                cell = f"{ln.name} {table_name}[{a},{b}]"
                if v < 0:
                    out.append(Violation(cell, "negative strength"))
                if abs(a - b) > 1 and v != 0:
                    out.append(Violation(cell, "dipole selection rule |dF| <= 1 violated (must be 0)"))
        J_e = species.terms.get(ln.upper_term)
        for F_e in ln.excited_F:
            if J_e is not None and not (abs(J_e - I) <= F_e <= J_e + I):
                out.append(Violation(f"{ln.name} F'={F_e}", "outside allowed F range"))
            row = sum(v for (fe, _), v in ln.branching.items() if fe == F_e)
            if abs(float(row) - 1.0) > 1e-12:
                out.append(Violation(f"{ln.name} branching F'={F_e}", f"row sums to {float(row):.12g}, not 1"))
        if not (ln.wavelength > 0 and ln.natural_linewidth > 0):
            out.append(Violation(ln.name, "wavelength and linewidth must be positive"))
    for k, tr in enumerate(species.polarizability_transitions):
        if not (tr.wavelength > 0 and tr.linewidth > 0):
            out.append(Violation(f"polarizability[{k}]", "wavelength and linewidth must be positive"))
        for t in (tr.lower, tr.upper):
            if t not in species.terms:
                out.append(Violation(f"polarizability[{k}]", f"unknown term {t!r}"))
    return out


def gamma_over_omega3_mismatch(species):
    """Relative spread of Gamma/omega^3 across the lines (0 for one line)."""
    vals = [ln.natural_linewidth / ln.omega**3 for ln in species.lines]
    return (max(vals) - min(vals)) / min(vals) if vals else 0.0


# -- (de)serialisation ------------------------------------------------------


def species_from_dict(doc):
    try:
        version = doc["schema_version"]
    except KeyError:
        raise SpeciesFormatError("missing mandatory schema_version") from None
    if version != SCHEMA_VERSION:
        raise SpeciesFormatError(f"unsupported schema_version {version}")
    try:
        terms = {k: _frac(v["J"]) for k, v in doc["terms"].items()}
        levels = tuple(
            HyperfineLevel(d["term"], _frac(d["F"]), float(d["energy_offset_hz"])) for d in doc["ground_hyperfine"]
        )
        lines = []
        for d in doc["lines"]:
            absorb = {(_frac(e["F_i"]), _frac(e["F_e"])): _frac(e["value"]) for e in d["absorption_strengths"]}
            branch = {(_frac(e["F_e"]), _frac(e["F_f"])): _frac(e["value"]) for e in d["branching"]}
            lines.append(
                LineData(
                    d["name"], d["lower_term"], d["upper_term"], float(d["wavelength_m"]),
                    float(d["natural_linewidth_rad_s"]), tuple(_frac(f) for f in d["excited_F"]), absorb, branch,
                )
            )
        pol = tuple(
            PolarizabilityTransition(
                d["lower"], d["upper"], float(d["wavelength_m"]), float(d["reduced_dipole_au"]),
                float(d["linewidth_rad_s"]),
            )
            for d in doc.get("polarizability_transitions", [])
        )
        p = doc.get("probe", {"line": "D2", "F_i": "1", "F_e": "2"})
        return AtomSpecies(
            name=doc["name"],
            nuclear_spin=_frac(doc["nuclear_spin"]),
            terms=terms,
            ground_hyperfine=levels,
            lines=tuple(lines),
            gamma0=float(doc["gamma0_rad_s"]),
            lambda0=float(doc["lambda0_m"]),
            polarizability_transitions=pol,
            probe=(p["line"], _frac(p["F_i"]), _frac(p["F_e"])),
            note=doc.get("note", ""),
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise SpeciesFormatError(f"malformed species document: {exc!r}") from exc


def species_to_dict(species):
    def table(t, a, b):
        return [{a: _fstr(x), b: _fstr(y), "value": _fstr(v)} for (x, y), v in t.items()]

    return {
        "schema_version": SCHEMA_VERSION,
        "name": species.name,
        "note": species.note,
        "nuclear_spin": _fstr(species.nuclear_spin),
        "gamma0_rad_s": species.gamma0,
        "lambda0_m": species.lambda0,
        "terms": {k: {"J": _fstr(v)} for k, v in species.terms.items()},
        "ground_hyperfine": [
            {"term": lv.term_label, "F": _fstr(lv.F), "energy_offset_hz": lv.energy_offset}
            for lv in species.ground_hyperfine
        ],
        "lines": [
            {
                "name": ln.name,
                "lower_term": ln.lower_term,
                "upper_term": ln.upper_term,
                "wavelength_m": ln.wavelength,
                "natural_linewidth_rad_s": ln.natural_linewidth,
                "excited_F": [_fstr(f) for f in ln.excited_F],
                "absorption_strengths": table(ln.absorption_strengths, "F_i", "F_e"),
                "branching": table(ln.branching, "F_e", "F_f"),
            }
            for ln in species.lines
        ],
        "probe": {"line": species.probe[0], "F_i": _fstr(species.probe[1]), "F_e": _fstr(species.probe[2])},
        "polarizability_transitions": [
            {
                "lower": t.lower,
                "upper": t.upper,
                "wavelength_m": t.wavelength,
                "reduced_dipole_au": t.reduced_dipole_au,
                "linewidth_rad_s": t.linewidth,
            }
            for t in species.polarizability_transitions
        ],
    }


def load_species(path):
    with open(path, encoding="utf-8") as fh:
        return species_from_dict(json.load(fh))


def save_species(species, path):
    Path(path).write_text(json.dumps(species_to_dict(species), indent=2) + "\n", encoding="utf-8")


def builtin_species(name=DEFAULT_SPECIES):
    """Load a bundled dataset (``rubidium-87`` or ``sodium-23``)."""
    key = name.lower()
    if key not in _BUILTIN:
        raise SpeciesLookupError(f"unknown species {name!r}; known: rubidium-87, sodium-23")
    text = resources.files("qjpd.data").joinpath(_BUILTIN[key]).read_text(encoding="utf-8")
    return species_from_dict(json.loads(text))


def resolve_species(name_or_path):
    """Builtin name, or path to a species JSON document."""
    if name_or_path.lower() in _BUILTIN:
        return builtin_species(name_or_path)
    p = Path(name_or_path)
    if p.exists():
        return load_species(p)
    raise SpeciesLookupError(f"{name_or_path!r} is neither a builtin species nor a file")
