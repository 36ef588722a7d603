"""Deterministic free-MPS and LP-text export, plus a standalone MPS reader.

The writer emits sections NAME, OBJSENSE, ROWS, COLUMNS, RHS, BOUNDS, ENDATA
in that order, with variables in declaration order, rows named R0, R1, ... in
declaration order, and floats formatted by shortest round-trip (repr), so the
same LinearProgram always produces byte-identical output.

The reader is written directly against the free-format MPS conventions
(whitespace-separated fields, ``*`` comments) rather than by inverting the
writer, so writer/reader round-trips exercise two independent code paths.
It accepts any conforming file without RANGES or integrality markers.

Variable names may contain ``+`` (moment names do), which free MPS tolerates
since fields are whitespace-delimited. The LP-text format reserves ``+`` as
an operator, so the LP writer substitutes ``&`` for it there.
"""
from __future__ import annotations

import io
from typing import Optional

import numpy as np

from .errors import InvalidShape
from .lp import EQ, GE, LE, LinearProgram, LinearRow

_REL_TO_MPS = {EQ: "E", GE: "G", LE: "L"}
_MPS_TO_REL = {"E": EQ, "G": GE, "L": LE}


def _fmt(x: float) -> str:
    """Shortest decimal string that round-trips to the same float."""
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def write_mps(lp: LinearProgram) -> str:
    """Render to free-format MPS. Deterministic: see module docstring."""
    out = io.StringIO()
    out.write(f"NAME {lp.name}\n")
    out.write("OBJSENSE\n    MIN\n")
    out.write("ROWS\n")
    out.write(" N  OBJ\n")
    for r, row in enumerate(lp.rows):
        out.write(f" {_REL_TO_MPS[row.relation]}  R{r}\n")

    # COLUMNS is column-major: gather per-variable entries in row order
    per_col: list[list[tuple[str, float]]] = [[] for _ in lp.variable_names]
    for j, v in lp.objective:
        per_col[j].append(("OBJ", v))
    for r, row in enumerate(lp.rows):
        for j, v in row.coeffs:
            per_col[j].append((f"R{r}", v))
    out.write("COLUMNS\n")
    for j, name in enumerate(lp.variable_names):
        for rowname, v in per_col[j]:
            out.write(f"    {name}  {rowname}  {_fmt(v)}\n")

    out.write("RHS\n")
    if lp.objective_constant != 0.0:
        # MPS convention: RHS on the objective row negates the constant
        out.write(f"    RHS  OBJ  {_fmt(-lp.objective_constant)}\n")
    for r, row in enumerate(lp.rows):
        if row.rhs != 0.0:
            out.write(f"    RHS  R{r}  {_fmt(row.rhs)}\n")

    out.write("BOUNDS\n")
    for name, (lo, hi) in zip(lp.variable_names, lp.bounds):
        lo_f = np.isfinite(lo)
        hi_f = np.isfinite(hi)
        if lo_f and hi_f and lo == hi:
            out.write(f" FX BND  {name}  {_fmt(lo)}\n")
            continue
        if not lo_f and not hi_f:
            out.write(f" FR BND  {name}\n")
            continue
        if not lo_f:
            out.write(f" MI BND  {name}\n")
        elif lo != 0.0:
            out.write(f" LO BND  {name}  {_fmt(lo)}\n")
        if hi_f:
            out.write(f" UP BND  {name}  {_fmt(hi)}\n")
    out.write("ENDATA\n")
    return out.getvalue()


def _lp_name(name: str) -> str:
    return name.replace("+", "&")


def write_lp_text(lp: LinearProgram) -> str:
    """Render to CPLEX-style LP text (human-readable companion format)."""
    out = io.StringIO()
    out.write(f"\\ {lp.name}\n")
    out.write("Minimize\n obj:")
    if not lp.objective:
        out.write(" 0 " + _lp_name(lp.variable_names[0]) if lp.variable_names else " 0")
    for j, v in lp.objective:
        out.write(f" {'+' if v >= 0 else '-'} {_fmt(abs(v))} {_lp_name(lp.variable_names[j])}")
    if lp.objective_constant != 0.0:
        v = lp.objective_constant
        out.write(f" {'+' if v >= 0 else '-'} {_fmt(abs(v))}")
    out.write("\nSubject To\n")
    rel_txt = {EQ: "=", GE: ">=", LE: "<="}
    for r, row in enumerate(lp.rows):
        out.write(f" R{r}:")
        if not row.coeffs:
            out.write(" 0 " + _lp_name(lp.variable_names[0]))
        for j, v in row.coeffs:
            out.write(f" {'+' if v >= 0 else '-'} {_fmt(abs(v))} {_lp_name(lp.variable_names[j])}")
        out.write(f" {rel_txt[row.relation]} {_fmt(row.rhs)}\n")
    out.write("Bounds\n")
    for name, (lo, hi) in zip(lp.variable_names, lp.bounds):
        nm = _lp_name(name)
        lo_f = np.isfinite(lo)
        hi_f = np.isfinite(hi)
        if lo_f and hi_f and lo == hi:
            out.write(f" {nm} = {_fmt(lo)}\n")
        elif lo_f and hi_f:
            out.write(f" {_fmt(lo)} <= {nm} <= {_fmt(hi)}\n")
        elif lo_f:
            out.write(f" {nm} >= {_fmt(lo)}\n")
        elif hi_f:
            out.write(f" -inf <= {nm} <= {_fmt(hi)}\n")
        else:
            out.write(f" {nm} free\n")
    out.write("End\n")
    return out.getvalue()


def read_mps(text: str) -> LinearProgram:
    """Parse free-format MPS back into a LinearProgram.

    Rows keep file order, variables keep first-appearance order from
    COLUMNS. Raises InvalidShape on malformed or unsupported input
    (RANGES sections, integrality markers, unknown bound types).
    """
    name = "lp"
    section = None
    obj_row: Optional[str] = None
    row_order: list[str] = []
    row_rel: dict[str, str] = {}
    col_order: list[str] = []
    col_seen: set[str] = set()
    entries: dict[str, list[tuple[str, float]]] = {}
    obj_entries: dict[str, float] = {}
    rhs: dict[str, float] = {}
    obj_rhs = 0.0
    bnd: dict[str, list[float]] = {}
    minimize = True
    expect_objsense_value = False

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("*"):
            continue
        fields = line.split()
        is_header = not raw[0].isspace()

        if is_header:
            head = fields[0].upper()
            if head == "NAME":
                name = fields[1] if len(fields) > 1 else "lp"
                section = "NAME"
            elif head in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "OBJSENSE", "ENDATA"):
                section = head
                expect_objsense_value = head == "OBJSENSE"
                if head == "OBJSENSE" and len(fields) > 1:
                    minimize = fields[1].upper().startswith("MIN")
                    expect_objsense_value = False
                if head == "ENDATA":
                    break
            elif head == "RANGES":
                raise InvalidShape("RANGES sections are not supported")
            else:
                raise InvalidShape(f"line {lineno}: unknown section {head!r}")
            continue

        if expect_objsense_value:
            minimize = fields[0].upper().startswith("MIN")
            expect_objsense_value = False
            continue

        if section == "ROWS":
            if len(fields) != 2:
                raise InvalidShape(f"line {lineno}: bad ROWS entry")
            kind, rname = fields[0].upper(), fields[1]
            if kind == "N":
                if obj_row is None:
                    obj_row = rname
                # extra free rows are legal MPS; ignore them
            elif kind in _MPS_TO_REL:
                row_order.append(rname)
                row_rel[rname] = _MPS_TO_REL[kind]
            else:
                raise InvalidShape(f"line {lineno}: unknown row type {kind!r}")
        elif section == "COLUMNS":
            if len(fields) >= 3 and fields[1].upper() == "'MARKER'":
                raise InvalidShape("integrality markers are not supported")
            if len(fields) not in (3, 5):
                raise InvalidShape(f"line {lineno}: bad COLUMNS entry")
            cname = fields[0]
            if cname not in col_seen:
                col_seen.add(cname)
                col_order.append(cname)
                entries[cname] = []
            for k in range(1, len(fields), 2):
                rname, val = fields[k], float(fields[k + 1])
                if rname == obj_row:
                    obj_entries[cname] = obj_entries.get(cname, 0.0) + val
                elif rname in row_rel:
                    entries[cname].append((rname, val))
                else:
                    raise InvalidShape(f"line {lineno}: unknown row {rname!r}")
        elif section == "RHS":
            if len(fields) not in (3, 5):
                raise InvalidShape(f"line {lineno}: bad RHS entry")
            for k in range(1, len(fields), 2):
                rname, val = fields[k], float(fields[k + 1])
                if rname == obj_row:
                    obj_rhs = val
                elif rname in row_rel:
                    rhs[rname] = val
                else:
                    raise InvalidShape(f"line {lineno}: unknown row {rname!r}")
        elif section == "BOUNDS":
            kind = fields[0].upper()
            if kind in ("UP", "LO", "FX"):
                if len(fields) != 4:
                    raise InvalidShape(f"line {lineno}: bad BOUNDS entry")
                cname, val = fields[2], float(fields[3])
            elif kind in ("FR", "MI", "PL"):
                if len(fields) != 3:
                    raise InvalidShape(f"line {lineno}: bad BOUNDS entry")
                cname, val = fields[2], None
            else:
                raise InvalidShape(f"line {lineno}: bound type {kind!r} not supported")
            if cname not in col_seen:
                col_seen.add(cname)
                col_order.append(cname)
                entries[cname] = []
            b = bnd.setdefault(cname, [0.0, np.inf])
            if kind == "UP":
                b[1] = val
            elif kind == "LO":
                b[0] = val
            elif kind == "FX":
                b[0] = b[1] = val
            elif kind == "FR":
                b[0], b[1] = -np.inf, np.inf
            elif kind == "MI":
                b[0] = -np.inf
            elif kind == "PL":
                b[1] = np.inf
        elif section in ("NAME", "OBJSENSE", None):
            raise InvalidShape(f"line {lineno}: data outside a section")

    if obj_row is None:
        raise InvalidShape("no objective (N) row found")

    col_idx = {c: j for j, c in enumerate(col_order)}
    per_row: dict[str, list[tuple[int, float]]] = {r: [] for r in row_order}
    for cname in col_order:
        j = col_idx[cname]
        for rname, val in entries[cname]:
            per_row[rname].append((j, val))
    lrows = tuple(
        LinearRow(
            coeffs=tuple(sorted(per_row[r])),
            relation=row_rel[r],
            rhs=rhs.get(r, 0.0),
        )
        for r in row_order
    )
    objective = tuple(
        sorted((col_idx[c], v) for c, v in obj_entries.items() if v != 0.0)
    )
    if not minimize:
        objective = tuple((j, -v) for j, v in objective)
        obj_rhs = -obj_rhs
    bounds = tuple(
        tuple(bnd.get(c, [0.0, np.inf])) for c in col_order
    )
    return LinearProgram(
        variable_names=tuple(col_order),
        bounds=bounds,
        rows=lrows,
        objective=objective,
        objective_constant=-obj_rhs,
        name=name,
    )
