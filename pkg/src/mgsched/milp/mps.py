"""Fixed-format MPS export (and a small reader used for round trips).

Internal names are replaced by 8-character codes, ``C0000001`` for columns
and ``R0000001`` for rows, so arbitrary model names survive the format's
limits.  The objective row is ``COST``; a constant objective offset is
written as the negated RHS of that row, the convention HiGHS and CPLEX read.
"""

from __future__ import annotations

import math
from pathlib import Path

from .problem import EQ, GE, LE, MilpProblem

OBJ_ROW = "COST"
_SENSE_CODE = {LE: "L", GE: "G", EQ: "E"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}


def _col_name(j: int) -> str:
    return f"C{j + 1:07d}"


def _row_name(i: int) -> str:
    return f"R{i + 1:07d}"


def _num(x: float) -> str:
    """Shortest faithful rendering that fits the 12-character value field."""
    if x == int(x) and abs(x) < 1e11:
        return str(int(x))
    for digits in range(12, 3, -1):
        s = f"{x:.{digits}g}"
        if len(s) <= 12:
            return s
    return f"{x:.4g}"


def _line(f1: str = "", f2: str = "", f3: str = "", f4: str = "", f5: str = "", f6: str = "") -> str:
    # Fields start at columns 2, 5, 15, 25, 40, 50.
    s = f" {f1:<2} {f2:<8}  {f3:<8}  {f4:>12}"
    if f5:
        s += f"   {f5:<8}  {f6:>12}"
    return s.rstrip()


def mps_names(p: MilpProblem) -> dict:
    """Mapping from internal variable/row names to their MPS codes."""
    names = {v.name: _col_name(j) for j, v in enumerate(p.variables)}
    for i, con in enumerate(p.constraints):
        names[con.name] = _row_name(i)
    return names


def name_table(p: MilpProblem) -> str:
    lines = [f"{v.name}\t{_col_name(j)}" for j, v in enumerate(p.variables)]
    lines += [f"{con.name}\t{_row_name(i)}" for i, con in enumerate(p.constraints)]
    return "\n".join(lines) + ("\n" if lines else "")


def export_mps(p: MilpProblem) -> str:
    out = [f"NAME          {p.name[:8].upper() or 'PROBLEM'}", "ROWS", f" N  {OBJ_ROW}"]
    for i, con in enumerate(p.constraints):
        out.append(f" {_SENSE_CODE[con.sense]}  {_row_name(i)}")

    columns = [[] for _ in p.variables]
    for j, c in sorted(p.objective.items()):
        if c:
            columns[j].append((OBJ_ROW, c))
    for i, con in enumerate(p.constraints):
        for j, a in sorted(con.coeffs.items()):
            columns[j].append((_row_name(i), a))

    out.append("COLUMNS")
    in_int = False
    marker = 0
    for j, v in enumerate(p.variables):
        if v.integer != in_int:
            marker += 1
            tag = "'INTORG'" if v.integer else "'INTEND'"
            out.append(f"    M{marker:07d}  'MARKER'                 {tag}")
            in_int = v.integer
        entries = columns[j] or [(OBJ_ROW, 0.0)]
        for row, a in entries:
            out.append(_line("", _col_name(j), row, _num(a)))
    if in_int:
        marker += 1
        out.append(f"    M{marker:07d}  'MARKER'                 'INTEND'")

    out.append("RHS")
    if p.offset:
        out.append(_line("", "RHS", OBJ_ROW, _num(-p.offset)))
    for i, con in enumerate(p.constraints):
        if con.rhs:
            out.append(_line("", "RHS", _row_name(i), _num(con.rhs)))

    out.append("BOUNDS")
    for j, v in enumerate(p.variables):
        name = _col_name(j)
        lo_inf, up_inf = math.isinf(v.lb), math.isinf(v.ub)
        if lo_inf and up_inf:
            out.append(_line("FR", "BND", name))
        elif v.lb == v.ub:
            out.append(_line("FX", "BND", name, _num(v.lb)))
        else:
            if lo_inf:
                out.append(_line("MI", "BND", name))
            elif v.lb != 0 or v.integer:
                out.append(_line("LO", "BND", name, _num(v.lb)))
            if not up_inf:
                out.append(_line("UP", "BND", name, _num(v.ub)))
            elif v.integer:
                out.append(_line("PL", "BND", name))
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def write_mps(p: MilpProblem, path) -> tuple[Path, Path]:
    """Write ``path`` plus a ``.names`` sidecar; return both paths."""
    path = Path(path)
    path.write_text(export_mps(p))
    sidecar = path.with_suffix(".names")
    sidecar.write_text(name_table(p))
    return path, sidecar


def read_mps(text: str) -> MilpProblem:
    """Parse the subset of MPS that :func:`export_mps` emits (whitespace-separated)."""
    p = MilpProblem()
    section = None
    row_sense, row_index = {}, {}
    obj_row = None
    in_int = False
    rows_coeffs = {}
    rhs = {}
    cols = {}
    bounds = {}
    for raw in text.splitlines():
        if not raw.strip() or raw.startswith("*"):
            continue
        if not raw.startswith(" "):
            section = raw.split()[0]
            if section == "NAME" and len(raw.split()) > 1:
                p.name = raw.split()[1]
            continue
        tok = raw.split()
        if section == "ROWS":
            code, name = tok
            if code == "N":
                obj_row = obj_row or name
            else:
                row_sense[name] = _CODE_SENSE[code]
                row_index[name] = len(row_index)
                rows_coeffs[name] = {}
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                in_int = tok[2] == "'INTORG'"
                continue
            col = tok[0]
            if col not in cols:
                cols[col] = p.add_var(col, 0.0, math.inf, integer=False)
                p.variables[cols[col]].integer = in_int
            j = cols[col]
            for row, val in zip(tok[1::2], tok[2::2]):
                if row == obj_row:
                    p.add_cost(j, float(val))
                else:
                    rows_coeffs[row][j] = float(val)
        elif section == "RHS":
            for row, val in zip(tok[1::2], tok[2::2]):
                rhs[row] = float(val)
        elif section == "BOUNDS":
            kind, col = tok[0], tok[2]
            bounds.setdefault(col, []).append((kind, float(tok[3]) if len(tok) > 3 else None))
    for col, items in bounds.items():
        v = p.variables[cols[col]]
        for kind, val in items:
            if kind == "UP":
                v.ub = val
            elif kind == "LO":
                v.lb = val
            elif kind == "FX":
                v.lb = v.ub = val
            elif kind == "FR":
                v.lb, v.ub = -math.inf, math.inf
            elif kind == "MI":
                v.lb = -math.inf
            elif kind == "PL":
                v.ub = math.inf
            elif kind == "BV":
                v.lb, v.ub, v.integer = 0.0, 1.0, True
    for name in sorted(row_index, key=row_index.get):
        p.add_constraint(rows_coeffs[name], row_sense[name], rhs.get(name, 0.0), name)
    if obj_row in rhs:
        p.offset = -rhs[obj_row]
    return p
