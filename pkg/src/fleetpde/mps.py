"""Free-format MPS export/import for cross-checking window LPs elsewhere.

Layout written by :func:`write_mps`::

    NAME          <name>
    OBJSENSE
        MAX
    ROWS
     N  OBJ
     E  R0            (L for <=, G for >=)
    COLUMNS
        C0  OBJ  1.5  R0  2.0
    RHS
        RHS  R0  4.0
    BOUNDS
     FR BND  C0       free column
     MI BND  C0       lower -inf (followed by UP when finite)
     LO BND  C0  1.0
     UP BND  C0  2.0
     FX BND  C0  3.0
    ENDATA

Names contain no spaces; numbers use ``repr`` so a write/read round trip is
exact.  Columns with default bounds [0, inf) get no BOUNDS line.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError
from .simplex import EQ, GE, LE, LpProblem

_SENSE_CODE = {EQ: "E", LE: "L", GE: "G"}
_CODE_SENSE = {v: k for k, v in _SENSE_CODE.items()}


def _names(names, prefix, n):
    if names is None:
        return [f"{prefix}{i}" for i in range(n)]
    if any((" " in s) or not s for s in names):
        raise ValidationError("MPS names must be nonempty and contain no spaces")
    return list(names)


def dumps_mps(p: LpProblem, name: str = "WINDOW") -> str:
    cols = _names(p.col_names, "C", p.n_cols)
    rows = _names(p.row_names, "R", p.n_rows)
    out = [f"NAME          {name}", "OBJSENSE", "    MAX", "ROWS", " N  OBJ"]
    out += [f" {_SENSE_CODE[s]}  {r}" for s, r in zip(p.sense, rows)]
    out.append("COLUMNS")
    A = p.A.tocsc()
    for j in range(p.n_cols):
        entries = []
        if p.c[j] != 0:
            entries.append(("OBJ", p.c[j]))
        for k in range(A.indptr[j], A.indptr[j + 1]):
            entries.append((rows[A.indices[k]], A.data[k]))
        if not entries:
            entries.append(("OBJ", 0.0))
        for r, v in entries:
            out.append(f"    {cols[j]}  {r}  {float(v)!r}")
    out.append("RHS")
    for r, v in zip(rows, p.rhs):
        if v != 0:
            out.append(f"    RHS  {r}  {float(v)!r}")
    out.append("BOUNDS")
    for j, (lo, hi) in enumerate(zip(p.lb, p.ub)):
        c = cols[j]
        if lo == hi:
            out.append(f" FX BND  {c}  {float(lo)!r}")
            continue
        if lo == -np.inf and hi == np.inf:
            out.append(f" FR BND  {c}")
            continue
        if lo == -np.inf:
            out.append(f" MI BND  {c}")
        elif lo != 0:
            out.append(f" LO BND  {c}  {float(lo)!r}")
        if hi != np.inf:
            out.append(f" UP BND  {c}  {float(hi)!r}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def write_mps(p: LpProblem, path, name: str = "WINDOW") -> Path:
    path = Path(path)
    path.write_text(dumps_mps(p, name))
    return path


def loads_mps(text: str) -> LpProblem:
    section = None
    maximize = False
    row_names, senses, row_pos = [], [], {}
    col_names, col_pos = [], {}
    obj, trip_r, trip_c, trip_v = {}, [], [], []
    rhs, lb, ub = {}, {}, {}
    obj_row = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        if not raw.strip() or raw.startswith("*"):
            continue
        tok = raw.split()
        if not raw[0].isspace():
            section = tok[0]
            if section == "OBJSENSE" and len(tok) > 1:
                maximize = tok[1] == "MAX"
            continue
        if section == "OBJSENSE":
            maximize = tok[0] == "MAX"
        elif section == "ROWS":
            code, r = tok
            if code == "N":
                obj_row = obj_row or r
                continue
            if code not in _CODE_SENSE:
                raise ValidationError(f"line {lineno}: unknown row type {code}")
            row_pos[r] = len(row_names)
            row_names.append(r)
            senses.append(_CODE_SENSE[code])
        elif section == "COLUMNS":
            c = tok[0]
            if c not in col_pos:
                col_pos[c] = len(col_names)
                col_names.append(c)
            j = col_pos[c]
            for r, v in zip(tok[1::2], tok[2::2]):
                if r == obj_row:
                    obj[j] = float(v)
                elif r in row_pos:
                    trip_r.append(row_pos[r])
                    trip_c.append(j)
                    trip_v.append(float(v))
                else:
                    raise ValidationError(f"line {lineno}: unknown row {r}")
        elif section == "RHS":
            for r, v in zip(tok[1::2], tok[2::2]):
                if r in row_pos:
                    rhs[row_pos[r]] = float(v)
        elif section == "BOUNDS":
            kind, c = tok[0], tok[2]
            j = col_pos[c]
            val = float(tok[3]) if len(tok) > 3 else None
            if kind == "FX":
                lb[j] = ub[j] = val
            elif kind == "FR":
                lb[j], ub[j] = -np.inf, np.inf
            elif kind == "MI":
                lb[j] = -np.inf
            elif kind == "PL":
                ub[j] = np.inf
            elif kind == "LO":
                lb[j] = val
            elif kind == "UP":
                ub[j] = val
            else:
                raise ValidationError(f"line {lineno}: unsupported bound type {kind}")
        elif section in ("NAME", "ENDATA"):
            continue
        else:
            raise ValidationError(f"line {lineno}: data outside a known section")
    n, m = len(col_names), len(row_names)
    c = np.zeros(n)
    for j, v in obj.items():
        c[j] = v
    if not maximize:
        c = -c
    A = sp.coo_matrix((trip_v, (trip_r, trip_c)), shape=(m, n)).tocsr()
    b = np.zeros(m)
    for i, v in rhs.items():
        b[i] = v
    lo, hi = np.zeros(n), np.full(n, np.inf)
    for j, v in lb.items():
        lo[j] = v
    for j, v in ub.items():
        hi[j] = v
    return LpProblem(c, A, np.array(senses, dtype="<U2"), b, lo, hi, col_names=col_names, row_names=row_names)


def read_mps(path) -> LpProblem:
    return loads_mps(Path(path).read_text())
