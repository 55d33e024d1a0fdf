"""Fixed-format MPS writer (with QCMATRIX sections) and a small reader.

Rows:  ``OBJ`` (objective, maximised), ``STATnnnn`` (stationarity equalities),
``SIGN`` (integral mode, audited coefficient <= 0) and ``SAFE`` (safeguard,
``-sum w <= -1``).  Columns: ``Wnnnnnnn`` weights and ``Bnnnnnnn``
coefficients, with integer markers around the weights in integral mode.
The bilinear part of each stationarity row is a QCMATRIX block listing both
symmetric halves of every ``w_i * beta_j`` coefficient.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .model import BilinearModel


def format_number(x: float, width: int = 12) -> str:
    """Shortest ``%g`` rendering of ``x`` that fits in ``width`` characters."""
    x = float(x)
    if x == 0.0:
        return "0"
    if x == int(x) and abs(x) < 1e11:
        return str(int(x))
    for digits in range(width, 0, -1):
        s = f"{x:.{digits}g}"
        if len(s) <= width:
            return s
    raise ValueError(f"cannot format {x!r} in {width} characters")


def _line(field1: str, name: str, row: str = "", value: str = "", row2: str = "", value2: str = "") -> str:
    # Fixed-format columns: 2-3, 5-12, 15-22, 25-36, 40-47, 50-61.
    s = f" {field1:<2} {name:<8}  {row:<8}  {value:>12}"
    if row2:
        s += f"   {row2:<8}  {value2:>12}"
    return s.rstrip()


def row_names(model: BilinearModel) -> list[str]:
    return [f"STAT{k:04d}" for k in range(model.d)] + [name for name, _, _ in model.linear_rows()]


def mps_text(model: BilinearModel) -> str:
    n, d, p = model.n, model.d, model.p
    if n > 9_999_999 or d > 9_999:
        raise ValueError("model too large for fixed-format names")
    Cw, Cz = model.stationarity()
    names = model.variable_names()
    stat = [f"STAT{k:04d}" for k in range(d)]
    lines = ["NAME          STABAUDIT", "OBJSENSE", "    MAX", "ROWS", " N  OBJ"]
    lines += [f" E  {r}" for r in stat]
    extra = model.linear_rows()
    lines += [f" L  {name}" for name, _, _ in extra]
    lines.append("COLUMNS")
    integral = model.mode == "integral"
    if integral:
        lines.append("    MARKER                 'MARKER'                 'INTORG'")
    for i in range(n):
        entries = [("OBJ", 1.0)] + [(stat[k], Cw[k, i]) for k in range(d) if Cw[k, i] != 0.0]
        entries += [(name, row[i]) for name, row, _ in extra if row[i] != 0.0]
        for a in range(0, len(entries), 2):
            pair = entries[a:a + 2]
            args = [pair[0][0], format_number(pair[0][1])]
            if len(pair) > 1:
                args += [pair[1][0], format_number(pair[1][1])]
            lines.append(_line("", names[i], *args))
    if integral:
        lines.append("    MARKER                 'MARKER'                 'INTEND'")
    for j in range(d):
        col = n + j
        entries = [(name, row[col]) for name, row, _ in extra if row[col] != 0.0]
        if not entries:
            # Every column must appear once; an explicit zero objective entry does that.
            entries = [("OBJ", 0.0)]
        for name, v in entries:
            lines.append(_line("", names[col], name, format_number(v)))
    rhs = [(name, r) for name, _, r in extra if r != 0.0]
    lines.append("RHS")
    for name, r in rhs:
        lines.append(_line("", "RHS", name, format_number(r)))
    lines.append("BOUNDS")
    for i in range(n):
        lines.append(_line("UP", "BND", names[i], "1"))
    lo, hi = model.beta_bounds()
    for j in range(d):
        name = names[n + j]
        if lo[j] == hi[j]:
            lines.append(_line("FX", "BND", name, format_number(lo[j])))
        else:
            lines.append(_line("LO", "BND", name, format_number(lo[j])))
            lines.append(_line("UP", "BND", name, format_number(hi[j])))
    for k in range(d):
        lines.append(f"QCMATRIX   {stat[k]}")
        for i in range(n):
            for j in range(p):
                c = Cz[k, i, j]
                if c == 0.0:
                    continue
                half = format_number(c / 2.0)
                lines.append(_line("", names[i], names[n + j], half))
                lines.append(_line("", names[n + j], names[i], half))
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def export_mps(model: BilinearModel, path) -> Path:
    """Write ``model`` to ``path``; identical models give byte-identical files."""
    path = Path(path)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(mps_text(model))
    return path


def read_mps(path) -> dict:
    """Parse an MPS file written by :func:`export_mps` (or any fixed/free MPS without spaces in names).

    Returns a dict with keys ``name``, ``sense``, ``rows`` (name -> type),
    ``columns`` (ordered names), ``integer`` (set of names), ``coefficients``
    ({(row, col): value}), ``rhs``, ``bounds`` ({col: [lo, hi]}) and
    ``qcmatrix`` ({row: {(col1, col2): value}}).
    """
    out = {"name": None, "sense": "MIN", "rows": {}, "columns": [], "integer": set(),
           "coefficients": {}, "rhs": {}, "bounds": {}, "qcmatrix": {}}
    section = None
    qrow = None
    in_int = False
    with open(path, encoding="ascii") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("*"):
                continue
            if not line[0].isspace():
                parts = line.split()
                section = parts[0]
                if section == "NAME":
                    out["name"] = parts[1] if len(parts) > 1 else ""
                elif section in ("QCMATRIX", "QSECTION"):
                    qrow = parts[1]
                    out["qcmatrix"].setdefault(qrow, {})
                elif section == "OBJSENSE" and len(parts) > 1:
                    out["sense"] = parts[1]
                continue
            parts = line.split()
            if section == "OBJSENSE":
                out["sense"] = parts[0]
            elif section == "ROWS":
                out["rows"][parts[1]] = parts[0]
            elif section == "COLUMNS":
                if len(parts) >= 3 and parts[1] == "'MARKER'":
                    in_int = parts[2] == "'INTORG'"
                    continue
                col = parts[0]
                if col not in out["bounds"]:
                    out["columns"].append(col)
                    out["bounds"][col] = [0.0, np.inf]
                if in_int:
                    out["integer"].add(col)
                for a in range(1, len(parts) - 1, 2):
                    out["coefficients"][(parts[a], col)] = float(parts[a + 1])
            elif section == "RHS":
                for a in range(1, len(parts) - 1, 2):
                    out["rhs"][parts[a]] = float(parts[a + 1])
            elif section == "BOUNDS":
                kind, col = parts[0], parts[2]
                val = float(parts[3]) if len(parts) > 3 else 0.0
                b = out["bounds"].setdefault(col, [0.0, np.inf])
                if kind == "UP":
                    b[1] = val
                elif kind == "LO":
                    b[0] = val
                elif kind == "FX":
                    b[0] = b[1] = val
                elif kind == "FR":
                    b[0], b[1] = -np.inf, np.inf
                elif kind == "BV":
                    b[0], b[1] = 0.0, 1.0
                    out["integer"].add(col)
                elif kind == "MI":
                    b[0] = -np.inf
            elif section in ("QCMATRIX", "QSECTION"):
                out["qcmatrix"][qrow][(parts[0], parts[1])] = float(parts[2])
    return out
