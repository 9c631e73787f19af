"""CPLEX-style LP file export/import and a plain ``name value`` solution listing.

Names are mangled reversibly: characters outside the LP name alphabet (and the
escape character ``~`` itself) become ``~XX`` hex escapes, and a leading
digit, period or ``e``/``E`` is escaped too so it cannot be read as a number.
"""

from __future__ import annotations

import math
import re

import numpy as np

from .model import MilpModel, MipSolution, ModelError, Sense, Status, VarKind

_LEGAL = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789!\"#$%&()/,.;?@_`'{}|")
_MAX_LINE = 200


def _escape(ch: str) -> str:
    code = ord(ch)
    return f"~{code:02X}" if code < 256 else f"~u{code:06X}"


def mangle(name: str) -> str:
    if not name:
        raise ModelError("empty name")
    out = [_escape(name[0]) if name[0] not in _LEGAL or name[0] in "0123456789.eE" else name[0]]
    out.extend(ch if ch in _LEGAL else _escape(ch) for ch in name[1:])
    return "".join(out)


def demangle(text: str) -> str:
    out, i = [], 0
    while i < len(text):
        ch = text[i]
        if ch != "~":
            out.append(ch)
            i += 1
        elif text[i + 1 : i + 2] == "u":
            out.append(chr(int(text[i + 2 : i + 8], 16)))
            i += 8
        else:
            out.append(chr(int(text[i + 1 : i + 3], 16)))
            i += 3
    return "".join(out)


def _num(a: float) -> str:
    if math.isinf(a):
        return "inf" if a > 0 else "-inf"
    if a == int(a) and abs(a) < 1e15:
        return str(int(a))
    return format(a, ".17g")


def _expr(terms: dict[int, float], names: list[str]) -> list[str]:
    parts = []
    for j in sorted(terms):
        a = terms[j]
        sign = "-" if a < 0 else "+"
        parts.append(f"{sign} {_num(abs(a))} {names[j]}")
    if not parts:
        parts.append(f"+ 0 {names[0]}" if names else "0")
    return parts


def _wrap(head: str, parts: list[str], tail: str = "") -> list[str]:
    lines, cur = [], head
    for p in parts + ([tail] if tail else []):
        if len(cur) + len(p) + 1 > _MAX_LINE:
            lines.append(cur)
            cur = "   "
        cur += " " + p
    lines.append(cur)
    return lines


_SENSE_TXT = {Sense.LE: "<=", Sense.GE: ">=", Sense.EQ: "="}


def export_lp_file(model: MilpModel) -> str:
    model.validate()
    names = [mangle(v.name) for v in model.variables]
    lines = [f"\\ {model.name}", "Minimize"]
    obj_parts = _expr(model.objective, names)
    if model.constant:
        obj_parts.append(f"{'-' if model.constant < 0 else '+'} {_num(abs(model.constant))}")
    lines += _wrap(" obj:", obj_parts)
    lines.append("Subject To")
    for row in model.constraints:
        lines += _wrap(f" {mangle(row.name)}:", _expr(row.terms, names), f"{_SENSE_TXT[row.sense]} {_num(row.rhs)}")
    lines.append("Bounds")
    for v, nm in zip(model.variables, names):
        lo, hi = v.lower, v.upper
        if math.isinf(lo) and math.isinf(hi):
            lines.append(f" {nm} free")
        elif lo == hi:
            lines.append(f" {nm} = {_num(lo)}")
        elif math.isinf(hi):
            lines.append(f" {nm} >= {_num(lo)}")
        else:
            lines.append(f" {_num(lo)} <= {nm} <= {_num(hi)}")
    generals = [nm for v, nm in zip(model.variables, names) if v.kind is VarKind.INTEGER]
    binaries = [nm for v, nm in zip(model.variables, names) if v.kind is VarKind.BINARY]
    if generals:
        lines.append("Generals")
        lines += _wrap("", generals)
    if binaries:
        lines.append("Binaries")
        lines += _wrap("", binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


_SECTIONS = {
    "minimize": "min", "minimum": "min", "min": "min",
    "maximize": "max", "maximum": "max", "max": "max",
    "subject to": "st", "such that": "st", "st": "st", "s.t.": "st",
    "bounds": "bounds", "bound": "bounds",
    "generals": "gen", "general": "gen", "gen": "gen",
    "binaries": "bin", "binary": "bin", "bin": "bin",
    "end": "end",
}
_TOKEN = re.compile(
    r"\s*(?:(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?inf(?:inity)?\b)"
    r"|(?P<op><=|>=|=<|=>|<|>|=|[+-]|:)"
    r"|(?P<name>[^\s+\-:<>=]+))",
    re.IGNORECASE,
)


def _tokens(text: str) -> list[tuple[str, str]]:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ModelError(f"cannot parse LP text near {text[pos:pos + 20]!r}")
        kind = m.lastgroup
        out.append((kind, m.group(kind)))
        pos = m.end()
    return out


def _to_float(tok: str) -> float:
    t = tok.lower()
    if "inf" in t:
        return -math.inf if t.startswith("-") else math.inf
    return float(tok)


def _parse_linear(toks: list[tuple[str, str]]) -> tuple[list[tuple[str, float]], float]:
    terms, const, sign, coef = [], 0.0, 1.0, None
    for kind, tok in toks:
        if kind == "op" and tok in "+-":
            if coef is not None:
                const += sign * coef
                coef = None
            sign = -1.0 if tok == "-" else 1.0
        elif kind == "num":
            if coef is not None:
                const += sign * coef
                sign = 1.0
            coef = _to_float(tok)
        elif kind == "name":
            terms.append((demangle(tok), sign * (1.0 if coef is None else coef)))
            sign, coef = 1.0, None
        else:
            raise ModelError(f"unexpected token {tok!r} in expression")
    if coef is not None:
        const += sign * coef
    return terms, const


_SENSE_OF = {"<=": Sense.LE, "=<": Sense.LE, "<": Sense.LE, ">=": Sense.GE, "=>": Sense.GE, ">": Sense.GE, "=": Sense.EQ}


def read_lp_file(text: str, name: str = "model") -> MilpModel:
    """Parse the LP subset written by :func:`export_lp_file` (plus maximize)."""
    sections: dict[str, list[str]] = {k: [] for k in ("min", "max", "st", "bounds", "gen", "bin")}
    current = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        key = _SECTIONS.get(line.lower())
        if key == "end":
            break
        if key:
            current = key
            continue
        if current is None:
            raise ModelError(f"content before first section: {line!r}")
        sections[current].append(line)

    kinds: dict[str, VarKind] = {}
    for nm in " ".join(sections["gen"]).split():
        kinds[demangle(nm)] = VarKind.INTEGER
    for nm in " ".join(sections["bin"]).split():
        kinds[demangle(nm)] = VarKind.BINARY

    bounds: dict[str, list[float]] = {}
    order: list[str] = []

    def declare(v: str) -> None:
        if v not in bounds:
            bounds[v] = [0.0, math.inf]
            order.append(v)

    for line in sections["bounds"]:
        toks = _tokens(line)
        names = [t for k, t in toks if k == "name" and t.lower() != "free"]
        if len(names) != 1:
            raise ModelError(f"cannot parse bound {line!r}")
        v = demangle(names[0])
        declare(v)
        if any(k == "name" and t.lower() == "free" for k, t in toks):
            bounds[v] = [-math.inf, math.inf]
            continue
        vals = toks
        i = next(i for i, (k, t) in enumerate(vals) if k == "name")
        left, right = vals[:i], vals[i + 1 :]
        if left:
            num, op = _to_float(left[0][1]), left[1][1]
            s = _SENSE_OF[op]
            if s is Sense.LE:
                bounds[v][0] = num
            elif s is Sense.GE:
                bounds[v][1] = num
            else:
                bounds[v] = [num, num]
        if right:
            op, num = right[0][1], _to_float(right[1][1])
            s = _SENSE_OF[op]
            if s is Sense.LE:
                bounds[v][1] = num
            elif s is Sense.GE:
                bounds[v][0] = num
            else:
                bounds[v] = [num, num]

    maximize = bool(sections["max"])
    obj_toks = _tokens(" ".join(sections["max"] if maximize else sections["min"]))
    if len(obj_toks) >= 2 and obj_toks[1] == ("op", ":"):
        obj_toks = obj_toks[2:]
    obj_terms, obj_const = _parse_linear(obj_toks)

    rows = []
    toks = _tokens(" ".join(sections["st"]))
    i = 0
    while i < len(toks):
        row_name = None
        if i + 1 < len(toks) and toks[i][0] == "name" and toks[i + 1] == ("op", ":"):
            row_name = demangle(toks[i][1])
            i += 2
        j = i
        while j < len(toks) and not (toks[j][0] == "op" and toks[j][1] in _SENSE_OF):
            j += 1
        if j + 1 >= len(toks):
            raise ModelError("constraint without sense/rhs")
        terms, const = _parse_linear(toks[i:j])
        rhs = _to_float(toks[j + 1][1]) if toks[j + 1][0] == "num" else None
        if rhs is None:
            raise ModelError("constraint rhs must be a number")
        rows.append((row_name, terms, _SENSE_OF[toks[j][1]], rhs - const))
        i = j + 2

    for v, _ in obj_terms:
        declare(v)
    for _, terms, _, _ in rows:
        for v, _ in terms:
            declare(v)
    for v in kinds:
        declare(v)

    model = MilpModel(name)
    for v in order:
        kind = kinds.get(v, VarKind.CONTINUOUS)
        lo, hi = bounds[v]
        model.add_var(v, kind, lo, hi)
    sgn = -1.0 if maximize else 1.0
    model.set_objective([(model.var_index(v), sgn * a) for v, a in obj_terms], sgn * obj_const)
    for row_name, terms, sense, rhs in rows:
        model.add_constraint([(model.var_index(v), a) for v, a in terms], sense, rhs, row_name)
    return model


def format_solution(model: MilpModel, sol: MipSolution) -> str:
    lines = [f"status {Status(sol.status).value}"]
    for v in model.variables:
        if v.name in sol.values:
            lines.append(f"{mangle(v.name)} {format(sol.values[v.name], '.17g')}")
    return "\n".join(lines) + "\n"


def import_solution(model: MilpModel, text: str) -> MipSolution:
    """Parse ``status <status>`` followed by ``name value`` lines."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ModelError("empty solution listing")
    head = lines[0].split()
    if len(head) < 2 or head[0].lower() != "status":
        raise ModelError("solution listing must start with 'status <value>'")
    try:
        status = Status(head[1].lower())
    except ValueError:
        raise ModelError(f"unknown status {head[1]!r}") from None
    values = {v.name: 0.0 for v in model.variables}
    unknown = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 2:
            raise ModelError(f"malformed solution line {ln!r}")
        name = demangle(parts[0])
        if not model.has_var(name):
            unknown.append(name)
            continue
        values[name] = float(parts[1])
    if unknown:
        raise ModelError(f"unknown variable names in solution: {', '.join(unknown[:5])}")
    sol = MipSolution(status)
    if status in (Status.OPTIMAL, Status.NODE_LIMIT, Status.TIME_LIMIT) and len(lines) > 1:
        sol.values = values
        sol.vector = np.array([values[v.name] for v in model.variables])
        sol.objective = model.evaluate(sol.vector)
    return sol
