"""Plain-text problem dump, one line per variable and per constraint.

Format (whitespace separated, ``#`` starts a comment line)::

    sense minimize
    objective <constant> <coef> <var> <coef> <var> ...
    var <name> <lower> <upper> <continuous|binary|integer>
    con <name or -> <= | = | >= > <rhs> <coef> <var> <coef> <var> ...

Bounds use ``inf`` / ``-inf``. Variable names may not contain whitespace.
Coefficients are written with ``repr`` so a dump/load round trip is exact.
"""

from __future__ import annotations

from .problem import (
    Constraint,
    Integrality,
    LpProblem,
    MilpProblem,
    ProblemError,
    Relation,
    Sense,
    Variable,
    as_problem,
)


def _check_name(name: str) -> str:
    if not name or any(ch.isspace() for ch in name):
        raise ProblemError(f"name {name!r} cannot be written to the text format")
    return name


def dumps(p: LpProblem | MilpProblem) -> str:
    mp = as_problem(p)
    lp = mp.base
    lines = ["# energyopt problem dump v1", f"sense {lp.objective_sense.value}"]
    obj = [repr(float(lp.objective_constant))]
    for name, coef in lp.objective.items():
        obj += [repr(float(coef)), _check_name(name)]
    lines.append("objective " + " ".join(obj))
    for v in lp.variables:
        lines.append(
            f"var {_check_name(v.name)} {float(v.lower)!r} {float(v.upper)!r} {mp.kind(v.name).value}"
        )
    for con in lp.constraints:
        label = _check_name(con.name) if con.name else "-"
        terms = " ".join(f"{float(c)!r} {_check_name(n)}" for n, c in con.coeffs.items())
        lines.append(f"con {label} {Relation(con.relation).value} {float(con.rhs)!r} {terms}".rstrip())
    return "\n".join(lines) + "\n"


def _pairs(tokens: list[str], lineno: int) -> dict[str, float]:
    if len(tokens) % 2:
        raise ProblemError(f"line {lineno}: odd number of coefficient tokens")
    out: dict[str, float] = {}
    for i in range(0, len(tokens), 2):
        out[tokens[i + 1]] = out.get(tokens[i + 1], 0.0) + float(tokens[i])
    return out


def loads(text: str) -> MilpProblem:
    sense = Sense.MINIMIZE
    constant = 0.0
    objective: dict[str, float] = {}
    variables: list[Variable] = []
    kinds: dict[str, Integrality] = {}
    constraints: list[Constraint] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tok = raw.split()
        if not tok or tok[0].startswith("#"):
            continue
        try:
            head = tok[0]
            if head == "sense":
                sense = Sense(tok[1])
            elif head == "objective":
                constant = float(tok[1])
                objective = _pairs(tok[2:], lineno)
            elif head == "var":
                name, lo, hi, kind = tok[1], float(tok[2]), float(tok[3]), Integrality(tok[4])
                variables.append(Variable(name, lo, hi))
                if kind is not Integrality.CONTINUOUS:
                    kinds[name] = kind
            elif head == "con":
                name = "" if tok[1] == "-" else tok[1]
                constraints.append(
                    Constraint(_pairs(tok[4:], lineno), Relation(tok[2]), float(tok[3]), name)
                )
            else:
                raise ProblemError(f"line {lineno}: unknown record {head!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, ProblemError):
                raise
            raise ProblemError(f"line {lineno}: {exc}") from exc
    lp = LpProblem(tuple(variables), tuple(constraints), objective, sense, constant)
    mp = MilpProblem(lp, kinds)
    mp.validate()
    return mp
