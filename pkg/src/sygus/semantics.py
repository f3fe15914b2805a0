"""Concrete evaluation of terms over LIA, 64-bit bitvectors and strings.

Partial string/int functions are totalized the SMT-LIB way: out-of-range
`str.at`/`str.substr` give "", a failed `str.indexof` or `str.to.int`
gives -1, `int.to.str` of a negative gives "", and `str.replace`
rewrites only the first occurrence.
"""

from __future__ import annotations

from .core import (
    Apply,
    BOOL,
    Hole,
    INT,
    Let,
    Lit,
    Sort,
    STRING,
    SygusError,
    Term,
    Var,
)


class UnboundVariable(SygusError):
    pass


class SortMismatch(SygusError):
    pass


def default_value(sort: Sort):
    """Seed observation value for a sort (used when no point exists yet)."""
    if sort == INT:
        return 0
    if sort == BOOL:
        return False
    if sort == STRING:
        return ""
    if sort.kind == "BitVec":
        return 0
    raise SortMismatch(f"no default value for {sort}")


def _str_at(s, i):
    if 0 <= i < len(s):
        return s[i]
    return ""


def _str_substr(s, i, n):
    if i < 0 or n < 0 or i >= len(s):
        return ""
    return s[i : i + n]


def _str_indexof(s, t, i):
    if i < 0 or i > len(s):
        return -1
    if t == "":
        return i
    j = s.find(t, i)
    return j


def _str_replace(s, t, r):
    if t == "":
        return r + s
    i = s.find(t)
    if i < 0:
        return s
    return s[:i] + r + s[i + len(t) :]


def _str_to_int(s):
    if s and all(c in "0123456789" for c in s):
        return int(s)
    return -1


def _int_to_str(i):
    return str(i) if i >= 0 else ""


def builtin_impl(op: str, sort: Sort):
    """Return a python callable implementing `op` at result sort `sort`.

    Bitvector operators close over the result width so values stay
    canonical (masked).  Raises KeyError for non-builtin operators.
    """
    if op.startswith("bv"):
        mask = (1 << sort.width) - 1
        width = sort.width
        return {
            "bvnot": lambda a: ~a & mask,
            "bvneg": lambda a: -a & mask,
            "bvand": lambda a, b: a & b,
            "bvor": lambda a, b: a | b,
            "bvxor": lambda a, b: a ^ b,
            "bvadd": lambda a, b: (a + b) & mask,
            "bvsub": lambda a, b: (a - b) & mask,
            "bvmul": lambda a, b: (a * b) & mask,
            "bvshl": lambda a, b: (a << b) & mask if b < width else 0,
            "bvlshr": lambda a, b: a >> b if b < width else 0,
            "bvashr": lambda a, b: (
                (a >> min(b, width - 1)) | (mask & (mask << (width - min(b, width - 1))))
                if a >> (width - 1)
                else a >> b if b < width else 0
            ),
        }[op]
    return _FIXED_IMPLS[op]


_FIXED_IMPLS = {
    "not": lambda a: not a,
    "and": lambda *xs: all(xs),
    "or": lambda *xs: any(xs),
    "=>": lambda a, b: (not a) or b,
    "xor": lambda a, b: a != b,
    "=": lambda *xs: all(x == xs[0] for x in xs[1:]),
    "distinct": lambda *xs: len(set(xs)) == len(xs),
    "ite": lambda c, a, b: a if c else b,
    "+": lambda *xs: sum(xs),
    "-": lambda a, b=None: -a if b is None else a - b,
    "*": lambda a, b: a * b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "str.++": lambda a, b: a + b,
    "str.len": lambda s: len(s),
    "str.at": _str_at,
    "str.substr": _str_substr,
    "str.indexof": _str_indexof,
    "str.replace": _str_replace,
    "str.prefixof": lambda a, b: b.startswith(a),
    "str.suffixof": lambda a, b: b.endswith(a),
    "str.contains": lambda a, b: b in a,
    "str.to.int": _str_to_int,
    "int.to.str": _int_to_str,
}


class Evaluator:
    """Ground-term interpreter.

    `interpretations` maps a function name to (param names, body term);
    it covers both problem macros and candidate solutions, so constraint
    checks never need syntactic substitution.
    """

    def __init__(self, interpretations=None):
        self.interpretations = dict(interpretations or {})

    def eval(self, t: Term, env: dict):
        if isinstance(t, Var):
            try:
                return env[t.name]
            except KeyError:
                raise UnboundVariable(f"unbound variable {t.name!r}") from None
        if isinstance(t, Lit):
            return t.value
        if isinstance(t, Apply):
            vals = [self.eval(a, env) for a in t.args]
            interp = self.interpretations.get(t.op)
            if interp is not None:
                params, body = interp
                return self.eval(body, dict(zip(params, vals)))
            try:
                fn = builtin_impl(t.op, t.sort)
            except KeyError:
                raise SortMismatch(f"no interpretation for operator {t.op!r}") from None
            return fn(*vals)
        if isinstance(t, Let):
            inner = dict(env)
            for name, e in t.bindings:
                inner[name] = self.eval(e, env)  # parallel let
            return self.eval(t.body, inner)
        if isinstance(t, Hole):
            raise SygusError("cannot evaluate a grammar template hole")
        raise TypeError(f"not a term: {t!r}")


def solution_interpretations(problem, solution):
    """Combine a problem's macros with a solution's target bindings.

    `solution` maps target name -> (param names, body term).
    """
    interp = problem.macro_map()
    for t in problem.targets:
        if t.name not in solution:
            from .core import UnboundTarget

            raise UnboundTarget(f"solution does not bind target {t.name!r}")
    interp.update(solution)
    return interp


def eval_constraints(problem, solution, point: dict) -> bool:
    """True iff every constraint holds at `point` under `solution`."""
    ev = Evaluator(solution_interpretations(problem, solution))
    return all(ev.eval(c, point) for c in problem.constraints)


def falsified_constraints(problem, solution, point: dict):
    """Indices of constraints that fail at `point` (diagnostic helper)."""
    ev = Evaluator(solution_interpretations(problem, solution))
    return [i for i, c in enumerate(problem.constraints) if not ev.eval(c, point)]
