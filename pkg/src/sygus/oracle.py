"""Post-processors: syntactic conformance and semantic verification.

Conformance is decided first, then semantics — counterexample search in
three tiers: exact evaluation of PBE examples, seeded bounded/sampled
search, and an optional external SMT solver spoken to over SMT-LIB2
text on stdin/stdout.
"""

from __future__ import annotations

import random
import shlex
import subprocess
from dataclasses import dataclass, field

from .core import (
    Apply,
    BOOL,
    Grammar,
    Hole,
    INT,
    Let,
    Lit,
    Sort,
    STRING,
    Term,
    Var,
    substitute_targets,
)
from .semantics import Evaluator, default_value, eval_constraints, solution_interpretations
from .sexpr import HexTok, IntTok, SList, StrTok, Symbol, parse_sexprs


@dataclass(frozen=True)
class Verdict:
    kind: str  # "valid" | "counterexample" | "nonconformant" | "unknown"
    point: dict = None
    path: tuple = ()
    reason: str = ""


def Valid():
    return Verdict("valid")


def Counterexample(point):
    return Verdict("counterexample", point=point)


def NonConformant(path):
    return Verdict("nonconformant", path=tuple(path))


def Unknown(reason):
    return Verdict("unknown", reason=reason)


@dataclass
class VerifyConfig:
    int_bound: int = 64
    exhaustive_cap: int = 200_000
    samples: int = 10_000
    seed: int = 0
    smt_cmd: object = None  # argv list or command string
    smt_timeout: float = 30.0
    string_pool_cap: int = 200
    string_sample_len: int = 10


# ---------------------------------------------------------------------------
# Syntactic conformance


def _match(template, term, derivable):
    if isinstance(template, Hole):
        return derivable(template.nonterminal, term)
    if isinstance(template, (Var, Lit)):
        return template == term
    if isinstance(template, Apply):
        if not (isinstance(term, Apply) and term.op == template.op and len(term.args) == len(template.args)):
            return False
        return all(_match(a, b, derivable) for a, b in zip(template.args, term.args))
    if isinstance(template, Let):
        if not (isinstance(term, Let) and len(term.bindings) == len(template.bindings)):
            return False
        for (n1, e1), (n2, e2) in zip(template.bindings, term.bindings):
            if n1 != n2 or not _match(e1, e2, derivable):
                return False
        return _match(template.body, term.body, derivable)
    return False


def check_conformance(term: Term, grammar: Grammar) -> Verdict:
    """Membership of `term` in the grammar's language, by memoized
    top-down derivation matching."""
    memo = {}
    in_progress = set()

    def derivable(nt, t):
        key = (nt, id(t))
        if key in memo:
            return memo[key]
        if key in in_progress:
            return False  # alias cycle without consuming a node
        in_progress.add(key)
        ok = any(_match(tmpl, t, derivable) for tmpl in grammar.prods(nt))
        in_progress.discard(key)
        memo[key] = ok
        return ok

    if derivable(grammar.start, term):
        return Valid()
    return NonConformant(_offending_path(grammar, grammar.start, term, derivable))


def _offending_path(grammar, nt, term, derivable):
    """Best-effort path to a subterm no production can derive."""
    if isinstance(term, Apply):
        for tmpl in grammar.prods(nt):
            if isinstance(tmpl, Hole):
                if not derivable(tmpl.nonterminal, term):
                    continue
            if (
                isinstance(tmpl, Apply)
                and tmpl.op == term.op
                and len(tmpl.args) == len(term.args)
            ):
                for i, (ta, a) in enumerate(zip(tmpl.args, term.args)):
                    if isinstance(ta, Hole) and not derivable(ta.nonterminal, a):
                        return (i,) + _offending_path(grammar, ta.nonterminal, a, derivable)
    return ()


# ---------------------------------------------------------------------------
# Semantic verification


def _string_constants(problem):
    out = []

    def scan(t):
        if isinstance(t, Lit) and t.sort == STRING:
            out.append(t.value)
        elif isinstance(t, Apply):
            for a in t.args:
                scan(a)
        elif isinstance(t, Let):
            for _, e in t.bindings:
                scan(e)
            scan(t.body)

    for c in problem.constraints:
        scan(c)
    for m in problem.macros:
        scan(m.body)
    for t in problem.targets:
        for _, templates in t.grammar.productions:
            for tmpl in templates:
                scan(tmpl)
    return out


_PRINTABLE = "".join(chr(c) for c in range(32, 127))


def _value_pool(sort: Sort, problem, cfg, rng):
    if sort == BOOL:
        return [False, True]
    if sort == INT:
        return list(range(-cfg.int_bound, cfg.int_bound + 1))
    if sort.kind == "BitVec":
        w = sort.width
        mask = (1 << w) - 1
        vals = {0, 1, mask}
        for i in (1, 2, 3, 4, 7, 8, 15, 16, 31, 32, w - 1):
            if i < w:
                vals.add(1 << i)
                vals.add((1 << i) - 1)
        for _ in range(32):
            vals.add(rng.getrandbits(w))
        return sorted(vals)
    if sort == STRING:
        consts = _string_constants(problem)
        pool = list(dict.fromkeys(consts))
        for s in consts:
            if len(s) <= 16:
                for i in range(len(s)):
                    for j in range(i + 1, len(s) + 1):
                        pool.append(s[i:j])
            else:
                pool.extend([s[:4], s[-4:]])
        for a in consts[:8]:
            for b in consts[:8]:
                pool.append(a + b)
        pool.append("")
        for _ in range(32):
            n = rng.randrange(cfg.string_sample_len + 1)
            pool.append("".join(rng.choice(_PRINTABLE) for _ in range(n)))
        pool = list(dict.fromkeys(pool))
        return pool[: cfg.string_pool_cap]
    raise ValueError(f"no value pool for sort {sort}")


def _sample_value(sort, pool, rng):
    if sort == INT:
        scale = rng.choice((2, 8, 64, 4096, 10**6))
        return rng.randint(-scale, scale)
    if sort.kind == "BitVec":
        return rng.choice(pool) if rng.random() < 0.5 else rng.getrandbits(sort.width)
    return rng.choice(pool)


def _search_points(universals, problem, cfg):
    """Deterministic candidate points: a bounded exhaustive grid (shrunk to
    fit the cap), then seeded independent samples."""
    import itertools

    rng = random.Random(cfg.seed)
    names = [n for n, _ in universals]
    sorts = [s for _, s in universals]
    pools = [_value_pool(s, problem, cfg, rng) for s in sorts]

    grids = list(pools)
    while True:
        size = 1
        for g in grids:
            size *= len(g)
        if size <= cfg.exhaustive_cap:
            break
        # Shrink: halve the integer radius (down to 1), truncate the rest.
        shrunk = False
        for i, s in enumerate(sorts):
            if s == INT:
                radius = max(v for v in grids[i])
                if radius > 1:
                    r = max(1, radius // 2)
                    grids[i] = list(range(-r, r + 1))
                    shrunk = True
            elif len(grids[i]) > 4:
                grids[i] = grids[i][:4]
                shrunk = True
        if not shrunk:
            grids = None
            break
    if grids is not None:
        for combo in itertools.product(*grids):
            yield dict(zip(names, combo))
    for _ in range(cfg.samples):
        yield {
            n: _sample_value(s, pool, rng) for n, s, pool in zip(names, sorts, pools)
        }


def _derived_choices(constraints, sub, problem):
    """Variables defined by equality subterms, with candidate defining
    expressions over the remaining (base) variables.

    Transition relations constrain primed variables through conjuncts
    like `(= i! (- i 1))`; falsifying points must satisfy them, and
    independent sampling essentially never does.  Returns a list of
    (name, [Term, ...]) for the derived variables, in a deterministic
    order.
    """
    from .core import expand_macros as _expand, free_vars

    names = [n for n, _ in sub]
    macro_map = problem.macro_map()
    defs = {}

    def scan(t):
        if isinstance(t, Apply):
            if t.op == "=" and len(t.args) == 2:
                for a, b in ((t.args[0], t.args[1]), (t.args[1], t.args[0])):
                    if isinstance(a, Var) and a.name in names and not (
                        isinstance(b, Var) and b.name == a.name
                    ):
                        bucket = defs.setdefault(a.name, [])
                        if b not in bucket:
                            bucket.append(b)
            for x in t.args:
                scan(x)
        elif isinstance(t, Let):
            for _, e in t.bindings:
                scan(e)
            scan(t.body)

    for c in constraints:
        scan(_expand(c, macro_map))

    base = set(names)
    derived = []
    # Variables with a non-variable defining expression first: given
    # (= i! (- i 1)) and (= i! i), derive i! from i rather than i from i!.
    order = sorted(
        names,
        key=lambda v: (
            not any(not isinstance(e, Var) for e in defs.get(v, ())),
            names.index(v),
        ),
    )
    for v in order:
        cands = [e for e in defs.get(v, []) if free_vars(e) <= (base - {v})]
        if cands:
            base.discard(v)
            derived.append((v, cands[:3]))
    # Defining expressions may not mention other derived variables.
    changed = True
    while changed:
        changed = False
        for i, (v, exprs) in enumerate(derived):
            kept = [e for e in exprs if free_vars(e) <= base]
            if not kept:
                base.add(v)
                del derived[i]
                changed = True
                break
            derived[i] = (v, kept)
    # Bound the combination count (each variable also gets a free choice).
    while derived:
        n = 1
        for _, exprs in derived:
            n *= len(exprs) + 1
        if n <= 64:
            break
        base.add(derived[-1][0])
        derived.pop()
    return derived


def _search_group(problem, ev, constraints, sub, cfg):
    """Tier-2 search for one group of constraints sharing free variables.

    Returns a falsifying point dict or None.
    """
    import itertools
    from dataclasses import replace

    derived = _derived_choices(constraints, sub, problem)
    if not derived:
        for point in _search_points(sub, problem, cfg):
            for c in constraints:
                if not ev.eval(c, point):
                    return point
        return None

    derived_names = {n for n, _ in derived}
    base = [(n, s) for n, s in sub if n not in derived_names]
    sorts = dict(sub)
    combos = list(itertools.product(*[exprs + [None] for _, exprs in derived]))
    # Spread the same point budget across the combinations.
    sub_cfg = replace(
        cfg,
        exhaustive_cap=max(1000, cfg.exhaustive_cap // len(combos)),
        samples=max(1000, cfg.samples // len(combos)),
    )
    rng = random.Random(cfg.seed + 1)
    pools = {n: _value_pool(sorts[n], problem, cfg, rng) for n in derived_names}
    for point in _search_points(base, problem, sub_cfg):
        for combo in combos:
            full = dict(point)
            ok = True
            for (v, _), choice in zip(derived, combo):
                if choice is None:
                    full[v] = _sample_value(sorts[v], pools[v], rng)
                else:
                    try:
                        full[v] = ev.eval(choice, full)
                    except Exception:
                        ok = False
                        break
            if not ok:
                continue
            for c in constraints:
                if not ev.eval(c, full):
                    return full
    return None


def verify(problem, solution, cfg=None) -> Verdict:
    """Search for a falsifying point; `solution` maps target name ->
    (param names, body)."""
    cfg = cfg or VerifyConfig()
    interp = solution_interpretations(problem, solution)
    ev = Evaluator(interp)

    from .engine import extract_pbe_points

    examples = None
    try:
        examples = extract_pbe_points(problem)
    except Exception:
        examples = None
    if examples is not None:
        for c in problem.constraints:
            if not ev.eval(c, {}):
                return _checked_cex(problem, solution, {})
        return Valid()

    if not problem.universals:
        for c in problem.constraints:
            if not ev.eval(c, {}):
                return _checked_cex(problem, solution, {})
        return Valid()

    # Each constraint is searched over its own free variables only; a
    # constraint touching 4 of 8 universals gets the full grid radius in
    # those 4 dimensions instead of a radius diluted by the other 4.
    from .core import free_vars

    groups = {}
    for c in problem.constraints:
        fv = free_vars(c)
        key = frozenset(n for n, _ in problem.universals if n in fv)
        groups.setdefault(key, []).append(c)
    defaults = {n: default_value(s) for n, s in problem.universals}
    for key, cs in groups.items():
        sub = [(n, s) for n, s in problem.universals if n in key]
        cex = _search_group(problem, ev, cs, sub, cfg)
        if cex is not None:
            full = dict(defaults)
            full.update(cex)
            return _checked_cex(problem, solution, full)

    if cfg.smt_cmd:
        return external_check(problem, solution, cfg)
    return Unknown("unverified-beyond-bound")


def _checked_cex(problem, solution, point):
    assert not eval_constraints(problem, solution, point), "counterexample does not falsify"
    return Counterexample(point)


# ---------------------------------------------------------------------------
# External solver over SMT-LIB2 text


def _smt_sort(sort: Sort) -> str:
    if sort.kind == "BitVec":
        return f"(_ BitVec {sort.width})"
    return sort.kind


def build_smt_script(problem, solution) -> str:
    """SMT-LIB2 script whose unsatisfiability proves the solution valid."""
    from .frontend import emit_term

    lines = ["(set-logic ALL)"]
    for n, s in problem.universals:
        lines.append(f"(declare-const {n} {_smt_sort(s)})")
    for m in problem.macros:
        params = " ".join(f"({pn} {_smt_sort(ps)})" for pn, ps in m.params)
        from .frontend import emit_term as _e

        lines.append(f"(define-fun {m.name} ({params}) {_smt_sort(m.ret)} {_e(m.body)})")
    sol = {k: (v[0], v[1]) for k, v in solution.items()}
    names = problem.target_names()
    subbed = [substitute_targets(c, sol, names) for c in problem.constraints]
    if len(subbed) == 1:
        body = emit_term(subbed[0])
    else:
        body = "(and " + " ".join(emit_term(c) for c in subbed) + ")"
    lines.append(f"(assert (not {body}))")
    lines.append("(check-sat)")
    lines.append("(get-model)")
    return "\n".join(lines) + "\n"


def _model_value(sx):
    if isinstance(sx, IntTok):
        return sx.value
    if isinstance(sx, HexTok):
        return sx.value
    if isinstance(sx, StrTok):
        return sx.value
    if isinstance(sx, Symbol):
        if sx.name == "true":
            return True
        if sx.name == "false":
            return False
    if (
        isinstance(sx, SList)
        and len(sx.items) == 2
        and isinstance(sx.items[0], Symbol)
        and sx.items[0].name == "-"
        and isinstance(sx.items[1], IntTok)
    ):
        return -sx.items[1].value
    raise ValueError(f"unparsable model value {sx!r}")


def parse_model(text, universals):
    """Extract a Point from a solver's get-model output."""
    point = {}
    sorts = dict(universals)
    items = []
    for sx in parse_sexprs(text):
        if isinstance(sx, SList):
            inner = sx.items
            if inner and isinstance(inner[0], Symbol) and inner[0].name == "model":
                inner = inner[1:]
            items.extend(inner)
    for sx in items:
        if not (
            isinstance(sx, SList)
            and len(sx.items) == 5
            and isinstance(sx.items[0], Symbol)
            and sx.items[0].name == "define-fun"
            and isinstance(sx.items[1], Symbol)
        ):
            continue
        name = sx.items[1].name
        if name in sorts:
            point[name] = _model_value(sx.items[4])
    for n, s in universals:
        point.setdefault(n, default_value(s))
    return point


def external_check(problem, solution, cfg=None) -> Verdict:
    """Ask the configured SMT solver; Valid on unsat, Counterexample on a
    model that re-checks, Unknown otherwise."""
    cfg = cfg or VerifyConfig()
    if not cfg.smt_cmd:
        return Unknown("no external solver configured")
    argv = cfg.smt_cmd if isinstance(cfg.smt_cmd, (list, tuple)) else shlex.split(cfg.smt_cmd)
    script = build_smt_script(problem, solution)
    try:
        proc = subprocess.run(
            list(argv),
            input=script,
            capture_output=True,
            text=True,
            timeout=cfg.smt_timeout,
        )
    except subprocess.TimeoutExpired:
        return Unknown("timeout")
    except (OSError, FileNotFoundError) as e:
        return Unknown(f"io: {e}")
    answer = None
    rest_lines = []
    for line in proc.stdout.splitlines():
        stripped = line.strip()
        if answer is None and stripped in ("sat", "unsat", "unknown"):
            answer = stripped
            continue
        if answer is not None:
            rest_lines.append(line)
    if answer == "unsat":
        return Valid()
    if answer != "sat":
        return Unknown(f"solver answered {answer!r}")
    try:
        point = parse_model("\n".join(rest_lines), problem.universals)
    except Exception as e:
        return Unknown(f"unparsable model: {e}")
    if eval_constraints(problem, solution, point):
        return Unknown("model does not falsify after re-check")
    return Counterexample(point)
