"""Theory evaluator tests against independent reference implementations."""

import pytest
from hypothesis import given, settings, strategies as st

from sygus.core import Apply, BOOL, BV64, INT, Lit, STRING, Var
from sygus.semantics import (
    Evaluator,
    UnboundVariable,
    builtin_impl,
    default_value,
)

ev = Evaluator()


def _i(v):
    return Lit(v, INT)


def _s(v):
    return Lit(v, STRING)


def test_arith_and_ite():
    t = Apply("ite", (Apply("<", (_i(-1), _i(0)), BOOL), _i(7), _i(9)), INT)
    assert ev.eval(t, {}) == 7
    assert ev.eval(Apply("-", (_i(3),), INT), {}) == -3
    assert ev.eval(Apply("*", (_i(-7), _i(3)), INT), {}) == -21


def test_qm_via_macro():
    qm_body = Apply(
        "ite",
        (Apply("<", (Var("a", INT), _i(0)), BOOL), Var("b", INT), Var("a", INT)),
        INT,
    )
    e = Evaluator({"qm": (["a", "b"], qm_body)})
    assert e.eval(Apply("qm", (_i(-1), _i(7)), INT), {}) == 7
    assert e.eval(Apply("qm", (_i(4), _i(7)), INT), {}) == 4


def test_unbound_variable_raises():
    with pytest.raises(UnboundVariable):
        ev.eval(Var("nope", INT), {})


# --- string semantics (totalized per SMT-LIB) ------------------------------

NAME = "Nancy FreeHafer"


def test_str_at_and_substr():
    assert ev.eval(Apply("str.at", (_s(NAME), _i(0)), STRING), {}) == "N"
    assert ev.eval(Apply("str.at", (_s(NAME), _i(-1)), STRING), {}) == ""
    assert ev.eval(Apply("str.at", (_s(NAME), _i(99)), STRING), {}) == ""
    assert ev.eval(Apply("str.substr", (_s(NAME), _i(0), _i(1)), STRING), {}) == "N"
    assert ev.eval(Apply("str.substr", (_s(NAME), _i(6), _i(4)), STRING), {}) == "Free"
    assert ev.eval(Apply("str.substr", (_s(NAME), _i(-2), _i(4)), STRING), {}) == ""
    assert ev.eval(Apply("str.substr", (_s("ab"), _i(1), _i(9)), STRING), {}) == "b"


def _indexof_ref(s, t, i):
    # character-scan reference
    if i < 0 or i > len(s):
        return -1
    if t == "":
        return i
    for k in range(i, len(s) - len(t) + 1):
        if s[k : k + len(t)] == t:
            return k
    return -1


@given(
    st.text(st.sampled_from("ab c."), max_size=8),
    st.text(st.sampled_from("ab c."), max_size=3),
    st.integers(-2, 10),
)
def test_str_indexof_matches_reference(s, t, i):
    got = ev.eval(Apply("str.indexof", (_s(s), _s(t), _i(i)), INT), {})
    assert got == _indexof_ref(s, t, i)


def test_str_replace_first_occurrence_only():
    t = Apply("str.replace", (_s("abab"), _s("ab"), _s("x")), STRING)
    assert ev.eval(t, {}) == "xab"
    # empty needle prepends the replacement
    t = Apply("str.replace", (_s("abc"), _s(""), _s("Z")), STRING)
    assert ev.eval(t, {}) == "Zabc"


def test_str_conversions():
    assert ev.eval(Apply("str.to.int", (_s("42"),), INT), {}) == 42
    assert ev.eval(Apply("str.to.int", (_s("-42"),), INT), {}) == -1
    assert ev.eval(Apply("str.to.int", (_s("4a"),), INT), {}) == -1
    assert ev.eval(Apply("int.to.str", (_i(42),), STRING), {}) == "42"
    assert ev.eval(Apply("int.to.str", (_i(-1),), STRING), {}) == ""


def test_str_predicates():
    assert ev.eval(Apply("str.prefixof", (_s("Na"), _s(NAME)), BOOL), {}) is True
    assert ev.eval(Apply("str.suffixof", (_s("fer"), _s(NAME)), BOOL), {}) is True
    assert ev.eval(Apply("str.contains", (_s(NAME), _s(" ")), BOOL), {}) is True
    assert ev.eval(Apply("str.contains", (_s(" "), _s(NAME)), BOOL), {}) is False


def test_len_concat():
    t = Apply("str.len", (Apply("str.++", (_s("ab"), _s("cde")), STRING),), INT)
    assert ev.eval(t, {}) == 5


# --- bitvector semantics ----------------------------------------------------

MASK = (1 << 64) - 1


def _bv(v):
    return Lit(v & MASK, BV64)


@settings(max_examples=300)
@given(st.integers(0, MASK), st.integers(0, MASK))
def test_bv_ops_match_mod_arithmetic(a, b):
    assert ev.eval(Apply("bvadd", (_bv(a), _bv(b)), BV64), {}) == (a + b) & MASK
    assert ev.eval(Apply("bvand", (_bv(a), _bv(b)), BV64), {}) == a & b
    assert ev.eval(Apply("bvor", (_bv(a), _bv(b)), BV64), {}) == a | b
    assert ev.eval(Apply("bvxor", (_bv(a), _bv(b)), BV64), {}) == a ^ b
    assert ev.eval(Apply("bvnot", (_bv(a),), BV64), {}) == a ^ MASK
    shift = b % 64
    assert ev.eval(Apply("bvshl", (_bv(a), _bv(shift)), BV64), {}) == (a << shift) & MASK
    assert ev.eval(Apply("bvlshr", (_bv(a), _bv(shift)), BV64), {}) == a >> shift


def test_bvshl_oversized_shift_is_zero():
    assert ev.eval(Apply("bvshl", (_bv(1), _bv(64)), BV64), {}) == 0
    assert ev.eval(Apply("bvlshr", (_bv(MASK), _bv(200)), BV64), {}) == 0


@given(st.integers(0, MASK // 2))
def test_shl1_shr1_roundtrip_on_small_values(a):
    shl = builtin_impl("bvshl", BV64)
    shr = builtin_impl("bvlshr", BV64)
    assert shr(shl(a, 1), 1) == a


def test_default_values():
    assert default_value(INT) == 0
    assert default_value(BOOL) is False
    assert default_value(STRING) == ""
    assert default_value(BV64) == 0


def test_parallel_let():
    # both bindings see the outer x
    t = Apply("+", (Var("a", INT), Var("b", INT)), INT)
    from sygus.core import Let

    let = Let((("a", Var("x", INT)), ("b", Apply("+", (Var("x", INT), _i(1)), INT))), t, INT)
    assert ev.eval(let, {"x": 10}) == 21
