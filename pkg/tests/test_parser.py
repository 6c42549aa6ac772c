from fractions import Fraction

import pytest

from indicial import Session, render_plain
from indicial.errors import ParseError, UnknownCommandError
from indicial.exprs import term_dummies
from indicial.numeval import random_expression
from indicial.parse import (
    Call,
    FactorNode,
    HistRef,
    Inert,
    parse_expression,
    parse_program,
)

from conftest import ev, make_rng


def test_factor_literal_full_shape():
    node = parse_expression("T([a,b],[c,i],i2,i1)")
    assert node == FactorNode(
        "T",
        (("a", False), ("b", False), ("c", True), ("i", True)),
        ("i2", "i1"),
    )


def test_factor_literal_single_list():
    node = parse_expression("F([k,l])")
    assert node == FactorNode("F", (("k", False), ("l", False)), ())


def test_factor_literal_empty_lists():
    node = parse_expression("g([],[k,a])")
    assert node == FactorNode("g", (("k", True), ("a", True)), ())


def test_lagrangian_line_parses_and_evaluates():
    session = Session()
    session.set_metric("g")
    e = ev(
        "-1/4*F([k,l],[])*F([a,b],[])*g([],[k,a])*g([],[l,b])"
        "+j([k],[])*A([l],[])*g([],[k,l])",
        session,
    )
    assert len(e.terms) == 2
    assert e.terms[0].coeff == Fraction(-1, 4)
    assert e.terms[1].coeff == 1


def test_inert_covdiff_parse():
    node = parse_expression("'covdiff(F([],[m,n]),n)")
    assert isinstance(node, Inert)
    assert node.index == "n"


def test_quote_rejected_elsewhere():
    with pytest.raises(ParseError):
        parse_expression("'contract(x([a],[]))")


def test_statement_terminators():
    statements = parse_program("imetric(g)$ x([a],[]);")
    assert [s.echo for s in statements] == [False, True]


def test_assignment_statement():
    (stmt,) = parse_program("L: x([a],[]) * y([],[a]) $")
    assert stmt.assign_name == "L"
    assert not stmt.echo


def test_missing_terminator():
    with pytest.raises(ParseError):
        parse_program("imetric(g)")


def test_comments_ignored():
    statements = parse_program("/* set up\n metric */ imetric(g)$")
    assert len(statements) == 1


def test_unknown_command_rejected():
    with pytest.raises(UnknownCommandError):
        parse_program("frobnicate(x)$")


def test_error_carries_position():
    with pytest.raises(ParseError) as err:
        parse_program("x([a],[]) ) ;")
    assert err.value.line == 1


def test_history_references():
    assert parse_expression("%") == HistRef(1)
    assert parse_expression("%th(2)") == HistRef(2)


def test_equation_parses_to_difference(session):
    e = ev("x([a],[]) = y([a],[])", session)
    assert len(e.terms) == 2
    assert e.terms[1].coeff == -1


def test_lhs_returns_expression_unchanged(session):
    assert ev("lhs(x([a],[]) = y([a],[]))", session) == ev(
        "x([a],[]) = y([a],[])", session
    )


def test_map_lambda_idiom(session):
    e = ev("map(lambda([x],'covdiff(x,m)),j([],[m]))", session)
    assert e == ev("mapcovdiff(j([],[m]),m)", session)


def test_apply_defrule_spelling():
    program = "matchdeclare(a,b)$ apply(defrule,[R,x([a],[]),y([a],[])])$"
    statements = parse_program(program)
    assert isinstance(statements[1].node, Call)
    assert statements[1].node.fn == "apply"


def test_session_dialect_program_parses():
    # dialect variations the grammar must accept: load, single-list factors,
    # predicate-style matchdeclare, apply-wrapped defrule, quoted covariant
    # derivatives, negated history references, and the map/lambda idiom
    program = """
load(indicial)$
imetric(g)$
igeowedge_flag:true$
components(F([m,n],[]),extdiff(A([m],[]),n))$
extdiff(F([m,n],[]),k);
L:ishow(-1/4*F([k,l])*F([a,b],[])*g([],[k,a])*g([],[l,b])
        +j([k],[])*A([l],[])*g([],[k,l]))$
remcomps(F)$
decsym(F,0,2,[],[anti(all)])$
matchdeclare(a,atom,b,atom)$
apply(defrule,[Maxwell,extdiff(A([a],[]),b),F([a,b],[])])$
defrule(CC,'covdiff('covdiff(F([],[a,b]),b),a),0)$
ishow(diff(L,A([m],[],n)))$
ishow(canform(contract(expand(apply1(%th(1),Maxwell)))))$
ishow(contract(diff(L,A([m],[])))+'covdiff(-%th(2),n))$
ishow(apply1(map(lambda([x],'covdiff(x,m)),lhs(%th(1))),CC))$
"""
    statements = parse_program(program)
    assert len(statements) == 15


def test_printed_factor_round_trip(session):
    e = ev("T([a,b],[c,i],i2,i1)", session)
    assert render_plain(e) == "T_{a b,i2 i1}^{c i}"
    assert ev(render_plain(e), Session()) == e


def test_mixed_variance_round_trip(session):
    e = ev("kdelta([c],[a])", session)
    text = render_plain(e)
    assert text == "kdelta_{c}^{a}"
    assert ev(text, Session()) == e


def test_inert_round_trip(session):
    e = ev("'covdiff('covdiff(F([],[m,n]),n),m)", session)
    text = render_plain(e)
    assert text == "F^{m n}_{;n m}"
    assert ev(text, Session()) == e


def test_multi_factor_inert_round_trip(session):
    e = ev("'covdiff(g([],[a,b])*phi([],[],b),a)", session)
    text = render_plain(e)
    assert text == "(g^{a b}*phi_{,b})_{;a}"
    assert ev(text, Session()) == e


def test_round_trip_on_random_corpus(sym_session):
    rng = make_rng(3)
    for i in range(60):
        free = () if i % 2 else (("u", False),)
        e = random_expression(sym_session, rng, free=free)
        text = render_plain(e)
        assert ev(text, Session()) == e, text


def test_zero_round_trip(session):
    from indicial import ZERO

    assert render_plain(ZERO) == "0"
    assert ev("0", session) == ZERO
