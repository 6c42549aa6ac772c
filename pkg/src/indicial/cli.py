"""Statement evaluator, script runner, and interactive loop."""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import algebra, calculus, rules
from .errors import (
    HistoryError,
    IndicialError,
    ParseError,
    SemanticError,
)
from .exprs import (
    Expression,
    Factor,
    Term,
    add,
    mul,
    neg,
    power,
    scalar,
    sub,
    validate,
)
from .lagrangian import FieldEquation, euler_lagrange
from .parse import (
    Bin,
    Call,
    FactorNode,
    HistRef,
    Inert,
    ListNode,
    Num,
    Statement,
    Unary,
    VarRef,
    Wrap,
    parse_program,
    tokenize,
)
from .printing import render
from .session import Session

COMMANDS = {
    "load",
    "imetric",
    "idim",
    "decsym",
    "components",
    "remcomps",
    "matchdeclare",
    "defrule",
    "apply",
}

DONE = "done"


def _as_rational(expr: Expression) -> Fraction | None:
    if expr.is_zero():
        return Fraction(0)
    if len(expr.terms) == 1 and not expr.terms[0].factors:
        return expr.terms[0].coeff
    return None


class Evaluator:
    """Executes parsed statements against a session, printing the transcript."""

    def __init__(self, session: Session | None = None, fmt: str = "plain",
                 trace: bool = False, out=None):
        self.session = session or Session()
        self.fmt = fmt
        self.trace = trace
        self.out = out if out is not None else sys.stdout
        self.stmt_no = 0

    # -- output --

    def _write(self, text: str) -> None:
        self.out.write(text + "\n")

    def render_value(self, value) -> str:
        if isinstance(value, Expression):
            return render(value, self.fmt)
        if isinstance(value, FieldEquation):
            return render(value.lhs, self.fmt)
        if isinstance(value, bool):
            return "true" if value else "false"
        return str(value)

    # -- statements --

    def execute(self, statements: list[Statement]) -> None:
        for stmt in statements:
            self.execute_statement(stmt)

    def execute_statement(self, stmt: Statement):
        self.stmt_no += 1
        if stmt.assign_name == "igeowedge_flag":
            value = self._eval_flag(stmt.node)
            self.session.set_geowedge(value)
        elif stmt.assign_name is not None:
            value = self.eval_expr(stmt.node)
            self.session.bindings[stmt.assign_name] = value
        elif isinstance(stmt.node, Call) and stmt.node.fn in COMMANDS:
            value = self.eval_command(stmt.node)
        else:
            value = self.eval_expr(stmt.node)
        self.session.record(value)
        if stmt.echo:
            self._write(f"(%o{self.stmt_no}) {self.render_value(value)}")
        return value

    def _eval_flag(self, node) -> bool:
        if isinstance(node, VarRef) and node.name in ("true", "false"):
            return node.name == "true"
        raise SemanticError("flags take the values true or false")

    # -- commands --

    @staticmethod
    def _name_arg(node, what: str) -> str:
        if isinstance(node, VarRef):
            return node.name
        raise SemanticError(f"expected a {what} name")

    def eval_command(self, node: Call):
        fn, args = node.fn, node.args
        if fn == "load":
            return DONE
        if fn == "imetric":
            if len(args) != 1:
                raise SemanticError("imetric takes one argument")
            self.session.set_metric(self._name_arg(args[0], "metric"))
            return DONE
        if fn == "idim":
            if len(args) != 1:
                raise SemanticError("idim takes one argument")
            if isinstance(args[0], Num) and args[0].value.denominator == 1:
                self.session.set_dimension(int(args[0].value))
            elif isinstance(args[0], VarRef) and args[0].name == "dim":
                self.session.dimension = None
            else:
                raise SemanticError("idim takes a positive integer or dim")
            return DONE
        if fn == "decsym":
            return self._eval_decsym(args)
        if fn == "components":
            if len(args) != 2 or not isinstance(args[0], FactorNode):
                raise SemanticError(
                    "components takes a tensor signature and a definition"
                )
            signature = Factor(args[0].name, args[0].slots, args[0].derivs)
            definition = self.eval_expr(args[1])
            rules.components(self.session, signature, definition)
            return DONE
        if fn == "remcomps":
            if len(args) != 1:
                raise SemanticError("remcomps takes one argument")
            rules.remcomps(self.session, self._name_arg(args[0], "tensor"))
            return DONE
        if fn == "matchdeclare":
            labels = []
            for arg in args:
                name = self._name_arg(arg, "metavariable")
                if name != "atom":
                    labels.append(name)
            rules.matchdeclare(self.session, labels)
            return DONE
        if fn == "defrule":
            return self._eval_defrule(args)
        if fn == "apply":
            if (
                len(args) == 2
                and isinstance(args[0], VarRef)
                and args[0].name == "defrule"
                and isinstance(args[1], ListNode)
            ):
                return self._eval_defrule(args[1].items)
            raise SemanticError("apply only wraps defrule")
        raise SemanticError(f"unhandled command {fn!r}")

    def _eval_defrule(self, args):
        if len(args) != 3:
            raise SemanticError("defrule takes a name, a pattern, a replacement")
        name = self._name_arg(args[0], "rule")
        pattern = self.eval_expr(args[1])
        replacement = self.eval_expr(args[2])
        rules.defrule(self.session, name, pattern, replacement)
        return name

    def _eval_decsym(self, args):
        if len(args) != 5:
            raise SemanticError(
                "decsym takes a name, two arities, and two block lists"
            )
        name = self._name_arg(args[0], "tensor")
        arities = []
        for arg in args[1:3]:
            if not isinstance(arg, Num) or arg.value.denominator != 1:
                raise SemanticError("decsym arities must be integers")
            arities.append(int(arg.value))

        def blocks(node):
            if not isinstance(node, ListNode):
                raise SemanticError("decsym blocks must be lists")
            specs = []
            for item in node.items:
                if not isinstance(item, Call) or item.fn not in ("sym", "anti"):
                    raise SemanticError("blocks are sym(...) or anti(...)")
                if (
                    len(item.args) == 1
                    and isinstance(item.args[0], VarRef)
                    and item.args[0].name == "all"
                ):
                    specs.append((item.fn, "all"))
                else:
                    positions = []
                    for arg in item.args:
                        if not isinstance(arg, Num) or arg.value.denominator != 1:
                            raise SemanticError("block positions must be integers")
                        positions.append(int(arg.value))
                    specs.append((item.fn, positions))
            return specs

        algebra.decsym(
            self.session, name, arities[0], arities[1],
            blocks(args[3]), blocks(args[4]),
        )
        return DONE

    # -- expressions --

    @staticmethod
    def _index_arg(node) -> str:
        if isinstance(node, VarRef):
            return node.name
        raise SemanticError("expected an index label")

    def _expr_arg(self, node) -> Expression:
        value = self.eval_expr(node)
        if not isinstance(value, Expression):
            raise SemanticError("expected a tensor expression")
        return value

    def eval_expr(self, node) -> Expression:
        session = self.session
        if isinstance(node, Num):
            return scalar(node.value)
        if isinstance(node, FactorNode):
            factor = Factor(node.name, node.slots, node.derivs)
            session.register_arity(factor.name, factor.rank)
            expr = Expression((validate(Term(Fraction(1), (factor,))),))
            return calculus.expand_components(session, expr)
        if isinstance(node, VarRef):
            bound = session.bindings.get(node.name)
            if bound is not None:
                if not isinstance(bound, Expression):
                    raise SemanticError(f"{node.name!r} is not an expression")
                return bound
            if node.name in ("true", "false"):
                raise SemanticError(f"{node.name!r} is not a tensor expression")
            # unbound bare name: a scalar symbol
            factor = Factor(node.name)
            session.register_arity(node.name, 0)
            expr = Expression((Term(Fraction(1), (factor,)),))
            return calculus.expand_components(session, expr)
        if isinstance(node, HistRef):
            value = session.recall(node.n)
            if not isinstance(value, Expression):
                raise HistoryError(
                    f"history entry %th({node.n}) is not an expression"
                )
            return value
        if isinstance(node, Unary):
            return neg(self._expr_arg(node.operand))
        if isinstance(node, Bin):
            return self._eval_bin(node)
        if isinstance(node, Inert):
            body = self._expr_arg(node.body)
            return calculus.covdiff(session, body, node.index, mode="inert")
        if isinstance(node, Wrap):
            body = self._expr_arg(node.body)
            for idx in node.indices:
                body = calculus.mapcovdiff(session, body, idx)
            return body
        if isinstance(node, Call):
            return self._eval_call(node)
        if isinstance(node, ListNode):
            raise SemanticError("a list is not an expression")
        raise SemanticError(f"cannot evaluate {type(node).__name__}")

    def _eval_bin(self, node: Bin) -> Expression:
        if node.op == "^":
            base = self._expr_arg(node.left)
            exponent = self.eval_expr(node.right)
            q = _as_rational(exponent)
            if q is None or q.denominator != 1 or q < 0:
                raise SemanticError("exponents must be nonnegative integers")
            return power(base, int(q))
        left = self._expr_arg(node.left)
        right = self._expr_arg(node.right)
        if node.op == "+":
            return add(left, right)
        if node.op == "-":
            return sub(left, right)
        if node.op == "=":
            return sub(left, right)
        if node.op == "*":
            return mul(left, right)
        if node.op == "/":
            q = _as_rational(right)
            if q is None:
                raise SemanticError("division is only defined by rational scalars")
            if q == 0:
                raise SemanticError("division by zero")
            return mul(left, scalar(Fraction(1) / q))
        raise SemanticError(f"unknown operator {node.op!r}")

    _CALL_ARITY = {
        "ishow": 1,
        "canform": 1,
        "contract": 1,
        "expand": 1,
        "lhs": 1,
        "diff": 2,
        "idiff": 2,
        "covdiff": 2,
        "extdiff": 2,
        "apply1": 2,
        "map": 2,
        "mapcovdiff": 2,
    }

    def _eval_call(self, node: Call) -> Expression:
        session = self.session
        fn, args = node.fn, node.args
        if fn in COMMANDS:
            raise SemanticError(f"{fn!r} is a command, not an expression")
        expected = self._CALL_ARITY.get(fn)
        if expected is not None and len(args) != expected:
            raise SemanticError(
                f"{fn} takes {expected} argument{'s' if expected > 1 else ''}"
            )
        if fn == "ishow":
            value = self._expr_arg(args[0])
            self._write(f"(%t{self.stmt_no}) {self.render_value(value)}")
            return value
        if fn == "canform":
            return algebra.canform(session, self._expr_arg(args[0]))
        if fn == "contract":
            return algebra.contract(session, self._expr_arg(args[0]))
        if fn == "expand":
            return algebra.expand(session, self._expr_arg(args[0]))
        if fn == "diff":
            expr = self._expr_arg(args[0])
            if isinstance(args[1], FactorNode):
                target = Factor(args[1].name, args[1].slots, args[1].derivs)
            elif isinstance(args[1], VarRef):
                target = Factor(args[1].name)
            else:
                raise SemanticError("diff differentiates by an indexed object")
            return calculus.fdiff(session, expr, target)
        if fn == "idiff":
            return calculus.idiff(
                self._expr_arg(args[0]), self._index_arg(args[1])
            )
        if fn == "covdiff":
            return calculus.covdiff(
                session, self._expr_arg(args[0]), self._index_arg(args[1]),
                mode="expanded",
            )
        if fn == "extdiff":
            return calculus.extdiff(
                session, self._expr_arg(args[0]), self._index_arg(args[1])
            )
        if fn == "apply1":
            if not isinstance(args[1], VarRef):
                raise SemanticError("apply1 takes an expression and a rule name")
            return rules.apply1(session, self._expr_arg(args[0]), args[1].name)
        if fn == "lhs":
            return self._expr_arg(args[0])
        if fn == "map":
            return self._eval_map(args)
        if fn == "mapcovdiff":
            return calculus.mapcovdiff(
                session, self._expr_arg(args[0]), self._index_arg(args[1])
            )
        if fn == "euler_lagrange":
            return self._eval_euler_lagrange(args)
        raise SemanticError(f"{fn!r} cannot appear in an expression")

    def _eval_map(self, args) -> Expression:
        if len(args) != 2:
            raise SemanticError("map takes a lambda and an expression")
        lam = args[0]
        shape_error = SemanticError(
            "map only supports lambda([x], 'covdiff(x, index))"
        )
        if not (isinstance(lam, Call) and lam.fn == "lambda" and len(lam.args) == 2):
            raise shape_error
        params, body = lam.args
        if not (
            isinstance(params, ListNode)
            and len(params.items) == 1
            and isinstance(params.items[0], VarRef)
        ):
            raise shape_error
        var = params.items[0].name
        if not (
            isinstance(body, Inert)
            and isinstance(body.body, VarRef)
            and body.body.name == var
        ):
            raise shape_error
        return calculus.mapcovdiff(
            self.session, self._expr_arg(args[1]), body.index
        )

    def _eval_euler_lagrange(self, args) -> Expression:
        if len(args) < 3 or not isinstance(args[1], FactorNode):
            raise SemanticError(
                "euler_lagrange takes a Lagrangian, a field pattern, a "
                "derivative index, and optionally a rule list"
            )
        lagrangian = self._expr_arg(args[0])
        field = Factor(args[1].name, args[1].slots, args[1].derivs)
        deriv_index = self._index_arg(args[2])
        rule_names: list[str] = []
        if len(args) == 4:
            if not isinstance(args[3], ListNode):
                raise SemanticError("the rule list must be a list of rule names")
            rule_names = [self._name_arg(item, "rule") for item in args[3].items]
        equation = euler_lagrange(
            self.session, lagrangian, field, deriv_index, rule_names
        )
        if self.trace:
            for label, stage in equation.trace:
                self._write(f"(trace) {label}: {self.render_value(stage)}")
        return equation.lhs


def evaluate_expression(text: str, session: Session | None = None) -> Expression:
    """Parse and evaluate a single expression against a session."""
    from .parse import parse_expression as _parse

    evaluator = Evaluator(session or Session())
    return evaluator.eval_expr(_parse(text))


def run_script(path: str, session: Session | None = None, fmt: str = "plain",
               trace: bool = False, out=None, err=None) -> int:
    """Execute a script file; returns the process exit status.

    Parse errors exit 1, validation and semantic errors exit 2, success 0.
    The transcript goes to standard output, diagnostics to standard error.
    """
    err = err if err is not None else sys.stderr
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        err.write(f"cannot read {path}: {exc}\n")
        return 1
    try:
        statements = parse_program(text)
    except ParseError as exc:
        err.write(f"parse error: {exc}\n")
        return 1
    evaluator = Evaluator(session, fmt=fmt, trace=trace, out=out)
    for stmt in statements:
        try:
            evaluator.execute_statement(stmt)
        except IndicialError as exc:
            err.write(
                f"statement {evaluator.stmt_no}: "
                f"{type(exc).__name__}: {exc}\n"
            )
            return 2
    return 0


def repl(session: Session | None = None, fmt: str = "plain",
         trace: bool = False) -> int:
    """Interactive loop: reads statements, keeps the session alive across
    errors, exits on quit; or end of input."""
    evaluator = Evaluator(session, fmt=fmt, trace=trace)
    buffer = ""
    while True:
        prompt = f"(%i{evaluator.stmt_no + 1}) " if not buffer else "      "
        try:
            line = input(prompt)
        except EOFError:
            print()
            return 0
        except KeyboardInterrupt:
            print()
            buffer = ""
            continue
        buffer += line + "\n"
        try:
            tokens = tokenize(buffer)
        except ParseError as exc:
            print(f"error: {exc}")
            buffer = ""
            continue
        if not any(tok.kind in (";", "$") for tok in tokens):
            continue
        text, buffer = buffer, ""
        try:
            statements = parse_program(text)
        except ParseError as exc:
            print(f"error: {exc}")
            continue
        for stmt in statements:
            if isinstance(stmt.node, VarRef) and stmt.node.name == "quit":
                return 0
            try:
                evaluator.execute_statement(stmt)
            except IndicialError as exc:
                print(f"error: {type(exc).__name__}: {exc}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="indicial",
        description="Symbolic indicial tensor algebra engine",
    )
    parser.add_argument("--script", metavar="FILE", help="run a script file")
    parser.add_argument("--repl", action="store_true", help="interactive session")
    parser.add_argument("--dim", type=int, help="fix the dimension")
    parser.add_argument(
        "--format", choices=("plain", "latex", "json"), default="plain",
        help="output rendering",
    )
    parser.add_argument(
        "--trace", action="store_true",
        help="emit the Euler-Lagrange derivation trace",
    )
    args = parser.parse_args(argv)

    session = Session()
    if args.dim is not None:
        session.set_dimension(args.dim)
    if args.script:
        return run_script(
            args.script, session, fmt=args.format, trace=args.trace
        )
    if args.repl or sys.stdin.isatty():
        return repl(session, fmt=args.format, trace=args.trace)
    parser.print_help()
    return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
