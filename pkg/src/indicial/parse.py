"""Tokenizer and recursive-descent parser for the script language.

Statements end with ``;`` (echoed) or ``$`` (silent).  Indexed objects are
written functionally, ``T([a,b],[c,i],i2,i1)``, or in the printed form the
renderer emits, ``T_{a b,i2 i1}^{c i}``; both parse to the same node.  An
equation ``a = b`` stands for the difference of its sides.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError, UnknownCommandError

KNOWN_CALLS = frozenset(
    {
        "load",
        "imetric",
        "idim",
        "decsym",
        "components",
        "remcomps",
        "matchdeclare",
        "defrule",
        "apply",
        "apply1",
        "ishow",
        "canform",
        "contract",
        "expand",
        "diff",
        "idiff",
        "covdiff",
        "extdiff",
        "lhs",
        "map",
        "lambda",
        "mapcovdiff",
        "euler_lagrange",
        "anti",
        "sym",
    }
)

PUNCT = set("()[]{},;$:+-*/^='_")


@dataclass(frozen=True)
class Token:
    kind: str
    value: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise ParseError("unterminated comment", line, col)
            skipped = text[i : end + 2]
            line += skipped.count("\n")
            if "\n" in skipped:
                col = len(skipped) - skipped.rfind("\n") + 1
            else:
                col += len(skipped)
            i = end + 2
            continue
        if c.isalpha():
            # An underscore joins a name only when followed by an
            # alphanumeric, so T_{a} still splits into a name and a block.
            j = i
            while j < n and (
                text[j].isalnum()
                or (text[j] == "_" and j + 1 < n and text[j + 1].isalnum())
            ):
                j += 1
            tokens.append(Token("NAME", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("NUMBER", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c == "%":
            if text.startswith("%th", i) and not (
                i + 3 < n and text[i + 3].isalnum()
            ):
                tokens.append(Token("PCTTH", "%th", line, col))
                i += 3
                col += 3
                continue
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            if j > i + 1:
                tokens.append(Token("DUMMY", text[i:j], line, col))
                col += j - i
                i = j
                continue
            tokens.append(Token("PCT", "%", line, col))
            i += 1
            col += 1
            continue
        if c in PUNCT:
            tokens.append(Token(c, c, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("EOF", "", line, col))
    return tokens


# --- syntax tree -----------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class FactorNode:
    name: str
    slots: tuple[tuple[str, bool], ...]
    derivs: tuple[str, ...]


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class HistRef:
    n: int


@dataclass(frozen=True)
class ListNode:
    items: tuple


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple


@dataclass(frozen=True)
class Inert:
    body: object
    index: str


@dataclass(frozen=True)
class Wrap:
    body: object
    indices: tuple[str, ...]


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Bin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Statement:
    node: object
    echo: bool
    assign_name: str | None = None


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def at(self, kind: str, offset: int = 0) -> bool:
        return self.peek(offset).kind == kind

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            if tok.kind == "EOF":
                raise ParseError(
                    f"unexpected end of input, expected {kind!r}", tok.line, tok.col
                )
            raise ParseError(
                f"expected {kind!r}, found {tok.value!r}", tok.line, tok.col
            )
        return self.advance()

    # -- statements --

    def parse_program(self) -> list[Statement]:
        statements = []
        while not self.at("EOF"):
            statements.append(self.parse_statement())
        return statements

    def parse_statement(self) -> Statement:
        assign_name = None
        if self.at("NAME") and self.at(":", 1):
            assign_name = self.advance().value
            self.advance()
        node = self.parse_expr()
        tok = self.peek()
        if tok.kind == ";":
            self.advance()
            echo = True
        elif tok.kind == "$":
            self.advance()
            echo = False
        else:
            raise ParseError(
                "expected ';' or '$' to end the statement", tok.line, tok.col
            )
        return Statement(node, echo, assign_name)

    # -- expressions --

    def parse_expr(self):
        left = self.parse_sum()
        if self.at("="):
            self.advance()
            right = self.parse_sum()
            return Bin("=", left, right)
        return left

    def parse_sum(self):
        node = self.parse_product()
        while self.at("+") or self.at("-"):
            op = self.advance().kind
            node = Bin(op, node, self.parse_product())
        return node

    def parse_product(self):
        node = self.parse_unary()
        while self.at("*") or self.at("/"):
            op = self.advance().kind
            node = Bin(op, node, self.parse_unary())
        return node

    def parse_unary(self):
        if self.at("-"):
            self.advance()
            return Unary("-", self.parse_unary())
        if self.at("+"):
            self.advance()
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.at("^") and not self.at("{", 1):
            self.advance()
            return Bin("^", base, self.parse_unary())
        return base

    def parse_index_label(self) -> str:
        tok = self.peek()
        if tok.kind in ("NAME", "DUMMY"):
            return self.advance().value
        raise ParseError(f"expected an index, found {tok.value!r}", tok.line, tok.col)

    def parse_atom(self):
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            return Num(Fraction(int(tok.value)))
        if tok.kind == "'":
            self.advance()
            name = self.expect("NAME")
            if name.value != "covdiff":
                raise ParseError(
                    "the quote marks only the inert covariant derivative",
                    name.line,
                    name.col,
                )
            self.expect("(")
            body = self.parse_expr()
            self.expect(",")
            index = self.parse_index_label()
            self.expect(")")
            return Inert(body, index)
        if tok.kind == "NAME":
            self.advance()
            if self.at("("):
                return self.parse_call_or_factor(tok)
            if (self.at("_") or self.at("^")) and self.at("{", 1):
                return self.parse_printed_factor(tok.value)
            return VarRef(tok.value)
        if tok.kind == "PCT":
            self.advance()
            return HistRef(1)
        if tok.kind == "PCTTH":
            self.advance()
            self.expect("(")
            n = int(self.expect("NUMBER").value)
            self.expect(")")
            return HistRef(n)
        if tok.kind == "(":
            self.advance()
            node = self.parse_expr()
            self.expect(")")
            if self.at("_") and self.at("{", 1):
                indices = self.parse_inert_block()
                return Wrap(node, tuple(indices))
            return node
        if tok.kind == "[":
            return self.parse_list()
        raise ParseError(f"unexpected token {tok.value!r}", tok.line, tok.col)

    def parse_list(self) -> ListNode:
        self.expect("[")
        items = []
        if not self.at("]"):
            items.append(self.parse_expr())
            while self.at(","):
                self.advance()
                items.append(self.parse_expr())
        self.expect("]")
        return ListNode(tuple(items))

    def parse_bracket_labels(self) -> list[str]:
        self.expect("[")
        labels = []
        if not self.at("]"):
            labels.append(self.parse_index_label())
            while self.at(","):
                self.advance()
                labels.append(self.parse_index_label())
        self.expect("]")
        return labels

    def parse_call_or_factor(self, name_tok: Token):
        self.expect("(")
        # lambda takes a parameter list, everything else with a leading
        # bracket is an indexed object
        if self.at("[") and name_tok.value != "lambda":
            cov = self.parse_bracket_labels()
            contra: list[str] = []
            derivs: list[str] = []
            saw_contra = False
            while self.at(","):
                self.advance()
                if self.at("["):
                    if saw_contra or derivs:
                        tok = self.peek()
                        raise ParseError(
                            "unexpected second index list", tok.line, tok.col
                        )
                    contra = self.parse_bracket_labels()
                    saw_contra = True
                else:
                    derivs.append(self.parse_index_label())
            self.expect(")")
            slots = tuple((lbl, False) for lbl in cov) + tuple(
                (lbl, True) for lbl in contra
            )
            return FactorNode(name_tok.value, slots, tuple(derivs))
        if name_tok.value not in KNOWN_CALLS:
            raise UnknownCommandError(
                f"unknown command {name_tok.value!r}", name_tok.line, name_tok.col
            )
        args = []
        if not self.at(")"):
            args.append(self.parse_expr())
            while self.at(","):
                self.advance()
                args.append(self.parse_expr())
        self.expect(")")
        return Call(name_tok.value, tuple(args))

    def parse_inert_block(self) -> list[str]:
        self.expect("_")
        self.expect("{")
        self.expect(";")
        indices = []
        while not self.at("}"):
            indices.append(self.parse_index_label())
        self.expect("}")
        if not indices:
            tok = self.peek()
            raise ParseError("empty inert index block", tok.line, tok.col)
        return indices

    def parse_printed_factor(self, name: str):
        slots: list[tuple[str, bool]] = []
        derivs: list[str] = []
        inert: list[str] = []
        while (self.at("_") or self.at("^")) and self.at("{", 1):
            if inert:
                tok = self.peek()
                raise ParseError(
                    "index blocks cannot follow an inert block", tok.line, tok.col
                )
            if self.at("_") and self.at(";", 2):
                inert.extend(self.parse_inert_block())
                continue
            marker = self.advance().kind
            self.expect("{")
            labels = []
            while self.at("NAME") or self.at("DUMMY"):
                labels.append(self.advance().value)
            if marker == "_":
                slots.extend((lbl, False) for lbl in labels)
                if self.at(","):
                    if derivs:
                        tok = self.peek()
                        raise ParseError(
                            "derivative indices appear twice", tok.line, tok.col
                        )
                    self.advance()
                    while self.at("NAME") or self.at("DUMMY"):
                        derivs.append(self.advance().value)
            else:
                slots.extend((lbl, True) for lbl in labels)
            self.expect("}")
        node = FactorNode(name, tuple(slots), tuple(derivs))
        if inert:
            return Wrap(node, tuple(inert))
        return node


def parse_program(text: str) -> list[Statement]:
    return Parser(text).parse_program()


def parse_expression(text: str):
    """Parse a single expression into its syntax tree."""
    parser = Parser(text)
    node = parser.parse_expr()
    tok = parser.peek()
    if tok.kind != "EOF":
        raise ParseError(f"trailing input {tok.value!r}", tok.line, tok.col)
    return node
