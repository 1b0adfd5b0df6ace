"""Recursive-descent parser producing :mod:`ark.frontend.nodes` trees."""

from __future__ import annotations

from ..errors import ArkSyntaxError, Span
from . import nodes as ast
from .lexer import Token, tokenize

REDUCTIONS = ("sum", "mul")
COMPARE_OPS = ("<", "<=", ">", ">=", "==", "!=")


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.pos = 0

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def _peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.pos + k, len(self.tokens) - 1)]

    def _advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def _error(self, expected: set[str] | frozenset[str], tok: Token | None = None) -> ArkSyntaxError:
        tok = tok or self.tok
        found = "end of input" if tok.kind == "EOF" else repr(tok.text)
        exp = ", ".join(sorted(expected))
        return ArkSyntaxError(f"expected {exp} but found {found}", tok.span, frozenset(expected))

    def _at_op(self, *ops: str) -> bool:
        return self.tok.kind == "OP" and self.tok.text in ops

    def _expect_op(self, op: str) -> Token:
        if not self._at_op(op):
            raise self._error({repr(op)})
        return self._advance()

    def _accept_op(self, op: str) -> bool:
        if self._at_op(op):
            self._advance()
            return True
        return False

    def _peek_word(self) -> tuple[str | None, int]:
        """Return the (possibly hyphenated) word at the cursor and its token count.

        Hyphens join identifiers only when there is no whitespace around them,
        so ``set-attr`` is one word while ``a - b`` stays a subtraction.
        """
        if self.tok.kind != "IDENT":
            return None, 0
        parts = [self.tok.text]
        i = self.pos
        while True:
            dash, nxt = self.tokens[i + 1], self.tokens[i + 2] if i + 2 < len(self.tokens) else None
            if (nxt is not None and dash.kind == "OP" and dash.text == "-" and nxt.kind == "IDENT"
                    and dash.start == self.tokens[i].end and nxt.start == dash.end):
                parts.append(nxt.text)
                i += 2
            else:
                break
        return "-".join(parts), i - self.pos + 1

    def _at_word(self, *words: str) -> bool:
        word, _ = self._peek_word()
        return word in words

    def _word(self, what: str = "name") -> tuple[str, Span]:
        word, count = self._peek_word()
        if word is None:
            raise self._error({what})
        start = self.tok.span
        for _ in range(count - 1):
            self._advance()
        end = self._advance().span
        return word, Span.merge(start, end)

    def _expect_word(self, *words: str) -> Span:
        word, count = self._peek_word()
        if word not in words:
            raise self._error({repr(w) for w in words})
        return self._word()[1]

    def _accept_word(self, word: str) -> bool:
        if self._at_word(word):
            self._word()
            return True
        return False

    def _ident(self, what: str = "identifier") -> tuple[str, Span]:
        if self.tok.kind != "IDENT":
            raise self._error({what})
        tok = self._advance()
        return tok.text, tok.span

    def _int(self) -> int:
        neg = self._accept_op("-")
        if self.tok.kind != "NUMBER" or not _is_int_literal(self.tok.text):
            raise self._error({"integer"})
        value = int(self._advance().text)
        return -value if neg else value

    def _signed_number(self) -> float:
        neg = self._accept_op("-")
        if self._at_word("inf"):
            self._word()
            value = float("inf")
        elif self.tok.kind == "NUMBER":
            value = float(self._advance().text)
        else:
            raise self._error({"number"})
        return -value if neg else value

    def _span_from(self, start: Span) -> Span:
        prev = self.tokens[self.pos - 1] if self.pos > 0 else self.tok
        return Span.merge(start, prev.span)

    # -- program -----------------------------------------------------------

    def parse_program(self) -> ast.SourceProgram:
        start = self.tok.span
        stmts: list = []
        seen: dict[tuple[str, str], ast.Span] = {}
        while self.tok.kind != "EOF":
            if self._at_word("lang"):
                stmt = self.parse_lang()
                ns = "language"
            elif self._at_word("func"):
                stmt = self.parse_func()
                ns = "function"
            else:
                raise self._error({"'lang'", "'func'"})
            key = (ns, stmt.name)
            if key in seen:
                raise ArkSyntaxError(f"duplicate {ns} name {stmt.name!r} (first defined at {seen[key]})",
                                     stmt.span)
            seen[key] = stmt.span
            stmts.append(stmt)
        return ast.SourceProgram(stmts, span=Span.merge(start, self.tok.span))

    # -- language definitions ------------------------------------------------

    def parse_lang(self) -> ast.LangDef:
        start = self._expect_word("lang")
        name, _ = self._word("language name")
        parent = None
        if self._accept_word("inherits"):
            parent, _ = self._word("parent language name")
        self._expect_op("{")
        body: list = []
        while not self._at_op("}"):
            body.append(self.parse_lang_statement())
        self._expect_op("}")
        if self._accept_word("inherits"):
            if parent is not None:
                raise ArkSyntaxError("language declares 'inherits' twice", self.tokens[self.pos - 1].span)
            parent, _ = self._word("parent language name")
        return ast.LangDef(name, parent, body, span=self._span_from(start))

    def parse_lang_statement(self):
        if self._at_word("node-type", "ntyp", "edge-type", "etyp"):
            return self.parse_type_decl()
        if self._at_word("prod"):
            return self.parse_prod()
        if self._at_word("cstr"):
            return self.parse_cstr()
        if self._at_word("extern-func"):
            start = self._word()[1]
            name, _ = self._word("global check name")
            return ast.ExternFunc(name, span=self._span_from(start))
        raise self._error({"'node-type'", "'edge-type'", "'prod'", "'cstr'", "'extern-func'", "'}'"})

    def _order_reduction(self) -> tuple[int, str]:
        self._expect_op("(")
        order = self._int()
        if order < 0:
            raise ArkSyntaxError("node order must be non-negative", self.tokens[self.pos - 1].span)
        self._expect_op(",")
        red, sp = self._ident("reduction")
        if red not in REDUCTIONS:
            raise ArkSyntaxError(f"unknown reduction {red!r}; expected sum or mul", sp, frozenset(REDUCTIONS))
        self._expect_op(")")
        return order, red

    def parse_type_decl(self) -> ast.TypeDecl:
        word, start = self._word()
        category = "node" if word in ("node-type", "ntyp") else "edge"
        order = reduction = None
        fixed = False
        if category == "node" and self._at_op("("):
            order, reduction = self._order_reduction()
        if category == "edge" and self._accept_word("fixed"):
            fixed = True
        name, _ = self._ident("type name")
        if category == "node" and order is None and self._at_op("("):
            order, reduction = self._order_reduction()
        parent = None
        if self._accept_word("inherits"):
            parent, _ = self._ident("parent type name")
        self._expect_op("{")
        body: list = []
        while not self._at_op("}"):
            body.append(self.parse_attr_decl())
        self._expect_op("}")
        if self._accept_word("inherits"):
            if parent is not None:
                raise ArkSyntaxError("type declares 'inherits' twice", self.tokens[self.pos - 1].span)
            parent, _ = self._ident("parent type name")
        if category == "node" and order is None and parent is None:
            raise ArkSyntaxError(f"node type {name!r} needs (order, reduction) unless it inherits", start)
        return ast.TypeDecl(category, name, order, reduction, fixed, parent, body, span=self._span_from(start))

    def parse_attr_decl(self):
        if self._at_word("attr"):
            start = self._word()[1]
            name, _ = self._ident("attribute name")
            self._expect_op("=")
            return ast.AttrDecl(name, self.parse_sigtype(allow_const=True), span=self._span_from(start))
        if self._at_word("init", "init-val"):
            start = self._word()[1]
            self._expect_op("(")
            index = self._int()
            self._expect_op(")")
            self._accept_op("=")
            return ast.InitDecl(index, self.parse_sigtype(allow_const=True), span=self._span_from(start))
        raise self._error({"'attr'", "'init'", "'}'"})

    def parse_sigtype(self, allow_const: bool = False) -> ast.SigType:
        start = self.tok.span
        kind, sp = self._ident("datatype")
        if kind == "real":
            self._expect_op("[")
            lo = self._signed_number()
            self._expect_op(",")
            hi = self._signed_number()
            self._expect_op("]")
            mm = None
            if self._accept_word("mm"):
                self._expect_op("(")
                s0 = self._signed_number()
                self._expect_op(",")
                s1 = self._signed_number()
                self._expect_op(")")
                mm = (s0, s1)
            sig = ast.SigType("real", lo, hi, mm=mm)
        elif kind == "int":
            self._expect_op("[")
            lo = self._int()
            self._expect_op(",")
            hi = self._int()
            self._expect_op("]")
            sig = ast.SigType("int", float(lo), float(hi))
        elif kind == "lambd":
            self._expect_op("(")
            params = self._name_list(")")
            self._expect_op(")")
            sig = ast.SigType("lambd", params=params)
        else:
            raise ArkSyntaxError(f"unknown datatype {kind!r}", sp, frozenset({"real", "int", "lambd"}))
        if allow_const and self._accept_word("const"):
            sig.const = True
        sig.span = self._span_from(start)
        if sig.kind != "lambd" and sig.lo > sig.hi:
            raise ArkSyntaxError(f"empty range [{sig.lo}, {sig.hi}]", sig.span)
        if sig.mm is not None and (sig.mm[0] < 0 or sig.mm[1] < 0):
            raise ArkSyntaxError("mismatch parameters must be non-negative", sig.span)
        return sig

    def _name_list(self, close: str) -> list[str]:
        names: list[str] = []
        while not self._at_op(close):
            names.append(self._ident()[0])
            if not self._accept_op(","):
                break
        return names

    def parse_prod(self) -> ast.ProdRule:
        start = self._expect_word("prod")
        self._expect_op("(")
        edge, _ = self._ident("edge name")
        self._expect_op(":")
        edge_type, _ = self._ident("edge type")
        self._expect_op(",")
        src, _ = self._ident("source name")
        self._expect_op(":")
        src_type, _ = self._ident("source type")
        self._expect_op("->")
        dst, _ = self._ident("destination name")
        self._expect_op(":")
        dst_type, _ = self._ident("destination type")
        self._expect_op(")")
        target, _ = self._ident("production target")
        self._expect_op("<=")
        expr = self.parse_expr()
        off = self._accept_word("off")
        return ast.ProdRule(edge, edge_type, src, src_type, dst, dst_type, target, expr, off,
                            span=self._span_from(start))

    def parse_cstr(self) -> ast.Cstr:
        start = self._expect_word("cstr")
        node, _ = self._ident("node name")
        self._expect_op(":")
        node_type, _ = self._ident("node type")
        self._expect_op("{")
        exprs: list[ast.ValExpr] = []
        while not self._at_op("}"):
            if not self._at_word("acc", "rej"):
                raise self._error({"'acc'", "'rej'", "'}'"})
            kind, vstart = self._word()
            clauses = []
            while self._at_word("match"):
                clauses.append(self.parse_match())
            exprs.append(ast.ValExpr(kind, clauses, span=self._span_from(vstart)))
        self._expect_op("}")
        return ast.Cstr(node, node_type, exprs, span=self._span_from(start))

    def _atom(self) -> int | None:
        if self._accept_word("inf"):
            return None
        value = self._int()
        if value < 0:
            raise ArkSyntaxError("cardinality bounds must be non-negative", self.tokens[self.pos - 1].span)
        return value

    def parse_match(self) -> ast.MatchClause:
        start = self._expect_word("match")
        self._expect_op("(")
        lo = self._atom()
        if lo is None:
            raise ArkSyntaxError("lower cardinality bound cannot be inf", self.tokens[self.pos - 1].span)
        self._expect_op(",")
        hi = self._atom()
        self._expect_op(",")
        edge_type, _ = self._ident("edge type")
        direction, node, peers = "any", None, []
        if self._accept_op(","):
            if self._accept_op("["):
                peers = self._name_list("]")
                self._expect_op("]")
                self._expect_op("->")
                node, _ = self._ident("node name")
                direction = "in"
            else:
                node, _ = self._ident("node name")
                self._expect_op("->")
                self._expect_op("[")
                peers = self._name_list("]")
                self._expect_op("]")
                direction = "out"
        self._expect_op(")")
        span = self._span_from(start)
        if hi is not None and lo > hi:
            raise ArkSyntaxError(f"match bounds out of order ({lo} > {hi})", span)
        return ast.MatchClause(lo, hi, edge_type, direction, node, peers, span=span)

    # -- function definitions --------------------------------------------------

    def parse_func(self) -> ast.FuncDef:
        start = self._expect_word("func")
        name, _ = self._word("function name")
        self._expect_op("(")
        args: list[ast.FuncArg] = []
        while not self._at_op(")"):
            astart = self.tok.span
            aname, _ = self._ident("argument name")
            attr = None
            if self._accept_op("."):
                attr, _ = self._ident("attribute name")
            self._expect_op(":")
            sig = self.parse_sigtype()
            args.append(ast.FuncArg(aname, sig, attr, span=self._span_from(astart)))
            self._accept_op(",")
        self._expect_op(")")
        self._expect_word("uses")
        lang, _ = self._word("language name")
        self._expect_op("{")
        body: list = []
        while not self._at_op("}"):
            body.append(self.parse_func_statement())
        self._expect_op("}")
        return ast.FuncDef(name, args, lang, body, span=self._span_from(start))

    def parse_func_statement(self):
        start = self.tok.span
        if self._accept_word("node"):
            name, _ = self._ident("node name")
            self._expect_op(":")
            typ, _ = self._ident("node type")
            return ast.NodeSt(name, typ, span=self._span_from(start))
        if self._accept_word("edge"):
            self._expect_op("<")
            src, _ = self._ident("source node")
            self._expect_op(",")
            dst, _ = self._ident("destination node")
            self._expect_op(">")
            name, _ = self._ident("edge name")
            self._expect_op(":")
            typ, _ = self._ident("edge type")
            return ast.EdgeSt(src, dst, name, typ, span=self._span_from(start))
        if self._accept_word("set-attr"):
            owner, _ = self._ident("node or edge name")
            self._expect_op(".")
            attr, _ = self._ident("attribute name")
            self._expect_op("=")
            value = self.parse_expr()
            return ast.SetAttr(owner, attr, value, span=self._span_from(start))
        if self._accept_word("set-init"):
            node, _ = self._ident("node name")
            self._expect_op("(")
            index = self._int()
            self._expect_op(")")
            self._expect_op("=")
            value = self.parse_expr()
            return ast.SetInit(node, index, value, span=self._span_from(start))
        if self._at_word("set-edge", "set-switch"):
            self._word()
            edge, _ = self._ident("edge name")
            self._expect_word("when")
            cond = self.parse_bool()
            return ast.SetEdge(edge, cond, span=self._span_from(start))
        raise self._error({"'node'", "'edge'", "'set-attr'", "'set-init'", "'set-edge'", "'}'"})

    # -- expressions -------------------------------------------------------------

    def parse_expr(self):
        left = self._term()
        while self._at_op("+", "-"):
            op = self._advance().text
            right = self._term()
            left = ast.Binary(op, left, right, span=Span.merge(left.span, right.span))
        return left

    def _term(self):
        left = self._unary()
        while self._at_op("*", "/"):
            op = self._advance().text
            right = self._unary()
            left = ast.Binary(op, left, right, span=Span.merge(left.span, right.span))
        return left

    def _unary(self):
        if self._at_op("-", "+"):
            tok = self._advance()
            operand = self._unary()
            return ast.Unary(tok.text, operand, span=Span.merge(tok.span, operand.span))
        return self._power()

    def _power(self):
        base = self._postfix()
        if self._at_op("^", "**"):
            self._advance()
            exp = self._unary()
            return ast.Binary("^", base, exp, span=Span.merge(base.span, exp.span))
        return base

    def _postfix(self):
        expr = self._primary()
        if self._at_op("(") and isinstance(expr, (ast.Name, ast.AttrRef)):
            self._advance()
            args = []
            while not self._at_op(")"):
                args.append(self.parse_expr())
                if not self._accept_op(","):
                    break
            self._expect_op(")")
            expr = ast.Call(expr, args, span=self._span_from(expr.span))
        return expr

    def _primary(self):
        tok = self.tok
        if tok.kind == "NUMBER":
            self._advance()
            return ast.Num(float(tok.text), _is_int_literal(tok.text), span=tok.span)
        if tok.kind == "IDENT":
            word = tok.text
            if word == "time":
                self._advance()
                return ast.Time(span=tok.span)
            if word == "var" and self._peek().kind == "OP" and self._peek().text == "(":
                self._advance()
                self._advance()
                node, _ = self._ident("node name")
                self._expect_op(")")
                return ast.VarRef(node, span=self._span_from(tok.span))
            if word == "if":
                self._advance()
                test = self.parse_bool()
                self._expect_word("then")
                then = self.parse_expr()
                self._expect_word("else")
                orelse = self.parse_expr()
                return ast.IfElse(test, then, orelse, span=Span.merge(tok.span, orelse.span))
            if word == "lambd":
                self._advance()
                self._expect_op("(")
                params = self._name_list(")")
                self._expect_op(")")
                self._expect_op(":")
                body = self.parse_expr()
                return ast.Lambda(params, body, span=Span.merge(tok.span, body.span))
            self._advance()
            if self._at_op(".") and self._peek().kind == "IDENT":
                self._advance()
                attr = self._advance()
                return ast.AttrRef(word, attr.text, span=Span.merge(tok.span, attr.span))
            return ast.Name(word, span=tok.span)
        if self._accept_op("("):
            expr = self.parse_expr()
            self._expect_op(")")
            return expr
        raise self._error({"expression"})

    def parse_bool(self):
        left = self._bool_and()
        while self._at_word("or") or self._at_op("||"):
            self._advance()
            right = self._bool_and()
            left = ast.BoolOp("or", left, right, span=Span.merge(left.span, right.span))
        return left

    def _bool_and(self):
        left = self._bool_not()
        while self._at_word("and") or self._at_op("&&"):
            self._advance()
            right = self._bool_not()
            left = ast.BoolOp("and", left, right, span=Span.merge(left.span, right.span))
        return left

    def _bool_not(self):
        if self._at_word("not") or self._at_op("!"):
            tok = self._advance()
            operand = self._bool_not()
            return ast.Not(operand, span=Span.merge(tok.span, operand.span))
        return self._bool_atom()

    def _bool_atom(self):
        tok = self.tok
        if tok.kind == "IDENT" and tok.text in ("true", "false"):
            self._advance()
            return ast.BoolLit(tok.text == "true", span=tok.span)
        if self._at_op("("):
            saved = self.pos
            try:
                self._advance()
                inner = self.parse_bool()
                self._expect_op(")")
                if not self._at_op(*COMPARE_OPS, "+", "-", "*", "/", "^", "**"):
                    return inner
            except ArkSyntaxError:
                pass
            self.pos = saved
        left = self.parse_expr()
        if not self._at_op(*COMPARE_OPS):
            # a bare real expression; the checker reports it as a type mismatch
            return left
        op = self._advance().text
        right = self.parse_expr()
        return ast.Compare(op, left, right, span=Span.merge(left.span, right.span))


def _is_int_literal(text: str) -> bool:
    return text.isdigit()


def parse(source: str) -> ast.SourceProgram:
    """Parse a complete Ark program."""
    return Parser(source).parse_program()


def parse_expression(source: str):
    """Parse a standalone real-valued expression (used when importing graphs)."""
    p = Parser(source)
    expr = p.parse_expr()
    if p.tok.kind != "EOF":
        raise p._error({"end of input"})
    return expr


def parse_bool_expression(source: str):
    p = Parser(source)
    expr = p.parse_bool()
    if p.tok.kind != "EOF":
        raise p._error({"end of input"})
    return expr
