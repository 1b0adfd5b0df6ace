"""Canonical pretty-printer; ``parse(pretty(p)) == p`` for every program."""

from __future__ import annotations

from . import nodes as ast

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def num(value: float, is_int: bool = False) -> str:
    if is_int:
        return str(int(value))
    text = repr(float(value))
    if text in ("inf", "-inf", "nan"):
        return text
    if "." not in text and "e" not in text:
        text += ".0"
    return text


def expr(e, prec: int = 0) -> str:
    if isinstance(e, ast.Num):
        text = num(e.value, e.is_int)
        return f"({text})" if text.startswith("-") else text
    if isinstance(e, ast.Name):
        return e.id
    if isinstance(e, ast.AttrRef):
        return f"{e.owner}.{e.name}"
    if isinstance(e, ast.Time):
        return "time"
    if isinstance(e, ast.VarRef):
        return f"var({e.node})"
    if isinstance(e, ast.Unary):
        text = f"{e.op}{expr(e.operand, 3)}"
        return f"({text})" if prec > 3 else text
    if isinstance(e, ast.Binary):
        p = _PREC[e.op]
        if e.op == "^":
            text = f"{expr(e.left, 5)}^{expr(e.right, 3)}"
        else:
            # left-associative: the right operand needs parens at equal precedence
            text = f"{expr(e.left, p)} {e.op} {expr(e.right, p + 1)}"
        return f"({text})" if p < prec else text
    if isinstance(e, ast.Call):
        return f"{expr(e.func, 9)}({', '.join(expr(a) for a in e.args)})"
    if isinstance(e, ast.Lambda):
        text = f"lambd({', '.join(e.params)}): {expr(e.body)}"
        return f"({text})" if prec > 0 else text
    if isinstance(e, ast.IfElse):
        text = f"if {boolean(e.test)} then {expr(e.then)} else {expr(e.orelse)}"
        return f"({text})" if prec > 0 else text
    raise TypeError(f"not an expression: {e!r}")


def boolean(b, prec: int = 0) -> str:
    if isinstance(b, ast.BoolLit):
        return "true" if b.value else "false"
    if isinstance(b, ast.Compare):
        return f"{expr(b.left)} {b.op} {expr(b.right)}"
    if isinstance(b, ast.Not):
        return f"not {boolean(b.operand, 3)}"
    if isinstance(b, ast.BoolOp):
        p = 1 if b.op == "or" else 2
        text = f"{boolean(b.left, p)} {b.op} {boolean(b.right, p + 1)}"
        return f"({text})" if p < prec else text
    return expr(b)


def sigtype(t: ast.SigType) -> str:
    return t.describe()


def _match(c: ast.MatchClause) -> str:
    hi = "inf" if c.hi is None else str(c.hi)
    head = f"match({c.lo}, {hi}, {c.edge_type}"
    if c.direction == "out":
        return f"{head}, {c.node}->[{', '.join(c.peers)}])"
    if c.direction == "in":
        return f"{head}, [{', '.join(c.peers)}]->{c.node})"
    return head + ")"


def statement(s, indent: str = "") -> list[str]:
    if isinstance(s, ast.TypeDecl):
        if s.category == "node":
            head = "node-type"
            if s.order is not None:
                head += f"({s.order}, {s.reduction})"
        else:
            head = "edge-type fixed" if s.fixed else "edge-type"
        head += f" {s.name}"
        if s.parent:
            head += f" inherits {s.parent}"
        if not s.body:
            return [f"{indent}{head} {{}}"]
        lines = [f"{indent}{head} {{"]
        for item in s.body:
            if isinstance(item, ast.AttrDecl):
                lines.append(f"{indent}  attr {item.name} = {sigtype(item.type)}")
            else:
                lines.append(f"{indent}  init({item.index}) {sigtype(item.type)}")
        lines.append(f"{indent}}}")
        return lines
    if isinstance(s, ast.ProdRule):
        text = (f"prod({s.edge}:{s.edge_type}, {s.src}:{s.src_type}->{s.dst}:{s.dst_type}) "
                f"{s.target} <= {expr(s.expr)}")
        return [indent + text + (" off" if s.off else "")]
    if isinstance(s, ast.Cstr):
        lines = [f"{indent}cstr {s.node}:{s.node_type} {{"]
        for v in s.exprs:
            lines.append(f"{indent}  {v.kind} " + " ".join(_match(c) for c in v.clauses))
        lines.append(f"{indent}}}")
        return lines
    if isinstance(s, ast.ExternFunc):
        return [f"{indent}extern-func {s.name}"]
    if isinstance(s, ast.NodeSt):
        return [f"{indent}node {s.name} : {s.type}"]
    if isinstance(s, ast.EdgeSt):
        return [f"{indent}edge<{s.src}, {s.dst}> {s.name} : {s.type}"]
    if isinstance(s, ast.SetAttr):
        return [f"{indent}set-attr {s.owner}.{s.attr} = {expr(s.value)}"]
    if isinstance(s, ast.SetInit):
        return [f"{indent}set-init {s.node}({s.index}) = {expr(s.value)}"]
    if isinstance(s, ast.SetEdge):
        return [f"{indent}set-edge {s.edge} when {boolean(s.when)}"]
    raise TypeError(f"not a statement: {s!r}")


def program(p: ast.SourceProgram) -> str:
    out: list[str] = []
    for stmt in p.statements:
        if isinstance(stmt, ast.LangDef):
            head = f"lang {stmt.name}"
            if stmt.parent:
                head += f" inherits {stmt.parent}"
            out.append(head + " {")
            for s in stmt.body:
                out.extend(statement(s, "  "))
            out.append("}")
        else:
            args = ", ".join(f"{a.key} : {sigtype(a.type)}" for a in stmt.args)
            out.append(f"func {stmt.name}({args}) uses {stmt.lang} {{")
            for s in stmt.body:
                out.extend(statement(s, "  "))
            out.append("}")
        out.append("")
    return "\n".join(out)
