"""Recursive-descent parser for MiniC.

Grammar (EBNF)::

    unit      = { comment | toplevel } ;
    toplevel  = [ "static" ] [ "const" ] base declarator
                ( "(" params ")" block | [ "=" expr ] ";" ) ;
    base      = "int" | "char" | "void" ;
    declarator= { "*" } IDENT { "[" INT "]" } ;
    params    = [ "void" | param { "," param } ] ;
    param     = [ "const" ] base { "*" } IDENT [ "[" [ INT ] "]" ] ;
    block     = "{" { comment | stmt } "}" ;
    stmt      = block | decl | "if" "(" expr ")" body [ "else" body ]
              | "while" "(" expr ")" body
              | "for" "(" [ expr ] ";" [ expr ] ";" [ expr ] ")" body
              | "return" [ expr ] ";" | "break" ";" | "continue" ";"
              | expr ";" ;
    decl      = [ "const" ] base declarator [ "=" expr ] ";" ;
    body      = block | stmt ;
    expr      = assign ;
    assign    = logor [ ( "=" | "+=" | "-=" ) assign ] ;
    logor     = logand { "||" logand } ;   (and so on down the C ladder:
                && , == != , < <= > >= , + - , * / % )
    unary     = ( "-" | "!" | "*" | "&" | "++" | "--" ) unary
              | "(" typename ")" unary | "sizeof" "(" typename ")"
              | "sizeof" unary | postfix ;
    postfix   = primary { "[" expr "]" | "++" | "--" } ;
    primary   = INT | CHAR | STRING | "NULL" | IDENT [ "(" [ expr { "," expr } ] ")" ]
              | "(" expr ")" ;
    typename  = [ "const" ] base { "*" } ;

Bodies of if/while/for are always stored as blocks, so braced and
unbraced spellings produce the same tree.
"""

from . import ast
from .errors import MiniCSyntaxError, TopLevelInStatementContext
from .lexer import tokenize
from .types import CType

BASE_TYPES = ("int", "char", "void")

BINARY_LEVELS = [
    ("||",),
    ("&&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("+", "-"),
    ("*", "/", "%"),
]


class Parser:
    def __init__(self, text):
        self.toks = tokenize(text)
        self.pos = 0
        self.next_id = 0

    # token helpers

    def peek_raw(self):
        return self.toks[self.pos]

    def _skip_comments(self):
        while self.toks[self.pos].kind == "comment":
            self.pos += 1

    def peek(self, offset=0):
        self._skip_comments()
        i = self.pos
        while True:
            if self.toks[i].kind != "comment":
                if offset == 0:
                    return self.toks[i]
                offset -= 1
            i += 1
            if i >= len(self.toks):
                return self.toks[-1]

    def advance(self):
        self._skip_comments()
        tok = self.toks[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def at(self, text, kind=None):
        tok = self.peek()
        return tok.text == text and tok.kind in ((kind,) if kind else ("punct", "kw"))

    def accept(self, text):
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text):
        tok = self.peek()
        if not self.at(text):
            shown = tok.text or "end of input"
            raise MiniCSyntaxError(f"expected {text!r}, found {shown!r}", tok.line, tok.col, text)
        return self.advance()

    def error(self, expected):
        tok = self.peek()
        shown = tok.text or "end of input"
        raise MiniCSyntaxError(f"expected {expected}, found {shown!r}", tok.line, tok.col, expected)

    def mk(self, cls, tok, *args, **kwargs):
        node = cls(self.next_id, tok.line, tok.col, *args, **kwargs)
        self.next_id += 1
        return node

    def comment_node(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return self.mk(ast.Comment, tok, tok.text)

    # types

    def at_type_start(self, offset=0):
        tok = self.peek(offset)
        return tok.kind == "kw" and tok.text in BASE_TYPES + ("const", "static")

    def base_type(self):
        tok = self.peek()
        if tok.kind == "kw" and tok.text in BASE_TYPES:
            self.advance()
            return tok.text
        self.error("a type")

    def declarator(self, base):
        stars = 0
        while self.accept("*"):
            stars += 1
        tok = self.peek()
        if tok.kind != "ident":
            self.error("an identifier")
        self.advance()
        dims = []
        while self.accept("["):
            n = self.peek()
            if n.kind != "int":
                self.error("an array length")
            self.advance()
            if n.value <= 0:
                raise MiniCSyntaxError("array length must be positive", n.line, n.col)
            dims.append(n.value)
            self.expect("]")
        return CType(base, tuple(dims) + ("*",) * stars), tok

    def typename(self):
        self.accept("const")
        base = self.base_type()
        stars = 0
        while self.accept("*"):
            stars += 1
        return CType(base, ("*",) * stars)

    # top level

    def unit(self, path="<input>"):
        toplevels = []
        while True:
            if self.peek_raw().kind == "comment":
                toplevels.append(self.comment_node())
                continue
            if self.peek_raw().kind == "eof":
                break
            toplevels.append(self.toplevel())
        return ast.SourceUnit(path, toplevels, self.next_id)

    def toplevel(self):
        start = self.peek()
        static = bool(self.accept("static"))
        const = bool(self.accept("const"))
        if not static and self.at("static"):
            self.advance()
            static = True
        base = self.base_type()
        ty, name_tok = self.declarator(base)
        if self.at("("):
            if ty.is_array:
                raise MiniCSyntaxError("function cannot return an array", name_tok.line, name_tok.col)
            self.advance()
            params = self.params()
            self.expect(")")
            body = self.block()
            return self.mk(ast.FuncDef, start, ty, name_tok.text, params, body, static)
        init = None
        if self.accept("="):
            init = self.expr()
        self.expect(";")
        return self.mk(ast.Decl, start, ty, name_tok.text, init, const, static)

    def params(self):
        params = []
        if self.at(")"):
            return params
        if self.at("void") and self.peek(1).text == ")":
            self.advance()
            return params
        while True:
            start = self.peek()
            const = bool(self.accept("const"))
            base = self.base_type()
            stars = 0
            while self.accept("*"):
                stars += 1
            name = self.peek()
            if name.kind != "ident":
                self.error("a parameter name")
            self.advance()
            if self.accept("["):
                # array parameters decay to pointers
                if self.peek().kind == "int":
                    self.advance()
                self.expect("]")
                stars += 1
            params.append(self.mk(ast.Param, start, CType(base, ("*",) * stars), name.text, const))
            if not self.accept(","):
                return params

    # statements

    def block(self):
        start = self.expect("{")
        stmts = self.stmt_list(until="}")
        self.expect("}")
        return self.mk(ast.Block, start, stmts)

    def stmt_list(self, until):
        stmts = []
        while True:
            raw = self.peek_raw()
            if raw.kind == "comment":
                stmts.append(self.comment_node())
                continue
            if raw.kind == "eof" or (until and raw.kind == "punct" and raw.text == until):
                return stmts
            stmts.append(self.statement())

    def body(self):
        if self.at("{"):
            return self.block()
        tok = self.peek()
        stmt = self.statement()
        return self.mk(ast.Block, tok, [stmt])

    def statement(self):
        tok = self.peek()
        if self.at("{"):
            return self.block()
        if self.at_type_start():
            if self.at("static"):
                raise MiniCSyntaxError("static locals are not supported", tok.line, tok.col)
            const = bool(self.accept("const"))
            base = self.base_type()
            ty, name_tok = self.declarator(base)
            if self.at("("):
                raise TopLevelInStatementContext("function definition inside a block", tok.line, tok.col)
            init = None
            if self.accept("="):
                init = self.expr()
            self.expect(";")
            return self.mk(ast.Decl, tok, ty, name_tok.text, init, const)
        if self.accept("if"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            then = self.body()
            orelse = self.body() if self.accept("else") else None
            return self.mk(ast.If, tok, cond, then, orelse)
        if self.accept("while"):
            self.expect("(")
            cond = self.expr()
            self.expect(")")
            return self.mk(ast.While, tok, cond, self.body())
        if self.accept("for"):
            self.expect("(")
            if self.at_type_start():
                self.error("an expression (declarations in for headers are not supported)")
            init = None if self.at(";") else self.expr()
            self.expect(";")
            cond = None if self.at(";") else self.expr()
            self.expect(";")
            step = None if self.at(")") else self.expr()
            self.expect(")")
            return self.mk(ast.For, tok, init, cond, step, self.body())
        if self.accept("return"):
            value = None if self.at(";") else self.expr()
            self.expect(";")
            return self.mk(ast.Return, tok, value)
        if self.accept("break"):
            self.expect(";")
            return self.mk(ast.Break, tok)
        if self.accept("continue"):
            self.expect(";")
            return self.mk(ast.Continue, tok)
        if tok.kind == "eof":
            self.error("a statement")
        expr = self.expr()
        self.expect(";")
        return self.mk(ast.ExprStmt, tok, expr)

    # expressions

    def expr(self):
        return self.assign()

    def assign(self):
        left = self.binary(0)
        tok = self.peek()
        if tok.kind == "punct" and tok.text in ("=", "+=", "-="):
            self.advance()
            value = self.assign()
            return self.mk(ast.Assign, tok, tok.text, left, value)
        return left

    def binary(self, level):
        if level == len(BINARY_LEVELS):
            return self.unary()
        left = self.binary(level + 1)
        while True:
            tok = self.peek()
            if tok.kind == "punct" and tok.text in BINARY_LEVELS[level]:
                self.advance()
                right = self.binary(level + 1)
                left = self.mk(ast.Binary, tok, tok.text, left, right)
            else:
                return left

    def unary(self):
        tok = self.peek()
        if tok.kind == "punct" and tok.text in ("-", "!", "*", "&"):
            self.advance()
            return self.mk(ast.Unary, tok, tok.text, self.unary())
        if tok.kind == "punct" and tok.text in ("++", "--"):
            self.advance()
            return self.mk(ast.IncDec, tok, tok.text, True, self.unary())
        if self.at("(") and self.at_type_start(1):
            self.advance()
            ty = self.typename()
            self.expect(")")
            return self.mk(ast.Cast, tok, ty, self.unary())
        if self.accept("sizeof"):
            if self.at("(") and self.at_type_start(1):
                self.advance()
                ty = self.typename()
                self.expect(")")
                return self.mk(ast.SizeOf, tok, ty, None)
            return self.mk(ast.SizeOf, tok, None, self.unary())
        return self.postfix()

    def postfix(self):
        node = self.primary()
        while True:
            tok = self.peek()
            if self.accept("["):
                index = self.expr()
                self.expect("]")
                node = self.mk(ast.Index, tok, node, index)
            elif tok.kind == "punct" and tok.text in ("++", "--"):
                self.advance()
                node = self.mk(ast.IncDec, tok, tok.text, False, node)
            else:
                return node

    def primary(self):
        tok = self.peek()
        if tok.kind == "int":
            self.advance()
            return self.mk(ast.IntLit, tok, tok.value)
        if tok.kind == "char":
            self.advance()
            value = tok.value - 256 if tok.value > 127 else tok.value
            return self.mk(ast.IntLit, tok, value, tok.text)
        if tok.kind == "str":
            self.advance()
            value = tok.value
            # adjacent literals concatenate
            while self.peek().kind == "str":
                value += self.advance().value
            return self.mk(ast.StrLit, tok, value)
        if self.accept("NULL"):
            return self.mk(ast.NullLit, tok)
        if tok.kind == "ident":
            self.advance()
            if self.accept("("):
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.accept(","):
                        args.append(self.expr())
                self.expect(")")
                return self.mk(ast.Call, tok, tok.text, args)
            return self.mk(ast.Ident, tok, tok.text)
        if self.accept("("):
            inner = self.expr()
            self.expect(")")
            return inner
        self.error("an expression")


def parse(text, path="<input>"):
    """Parse a whole MiniC source unit."""
    return Parser(text).unit(path)


def parse_statements(text):
    """Parse a sequence of statements (comments included)."""
    p = Parser(text)
    stmts = p.stmt_list(until=None)
    return stmts


def parse_toplevels(text):
    return parse(text).toplevels
