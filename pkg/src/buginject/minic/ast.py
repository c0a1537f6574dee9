"""Syntax tree for MiniC.

Nodes compare by identity. Every node carries a dense integer ``id``
assigned in parse order and the (line, column) of its first token.
"""

from dataclasses import dataclass, field

from .types import CType


@dataclass(eq=False)
class Node:
    id: int
    line: int
    col: int


# expressions

@dataclass(eq=False)
class IntLit(Node):
    value: int
    # original spelling for char literals, e.g. "'c'"; None for plain ints
    char_text: str = None


@dataclass(eq=False)
class StrLit(Node):
    value: bytes


@dataclass(eq=False)
class NullLit(Node):
    pass


@dataclass(eq=False)
class Ident(Node):
    name: str


@dataclass(eq=False)
class Unary(Node):
    op: str  # one of - ! * &
    operand: Node


@dataclass(eq=False)
class Binary(Node):
    op: str
    left: Node
    right: Node


@dataclass(eq=False)
class Assign(Node):
    op: str  # = += -=
    target: Node
    value: Node


@dataclass(eq=False)
class IncDec(Node):
    op: str  # ++ or --
    prefix: bool
    target: Node


@dataclass(eq=False)
class Index(Node):
    base: Node
    index: Node


@dataclass(eq=False)
class Call(Node):
    name: str
    args: list


@dataclass(eq=False)
class Cast(Node):
    type: CType
    expr: Node


@dataclass(eq=False)
class SizeOf(Node):
    # exactly one of the two is set
    type: CType = None
    expr: Node = None


# statements

@dataclass(eq=False)
class Block(Node):
    stmts: list = field(default_factory=list)


@dataclass(eq=False)
class Decl(Node):
    type: CType
    name: str
    init: Node = None
    const: bool = False
    static: bool = False


@dataclass(eq=False)
class ExprStmt(Node):
    expr: Node


@dataclass(eq=False)
class If(Node):
    cond: Node
    then: Block
    orelse: Block = None


@dataclass(eq=False)
class While(Node):
    cond: Node
    body: Block


@dataclass(eq=False)
class For(Node):
    init: Node
    cond: Node
    step: Node
    body: Block


@dataclass(eq=False)
class Return(Node):
    value: Node = None


@dataclass(eq=False)
class Break(Node):
    pass


@dataclass(eq=False)
class Continue(Node):
    pass


@dataclass(eq=False)
class Comment(Node):
    """A comment in statement or top-level position; never executed."""
    text: str


@dataclass(eq=False)
class Probe(Node):
    """Internal check point used by validation builds; never printed."""
    key: object


# top level

@dataclass(eq=False)
class Param(Node):
    type: CType
    name: str
    const: bool = False


@dataclass(eq=False)
class FuncDef(Node):
    ret: CType
    name: str
    params: list
    body: Block
    static: bool = False


@dataclass(eq=False)
class SourceUnit:
    path: str
    toplevels: list
    node_count: int = 0


STATEMENT_TYPES = (Block, Decl, ExprStmt, If, While, For, Return, Break, Continue)


def is_statement(node):
    """Full statements are the nodes that can be hooked and targeted."""
    return isinstance(node, STATEMENT_TYPES)


def children(node):
    """Direct child nodes, in source order."""
    if isinstance(node, (IntLit, StrLit, NullLit, Ident, Break, Continue, Comment, Probe)):
        return []
    if isinstance(node, Unary):
        return [node.operand]
    if isinstance(node, Binary):
        return [node.left, node.right]
    if isinstance(node, Assign):
        return [node.target, node.value]
    if isinstance(node, IncDec):
        return [node.target]
    if isinstance(node, Index):
        return [node.base, node.index]
    if isinstance(node, Call):
        return list(node.args)
    if isinstance(node, Cast):
        return [node.expr]
    if isinstance(node, SizeOf):
        return [node.expr] if node.expr is not None else []
    if isinstance(node, Block):
        return list(node.stmts)
    if isinstance(node, Decl):
        return [node.init] if node.init is not None else []
    if isinstance(node, ExprStmt):
        return [node.expr]
    if isinstance(node, If):
        return [node.cond, node.then] + ([node.orelse] if node.orelse is not None else [])
    if isinstance(node, While):
        return [node.cond, node.body]
    if isinstance(node, For):
        return [n for n in (node.init, node.cond, node.step) if n is not None] + [node.body]
    if isinstance(node, Return):
        return [node.value] if node.value is not None else []
    if isinstance(node, Param):
        return []
    if isinstance(node, FuncDef):
        return list(node.params) + [node.body]
    raise TypeError(f"unknown node {type(node).__name__}")


def walk(node):
    """Pre-order traversal."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))
