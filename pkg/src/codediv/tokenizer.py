"""Structural tokenization of Python source.

Source text is reduced to a stream of structural token kinds drawn from a
closed vocabulary: identifiers collapse to a single IDENT kind, literal
values collapse to per-type literal kinds, and comments never reach the
stream. Two programs that differ only in naming, literal values, comments,
or whitespace therefore produce equal streams, which is the property the
similarity layer builds on.

Well-formed source is parsed with the standard ``ast`` module and walked in
source order. Generated code is frequently malformed; in that case a plain
lexer pass still normalizes identifiers and literals but emits none of the
block begin/end kinds, and the resulting stream is flagged ``fallback`` so
reports can count degraded inputs.
"""

import ast
import io
import keyword
import tokenize as _stdtok
from dataclasses import dataclass

import numpy as np

# Closed vocabulary. Order is the wire format for token ids: append only,
# never reorder within a major version.
VOCABULARY = (
    "MODULE_BEGIN",
    "MODULE_END",
    "DEF_BEGIN",
    "DEF_END",
    "CLASS_BEGIN",
    "CLASS_END",
    "IF_BEGIN",
    "ELIF",
    "ELSE",
    "IF_END",
    "FOR_BEGIN",
    "FOR_END",
    "WHILE_BEGIN",
    "WHILE_END",
    "TRY_BEGIN",
    "EXCEPT",
    "FINALLY",
    "TRY_END",
    "WITH_BEGIN",
    "WITH_END",
    "COMP_BEGIN",
    "COMP_END",
    "ASSIGN",
    "AUG_ASSIGN",
    "APPLY",
    "RETURN",
    "YIELD",
    "RAISE",
    "ASSERT",
    "IMPORT",
    "LAMBDA",
    "BINOP",
    "UNARYOP",
    "COMPARE",
    "SUBSCRIPT",
    "ATTR",
    "LIT_NUM",
    "LIT_STR",
    "LIT_BOOLNONE",
    "IDENT",
    "DEL",
    "SCOPE",
    "BREAK_CONT",
    "PASS",
)

KIND_IDS = {kind: i for i, kind in enumerate(VOCABULARY)}


def token_vocabulary():
    """Return the closed vocabulary of structural token kinds, in id order."""
    return list(VOCABULARY)


@dataclass(frozen=True)
class StructuralToken:
    kind: str
    line: int  # 1-based
    col: int  # 0-based


class TokenStream:
    """Ordered structural tokens for one program.

    Equality is defined over the kind sequence only: positions are debug
    metadata and change under renaming or reformatting, while the kind
    sequence is the representation the matcher compares.
    """

    __slots__ = ("tokens", "fallback", "_ids")

    def __init__(self, tokens, fallback=False):
        self.tokens = tuple(tokens)
        self.fallback = bool(fallback)
        self._ids = None

    @property
    def kinds(self):
        return tuple(t.kind for t in self.tokens)

    @property
    def ids(self):
        """Vocabulary ids as a contiguous int array (cached)."""
        if self._ids is None:
            arr = np.fromiter(
                (KIND_IDS[t.kind] for t in self.tokens), dtype=np.intc, count=len(self.tokens)
            )
            self._ids = arr
        return self._ids

    @property
    def source_len_tokens(self):
        return len(self.tokens)

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        if not isinstance(other, TokenStream):
            return NotImplemented
        return self.kinds == other.kinds

    def __hash__(self):
        return hash(self.kinds)

    def __repr__(self):
        flag = ", fallback" if self.fallback else ""
        return f"TokenStream({len(self.tokens)} tokens{flag})"


def format_debug(stream: TokenStream) -> str:
    """Debug form consumed by the CLI: one ``kind line:col`` row per token."""
    return "\n".join(f"{t.kind} {t.line}:{t.col}" for t in stream.tokens)


def tokenize(source: str) -> TokenStream:
    """Tokenize Python source into a structural TokenStream.

    Never raises on bad input: unparseable source degrades to the lexer
    fallback and the stream is flagged.
    """
    try:
        tree = ast.parse(source)
    except (SyntaxError, ValueError, MemoryError, RecursionError):
        return TokenStream(_lex_fallback(source), fallback=True)
    emitter = _StructuralEmitter()
    emitter.emit_module(tree, source)
    return TokenStream(emitter.out, fallback=False)


class _StructuralEmitter:
    """Walk an ast in source order, appending structural tokens."""

    def __init__(self):
        self.out = []

    def tok(self, kind, node, end=False):
        if end:
            line = getattr(node, "end_lineno", None) or node.lineno
            col = getattr(node, "end_col_offset", None) or node.col_offset
        else:
            line, col = node.lineno, node.col_offset
        self.out.append(StructuralToken(kind, line, col))

    def emit_module(self, tree, source):
        self.out.append(StructuralToken("MODULE_BEGIN", 1, 0))
        for stmt in tree.body:
            self.stmt(stmt)
        n_lines = source.count("\n") + 1
        self.out.append(StructuralToken("MODULE_END", n_lines, len(source.rsplit("\n", 1)[-1])))

    # -- statements ---------------------------------------------------

    def stmt(self, node):
        meth = getattr(self, "stmt_" + type(node).__name__, None)
        if meth is not None:
            meth(node)
        else:
            # Unknown statement kind: keep walking its expressions.
            for child in ast.iter_child_nodes(node):
                if isinstance(child, ast.expr):
                    self.expr(child)
                elif isinstance(child, ast.stmt):
                    self.stmt(child)

    def suite(self, body):
        for stmt in body:
            self.stmt(stmt)

    def stmt_FunctionDef(self, node):
        self._funcdef(node)

    def stmt_AsyncFunctionDef(self, node):
        self._funcdef(node)

    def _funcdef(self, node):
        for dec in node.decorator_list:
            self.expr(dec)
        self.tok("DEF_BEGIN", node)
        self.arguments(node.args)
        self.suite(node.body)
        self.tok("DEF_END", node, end=True)

    def stmt_ClassDef(self, node):
        for dec in node.decorator_list:
            self.expr(dec)
        self.tok("CLASS_BEGIN", node)
        for base in self._in_source_order(node.bases, [kw.value for kw in node.keywords]):
            self.expr(base)
        self.suite(node.body)
        self.tok("CLASS_END", node, end=True)

    def stmt_If(self, node):
        self.tok("IF_BEGIN", node)
        self.expr(node.test)
        self.suite(node.body)
        self._if_tail(node)
        self.tok("IF_END", node, end=True)

    def _if_tail(self, node):
        orelse = node.orelse
        if not orelse:
            return
        # `elif` parses as a nested If aligned with its parent keyword;
        # an indented `if` under a real `else:` sits at a deeper column.
        if (
            len(orelse) == 1
            and isinstance(orelse[0], ast.If)
            and orelse[0].col_offset == node.col_offset
        ):
            child = orelse[0]
            self.tok("ELIF", child)
            self.expr(child.test)
            self.suite(child.body)
            self._if_tail(child)
        else:
            self.tok("ELSE", orelse[0])
            self.suite(orelse)

    def stmt_For(self, node):
        self._loop(node, "FOR_BEGIN", "FOR_END", target=node.target)

    def stmt_AsyncFor(self, node):
        self._loop(node, "FOR_BEGIN", "FOR_END", target=node.target)

    def stmt_While(self, node):
        self._loop(node, "WHILE_BEGIN", "WHILE_END")

    def _loop(self, node, begin, end, target=None):
        self.tok(begin, node)
        if target is not None:
            self.expr(target)
            self.expr(node.iter)
        else:
            self.expr(node.test)
        self.suite(node.body)
        if node.orelse:
            self.tok("ELSE", node.orelse[0])
            self.suite(node.orelse)
        self.tok(end, node, end=True)

    def stmt_Try(self, node):
        self.tok("TRY_BEGIN", node)
        self.suite(node.body)
        for handler in node.handlers:
            self.tok("EXCEPT", handler)
            if handler.type is not None:
                self.expr(handler.type)
            self.suite(handler.body)
        if node.orelse:
            self.tok("ELSE", node.orelse[0])
            self.suite(node.orelse)
        if node.finalbody:
            self.tok("FINALLY", node.finalbody[0])
            self.suite(node.finalbody)
        self.tok("TRY_END", node, end=True)

    def stmt_With(self, node):
        self._with(node)

    def stmt_AsyncWith(self, node):
        self._with(node)

    def _with(self, node):
        self.tok("WITH_BEGIN", node)
        for item in node.items:
            self.expr(item.context_expr)
            if item.optional_vars is not None:
                self.expr(item.optional_vars)
        self.suite(node.body)
        self.tok("WITH_END", node, end=True)

    def stmt_Assign(self, node):
        self.tok("ASSIGN", node)
        for target in node.targets:
            self.expr(target)
        self.expr(node.value)

    def stmt_AnnAssign(self, node):
        # Annotations are flattened away; a bare declaration keeps its target.
        if node.value is not None:
            self.tok("ASSIGN", node)
            self.expr(node.target)
            self.expr(node.value)
        else:
            self.expr(node.target)

    def stmt_AugAssign(self, node):
        self.tok("AUG_ASSIGN", node)
        self.expr(node.target)
        self.expr(node.value)

    def stmt_Return(self, node):
        self.tok("RETURN", node)
        if node.value is not None:
            self.expr(node.value)

    def stmt_Raise(self, node):
        self.tok("RAISE", node)
        if node.exc is not None:
            self.expr(node.exc)
        if node.cause is not None:
            self.expr(node.cause)

    def stmt_Assert(self, node):
        self.tok("ASSERT", node)
        self.expr(node.test)
        if node.msg is not None:
            self.expr(node.msg)

    def stmt_Import(self, node):
        self.tok("IMPORT", node)
        for alias in node.names:
            self.out.append(
                StructuralToken(
                    "IDENT", getattr(alias, "lineno", node.lineno), getattr(alias, "col_offset", node.col_offset)
                )
            )

    def stmt_ImportFrom(self, node):
        self.stmt_Import(node)

    def stmt_Delete(self, node):
        self.tok("DEL", node)
        for target in node.targets:
            self.expr(target)

    def stmt_Global(self, node):
        self.tok("SCOPE", node)

    def stmt_Nonlocal(self, node):
        self.tok("SCOPE", node)

    def stmt_Pass(self, node):
        self.tok("PASS", node)

    def stmt_Break(self, node):
        self.tok("BREAK_CONT", node)

    def stmt_Continue(self, node):
        self.tok("BREAK_CONT", node)

    def stmt_Expr(self, node):
        self.expr(node.value)

    def stmt_Match(self, node):
        # match/case is folded onto the if/elif kinds: each case arm is a
        # guarded branch. Pattern internals are not tokenized.
        self.tok("IF_BEGIN", node)
        self.expr(node.subject)
        for case in node.cases:
            self.tok("ELIF", case.pattern)
            if case.guard is not None:
                self.expr(case.guard)
            self.suite(case.body)
        self.tok("IF_END", node, end=True)

    # -- expressions --------------------------------------------------

    def expr(self, node):
        meth = getattr(self, "expr_" + type(node).__name__, None)
        if meth is not None:
            meth(node)
        else:
            for child in ast.iter_child_nodes(node):
                if isinstance(child, ast.expr):
                    self.expr(child)

    def expr_Name(self, node):
        self.tok("IDENT", node)

    def expr_Constant(self, node):
        value = node.value
        if value is True or value is False or value is None or value is Ellipsis:
            self.tok("LIT_BOOLNONE", node)
        elif isinstance(value, (int, float, complex)):
            self.tok("LIT_NUM", node)
        else:
            self.tok("LIT_STR", node)

    def expr_JoinedStr(self, node):
        # f-strings are opaque string literals; pre-3.12 subexpression
        # positions are unreliable and would break position monotonicity.
        self.tok("LIT_STR", node)

    def expr_Call(self, node):
        self.tok("APPLY", node)
        self.expr(node.func)
        # `f(x=1, *y)` is legal: merge positional and keyword arguments by
        # source position to keep the stream monotone.
        for arg in self._in_source_order(node.args, [kw.value for kw in node.keywords]):
            self.expr(arg)

    def expr_Attribute(self, node):
        self.tok("ATTR", node)
        self.expr(node.value)

    def expr_Subscript(self, node):
        self.tok("SUBSCRIPT", node)
        self.expr(node.value)
        self.expr(node.slice)

    def expr_Slice(self, node):
        for part in (node.lower, node.upper, node.step):
            if part is not None:
                self.expr(part)

    def expr_BinOp(self, node):
        self.tok("BINOP", node)
        self.expr(node.left)
        self.expr(node.right)

    def expr_BoolOp(self, node):
        self.tok("BINOP", node)
        for value in node.values:
            self.expr(value)

    def expr_UnaryOp(self, node):
        self.tok("UNARYOP", node)
        self.expr(node.operand)

    def expr_Compare(self, node):
        self.tok("COMPARE", node)
        self.expr(node.left)
        for comp in node.comparators:
            self.expr(comp)

    def expr_Lambda(self, node):
        self.tok("LAMBDA", node)
        self.arguments(node.args)
        self.expr(node.body)

    def expr_IfExp(self, node):
        # Ternaries are flattened; children in source order.
        self.expr(node.body)
        self.expr(node.test)
        self.expr(node.orelse)

    def expr_Dict(self, node):
        for key, value in zip(node.keys, node.values):
            if key is not None:  # None key is a **mapping splat
                self.expr(key)
            self.expr(value)

    def expr_ListComp(self, node):
        self._comp(node, [node.elt])

    def expr_SetComp(self, node):
        self._comp(node, [node.elt])

    def expr_GeneratorExp(self, node):
        self._comp(node, [node.elt])

    def expr_DictComp(self, node):
        self._comp(node, [node.key, node.value])

    def _comp(self, node, heads):
        self.tok("COMP_BEGIN", node)
        for head in heads:
            self.expr(head)
        for gen in node.generators:
            self.expr(gen.target)
            self.expr(gen.iter)
            for cond in gen.ifs:
                self.expr(cond)
        self.tok("COMP_END", node, end=True)

    def expr_Yield(self, node):
        self.tok("YIELD", node)
        if node.value is not None:
            self.expr(node.value)

    def expr_YieldFrom(self, node):
        self.tok("YIELD", node)
        self.expr(node.value)

    def expr_Await(self, node):
        self.expr(node.value)

    def expr_NamedExpr(self, node):
        self.tok("ASSIGN", node)
        self.expr(node.target)
        self.expr(node.value)

    def expr_Starred(self, node):
        self.expr(node.value)

    # -- shared -------------------------------------------------------

    @staticmethod
    def _in_source_order(*node_lists):
        merged = [n for nodes in node_lists for n in nodes]
        merged.sort(key=lambda n: (n.lineno, n.col_offset))
        return merged

    def arguments(self, args):
        positional = list(args.posonlyargs) + list(args.args)
        defaults = list(args.defaults)
        # Defaults right-align with the positional tail; interleave to keep
        # token positions in source order.
        pad = [None] * (len(positional) - len(defaults))
        for arg, default in zip(positional, pad + defaults):
            self.tok("IDENT", arg)
            if default is not None:
                self.expr(default)
        if args.vararg is not None:
            self.tok("IDENT", args.vararg)
        for arg, default in zip(args.kwonlyargs, args.kw_defaults):
            self.tok("IDENT", arg)
            if default is not None:
                self.expr(default)
        if args.kwarg is not None:
            self.tok("IDENT", args.kwarg)


# Lexer fallback tables. Structure keywords are dropped entirely: without a
# parse there is no reliable begin/end pairing.
_SKIPPED_KEYWORDS = frozenset(
    "def class if elif else for while try except finally with as async await match case".split()
)
_KEYWORD_KINDS = {
    "return": "RETURN",
    "yield": "YIELD",
    "raise": "RAISE",
    "assert": "ASSERT",
    "import": "IMPORT",
    "from": "IMPORT",
    "lambda": "LAMBDA",
    "del": "DEL",
    "global": "SCOPE",
    "nonlocal": "SCOPE",
    "break": "BREAK_CONT",
    "continue": "BREAK_CONT",
    "pass": "PASS",
    "True": "LIT_BOOLNONE",
    "False": "LIT_BOOLNONE",
    "None": "LIT_BOOLNONE",
    "and": "BINOP",
    "or": "BINOP",
    "not": "UNARYOP",
    "in": "COMPARE",
    "is": "COMPARE",
}
_OP_KINDS = {
    "=": "ASSIGN",
    ":=": "ASSIGN",
    "==": "COMPARE",
    "!=": "COMPARE",
    "<": "COMPARE",
    ">": "COMPARE",
    "<=": "COMPARE",
    ">=": "COMPARE",
    "~": "UNARYOP",
    ".": "ATTR",
    "[": "SUBSCRIPT",
    "...": "LIT_BOOLNONE",
}
for _op in ("+", "-", "*", "/", "//", "%", "**", "@", "&", "|", "^", "<<", ">>"):
    _OP_KINDS[_op] = "BINOP"
    _OP_KINDS[_op + "="] = "AUG_ASSIGN"


def _lex_fallback(source: str):
    """Best-effort lexical pass for source that does not parse.

    Token errors truncate the stream instead of aborting; whatever lexed
    cleanly before the error is kept.
    """
    out = []
    gen = _stdtok.generate_tokens(io.StringIO(source).readline)
    try:
        for tok in gen:
            kind = None
            if tok.type == _stdtok.NAME:
                if keyword.iskeyword(tok.string) or keyword.issoftkeyword(tok.string):
                    if tok.string in _SKIPPED_KEYWORDS:
                        continue
                    kind = _KEYWORD_KINDS.get(tok.string)
                else:
                    kind = "IDENT"
            elif tok.type == _stdtok.NUMBER:
                kind = "LIT_NUM"
            elif tok.type == _stdtok.STRING:
                kind = "LIT_STR"
            elif tok.type == _stdtok.OP:
                kind = _OP_KINDS.get(tok.string)
            if kind is not None:
                out.append(StructuralToken(kind, tok.start[0], tok.start[1]))
    except (_stdtok.TokenError, IndentationError, SyntaxError, ValueError):
        pass
    return out
