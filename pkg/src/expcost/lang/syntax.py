"""Core abstract syntax of RandML.

Nodes are immutable with a cached structural hash, so they can be used as
dictionary keys (configurations are memoized by the engine and the checker).
Values are a syntactic subset of expressions: literals, locations, ``rec``
functions, and pairs/injections of values.
"""
from __future__ import annotations

from typing import Optional

_EMPTY: frozenset = frozenset()

ARITH_OPS = ("+", "-", "*", "quot", "rem")
COMPARE_OPS = ("=", "<", "<=")
BINOPS = ARITH_OPS + COMPARE_OPS


class Expr:
    __slots__ = ("_h", "_fv", "_locs", "_val")
    __match_args__: tuple = ()

    def key(self) -> tuple:
        raise NotImplementedError

    def children(self) -> tuple:
        return ()

    def rebuild(self, kids) -> Expr:
        return self

    def with_child(self, i: int, e: Expr) -> Expr:
        kids = list(self.children())
        kids[i] = e
        return self.rebuild(kids)

    @property
    def is_value(self) -> bool:
        return self._val

    @property
    def has_locs(self) -> bool:
        return self._locs

    @property
    def fv(self) -> frozenset:
        fv = self._fv
        if fv is None:
            fv = self._compute_fv()
            self._fv = fv
        return fv

    def _compute_fv(self) -> frozenset:
        acc = _EMPTY
        for k in self.children():
            kf = k.fv
            if kf:
                acc = acc | kf if acc else kf
        return acc

    def __hash__(self) -> int:
        return self._h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(self) is not type(other) or self._h != other._h:
            return False
        return self.key() == other.key()

    def __ne__(self, other) -> bool:
        return not self.__eq__(other)

    def __repr__(self) -> str:
        from .pretty import pretty

        return f"<{type(self).__name__} {pretty(self)}>"

    def size(self) -> int:
        return 1 + sum(k.size() for k in self.children())


def _leaf(node: Expr, h: int, locs: bool = False) -> None:
    node._h = h
    node._fv = _EMPTY
    node._locs = locs
    node._val = True


class Int(Expr):
    __slots__ = ("n",)
    __match_args__ = ("n",)

    def __init__(self, n: int):
        self.n = n
        _leaf(self, hash(("Int", n)))

    def key(self):
        return (self.n,)


class Bool(Expr):
    __slots__ = ("b",)
    __match_args__ = ("b",)

    def __init__(self, b: bool):
        self.b = bool(b)
        _leaf(self, hash(("Bool", self.b)))

    def key(self):
        return (self.b,)


class Unit(Expr):
    __slots__ = ()

    def __init__(self):
        _leaf(self, hash("Unit"))

    def key(self):
        return ()


class Loc(Expr):
    """A heap location: cell ``off`` of allocation block ``block``."""

    __slots__ = ("block", "off")
    __match_args__ = ("block", "off")

    def __init__(self, block: int, off: int = 0):
        self.block = block
        self.off = off
        _leaf(self, hash(("Loc", block, off)), locs=True)

    def key(self):
        return (self.block, self.off)


class Var(Expr):
    __slots__ = ("name",)
    __match_args__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._h = hash(("Var", name))
        self._fv = frozenset((name,))
        self._locs = False
        self._val = False

    def key(self):
        return (self.name,)


class Rec(Expr):
    """``rec f x = body``; ``f`` is ``None`` for anonymous functions."""

    __slots__ = ("f", "x", "body")
    __match_args__ = ("f", "x", "body")

    def __init__(self, f: Optional[str], x: Optional[str], body: Expr):
        self.f = f
        self.x = x
        self.body = body
        self._h = hash(("Rec", f, x, body._h))
        self._fv = None
        self._locs = body._locs
        self._val = True

    def key(self):
        return (self.f, self.x, self.body)

    def children(self):
        return (self.body,)

    def rebuild(self, kids):
        (b,) = kids
        return self if b is self.body else Rec(self.f, self.x, b)

    def _compute_fv(self):
        fv = self.body.fv
        if self.f in fv or self.x in fv:
            fv = fv - {self.f, self.x}
        return fv


class App(Expr):
    __slots__ = ("fn", "arg")
    __match_args__ = ("fn", "arg")

    def __init__(self, fn: Expr, arg: Expr):
        self.fn = fn
        self.arg = arg
        self._h = hash(("App", fn._h, arg._h))
        self._fv = None
        self._locs = fn._locs or arg._locs
        self._val = False

    def key(self):
        return (self.fn, self.arg)

    def children(self):
        return (self.fn, self.arg)

    def rebuild(self, kids):
        a, b = kids
        return self if (a is self.fn and b is self.arg) else App(a, b)


class BinOp(Expr):
    __slots__ = ("op", "left", "right")
    __match_args__ = ("op", "left", "right")

    def __init__(self, op: str, left: Expr, right: Expr):
        self.op = op
        self.left = left
        self.right = right
        self._h = hash(("BinOp", op, left._h, right._h))
        self._fv = None
        self._locs = left._locs or right._locs
        self._val = False

    def key(self):
        return (self.op, self.left, self.right)

    def children(self):
        return (self.left, self.right)

    def rebuild(self, kids):
        a, b = kids
        return self if (a is self.left and b is self.right) else BinOp(self.op, a, b)


class If(Expr):
    __slots__ = ("cond", "then", "else_")
    __match_args__ = ("cond", "then", "else_")

    def __init__(self, cond: Expr, then: Expr, else_: Expr):
        self.cond = cond
        self.then = then
        self.else_ = else_
        self._h = hash(("If", cond._h, then._h, else_._h))
        self._fv = None
        self._locs = cond._locs or then._locs or else_._locs
        self._val = False

    def key(self):
        return (self.cond, self.then, self.else_)

    def children(self):
        return (self.cond, self.then, self.else_)

    def rebuild(self, kids):
        a, b, c = kids
        if a is self.cond and b is self.then and c is self.else_:
            return self
        return If(a, b, c)


class Pair(Expr):
    __slots__ = ("left", "right")
    __match_args__ = ("left", "right")

    def __init__(self, left: Expr, right: Expr):
        self.left = left
        self.right = right
        self._h = hash(("Pair", left._h, right._h))
        self._fv = None
        self._locs = left._locs or right._locs
        self._val = left._val and right._val

    def key(self):
        return (self.left, self.right)

    def children(self):
        return (self.left, self.right)

    def rebuild(self, kids):
        a, b = kids
        return self if (a is self.left and b is self.right) else Pair(a, b)


class _Unary(Expr):
    __slots__ = ("e",)
    __match_args__ = ("e",)
    _tag = ""
    _value_if_inner_value = False

    def __init__(self, e: Expr):
        self.e = e
        self._h = hash((self._tag, e._h))
        self._fv = None
        self._locs = e._locs
        self._val = self._value_if_inner_value and e._val

    def key(self):
        return (self.e,)

    def children(self):
        return (self.e,)

    def rebuild(self, kids):
        (a,) = kids
        return self if a is self.e else type(self)(a)


class Fst(_Unary):
    __slots__ = ()
    _tag = "Fst"


class Snd(_Unary):
    __slots__ = ()
    _tag = "Snd"


class Inl(_Unary):
    __slots__ = ()
    _tag = "Inl"
    _value_if_inner_value = True


class Inr(_Unary):
    __slots__ = ()
    _tag = "Inr"
    _value_if_inner_value = True


class Load(_Unary):
    __slots__ = ()
    _tag = "Load"


class Tick(_Unary):
    __slots__ = ()
    _tag = "Tick"


class Rand(Expr):
    """``rand N``, optionally labelled for certificate site rules."""

    __slots__ = ("bound", "label")
    __match_args__ = ("bound", "label")

    def __init__(self, bound: Expr, label: Optional[str] = None):
        self.bound = bound
        self.label = label
        self._h = hash(("Rand", bound._h, label))
        self._fv = None
        self._locs = bound._locs
        self._val = False

    def key(self):
        return (self.bound, self.label)

    def children(self):
        return (self.bound,)

    def rebuild(self, kids):
        (a,) = kids
        return self if a is self.bound else Rand(a, self.label)


class Match(Expr):
    """``match e with inl x -> e1 | inr y -> e2 end``."""

    __slots__ = ("scrut", "lvar", "lbody", "rvar", "rbody")
    __match_args__ = ("scrut", "lvar", "lbody", "rvar", "rbody")

    def __init__(self, scrut: Expr, lvar: Optional[str], lbody: Expr,
                 rvar: Optional[str], rbody: Expr):
        self.scrut = scrut
        self.lvar = lvar
        self.lbody = lbody
        self.rvar = rvar
        self.rbody = rbody
        self._h = hash(("Match", scrut._h, lvar, lbody._h, rvar, rbody._h))
        self._fv = None
        self._locs = scrut._locs or lbody._locs or rbody._locs
        self._val = False

    def key(self):
        return (self.scrut, self.lvar, self.lbody, self.rvar, self.rbody)

    def children(self):
        return (self.scrut, self.lbody, self.rbody)

    def rebuild(self, kids):
        a, b, c = kids
        if a is self.scrut and b is self.lbody and c is self.rbody:
            return self
        return Match(a, self.lvar, b, self.rvar, c)

    def _compute_fv(self):
        lf = self.lbody.fv - {self.lvar}
        rf = self.rbody.fv - {self.rvar}
        return self.scrut.fv | lf | rf


class AllocN(Expr):
    __slots__ = ("size", "init")
    __match_args__ = ("size", "init")

    def __init__(self, size: Expr, init: Expr):
        self.size = size
        self.init = init
        self._h = hash(("AllocN", size._h, init._h))
        self._fv = None
        self._locs = size._locs or init._locs
        self._val = False

    def key(self):
        return (self.size, self.init)

    def children(self):
        return (self.size, self.init)

    def rebuild(self, kids):
        a, b = kids
        return self if (a is self.size and b is self.init) else AllocN(a, b)


class Store(Expr):
    __slots__ = ("target", "value")
    __match_args__ = ("target", "value")

    def __init__(self, target: Expr, value: Expr):
        self.target = target
        self.value = value
        self._h = hash(("Store", target._h, value._h))
        self._fv = None
        self._locs = target._locs or value._locs
        self._val = False

    def key(self):
        return (self.target, self.value)

    def children(self):
        return (self.target, self.value)

    def rebuild(self, kids):
        a, b = kids
        return self if (a is self.target and b is self.value) else Store(a, b)


class Offset(Expr):
    """``base.[index]``: location arithmetic."""

    __slots__ = ("base", "index")
    __match_args__ = ("base", "index")

    def __init__(self, base: Expr, index: Expr):
        self.base = base
        self.index = index
        self._h = hash(("Offset", base._h, index._h))
        self._fv = None
        self._locs = base._locs or index._locs
        self._val = False

    def key(self):
        return (self.base, self.index)

    def children(self):
        return (self.base, self.index)

    def rebuild(self, kids):
        a, b = kids
        return self if (a is self.base and b is self.index) else Offset(a, b)


UNIT = Unit()
TRUE = Bool(True)
FALSE = Bool(False)


def is_value(e: Expr) -> bool:
    return e._val


def lam(x: Optional[str], body: Expr) -> Rec:
    return Rec(None, x, body)


def let(x: Optional[str], e1: Expr, e2: Expr) -> App:
    return App(Rec(None, x, e2), e1)


def seq(e1: Expr, e2: Expr) -> App:
    return let(None, e1, e2)


def flip(label: Optional[str] = None) -> BinOp:
    return BinOp("=", Rand(Int(1), label), Int(1))


def list_value(items) -> Expr:
    """Encode a Python sequence of ints as a RandML list (``inl ()`` / ``inr (h, t)``)."""
    out: Expr = Inl(UNIT)
    for x in reversed(list(items)):
        out = Inr(Pair(x if isinstance(x, Expr) else Int(x), out))
    return out


def list_of_value(v: Expr) -> list | None:
    """Decode a RandML list value into a Python list of element values."""
    out = []
    while True:
        if isinstance(v, Inl):
            return out
        if isinstance(v, Inr) and isinstance(v.e, Pair):
            out.append(v.e.left)
            v = v.e.right
            continue
        return None
