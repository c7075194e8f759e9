"""Hypothesis strategies for small closed RandML programs and distributions."""
from fractions import Fraction

from hypothesis import strategies as st

from expcost.dist import Dist
from expcost.lang.syntax import (
    AllocN, App, BinOp, Bool, Fst, If, Int, Load, Pair, Rand, Rec, Snd, Store, Tick, Unit, Var,
)

_NAMES = ("a", "b", "c")


@st.composite
def weights(draw, keys=st.integers(-3, 3)):
    """A finite subdistribution with rational weights."""
    ks = draw(st.lists(keys, min_size=0, max_size=4, unique=True))
    raw = [draw(st.integers(1, 6)) for _ in ks]
    total = sum(raw) + draw(st.integers(0, 3))
    return Dist({k: Fraction(r, total) for k, r in zip(ks, raw)}) if ks else Dist.empty()


def kernels():
    """Functions int -> Dist[int], built from a small table."""
    return st.lists(weights(), min_size=7, max_size=7).map(
        lambda table: (lambda x: table[(x + 3) % 7]))


def _int_expr(env, depth):
    leaves = [st.integers(0, 3).map(Int), st.integers(0, 2).map(lambda n: Rand(Int(n)))]
    if env:
        leaves.append(st.sampled_from(env).map(Var))
    base = st.one_of(*leaves)
    if depth <= 0:
        return base

    def binop(d):
        return st.builds(lambda op, l, r: BinOp(op, l, r), st.sampled_from(["+", "-", "*"]),
                         _int_expr(env, d), _int_expr(env, d))

    def cond(d):
        return st.builds(lambda op, l, r, t, e: If(BinOp(op, l, r), t, e),
                         st.sampled_from(["=", "<", "<="]),
                         _int_expr(env, d), _int_expr(env, d),
                         _int_expr(env, d), _int_expr(env, d))

    def let(d):
        x = _NAMES[len(env) % len(_NAMES)]
        return st.builds(lambda e1, e2: App(Rec(None, x, e2), e1),
                         _int_expr(env, d), _int_expr(env + [x], d))

    def ticked(d):
        return st.builds(lambda z, e: App(Rec(None, None, e), Tick(Int(z))),
                         st.integers(-2, 3), _int_expr(env, d))

    def pair(d):
        return st.builds(lambda l, r, first: (Fst if first else Snd)(Pair(l, r)),
                         _int_expr(env, d), _int_expr(env, d), st.booleans())

    def heap(d):
        # let r = ref e1 in r <- !r + e2; !r
        return st.builds(
            lambda e1, e2: App(Rec(None, "r", App(Rec(None, None, Load(Var("r"))),
                                              Store(Var("r"), BinOp("+", Load(Var("r")), e2)))),
                               AllocN(Int(1), e1)),
            _int_expr(env, d), _int_expr(env, d))

    d = depth - 1
    return st.one_of(base, binop(d), cond(d), let(d), ticked(d), pair(d), heap(d))


def programs(depth=3):
    """Closed, terminating programs that evaluate to integers."""
    return _int_expr([], depth)


def any_programs(depth=3):
    """Programs that may also get stuck or loop."""
    loop = st.just(App(Rec("f", "x", App(Var("f"), Var("x"))), Unit()))
    geo = st.just(App(Rec("g", "x", If(BinOp("=", Rand(Int(1)), Int(1)), Int(0),
                                       App(Var("g"), Var("x")))), Unit()))
    stuck = st.builds(lambda e: BinOp("+", e, Bool(True)), programs(1))
    return st.one_of(programs(depth), loop, geo, stuck)
