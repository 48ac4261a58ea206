import dataclasses

import pytest
from hypothesis import strategies as st

from iobf import load_corpus, parse_module, run
from iobf.ir import (
    BasicBlock,
    BinOp,
    Br,
    Cbr,
    Cmp,
    Const,
    IrFunction,
    IrModule,
    Local,
    Ret,
)

GCD_TEXT = """\
extern @print_int(int) -> void

func @_O3gcdii src "gcd" (%a: int, %b: int) -> int {
entry:
  %t = cmp ne %b, 0
  cbr %t, loop, done
loop:
  %r = srem %a, %b
  %a = %b
  %b = %r
  %t = cmp ne %b, 0
  cbr %t, loop, done
done:
  call @print_int(%a)
  ret %a
}
"""

# A -> B1 -> C straight line
FIG3A_TEXT = """\
extern @print_int(int) -> void

func @_O4flowi src "flow" (%x: int) -> int {
entry:
  %t = add %x, 1
  br middle
middle:
  %t = mul %t, 2
  br final
final:
  call @print_int(%t)
  ret %t
}
"""

# The same function after a guards-and-clone insertion around B1 (middle):
# the twin is marked bogus and jumps back to the real block.
FIG3B_TEXT = """\
extern @print_int(int) -> void

func @_O4flowi src "flow" (%x: int) -> int {
entry:
  %t = add %x, 1
  %xx = mul %x, %x
  %x1 = add %x, 1
  %x2 = mul %x1, %x1
  %pr = mul %xx, %x2
  %md = srem %pr, 4
  %p = cmp eq %md, 0
  cbr %p, middle, twin
bogus twin:
  %t = mul %t, 3
  br middle
middle:
  %t = mul %t, 2
  br final
final:
  call @print_int(%t)
  ret %t
}
"""


@pytest.fixture(scope="session")
def corpus():
    entries = load_corpus()
    bad = {e.name: e.problems for e in entries if e.problems}
    assert not bad, f"bundled corpus failed to load: {bad}"
    return entries


@pytest.fixture
def gcd_module():
    return parse_module(GCD_TEXT)


@pytest.fixture
def fig3a_module():
    return parse_module(FIG3A_TEXT)


@pytest.fixture
def fig3b_module():
    return parse_module(FIG3B_TEXT)


def single_function_module(template, fn):
    """Swap the sole function of a module for a transformed version."""
    return dataclasses.replace(template, functions=[fn])


def assert_equivalent(orig, obf, entry, inputs, fuel=200_000):
    for args in inputs:
        before = run(orig, entry, args, fuel)
        after = run(obf, entry, args, fuel)
        assert before.observable() == after.observable(), (
            f"{entry}({args}): {before.observable()} != {after.observable()}")


# ---------------------------------------------------------------------------
# Random well-formed single-function modules (shared hypothesis strategy)

_DSTS = ("x", "y", "z")


@st.composite
def operands(draw):
    if draw(st.booleans()):
        return Local(draw(st.sampled_from(_DSTS)))
    return draw(st.integers(-100, 100))


@st.composite
def random_modules(draw):
    n = draw(st.integers(1, 5))
    labels = [f"b{i}" for i in range(n)]
    blocks = []
    for i, label in enumerate(labels):
        insts = []
        if i == 0:
            insts.append(Const("y", draw(st.integers(-5, 5))))
            insts.append(Const("z", draw(st.integers(-5, 5))))
        for _ in range(draw(st.integers(0, 3))):
            insts.append(BinOp(
                draw(st.sampled_from(_DSTS)),
                draw(st.sampled_from(("add", "sub", "mul", "and", "or", "xor"))),
                draw(operands()),
                draw(operands()),
            ))
        kind = draw(st.sampled_from(("br", "cbr", "ret")))
        if kind == "br":
            term = Br(draw(st.sampled_from(labels)))
        elif kind == "cbr":
            insts.append(Cmp("c", "lt", Local("x"), draw(st.integers(-5, 5))))
            term = Cbr("c", draw(st.sampled_from(labels)),
                       draw(st.sampled_from(labels)))
        else:
            term = Ret(Local("x"))
        blocks.append(BasicBlock(label, insts, term))
    fn = IrFunction("_O1fi", "f", [("x", "int")], "int", blocks)
    return IrModule(functions=[fn])
