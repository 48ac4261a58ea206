"""Core IR data model.

A module is a flat list of integer globals, extern declarations, and
functions. Functions hold ordered basic blocks over named mutable
registers (non-SSA: reassignment is permitted). Values are signed 64-bit
integers with wrapping arithmetic, plus booleans produced by comparisons.

This file owns the in-memory types, canonical text printing, the
simulated name-mangling scheme, and DOT export of a function's control
flow graph. Parsing lives in `parser`, semantic checking in `validate`.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

INT_BITS = 64
INT_MASK = (1 << INT_BITS) - 1
INT_MIN = -(1 << (INT_BITS - 1))
INT_MAX = (1 << (INT_BITS - 1)) - 1

BINOPS = ("add", "sub", "mul", "sdiv", "srem", "and", "or", "xor", "shl", "shr")
CMP_RELS = ("eq", "ne", "lt", "le", "gt", "ge")
VALUE_TYPES = ("int", "bool")
RET_TYPES = ("int", "bool", "void")
ROLES = ("real", "bogus", "dispatcher")


def wrap64(value: int) -> int:
    """Reduce an unbounded integer to signed 64-bit two's complement."""
    return ((value + (1 << 63)) & INT_MASK) - (1 << 63)


# ---------------------------------------------------------------------------
# Operands

@dataclass(frozen=True)
class Local:
    name: str


@dataclass(frozen=True)
class GlobalRef:
    name: str


# An operand is a Local, a GlobalRef, or a literal (bool before int: bool is
# a subclass of int in Python, so isinstance checks must test bool first).
Operand = Local | GlobalRef | int | bool


def operand_type(op: Operand) -> str | None:
    """Static type of a literal operand; None for names (resolved later)."""
    if isinstance(op, bool):
        return "bool"
    if isinstance(op, int):
        return "int"
    return None


# ---------------------------------------------------------------------------
# Instructions

@dataclass
class Const:
    dst: str
    value: int | bool


@dataclass
class BinOp:
    dst: str
    op: str
    a: Operand
    b: Operand


@dataclass
class Cmp:
    dst: str
    rel: str
    a: Operand
    b: Operand


@dataclass
class Assign:
    dst: str
    src: Operand


@dataclass
class Call:
    dst: str | None
    callee: str
    args: list[Operand]


Instruction = Const | BinOp | Cmp | Assign | Call


# ---------------------------------------------------------------------------
# Terminators

@dataclass
class Br:
    label: str


@dataclass
class Cbr:
    cond: str
    then_label: str
    else_label: str


@dataclass
class Switch:
    scrutinee: str
    cases: list[tuple[int, str]]
    default: str


@dataclass
class Ret:
    value: Operand | None = None


Terminator = Br | Cbr | Switch | Ret


def successors(term: Terminator | None) -> list[str]:
    """Successor labels in edge order; parallel edges are repeated."""
    if isinstance(term, Br):
        return [term.label]
    if isinstance(term, Cbr):
        return [term.then_label, term.else_label]
    if isinstance(term, Switch):
        return [label for _, label in term.cases] + [term.default]
    return []


def retarget(term: Terminator, old: str, new: str) -> Terminator:
    """Return a terminator with every edge to `old` redirected to `new`."""
    if isinstance(term, Br):
        return Br(new) if term.label == old else term
    if isinstance(term, Cbr):
        return Cbr(
            term.cond,
            new if term.then_label == old else term.then_label,
            new if term.else_label == old else term.else_label,
        )
    if isinstance(term, Switch):
        return Switch(
            term.scrutinee,
            [(lit, new if lab == old else lab) for lit, lab in term.cases],
            new if term.default == old else term.default,
        )
    return term


# ---------------------------------------------------------------------------
# Blocks, functions, modules

@dataclass
class BasicBlock:
    label: str
    insts: list[Instruction] = field(default_factory=list)
    term: Terminator | None = None
    role: str = "real"


@dataclass
class ExternDecl:
    name: str
    param_types: list[str]
    ret_type: str


@dataclass
class IrFunction:
    mangled_name: str
    base_name: str
    params: list[tuple[str, str]]  # (name, type)
    ret_type: str
    blocks: list[BasicBlock]

    @property
    def entry(self) -> str:
        return self.blocks[0].label if self.blocks else ""

    def block(self, label: str) -> BasicBlock:
        for b in self.blocks:
            if b.label == label:
                return b
        raise KeyError(label)

    def labels(self) -> list[str]:
        return [b.label for b in self.blocks]

    def local_names(self) -> set[str]:
        """All register names: parameters plus every assignment target."""
        names = {name for name, _ in self.params}
        for b in self.blocks:
            for ins in b.insts:
                if not isinstance(ins, Call) or ins.dst is not None:
                    names.add(ins.dst)
        return names


@dataclass
class IrModule:
    functions: list[IrFunction] = field(default_factory=list)
    globals: list[tuple[str, int]] = field(default_factory=list)
    externs: list[ExternDecl] = field(default_factory=list)

    @property
    def source_names(self) -> dict[str, tuple[str, list[str]]]:
        """Mangled name -> (source base name, parameter types)."""
        return {
            f.mangled_name: (f.base_name, [t for _, t in f.params])
            for f in self.functions
        }

    def function(self, mangled: str) -> IrFunction | None:
        for f in self.functions:
            if f.mangled_name == mangled:
                return f
        return None

    def extern(self, name: str) -> ExternDecl | None:
        for e in self.externs:
            if e.name == name:
                return e
        return None

    def global_value(self, name: str) -> int | None:
        for gname, value in self.globals:
            if gname == name:
                return value
        return None

    def all_names(self) -> set[str]:
        """Every `@`-namespace name: functions, externs, globals."""
        names = {f.mangled_name for f in self.functions}
        names.update(e.name for e in self.externs)
        names.update(g for g, _ in self.globals)
        return names


def clone_function(fn: IrFunction) -> IrFunction:
    return copy.deepcopy(fn)


def clone_module(m: IrModule) -> IrModule:
    return copy.deepcopy(m)


class NameAllocator:
    """Deterministic fresh-name source over a set of taken names."""

    def __init__(self, taken):
        self._taken = set(taken)

    def fresh(self, base: str) -> str:
        name = base
        i = 1
        while name in self._taken:
            name = f"{base}{i}"
            i += 1
        self._taken.add(name)
        return name


# ---------------------------------------------------------------------------
# Name mangling (simulated scheme: prefix, base-name length, base name, one
# code letter per parameter: i = int, b = bool)

MANGLE_PREFIX = "_O"
TYPE_CODES = {"int": "i", "bool": "b"}


def mangle(base_name: str, param_types: list[str]) -> str:
    codes = "".join(TYPE_CODES[t] for t in param_types)
    return f"{MANGLE_PREFIX}{len(base_name)}{base_name}{codes}"


# ---------------------------------------------------------------------------
# Canonical printing

def _operand_str(op: Operand) -> str:
    if isinstance(op, Local):
        return f"%{op.name}"
    if isinstance(op, GlobalRef):
        return f"@{op.name}"
    if isinstance(op, bool):
        return "true" if op else "false"
    return str(op)


def _inst_str(ins: Instruction) -> str:
    if isinstance(ins, Const):
        return f"%{ins.dst} = {_operand_str(ins.value)}"
    if isinstance(ins, BinOp):
        return f"%{ins.dst} = {ins.op} {_operand_str(ins.a)}, {_operand_str(ins.b)}"
    if isinstance(ins, Cmp):
        return f"%{ins.dst} = cmp {ins.rel} {_operand_str(ins.a)}, {_operand_str(ins.b)}"
    if isinstance(ins, Assign):
        return f"%{ins.dst} = {_operand_str(ins.src)}"
    if isinstance(ins, Call):
        args = ", ".join(_operand_str(a) for a in ins.args)
        call = f"call @{ins.callee}({args})"
        return f"%{ins.dst} = {call}" if ins.dst is not None else call
    raise TypeError(f"not an instruction: {ins!r}")


def _term_str(term: Terminator) -> str:
    if isinstance(term, Br):
        return f"br {term.label}"
    if isinstance(term, Cbr):
        return f"cbr %{term.cond}, {term.then_label}, {term.else_label}"
    if isinstance(term, Switch):
        cases = ", ".join(f"{lit} -> {lab}" for lit, lab in term.cases)
        return f"switch %{term.scrutinee} [{cases}] default {term.default}"
    if isinstance(term, Ret):
        return "ret" if term.value is None else f"ret {_operand_str(term.value)}"
    raise TypeError(f"not a terminator: {term!r}")


def _escape(s: str) -> str:
    return s.replace("\\", "\\\\").replace('"', '\\"')


def print_function(fn: IrFunction) -> str:
    params = ", ".join(f"%{name}: {ty}" for name, ty in fn.params)
    lines = [
        f'func @{fn.mangled_name} src "{_escape(fn.base_name)}" ({params}) -> {fn.ret_type} {{'
    ]
    for b in fn.blocks:
        mark = "" if b.role == "real" else f"{b.role} "
        lines.append(f"{mark}{b.label}:")
        for ins in b.insts:
            lines.append(f"  {_inst_str(ins)}")
        if b.term is not None:
            lines.append(f"  {_term_str(b.term)}")
    lines.append("}")
    return "\n".join(lines)


def print_module(m: IrModule) -> str:
    """Canonical text for a module.

    Deterministic: globals, then externs, then functions, each in declared
    order. `parse_module(print_module(m))` is structurally equal to `m`.
    """
    parts: list[str] = []
    for name, value in m.globals:
        parts.append(f"global @{name} = {value}")
    for e in m.externs:
        tys = ", ".join(e.param_types)
        parts.append(f"extern @{e.name}({tys}) -> {e.ret_type}")
    for fn in m.functions:
        parts.append(print_function(fn))
    return "\n\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# DOT export

def export_dot(fn: IrFunction) -> str:
    """Graphviz digraph of a function's CFG.

    One node per block, one edge per terminator successor (parallel edges
    repeated). Blocks with the bogus role are filled grey; switch edges are
    labelled with their case literal or `default`.
    """
    lines = [f'digraph "{_escape(fn.mangled_name)}" {{', "  node [shape=box];"]
    for b in fn.blocks:
        attr = ' [style=filled, fillcolor=grey]' if b.role == "bogus" else ""
        lines.append(f'  "{b.label}"{attr};')
    for b in fn.blocks:
        t = b.term
        if isinstance(t, Br):
            lines.append(f'  "{b.label}" -> "{t.label}";')
        elif isinstance(t, Cbr):
            lines.append(f'  "{b.label}" -> "{t.then_label}";')
            lines.append(f'  "{b.label}" -> "{t.else_label}";')
        elif isinstance(t, Switch):
            for lit, lab in t.cases:
                lines.append(f'  "{b.label}" -> "{lab}" [label="{lit}"];')
            lines.append(f'  "{b.label}" -> "{t.default}" [label="default"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def instruction_count(m: IrModule) -> int:
    """Total instructions plus terminators across the module."""
    n = 0
    for fn in m.functions:
        for b in fn.blocks:
            n += len(b.insts) + (1 if b.term is not None else 0)
    return n
