"""Semantic checks over parsed or constructed modules.

`validate` returns a list of diagnostics; an empty list means the module
satisfies every structural and type invariant the interpreter relies on
(no undefined labels or registers, consistent register types, legal call
targets, statically detectable division by zero).
"""

from __future__ import annotations

from dataclasses import dataclass

from .ir import (
    Assign,
    BinOp,
    Br,
    Call,
    Cbr,
    Cmp,
    Const,
    GlobalRef,
    IrFunction,
    IrModule,
    Local,
    Operand,
    Ret,
    Switch,
    operand_type,
)


@dataclass
class Diagnostic:
    code: str
    message: str
    function: str | None = None
    block: str | None = None

    def __str__(self) -> str:
        where = ""
        if self.function:
            where = f" in @{self.function}"
            if self.block:
                where += f" block {self.block}"
        return f"{self.code}: {self.message}{where}"


def infer_local_types(fn: IrFunction, module: IrModule) -> dict[str, str]:
    """Register name -> type, from parameter declarations and assignments.

    Runs a small fixpoint so copy chains (`%a = %b`) resolve regardless of
    textual order. Registers whose type cannot be determined are omitted.
    """
    types: dict[str, str] = dict(fn.params)
    pending = True
    while pending:
        pending = False
        for b in fn.blocks:
            for ins in b.insts:
                dst, ty = _dst_and_type(ins, types, module)
                if dst is not None and ty is not None and types.get(dst) != ty:
                    if dst not in types:
                        types[dst] = ty
                        pending = True
    return types


def _dst_and_type(ins, types: dict[str, str], module: IrModule):
    if isinstance(ins, Const):
        return ins.dst, operand_type(ins.value)
    if isinstance(ins, BinOp):
        return ins.dst, "int"
    if isinstance(ins, Cmp):
        return ins.dst, "bool"
    if isinstance(ins, Assign):
        return ins.dst, _operand_ty(ins.src, types, module)
    if isinstance(ins, Call):
        if ins.dst is None:
            return None, None
        sig = _callee_signature(ins.callee, module)
        return ins.dst, (sig[1] if sig else None)
    return None, None


def _operand_ty(op: Operand, types: dict[str, str], module: IrModule) -> str | None:
    if isinstance(op, Local):
        return types.get(op.name)
    if isinstance(op, GlobalRef):
        return "int" if module.global_value(op.name) is not None else None
    return operand_type(op)


def _callee_signature(name: str, module: IrModule):
    fn = module.function(name)
    if fn is not None:
        return [t for _, t in fn.params], fn.ret_type
    ext = module.extern(name)
    if ext is not None:
        return list(ext.param_types), ext.ret_type
    return None


def validate(m: IrModule) -> list[Diagnostic]:
    diags: list[Diagnostic] = []

    seen: dict[str, str] = {}
    for fn in m.functions:
        if fn.mangled_name in seen:
            diags.append(Diagnostic("DuplicateFunction",
                                    f"function @{fn.mangled_name} defined twice"))
        seen[fn.mangled_name] = "func"
    for e in m.externs:
        if e.name in seen:
            diags.append(Diagnostic("NameClash", f"@{e.name} declared twice"))
        seen[e.name] = "extern"
    for g, _ in m.globals:
        if g in seen:
            diags.append(Diagnostic("NameClash", f"@{g} declared twice"))
        seen[g] = "global"

    for fn in m.functions:
        diags.extend(_check_function(fn, m))
    return diags


def _check_function(fn: IrFunction, m: IrModule) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    name = fn.mangled_name

    if not fn.blocks:
        return [Diagnostic("EmptyFunction", "function has no blocks", name)]

    seen_params: set[str] = set()
    for pname, _ in fn.params:
        if pname in seen_params:
            diags.append(Diagnostic("DuplicateParam",
                                    f"parameter %{pname} repeated", name))
        seen_params.add(pname)

    labels: set[str] = set()
    for b in fn.blocks:
        if b.label in labels:
            diags.append(Diagnostic("DuplicateLabel",
                                    f"label {b.label} defined twice", name))
        labels.add(b.label)

    types = infer_local_types(fn, m)
    declared = fn.local_names()

    def use(op: Operand, block: str, want: str | None = None):
        if isinstance(op, Local):
            if op.name not in declared:
                diags.append(Diagnostic("UndefinedLocal",
                                        f"%{op.name} is never assigned",
                                        name, block))
                return
            ty = types.get(op.name)
        elif isinstance(op, GlobalRef):
            if m.global_value(op.name) is None:
                diags.append(Diagnostic("UndefinedGlobal",
                                        f"@{op.name} is not a global", name, block))
                return
            ty = "int"
        else:
            ty = operand_type(op)
        if want is not None and ty is not None and ty != want:
            diags.append(Diagnostic("TypeMismatch",
                                    f"expected {want}, got {ty}", name, block))
        return ty

    for b in fn.blocks:
        for ins in b.insts:
            if isinstance(ins, BinOp):
                use(ins.a, b.label, "int")
                use(ins.b, b.label, "int")
                if ins.op in ("sdiv", "srem") and ins.b == 0 and not isinstance(ins.b, bool):
                    diags.append(Diagnostic("DivByZeroConst",
                                            f"{ins.op} by constant zero",
                                            name, b.label))
            elif isinstance(ins, Cmp):
                if ins.rel in ("lt", "le", "gt", "ge"):
                    use(ins.a, b.label, "int")
                    use(ins.b, b.label, "int")
                else:
                    ta = use(ins.a, b.label)
                    tb = use(ins.b, b.label)
                    if ta is not None and tb is not None and ta != tb:
                        diags.append(Diagnostic("TypeMismatch",
                                                f"cmp {ins.rel} on {ta} vs {tb}",
                                                name, b.label))
            elif isinstance(ins, Assign):
                use(ins.src, b.label)
            elif isinstance(ins, Const):
                pass
            elif isinstance(ins, Call):
                sig = _callee_signature(ins.callee, m)
                if sig is None:
                    diags.append(Diagnostic("UnknownCallee",
                                            f"call to undefined @{ins.callee}",
                                            name, b.label))
                else:
                    ptypes, rty = sig
                    if len(ptypes) != len(ins.args):
                        diags.append(Diagnostic(
                            "CallArityMismatch",
                            f"@{ins.callee} takes {len(ptypes)} args, got {len(ins.args)}",
                            name, b.label))
                    else:
                        for arg, want in zip(ins.args, ptypes):
                            use(arg, b.label, want)
                    if ins.dst is not None and rty == "void":
                        diags.append(Diagnostic("TypeMismatch",
                                                f"void call to @{ins.callee} has a result",
                                                name, b.label))

        t = b.term
        if t is None:
            diags.append(Diagnostic("MissingTerminator",
                                    "block has no terminator", name, b.label))
            continue
        if isinstance(t, Br):
            _check_label(t.label, labels, diags, name, b.label)
        elif isinstance(t, Cbr):
            use(Local(t.cond), b.label, "bool")
            _check_label(t.then_label, labels, diags, name, b.label)
            _check_label(t.else_label, labels, diags, name, b.label)
        elif isinstance(t, Switch):
            use(Local(t.scrutinee), b.label, "int")
            lits = set()
            for lit, lab in t.cases:
                if lit in lits:
                    diags.append(Diagnostic("DuplicateCase",
                                            f"case literal {lit} repeated",
                                            name, b.label))
                lits.add(lit)
                _check_label(lab, labels, diags, name, b.label)
            _check_label(t.default, labels, diags, name, b.label)
        elif isinstance(t, Ret):
            if fn.ret_type == "void":
                if t.value is not None:
                    diags.append(Diagnostic("ReturnTypeMismatch",
                                            "void function returns a value",
                                            name, b.label))
            else:
                if t.value is None:
                    diags.append(Diagnostic("ReturnTypeMismatch",
                                            f"{fn.ret_type} function returns nothing",
                                            name, b.label))
                else:
                    use(t.value, b.label, fn.ret_type)

    return diags


def _check_label(label: str, labels: set[str], diags, fn_name: str, block: str):
    if label not in labels:
        diags.append(Diagnostic("UndefinedLabel",
                                f"no block named {label}", fn_name, block))
