"""Control-flow flattening and its nested-switch strengthening.

Flattening hoists every non-entry block into a switch dispatcher driven
by a routing register, so the original hierarchy collapses into one
level. The nested variant then hides the flattening fingerprint: each
dispatched block becomes a second-level switch whose scrutinee is an
affine function of the routing register; exactly one inner case holds the
real content, the rest are junk-prefixed mutated clones of sibling
blocks that can never be selected.
"""

from __future__ import annotations

import copy
import random
from dataclasses import asdict, dataclass, field

from .bogus import mutate_instructions
from .ir import (
    BasicBlock,
    BinOp,
    Br,
    Cbr,
    Const,
    IrFunction,
    Local,
    NameAllocator,
    Ret,
    Switch,
    clone_function,
    retarget,
    successors,
)


class PassParameterError(ValueError):
    """A pass was invoked with an out-of-range parameter."""


@dataclass
class DispatchPlan:
    """Routing data for one nested-switch transformation."""

    outer_var: str
    inner_var: str
    outer_cases: dict[str, int] = field(default_factory=dict)
    inner_map: dict[str, tuple[int, int, int]] = field(default_factory=dict)
    real_inner_case: dict[str, int] = field(default_factory=dict)


@dataclass
class JunkOpRecipe:
    """1-4 arithmetic/boolean ops applied to the routing register inside a
    decoy block. Decoys never run, so the register is untouched in any
    real execution."""

    target_var: str
    ops: list[tuple[str, int]]

    def instructions(self) -> list[BinOp]:
        return [
            BinOp(self.target_var, op, Local(self.target_var), const)
            for op, const in self.ops
        ]


_JUNK_FAMILIES = ("add", "xor", "mul", "and", "or")


def _sample_junk(var: str, rng: random.Random) -> JunkOpRecipe:
    ops = []
    for _ in range(rng.randrange(1, 5)):
        op = rng.choice(_JUNK_FAMILIES)
        const = rng.randrange(1, 1 << 31)
        if op == "mul":
            const |= 1
        ops.append((op, const))
    return JunkOpRecipe(var, ops)


def _fresh_literal(rng: random.Random, used: set[int]) -> int:
    # random 31-bit positive case keys; sequential keys are a known
    # deobfuscation fingerprint
    while True:
        lit = rng.randrange(1, 1 << 31)
        if lit not in used:
            used.add(lit)
            return lit


def flatten(fn: IrFunction, seed: int) -> tuple[IrFunction, dict]:
    """Rewrite a function so all non-entry blocks hang off one dispatcher.

    Functions with fewer than two non-entry blocks are returned unchanged
    with a skip note in the report. Unconditional branches become a case
    key store plus a jump to the dispatcher; conditional branches select
    between two tiny key-store blocks; returns are untouched.
    """
    report: dict = {"pass": "flatten", "function": fn.mangled_name, "seed": seed}
    if len(fn.blocks) - 1 < 2:
        report.update(skipped=True, reason="too few blocks")
        return fn, report
    report["skipped"] = False

    f = clone_function(fn)
    rng = random.Random(seed)
    labels_alloc = NameAllocator(f.labels())
    locals_alloc = NameAllocator(f.local_names())

    # A branch back to the entry cannot be dispatched (the entry is not a
    # case), so the entry body moves to its own block and every back edge
    # retargets the moved body.
    entry_label = f.blocks[0].label
    if any(entry_label in successors(b.term) for b in f.blocks):
        body_label = labels_alloc.fresh(f"{entry_label}_body")
        old_entry = f.blocks[0]
        body = BasicBlock(body_label, old_entry.insts, old_entry.term,
                          role=old_entry.role)
        f.blocks[0] = BasicBlock(entry_label, [], Br(body_label))
        f.blocks.insert(1, body)
        for block in f.blocks[1:]:
            if block.term is not None:
                block.term = retarget(block.term, entry_label, body_label)

    originals = list(f.blocks[1:])
    outer = locals_alloc.fresh("disp_key")
    dispatch_label = labels_alloc.fresh("dispatch")
    end_label = labels_alloc.fresh("dispatch_end")

    used_lits: set[int] = set()
    # unconditional init: keeps the routing register a defined name even
    # when every original terminator is a return, and blends in with the
    # case keys
    f.blocks[0].insts.insert(0, Const(outer, _fresh_literal(rng, used_lits)))
    case_of = {b.label: _fresh_literal(rng, used_lits) for b in originals}

    sel_blocks: list[BasicBlock] = []

    def key_store_block(src_label: str, target_label: str) -> str:
        label = labels_alloc.fresh(f"{src_label}_go")
        sel_blocks.append(BasicBlock(
            label,
            [Const(outer, case_of[target_label])],
            Br(dispatch_label),
        ))
        return label

    for block in [f.blocks[0]] + originals:
        t = block.term
        if isinstance(t, Br):
            block.insts.append(Const(outer, case_of[t.label]))
            block.term = Br(dispatch_label)
        elif isinstance(t, Cbr):
            block.term = Cbr(
                t.cond,
                key_store_block(block.label, t.then_label),
                key_store_block(block.label, t.else_label),
            )
        elif isinstance(t, Switch):
            taken: dict[str, str] = {}

            def sel(target: str) -> str:
                if target not in taken:
                    taken[target] = key_store_block(block.label, target)
                return taken[target]

            block.term = Switch(
                t.scrutinee,
                [(lit, sel(lab)) for lit, lab in t.cases],
                sel(t.default),
            )
        elif isinstance(t, Ret):
            pass

    dispatcher = BasicBlock(
        dispatch_label,
        [],
        Switch(outer, [(case_of[b.label], b.label) for b in originals],
               end_label),
        role="dispatcher",
    )
    end_block = BasicBlock(end_label, [], Br(dispatch_label), role="dispatcher")
    f.blocks = [f.blocks[0], dispatcher, end_block] + originals + sel_blocks

    report.update(
        outer_var=outer,
        dispatch=dispatch_label,
        outer_cases=dict(case_of),
        case_count=len(case_of),
    )
    return f, report


def nested_switch(fn: IrFunction, seed: int,
                  bogus_count: int | None = None) -> tuple[IrFunction, dict]:
    """Flatten, then wrap every dispatched block in a second-level switch.

    The inner scrutinee is `(a*key + b) & (m-1)` with `a` odd and `m` a
    power of two, computed from the live routing key, so exactly the one
    genuine inner case can ever be selected. The other `bogus_count` cases
    (default: the outer case count) hold junk-prefixed mutated clones of
    randomly chosen sibling blocks and jump straight back to the
    dispatcher.
    """
    if bogus_count is not None and bogus_count < 1:
        raise PassParameterError("bogus_count must be at least 1")

    p1, frep = flatten(fn, seed)
    report: dict = {"pass": "nested", "function": fn.mangled_name, "seed": seed}
    if frep.get("skipped"):
        report.update(skipped=True, reason=frep["reason"])
        return p1, report
    report["skipped"] = False

    f = p1
    rng = random.Random(seed ^ 0x5DEECE66D)
    labels_alloc = NameAllocator(f.labels())
    locals_alloc = NameAllocator(f.local_names())

    outer = frep["outer_var"]
    dispatch = frep["dispatch"]
    case_of: dict[str, int] = frep["outer_cases"]
    case_labels = list(case_of)
    decoys_per_case = bogus_count if bogus_count is not None else len(case_labels)

    inner = locals_alloc.fresh("disp_sub")
    mix_mul = locals_alloc.fresh("disp_m0")
    mix_add = locals_alloc.fresh("disp_m1")

    snapshot = {lab: copy.deepcopy(f.block(lab).insts) for lab in case_labels}
    plan = DispatchPlan(outer, inner, dict(case_of))
    decoy_labels: dict[str, list[str]] = {}
    real_labels: dict[str, str] = {}

    for lab in case_labels:
        key = case_of[lab]
        m = 1
        while m < decoys_per_case + 1:
            m *= 2
        a = rng.randrange(0, 1 << 14) * 2 + 1
        b_off = rng.randrange(0, 1 << 15)
        real_lit = (a * key + b_off) & (m - 1)
        plan.inner_map[lab] = (a, b_off, m)
        plan.real_inner_case[lab] = real_lit

        used = {real_lit}
        block = f.block(lab)
        real_block = BasicBlock(labels_alloc.fresh(f"{lab}_main"),
                                block.insts, block.term)
        real_labels[lab] = real_block.label

        decoys: list[BasicBlock] = []
        lits: list[int] = []
        for _ in range(decoys_per_case):
            junk = _sample_junk(outer, rng)
            body, _muts = mutate_instructions(snapshot[rng.choice(case_labels)],
                                              rng)
            decoys.append(BasicBlock(
                labels_alloc.fresh(f"{lab}_alt"),
                junk.instructions() + body,
                Br(dispatch),
                role="bogus",
            ))
            lits.append(_fresh_literal(rng, used))
        decoy_labels[lab] = [d.label for d in decoys]

        cases = [(real_lit, real_block.label)]
        cases += [(lit, d.label) for lit, d in zip(lits, decoys)]
        rng.shuffle(cases)
        block.insts = [
            BinOp(mix_mul, "mul", Local(outer), a),
            BinOp(mix_add, "add", Local(mix_mul), b_off),
            BinOp(inner, "and", Local(mix_add), m - 1),
        ]
        block.term = Switch(inner, cases, decoys[0].label)

        at = f.blocks.index(block)
        f.blocks[at + 1:at + 1] = [real_block] + decoys

    report.update(
        outer_var=outer,
        inner_var=inner,
        dispatch=dispatch,
        outer_cases=dict(case_of),
        case_count=len(case_labels),
        decoys_per_case=decoys_per_case,
        decoys_added=decoys_per_case * len(case_labels),
        real_inner=dict(plan.real_inner_case),
        real_labels=real_labels,
        decoy_labels=decoy_labels,
        plan=asdict(plan),
    )
    return f, report
