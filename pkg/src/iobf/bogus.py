"""Bogus control flow and in-degree obfuscation.

Bogus blocks are mutated clones of native blocks reachable only through
always-true opaque predicates, so they never execute but survive casual
inspection. The in-degree pass then adds never-taken edges until every
bogus block has strictly more predecessors than any non-entry real block,
defeating the "bogus blocks have fewer xrefs" heuristic.
"""

from __future__ import annotations

import copy
import random
from dataclasses import dataclass, replace

from .cfg import build_cfg, in_degree_gap
from .ir import (
    Assign,
    BasicBlock,
    BinOp,
    Br,
    Cbr,
    Cmp,
    Const,
    GlobalRef,
    IrFunction,
    Local,
    NameAllocator,
    Operand,
    Switch,
    clone_function,
    retarget,
    wrap64,
)

PREDICATE_FAMILIES = ("square_mod4", "seven_square")

# Opcode swaps for clone mutation stay inside this set: all are total
# (no trap on any operand), so a mutation can never introduce a
# statically detectable division by zero.
_SWAP_OPS = ("add", "sub", "mul", "and", "or", "xor")

MASK16 = 0xFFFF


# ---------------------------------------------------------------------------
# Opaque predicates

@dataclass
class OpaquePredicate:
    """Instruction template whose boolean result is a known constant.

    square_mod4: (x*x*(x+1)*(x+1)) mod 4 == 0. x(x+1) is even, so its
    square is divisible by 4; wrapping preserves residues mod 4 because
    4 divides 2^64, so this holds over the full 64-bit domain.

    seven_square: with x, y masked to 16 bits, 7*y*y - 1 != x*x. Squares
    are 0,1,2,4 mod 7 while 7*y*y - 1 is 6 mod 7; masking keeps every
    intermediate below 2^48, so wrapping never fires and the exact
    argument applies.
    """

    family: str
    truth: bool

    def instructions(self, locals_alloc: NameAllocator,
                     sources: tuple[Operand, Operand]):
        """Emit the instruction sequence; returns (instructions, result)."""
        x_src, y_src = sources
        ins: list = []
        if self.family == "square_mod4":
            x = locals_alloc.fresh("opq_x")
            t1 = locals_alloc.fresh("opq_t1")
            t2 = locals_alloc.fresh("opq_t2")
            t3 = locals_alloc.fresh("opq_t3")
            t4 = locals_alloc.fresh("opq_t4")
            t5 = locals_alloc.fresh("opq_t5")
            p = locals_alloc.fresh("opq_p")
            ins.append(Assign(x, x_src))
            ins.append(BinOp(t1, "mul", Local(x), Local(x)))
            ins.append(BinOp(t2, "add", Local(x), 1))
            ins.append(BinOp(t3, "mul", Local(t2), Local(t2)))
            ins.append(BinOp(t4, "mul", Local(t1), Local(t3)))
            ins.append(BinOp(t5, "srem", Local(t4), 4))
            ins.append(Cmp(p, "eq", Local(t5), 0))
        elif self.family == "seven_square":
            x = locals_alloc.fresh("opq_x")
            y = locals_alloc.fresh("opq_y")
            t1 = locals_alloc.fresh("opq_t1")
            t2 = locals_alloc.fresh("opq_t2")
            t3 = locals_alloc.fresh("opq_t3")
            t4 = locals_alloc.fresh("opq_t4")
            p = locals_alloc.fresh("opq_p")
            ins.append(BinOp(x, "and", x_src, MASK16))
            ins.append(BinOp(y, "and", y_src, MASK16))
            ins.append(BinOp(t1, "mul", Local(y), Local(y)))
            ins.append(BinOp(t2, "mul", Local(t1), 7))
            ins.append(BinOp(t3, "sub", Local(t2), 1))
            ins.append(BinOp(t4, "mul", Local(x), Local(x)))
            ins.append(Cmp(p, "ne", Local(t3), Local(t4)))
        else:
            raise ValueError(f"unknown predicate family {self.family!r}")
        if not self.truth:
            q = locals_alloc.fresh("opq_n")
            ins.append(Cmp(q, "eq", Local(p), False))
            return ins, q
        return ins, p

    def evaluate(self, x: int = 0, y: int = 0) -> bool:
        """Direct evaluation mirroring interpreter semantics exactly."""
        x = wrap64(x)
        y = wrap64(y)
        if self.family == "square_mod4":
            t1 = wrap64(x * x)
            t2 = wrap64(x + 1)
            t3 = wrap64(t2 * t2)
            t4 = wrap64(t1 * t3)
            r = -(abs(t4) % 4) if t4 < 0 else abs(t4) % 4
            base = r == 0
        else:
            x16 = x & MASK16
            y16 = y & MASK16
            base = wrap64(wrap64(7 * wrap64(y16 * y16)) - 1) != wrap64(x16 * x16)
        return base if self.truth else not base


def make_opaque_predicate(seed: int, truth: bool = True) -> OpaquePredicate:
    rng = random.Random(seed)
    return OpaquePredicate(rng.choice(PREDICATE_FAMILIES), truth)


def predicate_sources(fn: IrFunction, global_names, rng) -> tuple[Operand, Operand]:
    """Two value sources for a predicate: int params, else globals, else
    literals drawn from the RNG (constant inputs keep the identity valid)."""
    pool: list[Operand] = [Local(n) for n, t in fn.params if t == "int"]
    pool.extend(GlobalRef(g) for g in global_names)
    if not pool:
        pool = [rng.randrange(3, 1 << 16)]
    return rng.choice(pool), rng.choice(pool)


# ---------------------------------------------------------------------------
# Clone mutation (shared with nested-switch decoys and overload bodies)

def mutate_instructions(insts: list, rng) -> tuple[list, list[dict]]:
    """Deep-copy a block body, swap one binop opcode and bump one integer
    literal by one. Returns (new instructions, mutation descriptions)."""
    out = copy.deepcopy(insts)
    mutations: list[dict] = []

    binop_at = [i for i, ins in enumerate(out) if isinstance(ins, BinOp)]
    if binop_at:
        i = rng.choice(binop_at)
        old = out[i].op
        choices = [op for op in _SWAP_OPS if op != old]
        new_op = rng.choice(choices)
        out[i] = replace(out[i], op=new_op)
        mutations.append({"kind": "opcode", "index": i, "from": old, "to": new_op})

    spots = _literal_spots(out)
    if spots:
        i, attr = rng.choice(spots)
        old_val = getattr(out[i], attr)
        new_val = wrap64(old_val + 1)
        setattr(out[i], attr, new_val)
        mutations.append({"kind": "constant", "index": i,
                          "from": old_val, "to": new_val})
    return out, mutations


def _literal_spots(insts) -> list[tuple[int, str]]:
    spots = []
    for i, ins in enumerate(insts):
        if isinstance(ins, Const) and _int_literal(ins.value):
            spots.append((i, "value"))
        elif isinstance(ins, BinOp):
            if _int_literal(ins.a):
                spots.append((i, "a"))
            # never turn a constant divisor into zero
            if _int_literal(ins.b) and not (
                ins.op in ("sdiv", "srem") and wrap64(ins.b + 1) == 0
            ):
                spots.append((i, "b"))
        elif isinstance(ins, Cmp):
            if _int_literal(ins.a):
                spots.append((i, "a"))
            if _int_literal(ins.b):
                spots.append((i, "b"))
        elif isinstance(ins, Assign) and _int_literal(ins.src):
            spots.append((i, "src"))
    return spots


def _int_literal(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


# ---------------------------------------------------------------------------
# Records and guarded clone insertion

@dataclass
class BogusBlockRecord:
    label: str
    cloned_from: str
    mutations: list[dict]
    guard: str

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "cloned_from": self.cloned_from,
            "mutations": self.mutations,
            "guard": self.guard,
        }


def _insert_guarded_clone(f: IrFunction, label: str, rng, global_names,
                          labels_alloc, locals_alloc) -> BogusBlockRecord:
    """Put an always-true guard in front of `label` whose false arm reaches
    a mutated clone; the clone branches back to the real block."""
    orig = f.block(label)
    guard_label = labels_alloc.fresh(f"{label}_pre")
    clone_label = labels_alloc.fresh(f"{label}_twin")

    for b in f.blocks:
        if b.term is not None:
            b.term = retarget(b.term, label, guard_label)

    pred = make_opaque_predicate(rng.randrange(1 << 32), truth=True)
    pinsts, presult = pred.instructions(locals_alloc,
                                        predicate_sources(f, global_names, rng))
    guard = BasicBlock(guard_label, pinsts,
                       Cbr(presult, label, clone_label), role="real")
    cloned, mutations = mutate_instructions(orig.insts, rng)
    twin = BasicBlock(clone_label, cloned, Br(label), role="bogus")

    idx = f.blocks.index(orig)
    f.blocks.insert(idx, guard)
    f.blocks.insert(idx + 2, twin)
    return BogusBlockRecord(clone_label, label, mutations,
                            f"{pred.family}:always_true")


# ---------------------------------------------------------------------------
# Passes

def bogus_control_flow(fn: IrFunction, seed: int, prob: float,
                       global_names=()) -> tuple[IrFunction, dict]:
    """Guard each selected non-entry real block with an opaque predicate
    branching to either the block or its mutated clone."""
    rng = random.Random(seed)
    f = clone_function(fn)
    selected = [
        b.label for b in f.blocks[1:]
        if b.role == "real" and rng.random() < prob
    ]
    report = {
        "pass": "bcf",
        "function": fn.mangled_name,
        "seed": seed,
        "skipped": False,
        "selected": selected,
        "records": [],
    }
    if not selected:
        return fn, report
    labels_alloc = NameAllocator(f.labels())
    locals_alloc = NameAllocator(f.local_names())
    for label in selected:
        rec = _insert_guarded_clone(f, label, rng, global_names,
                                    labels_alloc, locals_alloc)
        report["records"].append(rec.to_dict())
    return f, report


def indegree_obfuscate(fn: IrFunction, seed: int, margin: int = 1,
                       global_names=()) -> tuple[IrFunction, dict]:
    """Add never-taken edges until every bogus block has in-degree at least
    `margin` above the highest non-entry real block.

    Mechanisms, in preference order per needy block:
      * a real block ending in `br L` gains an always-true conditional
        whose false arm targets the bogus block (one edge), or becomes an
        opaque switch (`(x & 1)` scrutinee, dead case literals >= 2,
        default to L) when several edges are needed;
      * a real block ending in `cbr` becomes an opaque switch whose live
        cases 0 and 1 reach a new block holding the original conditional,
        with dead cases and default feeding the bogus block;
      * switches this pass created are extended with more dead cases.

    A function with no bogus block first receives one guarded clone (the
    same construction bogus_control_flow uses) on a random real block.
    """
    rng = random.Random(seed)
    f = clone_function(fn)
    report = {
        "pass": "indeg",
        "function": fn.mangled_name,
        "seed": seed,
        "skipped": False,
        "margin": margin,
        "injected": [],
        "edges_added": 0,
    }
    labels_alloc = NameAllocator(f.labels())
    locals_alloc = NameAllocator(f.local_names())

    if not any(b.role == "bogus" for b in f.blocks):
        candidates = [b.label for b in f.blocks[1:] if b.role == "real"]
        if not candidates:
            report["skipped"] = True
            report["reason"] = "no non-entry real block to clone"
            return fn, report
        rec = _insert_guarded_clone(f, rng.choice(candidates), rng,
                                    global_names, labels_alloc, locals_alloc)
        report["injected"].append(rec.to_dict())

    state = _EdgeState(f, rng, global_names, labels_alloc, locals_alloc)
    for _ in range(64):
        cfg = build_cfg(f)
        max_real, _ = in_degree_gap(cfg)
        target = max_real + margin
        deficits = [
            (b.label, target - cfg.indeg[b.label])
            for b in f.blocks
            if b.role == "bogus" and cfg.indeg[b.label] < target
        ]
        if not deficits:
            break
        for bogus_label, need in deficits:
            state.add_edges(bogus_label, need)
    else:
        raise RuntimeError("in-degree obfuscation did not converge")

    report["edges_added"] = state.edges_added
    report["target_indegree"] = target
    return f, report


class _EdgeState:
    """Bookkeeping for never-taken edge insertion within one function."""

    def __init__(self, f: IrFunction, rng, global_names, labels_alloc,
                 locals_alloc):
        self.f = f
        self.rng = rng
        self.global_names = global_names
        self.labels_alloc = labels_alloc
        self.locals_alloc = locals_alloc
        self.rewritten: set[str] = set()
        self.pass_switches: list[str] = []
        self.sel_local: str | None = None
        self.edges_added = 0

    def add_edges(self, bogus_label: str, need: int):
        # Once a pass-owned switch exists, extending it is free (dead case
        # literals only); creating guards for every needy block would pile
        # executed predicate code onto real paths instead.
        if self.pass_switches:
            self._extend_switch(self.pass_switches[0], bogus_label, need)
            return
        src = self._pick_source(bogus_label)
        if src is None:
            raise RuntimeError("no real block can donate a never-taken edge")
        if isinstance(src.term, Br):
            if need == 1 and self.edges_added == 0:
                self._guard_br(src, bogus_label)
            else:
                self._br_to_switch(src, bogus_label, need)
        else:
            self._cbr_to_switch(src, bogus_label, need)

    def _pick_source(self, bogus_label: str) -> BasicBlock | None:
        bogus = self.f.block(bogus_label)
        preferred: list[str] = []
        # the clone's jump back to its origin makes that origin the most
        # natural block to link forward, mirroring a mutual pair
        if isinstance(bogus.term, Br):
            preferred.append(bogus.term.label)
        seen: set[str] = set()
        ordered: list[BasicBlock] = []

        def consider(b: BasicBlock, want_br: bool):
            if (b.role == "real" and b.label not in self.rewritten
                    and b.label not in seen
                    and isinstance(b.term, (Br, Cbr))
                    and isinstance(b.term, Br) == want_br):
                seen.add(b.label)
                ordered.append(b)

        for want_br in (True, False):
            for label in preferred:
                consider(self.f.block(label), want_br)
            for b in self.f.blocks:
                consider(b, want_br)
        return ordered[0] if ordered else None

    def _scrutinee(self, block: BasicBlock) -> str:
        """Append `sel = x & 1`; the result is provably 0 or 1, so any case
        literal >= 2 can never match."""
        if self.sel_local is None:
            self.sel_local = self.locals_alloc.fresh("opq_sel")
        x_src, _ = predicate_sources(self.f, self.global_names, self.rng)
        block.insts.append(BinOp(self.sel_local, "and", x_src, 1))
        return self.sel_local

    def _dead_literals(self, count: int, taken) -> list[int]:
        lits: set[int] = set(taken)
        out = []
        while len(out) < count:
            lit = self.rng.randrange(2, 1 << 31)
            if lit not in lits:
                lits.add(lit)
                out.append(lit)
        return out

    def _guard_br(self, src: BasicBlock, bogus_label: str):
        pred = make_opaque_predicate(self.rng.randrange(1 << 32), truth=True)
        pinsts, presult = pred.instructions(
            self.locals_alloc,
            predicate_sources(self.f, self.global_names, self.rng))
        src.insts.extend(pinsts)
        src.term = Cbr(presult, src.term.label, bogus_label)
        self.rewritten.add(src.label)
        self.edges_added += 1

    def _br_to_switch(self, src: BasicBlock, bogus_label: str, need: int):
        old_target = src.term.label
        sel = self._scrutinee(src)
        cases = [(lit, bogus_label) for lit in self._dead_literals(need, ())]
        src.term = Switch(sel, cases, old_target)
        self.rewritten.add(src.label)
        self.pass_switches.append(src.label)
        self.edges_added += need

    def _cbr_to_switch(self, src: BasicBlock, bogus_label: str, need: int):
        arm_label = self.labels_alloc.fresh(f"{src.label}_arm")
        arm = BasicBlock(arm_label, [], src.term, role="real")
        idx = self.f.blocks.index(src)
        self.f.blocks.insert(idx + 1, arm)
        sel = self._scrutinee(src)
        cases = [(0, arm_label), (1, arm_label)]
        cases += [(lit, bogus_label)
                  for lit in self._dead_literals(need - 1, (0, 1))]
        src.term = Switch(sel, cases, bogus_label)
        self.rewritten.add(src.label)
        self.pass_switches.append(src.label)
        self.edges_added += need

    def _extend_switch(self, label: str, bogus_label: str, need: int):
        block = self.f.block(label)
        taken = [lit for lit, _ in block.term.cases]
        block.term.cases.extend(
            (lit, bogus_label) for lit in self._dead_literals(need, taken))
        self.edges_added += need
