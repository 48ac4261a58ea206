"""Pipeline driver: parse, apply passes in order, print and report.

Exit codes: 0 success, 2 parse/validation failure, 3 bad parameter,
4 semantics-oracle failure in batch mode.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .bogus import bogus_control_flow, indegree_obfuscate
from .corpus import load_corpus
from .flatten import PassParameterError, flatten, nested_switch
from .interp import run
from .ir import IrModule, clone_module, export_dot, instruction_count, print_module
from .metrics import aggregate_rows, overhead, render_table, similarity
from .parser import IrError, parse_module
from .rename import (
    DictionaryExhausted,
    add_overloads,
    load_dictionary,
    obfuscate_identifiers_default,
    rename_dictionary,
    rename_homoglyph,
    rename_random,
)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PARAMETER = 3
EXIT_ORACLE = 4


@dataclass
class PipelineConfig:
    passes: list[str]
    seed: int = 0
    funcs: list[str] | None = None
    bogus_count: int | None = None
    indeg_margin: int = 1
    prob: float = 0.3
    dict_path: str | None = None
    decoys_per_fn: int = 2


@dataclass
class PipelineResult:
    original: IrModule
    module: IrModule
    text: str
    reports: list[dict] = field(default_factory=list)


def fork_seed(seed: int, *parts: str) -> int:
    """Stable per-(pass, function) seed derivation from the master seed."""
    material = f"{seed}|" + "|".join(parts)
    return int.from_bytes(hashlib.sha256(material.encode()).digest()[:8], "big")


def _per_function(module: IrModule, cfg: PipelineConfig, name: str, transform):
    out = clone_module(module)
    reports = []
    result = []
    for fn in out.functions:
        if cfg.funcs and fn.base_name not in cfg.funcs:
            result.append(fn)
            continue
        new_fn, report = transform(fn, fork_seed(cfg.seed, name, fn.mangled_name))
        result.append(new_fn)
        reports.append(report)
    out.functions = result
    return out, reports


def _apply_flatten(module, cfg):
    return _per_function(module, cfg, "flatten", flatten)


def _apply_nested(module, cfg):
    return _per_function(
        module, cfg, "nested",
        lambda fn, s: nested_switch(fn, s, cfg.bogus_count))


def _apply_bcf(module, cfg):
    globals_ = [g for g, _ in module.globals]
    return _per_function(
        module, cfg, "bcf",
        lambda fn, s: bogus_control_flow(fn, s, cfg.prob, globals_))


def _apply_indeg(module, cfg):
    globals_ = [g for g, _ in module.globals]
    return _per_function(
        module, cfg, "indeg",
        lambda fn, s: indegree_obfuscate(fn, s, cfg.indeg_margin, globals_))


def _apply_ident_random(module, cfg):
    out, rmap = rename_random(module, fork_seed(cfg.seed, "ident-random"))
    return out, [{"pass": "ident-random", "rename_map": rmap.to_dict()}]


def _apply_ident_dict(module, cfg):
    words = load_dictionary(cfg.dict_path)
    out, rmap = rename_dictionary(module, words,
                                  fork_seed(cfg.seed, "ident-dict"))
    return out, [{"pass": "ident-dict", "rename_map": rmap.to_dict()}]


def _apply_ident_illegal(module, cfg):
    out, rmap = rename_homoglyph(module)
    return out, [{"pass": "ident-illegal", "rename_map": rmap.to_dict()}]


def _apply_ident_overload(module, cfg):
    out, report = add_overloads(module, fork_seed(cfg.seed, "ident-overload"),
                                cfg.decoys_per_fn)
    return out, [report]


def _apply_ident_default(module, cfg):
    words = load_dictionary(cfg.dict_path) if cfg.dict_path else None
    out, report = obfuscate_identifiers_default(
        module, fork_seed(cfg.seed, "ident-default"), words, cfg.decoys_per_fn)
    return out, [report]


PASS_APPLIERS = {
    "flatten": _apply_flatten,
    "nested": _apply_nested,
    "bcf": _apply_bcf,
    "indeg": _apply_indeg,
    "ident-random": _apply_ident_random,
    "ident-dict": _apply_ident_dict,
    "ident-illegal": _apply_ident_illegal,
    "ident-overload": _apply_ident_overload,
    "ident-default": _apply_ident_default,
}


def validate_config(cfg: PipelineConfig):
    """Reject bad parameters before any work happens."""
    for name in cfg.passes:
        if name not in PASS_APPLIERS:
            raise PassParameterError(f"unknown pass {name!r} "
                                     f"(known: {', '.join(PASS_APPLIERS)})")
    if not cfg.passes:
        raise PassParameterError("no passes given")
    if cfg.bogus_count is not None and cfg.bogus_count < 1:
        raise PassParameterError("--bogus-count must be at least 1")
    if not (0.0 < cfg.prob <= 1.0):
        raise PassParameterError("--prob must be in (0, 1]")
    if cfg.indeg_margin < 1:
        raise PassParameterError("--indeg-margin must be at least 1")
    if cfg.decoys_per_fn < 1:
        raise PassParameterError("--decoys must be at least 1")


def run_pipeline(cfg: PipelineConfig, text: str) -> PipelineResult:
    """Parse, transform with each configured pass in order, and reprint.

    Identifier passes always act module-wide (a partial rename would leave
    dangling call targets); the function filter applies to the
    control-flow passes only.
    """
    validate_config(cfg)
    module = parse_module(text)
    original = module
    reports: list[dict] = []
    for name in cfg.passes:
        module, step_reports = PASS_APPLIERS[name](module, cfg)
        reports.extend(step_reports)
    return PipelineResult(original, module, print_module(module), reports)


def transform_module(cfg: PipelineConfig, module: IrModule,
                     seed: int | None = None) -> IrModule:
    """Apply the configured passes to an already-parsed module."""
    local_cfg = cfg if seed is None else _with_seed(cfg, seed)
    out = module
    for name in local_cfg.passes:
        out, _ = PASS_APPLIERS[name](out, local_cfg)
    return out


def _with_seed(cfg: PipelineConfig, seed: int) -> PipelineConfig:
    return PipelineConfig(cfg.passes, seed, cfg.funcs, cfg.bogus_count,
                          cfg.indeg_margin, cfg.prob, cfg.dict_path,
                          cfg.decoys_per_fn)


def oracle_mismatches(orig: IrModule, obf: IrModule, entry: str,
                      inputs, fuel: int) -> list[str]:
    """Compare observable behaviour before/after on every input vector."""
    problems = []
    for args in inputs:
        before = run(orig, entry, args, fuel)
        after = run(obf, entry, args, fuel)
        if before.observable() != after.observable():
            problems.append(
                f"{entry}({args}): {before.observable()} != {after.observable()}")
    return problems


def batch(corpus_dir: str | Path, cfg: PipelineConfig,
          time_reps: int = 0) -> tuple[dict, int]:
    """Per-file pipeline + oracle + metrics over a corpus directory."""
    validate_config(cfg)
    entries = load_corpus(corpus_dir)
    rows: list[dict] = []
    oracle_failures: list[str] = []
    load_failures: list[str] = []
    checked = 0
    outputs: dict[str, str] = {}
    for entry in entries:
        row = {"file": entry.name, "pass": "+".join(cfg.passes),
               "seed": cfg.seed}
        if entry.problems:
            row["error"] = "; ".join(entry.problems)
            load_failures.append(f"{entry.name}: failed to load")
            rows.append(row)
            continue
        try:
            obf = transform_module(cfg, entry.module)
            problems = oracle_mismatches(entry.module, obf, entry.entry,
                                         entry.inputs, entry.fuel)
            checked += len(entry.inputs)
            if problems:
                oracle_failures.extend(f"{entry.name}: {p}" for p in problems)
                row["error"] = "; ".join(problems)
            else:
                sim = similarity(entry.module, obf)
                over = overhead(entry.module, obf, entry.entry, entry.inputs,
                                time_reps, entry.fuel)
                row.update(sim.to_dict())
                row.update(over.to_dict())
                outputs[entry.name] = print_module(obf)
        except Exception as exc:
            row["error"] = f"{type(exc).__name__}: {exc}"
            oracle_failures.append(f"{entry.name}: {row['error']}")
        rows.append(row)
    report = {
        "passes": cfg.passes,
        "seed": cfg.seed,
        "rows": rows,
        "aggregates": aggregate_rows(rows),
        "oracle": {"inputs_checked": checked, "failures": oracle_failures},
        "load_failures": load_failures,
        "outputs": outputs,
    }
    if oracle_failures:
        code = EXIT_ORACLE
    elif load_failures:
        code = EXIT_PARSE
    else:
        code = EXIT_OK
    return report, code


def _emit_dots(module: IrModule, dot_dir: Path, stem: str):
    dot_dir.mkdir(parents=True, exist_ok=True)
    for i, fn in enumerate(module.functions):
        safe = re.sub(r"[^0-9A-Za-z_.-]", "_", fn.base_name) or "fn"
        (dot_dir / f"{stem}.{i:02d}.{safe}.dot").write_text(
            export_dot(fn), encoding="utf-8")


def _build_arg_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="iobf",
        description="Obfuscate textual IR with control-flow and identifier passes",
    )
    p.add_argument("input", nargs="?", help="IR file (omit with --batch)")
    p.add_argument("--passes", required=True,
                   help="comma-separated list: " + ",".join(PASS_APPLIERS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--funcs",
                   help="only transform these source base names (comma-separated); "
                        "identifier passes always apply module-wide")
    p.add_argument("--bogus-count", type=int, default=None,
                   help="decoy inner cases per outer case (nested pass)")
    p.add_argument("--indeg-margin", type=int, default=1,
                   help="bogus in-degree must exceed the real maximum by this much")
    p.add_argument("--prob", type=float, default=0.3,
                   help="per-block selection probability for bcf")
    p.add_argument("--dict", dest="dict_path",
                   help="identifier dictionary file (one name per line)")
    p.add_argument("--decoys", type=int, default=2,
                   help="overloads added per function (ident-overload/default)")
    p.add_argument("-o", "--output", help="write obfuscated IR here (default stdout)")
    p.add_argument("--report", help="write a JSON report here")
    p.add_argument("--emit-dot", metavar="DIR",
                   help="write one DOT file per function of the result")
    p.add_argument("--batch", metavar="DIR",
                   help="run over a corpus directory with manifests")
    p.add_argument("--out-dir", help="batch: write obfuscated IR files here")
    p.add_argument("--time-reps", type=int, default=0,
                   help="timing repetitions for the overhead report "
                        "(0 keeps reports deterministic)")
    return p


def main(argv=None) -> int:
    args = _build_arg_parser().parse_args(argv)
    cfg = PipelineConfig(
        passes=[s for s in args.passes.split(",") if s],
        seed=args.seed,
        funcs=args.funcs.split(",") if args.funcs else None,
        bogus_count=args.bogus_count,
        indeg_margin=args.indeg_margin,
        prob=args.prob,
        dict_path=args.dict_path,
        decoys_per_fn=args.decoys,
    )

    try:
        if args.batch:
            report, code = batch(args.batch, cfg, args.time_reps)
            outputs = report.pop("outputs")
            if args.out_dir:
                out_dir = Path(args.out_dir)
                out_dir.mkdir(parents=True, exist_ok=True)
                for name, text in outputs.items():
                    (out_dir / f"{name}.ir").write_text(text, encoding="utf-8")
            if args.report:
                Path(args.report).write_text(
                    json.dumps(report, indent=2, ensure_ascii=False) + "\n",
                    encoding="utf-8")
            print(render_table(report))
            for failure in report["oracle"]["failures"]:
                print(f"oracle failure: {failure}", file=sys.stderr)
            return code

        if not args.input:
            print("error: an input file is required unless --batch is used",
                  file=sys.stderr)
            return EXIT_PARAMETER
        text = Path(args.input).read_text(encoding="utf-8")
        result = run_pipeline(cfg, text)
        if args.output:
            Path(args.output).write_text(result.text, encoding="utf-8")
        else:
            sys.stdout.write(result.text)
        if args.emit_dot:
            _emit_dots(result.module, Path(args.emit_dot), Path(args.input).stem)
        if args.report:
            report = {
                "input": args.input,
                "passes": cfg.passes,
                "seed": cfg.seed,
                "pass_reports": result.reports,
                "similarity": similarity(result.original, result.module).to_dict(),
                "space_ratio": (instruction_count(result.module)
                                / instruction_count(result.original)),
            }
            Path(args.report).write_text(
                json.dumps(report, indent=2, ensure_ascii=False) + "\n",
                encoding="utf-8")
        return EXIT_OK
    except (PassParameterError, DictionaryExhausted) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER
    except IrError as exc:
        for diag in exc.diagnostics:
            print(f"error: {diag}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMETER


if __name__ == "__main__":
    sys.exit(main())
