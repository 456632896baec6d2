"""Command-line pipeline: detect -> matrix -> infer -> evaluate/gqd, plus simulate.

Every subcommand writes a JSON manifest next to its outputs recording
the resolved parameters, seed, inputs, outputs, and wall time, so any
run can be reproduced exactly from its manifest.

Exit codes: 2 usage or unreadable input, 3 inconsistent data, 4 numeric
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .cognate import CognatePartition, detect
from .mcmc import (
    ChainConfig,
    NumericError,
    TooFewLanguagesError,
    run_chains,
)
from .metrics import LeafSetMismatchError, bcubed, gqd
from .phylo import (
    LabelMismatchError,
    SubstParams,
    build_matrix,
    load_matrix,
    save_matrix,
)
from .simulate import SimConfig, evolve_matrix, random_tree
from .sounds import EmptyFormError, load_sound_model
from .tree import NewickParseError, emit_newick, parse_newick
from .wordlist import (
    DuplicateIdError,
    MissingColumnError,
    load_wordlist,
    read_id_column,
)

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

INPUT_ERRORS = (
    MissingColumnError,
    DuplicateIdError,
    EmptyFormError,
    FileNotFoundError,
)
DATA_ERRORS = (
    NewickParseError,
    LeafSetMismatchError,
    LabelMismatchError,
    TooFewLanguagesError,
    ValueError,
    KeyError,
)


class CliError(SystemExit):
    def __init__(self, code: int, message: str):
        print(f"error: {message}", file=sys.stderr)
        super().__init__(code)


def write_manifest(
    path: Path,
    subcommand: str,
    params: dict,
    inputs: list[str],
    outputs: list[str],
    seed: int | None,
    wall_time: float,
) -> None:
    manifest = {
        "tool": "cogphylo",
        "version": __version__,
        "subcommand": subcommand,
        "parameters": params,
        "seed": seed,
        "inputs": inputs,
        "outputs": outputs,
        "wall_time_s": round(wall_time, 3),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")


def _read_rows(path: Path) -> tuple[list[str], list[list[str]]]:
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle, delimiter="\t")
        header = next(reader)
        return header, [row for row in reader if any(cell.strip() for cell in row)]


def cmd_detect(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    try:
        model = load_sound_model(args.sound_model) if args.sound_model else None
        wordlist = load_wordlist(args.wordlist, model)
    except INPUT_ERRORS as exc:
        raise CliError(EXIT_USAGE, str(exc))
    partition = detect(
        wordlist,
        method=args.method,
        threshold=args.threshold,
        gram_length=args.gram,
        prune=args.prune,
        partitioner=args.partitioner,
        seed=args.seed,
        jobs=args.jobs,
    )
    header, rows = _read_rows(Path(args.wordlist))
    id_pos = [h.strip().upper() for h in header].index("ID")
    out_path = Path(args.out)
    with open(out_path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter="\t", lineterminator="\n")
        writer.writerow(header + ["PREDCOGID"])
        for row in rows:
            writer.writerow(row + [partition.assignment[int(row[id_pos])]])
    elapsed = time.perf_counter() - started
    write_manifest(
        out_path.with_name(out_path.name + ".manifest.json"),
        "detect",
        {
            "method": args.method,
            "threshold": args.threshold,
            "gram": args.gram,
            "prune": args.prune,
            "partitioner": args.partitioner,
            "sound_model": args.sound_model,
            "jobs": args.jobs,
        },
        [str(args.wordlist)],
        [str(out_path)],
        args.seed,
        elapsed,
    )
    print(f"{args.method}: {len(partition.clusters())} clusters over {len(wordlist)} forms")
    print(f"Running Time: {elapsed:.3f}s")
    return 0


def cmd_matrix(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    try:
        wordlist = load_wordlist(args.wordlist)
        assignment = read_id_column(args.wordlist, args.column)
    except INPUT_ERRORS as exc:
        raise CliError(EXIT_USAGE, str(exc))
    try:
        matrix = build_matrix(
            CognatePartition(assignment=assignment),
            wordlist,
            drop_constant=args.drop_constant,
        )
    except DATA_ERRORS as exc:
        raise CliError(EXIT_DATA, str(exc))
    save_matrix(matrix, args.out)
    elapsed = time.perf_counter() - started
    write_manifest(
        Path(args.out).with_name(Path(args.out).name + ".manifest.json"),
        "matrix",
        {"column": args.column, "drop_constant": args.drop_constant},
        [str(args.wordlist)],
        [str(args.out)],
        None,
        elapsed,
    )
    print(f"{matrix.n_languages} languages x {matrix.n_columns} cognate sets")
    return 0


def cmd_infer(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    try:
        matrix = load_matrix(args.matrix)
    except (FileNotFoundError, ValueError) as exc:
        raise CliError(EXIT_USAGE, str(exc))
    t0_values = [float(v) for v in str(args.t0).split(",")]
    configs = [
        ChainConfig(
            t0=t0,
            cooling=args.gamma,
            max_iters=args.max_iters,
            stop_window=args.stop_window,
            seed=args.seed + idx,
        )
        for idx, t0 in enumerate(t0_values)
    ]
    try:
        best, results = run_chains(matrix, configs, jobs=args.jobs)
    except (TooFewLanguagesError, ValueError) as exc:
        raise CliError(EXIT_DATA, str(exc))
    except NumericError as exc:
        raise CliError(EXIT_NUMERIC, str(exc))
    prefix = Path(args.out_prefix)
    map_path = prefix.with_name(prefix.name + ".map.nwk")
    cons_path = prefix.with_name(prefix.name + ".consensus.nwk")
    trace_path = prefix.with_name(prefix.name + ".trace.csv")
    with open(map_path, "w", encoding="utf-8") as handle:
        handle.write(emit_newick(best.map_tree) + "\n")
    with open(cons_path, "w", encoding="utf-8") as handle:
        handle.write(emit_newick(best.consensus_tree, supports=True) + "\n")
    best.trace.to_csv(trace_path)
    elapsed = time.perf_counter() - started
    write_manifest(
        prefix.with_name(prefix.name + ".manifest.json"),
        "infer",
        {
            "t0": t0_values,
            "gamma": args.gamma,
            "max_iters": args.max_iters,
            "stop_window": args.stop_window,
            "jobs": args.jobs,
        },
        [str(args.matrix)],
        [str(map_path), str(cons_path), str(trace_path)],
        args.seed,
        elapsed,
    )
    for t0, result in zip(t0_values, results):
        print(
            f"T0={t0:g} iterations={result.n_iter} "
            f"logpost={result.best_log_posterior:.4f} time={result.wall_time:.3f}s"
        )
    print(f"best logpost={best.best_log_posterior:.4f} map={map_path}")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        pred = CognatePartition(read_id_column(args.pred, args.pred_column))
        gold = CognatePartition(read_id_column(args.gold, args.gold_column))
    except INPUT_ERRORS as exc:
        raise CliError(EXIT_USAGE, str(exc))
    try:
        score = bcubed(pred, gold)
    except DATA_ERRORS as exc:
        raise CliError(EXIT_DATA, str(exc))
    print("Precision\tRecall\tF-score")
    print(f"{score.precision:.4f}\t{score.recall:.4f}\t{score.fscore:.4f}")
    return 0


def cmd_gqd(args: argparse.Namespace) -> int:
    try:
        inferred = parse_newick(Path(args.inferred).read_text(encoding="utf-8"))
        gold = parse_newick(Path(args.gold).read_text(encoding="utf-8"))
    except (FileNotFoundError, NewickParseError) as exc:
        raise CliError(EXIT_USAGE, str(exc))
    try:
        report = gqd(inferred, gold)
    except DATA_ERRORS as exc:
        raise CliError(EXIT_DATA, str(exc))
    print(
        f"total_quartets={report.total_quartets} "
        f"gold_resolved={report.gold_resolved} shared={report.shared} "
        f"gqd={report.gqd:.6f}"
    )
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    try:
        params = SubstParams(pi1=args.pi1, mu=args.mu)
        cfg = SimConfig(
            n_languages=args.languages,
            n_columns=args.columns,
            params=params,
            branch_rate=args.rate,
            seed=args.seed,
        )
    except ValueError as exc:
        raise CliError(EXIT_USAGE, str(exc))
    rng = np.random.default_rng(np.random.SeedSequence(args.seed))
    tree = random_tree(args.languages, args.rate, rng)
    matrix = evolve_matrix(tree, cfg, rng)
    save_matrix(matrix, args.out_matrix)
    with open(args.out_tree, "w", encoding="utf-8") as handle:
        handle.write(emit_newick(tree) + "\n")
    elapsed = time.perf_counter() - started
    write_manifest(
        Path(args.out_matrix).with_name(Path(args.out_matrix).name + ".manifest.json"),
        "simulate",
        {
            "languages": args.languages,
            "columns": args.columns,
            "pi1": args.pi1,
            "mu": args.mu,
            "rate": args.rate,
        },
        [],
        [str(args.out_matrix), str(args.out_tree)],
        args.seed,
        elapsed,
    )
    print(f"simulated {args.languages} languages x {args.columns} columns")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cogphylo",
        description="Cognate detection and Bayesian phylogenetic inference.",
    )
    parser.add_argument("--version", action="version", version=f"cogphylo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="cluster wordlist forms into cognate sets")
    p.add_argument("--wordlist", required=True)
    p.add_argument("--method", required=True, choices=["ccm", "editdist", "sca", "bipskip"])
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--gram", type=int, default=4)
    p.add_argument("--prune", type=float, default=0.2)
    p.add_argument("--partitioner", choices=["components", "labelprop"], default="labelprop")
    p.add_argument("--sound-model", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("matrix", help="build the binary character matrix")
    p.add_argument("--wordlist", required=True)
    p.add_argument("--column", default="PREDCOGID")
    p.add_argument("--drop-constant", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("infer", help="sample trees by annealed MCMC")
    p.add_argument("--matrix", required=True)
    p.add_argument("--t0", default="50")
    p.add_argument("--gamma", type=float, default=0.999)
    p.add_argument("--max-iters", type=int, default=50_000)
    p.add_argument("--stop-window", type=int, default=2_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("evaluate", help="B-Cubed scores of predicted vs gold cognates")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--pred-column", default="PREDCOGID")
    p.add_argument("--gold-column", default="COGID")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gqd", help="generalized quartet distance between two trees")
    p.add_argument("--inferred", required=True)
    p.add_argument("--gold", required=True)
    p.set_defaults(func=cmd_gqd)

    p = sub.add_parser("simulate", help="simulate a tree and a character matrix")
    p.add_argument("--languages", type=int, required=True)
    p.add_argument("--columns", type=int, required=True)
    p.add_argument("--pi1", type=float, default=0.3)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--rate", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-matrix", required=True)
    p.add_argument("--out-tree", required=True)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError:
        raise
    except INPUT_ERRORS as exc:
        raise CliError(EXIT_USAGE, str(exc))
    except NumericError as exc:
        raise CliError(EXIT_NUMERIC, str(exc))
    except DATA_ERRORS as exc:
        raise CliError(EXIT_DATA, str(exc))


if __name__ == "__main__":
    sys.exit(main())
