"""Command-line driver for the topic discovery pipeline.

Exit codes: 0 success, 1 usage error, 2 data error (bad input, missing
prerequisite artifacts, corrupt store).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import pipeline
from .errors import TermWeaveError
from .store import Project

USAGE_ERROR = 1
DATA_ERROR = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits 2; we reserve that
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_ERROR)


def _project_root(args: argparse.Namespace) -> Path:
    root = args.project or os.environ.get("TERMWEAVE_PROJECT")
    if not root:
        print(
            "no project directory: pass --project or set TERMWEAVE_PROJECT",
            file=sys.stderr,
        )
        raise SystemExit(USAGE_ERROR)
    return Path(root)


def _open_project(args: argparse.Namespace) -> Project:
    project = Project(_project_root(args))
    if not project.initialized():
        print(f"project not initialized: {project.root} (run `init` first)", file=sys.stderr)
        raise SystemExit(DATA_ERROR)
    return project


def _emit(args: argparse.Namespace, payload: dict, text: str) -> None:
    if getattr(args, "format", "text") == "json":
        print(json.dumps(payload, indent=1, sort_keys=True, default=str))
    else:
        print(text)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="termweave", description=__doc__)
    parser.add_argument("--project", help="project directory (default: $TERMWEAVE_PROJECT)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a project directory with a default config")
    p.add_argument("--config", help="JSON config file merged over the defaults")

    p = sub.add_parser("ingest", help="load and annotate a corpus")
    p.add_argument("source", help="corpus JSONL file or directory of .txt files")
    p.add_argument("--format", choices=["jsonl", "txt-dir"], dest="corpus_format")
    p.add_argument(
        "--preannotated",
        action="store_true",
        help="source is a pre-annotated token JSONL stream",
    )

    p = sub.add_parser("rank", help="compute document and corpus term rankings")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--window", type=int)
    p.add_argument("--csv-dir", help="also write corpus- and document-level ranking CSVs here")

    p = sub.add_parser("graph", help="build the rank-reduced term co-occurrence graph")
    p.add_argument("--reduction", type=float, help="percentage of ranked terms kept per document")

    p = sub.add_parser("detect", help="detect stable topics at one resolution")
    _add_detect_flags(p)
    p.add_argument("--format", choices=["text", "json"], default="text")

    p = sub.add_parser("sheets", help="write stratified topic sheets for a run")
    p.add_argument("--run", required=True)
    p.add_argument("--vectors", help="word-vector file (text format)")
    p.add_argument("--delta", type=float, help="embedding cluster distance threshold")
    p.add_argument("--tau", type=float, help="informative-term rank threshold")

    p = sub.add_parser("eval", help="crosstable and classification stats against gold classes")
    p.add_argument("--run", required=True)
    p.add_argument("--mode", choices=["tokens", "unique"], default="tokens")
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")

    p = sub.add_parser("compare", help="shared-term flow matrix between two runs")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")

    p = sub.add_parser("sweep", help="detect over a list of resolutions and compare neighbors")
    p.add_argument("--gamma", required=True, help="comma-separated resolution values")
    p.add_argument("--reduction", type=float)
    p.add_argument("--n-rep", type=int, dest="n_rep")
    p.add_argument("--n-con", type=int, dest="n_con")
    p.add_argument("--min-size-frac", type=float, dest="min_size_fraction")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("serve", help="run the HTTP service for this project")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    return parser


def _add_detect_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=float, help="resolution parameter")
    p.add_argument("--reduction", type=float)
    p.add_argument("--n-rep", type=int, dest="n_rep")
    p.add_argument("--n-con", type=int, dest="n_con")
    p.add_argument("--min-size-frac", type=float, dest="min_size_fraction")
    p.add_argument("--seed", type=int)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code or 0
    try:
        return _dispatch(args)
    except TermWeaveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except SystemExit as exc:
        return exc.code or 0


def _dispatch(args: argparse.Namespace) -> int:
    if args.command == "init":
        config = json.loads(Path(args.config).read_text()) if args.config else None
        project = Project.init(_project_root(args), config)
        print(f"init: project at {project.root}")
        return 0

    project = _open_project(args)

    if args.command == "ingest":
        refs = pipeline.ingest_stage(
            project, args.source, args.corpus_format, args.preannotated
        )
        print(
            f"ingest: {refs['n_documents']} documents, "
            f"{refs['n_terms']} unique terms"
        )
        return 0

    if args.command == "rank":
        refs = pipeline.rank_stage(
            project, alpha=args.alpha, beta=args.beta, window=args.window
        )
        if args.csv_dir:
            pipeline.export_ranking_csvs(project, args.csv_dir)
        print(f"rank: rankings {refs['rankings'][:8]}, corpus ranking {refs['corpus_ranking'][:8]}")
        return 0

    if args.command == "graph":
        refs = pipeline.graph_stage(project, args.reduction)
        print(
            f"graph: p={refs['reduction']:g} -> {refs['n_vertices']} vertices, "
            f"{refs['n_edges']} edges"
        )
        return 0

    if args.command == "detect":
        params = pipeline.detect_params_from_config(
            project,
            gamma=args.gamma,
            n_rep=args.n_rep,
            n_con=args.n_con,
            min_size_fraction=args.min_size_fraction,
            seed=args.seed,
        )
        result = pipeline.detect_stage(project, params, args.reduction)
        cached = " (cached)" if result.get("cached") else ""
        _emit(
            args,
            result,
            f"detect: gamma={params.gamma:g} -> {result['n_topics']} topics, "
            f"{result['coverage']:.1%} of terms assigned, run {result['run']}{cached}",
        )
        return 0

    if args.command == "sheets":
        result = pipeline.sheets_stage(project, args.run, args.vectors, args.delta, args.tau)
        print(f"sheets: {len(result['sheets'])} topic sheets for run {args.run}")
        return 0

    if args.command == "eval":
        result = pipeline.eval_stage(project, args.run, args.mode)
        if args.format == "csv":
            print(project.load_artifact(result["crosstable"]).decode(), end="")
            print(project.load_artifact(result["stats"]).decode(), end="")
            return 0
        _emit(
            args,
            result,
            f"eval: weighted f1 {result['weighted_f1']:.3f} over "
            f"{len(result['classes'])} classes ({result['unclassified']} unclassified)",
        )
        return 0

    if args.command == "compare":
        result = pipeline.compare_stage(project, args.run_a, args.run_b)
        matrix = result["matrix"]
        if args.format == "csv":
            print("," + ",".join(str(c) for c in matrix["cols"]))
            for row_id, row in zip(matrix["rows"], matrix["counts"]):
                print(f"{row_id}," + ",".join(str(x) for x in row))
            return 0
        _emit(
            args,
            result,
            f"compare: {len(matrix['rows'])}x{len(matrix['cols'])} flow matrix, "
            f"{sum(sum(row) for row in matrix['counts'])} shared terms",
        )
        return 0

    if args.command == "sweep":
        try:
            gammas = [float(g) for g in args.gamma.split(",") if g.strip()]
        except ValueError:
            print(f"invalid --gamma list: {args.gamma}", file=sys.stderr)
            return USAGE_ERROR
        results = pipeline.sweep_stage(
            project,
            gammas,
            args.reduction,
            n_rep=args.n_rep,
            n_con=args.n_con,
            min_size_fraction=args.min_size_fraction,
            seed=args.seed,
        )
        for res in results:
            print(
                f"sweep: gamma={res['params']['gamma']:g} -> {res['n_topics']} topics "
                f"(run {res['run']})"
            )
        return 0

    if args.command == "serve":
        import uvicorn

        from .service import create_app

        cfg = project.config().get("serve", {})
        host = args.host or cfg.get("host", "127.0.0.1")
        port = args.port or int(cfg.get("port", 8532))
        app = create_app(project)
        print(f"serve: http://{host}:{port}")
        try:
            uvicorn.run(app, host=host, port=port, log_level="warning")
        except OSError as exc:  # e.g. port already in use
            print(f"error: {exc}", file=sys.stderr)
            return DATA_ERROR
        return 0

    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
