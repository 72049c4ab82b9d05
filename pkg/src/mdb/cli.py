"""Command-line interface: ``mdb import``, ``mdb query`` and ``mdb shell``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

from .engine import Engine, Result
from .errors import MdbError, StorageError
from .ingest import import_file
from .planner import STRATEGIES
from .storage import Database
from .storage.pages import DEFAULT_BUFFER_PAGES, DEFAULT_PAGE_SIZE

BUFFER_ENV = "MDB_BUFFER_PAGES"


@dataclass
class CliConfig:
    db_dir: str
    buffer_pages: int = DEFAULT_BUFFER_PAGES
    page_size: int = DEFAULT_PAGE_SIZE
    strategy: str = "auto"
    strict: bool = False
    limit: int | None = None
    output: str = "tsv"
    stats: bool = False


def _tsv_field(value) -> str:
    if value is None:
        return ""
    text = str(value)
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def format_result(result: Result, output: str, stats: bool) -> str:
    """Render rows (and optionally the stats line) exactly as printed."""
    if result.plan is not None:
        lines = [result.plan]
    elif output == "jsonl":
        lines = [json.dumps(dict(zip(result.columns, row)), ensure_ascii=False)
                 for row in result.display_rows()]
    else:
        lines = ["\t".join(_tsv_field(c) for c in result.columns)]
        lines += ["\t".join(_tsv_field(v) for v in row) for row in result.display_rows()]
    if stats:
        lines.append(json.dumps(result.stats_dict()))
    return "".join(line + "\n" for line in lines)


def _exit_code(exc: MdbError) -> int:
    return 2 if isinstance(exc, StorageError) else 1


def _error(exc: MdbError) -> int:
    print(f"error: {exc}", file=sys.stderr)
    return _exit_code(exc)


def _buffer_pages(value) -> int:
    if value is not None:
        return value
    env = os.environ.get(BUFFER_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            print(f"warning: ignoring non-integer {BUFFER_ENV}={env!r}", file=sys.stderr)
    return DEFAULT_BUFFER_PAGES


def _config(args) -> CliConfig:
    return CliConfig(args.db, _buffer_pages(args.buffer_pages), args.page_size,
                     getattr(args, "strategy", "auto"), getattr(args, "strict", False),
                     getattr(args, "limit", None), getattr(args, "format", "tsv"), getattr(args, "stats", False))


def run_query(engine: Engine, text: str, config: CliConfig, out) -> int:
    """Execute one query and print it; returns the exit status."""
    try:
        result = engine.execute(text, config.strategy, config.strict, config.limit)
    except MdbError as exc:
        return _error(exc)
    for note in result.notes:
        print(f"warning: {note}", file=sys.stderr)
    out.write(format_result(result, config.output, config.stats))
    out.flush()
    return 0


def cmd_import(source: str, config: CliConfig) -> int:
    try:
        stats = import_file(source, config.db_dir, config.page_size, config.buffer_pages)
    except MdbError as exc:
        return _error(exc)
    print(json.dumps(stats))
    return 0


def cmd_query(text: str, config: CliConfig) -> int:
    try:
        db = Database.open(config.db_dir, config.buffer_pages)
    except MdbError as exc:
        return _error(exc)
    try:
        return run_query(Engine(db), text, config, sys.stdout)
    finally:
        db.close()


def cmd_shell(config: CliConfig, stdin=None, out=None) -> int:
    stdin = stdin or sys.stdin
    out = out or sys.stdout
    try:
        db = Database.open(config.db_dir, config.buffer_pages)
    except MdbError as exc:
        return _error(exc)
    interactive = stdin.isatty()
    engine = Engine(db)
    buffer: list[str] = []
    try:
        while True:
            if interactive:
                out.write("...> " if buffer else "mdb> ")
                out.flush()
            line = stdin.readline()
            if not line:
                break
            stripped = line.strip()
            if not buffer:
                if not stripped:
                    continue
                if stripped == "\\q":
                    break
                if stripped == "\\timing":
                    config.stats = not config.stats
                    out.write(f"timing {'on' if config.stats else 'off'}\n")
                    continue
            buffer.append(line)
            text = "".join(buffer)
            if text.rstrip().endswith(";"):
                buffer = []
                run_query(engine, text.rstrip()[:-1], config, out)
    finally:
        db.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mdb", description="Embedded property domain graph database.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--db", required=True, help="database directory")
        p.add_argument("--buffer-pages", type=int, default=None,
                       help=f"buffer pool frames (default ${BUFFER_ENV} or {DEFAULT_BUFFER_PAGES})")
        p.add_argument("--page-size", type=int, default=DEFAULT_PAGE_SIZE, help="page size in bytes for import")

    def querying(p):
        p.add_argument("--strategy", choices=STRATEGIES, default="auto")
        p.add_argument("--strict", action="store_true", help="fail instead of falling back from --strategy lf")
        p.add_argument("--limit", type=int, default=None, help="cap on printed rows")
        p.add_argument("--format", choices=("tsv", "jsonl"), default="tsv")
        p.add_argument("--stats", action="store_true", help="append a JSON statistics line")

    p = sub.add_parser("import", help="bulk-load a text file into a new database")
    p.add_argument("file")
    common(p)

    p = sub.add_parser("query", help="run one query")
    p.add_argument("query", nargs="?", help="query text, or - for standard input")
    p.add_argument("-f", "--file", help="read the query from a file")
    common(p)
    querying(p)

    p = sub.add_parser("shell", help="interactive shell; queries end with ';'")
    common(p)
    querying(p)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    config = _config(args)
    if args.command == "import":
        return cmd_import(args.file, config)
    if args.command == "shell":
        return cmd_shell(config)
    if args.file:
        try:
            with open(args.file, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"error: cannot read query file ({exc.strerror}): {args.file}", file=sys.stderr)
            return 2
    elif args.query in (None, "-"):
        text = sys.stdin.read()
    else:
        text = args.query
    return cmd_query(text.strip().rstrip(";"), config)


if __name__ == "__main__":
    sys.exit(main())
