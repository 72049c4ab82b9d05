"""Query execution against an opened database: compile, plan, run."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .algebra import element_name
from .context import QueryContext
from .dgql import compile_query
from .dgql.ast import FormalQuery
from .exec import ExecStats
from .planner import plan_query


@dataclass
class Result:
    columns: tuple
    rows: list  # tuples of identifiers, None for null
    context: QueryContext
    stats: ExecStats = field(default_factory=ExecStats)
    notes: list = field(default_factory=list)
    elapsed: float = 0.0
    plan: str | None = None  # EXPLAIN text; rows are empty then

    def display_rows(self) -> list:
        return [tuple(None if v is None else self.context.display(v) for v in row) for row in self.rows]

    def stats_dict(self) -> dict:
        return {
            "rows": len(self.rows),
            "elapsed_ms": round(self.elapsed * 1000, 3),
            "bindings": self.stats.bindings,
            "seeks": self.stats.seeks,
            "pages_read": self.stats.pages_read,
            "page_requests": self.stats.page_requests,
        }


class Engine:
    def __init__(self, db, sort_budget: int | None = None):
        self.db = db
        self.sort_budget = sort_budget

    def execute(self, query: str | FormalQuery, strategy: str = "auto", strict: bool = False,
                row_cap: int | None = None) -> Result:
        """Run a query.  ``row_cap`` truncates output after ordering and the
        query's own LIMIT, so the rows returned are a prefix of the uncapped
        result."""
        formal = compile_query(query) if isinstance(query, str) else query
        ctx = QueryContext(self.db)
        started = time.perf_counter()
        pool = self.db.pool
        reads, requests = pool.reads, pool.requests
        planned = plan_query(formal, self.db, ctx, strategy, strict, self.sort_budget)
        columns = tuple(element_name(e) for e in formal.select)
        result = Result(columns, [], ctx, planned.stats, list(planned.notes))
        if formal.explain:
            result.plan = planned.explain()
        else:
            root = planned.root
            root.open(planned.seeds)
            while row_cap is None or len(result.rows) < row_cap:
                row = root.next()
                if row is None:
                    break
                result.rows.append(row)
        planned.stats.pages_read = pool.reads - reads
        planned.stats.page_requests = pool.requests - requests
        result.elapsed = time.perf_counter() - started
        return result


__all__ = ["Engine", "Result"]
