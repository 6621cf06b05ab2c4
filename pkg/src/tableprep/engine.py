"""Pipeline execution with full intermediate traces and prefix re-execution.

Failure policy: the first operator error truncates the pipeline. The failed
step is recorded, every later step is marked skipped, and the trace's final
table is the last successfully produced one, so downstream QA always has a
usable table.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import TablePrepError
from .ops import (
    AddColumnOp,
    CleanColumnOp,
    FilterOp,
    GroupByOp,
    OperatorSpec,
    Pipeline,
    SelectOp,
    SortByOp,
    canonical_key,
    exec_filter,
    exec_group_by,
    exec_select,
    exec_sort_by,
)
from .semantic import SemanticExecutor, exec_add_column, exec_clean_column
from .table import Table

OK = "ok"
FAILED = "failed"
SKIPPED = "skipped"


@dataclass(frozen=True)
class StepRecord:
    spec: OperatorSpec
    status: str
    table_after: Table
    error: str | None = None


@dataclass(frozen=True)
class ExecutionTrace:
    initial: Table
    steps: tuple[StepRecord, ...]
    final: Table
    truncated_at: int | None = None


class _NoExecutor:
    """Placeholder when no semantic executor is configured; semantic ops fail."""

    def infer_column(self, table, new_column, description):
        raise TablePrepError("no semantic executor configured")

    def rewrite_column(self, table, column, description):
        raise TablePrepError("no semantic executor configured")


def apply_operator(spec: OperatorSpec, table: Table, executor: SemanticExecutor) -> Table:
    if isinstance(spec, SelectOp):
        return exec_select(table, spec.columns)
    if isinstance(spec, FilterOp):
        return exec_filter(table, spec.column, spec.cmp, spec.value)
    if isinstance(spec, SortByOp):
        return exec_sort_by(table, spec.column, spec.order, spec.k)
    if isinstance(spec, GroupByOp):
        return exec_group_by(table, spec.column)
    if isinstance(spec, AddColumnOp):
        return exec_add_column(table, spec.new_column, spec.description, executor)
    if isinstance(spec, CleanColumnOp):
        return exec_clean_column(table, spec.column, spec.description, executor)
    raise TablePrepError(f"unsupported operator spec {type(spec).__name__}")


def execute(pipeline: Pipeline, table: Table, executor: SemanticExecutor | None = None) -> ExecutionTrace:
    """Run the pipeline, capturing every intermediate table and step status.

    Never raises for operator-level failures; those are recorded in the trace.
    """
    ex = executor if executor is not None else _NoExecutor()
    current = table
    steps: list[StepRecord] = []
    truncated_at: int | None = None
    for i, spec in enumerate(pipeline.ops):
        if truncated_at is not None:
            steps.append(StepRecord(spec, SKIPPED, current))
            continue
        try:
            current = apply_operator(spec, current, ex)
            steps.append(StepRecord(spec, OK, current))
        except TablePrepError as err:
            truncated_at = i
            steps.append(StepRecord(spec, FAILED, current, error=str(err)))
    return ExecutionTrace(table, tuple(steps), current, truncated_at)


def apply_prefix(pipeline: Pipeline, table: Table, k: int, executor: SemanticExecutor | None = None) -> Table:
    """Run only the first ``k`` operators under the same truncation policy."""
    if k < 0 or k > len(pipeline):
        raise ValueError(f"prefix length {k} out of range for pipeline of {len(pipeline)} ops")
    if k == 0:
        return table
    return execute(Pipeline(pipeline.ops[:k]), table, executor).final


def trace_to_json(trace: ExecutionTrace) -> dict:
    """Shape used by the CLI's ``exec --trace`` output."""
    return {
        "initial": {"rows": trace.initial.n_rows, "cols": trace.initial.n_cols},
        "final": {"rows": trace.final.n_rows, "cols": trace.final.n_cols},
        "truncated_at": trace.truncated_at,
        "steps": [
            {
                "op": canonical_key(step.spec),
                "status": step.status,
                "rows": step.table_after.n_rows,
                "cols": step.table_after.n_cols,
                **({"error": step.error} if step.error else {}),
            }
            for step in trace.steps
        ],
    }
