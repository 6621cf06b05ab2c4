"""Dataset instances and JSONL I/O.

One instance per line: ``{"id": ..., "question": ..., "table": {"header":
[...], "rows": [[...]]}, "answers": [...]}``. The answers field is optional
for unlabeled runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .errors import DatasetError, TablePrepError
from .reward import AnswerSet
from .table import Table, load_json_table, serialize_json


@dataclass(frozen=True)
class Instance:
    id: str
    question: str
    table: Table
    answers: AnswerSet | None = None

    def to_json(self) -> dict:
        doc = {
            "id": self.id,
            "question": self.question,
            "table": serialize_json(self.table),
        }
        if self.answers is not None:
            doc["answers"] = list(self.answers.answers)
        return doc


def instance_from_json(doc: dict, matching: str = "exact") -> Instance:
    if not isinstance(doc, dict):
        raise DatasetError("instance must be a JSON object")
    for key in ("id", "question", "table"):
        if key not in doc:
            raise DatasetError(f"instance is missing {key!r}")
    try:
        table = load_json_table(doc["table"])
    except TablePrepError as err:
        raise DatasetError(f"bad table: {err}") from err
    answers = None
    raw_answers = doc.get("answers")
    if raw_answers is not None:
        if not isinstance(raw_answers, list) or not raw_answers:
            raise DatasetError("'answers' must be a non-empty list when present")
        answers = AnswerSet(tuple(str(a) for a in raw_answers), matching)
    return Instance(str(doc["id"]), str(doc["question"]), table, answers)


def load_instances_jsonl(path: str, matching: str = "exact"):
    """Read instances from a JSONL file.

    Returns ``(instances, line_errors)`` where line_errors records malformed
    lines as ``{"line": n, "error": msg}`` so batch runs can continue.
    Duplicate ids are a dataset error.
    """
    instances: list[Instance] = []
    errors: list[dict] = []
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if line.strip() == "":
                continue
            try:
                doc = json.loads(line)
                instance = instance_from_json(doc, matching)
                if instance.id in seen_ids:
                    raise DatasetError(f"duplicate instance id {instance.id!r}")
                seen_ids.add(instance.id)
                instances.append(instance)
            except (json.JSONDecodeError, DatasetError) as err:
                errors.append({"line": line_no, "error": str(err)})
    return instances, errors


def write_instances_jsonl(path: str, instances) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for instance in instances:
            fh.write(json.dumps(instance.to_json(), ensure_ascii=False) + "\n")
