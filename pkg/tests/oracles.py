"""Naive reference implementations used as independent oracles.

These deliberately avoid the library's code paths: row dicts instead of index
math, insertion sort instead of sorted(), linear-scan grouping instead of
hashing, and full prefix-sum enumeration instead of a trie walk. They are only
meant for the small random domains the tests draw from.
"""

from decimal import Decimal

from tableprep.table import Table


def ref_render(cell):
    if cell is None:
        return ""
    if isinstance(cell, Decimal):
        # oracle domain uses integer decimals only
        return str(int(cell))
    return cell


def ref_select(table: Table, requested) -> Table:
    requested = set(requested)
    keep = [c for c in table.columns if c in requested]
    assert keep, "oracle callers must pre-check NoValidColumns"
    dict_rows = [dict(zip(table.columns, row)) for row in table.rows]
    return Table(tuple(keep), tuple(tuple(d[c] for c in keep) for d in dict_rows))


def _is_plain_number(text: str) -> bool:
    body = text[1:] if text[:1] in "+-" else text
    if body.count(".") > 1 or body.strip(".") == "":
        return False
    return body.replace(".", "", 1).isdigit()


def ref_satisfies(cell, cmp, value):
    if cell is None:
        return cmp == "!=" and value is not None
    numeric = isinstance(cell, Decimal) and (
        isinstance(value, Decimal)
        or (isinstance(value, str) and _is_plain_number(value))
    )
    if numeric:
        left = cell
        right = value if isinstance(value, Decimal) else Decimal(value)
    else:
        left, right = ref_render(cell), ref_render(value)
    return {
        "==": left == right,
        "!=": left != right,
        ">": left > right,
        "<": left < right,
        ">=": left >= right,
        "<=": left <= right,
    }[cmp]


def ref_filter(table: Table, column, cmp, value) -> Table:
    idx = list(table.columns).index(column)
    rows = tuple(row for row in table.rows if ref_satisfies(row[idx], cmp, value))
    return Table(table.columns, rows)


def ref_sort_by(table: Table, column, order, k=None) -> Table:
    idx = list(table.columns).index(column)
    cells = [row[idx] for row in table.rows]
    numeric = all(isinstance(c, Decimal) for c in cells if c is not None)

    def sort_key(cell):
        return cell if numeric else ref_render(cell)

    non_null = [row for row in table.rows if row[idx] is not None]
    nulls = [row for row in table.rows if row[idx] is None]

    # stable insertion sort: insert before the first strictly worse element
    result = []
    for row in non_null:
        key = sort_key(row[idx])
        pos = len(result)
        for j, placed in enumerate(result):
            placed_key = sort_key(placed[idx])
            if (placed_key > key) if order == "asc" else (placed_key < key):
                pos = j
                break
        result.insert(pos, row)

    ordered = result + nulls
    if k is not None:
        ordered = ordered[:k]
    return Table(table.columns, tuple(ordered))


def ref_group_by(table: Table, column) -> Table:
    idx = list(table.columns).index(column)
    entries = []  # [representative, count], first-appearance order

    def same(a, b):
        if a is None or b is None:
            return a is None and b is None
        if isinstance(a, Decimal) != isinstance(b, Decimal):
            return False
        return a == b

    for row in table.rows:
        cell = row[idx]
        for entry in entries:
            if same(entry[0], cell):
                entry[1] += 1
                break
        else:
            entries.append([cell, 1])
    count_name = "count_" if column == "count" else "count"
    return Table(
        (column, count_name),
        tuple((rep, Decimal(count)) for rep, count in entries),
    )


def ref_best_path(sequences):
    """Max-weight path by explicit prefix-sum enumeration over all distinct
    sequences (prefixes included; they can never win because weights are
    positive, which makes this enumeration equivalent to leaf enumeration)."""
    sequences = [tuple(seq) for seq in sequences]
    distinct = {seq for seq in sequences if seq}

    def score(seq):
        return sum(
            sum(1 for other in sequences if other[: j + 1] == seq[: j + 1])
            for j in range(len(seq))
        )

    best = None
    for seq in distinct:
        candidate = (score(seq), len(seq), seq)
        if best is None:
            best = candidate
            continue
        if candidate[0] != best[0]:
            if candidate[0] > best[0]:
                best = candidate
        elif candidate[1] != best[1]:
            if candidate[1] > best[1]:
                best = candidate
        elif candidate[2] < best[2]:
            best = candidate
    return list(best[2]) if best else []
