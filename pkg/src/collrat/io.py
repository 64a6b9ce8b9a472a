"""CSV ingestion, option-subset scanning, and report emission.

Input schema (header required): ``subject,option_a,option_b,choice`` with
``choice`` in {a, b}, plus an optional trailing ``repeat`` column. Rows may
list a pair in either orientation; responses are canonicalized so that 1
means the lexicographically first option was chosen.
"""

from __future__ import annotations

import csv
import io as _io
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .collective import TRIANGLE_FACET_RANGE, triangle_membership_mask
from .core import ChoiceVector, OptionSet, PairIndexer
from .errors import ArgumentError, DataError, ResourceLimitError
from .inference import PanelDataset, ResponseRecord, aggregate
from .transitivity import rationalizable_mask

CSV_HEADER = ["subject", "option_a", "option_b", "choice"]


def parse_responses(path, labels=None) -> PanelDataset:
    """Read a response CSV into a panel, canonicalizing pair orientation.

    With ``labels`` given, unknown option labels are an error; otherwise the
    option set is the sorted set of labels seen in the file. Repeats may be
    given explicitly in a 5th ``repeat`` column (duplicate (subject, pair,
    repeat) rows are rejected) or implicitly by row order.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="") as fh:
        return _parse_stream(fh, labels, str(path))


def _parse_stream(fh, labels, source: str) -> PanelDataset:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{source}: empty file") from None
    header = [h.strip().lower() for h in header]
    has_repeat = header == CSV_HEADER + ["repeat"]
    if not has_repeat and header != CSV_HEADER:
        raise DataError(
            f"{source}: header must be {','.join(CSV_HEADER)}[,repeat], got {','.join(header)}"
        )
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"{source}:{lineno}: expected {len(header)} fields, got {len(row)}")
        subject, opt_a, opt_b, choice = (c.strip() for c in row[:4])
        if not subject:
            raise DataError(f"{source}:{lineno}: empty subject id")
        if opt_a == opt_b:
            raise DataError(f"{source}:{lineno}: a menu needs two distinct options")
        if choice not in ("a", "b"):
            raise DataError(f"{source}:{lineno}: choice must be 'a' or 'b', got {choice!r}")
        repeat = None
        if has_repeat:
            try:
                repeat = int(row[4])
            except ValueError:
                raise DataError(f"{source}:{lineno}: repeat must be an integer") from None
        rows.append((lineno, subject, opt_a, opt_b, choice, repeat))

    if labels is not None:
        options = OptionSet(tuple(labels))
        known = set(options.labels)
        for lineno, _, a, b, _, _ in rows:
            for lab in (a, b):
                if lab not in known:
                    raise DataError(f"{source}:{lineno}: unknown option label {lab!r}")
    else:
        seen = {lab for _, _, a, b, _, _ in rows for lab in (a, b)}
        if len(seen) < 2:
            raise DataError(f"{source}: fewer than two options in the data")
        options = OptionSet.sorted_from(seen)

    idxr = PairIndexer(options.n)
    records = []
    auto_repeat: dict[tuple[str, int], int] = {}
    for lineno, subject, a, b, choice, repeat in rows:
        ia, ib = options.index_of(a), options.index_of(b)
        chosen = ia if choice == "a" else ib
        t = idxr.index(min(ia, ib), max(ia, ib))
        response = 1 if chosen == min(ia, ib) else 0
        if repeat is None:
            repeat = auto_repeat.get((subject, t), 0)
            auto_repeat[(subject, t)] = repeat + 1
        try:
            records.append(ResponseRecord(subject, t, repeat, response))
        except DataError as exc:
            raise DataError(f"{source}:{lineno}: {exc}") from None
    try:
        return PanelDataset.from_records(records, options)
    except DataError as exc:
        raise DataError(f"{source}: {exc}") from None


def write_responses(data: PanelDataset, path) -> None:
    """Emit a panel back to the canonical CSV schema (repeats expanded)."""
    idxr = PairIndexer(data.options.n)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER + ["repeat"])
        for i, subject in enumerate(data.subjects):
            for t in range(data.m):
                k = int(data.counts[i, t])
                if k == 0:
                    continue
                ones = int(round(data.rho_bar[i, t] * k))
                a, b = idxr.pair_of(t)
                la, lb = data.options.labels[a - 1], data.options.labels[b - 1]
                for rep in range(k):
                    w.writerow([subject, la, lb, "a" if rep < ones else "b", rep])


# ---------------------------------------------------------------------------
# Option-subset scanning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScanReport:
    size: int
    total: int
    violation_rates: dict  # model -> fraction of subsets violating

    def to_dict(self) -> dict:
        return {"size": self.size, "total": self.total, **self.violation_rates}


DEFAULT_SCAN_MODELS = ("ss", "mu", "wu", "css")


def scan_subsets(
    data: PanelDataset,
    sizes=(3, 4, 5),
    models=DEFAULT_SCAN_MODELS,
    subset_cap: int = 10**6,
) -> list[ScanReport]:
    """Violation rates of each model over all option subsets of the given sizes.

    Individual models are checked on the pooled frequencies of each subset
    (representative-agent reading); collective models via their hull facets.
    """
    rho_hat = aggregate(data).rho_hat
    n = data.options.n
    reports = []
    for size in sizes:
        if size > n:
            continue
        total = math.comb(n, size)
        if total > subset_cap:
            raise ResourceLimitError(
                f"{total} subsets of size {size} exceed the cap {subset_cap}"
            )
        subsets = list(itertools.combinations(range(1, n + 1), size))
        pts = np.array([rho_hat.restrict(ids).values for ids in subsets])
        rates = {}
        for model in models:
            key = model.lower()
            if key in ("ss", "mu", "wu"):
                ok = rationalizable_mask(pts, size, key)
            elif key in TRIANGLE_FACET_RANGE and size <= TRIANGLE_FACET_RANGE[key]:
                ok = triangle_membership_mask(pts, size, key)
            else:
                raise ArgumentError(f"cannot scan model {model!r} at subset size {size}")
            rates[key] = float(1.0 - ok.mean())
        reports.append(ScanReport(size, total, rates))
    return reports


# ---------------------------------------------------------------------------
# Report emission
# ---------------------------------------------------------------------------


def _as_payload(obj):
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if isinstance(obj, (list, tuple)):
        return [_as_payload(x) for x in obj]
    if isinstance(obj, dict):
        return {k: _as_payload(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def emit_report(results, fmt: str = "json", path=None) -> str:
    """Serialize results to json, csv, or an aligned text table.

    CSV and text formats apply to lists of flat-dict payloads (scan reports,
    volume sweeps); JSON accepts anything with a ``to_dict``. Returns the
    rendered text and writes it to ``path`` when given.
    """
    payload = _as_payload(results)
    if fmt == "json":
        text = json.dumps(payload, indent=2, sort_keys=True)
    elif fmt in ("csv", "table"):
        rows = payload if isinstance(payload, list) else [payload]
        if not rows or not all(isinstance(r, dict) for r in rows):
            raise ArgumentError(f"format {fmt!r} needs a list of flat records")
        cols = list(rows[0].keys())
        for r in rows:
            for k in r:
                if k not in cols:
                    cols.append(k)
        cells = [[_format_cell(r.get(c, "")) for c in cols] for r in rows]
        if fmt == "csv":
            buf = _io.StringIO()
            w = csv.writer(buf)
            w.writerow(cols)
            w.writerows(cells)
            text = buf.getvalue().rstrip("\n")
        else:
            widths = [
                max(len(str(c)), *(len(row[k]) for row in cells)) if cells else len(str(c))
                for k, c in enumerate(cols)
            ]
            lines = ["  ".join(str(c).ljust(w) for c, w in zip(cols, widths))]
            lines.append("  ".join("-" * w for w in widths))
            for row in cells:
                lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)))
            text = "\n".join(lines)
    else:
        raise ArgumentError(f"unknown format {fmt!r} (expected json/csv/table)")
    if path is not None:
        try:
            Path(path).write_text(text + "\n")
        except OSError as exc:
            raise DataError(f"cannot write report to {path}: {exc}") from None
    return text


def _format_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, dict)):
        return json.dumps(v)
    return str(v)


def load_config(path) -> dict:
    """JSON config with defaults for alpha, boot count, step rule, caps."""
    try:
        with Path(path).open() as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise DataError(f"config {path} must hold a JSON object")
    return cfg
