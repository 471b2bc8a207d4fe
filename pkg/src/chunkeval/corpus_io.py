"""Readers for the on-disk inputs of the evaluation pipeline.

Four file kinds are handled here:

* M2 reference files: blocks of one ``S`` (source) line followed by zero or
  more ``A`` (annotation) lines, blank-line separated.  An annotation line is

      A <start> <end>|||<type>|||<correction>|||...|||<annotator_id>

  with ``|||``-separated fields.  Spans are token-indexed and half-open
  [start, end); an insertion has start == end; a deletion has an empty (or
  ``-NONE-``) correction.  Each annotator's edit set is applied to the source
  to materialize one reference per annotator; a ``noop`` edit (span -1 -1)
  marks an annotator whose reference equals the source.

* Parallel text: UTF-8, one pre-tokenized (whitespace-separated) sentence per
  line; source and hypothesis files must have the same line count.

* Weight files: one ``sentence_index chunk_index weight`` record per line
  (tab- or space-separated); ``#``-prefixed lines are comments.  This format
  is the contract with the similarity-weighting sidecar.

* Judgment files: one ``sentence_id system_a system_b outcome`` record per
  line with outcome ``A`` (first system wins), ``B`` or ``T`` (tie).

Tokenization is never performed here: inputs are pre-tokenized and split on
whitespace only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# A tokenized sentence.  Tuples keep token sequences hashable and
# value-semantic, which the alignment cache and chunk columns rely on.
TokenSeq = tuple[str, ...]

A_WINS = "A"
B_WINS = "B"
TIE = "T"

_NONE_CORRECTION = "-NONE-"


class ParseError(ValueError):
    """Input file error carrying a 1-based line number."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"line {line}: "
        super().__init__(where + message)


class LineCountMismatch(ValueError):
    """Parallel files disagree on sentence count."""

    def __init__(self, source_count: int, hypothesis_count: int):
        self.source_count = source_count
        self.hypothesis_count = hypothesis_count
        super().__init__(
            f"parallel line-count mismatch: {source_count} source lines "
            f"vs {hypothesis_count} hypothesis lines"
        )


def tokenize(line: str) -> TokenSeq:
    """Split a pre-tokenized line on whitespace (runs collapse)."""
    return tuple(line.split())


@dataclass
class ReferenceSet:
    """A source sentence plus every reference materialized from its annotators."""

    source: TokenSeq
    references: list[TokenSeq]
    annotator_ids: list[int] | None = None

    def __post_init__(self) -> None:
        if not self.references:
            raise ValueError("ReferenceSet requires at least one reference")
        if self.annotator_ids is not None and len(self.annotator_ids) != len(self.references):
            raise ValueError("annotator_ids must parallel references")


@dataclass
class Comparison:
    sentence_id: str
    system_a: str
    system_b: str
    outcome: str  # A_WINS, B_WINS or TIE


@dataclass
class JudgmentSet:
    systems: list[str]
    comparisons: list[Comparison]


@dataclass
class WeightFile:
    """Per-(sentence, chunk column) weights; duplicate keys resolve last-wins."""

    entries: dict[tuple[int, int], float] = field(default_factory=dict)
    duplicate_count: int = 0

    def get(self, sentence_index: int, column_index: int, default: float = 1.0) -> float:
        return self.entries.get((sentence_index, column_index), default)


@dataclass
class _RawEdit:
    start: int
    end: int
    correction: TokenSeq
    line: int


def parse_m2(text: str, path: str | None = None) -> list[ReferenceSet]:
    """Parse an M2 file into one ReferenceSet per block."""
    blocks: list[ReferenceSet] = []
    source: TokenSeq | None = None
    edits_by_annotator: dict[int, list[_RawEdit]] = {}
    block_line = 0

    def finish() -> None:
        nonlocal source, edits_by_annotator
        if source is None:
            return
        blocks.append(_materialize(source, edits_by_annotator, path))
        source = None
        edits_by_annotator = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            finish()
            continue
        if line.startswith("S ") or line == "S":
            finish()
            source = tokenize(line[2:])
            edits_by_annotator = {}
            block_line = lineno
        elif line.startswith("A "):
            if source is None:
                raise ParseError("annotation line before any source line", lineno, path)
            _parse_annotation(line[2:], source, edits_by_annotator, lineno, path)
        else:
            raise ParseError(f"unrecognized line: {line[:40]!r}", lineno, path)
    finish()
    del block_line
    return blocks


def _parse_annotation(
    body: str,
    source: TokenSeq,
    edits_by_annotator: dict[int, list[_RawEdit]],
    lineno: int,
    path: str | None,
) -> None:
    fields = body.split("|||")
    if len(fields) < 4:
        raise ParseError(
            f"annotation needs span|||type|||correction|||...|||annotator, got {len(fields)} fields",
            lineno,
            path,
        )
    span_part = fields[0].split()
    if len(span_part) != 2:
        raise ParseError(f"bad span field {fields[0]!r}", lineno, path)
    try:
        start, end = int(span_part[0]), int(span_part[1])
    except ValueError:
        raise ParseError(f"non-integer span {fields[0]!r}", lineno, path) from None
    edit_type = fields[1]
    try:
        annotator = int(fields[-1])
    except ValueError:
        raise ParseError(f"non-integer annotator id {fields[-1]!r}", lineno, path) from None

    edits = edits_by_annotator.setdefault(annotator, [])
    if edit_type == "noop" or (start, end) == (-1, -1):
        return  # annotator exists; reference stays equal to the source
    if start < 0 or start > end:
        raise ParseError(f"malformed span [{start}, {end})", lineno, path)
    if end > len(source):
        raise ParseError(
            f"span [{start}, {end}) exceeds source length {len(source)}", lineno, path
        )
    correction = fields[2]
    if correction == _NONE_CORRECTION:
        correction = ""
    edits.append(_RawEdit(start, end, tokenize(correction), lineno))


def _materialize(
    source: TokenSeq,
    edits_by_annotator: dict[int, list[_RawEdit]],
    path: str | None,
) -> ReferenceSet:
    if not edits_by_annotator:
        return ReferenceSet(source=source, references=[source])
    references = []
    ids = sorted(edits_by_annotator)
    for annotator in ids:
        edits = sorted(edits_by_annotator[annotator], key=lambda e: (e.start, e.end))
        for prev, cur in zip(edits, edits[1:]):
            if cur.start < prev.end:
                raise ParseError(
                    f"annotator {annotator} has overlapping spans "
                    f"[{prev.start},{prev.end}) and [{cur.start},{cur.end})",
                    cur.line,
                    path,
                )
        references.append(apply_edits(source, [(e.start, e.end, e.correction) for e in edits]))
    return ReferenceSet(source=source, references=references, annotator_ids=ids)


def apply_edits(source: TokenSeq, edits: list[tuple[int, int, TokenSeq]]) -> TokenSeq:
    """Apply non-overlapping (start, end, replacement) edits left to right."""
    out: list[str] = []
    pos = 0
    for start, end, replacement in sorted(edits, key=lambda e: (e[0], e[1])):
        out.extend(source[pos:start])
        out.extend(replacement)
        pos = end
    out.extend(source[pos:])
    return tuple(out)


def read_parallel(source_text: str, hypothesis_text: str) -> list[tuple[TokenSeq, TokenSeq]]:
    """Pair up two parallel pre-tokenized files line by line."""
    src_lines = source_text.splitlines()
    hyp_lines = hypothesis_text.splitlines()
    if len(src_lines) != len(hyp_lines):
        raise LineCountMismatch(len(src_lines), len(hyp_lines))
    return [(tokenize(s), tokenize(h)) for s, h in zip(src_lines, hyp_lines)]


def filter_unchanged_references(rs: ReferenceSet) -> ReferenceSet:
    """Drop references identical to the source, unless that would drop them all."""
    keep = [i for i, ref in enumerate(rs.references) if ref != rs.source]
    if not keep or len(keep) == len(rs.references):
        return rs
    ids = [rs.annotator_ids[i] for i in keep] if rs.annotator_ids is not None else None
    return ReferenceSet(
        source=rs.source,
        references=[rs.references[i] for i in keep],
        annotator_ids=ids,
    )


def load_weights(text: str, path: str | None = None) -> WeightFile:
    """Parse a sidecar weight file; duplicates overwrite with a warning count."""
    entries: dict[tuple[int, int], float] = {}
    duplicates = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(
                f"expected 'sentence chunk weight', got {len(parts)} fields", lineno, path
            )
        try:
            sent, col = int(parts[0]), int(parts[1])
            weight = float(parts[2])
        except ValueError:
            raise ParseError(f"non-numeric record {line!r}", lineno, path) from None
        if sent < 0 or col < 0:
            raise ParseError(f"negative index in {line!r}", lineno, path)
        if not math.isfinite(weight) or weight < 0:
            raise ParseError(f"weight must be finite and >= 0, got {parts[2]}", lineno, path)
        key = (sent, col)
        if key in entries:
            duplicates += 1
        entries[key] = weight
    return WeightFile(entries=entries, duplicate_count=duplicates)


def load_judgments(text: str, path: str | None = None) -> JudgmentSet:
    """Parse pairwise human judgments."""
    comparisons: list[Comparison] = []
    systems: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ParseError(
                f"expected 'sentence_id system_a system_b outcome', got {len(parts)} fields",
                lineno,
                path,
            )
        sentence_id, sys_a, sys_b, outcome = parts
        if outcome not in (A_WINS, B_WINS, TIE):
            raise ParseError(f"outcome must be A, B or T, got {outcome!r}", lineno, path)
        if sys_a == sys_b:
            raise ParseError(f"system compared against itself: {sys_a}", lineno, path)
        systems.update((sys_a, sys_b))
        comparisons.append(Comparison(sentence_id, sys_a, sys_b, outcome))
    return JudgmentSet(systems=sorted(systems), comparisons=comparisons)
