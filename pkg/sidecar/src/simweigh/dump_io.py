"""Reader for the chunk-table dump produced by the core evaluator.

The format is line-oriented, one blank-line-separated block per sentence:

    # sentence <index> columns=<n> chosen_ref=<k>
    <col>\tSRC:<tokens>\tHYP:<kind>:<tokens>\tREF0:<kind>:<tokens>...

Tokens are space-joined and empty for DUMMY chunks.  Everything we need is
in the file itself; this module has no dependency on the evaluator package.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

TokenSeq = tuple[str, ...]

KINDS = ("UNCHANGED", "CORRECTED", "DUMMY")

_HEADER = re.compile(r"^# sentence (\d+) columns=(\d+) chosen_ref=(\d+)$")


class DumpError(ValueError):
    """Malformed dump content, with the 1-based line number."""

    def __init__(self, message: str, line: int, path: str | None = None):
        self.line = line
        self.path = path
        where = f"{path}:" if path else ""
        super().__init__(f"{where}line {line}: {message}")


@dataclass(frozen=True)
class Column:
    index: int
    source: TokenSeq
    hyp_kind: str
    hypothesis: TokenSeq
    references: tuple[tuple[str, TokenSeq], ...]  # (kind, tokens) per annotator


@dataclass
class DumpSentence:
    index: int
    chosen_ref: int
    columns: list[Column]

    def source_tokens(self) -> TokenSeq:
        return tuple(t for col in self.columns for t in col.source)

    def chosen_reference_tokens(self) -> TokenSeq:
        return tuple(
            t for col in self.columns for t in col.references[self.chosen_ref][1]
        )

    def column_spans(self) -> list[tuple[int, int]]:
        """Half-open span of each column on the source token axis."""
        spans = []
        pos = 0
        for col in self.columns:
            spans.append((pos, pos + len(col.source)))
            pos += len(col.source)
        return spans


def _split_tokens(text: str) -> TokenSeq:
    return tuple(text.split(" ")) if text else ()


def _parse_kinded(field: str, label: str, line_no: int, path: str | None):
    prefix, _, rest = field.partition(":")
    if prefix != label:
        raise DumpError(f"expected {label} field, got {field!r}", line_no, path)
    kind, sep, toks = rest.partition(":")
    if not sep or kind not in KINDS:
        raise DumpError(f"bad chunk kind in {field!r}", line_no, path)
    return kind, _split_tokens(toks)


def parse_dump(text: str, path: str | None = None) -> list[DumpSentence]:
    sentences: list[DumpSentence] = []
    current: DumpSentence | None = None
    declared_columns = 0
    num_refs: int | None = None

    def close(line_no: int) -> None:
        nonlocal current
        if current is None:
            return
        if len(current.columns) != declared_columns:
            raise DumpError(
                f"sentence {current.index} has {len(current.columns)} column "
                f"lines but the header declared {declared_columns}",
                line_no,
                path,
            )
        sentences.append(current)
        current = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip():
            close(line_no)
            continue
        if line.startswith("#"):
            header = _HEADER.match(line)
            if not header:
                raise DumpError(f"bad sentence header: {line!r}", line_no, path)
            close(line_no)
            current = DumpSentence(
                index=int(header.group(1)),
                chosen_ref=int(header.group(3)),
                columns=[],
            )
            declared_columns = int(header.group(2))
            continue
        if current is None:
            raise DumpError(f"column line before any sentence header: {line!r}", line_no, path)

        fields = line.split("\t")
        if len(fields) < 4:
            raise DumpError(f"expected at least 4 tab-separated fields, got {len(fields)}", line_no, path)
        try:
            col_index = int(fields[0])
        except ValueError:
            raise DumpError(f"bad column index {fields[0]!r}", line_no, path) from None
        if col_index != len(current.columns):
            raise DumpError(
                f"column index {col_index} out of order (expected {len(current.columns)})",
                line_no,
                path,
            )
        if not fields[1].startswith("SRC:"):
            raise DumpError(f"expected SRC field, got {fields[1]!r}", line_no, path)
        source = _split_tokens(fields[1][len("SRC:") :])
        hyp_kind, hyp_tokens = _parse_kinded(fields[2], "HYP", line_no, path)
        refs = []
        for ref_pos, field in enumerate(fields[3:]):
            refs.append(_parse_kinded(field, f"REF{ref_pos}", line_no, path))
        if num_refs is None:
            num_refs = len(refs)
        elif len(refs) != num_refs:
            raise DumpError(
                f"{len(refs)} reference fields; earlier lines had {num_refs}",
                line_no,
                path,
            )
        if current.chosen_ref >= len(refs):
            raise DumpError(
                f"chosen_ref={current.chosen_ref} but only {len(refs)} references",
                line_no,
                path,
            )
        current.columns.append(
            Column(
                index=col_index,
                source=source,
                hyp_kind=hyp_kind,
                hypothesis=hyp_tokens,
                references=tuple(refs),
            )
        )
    close(len(text.splitlines()) + 1)
    if not sentences:
        raise DumpError("no sentence blocks found", 1, path)
    return sentences
