"""Simultaneous chunk partition of source, hypothesis and references.

Every target (the hypothesis and each reference) is aligned to the source
independently; the source spans of all resulting edits are projected onto the
source token axis and merged transitively whenever they overlap or touch.
Each merged span becomes one change column; the untouched stretches between
them become shared-unchanged columns.  The result is a table in which every
sequence has the same number of chunks, however many tokens each chunk holds.

A pure insertion between source tokens anchors at its source position: it
joins a change region abutting that position, or forms a zero-width region of
its own, in which case sequences without inserted material hold an empty
DUMMY chunk there.
"""

from __future__ import annotations

from dataclasses import dataclass

from .alignment import Edit, align_tokens, extract_edits
from .corpus_io import TokenSeq

UNCHANGED = "UNCHANGED"
CORRECTED = "CORRECTED"
DUMMY = "DUMMY"


@dataclass(frozen=True)
class Chunk:
    tokens: TokenSeq
    kind: str


@dataclass
class ChunkAlignment:
    source_chunks: list[Chunk]
    hypothesis_chunks: list[Chunk]
    reference_chunks: list[list[Chunk]]  # one chunk list per reference

    @property
    def num_columns(self) -> int:
        return len(self.source_chunks)

    @property
    def num_references(self) -> int:
        return len(self.reference_chunks)

    def source_tokens(self, col: int) -> TokenSeq:
        return self.source_chunks[col].tokens

    def hypothesis_tokens(self, col: int) -> TokenSeq:
        return self.hypothesis_chunks[col].tokens

    def reference_tokens(self, ref: int, col: int) -> TokenSeq:
        return self.reference_chunks[ref][col].tokens

    def hypothesis_changed(self, col: int) -> bool:
        """True when the hypothesis modified the source material of the column."""
        return self.hypothesis_chunks[col].tokens != self.source_chunks[col].tokens

    def reference_changed(self, ref: int, col: int) -> bool:
        return self.reference_chunks[ref][col].tokens != self.source_chunks[col].tokens


def _chunk(tokens: TokenSeq, source_tokens: TokenSeq) -> Chunk:
    if not tokens:
        return Chunk(tokens=tokens, kind=DUMMY)
    if tokens == source_tokens:
        return Chunk(tokens=tokens, kind=UNCHANGED)
    return Chunk(tokens=tokens, kind=CORRECTED)


def _merge_spans(spans: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Transitive closure of overlapping-or-touching half-open spans."""
    if not spans:
        return []
    spans = sorted(spans)
    merged = [spans[0]]
    for start, end in spans[1:]:
        last_start, last_end = merged[-1]
        if start <= last_end:  # overlap, or zero gap
            merged[-1] = (last_start, max(last_end, end))
        else:
            merged.append((start, end))
    return merged


def _region_of(regions: list[tuple[int, int]], edit: Edit) -> int:
    # Regions are pairwise separated by at least one source token, so an edit
    # span (possibly zero-width) sits inside exactly one closed region hull.
    for idx, (start, end) in enumerate(regions):
        if start <= edit.start and edit.end <= end:
            return idx
    raise AssertionError(f"edit [{edit.start},{edit.end}) outside every change region")


def _materialize(
    source: TokenSeq, region: tuple[int, int], edits: list[Edit]
) -> TokenSeq:
    start, end = region
    out: list[str] = []
    pos = start
    for edit in sorted(edits, key=lambda e: (e.start, e.end)):
        out.extend(source[pos : edit.start])
        out.extend(edit.target_tokens)
        pos = edit.end
    out.extend(source[pos:end])
    return tuple(out)


def partition(
    source: TokenSeq, hypothesis: TokenSeq, references: list[TokenSeq]
) -> ChunkAlignment:
    """Partition all sequences into equal-length chunk columns."""
    if not references:
        raise ValueError("partition requires at least one reference")
    targets = [hypothesis] + list(references)
    target_edits = [extract_edits(align_tokens(source, t)) for t in targets]

    spans = [(e.start, e.end) for edits in target_edits for e in edits]
    regions = _merge_spans(spans)

    # Assign each target's edits to its region.
    per_region_edits: list[list[list[Edit]]] = [
        [[] for _ in regions] for _ in targets
    ]
    for t_idx, edits in enumerate(target_edits):
        for edit in edits:
            per_region_edits[t_idx][_region_of(regions, edit)].append(edit)

    # Walk the source axis emitting unchanged gaps and change regions in order.
    columns: list[tuple[TokenSeq, list[TokenSeq]]] = []  # (src material, target materials)
    pos = 0
    for r_idx, (start, end) in enumerate(regions):
        if start > pos:
            gap = source[pos:start]
            columns.append((gap, [gap] * len(targets)))
        columns.append(
            (
                source[start:end],
                [
                    _materialize(source, (start, end), per_region_edits[t_idx][r_idx])
                    for t_idx in range(len(targets))
                ],
            )
        )
        pos = end
    if pos < len(source):
        tail = source[pos:]
        columns.append((tail, [tail] * len(targets)))

    columns = _merge_degenerate(columns)

    source_chunks = []
    hyp_chunks = []
    ref_chunks: list[list[Chunk]] = [[] for _ in references]
    for src_material, target_materials in columns:
        source_chunks.append(
            Chunk(tokens=src_material, kind=UNCHANGED if src_material else DUMMY)
        )
        hyp_chunks.append(_chunk(target_materials[0], src_material))
        for ref_idx in range(len(references)):
            ref_chunks[ref_idx].append(_chunk(target_materials[ref_idx + 1], src_material))
    return ChunkAlignment(
        source_chunks=source_chunks,
        hypothesis_chunks=hyp_chunks,
        reference_chunks=ref_chunks,
    )


def _merge_degenerate(
    columns: list[tuple[TokenSeq, list[TokenSeq]]]
) -> list[tuple[TokenSeq, list[TokenSeq]]]:
    """Fuse adjacent columns in which no sequence differs from the source.

    Change regions always hold at least one genuine modification, so this is
    a no-op in practice; it defends the no-adjacent-unchanged-columns
    invariant against degenerate alignment paths.
    """
    out: list[tuple[TokenSeq, list[TokenSeq]]] = []
    for src, targets in columns:
        unchanged = all(t == src for t in targets)
        if unchanged and out and all(t == out[-1][0] for t in out[-1][1]):
            prev_src, prev_targets = out[-1]
            out[-1] = (prev_src + src, [p + t for p, t in zip(prev_targets, targets)])
        else:
            out.append((src, targets))
    return out


def column_kinds(ca: ChunkAlignment, col: int) -> tuple[str, list[str]]:
    """Hypothesis kind and reference kinds at one column."""
    if not 0 <= col < ca.num_columns:
        raise IndexError(f"column {col} out of range (num_columns={ca.num_columns})")
    return (
        ca.hypothesis_chunks[col].kind,
        [chunks[col].kind for chunks in ca.reference_chunks],
    )


def is_shared_unchanged(ca: ChunkAlignment, col: int) -> bool:
    return not ca.hypothesis_changed(col) and not any(
        ca.reference_changed(r, col) for r in range(ca.num_references)
    )


# ---------------------------------------------------------------------------
# Debug dump format (the file contract with the similarity sidecar)
#
#   # sentence <index> columns=<n> chosen_ref=<k>
#   <col>\tSRC:<tokens>\tHYP:<kind>:<tokens>\tREF0:<kind>:<tokens>...
#
# one block per sentence, blank-line separated; tokens are space-joined and
# empty for DUMMY chunks.
# ---------------------------------------------------------------------------


def render_dump_sentence(ca: ChunkAlignment, sentence_index: int, chosen_ref: int) -> list[str]:
    lines = [f"# sentence {sentence_index} columns={ca.num_columns} chosen_ref={chosen_ref}"]
    for col in range(ca.num_columns):
        parts = [
            str(col),
            "SRC:" + " ".join(ca.source_tokens(col)),
            f"HYP:{ca.hypothesis_chunks[col].kind}:" + " ".join(ca.hypothesis_tokens(col)),
        ]
        for ref_idx, chunks in enumerate(ca.reference_chunks):
            parts.append(f"REF{ref_idx}:{chunks[col].kind}:" + " ".join(chunks[col].tokens))
        lines.append("\t".join(parts))
    return lines


def render_dump(alignments: list[tuple[ChunkAlignment, int]]) -> str:
    """Render the whole-corpus dump; one (alignment, chosen_ref) per sentence."""
    blocks = []
    for idx, (ca, chosen_ref) in enumerate(alignments):
        blocks.append("\n".join(render_dump_sentence(ca, idx, chosen_ref)))
    return "\n\n".join(blocks) + "\n"
