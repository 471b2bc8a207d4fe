"""Token-level alignment between a source sentence and one rewritten target.

The aligner is a unit-cost Levenshtein DP (equal = 0, insert/delete/substitute
= 1) with a deterministic backtrace so that identical inputs always produce
identical paths: walking from the end of the table, the preference order is
EQUAL, then SUBSTITUTE, then DELETE, then INSERT.  Token comparison is
case-sensitive.

Edits are the maximal runs of non-EQUAL ops in a path, e.g. a substitution
directly followed by an insertion melts into a single edit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus_io import TokenSeq

EQUAL = "EQUAL"
SUBSTITUTE = "SUBSTITUTE"
INSERT = "INSERT"
DELETE = "DELETE"

_COSTS = {EQUAL: 0, SUBSTITUTE: 1, INSERT: 1, DELETE: 1}


@dataclass(frozen=True)
class AlignOp:
    """One aligned span pair; spans are half-open token index ranges."""

    kind: str
    source_start: int
    source_end: int
    target_start: int
    target_end: int
    source_tokens: TokenSeq
    target_tokens: TokenSeq


@dataclass(frozen=True)
class Edit:
    """A contiguous modification: source span [start, end) becomes target_tokens."""

    start: int
    end: int
    target_tokens: TokenSeq


def align_tokens(source: TokenSeq, target: TokenSeq) -> list[AlignOp]:
    """Minimal-cost alignment path between two token sequences."""
    n, m = len(source), len(target)
    # dist[i][j] = minimal cost of aligning source[:i] with target[:j]
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row = dist[i]
        prev = dist[i - 1]
        s_tok = source[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (0 if s_tok == target[j - 1] else 1)
            up = prev[j] + 1
            left = row[j - 1] + 1
            best = diag
            if up < best:
                best = up
            if left < best:
                best = left
            row[j] = best

    # Backtrace from (n, m) with the fixed preference order.
    steps: list[str] = []
    i, j = n, m
    while i > 0 or j > 0:
        cost = dist[i][j]
        if i > 0 and j > 0 and source[i - 1] == target[j - 1] and cost == dist[i - 1][j - 1]:
            steps.append(EQUAL)
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and cost == dist[i - 1][j - 1] + 1:
            steps.append(SUBSTITUTE)
            i, j = i - 1, j - 1
        elif i > 0 and cost == dist[i - 1][j] + 1:
            steps.append(DELETE)
            i -= 1
        else:
            steps.append(INSERT)
            j -= 1
    steps.reverse()

    # Merge runs of identical step kinds into span-level ops.
    ops: list[AlignOp] = []
    si = ti = 0
    k = 0
    while k < len(steps):
        kind = steps[k]
        run = 1
        while k + run < len(steps) and steps[k + run] == kind:
            run += 1
        src_len = run if kind in (EQUAL, SUBSTITUTE, DELETE) else 0
        tgt_len = run if kind in (EQUAL, SUBSTITUTE, INSERT) else 0
        ops.append(
            AlignOp(
                kind=kind,
                source_start=si,
                source_end=si + src_len,
                target_start=ti,
                target_end=ti + tgt_len,
                source_tokens=source[si : si + src_len],
                target_tokens=target[ti : ti + tgt_len],
            )
        )
        si += src_len
        ti += tgt_len
        k += run
    return ops


def path_cost(ops: list[AlignOp]) -> int:
    """Total cost of a path under the unit cost model."""
    total = 0
    for op in ops:
        if op.kind == EQUAL:
            continue
        total += max(op.source_end - op.source_start, op.target_end - op.target_start)
    return total


def extract_edits(ops: list[AlignOp]) -> list[Edit]:
    """Merge maximal runs of non-EQUAL ops into contiguous edits."""
    edits: list[Edit] = []
    run: list[AlignOp] = []
    for op in ops:
        if op.kind == EQUAL:
            if run:
                edits.append(_close_run(run))
                run = []
        else:
            run.append(op)
    if run:
        edits.append(_close_run(run))
    return edits


def _close_run(run: list[AlignOp]) -> Edit:
    target: list[str] = []
    for op in run:
        target.extend(op.target_tokens)
    return Edit(start=run[0].source_start, end=run[-1].source_end, target_tokens=tuple(target))
