"""Token-alignment tests, checked against two independent oracles.

The main oracle recomputes the minimal edit cost by plain recursion over
suffix pairs (memoized); a second, path-enumerating oracle double-checks
tiny inputs by brute force.
"""

import itertools
import random
from functools import lru_cache

import pytest

from chunkeval.alignment import (
    DELETE,
    EQUAL,
    INSERT,
    SUBSTITUTE,
    AlignOp,
    align_tokens,
    extract_edits,
    path_cost,
)
from chunkeval.corpus_io import apply_edits


@lru_cache(maxsize=None)
def _oracle_cost(a, b):
    """Minimal unit-cost edit distance by memoized recursion."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    best = _oracle_cost(a[1:], b[1:]) + (0 if a[0] == b[0] else 1)
    best = min(best, _oracle_cost(a[1:], b) + 1)
    best = min(best, _oracle_cost(a, b[1:]) + 1)
    return best


def _enumerate_paths_cost(a, b):
    """Brute-force minimum over every monotone edit path (tiny inputs only)."""
    best = [len(a) + len(b)]

    def walk(i, j, cost):
        if cost >= best[0]:
            return
        if i == len(a) and j == len(b):
            best[0] = cost
            return
        if i < len(a) and j < len(b):
            walk(i + 1, j + 1, cost + (0 if a[i] == b[j] else 1))
        if i < len(a):
            walk(i + 1, j, cost + 1)
        if j < len(b):
            walk(i, j + 1, cost + 1)

    walk(0, 0, 0)
    return best[0]


def _check_structure(source, target, ops):
    """Span bookkeeping that must hold for any valid alignment."""
    si = ti = 0
    prev_kind = None
    for op in ops:
        assert op.kind in (EQUAL, SUBSTITUTE, INSERT, DELETE)
        assert op.source_start == si and op.target_start == ti
        assert op.source_tokens == tuple(source[op.source_start : op.source_end])
        assert op.target_tokens == tuple(target[op.target_start : op.target_end])
        if op.kind == EQUAL:
            assert op.source_tokens == op.target_tokens and op.source_tokens
        elif op.kind == SUBSTITUTE:
            assert op.source_tokens and op.target_tokens
            assert len(op.source_tokens) == len(op.target_tokens)
            assert all(s != t for s, t in zip(op.source_tokens, op.target_tokens))
        elif op.kind == INSERT:
            assert op.source_start == op.source_end and op.target_tokens
        else:
            assert op.target_start == op.target_end and op.source_tokens
        assert prev_kind != op.kind, "adjacent ops of the same kind must merge"
        prev_kind = op.kind
        si, ti = op.source_end, op.target_end
    assert si == len(source) and ti == len(target)


def test_identity_alignment():
    ops = align_tokens(("a", "b"), ("a", "b"))
    assert ops == [AlignOp(EQUAL, 0, 2, 0, 2, ("a", "b"), ("a", "b"))]
    assert path_cost(ops) == 0
    assert extract_edits(ops) == []


def test_empty_both_sides():
    assert align_tokens((), ()) == []
    assert path_cost([]) == 0


def test_pure_insertion_and_deletion():
    ins = align_tokens((), ("x", "y"))
    assert ins == [AlignOp(INSERT, 0, 0, 0, 2, (), ("x", "y"))]
    dele = align_tokens(("x", "y"), ())
    assert dele == [AlignOp(DELETE, 0, 2, 0, 0, ("x", "y"), ())]
    assert path_cost(ins) == 2 and path_cost(dele) == 2


def test_known_substitution_pair():
    ops = align_tokens(("Do", "one"), ("Does", "one"))
    assert ops == [
        AlignOp(SUBSTITUTE, 0, 1, 0, 1, ("Do",), ("Does",)),
        AlignOp(EQUAL, 1, 2, 1, 2, ("one",), ("one",)),
    ]


def test_backtrace_tie_break_is_fixed():
    # several cost-2 paths exist; the backtrace must always pick this one
    ops = align_tokens(("a",), ("b", "c"))
    assert ops == [
        AlignOp(INSERT, 0, 0, 0, 1, (), ("b",)),
        AlignOp(SUBSTITUTE, 0, 1, 1, 2, ("a",), ("c",)),
    ]


def test_case_sensitive():
    ops = align_tokens(("The",), ("the",))
    assert ops[0].kind == SUBSTITUTE
    assert path_cost(ops) == 1


def test_exhaustive_small_pairs_match_both_oracles():
    seqs = []
    for n in range(4):
        seqs.extend(itertools.product("abc", repeat=n))
    for a in seqs:
        for b in seqs:
            ops = align_tokens(a, b)
            _check_structure(a, b, ops)
            cost = path_cost(ops)
            assert cost == _oracle_cost(a, b), (a, b)
            assert cost == _enumerate_paths_cost(a, b), (a, b)


def test_fuzz_random_pairs_match_cost_oracle():
    rng = random.Random(170357)
    for _ in range(1500):
        a = tuple(rng.choice("abcd") for _ in range(rng.randint(0, 8)))
        b = tuple(rng.choice("abcd") for _ in range(rng.randint(0, 8)))
        ops = align_tokens(a, b)
        _check_structure(a, b, ops)
        assert path_cost(ops) == _oracle_cost(a, b)


def test_fuzz_word_level_pairs():
    vocab = ["the", "a", "cat", "cats", "sat", "sit", "on", "mat", "."]
    rng = random.Random(9001)
    for _ in range(400):
        a = tuple(rng.choice(vocab) for _ in range(rng.randint(0, 10)))
        b = list(a)
        # perturb a few positions so realistic overlap remains
        for _ in range(rng.randint(0, 3)):
            if not b:
                b.append(rng.choice(vocab))
                continue
            i = rng.randrange(len(b))
            action = rng.random()
            if action < 0.4:
                b[i] = rng.choice(vocab)
            elif action < 0.7:
                del b[i]
            else:
                b.insert(i, rng.choice(vocab))
        b = tuple(b)
        ops = align_tokens(a, b)
        _check_structure(a, b, ops)
        assert path_cost(ops) == _oracle_cost(a, b)


def test_deterministic_across_calls():
    a = ("a", "b", "a", "c")
    b = ("b", "a", "b")
    assert align_tokens(a, b) == align_tokens(a, b)


def test_extract_edits_reproduce_target():
    rng = random.Random(55)
    for _ in range(500):
        a = tuple(rng.choice("pqrs") for _ in range(rng.randint(0, 7)))
        b = tuple(rng.choice("pqrs") for _ in range(rng.randint(0, 7)))
        edits = extract_edits(align_tokens(a, b))
        rebuilt = apply_edits(a, [(e.start, e.end, e.target_tokens) for e in edits])
        assert rebuilt == b
        # every edit changes something, and edits never touch or overlap
        for prev, cur in zip(edits, edits[1:]):
            assert prev.end < cur.start
        for e in edits:
            assert a[e.start : e.end] != e.target_tokens


def test_extract_edits_merges_adjacent_operations():
    # substitution immediately followed by insertion forms one edit
    (edit,) = extract_edits(align_tokens(("a", "z"), ("a", "x", "y")))
    assert (edit.start, edit.end) == (1, 2)
    assert edit.target_tokens == ("x", "y")


def test_path_cost_counts_tokens_not_ops():
    ops = align_tokens(("a", "b", "c"), ("x", "y", "z"))
    assert path_cost(ops) == 3
    assert len(ops) == 1  # one merged 3-token substitution


def test_relabeling_invariance():
    """Renaming tokens consistently must not change the op structure."""
    rng = random.Random(31)
    for _ in range(200):
        a = tuple(rng.choice("abc") for _ in range(rng.randint(0, 6)))
        b = tuple(rng.choice("abc") for _ in range(rng.randint(0, 6)))
        mapping = {"a": "tok0", "b": "tok1", "c": "tok2"}
        ops = align_tokens(a, b)
        mapped = align_tokens(
            tuple(mapping[t] for t in a), tuple(mapping[t] for t in b)
        )
        assert [
            (o.kind, o.source_start, o.source_end, o.target_start, o.target_end)
            for o in ops
        ] == [
            (o.kind, o.source_start, o.source_end, o.target_start, o.target_end)
            for o in mapped
        ]
