"""Shared fixtures: two hand-checked golden sentence pairs plus file writers.

The golden pairs are small enough that every expected number in the tests
was recomputed by hand from the definitions (the arithmetic is spelled out
next to each expected value).
"""

from dataclasses import dataclass, field

import pytest

from chunkeval.corpus_io import ReferenceSet, parse_m2, tokenize


@dataclass
class GoldenCase:
    """One source/hypothesis/reference triple with known expected outputs."""

    src: str
    hyp: str
    ref: str
    m2_edits: list[str]
    # column index -> externally supplied weight (similarity-style fixture)
    sim_weights: dict[int, float]
    # "before → after" edit phrase -> stubbed LLM score
    llm_scores: dict[str, int]
    classes: list[str]
    # (hit, wrong, under, over) under the sim_weights above
    sim_expect: tuple[float, float, float, float]
    # (hit, wrong, under, over) under the llm_scores above
    llm_expect: tuple[float, float, float, float]
    change_columns: list[int] = field(default_factory=list)

    def m2_block(self) -> str:
        return "\n".join([f"S {self.src}"] + self.m2_edits)

    def reference_set(self) -> ReferenceSet:
        return parse_m2(self.m2_block() + "\n")[0]

    def tokens(self) -> tuple[tuple[str, ...], tuple[str, ...]]:
        return tokenize(self.src), tokenize(self.hyp)


# A system that leaves a needed fix alone (FN), mangles two others (FP_NE).
# Column layout: Do | one who | suffered | from ... secret | of infrom | their relatives ?
#   necessity = 0 + (0.011 + 0.094) + 0.028 = 0.133
#   hit = 0/0.133, wrong = 0.105/0.133, under = 0.028/0.133, over = 0/0.105
GOLDEN_1 = GoldenCase(
    src="Do one who suffered from this disease keep it a secret of infrom their relatives ?",
    hyp="Do one who suffer from this disease keep it a secret to inform their relatives ?",
    ref="Does one who suffers from this disease keep it a secret or inform their relatives ?",
    m2_edits=[
        "A 0 1|||R:VERB:SVA|||Does|||REQUIRED|||-NONE-|||0",
        "A 3 4|||R:VERB:SVA|||suffers|||REQUIRED|||-NONE-|||0",
        "A 11 13|||R:OTHER|||or inform|||REQUIRED|||-NONE-|||0",
    ],
    sim_weights={0: 0.028, 2: 0.011, 4: 0.094},
    llm_scores={
        "Do → Does": 5,
        "suffered → suffer": 5,
        "of infrom → to inform": 1,
    },
    classes=["FN", "TN", "FP_NE", "TN", "FP_NE", "TN"],
    sim_expect=(0.0, 0.105 / 0.133, 0.028 / 0.133, 0.0),
    # llm: necessity = (5 + 1) + 5 = 11; wrong = 6/11, under = 5/11
    llm_expect=(0.0, 6 / 11, 5 / 11, 0.0),
    change_columns=[0, 2, 4],
)

# A system that half-fixes a spelling error, nails one correction (TP) and
# rewrites two spans nobody asked about (FP_UN).
# Columns: When we are | diagonosed out | with certain genetic | disease |
#          , should we disclose | this result | to | our | relatives ?
#   necessity = 0.006 + 0.056 + 0 = 0.062
#   hit = 0.006/0.062, wrong = 0.056/0.062, under = 0
#   over = (0.019 + 0.021) / (0.006 + 0.056 + 0.040) = 0.040/0.102
GOLDEN_2 = GoldenCase(
    src="When we are diagonosed out with certain genetic disease , "
    "should we disclose this result to our relatives ?",
    hyp="When we are diagnosed out with certain genetic diseases , "
    "should we disclose the results to their relatives ?",
    ref="When we are diagnosed with certain genetic diseases , "
    "should we disclose this result to our relatives ?",
    m2_edits=[
        "A 3 5|||R:SPELL|||diagnosed|||REQUIRED|||-NONE-|||0",
        "A 8 9|||R:NOUN:NUM|||diseases|||REQUIRED|||-NONE-|||0",
    ],
    sim_weights={1: 0.056, 3: 0.006, 5: 0.019, 7: 0.021},
    llm_scores={
        "diagonosed out → diagnosed out": 5,
        "disease → diseases": 5,
        "this result → the results": 4,
        "our → their": 5,
    },
    classes=["TN", "FP_NE", "TN", "TP", "TN", "FP_UN", "TN", "FP_UN", "TN"],
    sim_expect=(0.006 / 0.062, 0.056 / 0.062, 0.0, 0.040 / 0.102),
    # llm: hit = 5/(5+5), wrong = 5/10, over = (4+5)/(5+5+4+5)
    llm_expect=(0.5, 0.5, 0.0, 9 / 19),
    change_columns=[1, 3, 5, 7],
)

GOLDEN_CASES = [GOLDEN_1, GOLDEN_2]


def write_corpus(dirpath, cases, with_weights=True):
    """Write src/hyp/M2 (and optionally a weight file) for the given cases.

    Returns a dict of file paths keyed by role.
    """
    src = dirpath / "corpus.src"
    hyp = dirpath / "corpus.hyp"
    ref = dirpath / "corpus.m2"
    src.write_text("".join(c.src + "\n" for c in cases), encoding="utf-8")
    hyp.write_text("".join(c.hyp + "\n" for c in cases), encoding="utf-8")
    ref.write_text("\n\n".join(c.m2_block() for c in cases) + "\n", encoding="utf-8")
    paths = {"src": src, "hyp": hyp, "ref": ref}
    if with_weights:
        weights = dirpath / "corpus.weights"
        lines = []
        for sent, case in enumerate(cases):
            for col, value in sorted(case.sim_weights.items()):
                lines.append(f"{sent} {col} {value}")
        weights.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths["weights"] = weights
    return paths


def stub_transport(scores_by_edit, default=None):
    """LLM transport stand-in: look up the 'Edit:' line of the prompt.

    ``scores_by_edit`` maps the "before → after" phrase to the reply text
    (ints are converted).  Unknown edits raise unless ``default`` is given.
    """

    def transport(payload, cfg):
        if "messages" in payload:
            prompt = payload["messages"][0]["content"]
        else:
            prompt = payload["prompt"]
        # the edit phrase sits on the last "Edit:" line of the prompt
        phrase = None
        for line in prompt.splitlines():
            if line.startswith("Edit: "):
                phrase = line[len("Edit: ") :]
        if phrase in scores_by_edit:
            return str(scores_by_edit[phrase])
        if default is not None:
            return str(default)
        raise AssertionError(f"unexpected edit phrase: {phrase!r}")

    return transport


@pytest.fixture
def golden_corpus(tmp_path):
    """Both golden cases written out as a two-sentence corpus."""
    return write_corpus(tmp_path, GOLDEN_CASES)


def mutate_tokens(rng, toks, vocab):
    """A nearby token sequence: up to three random sub/del/insert steps."""
    out = list(toks)
    for _ in range(rng.randint(0, 3)):
        roll = rng.random()
        if roll < 0.35 and out:
            out[rng.randrange(len(out))] = rng.choice(vocab)
        elif roll < 0.6 and out:
            del out[rng.randrange(len(out))]
        else:
            out.insert(rng.randint(0, len(out)), rng.choice(vocab))
    return tuple(out)


def random_triples(rng, count, vocab="abcdef", max_refs=3):
    """Random (source, hypothesis, references) triples with real overlap."""
    vocab = list(vocab)
    for _ in range(count):
        src = tuple(rng.choice(vocab) for _ in range(rng.randint(0, 9)))
        hyp = mutate_tokens(rng, src, vocab)
        refs = [mutate_tokens(rng, src, vocab) for _ in range(rng.randint(1, max_refs))]
        yield src, hyp, refs
