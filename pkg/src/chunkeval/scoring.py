"""Chunk classification and the four disentangled scores.

Per change column the hypothesis earns exactly one class:

* ``TP``    — it changed the source and matches a reference's change;
* ``FP_NE`` — it changed the source where a reference also changed it, but
              produced different tokens (necessary yet wrong correction);
* ``FP_UN`` — it changed the source where no reference did (over-correction);
* ``FN``    — it left the source alone where the references demand a change;
* ``TN``    — nothing to see (no sequence changed anything relevant).

Counts (optionally weighted per column) roll up into four scores::

    hit   = TP / (TP + FP_ne + FN)          wrong = FP_ne / (TP + FP_ne + FN)
    under = FN / (TP + FP_ne + FN)          over  = FP_un / (TP + FP_ne + FP_un)

and a comprehensive score  a1*hit + a2*(1-wrong) + a3*(1-under) + a4*(1-over)
with trade-off factors on the open simplex.

Two evaluation assumptions are supported: ``dep`` classifies the whole
sentence against the single best reference (most TPs, then fewest FPs, then
lowest index); ``ind`` lets every column match any reference independently.
Corpus-level scores pool counts over sentences before scoring once;
sentence-level scores average per-sentence comprehensive scores.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .chunking import ChunkAlignment, partition
from .corpus_io import ReferenceSet, TokenSeq, filter_unchanged_references

TP = "TP"
FP_NE = "FP_NE"
FP_UN = "FP_UN"
FN = "FN"
TN = "TN"

DEP = "dep"
IND = "ind"

CORPUS = "corpus"
SENTENCE = "sentence"

WEIGHTINGS = ("unit", "length", "file", "llm")

_SIMPLEX_TOL = 1e-9


class EvaluationError(RuntimeError):
    """Per-sentence failure, carrying the sentence index."""

    def __init__(self, sentence_index: int, message: str):
        self.sentence_index = sentence_index
        super().__init__(f"sentence {sentence_index}: {message}")


@dataclass(frozen=True)
class TradeOffFactors:
    a1: float
    a2: float
    a3: float
    a4: float

    def __post_init__(self) -> None:
        values = (self.a1, self.a2, self.a3, self.a4)
        if any(not 0.0 < v < 1.0 for v in values):
            raise ValueError(f"factors must each lie in (0, 1), got {values}")
        if abs(sum(values) - 1.0) > _SIMPLEX_TOL:
            raise ValueError(f"factors must sum to 1, got {sum(values)!r}")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a1, self.a2, self.a3, self.a4)

    @classmethod
    def parse(cls, text: str) -> "TradeOffFactors":
        parts = text.split(",")
        if len(parts) != 4:
            raise ValueError(f"expected four comma-separated factors, got {text!r}")
        return cls(*(float(p) for p in parts))


CORPUS_FACTORS = TradeOffFactors(0.45, 0.35, 0.15, 0.05)
SENTENCE_FACTORS = TradeOffFactors(0.35, 0.25, 0.20, 0.20)


@dataclass
class WeightedCounts:
    n_tp: int = 0
    n_fpne: int = 0
    n_fpun: int = 0
    n_fn: int = 0
    w_tp: float = 0.0
    w_fpne: float = 0.0
    w_fpun: float = 0.0
    w_fn: float = 0.0

    def __add__(self, other: "WeightedCounts") -> "WeightedCounts":
        return WeightedCounts(
            n_tp=self.n_tp + other.n_tp,
            n_fpne=self.n_fpne + other.n_fpne,
            n_fpun=self.n_fpun + other.n_fpun,
            n_fn=self.n_fn + other.n_fn,
            w_tp=self.w_tp + other.w_tp,
            w_fpne=self.w_fpne + other.w_fpne,
            w_fpun=self.w_fpun + other.w_fpun,
            w_fn=self.w_fn + other.w_fn,
        )


@dataclass(frozen=True)
class DisentangledScores:
    hit: float
    wrong: float
    under: float
    over: float
    necessity_weight: float


@dataclass
class EvalConfig:
    assumption: str = IND
    level: str = SENTENCE
    factors: TradeOffFactors | None = None
    weighting: str = "unit"
    exclude_unchanged_refs: bool = False
    jobs: int = 1

    def __post_init__(self) -> None:
        if self.assumption not in (DEP, IND):
            raise ValueError(f"assumption must be {DEP!r} or {IND!r}")
        if self.level not in (CORPUS, SENTENCE):
            raise ValueError(f"level must be {CORPUS!r} or {SENTENCE!r}")
        if self.weighting not in WEIGHTINGS:
            raise ValueError(f"weighting must be one of {WEIGHTINGS}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")

    def resolved_factors(self) -> TradeOffFactors:
        if self.factors is not None:
            return self.factors
        return CORPUS_FACTORS if self.level == CORPUS else SENTENCE_FACTORS


def classify_against(ca: ChunkAlignment, ref: int) -> list[str]:
    """Column classes measured against one particular reference."""
    classes = []
    for col in range(ca.num_columns):
        hyp_changed = ca.hypothesis_changed(col)
        ref_changed = ca.reference_changed(ref, col)
        if hyp_changed and ref_changed:
            matches = ca.hypothesis_tokens(col) == ca.reference_tokens(ref, col)
            classes.append(TP if matches else FP_NE)
        elif hyp_changed:
            classes.append(FP_UN)
        elif ref_changed:
            classes.append(FN)
        else:
            classes.append(TN)
    return classes


def choose_reference(ca: ChunkAlignment) -> int:
    """Pick the reference the hypothesis agrees with best.

    Most TP columns win; ties fall to the fewest FP columns, then to the
    lowest reference index.  Plain counts are used — weighting never
    influences which reference is chosen.
    """
    best = 0
    best_key: tuple[int, int] | None = None
    for ref in range(ca.num_references):
        classes = classify_against(ca, ref)
        tp = classes.count(TP)
        fp = classes.count(FP_NE) + classes.count(FP_UN)
        key = (-tp, fp)
        if best_key is None or key < best_key:
            best, best_key = ref, key
    return best


def classify(ca: ChunkAlignment, assumption: str) -> tuple[list[str], int | None]:
    """Classify every column; returns the chosen reference for ``dep``."""
    if assumption == DEP:
        chosen = choose_reference(ca)
        return classify_against(ca, chosen), chosen
    if assumption != IND:
        raise ValueError(f"unknown assumption {assumption!r}")

    classes = []
    for col in range(ca.num_columns):
        hyp_changed = ca.hypothesis_changed(col)
        changed_refs = [
            r for r in range(ca.num_references) if ca.reference_changed(r, col)
        ]
        if hyp_changed:
            hyp_tokens = ca.hypothesis_tokens(col)
            if any(ca.reference_tokens(r, col) == hyp_tokens for r in changed_refs):
                classes.append(TP)
            elif not changed_refs:
                classes.append(FP_UN)
            else:
                classes.append(FP_NE)
        else:
            if changed_refs and len(changed_refs) == ca.num_references:
                classes.append(FN)
            else:
                classes.append(TN)
    return classes, None


def accumulate(classes: list[str], weights: list[float]) -> WeightedCounts:
    """Sum per-column weights into per-class buckets; TN columns count nothing."""
    if len(classes) != len(weights):
        raise ValueError(
            f"{len(classes)} classes vs {len(weights)} weights"
        )
    counts = WeightedCounts()
    for cls, weight in zip(classes, weights):
        if cls == TN:
            continue
        if weight < 0 or not math.isfinite(weight):
            raise ValueError(f"weights must be finite and >= 0, got {weight!r}")
        if cls == TP:
            counts.n_tp += 1
            counts.w_tp += weight
        elif cls == FP_NE:
            counts.n_fpne += 1
            counts.w_fpne += weight
        elif cls == FP_UN:
            counts.n_fpun += 1
            counts.w_fpun += weight
        elif cls == FN:
            counts.n_fn += 1
            counts.w_fn += weight
        else:
            raise ValueError(f"unknown edit class {cls!r}")
    return counts


def disentangled(c: WeightedCounts) -> DisentangledScores:
    """Hit/Wrong/Under/Over from (weighted) counts.

    With zero necessity (nothing needed fixing) hit is defined as 1 and
    wrong/under as 0 so a do-nothing system on a clean sentence is not
    penalized; an empty over-denominator likewise yields over = 0.
    """
    necessity = c.w_tp + c.w_fpne + c.w_fn
    if necessity > 0:
        hit = c.w_tp / necessity
        wrong = c.w_fpne / necessity
        under = c.w_fn / necessity
    else:
        hit, wrong, under = 1.0, 0.0, 0.0
    over_denom = c.w_tp + c.w_fpne + c.w_fpun
    over = c.w_fpun / over_denom if over_denom > 0 else 0.0
    return DisentangledScores(
        hit=hit, wrong=wrong, under=under, over=over, necessity_weight=necessity
    )


def comprehensive(s: DisentangledScores, f: TradeOffFactors) -> float:
    return (
        f.a1 * s.hit
        + f.a2 * (1.0 - s.wrong)
        + f.a3 * (1.0 - s.under)
        + f.a4 * (1.0 - s.over)
    )


@dataclass
class SentenceResult:
    counts: WeightedCounts
    scores: DisentangledScores
    classes: list[str] = field(default_factory=list)
    chosen_reference: int = 0


@dataclass
class SystemReport:
    assumption: str
    level: str
    weighting: str
    num_sentences: int
    counts: WeightedCounts
    hit: float
    wrong: float
    under: float
    over: float
    score: float
    factors: TradeOffFactors

    def to_record(self) -> dict:
        return {
            "tp": self.counts.n_tp,
            "fp_ne": self.counts.n_fpne,
            "fp_un": self.counts.n_fpun,
            "fn": self.counts.n_fn,
            "w_tp": self.counts.w_tp,
            "w_fp_ne": self.counts.w_fpne,
            "w_fp_un": self.counts.w_fpun,
            "w_fn": self.counts.w_fn,
            "hit": self.hit,
            "wrong": self.wrong,
            "under": self.under,
            "over": self.over,
            "score": self.score,
            "level": self.level,
            "assumption": self.assumption,
            "weighting": self.weighting,
        }

    def to_text(self) -> str:
        lines = [f"{key}={value}" for key, value in self.to_record().items()]
        lines.append(f"sentences={self.num_sentences}")
        lines.append(
            "factors={:.6g},{:.6g},{:.6g},{:.6g}".format(*self.factors.as_tuple())
        )
        return "\n".join(lines) + "\n"


def evaluate_sentence(
    rs: ReferenceSet,
    hypothesis: TokenSeq,
    cfg: EvalConfig,
    weight_provider,
    sentence_index: int = 0,
) -> SentenceResult:
    if cfg.exclude_unchanged_refs:
        rs = filter_unchanged_references(rs)
    ca = partition(rs.source, hypothesis, rs.references)
    classes, chosen = classify(ca, cfg.assumption)
    if chosen is None:
        chosen = choose_reference(ca)
    try:
        weights = weight_provider(ca, sentence_index, chosen)
    except Exception as exc:  # surfaced with the sentence index per contract
        raise EvaluationError(sentence_index, f"weighting failed: {exc}") from exc
    counts = accumulate(classes, weights)
    return SentenceResult(
        counts=counts,
        scores=disentangled(counts),
        classes=classes,
        chosen_reference=chosen,
    )


def evaluate_system(
    pairs: list[tuple[ReferenceSet, TokenSeq]],
    cfg: EvalConfig,
    weight_provider,
) -> SystemReport:
    """Evaluate one system over a corpus; see the module docstring for levels."""
    if not pairs:
        raise ValueError("cannot evaluate an empty corpus")
    factors = cfg.resolved_factors()

    def worker(item: tuple[int, tuple[ReferenceSet, TokenSeq]]) -> SentenceResult:
        index, (rs, hyp) = item
        return evaluate_sentence(rs, hyp, cfg, weight_provider, sentence_index=index)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(worker, enumerate(pairs)))
    else:
        results = [worker(item) for item in enumerate(pairs)]

    total = WeightedCounts()
    for res in results:
        total = total + res.counts

    if cfg.level == CORPUS:
        scores = disentangled(total)
        hit, wrong, under, over = scores.hit, scores.wrong, scores.under, scores.over
        score = comprehensive(scores, factors)
    else:
        n = len(results)
        hit = sum(r.scores.hit for r in results) / n
        wrong = sum(r.scores.wrong for r in results) / n
        under = sum(r.scores.under for r in results) / n
        over = sum(r.scores.over for r in results) / n
        score = sum(comprehensive(r.scores, factors) for r in results) / n

    return SystemReport(
        assumption=cfg.assumption,
        level=cfg.level,
        weighting=cfg.weighting,
        num_sentences=len(pairs),
        counts=total,
        hit=hit,
        wrong=wrong,
        under=under,
        over=over,
        score=score,
        factors=factors,
    )
