"""Per-column edit weights under four strategies.

``unit``    — every column weighs 1.0 (degenerates to plain counting).
``length``  — max token length of the column across source, hypothesis and
              the chosen reference, floored at 1.
``file``    — weights looked up from an externally produced weight file
              (the similarity sidecar's output); missing keys default to 1.0
              and bump a warning counter.
``llm``     — a remote language model scores each edit 1-5 over HTTP, one
              request per edit, using the fixed assessment prompt below.

Only columns that can enter a score are ever weighted specially: where the
hypothesis changed the source, its own tokens describe the edit; where only
the chosen reference changed (a missed correction), the reference's tokens
do.  Shared-unchanged columns always weigh 1.0, which no score consumes.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import requests

from .alignment import Edit
from .chunking import ChunkAlignment
from .corpus_io import TokenSeq, WeightFile

logger = logging.getLogger(__name__)

UNIT = "unit"
LENGTH = "length"
FILE = "file"
LLM = "llm"

STRATEGY_TAGS = (UNIT, LENGTH, FILE, LLM)

ENDPOINT_ENV = "CHUNKEVAL_LLM_ENDPOINT"
API_KEY_ENV = "CHUNKEVAL_LLM_API_KEY"

# The exact scoring instructions sent to the model, one edit per request.
PROMPT_TEMPLATE = """\
As an evaluator for grammatical error correction, you are tasked with assessing the importance of each error. You will be provided with two lines: the first is an uncorrected sentence, the second shows the edit. Then you output the importance score of the given edit.

The scores range from 1 to 5, where a higher score reflects the greater significance of the correction, while a lower score indicates minor importance.

- A score of 1 means the correction is almost negligible and unnecessary.

- A score of 2 means the correction has slight influence.

- A score of 3 signifies some impact by the correction.

- A score of 4 means the edit is essential.

- A score of 5 indicates the modification is highly important and necessary.

Next, I’ll provide you a sentence with an edit. You should score each edit accordingly. The output should only be the score, with no additional explanation.

Example Input:

Uncorrected sentence: Nowadays the technologies were improved a lot compared to the last century.

Edit: were → have

Example Output (1-5): 5

Note that the output must be a number between 1 and 5. Here is the formal input:

Uncorrected sentence: {sentence}

Edit: {edit}

Example Output (1-5):"""

DEFAULT_LLM_WEIGHT = 3

_INT_RE = re.compile(r"-?\d+")


class LlmRequestError(RuntimeError):
    """Transport-level failure for one edit after exhausting retries."""

    def __init__(self, edit_index: int, cause: Exception):
        self.edit_index = edit_index
        super().__init__(f"edit {edit_index}: LLM request failed: {cause}")


@dataclass
class LlmClientConfig:
    endpoint: str
    model: str = "llama-2-7b"
    temperature: float = 0.1
    max_retries: int = 2
    timeout: float = 30.0
    concurrency: int = 4
    request_shape: str = "chat"  # or "completion"
    api_key: str | None = None

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.request_shape not in ("chat", "completion"):
            raise ValueError("request_shape must be 'chat' or 'completion'")

    @classmethod
    def from_env(cls, model: str, **kwargs) -> "LlmClientConfig":
        endpoint = os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise ValueError(f"LLM weighting needs {ENDPOINT_ENV} set")
        return cls(
            endpoint=endpoint,
            model=model,
            api_key=os.environ.get(API_KEY_ENV),
            **kwargs,
        )


def render_prompt(source: TokenSeq, edit: Edit) -> str:
    before = " ".join(source[edit.start : edit.end])
    after = " ".join(edit.target_tokens)
    return PROMPT_TEMPLATE.format(
        sentence=" ".join(source), edit=f"{before} → {after}"
    )


def parse_llm_reply(text: str) -> int | None:
    """First integer token in the reply, if it is a valid 1-5 score."""
    match = _INT_RE.search(text)
    if match is None:
        return None
    value = int(match.group())
    return value if 1 <= value <= 5 else None


class LlmClient:
    """Minimal chat/completions client with retry and bounded concurrency.

    ``transport`` may be swapped for a callable ``(payload, cfg) -> reply
    text`` so tests (and the golden fixtures) run without any network.
    """

    def __init__(self, cfg: LlmClientConfig, transport=None):
        self.cfg = cfg
        self.transport = transport or self._http_transport
        self.warning_count = 0
        self._lock = threading.Lock()

    def _payload(self, prompt: str) -> dict:
        payload = {"model": self.cfg.model, "temperature": self.cfg.temperature}
        if self.cfg.request_shape == "chat":
            payload["messages"] = [{"role": "user", "content": prompt}]
        else:
            payload["prompt"] = prompt
        return payload

    def _http_transport(self, payload: dict, cfg: LlmClientConfig) -> str:
        headers = {"Content-Type": "application/json"}
        if cfg.api_key:
            headers["Authorization"] = f"Bearer {cfg.api_key}"
        resp = requests.post(
            cfg.endpoint, json=payload, headers=headers, timeout=cfg.timeout
        )
        resp.raise_for_status()
        return _reply_text(resp.json(), cfg.request_shape)

    def score_edit(self, source: TokenSeq, edit: Edit, index: int) -> int:
        prompt = render_prompt(source, edit)
        payload = self._payload(prompt)
        last_error: Exception | None = None
        for _ in range(self.cfg.max_retries + 1):
            try:
                reply = self.transport(payload, self.cfg)
            except Exception as exc:
                last_error = exc
                continue
            value = parse_llm_reply(reply)
            if value is not None:
                return value
            last_error = None  # unparseable reply, not a transport failure
        if last_error is not None:
            raise LlmRequestError(index, last_error)
        with self._lock:
            self.warning_count += 1
        logger.warning(
            "edit %d: no 1-5 score in LLM reply after retries; defaulting to %d",
            index,
            DEFAULT_LLM_WEIGHT,
        )
        return DEFAULT_LLM_WEIGHT


def llm_weights(
    sentence: TokenSeq,
    edits: list[Edit],
    cfg: LlmClientConfig,
    client: LlmClient | None = None,
) -> list[float]:
    """Score each edit of the (uncorrected) sentence 1-5, keeping edit order."""
    if client is None:
        client = LlmClient(cfg)
    if not edits:
        return []
    workers = max(1, min(cfg.concurrency, len(edits)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        scores = list(
            pool.map(
                lambda pair: client.score_edit(sentence, pair[1], pair[0]),
                enumerate(edits),
            )
        )
    return [float(s) for s in scores]


def _reply_text(body: dict, shape: str) -> str:
    try:
        choice = body["choices"][0]
        if shape == "chat":
            return choice["message"]["content"]
        return choice["text"]
    except (KeyError, IndexError, TypeError):
        return json.dumps(body)


def unit_weights(ca: ChunkAlignment) -> list[float]:
    return [1.0] * ca.num_columns


def length_weights(ca: ChunkAlignment, chosen_ref: int) -> list[float]:
    if not 0 <= chosen_ref < ca.num_references:
        raise IndexError(f"reference {chosen_ref} out of range")
    weights = []
    for col in range(ca.num_columns):
        longest = max(
            len(ca.source_tokens(col)),
            len(ca.hypothesis_tokens(col)),
            len(ca.reference_tokens(chosen_ref, col)),
        )
        weights.append(float(max(1, longest)))
    return weights


def column_edit(ca: ChunkAlignment, col: int, chosen_ref: int) -> Edit | None:
    """The material to weight at a column, or None where nothing changed.

    The hypothesis's own correction takes precedence; where the hypothesis
    left the source alone but the chosen reference changed it, the missed
    reference correction is what gets weighted.
    """
    start = sum(len(ca.source_tokens(c)) for c in range(col))
    end = start + len(ca.source_tokens(col))
    if ca.hypothesis_changed(col):
        return Edit(start=start, end=end, target_tokens=ca.hypothesis_tokens(col))
    if ca.reference_changed(chosen_ref, col):
        return Edit(
            start=start, end=end, target_tokens=ca.reference_tokens(chosen_ref, col)
        )
    return None


@dataclass
class WeightStrategy:
    """Strategy tag plus whatever that strategy needs to run."""

    tag: str
    weight_file: WeightFile | None = None
    llm_config: LlmClientConfig | None = None
    llm_transport: object = None
    miss_count: int = 0
    _llm_client: LlmClient | None = field(default=None, repr=False, init=False)

    def __post_init__(self) -> None:
        if self.tag not in STRATEGY_TAGS:
            raise ValueError(f"unknown weighting strategy {self.tag!r}")
        if self.tag == FILE and self.weight_file is None:
            raise ValueError("file weighting needs a loaded weight file")
        if self.tag == LLM:
            if self.llm_config is None:
                raise ValueError("llm weighting needs an endpoint configuration")
            self._llm_client = LlmClient(self.llm_config, transport=self.llm_transport)

    @property
    def llm_warning_count(self) -> int:
        return self._llm_client.warning_count if self._llm_client else 0

    def provider(self):
        """Adapt to the (ca, sentence_index, chosen_ref) provider interface."""

        def provide(ca: ChunkAlignment, sentence_index: int, chosen_ref: int) -> list[float]:
            return resolve(self, ca, sentence_index, chosen_ref)

        return provide


def resolve(
    strategy: WeightStrategy,
    ca: ChunkAlignment,
    sentence_index: int,
    chosen_ref: int = 0,
) -> list[float]:
    """Per-column weights for one sentence under the given strategy."""
    if strategy.tag == UNIT:
        return unit_weights(ca)
    if strategy.tag == LENGTH:
        return length_weights(ca, chosen_ref)
    if strategy.tag == FILE:
        weights = []
        for col in range(ca.num_columns):
            key = (sentence_index, col)
            entry = strategy.weight_file.entries.get(key)
            if entry is None:
                # only columns somebody edited ever contribute to a count,
                # so an absent weight elsewhere is not worth a warning
                if ca.hypothesis_changed(col) or any(
                    ca.reference_changed(r, col) for r in range(ca.num_references)
                ):
                    strategy.miss_count += 1
                weights.append(1.0)
            else:
                weights.append(entry)
        return weights
    if strategy.tag == LLM:
        source = tuple(tok for col in range(ca.num_columns) for tok in ca.source_tokens(col))
        weights = [1.0] * ca.num_columns
        scored_cols = []
        edits = []
        for col in range(ca.num_columns):
            edit = column_edit(ca, col, chosen_ref)
            if edit is not None:
                scored_cols.append(col)
                edits.append(edit)
        if edits:
            scores = llm_weights(source, edits, strategy.llm_config, strategy._llm_client)
            for col, score in zip(scored_cols, scores):
                weights[col] = score
        return weights
    raise ValueError(f"unknown weighting strategy {strategy.tag!r}")
