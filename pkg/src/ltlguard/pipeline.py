"""End-to-end orchestration: prompt assembly, retrieval enrichment,
constrained or full-text generation, parse/repair, joint consistency
checking with conflict-feedback retries.

The four component toggles (grammar-in-prompt, strict decoding, retrieval,
parser feedback) realize the seven ablation variants v1..v7. The joint
formula is always the conjunction of the per-requirement translations in
input order.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

from .backends import Backend, BackendError, CompletionParams, Prompt
from .consistency import (
    DEFAULT_STATE_CAP,
    NamedFormula,
    Sat,
    SatOutcome,
    Unsat,
    check_set,
    join,
)
from .formulas import And, Formula
from .generation import (
    DeadEnd,
    NotLtl,
    RepairAttempt,
    constrained_generate,
    repair_with_history,
)
from .masking import MaskStore, build_mask_store
from .prompts import SENTINEL, SYSTEM_PROMPT, conflict_block
from .retrieval import RetrievalIndex, assemble_prompt
from .syntax import ParseDiagnostic, formula_to_text, parse

REPORT_VERSION = 1

# Component rows (G, S, R, F) per variant.
VARIANTS: dict[str, tuple[bool, bool, bool, bool]] = {
    "v1": (False, False, False, False),
    "v2": (True, False, False, False),
    "v3": (True, True, False, False),
    "v4": (True, True, True, False),
    "v5": (True, True, False, True),
    "v6": (False, True, True, True),
    "v7": (True, True, True, True),
}


@dataclass(frozen=True)
class PipelineConfig:
    grammar_in_prompt: bool = False  # G
    strict_decoding: bool = False    # S
    retrieval: bool = False          # R
    feedback: bool = False           # F
    k: int = 3
    max_repairs: int = 3
    consistency_rounds: int = 2
    seed: int = 0
    joint_prompt: bool = False
    max_tokens: int = 128
    temperature: float = 0.0
    state_cap: int = DEFAULT_STATE_CAP

    @classmethod
    def from_variant(cls, name: str, **overrides) -> "PipelineConfig":
        if name not in VARIANTS:
            raise ValueError(f"unknown variant {name!r}; expected v1..v7")
        g, s, r, f = VARIANTS[name]
        return cls(
            grammar_in_prompt=g, strict_decoding=s, retrieval=r, feedback=f,
            **overrides,
        )

    @property
    def variant(self) -> str | None:
        row = (self.grammar_in_prompt, self.strict_decoding,
               self.retrieval, self.feedback)
        for name, flags in VARIANTS.items():
            if flags == row:
                return name
        return None

    def to_json(self) -> dict:
        return {
            "variant": self.variant,
            "grammar_in_prompt": self.grammar_in_prompt,
            "strict_decoding": self.strict_decoding,
            "retrieval": self.retrieval,
            "feedback": self.feedback,
            "k": self.k,
            "max_repairs": self.max_repairs,
            "consistency_rounds": self.consistency_rounds,
            "seed": self.seed,
            "joint_prompt": self.joint_prompt,
            "max_tokens": self.max_tokens,
            "temperature": self.temperature,
        }


@dataclass
class TranslationResult:
    id: str
    requirement: str
    outcome: str  # "formula" | "not_ltl" | "syntax_failure" | "backend_failure"
    ltl: str | None = None
    formula: Formula | None = None
    retrieved: tuple[tuple[int, float], ...] = ()
    repair_rounds: int = 0
    multi_formula: bool = False
    attempts: tuple[RepairAttempt, ...] = ()
    error: str | None = None
    timing: float | None = None
    alternatives: tuple[str, ...] = ()  # reserved; at most one formula emitted

    def to_json(self) -> dict:
        row = {
            "id": self.id,
            "requirement": self.requirement,
            "outcome": self.outcome,
            "ltl": self.ltl,
            "retrieved": [
                {"corpus_index": i, "score": round(s, 6)} for i, s in self.retrieved
            ],
            "repair_rounds": self.repair_rounds,
            "multi_formula": self.multi_formula,
            "alternatives": list(self.alternatives),
            "timing": self.timing,
        }
        if self.attempts:
            row["attempts"] = [
                {
                    "candidate": a.candidate,
                    "offset": a.diagnostic.offset,
                    "message": a.diagnostic.message,
                }
                for a in self.attempts
            ]
        if self.error is not None:
            row["error"] = self.error
        return row


@dataclass
class SetResult:
    results: list[TranslationResult]
    joint: Formula | None
    outcome: SatOutcome | None
    rounds: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        joint_obj = None
        if self.joint is not None and self.outcome is not None:
            joint_obj = {
                "ltl": formula_to_text(self.joint),
                "verdict": self.outcome.verdict,
                "model": (
                    self.outcome.model.to_json()
                    if isinstance(self.outcome, Sat)
                    else None
                ),
                "core": (
                    list(self.outcome.core) if isinstance(self.outcome, Unsat) else None
                ),
                "rounds": self.rounds,
            }
        return {
            "results": [r.to_json() for r in self.results],
            "joint": joint_obj,
        }


_MASK_STORE_CACHE: dict[str, MaskStore] = {}


def _mask_store_for(backend: Backend) -> MaskStore:
    vocab = backend.capability.vocabulary
    key = vocab.digest()
    if key not in _MASK_STORE_CACHE:
        _MASK_STORE_CACHE[key] = build_mask_store(vocab)
    return _MASK_STORE_CACHE[key]


def _build_prompt(
    requirements: Sequence[str],
    cfg: PipelineConfig,
    index: RetrievalIndex | None,
    query: str,
) -> tuple[Prompt, tuple[tuple[int, float], ...]]:
    retrieved: tuple[tuple[int, float], ...] = ()
    examples = []
    if cfg.retrieval:
        if index is None:
            raise ValueError("retrieval is enabled but no index was provided")
        hits = index.retrieve(query, cfg.k)
        pair_pos = {p: i for i, p in enumerate(index.pairs)}
        retrieved = tuple((pair_pos[p], score) for p, score in hits)
        examples = [p for p, _ in hits]
    prompt = assemble_prompt(
        SYSTEM_PROMPT, examples, list(requirements),
        include_grammar=cfg.grammar_in_prompt,
    )
    prompt.metadata.update({"variant": cfg.variant, "seed": cfg.seed})
    return prompt, retrieved


def _parse_output(text: str) -> tuple[Formula | None, bool, ParseDiagnostic | None]:
    """Parse backend output. Multi-line outputs where every line parses are
    joined by conjunction and flagged as multi-formula."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if len(lines) > 1:
        parsed = [parse(ln) for ln in lines]
        if all(isinstance(p, Formula) for p in parsed):
            joined = parsed[0]
            for p in parsed[1:]:
                joined = And(joined, p)
            return joined, True, None
    result = parse(text.strip())
    if isinstance(result, Formula):
        return result, False, None
    return None, False, result


def _translate_with_prompt(
    req_id: str,
    requirement: str,
    prompt: Prompt,
    retrieved: tuple[tuple[int, float], ...],
    cfg: PipelineConfig,
    backend: Backend,
    record_timing: bool = False,
) -> TranslationResult:
    started = time.monotonic()
    params = CompletionParams(
        max_tokens=cfg.max_tokens, temperature=cfg.temperature, seed=cfg.seed
    )

    def finish(result: TranslationResult) -> TranslationResult:
        if record_timing:
            result.timing = round(time.monotonic() - started, 6)
        return result

    if cfg.strict_decoding and backend.capability.step_wise:
        try:
            generated = constrained_generate(
                backend, prompt, _mask_store_for(backend),
                max_tokens=cfg.max_tokens, temperature=cfg.temperature,
                seed=cfg.seed,
            )
        except DeadEnd:
            generated = None  # vocabulary cannot extend; full-text path below
        except BackendError as e:
            return finish(TranslationResult(
                req_id, requirement, "backend_failure", retrieved=retrieved,
                error=str(e),
            ))
        if isinstance(generated, NotLtl):
            return finish(TranslationResult(
                req_id, requirement, "not_ltl", retrieved=retrieved
            ))
        if generated is not None:
            formula, multi, _ = _parse_output(generated)
            if formula is None:
                raise RuntimeError("strict decoding emitted unparseable text")
            return finish(TranslationResult(
                req_id, requirement, "formula", ltl=generated, formula=formula,
                retrieved=retrieved, multi_formula=multi,
            ))

    try:
        text = backend.complete(prompt, params).strip()
    except BackendError as e:
        return finish(TranslationResult(
            req_id, requirement, "backend_failure", retrieved=retrieved,
            error=str(e),
        ))
    if text == SENTINEL:
        return finish(TranslationResult(
            req_id, requirement, "not_ltl", retrieved=retrieved
        ))
    formula, multi, diagnostic = _parse_output(text)
    if formula is not None:
        # multi-line outputs are stored as their printed conjunction so the
        # recorded ltl text always parses
        stored = formula_to_text(formula) if multi else text
        return finish(TranslationResult(
            req_id, requirement, "formula", ltl=stored, formula=formula,
            retrieved=retrieved, multi_formula=multi,
        ))
    if not cfg.feedback:
        return finish(TranslationResult(
            req_id, requirement, "syntax_failure", retrieved=retrieved,
            attempts=(RepairAttempt(text, diagnostic),),
        ))
    try:
        repaired, attempts = repair_with_history(
            backend, prompt, text, cfg.max_repairs, params
        )
    except BackendError as e:
        return finish(TranslationResult(
            req_id, requirement, "backend_failure", retrieved=retrieved,
            error=str(e),
        ))
    if repaired is None:
        return finish(TranslationResult(
            req_id, requirement, "syntax_failure", retrieved=retrieved,
            attempts=attempts, repair_rounds=len(attempts) - 1,
        ))
    return finish(TranslationResult(
        req_id, requirement, "formula", ltl=formula_to_text(repaired),
        formula=repaired, retrieved=retrieved, repair_rounds=len(attempts),
        attempts=attempts,
    ))


def translate_one(
    requirement: str,
    cfg: PipelineConfig,
    index: RetrievalIndex | None,
    backend: Backend,
    req_id: str = "R1",
    record_timing: bool = False,
) -> TranslationResult:
    """Translate a single requirement under the configured components."""
    prompt, retrieved = _build_prompt([requirement], cfg, index, query=requirement)
    return _translate_with_prompt(
        req_id, requirement, prompt, retrieved, cfg, backend,
        record_timing=record_timing,
    )


def conflict_feedback_prompt(
    outcome: SatOutcome, formulas: Sequence[NamedFormula]
) -> str:
    """Deterministic conflict report for the unsat core, asking for corrected
    formulas for exactly the core's requirement ids."""
    if not isinstance(outcome, Unsat):
        raise ValueError("conflict feedback requires an Unsat outcome")
    by_id = {nf.id: nf for nf in formulas}
    members = [
        (req_id, by_id[req_id].origin, formula_to_text(by_id[req_id].formula))
        for req_id in outcome.core
    ]
    return conflict_block(members)


def _joint_translate(
    requirements: Sequence[str],
    ids: Sequence[str],
    cfg: PipelineConfig,
    index: RetrievalIndex | None,
    backend: Backend,
) -> list[TranslationResult]:
    """One prompt carrying every requirement; output lines map to
    requirements in order."""
    prompt, retrieved = _build_prompt(
        requirements, cfg, index, query="\n".join(requirements)
    )
    params = CompletionParams(
        max_tokens=cfg.max_tokens, temperature=cfg.temperature, seed=cfg.seed
    )
    try:
        text = backend.complete(prompt, params).strip()
    except BackendError as e:
        return [
            TranslationResult(rid, req, "backend_failure", retrieved=retrieved,
                              error=str(e))
            for rid, req in zip(ids, requirements)
        ]
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    results = []
    for i, (rid, req) in enumerate(zip(ids, requirements)):
        if i >= len(lines):
            diag = ParseDiagnostic(0, "formula", "end of input",
                                   "joint output had too few lines")
            results.append(TranslationResult(
                rid, req, "syntax_failure", retrieved=retrieved,
                attempts=(RepairAttempt("", diag),),
            ))
            continue
        if lines[i] == SENTINEL:
            results.append(TranslationResult(rid, req, "not_ltl",
                                             retrieved=retrieved))
            continue
        parsed = parse(lines[i])
        if isinstance(parsed, Formula):
            results.append(TranslationResult(
                rid, req, "formula", ltl=lines[i], formula=parsed,
                retrieved=retrieved,
            ))
        else:
            results.append(TranslationResult(
                rid, req, "syntax_failure", retrieved=retrieved,
                attempts=(RepairAttempt(lines[i], parsed),),
            ))
    return results


def translate_set(
    requirements: Sequence[str],
    cfg: PipelineConfig,
    index: RetrievalIndex | None,
    backend: Backend,
    ids: Sequence[str] | None = None,
    record_timing: bool = False,
) -> SetResult:
    """Translate every requirement, join the successes by conjunction, check
    consistency, and on conflict feed the unsat core back for re-translation
    of the core members only, up to cfg.consistency_rounds times."""
    if not requirements:
        raise ValueError("at least one requirement is required")
    if ids is None:
        ids = [f"R{i}" for i in range(1, len(requirements) + 1)]
    if len(ids) != len(requirements):
        raise ValueError("ids and requirements must have matching lengths")

    if cfg.joint_prompt:
        results = _joint_translate(requirements, ids, cfg, index, backend)
    else:
        results = [
            translate_one(req, cfg, index, backend, req_id=rid,
                          record_timing=record_timing)
            for rid, req in zip(ids, requirements)
        ]

    def named(current: Sequence[TranslationResult]) -> list[NamedFormula]:
        return [
            NamedFormula(r.id, r.formula, origin=r.requirement)
            for r in current
            if r.outcome == "formula"
        ]

    formulas = named(results)
    if not formulas:
        return SetResult(results=results, joint=None, outcome=None)

    outcome = check_set(formulas, cfg.state_cap)
    rounds: list[dict] = []
    by_id = {r.id: r for r in results}
    for round_no in range(1, cfg.consistency_rounds + 1):
        if not isinstance(outcome, Unsat):
            break
        feedback = conflict_feedback_prompt(outcome, formulas)
        updates: dict[str, str | None] = {}
        for core_id in outcome.core:
            result = by_id[core_id]
            prompt, retrieved = _build_prompt(
                [result.requirement], cfg, index, query=result.requirement
            )
            prompt = prompt.with_user_suffix(feedback)
            redo = _translate_with_prompt(
                core_id, result.requirement, prompt, retrieved, cfg, backend,
                record_timing=record_timing,
            )
            if redo.outcome == "formula":
                by_id[core_id] = redo
                updates[core_id] = redo.ltl
            else:
                updates[core_id] = None  # kept the previous translation
        results = [by_id[r.id] for r in results]
        formulas = named(results)
        outcome = check_set(formulas, cfg.state_cap) if formulas else None
        rounds.append({
            "round": round_no,
            "core": list(updates),  # the core that triggered this round
            "feedback": feedback,
            "retranslated": updates,
            "verdict": outcome.verdict if outcome is not None else None,
        })
        if outcome is None:
            break

    joint = join(formulas) if formulas else None
    return SetResult(results=results, joint=joint, outcome=outcome, rounds=rounds)


def report_json(set_result: SetResult, cfg: PipelineConfig,
                timing: float | None = None) -> dict:
    body = set_result.to_json()
    return {
        "version": REPORT_VERSION,
        "config": cfg.to_json(),
        "results": body["results"],
        "joint": body["joint"],
        "timing": timing,
    }
