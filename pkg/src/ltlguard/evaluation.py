"""Metrics over labeled datasets: syntactic validity, equivalence-aware
semantic correctness (ambiguity-intolerant S1 / ambiguity-friendly S2), and
the two robustness fractions (agreement modulo atom renaming, and exact
agreement across rephrasings).

Percentages are truncated (not rounded) to one decimal, matching the
reporting convention the arithmetic fixtures pin down. A small synonym map
(grant/granted) normalizes atom naming before comparison.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .backends import Backend
from .consistency import ResourceLimit, equivalent
from .formulas import Formula, atoms, canonical_template, rename_atoms
from .pipeline import PipelineConfig, TranslationResult, translate_one
from .retrieval import RetrievalIndex
from .syntax import parse_strict


class DatasetError(Exception):
    pass


class EmptyDataset(DatasetError):
    pass


@dataclass(frozen=True)
class GoldEntry:
    """A labeled item: gold[0] is the expert label, the rest are plausible
    alternatives accepted only under S2 scoring."""

    nl: str
    gold: tuple[str, ...]
    group: str | None = None

    def __post_init__(self):
        if not self.gold:
            raise ValueError("gold list must be non-empty")


def load_dataset(path) -> list[GoldEntry]:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"{path}:{lineno}: invalid JSON: {e}") from e
            if "nl" not in obj or "gold" not in obj:
                raise DatasetError(f"{path}:{lineno}: needs 'nl' and 'gold' fields")
            try:
                for text in obj["gold"]:
                    parse_strict(text)
            except Exception as e:
                raise DatasetError(f"{path}:{lineno}: gold does not parse: {e}") from e
            entries.append(
                GoldEntry(obj["nl"], tuple(obj["gold"]), obj.get("group"))
            )
    if not entries:
        raise EmptyDataset(f"{path}: dataset has no entries")
    return entries


def load_nl2spec_csv(path) -> list[GoldEntry]:
    """Loader for external benchmark CSVs with an NL column and an LTL column
    (header names are matched case-insensitively)."""
    nl_names = {"nl", "natural language", "sentence", "raw_nl", "input"}
    ltl_names = {"ltl", "formula", "formalization", "raw_ltl", "output"}
    entries = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DatasetError(f"{path}: missing CSV header")
        field_map = {name.strip().lower(): name for name in reader.fieldnames}
        nl_col = next((field_map[n] for n in field_map if n in nl_names), None)
        ltl_col = next((field_map[n] for n in field_map if n in ltl_names), None)
        if nl_col is None or ltl_col is None:
            raise DatasetError(
                f"{path}: could not find NL/LTL columns in {reader.fieldnames}"
            )
        for row in reader:
            entries.append(GoldEntry(row[nl_col].strip(), (row[ltl_col].strip(),)))
    if not entries:
        raise EmptyDataset(f"{path}: dataset has no entries")
    return entries


def percentage(numerator: int, denominator: int) -> float:
    """Percent truncated to one decimal: 69/70 -> 98.5, 65/70 -> 92.8."""
    if denominator == 0:
        return 0.0
    return (numerator * 1000 // denominator) / 10


# Atom names treated as interchangeable when comparing formulas.
DEFAULT_SYNONYMS: tuple[frozenset[str], ...] = (frozenset({"grant", "granted"}),)


def _synonym_normalize(
    f: Formula, synonyms: Sequence[frozenset[str]] = DEFAULT_SYNONYMS
) -> Formula:
    representative = {}
    for group in synonyms:
        rep = min(group)
        for name in group:
            representative[name] = rep
    mapping = {a: representative.get(a, a) for a in atoms(f)}
    if all(k == v for k, v in mapping.items()):
        return f
    return rename_atoms(f, mapping)


def formulas_match(
    result: Formula, gold: Formula, state_cap: int | None = None
) -> bool | None:
    """Equivalence-aware comparison with a consistent atom alignment.

    Atoms are matched by name (after synonym normalization); when the names
    differ the formulas are compared as templates, first structurally and
    then by template-level equivalence. Returns None when the checker hits
    its resource limit (scored as undecided).
    """
    kwargs = {} if state_cap is None else {"state_cap": state_cap}
    a = _synonym_normalize(result)
    b = _synonym_normalize(gold)
    try:
        if equivalent(a, b, **kwargs):
            return True
        ta, _ = canonical_template(a)
        tb, _ = canonical_template(b)
        if set(atoms(a)) == set(atoms(b)):
            return False  # same vocabulary: the direct comparison is final
        if ta == tb:
            return True
        return equivalent(ta, tb, **kwargs)
    except ResourceLimit:
        return None


def score_syntactic(results: Sequence[TranslationResult]) -> float:
    """Percent of results whose outcome is a parsed formula."""
    valid = sum(1 for r in results if r.outcome == "formula")
    return percentage(valid, len(results))


def semantic_verdicts(
    results: Sequence[TranslationResult],
    gold: Sequence[GoldEntry],
    mode: str = "s1",
    state_cap: int | None = None,
) -> tuple[list[bool], list[int]]:
    """Per-item verdicts plus the indices the checker could not decide
    (undecided counts as incorrect)."""
    if mode not in ("s1", "s2"):
        raise ValueError(f"mode must be 's1' or 's2', got {mode!r}")
    if len(results) != len(gold):
        raise ValueError("results and gold must align index-wise")
    verdicts: list[bool] = []
    undecided: list[int] = []
    for i, (result, entry) in enumerate(zip(results, gold)):
        if result.outcome != "formula" or result.formula is None:
            verdicts.append(False)
            continue
        candidates = entry.gold[:1] if mode == "s1" else entry.gold
        verdict = False
        hit_limit = False
        for text in candidates:
            match = formulas_match(result.formula, parse_strict(text), state_cap)
            if match is True:
                verdict = True
                break
            if match is None:
                hit_limit = True
        if not verdict and hit_limit:
            undecided.append(i)
        verdicts.append(verdict)
    return verdicts, undecided


def score_semantic(
    results: Sequence[TranslationResult],
    gold: Sequence[GoldEntry],
    mode: str = "s1",
    state_cap: int | None = None,
) -> float:
    verdicts, _ = semantic_verdicts(results, gold, mode, state_cap)
    return percentage(sum(verdicts), len(verdicts))


@dataclass(frozen=True)
class RobustnessScore:
    agreeing: int
    total: int

    @property
    def fraction(self) -> str:
        return f"{self.agreeing}/{self.total}"

    @property
    def value(self) -> float:
        return self.agreeing / self.total if self.total else 0.0

    def __str__(self) -> str:
        return self.fraction


def arr_score(group_results: Sequence[Formula | None]) -> RobustnessScore:
    """Largest subset whose canonical templates are structurally equal.
    Failed translations (None) count toward the denominator only."""
    if not group_results:
        raise ValueError("need at least one result")
    templates = Counter(
        canonical_template(f)[0] for f in group_results if f is not None
    )
    best = max(templates.values()) if templates else 0
    return RobustnessScore(best, len(group_results))


def rr_score(
    group_results: Sequence[Formula | None],
    synonyms: Sequence[frozenset[str]] = DEFAULT_SYNONYMS,
) -> RobustnessScore:
    """Largest subset of structurally equal formulas. No atom renaming beyond
    the synonym map: rephrasings share their vocabulary. Robustness is
    orthogonal to correctness."""
    if not group_results:
        raise ValueError("need at least one result")
    shapes = Counter(
        _synonym_normalize(f, synonyms) for f in group_results if f is not None
    )
    best = max(shapes.values()) if shapes else 0
    return RobustnessScore(best, len(group_results))


@dataclass
class EvalReport:
    syn_pct: float
    sem_s1_pct: float
    sem_s2_pct: float
    items: list[dict]
    groups: dict[str, dict[str, str]]
    undecided: list[int]
    config: dict

    def to_json(self) -> dict:
        return {
            "version": 1,
            "metrics": {
                "syn_pct": self.syn_pct,
                "sem_s1_pct": self.sem_s1_pct,
                "sem_s2_pct": self.sem_s2_pct,
            },
            "groups": self.groups,
            "items": self.items,
            "undecided": self.undecided,
            "config": self.config,
        }


def run_eval(
    dataset: Sequence[GoldEntry],
    cfg: PipelineConfig,
    backend: Backend,
    index: RetrievalIndex | None = None,
) -> EvalReport:
    """Translate each entry, score all four metrics, and per-group robustness."""
    if not dataset:
        raise EmptyDataset("dataset has no entries")
    results = [
        translate_one(entry.nl, cfg, index, backend, req_id=f"E{i}")
        for i, entry in enumerate(dataset, start=1)
    ]
    s1, undec1 = semantic_verdicts(results, dataset, "s1", cfg.state_cap)
    s2, undec2 = semantic_verdicts(results, dataset, "s2", cfg.state_cap)
    undecided = sorted(set(undec1) | set(undec2))

    items = []
    for entry, result, v1, v2 in zip(dataset, results, s1, s2):
        items.append({
            "nl": entry.nl,
            "output_ltl": result.ltl,
            "syn": result.outcome == "formula",
            "s1": v1,
            "s2": v2,
            "multi_formula": result.multi_formula,
            "group": entry.group,
        })

    groups: dict[str, dict[str, str]] = {}
    group_ids = sorted({e.group for e in dataset if e.group is not None})
    for gid in group_ids:
        members = [
            r.formula if r.outcome == "formula" else None
            for e, r in zip(dataset, results)
            if e.group == gid
        ]
        groups[gid] = {
            "arr": arr_score(members).fraction,
            "rr": rr_score(members).fraction,
        }

    return EvalReport(
        syn_pct=score_syntactic(results),
        sem_s1_pct=percentage(sum(s1), len(s1)),
        sem_s2_pct=percentage(sum(s2), len(s2)),
        items=items,
        groups=groups,
        undecided=undecided,
        config=cfg.to_json(),
    )
