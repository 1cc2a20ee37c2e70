"""Command-line interface: translate, check, index build, eval."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from importlib import resources

from .backends import HttpBackend, RuleBasedMock, ScriptedBackend
from .consistency import NamedFormula, Sat, check_set
from .evaluation import load_dataset, run_eval
from .pipeline import VARIANTS, PipelineConfig, report_json, translate_set
from .retrieval import BuiltinEmbedding, build_index, load_corpus, save_index
from .syntax import ParseDiagnostic, parse


def default_corpus_path():
    return resources.files("ltlguard.data").joinpath("corpus.jsonl")


def _read_requirements(path: str) -> tuple[list[str], list[str] | None]:
    """One requirement per line; '#' comments and blank lines are ignored.
    A leading 'Rxx:' names the requirement explicitly."""
    reqs: list[str] = []
    ids: list[str] = []
    explicit = False
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            head, sep, tail = line.partition(":")
            if sep and head and not head.strip().count(" ") and head[0] == "R":
                ids.append(head.strip())
                reqs.append(tail.strip())
                explicit = True
            else:
                ids.append(f"R{len(ids) + 1}")
                reqs.append(line)
    return reqs, (ids if explicit else None)


def _make_backend(args) -> object:
    if args.backend == "mock":
        if getattr(args, "script", None):
            responses = []
            with open(args.script, encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        responses.append(json.loads(line)["response"])
            return ScriptedBackend(responses=responses)
        return RuleBasedMock(seed=args.seed)
    endpoint = os.environ.get("LTLGUARD_ENDPOINT")
    model = os.environ.get("LTLGUARD_MODEL")
    api_key = os.environ.get("LTLGUARD_API_KEY")
    if not endpoint or not model:
        raise SystemExit(
            "http backend needs LTLGUARD_ENDPOINT and LTLGUARD_MODEL "
            "(and optionally LTLGUARD_API_KEY)"
        )
    return HttpBackend(endpoint, model, api_key=api_key)


def _load_index(args):
    corpus_path = args.corpus if args.corpus else default_corpus_path()
    pairs = load_corpus(corpus_path)
    return build_index(pairs, BuiltinEmbedding())


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_translate(args) -> int:
    reqs, ids = _read_requirements(args.input)
    if not reqs:
        print("no requirements found in input", file=sys.stderr)
        return 2
    cfg = PipelineConfig.from_variant(
        args.variant,
        k=args.k,
        max_repairs=args.max_repairs,
        consistency_rounds=args.consistency_rounds,
        seed=args.seed,
        joint_prompt=args.joint,
    )
    backend = _make_backend(args)
    index = _load_index(args) if cfg.retrieval else None
    started = time.monotonic()
    result = translate_set(
        reqs, cfg, index, backend, ids=ids, record_timing=args.timing
    )
    elapsed = round(time.monotonic() - started, 3) if args.timing else None
    _emit(report_json(result, cfg, timing=elapsed), args.out)
    return 0


def _cmd_check(args) -> int:
    with open(args.formulas, encoding="utf-8") as fh:
        entries = json.load(fh)
    named = []
    for entry in entries:
        parsed = parse(entry["ltl"])
        if isinstance(parsed, ParseDiagnostic):
            print(f"{entry['id']}: {parsed.message}", file=sys.stderr)
            return 2
        named.append(NamedFormula(entry["id"], parsed, origin=entry.get("nl", "")))
    outcome = check_set(named)
    payload = {"verdict": outcome.verdict}
    if isinstance(outcome, Sat):
        payload["model"] = outcome.model.to_json()
    else:
        payload["core"] = list(outcome.core)
    _emit(payload, args.out)
    return 0


def _cmd_index_build(args) -> int:
    pairs = load_corpus(args.corpus if args.corpus else default_corpus_path())
    if args.provider == "builtin":
        provider = BuiltinEmbedding()
    else:
        from .retrieval import RemoteEmbedding

        endpoint = os.environ.get("LTLGUARD_ENDPOINT")
        model = os.environ.get("LTLGUARD_MODEL")
        if not endpoint or not model:
            raise SystemExit(
                "remote provider needs LTLGUARD_ENDPOINT and LTLGUARD_MODEL"
            )
        provider = RemoteEmbedding(
            endpoint, model, api_key=os.environ.get("LTLGUARD_API_KEY")
        )
    index = build_index(pairs, provider)
    save_index(index, args.out)
    print(f"indexed {len(index)} pairs -> {args.out}")
    return 0


def _cmd_eval(args) -> int:
    dataset = load_dataset(args.dataset)
    cfg = PipelineConfig.from_variant(args.variant, k=args.k, seed=args.seed)
    backend = _make_backend(args)
    index = _load_index(args) if cfg.retrieval else None
    report = run_eval(dataset, cfg, backend, index)
    _emit(report.to_json(), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ltlguard",
        description="Translate natural-language requirements into consistent "
        "LTL specifications.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--variant", default="v7", choices=sorted(VARIANTS))
        p.add_argument("--backend", default="mock", choices=["mock", "http"])
        p.add_argument("--script", help="JSONL of scripted mock responses")
        p.add_argument("--k", type=int, default=3)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--corpus", help="corpus JSONL (defaults to the shipped one)")
        p.add_argument("--out", help="write JSON here instead of stdout")

    t = sub.add_parser("translate", help="translate a requirements file")
    t.add_argument("--input", required=True)
    t.add_argument("--max-repairs", type=int, default=3, dest="max_repairs")
    t.add_argument(
        "--consistency-rounds", type=int, default=2, dest="consistency_rounds"
    )
    t.add_argument("--joint", action="store_true",
                   help="send all requirements in one prompt")
    t.add_argument("--timing", action="store_true",
                   help="include wall-clock timing in the report")
    add_common(t)
    t.set_defaults(func=_cmd_translate)

    c = sub.add_parser("check", help="consistency-check a formula set")
    c.add_argument("--formulas", required=True,
                   help='JSON file: [{"id", "ltl"}, ...]')
    c.add_argument("--out")
    c.set_defaults(func=_cmd_check)

    i = sub.add_parser("index", help="retrieval index operations")
    isub = i.add_subparsers(dest="index_command", required=True)
    ib = isub.add_parser("build", help="build and save an index cache")
    ib.add_argument("--corpus")
    ib.add_argument("--provider", default="builtin", choices=["builtin", "remote"])
    ib.add_argument("--out", required=True)
    ib.set_defaults(func=_cmd_index_build)

    e = sub.add_parser("eval", help="score a labeled dataset")
    e.add_argument("--dataset", required=True)
    add_common(e)
    e.set_defaults(func=_cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
