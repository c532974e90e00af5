"""Command-line interface.

Subcommands: generate-corpus, ingest, query, stats, bench, econ-report,
calibrate-tau. Mock mode needs no configuration; live endpoints are described
in a TOML config file and authenticated through an environment variable.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from .corpus import (
    gen_adversarial,
    gen_confusable,
    gen_goal_drift_script,
    gen_multihop,
    gen_pharma,
    gen_queries,
    write_jsonl,
)
from .econ import PriceTable, TokenModel
from .harness import (
    ExperimentConfig,
    calibrate_tau,
    emit_report,
    ingest_facts,
    run_all,
    _RUNNERS,
)
from .llm import LiveEndpoint, LiveEndpointConfig, MockQueryParser, MockScanAnswerer
from .pipelines import query_ko
from .store import load as load_store


def _load_toml(path: str) -> dict:
    try:
        import tomllib  # py311+
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _endpoints_from_config(raw: dict, trace_dir: Path | None) -> dict:
    endpoints = {}
    for role, section in raw.get("endpoints", {}).items():
        tracer = None
        if trace_dir is not None:
            trace_path = trace_dir / f"trace_{role}.jsonl"

            def tracer(payload: dict, _path=trace_path) -> None:
                with open(_path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(payload, ensure_ascii=False) + "\n")

        endpoints[role] = LiveEndpoint(LiveEndpointConfig(role=role, **section), trace=tracer)
    return endpoints


def _build_config(args: argparse.Namespace) -> ExperimentConfig:
    raw = _load_toml(args.config) if getattr(args, "config", None) else {}
    config = ExperimentConfig(
        experiment=getattr(args, "experiment", "scaling"),
        mode=args.mode,
        out_dir=Path(args.out),
        trace=args.trace,
        stream_results=True,
    )
    if getattr(args, "seed", None) is not None:
        config.seeds = (args.seed,)
    if raw.get("seeds"):
        config.seeds = tuple(raw["seeds"])
    if getattr(args, "n", None):
        config.n_values = tuple(args.n)
    elif raw.get("n_values"):
        config.n_values = tuple(raw["n_values"])
    if raw.get("token_model"):
        config.token_model = TokenModel(**raw["token_model"])
    if raw.get("prices"):
        config.prices = PriceTable(**raw["prices"])
    if args.mode == "live":
        trace_dir = config.out_dir / "trace" if args.trace else None
        if trace_dir is not None:
            trace_dir.mkdir(parents=True, exist_ok=True)
        config.endpoints = _endpoints_from_config(raw, trace_dir)
    return config


def cmd_generate_corpus(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    kind = args.kind
    if kind == "pharma":
        write_jsonl(gen_pharma(args.n, args.seed), out)
    elif kind == "queries":
        facts = gen_pharma(args.n, args.seed)
        write_jsonl(gen_queries(facts, args.m, args.seed, style=args.style), out)
    elif kind == "adversarial":
        fixture = gen_adversarial(seed=args.seed)
        write_jsonl(
            [{"group_id": g.group_id, "drug": g.drug, "target": g.target,
              "docs": [asdict(d) | {"keys": sorted(d.keys)} for d in g.docs]}
             for g in fixture.groups],
            out,
        )
        queries_path = out.with_name(out.stem + "_queries" + out.suffix)
        write_jsonl(list(fixture.queries), queries_path)
        print(f"wrote {out} and {queries_path}")
        return 0
    elif kind == "confusable":
        write_jsonl(gen_confusable(args.seed), out)
    elif kind == "drift-script":
        script = gen_goal_drift_script(args.seed)
        payload = [{"turn": i, "text": t} for i, t in enumerate(script.turns)]
        write_jsonl(payload, out)
        write_jsonl(list(script.constraints), out.with_name(out.stem + "_constraints" + out.suffix))
    elif kind == "multihop":
        fixture = gen_multihop(gen_pharma(args.n, args.seed), m=args.m, seed=args.seed)
        write_jsonl(list(fixture.facts), out)
        write_jsonl(list(fixture.cases), out.with_name(out.stem + "_cases" + out.suffix))
    else:
        raise SystemExit(f"unknown corpus kind: {kind}")
    print(f"wrote {out}")
    return 0


def cmd_ingest(args: argparse.Namespace) -> int:
    facts = []
    with open(args.facts, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                facts.append(json.loads(line))
    from .corpus import FactRecord

    records = [FactRecord(**{k: v for k, v in f.items()
                             if k in FactRecord.__dataclass_fields__}) for f in facts]
    store = ingest_facts(records, journal_path=args.store)
    stats = store.flush(args.store)
    print(f"ingested {stats.count} KOs into {args.store} "
          f"({stats.journal_bytes} bytes, {stats.bytes_per_ko:.1f} bytes/KO)")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    store = load_store(args.store)
    stats = store.stats()
    print(json.dumps({"count": stats.count, "journal_bytes": stats.journal_bytes,
                      "bytes_per_ko": round(stats.bytes_per_ko, 2)}))
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    store = load_store(args.store)
    if args.mode == "live":
        raw = _load_toml(args.config) if args.config else {}
        endpoints = _endpoints_from_config(raw, None)
        parser = endpoints.get("parser") or MockQueryParser()
        answerer = endpoints.get("answerer") or MockScanAnswerer()
    else:
        parser, answerer = MockQueryParser(), MockScanAnswerer()
    result = query_ko(store, args.question, parser, answerer)
    print(json.dumps({
        "answer": result.answer,
        "input_tokens": result.input_tokens,
        "output_tokens": result.output_tokens,
    }))
    return 0


def cmd_bench(args: argparse.Namespace) -> int:
    config = _build_config(args)
    if args.experiment == "all":
        rows = run_all(config)
    else:
        rows = _RUNNERS[args.experiment](config)
    breaches = emit_report(rows, config.out_dir)
    print(f"{len(rows)} rows -> {config.out_dir}/report.jsonl "
          f"({len(breaches)} tolerance breaches)")
    return 1 if breaches else 0


def cmd_econ_report(args: argparse.Namespace) -> int:
    config = _build_config(args)
    rows = _RUNNERS["econ"](config)
    breaches = emit_report(rows, config.out_dir)
    print(f"econ table -> {config.out_dir} ({len(breaches)} breaches)")
    return 1 if breaches else 0


def cmd_calibrate_tau(args: argparse.Namespace) -> int:
    print(json.dumps(calibrate_tau(args.seed), indent=2))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="komem", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-corpus", help="write benchmark fixtures as JSONL")
    p.add_argument("kind", choices=["pharma", "queries", "adversarial",
                                    "confusable", "drift-script", "multihop"])
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--m", type=int, default=20)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--style", default="clean", choices=["clean", "messy"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate_corpus)

    p = sub.add_parser("ingest", help="load JSONL facts into a KO journal")
    p.add_argument("--facts", required=True)
    p.add_argument("--store", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="store statistics")
    p.add_argument("--store", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("query", help="answer one question via the KO pipeline")
    p.add_argument("--store", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--mode", default="mock", choices=["mock", "live"])
    p.add_argument("--config")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("bench", help="run a benchmark experiment")
    p.add_argument("experiment", choices=["scaling", "adversarial", "compaction",
                                          "drift", "multihop", "econ", "all"])
    p.add_argument("--mode", default="mock", choices=["mock", "live"])
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, nargs="*")
    p.add_argument("--out", default="runs")
    p.add_argument("--config")
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("econ-report", help="emit the cost comparison table")
    p.add_argument("--mode", default="mock", choices=["mock", "live"])
    p.add_argument("--out", default="runs")
    p.add_argument("--config")
    p.add_argument("--trace", action="store_true")
    p.set_defaults(func=cmd_econ_report)

    p = sub.add_parser("calibrate-tau", help="report the density threshold calibration")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_calibrate_tau)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
