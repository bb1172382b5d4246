"""Command-line front end: ``fridgepref {gen,run,eval,plan,ask,replay}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .belief import LearnerConfig
from .benchgen import FAMILIES, TestCase, generate_dataset, load_dataset, write_dataset
from .catalog import DEFAULT_CATALOG, Catalog
from .harness import (
    APPROACHES,
    InputAborted,
    RunConfig,
    format_plan,
    format_summary,
    interactive_session,
    load_records,
    load_transcript,
    replay,
    run_benchmark,
    scenario_replan,
    summarize,
    summary_csv,
    transcript_lines,
    validate_bound,
    write_records,
)
from .planner import PlannerConfig, plan_with_refinement
from .preference import Preference
from .reward import reward
from .world2d import FridgeGeometry, FridgeState, constraint

SCENARIO_SCHEMA_VERSION = 1


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "y", "on"):
        return True
    if low in ("0", "false", "no", "n", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _catalog(args) -> Catalog:
    return Catalog.load(args.catalog) if getattr(args, "catalog", None) else DEFAULT_CATALOG


def _planner_cfg(args) -> PlannerConfig:
    return PlannerConfig(args.beam, args.samples, args.retries)


def _run_cfg(args) -> RunConfig:
    learner = LearnerConfig(
        n=args.n, m=args.m, epsilon=args.epsilon, eta=args.eta, max_questions=args.max_questions
    )
    return RunConfig(learner, _planner_cfg(args), args.include_gt)


def _add_planner_flags(p: argparse.ArgumentParser):
    p.add_argument("--beam", type=int, default=10, help="beam width")
    p.add_argument("--samples", type=int, default=10, help="candidate centers per region")
    p.add_argument("--retries", type=int, default=4, help="reflect-and-refine attempts")
    p.add_argument("--catalog", help="JSON catalog overriding the built-in objects")


def _add_learner_flags(p: argparse.ArgumentParser):
    p.add_argument("--eta", type=float, default=0.1, help="answer error probability")
    p.add_argument("--epsilon", type=float, default=0.07, help="termination threshold")
    p.add_argument("--n", type=int, default=5, help="number of candidate preferences")
    p.add_argument("--m", type=int, default=2, help="questions per candidate pair")
    p.add_argument("--max-questions", type=int, default=20)
    p.add_argument("--include-gt", type=_bool, default=True, metavar="BOOL",
                   help="insert the ground truth among the candidates")
    p.add_argument("--seed", type=int, action="append", help="run seed (repeatable)")


def cmd_gen(args) -> int:
    geometry = FridgeGeometry(args.shelf_width, args.clearance)
    start = time.perf_counter()
    families = [f for group in args.family or [] for f in group.split(",") if f]
    known = {f.value for f in FAMILIES}
    for f in families:
        if f not in known:
            raise SystemExit(f"unknown family {f!r}; choose from {', '.join(sorted(known))}")
    cases = generate_dataset(
        args.seed,
        families or None,
        args.per_family,
        geometry=geometry,
        catalog=_catalog(args),
        allow_unambiguous=args.allow_unambiguous,
    )
    out = write_dataset(cases, args.out, args.seed)
    print(f"wrote {len(cases)} cases to {out} in {time.perf_counter() - start:.1f}s")
    return 0


def cmd_run(args) -> int:
    cfg = _run_cfg(args)
    cases = load_dataset(args.dataset, _catalog(args))
    approaches = [a for group in args.approach for a in group.split(",")] or ["apricot"]
    for a in approaches:
        if a not in APPROACHES:
            raise SystemExit(f"unknown approach {a!r}; choose from {', '.join(APPROACHES)}")
    seeds = args.seed or [0]
    start = time.perf_counter()
    records = run_benchmark(cases, approaches, cfg, seeds, args.workers)
    elapsed = time.perf_counter() - start
    if args.out:
        write_records(records, args.out, args.timing)
    else:
        write_records(records, sys.stdout, args.timing)
    if args.transcripts:
        tdir = Path(args.transcripts)
        tdir.mkdir(parents=True, exist_ok=True)
        for r in records:
            if r.result is not None and r.result.events:
                name = f"{r.case_id}.{r.approach}.{r.seed}.jsonl"
                (tdir / name).write_text(transcript_lines(r.result.events))
    print(format_summary(summarize(records)), file=sys.stderr)
    print(f"{len(records)} runs in {elapsed:.1f}s", file=sys.stderr)
    failures = [msg for ok, msg in (validate_bound(r) for r in records) if not ok]
    for msg in failures:
        print("bound check failed: " + msg, file=sys.stderr)
    return 1 if failures and args.assert_bound else 0


def cmd_eval(args) -> int:
    docs = []
    for path in args.records:
        docs.extend(load_records(path))
    rows = summarize(docs)
    print(format_summary(rows, references=not args.no_reference))
    if args.csv:
        Path(args.csv).write_text(summary_csv(rows))
    return 0


def _load_scenario(doc: dict, catalog: Catalog):
    """A benchmark case (its ground truth is used) or a bare scenario with
    ``initialState``, ``task``, ``preference`` and an optional ``script``."""
    if "groundTruth" in doc:
        tc = TestCase.from_json(doc, catalog)
        return tc.initial_state, list(tc.task), tc.ground_truth, None
    if doc.get("schemaVersion") != SCENARIO_SCHEMA_VERSION:
        raise SystemExit(f"unsupported scenario schemaVersion {doc.get('schemaVersion')!r}")
    s0 = FridgeState.from_json(doc["initialState"], catalog)
    return s0, list(doc["task"]), Preference.from_json(doc["preference"]), doc.get("script")


def cmd_plan(args) -> int:
    catalog = _catalog(args)
    s0, task, theta, script = _load_scenario(json.loads(Path(args.scenario).read_text()), catalog)
    cfg = _planner_cfg(args)
    if script:
        res = scenario_replan(script, s0, task, theta, cfg, catalog)
        for i, plan in enumerate(res.plans):
            print(f"plan {i + 1}:\n{format_plan(plan)}")
        print(f"executed reward {res.reward:.3f}")
        out = {"plans": [p.to_json() for p in res.plans], "reward": res.reward}
    else:
        plan, trace = plan_with_refinement(s0, task, theta, cfg, catalog)
        for att in trace.attempts:
            line = f"attempt {att['attempt']}: reward {att['reward']:.3f}"
            print(line + (f", {att['feedback']}" if att["feedback"] else ""))
        print(format_plan(plan))
        c, violators = constraint(s0, plan)
        print(f"reward {reward(plan, theta):.3f} constraint {c}")
        out = {"plan": plan.to_json(), "trace": trace.to_json(), "constraint": c}
    if args.out:
        Path(args.out).write_text(json.dumps({"schemaVersion": SCENARIO_SCHEMA_VERSION, **out}, indent=1))
    return 0


def cmd_ask(args) -> int:
    if not args.interactive:
        raise SystemExit("ask currently supports only --interactive")
    tc = TestCase.from_json(json.loads(Path(args.case).read_text()), _catalog(args))
    cfg = _run_cfg(args)
    try:
        res = interactive_session(tc, cfg, (args.seed or [0])[0])
        events, code = res.events, 0
    except InputAborted as exc:
        print("\ninput ended; partial transcript kept", file=sys.stderr)
        events, code = exc.events, 2
    if args.transcript:
        Path(args.transcript).write_text(transcript_lines(events))
    return code


def cmd_replay(args) -> int:
    rep = replay(load_transcript(args.transcript))
    for i, p in enumerate(rep.probs):
        print(f"step {i}: " + " ".join(f"{x:.4f}" for x in p))
    print(f"chosen plan {rep.chosen} (recorded {rep.recorded_chosen})")
    for msg in rep.mismatches:
        print("mismatch: " + msg)
    return 0 if rep.consistent else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fridgepref", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a benchmark dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--families", "--family", dest="family", action="append",
                   help="comma-separated families to generate (default: all)")
    p.add_argument("--per-family", type=int, default=20)
    p.add_argument("--shelf-width", type=float, default=60.0)
    p.add_argument("--clearance", type=float, default=1.0)
    p.add_argument("--allow-unambiguous", action="store_true",
                   help="keep cases whose demos admit only one preference")
    p.add_argument("--catalog")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="evaluate approaches on a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--approach", action="append", default=[],
                   help=f"one of {', '.join(APPROACHES)}; repeat or comma-separate")
    p.add_argument("--out", help="records JSONL (stdout when omitted)")
    p.add_argument("--transcripts", help="directory for per-run event transcripts")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--timing", action="store_true", help="include wall time in records")
    p.add_argument("--assert-bound", action="store_true",
                   help="exit nonzero if any run violates the regret bound")
    _add_learner_flags(p)
    _add_planner_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="summarize run records")
    p.add_argument("records", nargs="+")
    p.add_argument("--csv", help="also write the summary as CSV")
    p.add_argument("--no-reference", action="store_true", help="omit reference lines")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plan", help="plan a scenario or case file")
    p.add_argument("scenario")
    p.add_argument("--out")
    _add_planner_flags(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("ask", help="answer the robot's questions yourself")
    p.add_argument("--interactive", action="store_true")
    p.add_argument("case", help="case JSON file")
    p.add_argument("--transcript", help="write the event transcript here")
    _add_learner_flags(p)
    _add_planner_flags(p)
    p.set_defaults(func=cmd_ask)

    p = sub.add_parser("replay", help="recompute posteriors from a transcript")
    p.add_argument("transcript")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
