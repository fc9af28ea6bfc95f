"""Command-line driver: ``kgtool <subcommand> ...``.

Exit codes: 0 success, 1 usage error (bad flags, missing files), 2 data error.
Paths come from flags, then ``KGTOOL_GRAPH``/``KGTOOL_ALIASES``/``KGTOOL_GOLD``,
then the optional JSON config file given by ``--config``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import diagnostics
from .classify import Category, classify
from .graph import DEFAULT_CAP, GraphLoadError, KnowledgeGraph, load_graph_files, two_hop_solvable
from .metrics import RunReport, UnresolvedQid, aggregate, format_table, resolve, score_run
from .policies import POLICIES, ChainError, ScriptedPolicy, gen_gold_trajectory, self_distill_filter, simulate_run
from .records import (
    DataError,
    dumps_line,
    load_golds,
    load_trajectories,
    trajectory_row,
    write_golds,
    write_jsonl,
    write_trajectories,
)
from .rewards import RUNGS, get_rung
from .server import HttpToolServer, ToolServer, parse_addr, start_in_thread
from .synthetic import synthetic_world

logger = logging.getLogger("kgtool")

ENV = {"graph": "KGTOOL_GRAPH", "aliases": "KGTOOL_ALIASES", "gold": "KGTOOL_GOLD"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _config(args) -> dict:
    if not getattr(args, "config", None):
        return {}
    try:
        return json.loads(Path(args.config).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise UsageError(f"config file not found: {args.config}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"config is not valid JSON: {exc.msg}", path=args.config) from None


def _path(args, key: str, required: bool = True) -> str | None:
    value = getattr(args, key, None) or os.environ.get(ENV[key]) or _config(args).get(key)
    if value is None:
        if required:
            raise UsageError(f"--{key} is required (or set {ENV[key]})")
        return None
    if not Path(value).is_file():
        raise UsageError(f"{key} file not found: {value}")
    return value


def _cap(args) -> int | None:
    cap = args.cap if getattr(args, "cap", None) is not None else _config(args).get("cap", DEFAULT_CAP)
    return None if cap is None or cap <= 0 else int(cap)


def _graph(args) -> KnowledgeGraph:
    return load_graph_files(_path(args, "graph"), _path(args, "aliases", required=False))


def _golds(args):
    return load_golds(_path(args, "gold"))


def _trajs(path: str):
    if not Path(path).is_file():
        raise UsageError(f"trajectory file not found: {path}")
    return load_trajectories(path)


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n")


def _write_json(path: str, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


# -- subcommands -----------------------------------------------------------------


def cmd_load(args) -> int:
    g = _graph(args)
    out = {
        "triples": len(g),
        "entities": len(g.entities),
        "relations": len(g.relations),
        "aliases": len(g.aliases),
        "alias_overrides": g.alias_overrides,
    }
    gold_path = _path(args, "gold", required=False)
    if gold_path:
        golds = load_golds(gold_path)
        solvable = sum(
            two_hop_solvable(g, list(gold.seeds) or [gold.seed], list(gold.answers), args.max_hops)
            for gold in golds.values()
        )
        out["coverage"] = {"questions": len(golds), "solvable": solvable, "max_hops": args.max_hops}
    _emit(out)
    return 0


def cmd_serve(args) -> int:
    g = _graph(args)
    cap = _cap(args)
    servers = [ToolServer(parse_addr(args.addr), g, cap, args.render)]
    if args.http_addr:
        servers.append(HttpToolServer(parse_addr(args.http_addr), g, cap, args.render))
    for srv in servers[1:]:
        start_in_thread(srv)
    host, port = servers[0].address
    logger.info("serving %d triples on %s:%d", len(g), host, port)
    try:
        servers[0].serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        for srv in servers[1:]:
            srv.shutdown()
        for srv in servers:
            srv.server_close()
    return 0


def cmd_score(args) -> int:
    rung = get_rung(args.reward)
    g, golds, trajs = _graph(args), _golds(args), _trajs(args.traj)
    scored = score_run(trajs, golds, g, rung)
    hard = None
    if args.hard_qids:
        hard = [q.strip() for q in Path(args.hard_qids).read_text().splitlines() if q.strip()]
    report = aggregate(scored, hard, args.label)
    if args.out:
        write_jsonl(args.out, (s.to_json() for s in scored))
    else:
        sys.stdout.writelines(dumps_line(s.to_json()) for s in scored)
    if args.report:
        _write_json(args.report, report.to_json())
    return 0


def cmd_classify(args) -> int:
    g, golds, trajs = _graph(args), _golds(args), _trajs(args.traj)
    rows = [{"qid": t.question_id, "category": classify(t, resolve(t, golds), g).value} for t in trajs]
    if args.out:
        write_jsonl(args.out, rows)
    else:
        sys.stdout.writelines(dumps_line(r) for r in rows)
    return 0


def cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        if not Path(path).is_file():
            raise UsageError(f"report file not found: {path}")
        try:
            reports.append(RunReport.from_json(json.loads(Path(path).read_text(encoding="utf-8"))))
        except (ValueError, KeyError, TypeError) as exc:
            raise DataError(f"bad report: {exc}", path=path) from None
    if args.format == "json":
        _emit([r.to_json() for r in reports])
    else:
        sys.stdout.write(format_table(reports))
    return 0


def cmd_replay(args) -> int:
    g, golds, trajs = _graph(args), _golds(args), _trajs(args.traj)
    results = [
        diagnostics.oracle_relation_replay(t, resolve(t, golds), g, args.strategy, _cap(args)) for t in trajs
    ]
    if args.out:
        write_jsonl(args.out, (r.to_json() for r in results))
    n = len(results)
    _emit({
        "n": n,
        "strategy": args.strategy,
        "em_before": sum(r.em_before for r in results),
        "em_after": sum(r.em_after for r in results),
        "reachable_before": sum(r.reachable_before for r in results),
        "reachable_after": sum(r.reachable for r in results),
    })
    return 0


def cmd_buckets(args) -> int:
    g, golds, trajs = _graph(args), _golds(args), _trajs(args.traj)
    if not args.all:
        trajs = [t for t in trajs if classify(t, resolve(t, golds), g) is Category.KG_INCOMPLETE]
    table = diagnostics.bucket_table(trajs, golds)
    n = len(trajs)
    out = {"n": n, "buckets": table}
    if args.null_samples and n:
        rng = np.random.default_rng(args.seed)
        null = diagnostics.null_bucket_rate(trajs, golds, g, rng, args.null_samples, args.weighting)
        observed = table[diagnostics.Bucket.RELATION_TYPO.value] / n
        out["null"] = {
            "weighting": args.weighting,
            "relation_typo_rate": null,
            "enrichment": diagnostics.enrichment_ratio(observed, null),
        }
    if args.format == "json":
        _emit(out)
    else:
        width = max(len(k) for k in table)
        for k, v in table.items():
            pct = 100 * v / n if n else 0.0
            sys.stdout.write(f"{k.ljust(width)}  {v:6d}  {pct:5.1f}%\n")
    return 0


def cmd_diff(args) -> int:
    g, golds = _graph(args), _golds(args)

    def run(path):
        return {t.question_id: (t, classify(t, resolve(t, golds), g)) for t in _trajs(path)}

    _emit(diagnostics.behavioral_diff(run(args.traj_a), run(args.traj_b)))
    return 0


def cmd_gen_sft(args) -> int:
    g, golds = _graph(args), _golds(args)
    trajs = [gen_gold_trajectory(gold, g, args.seed + i) for i, gold in enumerate(golds.values())]
    if args.out:
        write_trajectories(args.out, trajs)
    else:
        sys.stdout.writelines(dumps_line(trajectory_row(t)) for t in trajs)
    return 0


def cmd_filter(args) -> int:
    golds, trajs = _golds(args), _trajs(args.traj)
    result = self_distill_filter(trajs, golds)
    if args.out:
        write_trajectories(args.out, result.kept)
    if args.rejected:
        write_jsonl(args.rejected, ({**trajectory_row(t), "reason": r} for t, r in result.rejected))
    _emit({
        "input": result.n_input,
        "kept": len(result.kept),
        "yield": result.yield_fraction,
        "rejected": result.reason_counts(),
    })
    return 0


def cmd_sim(args) -> int:
    g, golds = _graph(args), _golds(args)
    memory = {}
    if args.memory:
        memory = json.loads(Path(args.memory).read_text(encoding="utf-8"))
    policy = ScriptedPolicy(args.policy, severity=args.severity, memory=memory, template_seed=args.seed)
    trajs, report, _ = simulate_run(policy, list(golds.values()), g, args.reward)
    if args.out:
        write_trajectories(args.out, trajs)
    if args.report:
        _write_json(args.report, report.to_json())
    else:
        _emit(report.to_json())
    return 0


def cmd_synth(args) -> int:
    g, golds = synthetic_world(args.n, args.seed, args.max_hops, args.distractors, include_demo=args.include_demo)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "triples.tsv").write_text("".join(f"{t.head}\t{t.relation}\t{t.tail}\n" for t in g.triples()), encoding="utf-8")
    (out / "aliases.tsv").write_text("".join(f"{e}\t{lab}\n" for e, lab in sorted(g.aliases.items())), encoding="utf-8")
    write_golds(out / "gold.jsonl", golds)
    _emit({"triples": len(g), "questions": len(golds), "dir": str(out)})
    return 0


# -- parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kgtool", description="Four-verb KG tool environment and evaluation harness")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help, graph=True, gold=True, traj=False):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(fn=fn)
        sp.add_argument("--config", help="JSON config with default paths and cap")
        if graph:
            sp.add_argument("--graph", help="triple TSV (head, relation, tail)")
            sp.add_argument("--aliases", help="alias TSV (entity, label)")
        if gold:
            sp.add_argument("--gold", help="gold JSON-lines file")
        if traj:
            sp.add_argument("--traj", required=True, help="trajectory dump JSON-lines")
        return sp

    sp = add("load", cmd_load, "load a graph and print statistics", gold=True)
    sp.add_argument("--max-hops", type=int, default=2)

    sp = add("serve", cmd_serve, "serve the four verbs over the network", gold=False)
    sp.add_argument("--addr", default="127.0.0.1:7700", help="stream protocol host:port")
    sp.add_argument("--http-addr", help="optional HTTP host:port")
    sp.add_argument("--cap", type=int, help="max results per response (<=0 disables)")
    sp.add_argument("--render", choices=("label", "id", "both"), default="label")

    rungs = list(RUNGS) + ["R-toolverbs-KL"]
    sp = add("score", cmd_score, "score, classify and aggregate a trajectory dump", traj=True)
    sp.add_argument("--reward", default="R-selfV", choices=rungs)
    sp.add_argument("--out", help="scored JSON-lines output (default stdout)")
    sp.add_argument("--report", help="report JSON output")
    sp.add_argument("--hard-qids", help="file with one qid per line for hard-partition CvT")
    sp.add_argument("--label", default="")

    sp = add("classify", cmd_classify, "assign seven-way categories", traj=True)
    sp.add_argument("--out")

    sp = add("report", cmd_report, "render report JSON files as a table", graph=False, gold=False)
    sp.add_argument("reports", nargs="+")
    sp.add_argument("--format", choices=("table", "json"), default="table")

    sp = add("replay-oracle", cmd_replay, "re-run trajectories with gold relations injected", traj=True)
    sp.add_argument("--strategy", choices=diagnostics.EXTRACTION_STRATEGIES, default="quote-if-present")
    sp.add_argument("--cap", type=int)
    sp.add_argument("--out")

    sp = add("buckets", cmd_buckets, "edit-distance buckets of kg-incomplete trajectories", traj=True)
    sp.add_argument("--all", action="store_true", help="bucket every trajectory, not only kg-incomplete")
    sp.add_argument("--null-samples", type=int, default=0)
    sp.add_argument("--weighting", choices=("uniform", "frequency"), default="uniform")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--format", choices=("table", "json"), default="json")

    sp = add("diff", cmd_diff, "first-call diff of questions kg-incomplete in both runs")
    sp.add_argument("--traj-a", required=True)
    sp.add_argument("--traj-b", required=True)

    sp = add("gen-sft", cmd_gen_sft, "rule-based gold-path trajectories")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")

    sp = add("filter-distill", cmd_filter, "self-distillation filter", graph=False, traj=True)
    sp.add_argument("--out", help="kept trajectories")
    sp.add_argument("--rejected", help="rejected trajectories with reasons")

    sp = add("sim", cmd_sim, "run a scripted policy and score it")
    sp.add_argument("--policy", choices=POLICIES, required=True)
    sp.add_argument("--reward", default="R-selfV", choices=rungs)
    sp.add_argument("--severity", type=float, default=1.0)
    sp.add_argument("--memory", help="JSON object mapping qid to memorised answer")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.add_argument("--report")

    sp = add("synth", cmd_synth, "write a synthetic graph and gold set", graph=False, gold=False)
    sp.add_argument("--n", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-hops", type=int, default=2)
    sp.add_argument("--distractors", type=int, default=3)
    sp.add_argument("--include-demo", action="store_true")
    sp.add_argument("--out-dir", required=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"kgtool: {exc}", file=sys.stderr)
        return 1
    except (DataError, GraphLoadError, UnresolvedQid, ChainError, KeyError, ValueError) as exc:
        print(f"kgtool: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
