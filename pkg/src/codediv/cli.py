"""Command-line interface for reproducible batch runs.

Subcommands:

* ``tokens``      debug-print the structural token stream of one file
* ``similarity``  per-prompt pairwise similarity matrices for a corpus
* ``report``      pass@k + redundancy diagnostics, per prompt and dataset
* ``advantages``  per-prompt advantage vectors for one training objective
* ``compare``     paired change report + bootstrap p-values of two reports
* ``simulate``    synthetic policy-gradient training traces from a config

Every file-producing command writes ``manifest.json`` (command, parameter
set, tool version, content hashes of inputs) next to its outputs; outputs
are a pure function of the manifest, so reruns are byte-identical. Output
files are written atomically. Per-prompt work distributes over a bounded
thread pool sized by the ``CODEDIV_WORKERS`` environment variable
(default 1); results are committed in sorted prompt order regardless of
completion order.
"""

import argparse
import concurrent.futures
import dataclasses
import hashlib
import json
import os
import sys

import numpy as np

from . import __version__, metrics, rewards, simulator, stats
from .ingest import CorpusError, length_stats, load_corpus, strip_comments_docstrings
from .similarity import (
    DEFAULT_MIN_MATCH,
    DEFAULT_TAU,
    GST_BACKEND,
    clusters,
    effective_clusters,
    jdiv,
    one_gram_div,
    pairwise_matrix,
)
from .tokenizer import TokenStream, format_debug, tokenize


class CliError(Exception):
    """Operator-facing failure with a machine-parsable class."""

    def __init__(self, error_class, message):
        super().__init__(message)
        self.error_class = error_class


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclasses.dataclass
class RunManifest:
    command: str
    inputs: dict  # name -> {"path": ..., "sha256": ...}
    params: dict
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, indent=2) + "\n"


def _atomic_write(path, data):
    tmp = f"{path}.tmp"
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(tmp, mode) as fh:
        fh.write(data)
    os.replace(tmp, path)


def _write_manifest(out_dir, command, inputs, params):
    manifest = RunManifest(
        command=command,
        inputs={name: {"path": str(p), "sha256": _sha256(p)} for name, p in inputs.items()},
        params=params,
    )
    _atomic_write(os.path.join(out_dir, "manifest.json"), manifest.to_json())


def _worker_count():
    raw = os.environ.get("CODEDIV_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _map_ordered(fn, items):
    """Apply fn over items; parallel when configured, output order fixed."""
    workers = _worker_count()
    if workers == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _slug(prompt_id):
    safe = "".join(c if c.isalnum() or c in "._-" else "_" for c in prompt_id)
    if safe == prompt_id and safe:
        return safe
    digest = hashlib.sha1(prompt_id.encode("utf-8")).hexdigest()[:8]
    return f"{safe or 'prompt'}-{digest}"


def _load_corpus(path):
    if not os.path.exists(path):
        raise CliError("input", f"corpus file not found: {path}")
    try:
        return load_corpus(path)
    except CorpusError as err:
        raise CliError("parse", str(err)) from err


def _group_streams(group):
    """Token streams for a group; absent or empty extractions become empty
    streams, so two failed extractions compare as duplicates (score 1)."""
    streams = []
    for sample in group.samples:
        source = sample.source
        if source is None or not source.strip():
            streams.append(TokenStream([], fallback=False))
        else:
            streams.append(tokenize(source))
    return streams


# -- tokens ------------------------------------------------------------


def cmd_tokens(args):
    if not os.path.exists(args.file):
        raise CliError("input", f"file not found: {args.file}")
    with open(args.file, encoding="utf-8") as fh:
        source = fh.read()
    stream = tokenize(source)
    print(format_debug(stream))
    if stream.fallback:
        print("# fallback lexer used", file=sys.stderr)
    return 0


# -- similarity --------------------------------------------------------


def cmd_similarity(args):
    corpus = _load_corpus(args.corpus)
    os.makedirs(args.out, exist_ok=True)
    groups = list(corpus)

    def compute(group):
        matrix = pairwise_matrix(_group_streams(group), min_match=args.min_match)
        return group.prompt_id, matrix

    for prompt_id, matrix in _map_ordered(compute, groups):
        _atomic_write(
            os.path.join(args.out, f"{_slug(prompt_id)}.simmatrix.txt"), matrix.to_text()
        )
    _write_manifest(
        args.out,
        "similarity",
        {"corpus": args.corpus},
        {"min_match": args.min_match, "gst_backend": GST_BACKEND},
    )
    return 0


# -- report ------------------------------------------------------------


def _summary_dict(summary):
    return {
        "count": summary.count,
        "mean": summary.mean,
        "median": summary.median,
        "p90": summary.p90,
        "max": summary.max,
    }


def _prompt_report(group, k_list, tau, min_match, embedding_table):
    streams = _group_streams(group)
    matrix = pairwise_matrix(streams, min_match=min_match)
    outcome = {"n": group.n, "m": group.m}
    outcome["pass_at"] = {
        str(k): metrics.pass_at_k(group.n, group.m, k).value for k in k_list
    }
    outcome["jdiv"] = jdiv(matrix) if group.n >= 2 else None
    stripped = [strip_comments_docstrings(s) for s in group.sources()]
    outcome["one_gram_div"] = one_gram_div(stripped) if group.n >= 2 else None
    clustering = clusters(matrix, tau=tau)
    outcome["clusters"] = clustering.n_clusters
    outcome["eff"] = effective_clusters(clustering)
    sub_group, sub_matrix = metrics.correct_only_view(group, matrix)
    outcome["jdiv_correct"] = jdiv(sub_matrix) if sub_group.n >= 2 else None
    if sub_group.n >= 1:
        outcome["eff_correct"] = effective_clusters(clusters(sub_matrix, tau=tau))
    else:
        outcome["eff_correct"] = None
    if embedding_table is not None:
        try:
            emb = metrics.embeddings_for_group(embedding_table, group)
        except ValueError as err:
            raise CliError("input", str(err)) from err
        outcome["vendi"] = metrics.vendi_score(emb)
    outcome["fallback_streams"] = sum(1 for s in streams if s.fallback)
    outcome["empty_sources"] = sum(1 for s in streams if len(s) == 0)
    return group.prompt_id, outcome


_REPORT_METRICS = ("jdiv", "one_gram_div", "vendi", "eff", "jdiv_correct", "eff_correct")


def _dataset_rollup(prompt_reports, k_list):
    dataset = {"prompts": len(prompt_reports)}
    dataset["pass_at"] = {
        str(k): float(np.mean([r["pass_at"][str(k)] for r in prompt_reports.values()]))
        for k in k_list
    }
    for name in _REPORT_METRICS:
        values = [r[name] for r in prompt_reports.values() if r.get(name) is not None]
        dataset[name] = float(np.mean(values)) if values else None
        dataset[f"{name}_defined"] = len(values)
    return dataset


def _format_cell(value):
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def _report_text(report):
    k_list = report["params"]["k_list"]
    headers = ["prompt", "n", "m"] + [f"p@{k}" for k in k_list] + list(_REPORT_METRICS)
    rows = []
    for pid in sorted(report["prompts"]):
        r = report["prompts"][pid]
        row = [pid, r["n"], r["m"]]
        row += [r["pass_at"][str(k)] for k in k_list]
        row += [r.get(name) for name in _REPORT_METRICS]
        rows.append([_format_cell(v) for v in row])
    dataset = report["dataset"]
    total = ["dataset", dataset["prompts"], "-"]
    total += [dataset["pass_at"][str(k)] for k in k_list]
    total += [dataset.get(name) for name in _REPORT_METRICS]
    rows.append([_format_cell(v) for v in total])
    widths = [max(len(h), *(len(row[i]) for row in rows)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
    for row in rows:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(headers))))
    return "\n".join(lines) + "\n"


def cmd_report(args):
    corpus = _load_corpus(args.corpus)
    k_list = args.k
    if not k_list:
        raise CliError("param", "at least one k is required")
    max_k = max(k_list)
    for group in corpus:
        if group.n < max_k:
            raise CliError(
                "param",
                f"pass@{max_k} needs n >= {max_k}; prompt {group.prompt_id!r} has n={group.n}",
            )
    embedding_table = None
    inputs = {"corpus": args.corpus}
    if args.embeddings:
        if not os.path.exists(args.embeddings):
            raise CliError("input", f"embeddings file not found: {args.embeddings}")
        with open(args.embeddings, encoding="utf-8") as fh:
            try:
                embedding_table = metrics.load_embeddings(fh)
            except ValueError as err:
                raise CliError("parse", str(err)) from err
        inputs["embeddings"] = args.embeddings

    groups = list(corpus)
    results = _map_ordered(
        lambda g: _prompt_report(g, k_list, args.tau, args.min_match, embedding_table),
        groups,
    )
    prompt_reports = dict(results)
    lengths = length_stats(corpus)
    report = {
        "params": {
            "k_list": list(k_list),
            "tau": args.tau,
            "min_match": args.min_match,
            "gst_backend": GST_BACKEND,
        },
        "prompts": prompt_reports,
        "dataset": _dataset_rollup(prompt_reports, k_list),
        "lengths": {
            "raw_chars": _summary_dict(lengths.corpus.raw_chars),
            "code_chars": _summary_dict(lengths.corpus.code_chars),
            "raw_tokens": _summary_dict(lengths.corpus.raw_tokens),
            "code_tokens": _summary_dict(lengths.corpus.code_tokens),
        },
    }
    os.makedirs(args.out, exist_ok=True)
    _atomic_write(os.path.join(args.out, "report.json"), json.dumps(report, sort_keys=True, indent=2) + "\n")
    _atomic_write(os.path.join(args.out, "report.txt"), _report_text(report))
    _write_manifest(args.out, "report", inputs, report["params"])
    return 0


# -- advantages --------------------------------------------------------


def cmd_advantages(args):
    corpus = _load_corpus(args.corpus)
    objective = args.objective
    needs_matrix = objective in ("diversity", "diversity_only", "combined")
    groups = list(corpus)

    def compute(group):
        outcome = rewards.GroupOutcome.from_flags(group.correct_flags())
        matrix = None
        if needs_matrix:
            matrix = pairwise_matrix(_group_streams(group), min_match=args.min_match)
        try:
            vec = rewards.advantages(
                objective,
                outcome=outcome,
                matrix=matrix,
                k=args.k,
                lambda_div=args.lambda_div,
            )
        except ValueError as err:
            raise CliError("param", f"prompt {group.prompt_id!r}: {err}") from err
        params = dict(vec.params)
        return json.dumps(
            {
                "prompt_id": group.prompt_id,
                "objective": vec.objective,
                "params": params,
                "advantages": [float(a) for a in vec.a],
            },
            sort_keys=True,
        )

    lines = _map_ordered(compute, groups)
    os.makedirs(args.out, exist_ok=True)
    _atomic_write(os.path.join(args.out, "advantages.jsonl"), "".join(line + "\n" for line in lines))
    _write_manifest(
        args.out,
        "advantages",
        {"corpus": args.corpus},
        {
            "objective": objective,
            "k": args.k,
            "lambda_div": args.lambda_div,
            "min_match": args.min_match,
        },
    )
    return 0


# -- compare -----------------------------------------------------------


def _load_report(path):
    if not os.path.exists(path):
        raise CliError("input", f"report file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            report = json.load(fh)
        except json.JSONDecodeError as err:
            raise CliError("parse", f"{path}: {err}") from err
    if "prompts" not in report:
        raise CliError("parse", f"{path}: not a report file (missing 'prompts')")
    return report


def _metric_series(report_a, report_b, prompt_ids):
    """Paired per-prompt series for every metric defined in both reports."""
    names = []
    shared_k = [k for k in report_a["params"]["k_list"] if k in report_b["params"]["k_list"]]
    names += [("pass@%s" % k, ("pass_at", str(k))) for k in shared_k]
    names += [(name, (name,)) for name in _REPORT_METRICS]

    def lookup(report, pid, path):
        value = report["prompts"][pid]
        for key in path:
            value = value.get(key) if isinstance(value, dict) else None
            if value is None:
                return None
        return value

    series = {}
    for label, path in names:
        a_vals, b_vals = [], []
        for pid in prompt_ids:
            va = lookup(report_a, pid, path)
            vb = lookup(report_b, pid, path)
            if va is None or vb is None:
                continue
            a_vals.append(va)
            b_vals.append(vb)
        if len(a_vals) >= 2:
            series[label] = (np.array(a_vals), np.array(b_vals))
    return series


def cmd_compare(args):
    report_a = _load_report(args.report_a)
    report_b = _load_report(args.report_b)
    ids_a = set(report_a["prompts"])
    ids_b = set(report_b["prompts"])
    if ids_a != ids_b:
        missing_b = sorted(ids_a - ids_b)
        missing_a = sorted(ids_b - ids_a)
        raise CliError(
            "input",
            f"prompt sets differ; missing from B: {missing_b}; missing from A: {missing_a}",
        )
    prompt_ids = sorted(ids_a)
    comparison = {}
    for label, (a_vals, b_vals) in _metric_series(report_a, report_b, prompt_ids).items():
        change = stats.aggregate_changes(a_vals, b_vals)
        p_value = stats.paired_bootstrap(a_vals, b_vals, resamples=args.resamples, seed=args.seed)
        comparison[label] = {
            "up_pct": change.up_pct,
            "down_pct": change.down_pct,
            "mean_delta": change.mean_delta,
            "n": change.n,
            "p_value": p_value,
        }
    result = {
        "params": {"resamples": args.resamples, "seed": args.seed},
        "prompts": len(prompt_ids),
        "metrics": comparison,
    }
    headers = ["metric", "up%", "down%", "delta", "p"]
    rows = [
        [
            label,
            f"{c['up_pct']:.1f}",
            f"{c['down_pct']:.1f}",
            f"{c['mean_delta']:.4f}",
            f"{c['p_value']:.4f}",
        ]
        for label, c in sorted(comparison.items())
    ]
    widths = [max(len(headers[i]), *(len(r[i]) for r in rows)) if rows else len(headers[i]) for i in range(5)]
    lines = ["  ".join(headers[i].ljust(widths[i]) for i in range(5))]
    lines += ["  ".join(r[i].ljust(widths[i]) for i in range(5)) for r in rows]

    os.makedirs(args.out, exist_ok=True)
    _atomic_write(os.path.join(args.out, "comparison.json"), json.dumps(result, sort_keys=True, indent=2) + "\n")
    _atomic_write(os.path.join(args.out, "comparison.txt"), "\n".join(lines) + "\n")
    _write_manifest(
        args.out,
        "compare",
        {"report_a": args.report_a, "report_b": args.report_b},
        result["params"],
    )
    return 0


# -- simulate ----------------------------------------------------------


def cmd_simulate(args):
    if not os.path.exists(args.config):
        raise CliError("input", f"config file not found: {args.config}")
    with open(args.config, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as err:
            raise CliError("config", f"{args.config}: {err}") from err
    try:
        config = simulator.SimulationConfig.from_dict(raw)
    except ValueError as err:
        raise CliError("config", str(err)) from err

    os.makedirs(args.out, exist_ok=True)
    for index, (name, params) in enumerate(config.objectives):
        for seed in config.seeds:
            trace = simulator.run(
                config.world,
                name,
                steps=config.steps,
                seed=seed,
                params=params,
                init_correct_bonus=config.init_correct_bonus,
                temperature=config.temperature,
                eval_settings=config.eval_settings,
            )
            path = os.path.join(args.out, f"trace_{index:02d}_{name}_s{seed}.jsonl")
            _atomic_write(path, "".join(line + "\n" for line in trace.to_jsonl_lines()))
    _write_manifest(
        args.out,
        "simulate",
        {"config": args.config},
        {"objectives": [name for name, _ in config.objectives], "seeds": config.seeds, "steps": config.steps},
    )
    return 0


# -- parser ------------------------------------------------------------


def _k_list(text):
    try:
        values = [int(part) for part in text.split(",") if part]
    except ValueError as err:
        raise argparse.ArgumentTypeError(f"bad k list {text!r}") from err
    if not values or any(k < 1 for k in values):
        raise argparse.ArgumentTypeError("every k must be a positive integer")
    return values


def build_parser():
    parser = argparse.ArgumentParser(
        prog="codediv",
        description="Redundancy diagnostics and RL advantages for multi-sample code generation",
    )
    parser.add_argument("--version", action="version", version=f"codediv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_tokens = sub.add_parser("tokens", help="debug-print structural tokens of a Python file")
    p_tokens.add_argument("file")
    p_tokens.set_defaults(func=cmd_tokens)

    p_sim = sub.add_parser("similarity", help="write per-prompt similarity matrices")
    p_sim.add_argument("--corpus", required=True)
    p_sim.add_argument("--min-match", type=int, default=DEFAULT_MIN_MATCH, dest="min_match")
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=cmd_similarity)

    p_rep = sub.add_parser("report", help="pass@k and redundancy report")
    p_rep.add_argument("--corpus", required=True)
    p_rep.add_argument("--embeddings", default=None)
    p_rep.add_argument("--k", type=_k_list, default=[1, 10])
    p_rep.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p_rep.add_argument("--min-match", type=int, default=DEFAULT_MIN_MATCH, dest="min_match")
    p_rep.add_argument("--out", required=True)
    p_rep.set_defaults(func=cmd_report)

    p_adv = sub.add_parser("advantages", help="per-prompt advantage vectors")
    p_adv.add_argument("--corpus", required=True)
    p_adv.add_argument(
        "--objective",
        required=True,
        choices=sorted(set(rewards.OBJECTIVES) | {"diversity_only"}),
    )
    p_adv.add_argument("--k", type=int, default=None)
    p_adv.add_argument("--lambda-div", type=float, default=1.0, dest="lambda_div")
    p_adv.add_argument("--min-match", type=int, default=DEFAULT_MIN_MATCH, dest="min_match")
    p_adv.add_argument("--out", required=True)
    p_adv.set_defaults(func=cmd_advantages)

    p_cmp = sub.add_parser("compare", help="paired comparison of two reports")
    p_cmp.add_argument("--report-a", required=True, dest="report_a")
    p_cmp.add_argument("--report-b", required=True, dest="report_b")
    p_cmp.add_argument("--resamples", type=int, default=stats.DEFAULT_RESAMPLES)
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.add_argument("--out", required=True)
    p_cmp.set_defaults(func=cmd_compare)

    p_simulate = sub.add_parser("simulate", help="run the synthetic training simulator")
    p_simulate.add_argument("--config", required=True)
    p_simulate.add_argument("--out", required=True)
    p_simulate.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as err:
        message = " ".join(str(err).split())
        print(f"error: {err.error_class}: {message}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as err:
        message = " ".join(str(err).split())
        print(f"error: internal: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
