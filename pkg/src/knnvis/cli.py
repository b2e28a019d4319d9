"""Command line entry point.

    knnvis run --input vectors.txt --output coords.txt [--labels labels.txt] ...
    knnvis gen --n 1000 --d 50 --clusters 2 --output vectors.txt --labels labels.txt

``run`` is implied when the first argument is an option.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .io import (
    ParseError,
    emit_svg,
    file_digest,
    ingest_labels,
    ingest_vectors,
    write_embedding,
    write_labels,
    write_vectors,
)
from .pipeline import StageError, config_record, configs_from_record, resolve_configs, run_pipeline
from .synth import gaussian_mixture

log = logging.getLogger("knnvis")


def _run_parser(sub):
    p = sub.add_parser("run", help="build the KNN graph and lay it out")
    p.add_argument("--input", required=True, help="vector file: 'N d' header then N rows")
    p.add_argument("--output", required=True, help="embedding output path")
    p.add_argument("--labels", help="one label per line, used for colors and accuracy")
    p.add_argument("--svg", help="write a 2-d scatter plot as SVG")
    p.add_argument("--trees", type=int, help="number of random projection trees (15)")
    p.add_argument("--k", type=int, help="neighbors per point (150; 15 below 10,000 points)")
    p.add_argument("--iters", type=int, help="neighbor exploring iterations (1)")
    p.add_argument("--perplexity", type=float, help="target perplexity (50; k/3 below 10,000 points)")
    p.add_argument("--leaf-capacity", type=int, help="tree leaf size (max(k, 32))")
    p.add_argument("--dim", type=int, help="output dimension (2)")
    p.add_argument("--negatives", type=int, help="negative samples per edge (5)")
    p.add_argument("--gamma", type=float, help="weight of negative edges (7)")
    p.add_argument("--samples-per-node", type=int,
                   help="edge samples per vertex (10,000; 20,000 below 10,000 points)")
    p.add_argument("--rate", type=float, help="initial learning rate (1.0)")
    p.add_argument("--link", choices=["invq", "sigmoid"], help="edge probability function (invq)")
    p.add_argument("--a", type=float, help="inverse-quadratic coefficient (1.0)")
    p.add_argument("--workers", type=int, help="worker threads (1)")
    p.add_argument("--seed", type=int, help="random seed (0)")
    p.add_argument("--exact-recall", action="store_true",
                   help="compare the graph against brute-force KNN")
    p.add_argument("--metrics-out", help="metrics JSON path (stdout if omitted)")
    p.add_argument("--manifest", help="manifest path (default: OUTPUT.manifest.json)")
    p.add_argument("--from-manifest", help="reuse the resolved config of an earlier run")
    p.add_argument("--figures", help="directory for PNG report figures")
    p.add_argument("--graph-out", help="dump the weighted edge list as 'i j w' lines")


def _gen_parser(sub):
    p = sub.add_parser("gen", help="write a synthetic Gaussian mixture")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--d", type=int, default=50)
    p.add_argument("--clusters", type=int, default=2)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument("--separation", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="vector file to write")
    p.add_argument("--labels", help="label file to write")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="knnvis", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _run_parser(sub)
    _gen_parser(sub)
    return parser


def cmd_gen(args) -> int:
    x, y = gaussian_mixture(args.n, args.d, args.clusters, args.spread, args.seed,
                            args.separation)
    write_vectors(args.output, x)
    if args.labels:
        write_labels(args.labels, [f"c{c}" for c in y.tolist()])
    return 0


def cmd_run(args) -> int:
    data = ingest_vectors(args.input)
    labels = ingest_labels(args.labels, data.n_points) if args.labels else None
    if args.from_manifest:
        with open(args.from_manifest, encoding="utf-8") as fh:
            gcfg, lcfg = configs_from_record(json.load(fh)["config"])
    else:
        gcfg, lcfg = resolve_configs(
            data.n_points, trees=args.trees, k=args.k, iters=args.iters,
            perplexity=args.perplexity, leaf_capacity=args.leaf_capacity, dim=args.dim,
            negatives=args.negatives, gamma=args.gamma,
            samples_per_node=args.samples_per_node, rate=args.rate, link=args.link,
            a=args.a, workers=args.workers, seed=args.seed)
    if lcfg.dim not in (2, 3):
        raise ValueError(f"--dim must be 2 or 3, got {lcfg.dim}")
    if args.svg and lcfg.dim != 2:
        raise ValueError(f"--svg needs --dim 2, got {lcfg.dim}")
    log.info("graph %s", gcfg)
    log.info("layout %s", lcfg)

    result = run_pipeline(data, gcfg, lcfg, labels, exact_recall=args.exact_recall)
    write_embedding(args.output, result.embedding.coords, labels)
    if args.svg:
        emit_svg(result.embedding, labels, args.svg)
    if args.graph_out:
        with open(args.graph_out, "w", encoding="utf-8") as fh:
            fh.write(result.graph.to_text())

    wants_metrics = args.exact_recall or labels is not None
    metrics = result.metrics()
    if wants_metrics:
        line = json.dumps(metrics)
        if args.metrics_out:
            with open(args.metrics_out, "w", encoding="utf-8") as fh:
                fh.write(line + "\n")
        else:
            print(line)

    if args.figures:
        from . import plots

        plots.scatter_figure(result.embedding.coords,
                             os.path.join(args.figures, "embedding.png"), labels)
        if result.embedding.trace is not None:
            plots.objective_figure(result.embedding.trace,
                                   os.path.join(args.figures, "objective.png"))
        if result.recall_by_iteration:
            plots.recall_figure(result.recall_by_iteration,
                                os.path.join(args.figures, "recall.png"))

    inputs = {"vectors": {"path": os.path.abspath(args.input), "sha256": file_digest(args.input)}}
    if args.labels:
        inputs["labels"] = {"path": os.path.abspath(args.labels),
                            "sha256": file_digest(args.labels)}
    manifest = {
        "config": config_record(gcfg, lcfg),
        "inputs": inputs,
        "timings": result.timings,
        "metrics": metrics if wants_metrics else None,
        "recall_by_iteration": result.recall_by_iteration,
        "outputs": {"embedding": os.path.abspath(args.output),
                    "svg": os.path.abspath(args.svg) if args.svg else None},
    }
    with open(args.manifest or f"{args.output}.manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0].startswith("-") and argv[0] not in ("-h", "--help", "-v", "--verbose"):
        argv.insert(0, "run")
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "gen":
            return cmd_gen(args)
        return cmd_run(args)
    except (ParseError, StageError, OSError, ValueError) as exc:
        print(f"knnvis: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
