"""Command-line entry points.

Every subcommand is a thin wrapper over the library; all randomness flows
from an explicit --seed, so identical invocations on identical inputs
produce byte-identical artifacts. Options may also come from a flat
key=value config file (--config); explicit flags win.

Exit codes: 0 ok, 2 usage error, 3 data/domain error, 1 internal error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import bundle as bundle_mod
from .armodel import SampleConfig, TrainConfig
from .caption import compile_report
from .dataset import generate_dataset, load_dataset, save_image_png
from .errors import ScenegenError
from .graph import apply_edits, edit_op_from_dict, parse_graph, serialize
from .synthdata import default_spec
from .textenc import TextEncoder
from .vq import fit_codebook, save_codebook


def read_config(path) -> dict[str, str]:
    """Flat key = value file; '#' starts a comment; keys use option names."""
    values: dict[str, str] = {}
    for raw_line in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenegenError(f"config line not key = value: {raw_line!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def resolve(config: dict[str, str], key: str, flag_value, default, cast=str):
    if flag_value is not None:
        return flag_value
    if key in config:
        return cast(config[key])
    return default


def run_guarded(fn):
    """Map domain errors to exit 3; let internals surface with exit 1."""
    try:
        fn()
    except ScenegenError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    except FileNotFoundError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)


@click.group()
def main():
    """Scene-graph-conditioned image generation toolkit."""


@main.command("gen-data")
@click.option("--n", type=int, default=None, help="number of pairs")
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
@click.option("--min-objects", type=int, default=None)
@click.option("--max-objects", type=int, default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def gen_data(n, seed, out, min_objects, max_objects, config_path):
    """Sample graph/image pairs into a dataset directory."""
    cfg = read_config(config_path) if config_path else {}

    def body():
        count = resolve(cfg, "n", n, 2000, int)
        base_seed = resolve(cfg, "seed", seed, 7, int)
        lo = resolve(cfg, "min_objects", min_objects, 2, int)
        hi = resolve(cfg, "max_objects", max_objects, 4, int)
        manifest = generate_dataset(out, count, base_seed, n_objects_range=(lo, hi))
        click.echo(f"wrote {manifest['count']} pairs to {out}")

    run_guarded(body)


@main.command("fit-vq")
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--k", type=int, default=None)
@click.option("--iters", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def fit_vq(data, k, iters, seed, out, config_path):
    """Fit the per-scale k-means codebooks over dataset image patches."""
    cfg = read_config(config_path) if config_path else {}

    def body():
        dataset = load_dataset(data)
        codebook = fit_codebook([img for _, img in dataset],
                                k=resolve(cfg, "k", k, 64, int),
                                iters=resolve(cfg, "iters", iters, 25, int),
                                seed=resolve(cfg, "seed", seed, 0, int))
        save_codebook(codebook, out)
        click.echo(f"codebook ({codebook.k} codes x {len(codebook.scales)} scales) -> {out}")

    run_guarded(body)


@main.command("train")
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--codebook", "codebook_path", type=click.Path(exists=True), required=True)
@click.option("--out", "ckpt_path", type=click.Path(), required=True)
@click.option("--steps", type=int, default=None)
@click.option("--batch", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--lr", type=float, default=None)
@click.option("--budget", type=int, default=None)
@click.option("--unconditional", is_flag=True, default=False,
              help="train the empty-caption baseline")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def train(data, codebook_path, ckpt_path, steps, batch, seed, lr, budget,
          unconditional, config_path):
    """Train the autoregressive model; writes checkpoint plus vocab.txt."""
    cfg = read_config(config_path) if config_path else {}

    def body():
        from .vq import load_codebook

        dataset = load_dataset(data)
        codebook = load_codebook(codebook_path)
        vocab = bundle_mod.default_vocabulary()
        encoder = TextEncoder(vocab)
        train_cfg = TrainConfig(
            lr=resolve(cfg, "lr", lr, 2e-3, float),
            steps=resolve(cfg, "steps", steps, 8000, int),
            batch=resolve(cfg, "batch", batch, 16, int),
            seed=resolve(cfg, "seed", seed, 0, int),
        )
        budget_v = resolve(cfg, "budget", budget, bundle_mod.DEFAULT_BUDGET, int)
        params, losses = bundle_mod.train(dataset, train_cfg, codebook, encoder,
                                          budget=budget_v, unconditional=unconditional)
        vocab_path = Path(ckpt_path).with_name("vocab.txt")
        vocab.save(vocab_path)
        bundle_mod.save_bundle(ckpt_path, params, budget_v, encoder,
                               vocab_path, codebook_path)
        click.echo(f"loss {losses[0]:.4f} -> {np.mean(losses[-100:]):.4f} "
                   f"over {train_cfg.steps} steps; checkpoint -> {ckpt_path}")

    run_guarded(body)


@main.command("compile")
@click.option("--graph", "graph_path", type=click.Path(exists=True), required=True)
@click.option("--budget", type=int, default=77)
def compile_cmd(graph_path, budget):
    """Print the compiled caption and the per-phrase salience table."""

    def body():
        graph = parse_graph(Path(graph_path).read_text(encoding="utf-8"))
        caption, table = compile_report(graph, budget)
        click.echo(f"caption: {caption.rendered!r}")
        click.echo(f"tokens:  {caption.token_count} / budget {budget}")
        click.echo(f"{'phrase':40s} {'salience':>8s}  kept")
        for phrase, kept in table:
            click.echo(f"{phrase.text:40s} {phrase.salience:8d}  {'kept' if kept else 'dropped'}")

    run_guarded(body)


@main.command("generate")
@click.option("--ckpt", type=click.Path(exists=True), required=True)
@click.option("--codebook", "codebook_path", type=click.Path(exists=True), required=True)
@click.option("--vocab", "vocab_path", type=click.Path(exists=True), default=None)
@click.option("--graph", "graph_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=0)
@click.option("--temperature", type=float, default=None)
@click.option("--top-k", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
def generate_cmd(ckpt, codebook_path, vocab_path, graph_path, seed, temperature,
                 top_k, out):
    """Generate an image for a scene graph and write it as PNG."""

    def body():
        vocab_file = vocab_path or str(Path(ckpt).with_name("vocab.txt"))
        bun = bundle_mod.load_bundle(ckpt, codebook_path, vocab_file)
        graph = parse_graph(Path(graph_path).read_text(encoding="utf-8"))
        result = bundle_mod.generate(graph, bun, seed=seed,
                                     temperature=temperature, top_k=top_k)
        save_image_png(result.image, out)
        click.echo(f"caption: {result.caption.rendered!r}")
        click.echo(f"image -> {out}")

    run_guarded(body)


@main.command("evaluate")
@click.option("--ckpt", type=click.Path(exists=True), required=True)
@click.option("--codebook", "codebook_path", type=click.Path(exists=True), required=True)
@click.option("--vocab", "vocab_path", type=click.Path(exists=True), default=None)
@click.option("--data", type=click.Path(exists=True), required=True)
@click.option("--n", type=int, default=200)
@click.option("--seed", type=int, default=0)
@click.option("--temperature", type=float, default=None)
@click.option("--top-k", type=int, default=None)
@click.option("--out", type=click.Path(), required=True)
def evaluate_cmd(ckpt, codebook_path, vocab_path, data, n, seed, temperature,
                 top_k, out):
    """Evaluate a bundle on held-out graphs; writes report.json + scorer."""

    def body():
        vocab_file = vocab_path or str(Path(ckpt).with_name("vocab.txt"))
        bun = bundle_mod.load_bundle(ckpt, codebook_path, vocab_file)
        report, rows, scorer = bundle_mod.evaluate(bun, data, n, seed,
                                                   temperature=temperature,
                                                   top_k=top_k)
        scorer.save(Path(out).with_suffix(".scorer.bin"))
        doc = {"report": report.to_dict(), "samples": rows}
        Path(out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
        click.echo(json.dumps(report.to_dict(), indent=2, sort_keys=True))

    run_guarded(body)


@main.command("edit")
@click.option("--graph", "graph_path", type=click.Path(exists=True), required=True)
@click.option("--ops", "ops_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None, help="default: stdout")
def edit_cmd(graph_path, ops_path, out):
    """Apply a JSON list of edit operations to a graph file."""

    def body():
        graph = parse_graph(Path(graph_path).read_text(encoding="utf-8"))
        raw_ops = json.loads(Path(ops_path).read_text(encoding="utf-8"))
        if not isinstance(raw_ops, list):
            raise ScenegenError("ops file must contain a JSON list")
        edited = apply_edits(graph, [edit_op_from_dict(op) for op in raw_ops])
        text = serialize(edited)
        if out:
            Path(out).write_text(text, encoding="utf-8")
            click.echo(f"graph -> {out}")
        else:
            click.echo(text, nl=False)

    run_guarded(body)


@main.command("serve")
@click.option("--ckpt", type=click.Path(exists=True), required=True)
@click.option("--codebook", "codebook_path", type=click.Path(exists=True), required=True)
@click.option("--vocab", "vocab_path", type=click.Path(exists=True), default=None)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve_cmd(ckpt, codebook_path, vocab_path, host, port):
    """Serve the editing/generation HTTP API around one loaded bundle."""

    def body():
        import uvicorn

        from .service import create_app

        vocab_file = vocab_path or str(Path(ckpt).with_name("vocab.txt"))
        bun = bundle_mod.load_bundle(ckpt, codebook_path, vocab_file)
        uvicorn.run(create_app(bun), host=host, port=port, log_level="info")

    run_guarded(body)


if __name__ == "__main__":
    main()
