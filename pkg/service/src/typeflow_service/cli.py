"""Service command line."""

from __future__ import annotations

import click

from .app import serve
from .config import ServiceConfig


@click.group()
def main():
    """Remote type-inference backend."""


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8421, show_default=True)
@click.option("--model", default="lexicon", show_default=True,
              help="'lexicon' or 'external:<module>:<factory>'.")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None,
              help="Lexicon file; defaults to the client package's lexicon.")
@click.option("--batch-limit", type=int, default=16, show_default=True)
@click.option("--input-budget", type=int, default=512, show_default=True)
@click.option("--output-budget", type=int, default=128, show_default=True)
def serve_cmd(host, port, model, lexicon_path, batch_limit, input_budget, output_budget):
    """Serve POST /infer and GET /health."""
    config = ServiceConfig(
        host=host,
        port=port,
        model=model,
        lexicon_path=lexicon_path,
        max_batch_size=batch_limit,
        input_budget=input_budget,
        output_budget=output_budget,
    )
    serve(config)


def run():  # pragma: no cover
    main()


if __name__ == "__main__":  # pragma: no cover
    run()
