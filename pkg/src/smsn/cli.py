"""Command-line client for the SMSN service.

The CLI is a thin client: every subcommand builds a request, sends it to the
service and renders the response.  By default the service runs in-process over
an ASGI transport, so no server needs to be up; point ``--server`` at a
running instance to use a remote one.

Exit codes: 0 success, 2 invalid arguments or malformed inputs, 1 runtime
errors.  Diagnostics go to stderr; data goes to stdout or the ``--out`` file,
which is written atomically (temp file + rename).
"""

from __future__ import annotations

import json
import os
import sys
import tempfile

import click
import httpx


def _post_in_process(path: str, payload: dict) -> httpx.Response:
    # the ASGI transport is async-only; drive one request to completion
    import asyncio

    from .service.app import app

    async def go():
        async with httpx.AsyncClient(
            transport=httpx.ASGITransport(app=app),
            base_url="http://smsn.internal",
            timeout=None,
        ) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _post(ctx, path: str, payload: dict) -> dict:
    server = ctx.obj.get("server")
    try:
        if server:
            with httpx.Client(base_url=server, timeout=None) as client:
                resp = client.post(path, json=payload)
        else:
            resp = _post_in_process(path, payload)
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach service: {exc}", err=True)
        sys.exit(1)
    if resp.status_code == 422:
        click.echo(f"error: invalid arguments: {_detail(resp)}", err=True)
        sys.exit(2)
    if resp.status_code != 200:
        click.echo(f"error: {_detail(resp)}", err=True)
        sys.exit(1)
    return resp.json()


def _detail(resp: httpx.Response) -> str:
    try:
        return json.dumps(resp.json().get("detail"))
    except Exception:
        return resp.text


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"error: cannot read {path}: {exc}", err=True)
        sys.exit(2)


def _write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".smsn-tmp-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _progress(ctx, message: str) -> None:
    if not ctx.obj.get("quiet"):
        click.echo(message, err=True)


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Base URL of a running service (default: run in-process).")
@click.option("--quiet", is_flag=True, help="Suppress progress output on stderr.")
@click.pass_context
def main(ctx, server, quiet):
    """Scale mixtures of skew-normal vectors: sampling, densities and maximal skewness."""
    ctx.obj = {"server": server, "quiet": quiet}


@main.command()
@click.option("--params", "params_file", required=True, type=click.Path(), help="Parameter JSON file.")
@click.option("--n", required=True, type=int, help="Number of draws.")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--out", "out_file", required=True, type=click.Path(), help="Output CSV path.")
@click.pass_context
def sample(ctx, params_file, n, seed, out_file):
    """Draw samples and write them as CSV."""
    doc = _load_json(params_file)
    _progress(ctx, f"sampling n={n} with seed={seed}")
    body = _post(ctx, "/api/sample", {"params": doc, "n": n, "seed": seed})
    lines = [",".join(body["columns"])]
    for row in body["data"]:
        lines.append(",".join(repr(v) for v in row))
    _write_atomic(out_file, "\n".join(lines) + "\n")
    _progress(ctx, f"wrote {out_file}")


@main.command()
@click.option("--params", "params_file", required=True, type=click.Path())
@click.option("--at", "at_str", required=True, metavar="X1,...,XP",
              help="Comma-separated evaluation point.")
@click.option("--tol", default=1e-8, type=float, show_default=True)
@click.pass_context
def density(ctx, params_file, at_str, tol):
    """Evaluate the density at a point; prints a single real."""
    doc = _load_json(params_file)
    try:
        at = [float(v) for v in at_str.split(",")]
    except ValueError:
        click.echo(f"error: cannot parse --at value {at_str!r}", err=True)
        sys.exit(2)
    body = _post(ctx, "/api/density", {"params": doc, "at": at, "tol": tol})
    click.echo(repr(body["value"]))


@main.command("check-moments")
@click.option("--params", "params_file", required=True, type=click.Path())
@click.pass_context
def check_moments(ctx, params_file):
    """Report the mixing-moment inequality and the skewness coefficients."""
    doc = _load_json(params_file)
    body = _post(ctx, "/api/check-moments", doc)
    click.echo(json.dumps(body))


@main.command()
@click.option("--params", "params_file", required=True, type=click.Path())
@click.pass_context
def maxskew(ctx, params_file):
    """Analytic maximal-skewness direction and value."""
    doc = _load_json(params_file)
    body = _post(ctx, "/api/maxskew", doc)
    click.echo(json.dumps(body))


@main.command()
@click.option("--in", "in_file", required=True, type=click.Path(), help="Input data CSV.")
@click.option("--restarts", default=8, type=int, show_default=True)
@click.option("--max-iter", default=500, type=int, show_default=True)
@click.option("--tol", default=1e-10, type=float, show_default=True)
@click.option("--seed", default=0, type=int, show_default=True)
@click.pass_context
def estimate(ctx, in_file, restarts, max_iter, tol, seed):
    """Estimate the maximal-skewness direction from data."""
    try:
        import numpy as np

        data = np.genfromtxt(in_file, delimiter=",", skip_header=1, ndmin=2)
        if data.size == 0 or not np.all(np.isfinite(data)):
            raise ValueError("empty or non-numeric data")
    except (OSError, ValueError) as exc:
        click.echo(f"error: cannot read {in_file}: {exc}", err=True)
        sys.exit(2)
    body = _post(
        ctx,
        "/api/estimate",
        {
            "data": data.tolist(),
            "restarts": restarts,
            "max_iter": max_iter,
            "tol": tol,
            "seed": seed,
        },
    )
    click.echo(json.dumps(body))


@main.command()
@click.option("--config", "config_file", required=True, type=click.Path(), help="Simulation config JSON.")
@click.option("--out", "out_file", required=True, type=click.Path(), help="Output CSV path.")
@click.option("--full", is_flag=True,
              help="Restore the full replication count (5000) regardless of the config.")
@click.option("--dump", "dump_file", default=None, type=click.Path(),
              help="Also write a per-replication CSV to this path.")
@click.pass_context
def simulate(ctx, config_file, out_file, full, dump_file):
    """Run the simulation grid and write the MSE table as CSV."""
    doc = _load_json(config_file)
    if full:
        doc["replications"] = 5000
    doc["dump_replications"] = dump_file is not None
    _progress(ctx, "running simulation grid")
    body = _post(ctx, "/api/simulate", doc)
    _write_atomic(out_file, body["csv"])
    _progress(ctx, f"wrote {out_file}")
    if dump_file is not None:
        _write_atomic(dump_file, body["replications_csv"])
        _progress(ctx, f"wrote {dump_file}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, type=int, show_default=True)
def serve(host, port):
    """Run the service with uvicorn."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
