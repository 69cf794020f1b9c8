"""Command-line client for the audit service.

Subcommands marshal local files into service requests and write the
rendered responses back to disk. By default the service runs in-process
(no network, fully deterministic); set ``FAIRRANK_SERVER`` or pass
``--server`` to target a running instance instead.

Exit codes: 0 success, 1 internal error, 2 input/validation rejection.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click
import httpx

from . import __version__

SERVER_ENV_VAR = "FAIRRANK_SERVER"

EXIT_INTERNAL = 1
EXIT_REJECTED = 2


def _client(server: str | None) -> httpx.Client:
    target = server or os.environ.get(SERVER_ENV_VAR, "")
    if target:
        return httpx.Client(base_url=target, timeout=60.0)
    import warnings

    with warnings.catch_warnings():
        # the in-process ASGI client is starlette's test client; its
        # httpx-pin deprecation chatter (a UserWarning) is noise here
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())


def _post(server: str | None, path: str, payload: dict) -> dict:
    try:
        with _client(server) as client:
            response = client.post(path, json=payload)
    except httpx.HTTPError as exc:
        click.echo(f"error: cannot reach service: {exc}", err=True)
        sys.exit(EXIT_INTERNAL)
    if response.status_code >= 500:
        click.echo(f"error: {_detail(response)}", err=True)
        sys.exit(EXIT_INTERNAL)
    if response.status_code >= 400:
        click.echo(f"error: {_detail(response)}", err=True)
        sys.exit(EXIT_REJECTED)
    return response.json()


def _detail(response: httpx.Response) -> str:
    try:
        detail = response.json().get("detail")
    except ValueError:
        return response.text.strip() or f"HTTP {response.status_code}"
    if isinstance(detail, list):  # pydantic validation errors
        return "; ".join(
            f"{'.'.join(str(loc) for loc in item.get('loc', []))}: {item.get('msg', '')}"
            for item in detail
        )
    return str(detail)


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        click.echo(f"error: cannot read {path}: {exc}", err=True)
        sys.exit(EXIT_REJECTED)


def _read_json(path: str) -> dict:
    import json

    text = _read(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        click.echo(f"error: {path} is not valid JSON: {exc}", err=True)
        sys.exit(EXIT_REJECTED)


@click.group()
@click.version_option(version=__version__, prog_name="fairrank")
@click.option("--server", default=None, help="Base URL of a running service (default: in-process).")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Fairness auditing for top-K reviewer recommendation."""
    ctx.obj = server


@main.command()
@click.option("--reviews", "reviews_path", required=True, type=click.Path(), help="Reviews CSV.")
@click.option("--reviewers", "reviewers_path", required=True, type=click.Path(), help="Reviewers file.")
@click.option("--format", "reviewers_format", type=click.Choice(["csv", "json"]), default="csv",
              help="Reviewers file format.")
@click.option("--name", default=None, help="Project name (default: reviews file stem).")
@click.option("--max-unknown", default=0.10, show_default=True, help="Unknown-identity rate ceiling.")
@click.option("--min-protected", default=2, show_default=True, help="Minimum reviewers per gender group.")
@click.option("--infer-genders", is_flag=True, help="Resolve unknown genders via the configured API.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output dataset JSON.")
@click.pass_obj
def ingest(server, reviews_path, reviewers_path, reviewers_format, name,
           max_unknown, min_protected, infer_genders, out_path) -> None:
    """Parse, annotate, and filter one project into a dataset file."""
    payload = {
        "project_name": name or Path(reviews_path).stem,
        "reviewers": _read(reviewers_path),
        "reviewers_format": reviewers_format,
        "reviews": _read(reviews_path),
        "max_unknown": max_unknown,
        "min_protected": min_protected,
        "infer_genders": infer_genders,
    }
    result = _post(server, "/ingest", payload)
    Path(out_path).write_text(result["rendered"], encoding="utf-8")
    dropped = len(result["dataset"].get("filter_log", []))
    click.echo(f"wrote {out_path} ({dropped} filter events)")


def _load_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for line_no, raw in enumerate(_read(path).splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            click.echo(f"error: {path}:{line_no}: expected key = value", err=True)
            sys.exit(EXIT_REJECTED)
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip().strip("\"'")
    return values


_CONFIG_KEYS = {"k": "k", "protected": "protected", "mitigation": "mitigation",
                "recommender": "recommender", "train_fraction": "train_fraction",
                "format": "format", "ndkl_mode": "ndkl_mode"}


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(), help="Dataset JSON from ingest.")
@click.option("--scores", "scores_path", default=None, type=click.Path(),
              help="External score CSV (record_id,reviewer_id,score).")
@click.option("--recommender", type=click.Choice(["revfinder", "external"]), default="revfinder",
              show_default=True)
@click.option("--mitigation", default="none,detgreedy,detrelaxed,igrr", show_default=True,
              help="Comma-separated strategies.")
@click.option("--k", "k_values", default="4,6,10", show_default=True, help="Comma-separated K values.")
@click.option("--protected", type=click.Choice(["female", "male"]), default="female", show_default=True)
@click.option("--train-fraction", default=0.8, show_default=True)
@click.option("--ndkl-mode", type=click.Choice(["topk", "standard"]), default="topk", show_default=True)
@click.option("--format", "out_format", type=click.Choice(["json", "markdown"]), default="json",
              show_default=True)
@click.option("--config", "config_path", default=None, type=click.Path(),
              help="key = value config file; explicit flags win.")
@click.option("--out", "out_path", required=True, type=click.Path(), help="Output report path.")
@click.pass_context
def audit(ctx, dataset_path, scores_path, recommender, mitigation, k_values, protected,
          train_fraction, ndkl_mode, out_format, config_path, out_path) -> None:
    """Score, mitigate, and measure one dataset into a report file."""
    flags = {
        "k": k_values, "protected": protected, "mitigation": mitigation,
        "recommender": recommender, "train_fraction": str(train_fraction),
        "format": out_format, "ndkl_mode": ndkl_mode,
    }
    if config_path:
        from click.core import ParameterSource

        file_values = _load_config_file(config_path)
        unknown = set(file_values) - set(_CONFIG_KEYS)
        if unknown:
            click.echo(f"error: unknown config keys: {', '.join(sorted(unknown))}", err=True)
            sys.exit(EXIT_REJECTED)
        param_of = {"k": "k_values", "protected": "protected", "mitigation": "mitigation",
                    "recommender": "recommender", "train_fraction": "train_fraction",
                    "format": "out_format", "ndkl_mode": "ndkl_mode"}
        for key, value in file_values.items():
            if ctx.get_parameter_source(param_of[key]) != ParameterSource.COMMANDLINE:
                flags[key] = value

    try:
        k_set = [int(k.strip()) for k in flags["k"].split(",") if k.strip()]
        train = float(flags["train_fraction"])
    except ValueError as exc:
        click.echo(f"error: bad numeric option: {exc}", err=True)
        sys.exit(EXIT_REJECTED)

    payload = {
        "dataset": _read_json(dataset_path),
        "config": {
            "k_set": k_set,
            "protected_group": flags["protected"],
            "strategies": [s.strip() for s in flags["mitigation"].split(",") if s.strip()],
            "recommender": flags["recommender"],
            "train_fraction": train,
            "ndkl_mode": flags["ndkl_mode"],
        },
        "external_scores": _read(scores_path) if scores_path else None,
        "format": flags["format"],
    }
    result = _post(ctx.obj, "/audit", payload)
    Path(out_path).write_text(result["rendered"], encoding="utf-8")
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--baseline", required=True, type=click.Path(), help="Baseline report JSON.")
@click.option("--treatment", required=True, type=click.Path(), help="Treatment report JSON.")
@click.option("--alternative", type=click.Choice(["two_sided", "greater", "less"]),
              default="two_sided", show_default=True)
@click.option("--measures", default=None,
              help="Comma-separated measure filter (e.g. spd_at_k,skew_at_k).")
@click.pass_obj
def compare(server, baseline, treatment, alternative, measures) -> None:
    """Wilcoxon signed-rank comparison of two reports' measure cells."""
    payload = {
        "baseline": _read_json(baseline),
        "treatment": _read_json(treatment),
        "alternative": alternative,
        "measures": [m.strip() for m in measures.split(",")] if measures else None,
    }
    result = _post(server, "/compare", payload)
    mode = "exact" if result["exact"] else "normal approximation"
    click.echo(f"n = {result['n']} non-zero pairs of {result['pairs_total']} shared cells")
    click.echo(f"statistic = {result['statistic']:g}")
    click.echo(f"p_value = {result['p_value']:.6g} ({mode}, {alternative})")
    verdict = "significant" if result["significant"] else "not significant"
    click.echo(f"verdict: {verdict} at alpha={result['alpha']}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the audit service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
