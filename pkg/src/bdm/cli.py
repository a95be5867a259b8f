"""Command-line client for the experiment service.

By default requests are served in-process; ``--server URL`` talks to a
running ``bdm serve`` instead.  Exit codes: 0 all checks passed, 1 some
checks failed, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .schemas import EXPERIMENTS, Report

EXIT_OK, EXIT_CHECKS, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _parse_value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def apply_override(cfg: dict, item: str) -> dict:
    """``a.b.c=value`` with ``value`` parsed as JSON when possible."""
    if "=" not in item:
        raise UsageError(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    parts = key.strip().split(".")
    if not all(parts):
        raise UsageError(f"bad override key {key!r}")
    node = cfg
    for p in parts[:-1]:
        nxt = node.setdefault(p, {})
        if not isinstance(nxt, dict):
            raise UsageError(f"override {key!r} descends into a non-object")
        node = nxt
    node[parts[-1]] = _parse_value(raw)
    return cfg


def build_config(experiment: str, config: str | None, overrides) -> dict:
    cfg = {}
    if config:
        try:
            cfg = json.loads(Path(config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
    cfg["experiment"] = experiment
    for item in overrides or ():
        apply_override(cfg, item)
    return cfg


def _post(cfg: dict, server: str | None):
    import httpx

    if server:
        return httpx.post(server.rstrip("/") + "/run", json=cfg, timeout=None)
    import asyncio

    from .service import app

    async def call():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport, base_url="http://bdm") as client:
            return await client.post("/run", json=cfg, timeout=None)

    return asyncio.run(call())


def _summary(report: Report) -> str:
    lines = [f"{report.experiment}: {report.status} ({report.wall_time:.1f} s)"]
    for c in report.checks:
        flag = "PASS" if c.passed else "FAIL"
        lines.append(f"  {flag} {c.name}: {c.value:.3e} (tol {c.tolerance:.1e})")
    if report.index is not None:
        lines.append("  index: " + json.dumps(report.index.model_dump(), sort_keys=False))
    return "\n".join(lines)


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bdm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON experiment config")
        p.add_argument("--out", help="report path (JSON); CSV tables are written alongside")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="set a config field, dotted keys, JSON values")
        p.add_argument("--server", help="base URL of a running service")
    s = sub.add_parser("serve", help="run the HTTP service")
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    return ap


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    if args.command == "serve":
        import uvicorn

        uvicorn.run("bdm.service:app", host=args.host, port=args.port)
        return EXIT_OK
    try:
        cfg = build_config(args.command, args.config, args.override)
    except UsageError as exc:
        print(f"ConfigError: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    resp = _post(cfg, args.server)
    body = resp.json()
    if resp.status_code != 200:
        print(f"{body.get('error', 'Error')}: {body.get('message', body)}", file=sys.stderr)
        if body.get("check"):
            print(f"  failing check: {body['check']}", file=sys.stderr)
        return EXIT_CONFIG if resp.status_code == 422 else EXIT_NUMERICAL
    report = Report.model_validate(body)
    if args.out:
        from .report import emit

        emit(report, args.out)
    print(_summary(report))
    return EXIT_OK if report.status == "ok" else EXIT_CHECKS


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
