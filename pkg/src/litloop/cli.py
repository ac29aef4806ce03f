"""Command-line entry points.

``litloop run`` assesses an idea non-interactively: build the session,
select the top-ranked papers, assess every stated facet, and print the
report. ``litloop serve`` exposes the HTTP API for the interactive UI.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import AppConfig, ConfigError, build_backend, build_gateway
from .session import EmptySelectionError, SessionService


def _add_wiring_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument(
        "--mock-script",
        help="mock model script (JSON); overrides configured providers",
    )
    parser.add_argument(
        "--recorded-backend",
        help="recorded scholarly backend (JSON); overrides the configured backend",
    )
    parser.add_argument("--corpus-cap", type=int, help="max papers from seed retrieval")
    parser.add_argument("--cache-dir", help="paper fetch cache directory")
    parser.add_argument("--data-dir", help="session store directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="litloop",
        description="Develop a research idea against the literature.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="assess an idea end to end and print the report")
    run.add_argument("--idea-file", required=True, help="file holding the idea text")
    run.add_argument(
        "--select-top",
        type=int,
        default=5,
        help="how many top-ranked papers to select (default 5)",
    )
    run.add_argument("--out", help="write the report here instead of stdout")
    _add_wiring_flags(run)

    serve = sub.add_parser("serve", help="serve the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    _add_wiring_flags(serve)
    return parser


def _build_service(args) -> SessionService:
    config = AppConfig.from_file(args.config) if args.config else AppConfig()
    if args.corpus_cap is not None:
        config.corpus_cap = args.corpus_cap
    if args.cache_dir:
        config.cache_dir = args.cache_dir
    if args.data_dir:
        config.data_dir = args.data_dir
    gateway = build_gateway(config, mock_script_path=args.mock_script)
    backend = build_backend(config, recorded_path=args.recorded_backend)
    return SessionService(gateway, backend, config)


def _run(args) -> int:
    idea_text = Path(args.idea_file).read_text().strip()
    if not idea_text:
        print(f"idea file {args.idea_file} is empty", file=sys.stderr)
        return 1
    service = _build_service(args)
    session = service.create_session(idea_text)
    print(
        f"session {session.session_id}: {len(session.doc.segments)} segments, "
        f"{len(session.store)} papers",
        file=sys.stderr,
    )
    for error in session.errors:
        print(f"note: {error}", file=sys.stderr)
    top = session.ranking.ordered[: max(1, args.select_top)]
    if top:
        service.select_papers(session.session_id, top)
    try:
        result = service.assess_all(session.session_id)
    except EmptySelectionError:
        print(
            "no papers could be selected (empty corpus); cannot assess",
            file=sys.stderr,
        )
        return 1
    if result["missing"]:
        print(f"missing facets: {', '.join(result['missing'])}", file=sys.stderr)
    report = service.export_report(session.session_id)
    if args.out:
        Path(args.out).write_text(report)
        print(f"report written to {args.out}", file=sys.stderr)
    else:
        print(report)
    return 0


def _serve(args) -> int:
    import uvicorn

    from .api import create_app

    service = _build_service(args)
    uvicorn.run(create_app(service), host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _run(args)
        return _serve(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"file not found: {exc.filename}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
