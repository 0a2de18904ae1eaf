"""``lcslab`` command line.

    lcslab run <manifest> [--format json|text] [--out PATH] [--timing]
    lcslab fixtures

Exit codes: 0 every job passed, 1 some job failed or errored, 2 the manifest
is malformed, 3 a file could not be read or written.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .manifest import ManifestError, ManifestIOError, fixture_names, fixture_path, parse_manifest
from .runner import emit_report, execute, exit_code

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_IO = 0, 1, 2, 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lcslab", description="Exact and lattice computations for LCS structures.")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute the jobs of a manifest")
    run.add_argument("manifest", help="path to a manifest JSON file")
    run.add_argument("--format", choices=("json", "text"), default="json")
    run.add_argument("--out", help="write the report here instead of stdout")
    run.add_argument("--timing", action="store_true", help="add per-job wall times (makes output non-reproducible)")
    sub.add_parser("fixtures", help="list the bundled manifests")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="lcslab: %(message)s")
    if args.command == "fixtures":
        for name in fixture_names():
            print(f"{name}\t{fixture_path(name)}")
        return EXIT_OK
    try:
        manifest = parse_manifest(args.manifest)
    except ManifestIOError as exc:
        print(f"lcslab: {exc}", file=sys.stderr)
        return EXIT_IO
    except ManifestError as exc:
        print(f"lcslab: invalid manifest: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    report = execute(manifest, timing=args.timing)
    data = emit_report(report, args.format)
    if args.out:
        try:
            Path(args.out).write_bytes(data)
        except OSError as exc:
            print(f"lcslab: cannot write {args.out}: {exc}", file=sys.stderr)
            return EXIT_IO
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
