#!/usr/bin/env python3
"""Recompute the sha256 of every output listed in a run manifest.

Usage: python -m tools.verify_manifest out.csv.manifest.json
Exit 0 when all checksums match, 1 on a mismatch or missing file.
"""
from __future__ import annotations
import json, os, sys

from core.logging_io import sha256_file


def verify(manifest_file: str) -> list[str]:
    """Problems found, empty when every output matches."""
    with open(manifest_file, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    if manifest.get("format") != "fractalbench/manifest":
        return [f"{manifest_file}: not a fractalbench manifest"]
    here = os.path.dirname(os.path.abspath(manifest_file))
    problems = []
    for path, digest in (manifest.get("outputs") or {}).items():
        target = path if os.path.isabs(path) or os.path.exists(path) else os.path.join(here, os.path.basename(path))
        if not os.path.exists(target):
            problems.append(f"{path}: missing")
        elif sha256_file(target) != digest:
            problems.append(f"{path}: checksum mismatch")
    return problems


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 1:
        print("Usage: python -m tools.verify_manifest path.manifest.json", file=sys.stderr)
        return 2
    problems = verify(argv[0])
    for p in problems:
        print(p, file=sys.stderr)
    if not problems:
        print("ok")
    return 1 if problems else 0


if __name__ == "__main__":
    sys.exit(main())
