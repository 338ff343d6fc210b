"""Command line for the logit exporter.

    lga-export --models m1.pt,m2.pt --data data.csv --out a.lga.csv

Writes only the archive.  Exit codes: 0 success, 1 runtime failure,
2 usage errors.
"""

from __future__ import annotations

import argparse
import sys

from .export import ExportError, ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lga-export",
        description="Dump ensemble member logits into a .lga archive",
    )
    parser.add_argument("--models", required=True,
                        help="comma-separated TorchScript model files")
    parser.add_argument("--data", required=True, help="dataset CSV (x0..,label)")
    parser.add_argument("--out", required=True, help="archive path (.csv suffix = text form)")
    parser.add_argument("--batch-size", type=int, default=256)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--split", default="export", help="split tag recorded in the manifest")
    parser.add_argument("--binary", action="store_true",
                        help="write the binary encoding regardless of suffix")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = None
    try:
        job = ExportJob(
            model_paths=tuple(p for p in args.models.split(",") if p),
            data_path=args.data,
            out_path=args.out,
            batch_size=args.batch_size,
            device=args.device,
            split=args.split,
            binary=args.binary,
        )
        path = export(job)
    except ExportError as exc:
        print(f"error: export: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
