"""Sidecar command line: encode-images, encode-texts, serve.

``encode-images`` and ``encode-texts`` turn a manifest (or plain text list)
into an embedding interchange file, row order following input order, with a
JSON-lines report of skipped and flagged entries next to the output.
``serve`` answers line-delimited JSON embedding requests on stdio, one
request at a time, for live use as an embedding provider.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .encoder import DEFAULT_CHECKPOINT, EncoderSession
from .errors import InputError, SidecarError
from .preprocess import load_image, pad_to_square, preprocess
from .store import read_manifest, write_embeddings, write_manifest, write_report

TARGET = 224


def _add_session_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--checkpoint", default=DEFAULT_CHECKPOINT,
                   help="builtin name or descriptor-file path")
    p.add_argument("--device", default="cpu", help="compute device selector")
    p.add_argument("--batch-size", type=int, default=32,
                   help="rows per internal inference batch")


def _report_path(args) -> str:
    return args.report or f"{args.out}.report.jsonl"


def cmd_encode_images(args) -> int:
    session = EncoderSession(args.checkpoint, args.device, args.batch_size)
    records = read_manifest(args.manifest)
    kept, images, report = [], [], []
    for rec in records:
        if not rec.image:
            entry = {"id": rec.id, "action": "skipped",
                     "reason": "record has no image path"}
        else:
            try:
                img = load_image(rec.image)
            except (InputError, OSError) as exc:
                entry = {"id": rec.id, "action": "skipped", "reason": str(exc)}
            else:
                kept.append(rec)
                images.append(img)
                if args.dump_dir:
                    os.makedirs(args.dump_dir, exist_ok=True)
                    padded = pad_to_square(img)
                    padded.save(os.path.join(args.dump_dir, f"{rec.id}.padded.png"))
                    pixels = preprocess(img)
                    from PIL import Image

                    Image.fromarray((pixels * 255).astype("uint8")).save(
                        os.path.join(args.dump_dir, f"{rec.id}.resized.png"))
                continue
        if args.strict:
            raise InputError(f"{entry['reason']} (record {rec.id!r})")
        report.append(entry)

    rows = session.encode_images(images)
    count = write_embeddings(rows, args.out)
    write_report(report, _report_path(args))
    if args.out_manifest:
        write_manifest(kept, args.out_manifest)
    print(f"wrote {count} rows (dim {session.dim}) -> {args.out}")
    print(f"skipped {len(report)} -> {_report_path(args)}")
    return 0


def _texts_from_args(args):
    """(id, text) pairs plus per-row flag entries, per the input mode."""
    if (args.manifest is None) == (args.texts is None):
        raise InputError("pass exactly one of --manifest / --texts")
    pairs, report = [], []
    if args.manifest:
        for rec in read_manifest(args.manifest):
            if rec.text is None:
                entry = {"id": rec.id, "action": "skipped",
                         "reason": "record has no text"}
                if args.strict:
                    raise InputError(f"{entry['reason']} (record {rec.id!r})")
                report.append(entry)
                continue
            pairs.append((rec.id, rec.text))
    else:
        with open(args.texts, "r", encoding="utf-8") as fh:
            for i, line in enumerate(fh.read().splitlines(), start=1):
                pairs.append((f"line-{i:06d}", line))
    for rid, text in pairs:
        if text == "":
            report.append({"id": rid, "action": "flagged",
                           "reason": "empty text encoded as-is"})
    return pairs, report


def cmd_encode_texts(args) -> int:
    session = EncoderSession(args.checkpoint, args.device, args.batch_size)
    pairs, report = _texts_from_args(args)
    rows = session.encode_texts([text for _, text in pairs])
    count = write_embeddings(rows, args.out)
    write_report(report, _report_path(args))
    print(f"wrote {count} rows (dim {session.dim}) -> {args.out}")
    print(f"flagged {len(report)} -> {_report_path(args)}")
    return 0


def cmd_serve(args) -> int:
    session = EncoderSession(args.checkpoint, args.device, args.batch_size)
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            texts = request["texts"]
            if not isinstance(texts, list) or any(
                not isinstance(t, str) for t in texts
            ):
                raise ValueError("texts must be a list of strings")
            rows = session.encode_texts(texts)
            response = {"dim": session.dim,
                        "rows": [[float(x) for x in row] for row in rows]}
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            response = {"error": f"bad request: {exc}"}
        sys.stdout.write(json.dumps(response) + "\n")
        sys.stdout.flush()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="a3r-sidecar", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("encode-images", help="manifest images -> embedding file")
    p.add_argument("--manifest", required=True, help="JSONL records with image paths")
    p.add_argument("--out", required=True, help="embedding output path")
    p.add_argument("--out-manifest", default=None,
                   help="write the surviving records here (aligned with --out)")
    p.add_argument("--report", default=None,
                   help="report path (default: OUT.report.jsonl)")
    p.add_argument("--dump-dir", default=None,
                   help="debug dump of padded and resized images")
    p.add_argument("--strict", action="store_true",
                   help="abort on the first unreadable image")
    _add_session_flags(p)
    p.set_defaults(func=cmd_encode_images)

    p = sub.add_parser("encode-texts", help="manifest or list texts -> embedding file")
    p.add_argument("--manifest", default=None, help="JSONL records with text fields")
    p.add_argument("--texts", default=None, help="plain file, one text per line")
    p.add_argument("--out", required=True, help="embedding output path")
    p.add_argument("--report", default=None,
                   help="report path (default: OUT.report.jsonl)")
    p.add_argument("--strict", action="store_true",
                   help="abort on records without text")
    _add_session_flags(p)
    p.set_defaults(func=cmd_encode_texts)

    p = sub.add_parser("serve", help="line-delimited JSON embedding service on stdio")
    _add_session_flags(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except SidecarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
