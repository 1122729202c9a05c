"""Command-line front end: ``tuqa <subcommand> ...``.

Exit codes: 0 success, 1 issues found (validate, overlaps), 2 usage, parse,
configuration or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from tuqa import __version__
from tuqa.align import AlignmentError
from tuqa.io import (
    ParseError,
    dumps_report,
    format_seconds,
    format_tsv,
    read_srt_set,
    read_transcript,
)
from tuqa.jefferson import MarkupError
from tuqa.metrics import MEASURES, Run, export_longform, per_minute_stats, write_longform_csv
from tuqa.mismatches import apply_review_csv, summarize, write_review_csv
from tuqa.model import TranscriptError, meta_from_mapping
from tuqa.normalize import ConfigError
from tuqa.pipeline import (
    ASYMMETRIC_NOTE,
    SPAN_NOTE,
    UNCERTAIN_NOTE,
    Prepared,
    RunConfig,
    align_section,
    base_report,
    classify_section,
    delta_origin,
    deltas_section,
    full_report,
    issues_list,
    overlaps_section,
    prepare,
    stats_section,
)

log = logging.getLogger("tuqa")

CONFIG_ENV = "TUQA_CONFIG"
EXIT_OK, EXIT_ISSUES, EXIT_ERROR = 0, 1, 2


class UsageError(Exception):
    pass


# -- argument parsing ---------------------------------------------------------

def _common(p: argparse.ArgumentParser, output_help: str = "write the result here instead of stdout") -> None:
    p.add_argument("-o", "--output", help=output_help)
    p.add_argument("--format", choices=("json", "csv", "text"), help="output format (default json)")
    p.add_argument("--config", help=f"JSON run configuration (default: ${CONFIG_ENV})")
    p.add_argument("--corrections", help="extra orthographic corrections, pattern<TAB>replacement")
    p.add_argument("--no-normalize", action="store_true", help="analyse the text exactly as written")
    p.add_argument("--stamp", action="store_true", help="add a generated_at timestamp to the report")
    p.add_argument("-v", "--verbose", action="count", default=0)


def _pair(p: argparse.ArgumentParser) -> None:
    p.add_argument("hyp", help="candidate transcript (TSV or SRT)")
    p.add_argument("ref", help="reference (gold) transcript (TSV or SRT)")


def _mode(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=("merged", "per-speaker"), help="alignment mode (default merged)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tuqa", description="Quality checks for Jefferson-annotated transcripts.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("normalize", help="clean and standardize a transcript, write TSV")
    p.add_argument("input")
    _common(p, "output TSV (default stdout)")

    p = sub.add_parser("validate", help="check Jefferson markup; exit 1 if issues are found")
    p.add_argument("input")
    _common(p)

    p = sub.add_parser("import-srt", help="merge per-speaker SRT files into one TSV")
    p.add_argument("sources", nargs="+", help="a directory of .srt files, or the files themselves")
    _common(p, "output TSV (default stdout)")

    p = sub.add_parser("align", help="word alignment between candidate and reference")
    _pair(p)
    _mode(p)
    _common(p)

    p = sub.add_parser("wer", help="word error rate of the candidate against the reference")
    _pair(p)
    _mode(p)
    _common(p)

    p = sub.add_parser("stats", help="per-minute and summary statistics")
    p.add_argument("input")
    p.add_argument("--minutes", type=int, help="number of minute bins to report")
    p.add_argument("--origin", default="0", help="bin origin in seconds, or 'auto' for the first TU start")
    _common(p)

    p = sub.add_parser("deltas", help="per-minute differences, candidate minus reference")
    _pair(p)
    p.add_argument("--minutes", type=int, help="last minute bin included (default 2)")
    _common(p)

    p = sub.add_parser("overlaps", help="overlap annotation check; exit 1 if issues are found")
    p.add_argument("input")
    p.add_argument("--threshold", type=float, help="overlaps above this many seconds are severe (default 0.1)")
    _common(p)

    p = sub.add_parser("classify", help="pre-tag mismatches between candidate and reference")
    _pair(p)
    _mode(p)
    p.add_argument("--lexicon", help="extra spelling-variant pairs, form<TAB>form")
    p.add_argument("--review-csv", help="also write a review CSV with an empty override column")
    p.add_argument("--apply-review", help="apply overrides from an edited review CSV")
    p.add_argument("--no-group", action="store_true", help="one record per op, no merging of adjacent ops")
    _common(p)

    p = sub.add_parser("export-longform", help="long-format CSV for mixed-model fitting")
    p.add_argument("manifest", help="TSV: path, transcriber, expertise, phase, data and optional gold")
    p.add_argument("--minutes", type=int, help="number of minute bins per transcript")
    p.add_argument("--measures", help="comma-separated subset of measures")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (output keeps manifest order)")
    _common(p, "output CSV (default stdout)")

    p = sub.add_parser("report", help="full report for one candidate/reference pair")
    _pair(p)
    _mode(p)
    p.add_argument("--threshold", type=float)
    p.add_argument("--minutes", type=int, help="last minute bin included in deltas (default 2)")
    p.add_argument("--lexicon")
    _common(p)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then command-line flags."""
    path = args.config or os.environ.get(CONFIG_ENV)
    cfg = RunConfig.from_file(path) if path else RunConfig()
    cfg = cfg.override(
        format=args.format,
        corrections=args.corrections,
        mode=getattr(args, "mode", None),
        lexicon=getattr(args, "lexicon", None),
        mild_threshold=getattr(args, "threshold", None),
    )
    if args.no_normalize:
        cfg = cfg.override(normalize=False)
    if args.command in ("deltas", "report") and args.minutes is not None:
        cfg = cfg.override(delta_minutes=args.minutes)
    if getattr(args, "no_group", False):
        cfg = cfg.override(group_mismatches=False)
    return cfg


# -- output ---------------------------------------------------------------------

def _emit(text: str, dest: str | None) -> None:
    if dest and dest != "-":
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerows(rows)
    return buf.getvalue()


def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.2f}"
    return str(v)


def _text_generic(report: dict) -> str:
    lines = []
    for k, v in json.loads(dumps_report(report)).items():
        if isinstance(v, (dict, list)):
            lines.append(f"{k}:")
            lines.extend("  " + ln for ln in json.dumps(v, ensure_ascii=False, indent=2).splitlines())
        else:
            lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def _finish(report: dict, cfg: RunConfig, args: argparse.Namespace, csv_rows=None, text: str | None = None) -> None:
    if args.stamp:
        report["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if cfg.format == "json":
        out = dumps_report(report)
    elif cfg.format == "csv":
        if csv_rows is None:
            raise UsageError(f"csv output is not available for {args.command}")
        out = _csv(csv_rows)
    else:
        out = text if text is not None else _text_generic(report)
    _emit(out, args.output)


def _load(path: str, cfg: RunConfig) -> Prepared:
    return prepare(read_transcript(path), cfg)


# -- subcommands ------------------------------------------------------------------

def cmd_normalize(args, cfg) -> int:
    doc = read_transcript(args.input)
    p = prepare(doc, cfg)
    _emit(format_tsv(p.transcript), args.output)
    return EXIT_OK


def cmd_validate(args, cfg) -> int:
    p = _load(args.input, cfg)
    r = base_report("validate", {"input": p})
    issues = issues_list(p)
    r["validation_issues"] = issues
    rows = [("tu_index", "speaker", "start", "end", "kind", "detail")]
    lines = []
    for i in issues:
        tu = p.transcript.units[i["tu_index"]]
        rows.append((i["tu_index"], tu.speaker, format_seconds(tu.start), format_seconds(tu.end), i["kind"], i["detail"]))
        lines.append(f"{tu.speaker} {format_seconds(tu.start)}-{format_seconds(tu.end)} {i['kind']}: {i['detail']}")
    lines.append(f"{len(issues)} issue(s)")
    _finish(r, cfg, args, rows, "\n".join(lines) + "\n")
    return EXIT_ISSUES if issues else EXIT_OK


def _srt_paths(sources: Sequence[str]) -> list[Path]:
    paths: list[Path] = []
    for s in sources:
        p = Path(s)
        if p.is_dir():
            found = sorted(p.glob("*.srt"))
            if not found:
                raise ParseError(f"{p}: no .srt files")
            paths.extend(found)
        elif p.exists():
            paths.append(p)
        else:
            raise ParseError(f"{p}: no such file or directory")
    return paths


def cmd_import_srt(args, cfg) -> int:
    doc = read_srt_set(_srt_paths(args.sources))
    _emit(format_tsv(doc.transcript), args.output)
    return EXIT_OK


def _align_text(sec: dict) -> str:
    def block(ops):
        w = max([len(o.get("ref_token", "—")) for o in ops] + [3])
        out = [f"{'REF':<{w}}  HYP"]
        for o in ops:
            mark = {"match": " ", "substitution": "S", "insertion": "I", "deletion": "D"}[o["kind"]]
            out.append(f"{o.get('ref_token', '—'):<{w}}  {o.get('hyp_token', '—'):<{w}}  {mark}".rstrip())
        return out

    a = sec["alignment"]
    if a["mode"] == "merged":
        lines = block(a["ops"])
    else:
        lines = []
        for sp, x in a["speakers"].items():
            lines += [f"== {sp}"] + block(x["ops"]) + [""]
    c = sec["counts"]
    wer = "n/a" if sec["wer"] is None else f"{sec['wer']:.2f}%"
    lines.append(f"WER {wer}  S={c['S']} D={c['D']} I={c['I']} C={c['C']} N={c['N']}")
    return "\n".join(lines) + "\n"


def cmd_align(args, cfg) -> int:
    hyp, ref = _load(args.hyp, cfg), _load(args.ref, cfg)
    r = base_report("align", {"hyp": hyp, "ref": ref})
    sec, _ = align_section(hyp, ref, cfg)
    r.update(sec)
    r["notes"].append(UNCERTAIN_NOTE)
    rows = [("op", "ref", "hyp")]
    ops = sec["alignment"]["ops"] if sec["alignment"]["mode"] == "merged" else [
        o for x in sec["alignment"]["speakers"].values() for o in x["ops"]
    ]
    rows += [(o["kind"], o.get("ref_token", ""), o.get("hyp_token", "")) for o in ops]
    _finish(r, cfg, args, rows, _align_text(sec))
    return EXIT_OK


def cmd_wer(args, cfg) -> int:
    hyp, ref = _load(args.hyp, cfg), _load(args.ref, cfg)
    r = base_report("wer", {"hyp": hyp, "ref": ref})
    sec, _ = align_section(hyp, ref, cfg)
    del sec["alignment"]
    r.update(sec)
    r["notes"].append(UNCERTAIN_NOTE)
    c = sec["counts"]
    rows = [("wer", "S", "D", "I", "C", "N"), (_num(sec["wer"]), c["S"], c["D"], c["I"], c["C"], c["N"])]
    wer = "n/a" if sec["wer"] is None else f"{sec['wer']:.2f}%"
    text = f"WER {wer}  S={c['S']} D={c['D']} I={c['I']} C={c['C']} N={c['N']}\n"
    _finish(r, cfg, args, rows, text)
    return EXIT_OK


def _origin(value: str, p: Prepared) -> float:
    if value == "auto":
        return p.transcript.units[0].start if p.transcript.units else 0.0
    try:
        return float(value)
    except ValueError:
        raise UsageError(f"--origin must be a number of seconds or 'auto', not {value!r}") from None


def cmd_stats(args, cfg) -> int:
    p = _load(args.input, cfg)
    r = base_report("stats", {"input": p})
    origin = _origin(args.origin, p)
    r.update(stats_section(p, args.minutes, origin))
    r["notes"].append(SPAN_NOTE)
    if origin:
        r["notes"].append(f"minute bins start at {format_seconds(origin)} s")
    rows = [("minute",) + MEASURES] + [tuple(_num(m[k]) for k in ("minute",) + MEASURES) for m in r["per_minute"]]
    _finish(r, cfg, args, rows)
    return EXIT_OK


def cmd_deltas(args, cfg) -> int:
    hyp, ref = _load(args.hyp, cfg), _load(args.ref, cfg)
    r = base_report("deltas", {"hyp": hyp, "ref": ref})
    r.update(deltas_section(hyp, ref, cfg.delta_minutes))
    rows = [("measure", "minute", "delta")] + [(d["measure"], d["minute"], _num(d["delta"])) for d in r["deltas"]]
    text = f"{r['delta_convention']}\n" + "".join(
        f"{d['measure']:<22} {d['minute']:>3} {_num(d['delta']):>10}\n" for d in r["deltas"]
    )
    _finish(r, cfg, args, rows, text)
    return EXIT_OK


def cmd_overlaps(args, cfg) -> int:
    p = _load(args.input, cfg)
    r = base_report("overlaps", {"input": p})
    r.update(overlaps_section(p, cfg.mild_threshold))
    r["notes"].append(ASYMMETRIC_NOTE)
    rows = [("kind", "severity", "tus", "temporal_overlap_s", "asymmetric")]
    lines = []
    for i in r["overlap_issues"]:
        refs = " ".join(f"{u['speaker']}@{format_seconds(u['start'])}" for u in i["units"])
        rows.append((i["kind"], i["severity"], " ".join(map(str, i["tus"])), _num(i["temporal_overlap_s"]), i.get("asymmetric", False)))
        lines.append(f"{i['severity']:<9} {i['kind']:<19} {refs} overlap={_num(i['temporal_overlap_s'])}s")
    lines.append(f"{len(r['overlap_issues'])} issue(s)")
    _finish(r, cfg, args, rows, "\n".join(lines) + "\n")
    return EXIT_ISSUES if r["overlap_issues"] else EXIT_OK


def cmd_classify(args, cfg) -> int:
    hyp, ref = _load(args.hyp, cfg), _load(args.ref, cfg)
    r = base_report("classify", {"hyp": hyp, "ref": ref})
    _, a = align_section(hyp, ref, cfg)
    sec, records = classify_section(a, cfg)
    if args.apply_review:
        records = apply_review_csv(records, Path(args.apply_review).read_text(encoding="utf-8"))
        sec = {"mismatches": [x.to_dict() for x in records], "mismatch_summary": summarize(records)}
    r.update(sec)
    review = write_review_csv(records)
    if args.review_csv:
        _emit(review, args.review_csv)
    rows = list(csv.reader(io.StringIO(review)))
    lines = [f"{m['category']:<24} {m['ref_token'] or '—'} / {m['hyp_token'] or '—'}" for m in r["mismatches"]]
    _finish(r, cfg, args, rows, "\n".join(lines) + "\n")
    return EXIT_OK


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    meta: dict
    gold: str | None = None


MANIFEST_COLUMNS = ("path", "transcriber", "expertise", "phase", "data")


def read_manifest(path: str) -> list[ManifestEntry]:
    base = Path(path).parent
    text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text), delimiter="\t")
    missing = set(MANIFEST_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ParseError(f"{path}: manifest lacks columns {sorted(missing)}")

    def resolve(p: str) -> str:
        return str(p if Path(p).is_absolute() else base / p)

    entries = []
    for lineno, row in enumerate(reader, 2):
        if not (row.get("path") or "").strip():
            raise ParseError(f"{path}:{lineno}: empty path")
        gold = (row.get("gold") or "").strip()
        meta = {k: (row.get(k) or "").strip() for k in MANIFEST_COLUMNS[1:]}
        entries.append(ManifestEntry(resolve(row["path"].strip()), meta, resolve(gold) if gold else None))
    return entries


def _longform_rows(entry: ManifestEntry, cfg: RunConfig, minutes: int | None, measures) -> list[dict]:
    p = _load(entry.path, cfg)
    t = p.transcript.with_meta(meta_from_mapping(entry.meta))
    g = _load(entry.gold, cfg).transcript if entry.gold else None
    origin = delta_origin(t, g) if g is not None else (t.units[0].start if t.units else 0.0)
    stats = per_minute_stats(t, minutes, origin)
    gold_stats = per_minute_stats(g, minutes, origin) if g is not None else None
    return export_longform([Run(t, stats, gold_stats)], measures)


def cmd_export_longform(args, cfg) -> int:
    entries = read_manifest(args.manifest)
    measures = [m.strip() for m in args.measures.split(",")] if args.measures else None
    if measures and set(measures) - set(MEASURES):
        raise UsageError(f"unknown measures: {sorted(set(measures) - set(MEASURES))}")
    if args.jobs < 1:
        raise UsageError("--jobs must be at least 1")
    work = [(e, cfg, args.minutes, measures) for e in entries]
    if args.jobs > 1 and len(entries) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            chunks = list(ex.map(_longform_rows, *zip(*work)))
    else:
        chunks = [_longform_rows(*w) for w in work]
    _emit(write_longform_csv([row for c in chunks for row in c]), args.output)
    return EXIT_OK


def cmd_report(args, cfg) -> int:
    hyp, ref = _load(args.hyp, cfg), _load(args.ref, cfg)
    _finish(full_report(hyp, ref, cfg), cfg, args)
    return EXIT_OK


COMMANDS = {
    "normalize": cmd_normalize,
    "validate": cmd_validate,
    "import-srt": cmd_import_srt,
    "align": cmd_align,
    "wer": cmd_wer,
    "stats": cmd_stats,
    "deltas": cmd_deltas,
    "overlaps": cmd_overlaps,
    "classify": cmd_classify,
    "export-longform": cmd_export_longform,
    "report": cmd_report,
}


def dispatch(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](args, cfg)
    except (ParseError, ConfigError, TranscriptError, AlignmentError, MarkupError, UsageError, ValueError) as exc:
        print(f"tuqa {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"tuqa {args.command}: error: {exc.strerror or exc}: {exc.filename or ''}".rstrip(": "), file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
