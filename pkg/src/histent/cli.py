"""histent command line: convert, evaluate, analyze, train.

Every command writes its reports plus a manifest.json (input digests, seed,
version) into --out. Failures print one JSON object on stderr and exit 1.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path

from . import __version__, analysis
from .corpus import (
    Document,
    default_label_map,
    parse_brat,
    parse_gpt_html,
    parse_standoff_json,
    read_corpus,
    write_corpus,
)
from .errors import DocIdMismatch, HistentError, MalformedInput, SurfaceMismatch
from .matcher import CATEGORIES, aggregate, classify_documents, gold_totals
from .stats import ContingencyTable, SummarySample

IN_FORMATS = ("standoff-json", "brat", "gpt-html")
REPORT_FORMATS = ("csv", "md", "svg")
LEXICON_ENV = "HISTENT_LEXICON"

_CATEGORY_NAMES = {}
for _c in CATEGORIES:
    _CATEGORY_NAMES[_c.value] = _CATEGORY_NAMES[_c.value.upper()] = _CATEGORY_NAMES[_c.name] = _c


# ---------------------------------------------------------------- output plumbing


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


class Outputs:
    def __init__(self, outdir):
        self.dir = Path(outdir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[str] = []

    def path(self, name) -> Path:
        p = self.dir / name
        p.parent.mkdir(parents=True, exist_ok=True)
        if name not in self.written:
            self.written.append(name)
        return p

    def text(self, name, content: str):
        with open(self.path(name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)

    def manifest(self, command, inputs, seed=None, extra=None):
        data = {
            "tool": "histent",
            "version": __version__,
            "command": command,
            "seed": seed,
            "inputs": {str(p): _sha256(p) for p in sorted(inputs, key=str)},
            "outputs": {n: _sha256(self.dir / n) for n in sorted(self.written)},
        }
        if extra:
            data.update(extra)
        with open(self.dir / "manifest.json", "w", encoding="utf-8", newline="\n") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _formats(spec: str) -> set[str]:
    chosen = {f.strip() for f in spec.split(",") if f.strip()}
    bad = chosen - set(REPORT_FORMATS)
    if bad:
        raise MalformedInput(f"unknown report format(s) {sorted(bad)}; choose from {REPORT_FORMATS}")
    return chosen


# ---------------------------------------------------------------- convert


def _expand(paths, suffixes):
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(q for q in p.iterdir() if q.suffix in suffixes))
        elif not p.exists():
            raise FileNotFoundError(str(p))
        else:
            out.append(p)
    return out


def _read_standoff(path: Path) -> list[Document]:
    if path.suffix == ".json":
        return [parse_standoff_json(path.read_bytes())]
    return read_corpus(path)


def load_documents(fmt: str, paths, source="gold") -> list[Document]:
    docs = []
    if fmt == "standoff-json":
        for p in _expand(paths, {".json", ".jsonl"}):
            docs.extend(_read_standoff(p))
    elif fmt == "brat":
        labels = default_label_map()
        for p in _expand(paths, {".txt"}):
            text = p.read_text(encoding="utf-8")
            ann_path = p.with_suffix(".ann")
            ann = ann_path.read_text(encoding="utf-8") if ann_path.exists() else ""
            try:
                ents = parse_brat(text, ann, labels, doc_id=p.stem, source=source)
            except HistentError as exc:
                exc.source = str(ann_path)
                raise
            docs.append(_with_entities(p.stem, text, ents, source))
    elif fmt == "gpt-html":
        for p in _expand(paths, {".html", ".htm"}):
            try:
                text, ents = parse_gpt_html(p.read_text(encoding="utf-8"), doc_id=p.stem, source=source)
            except HistentError as exc:
                exc.source = str(p)
                raise
            docs.append(_with_entities(p.stem, text, ents, source))
    else:
        raise MalformedInput(f"unknown input format {fmt!r}")
    seen = set()
    for d in docs:
        if d.doc_id in seen:
            raise MalformedInput(f"duplicate doc_id {d.doc_id!r}")
        seen.add(d.doc_id)
    return docs


def _with_entities(doc_id, text, ents, source):
    if source == "gold":
        return Document.build(doc_id, text, gold=ents)
    return Document.build(doc_id, text, predicted=ents)


def cmd_convert(args):
    docs = load_documents(args.format, args.inputs, args.role)
    out = Outputs(args.out)
    write_corpus(out.path("corpus.jsonl"), docs)
    inputs = [p for p in _expand(args.inputs, {".json", ".jsonl", ".txt", ".ann", ".html", ".htm"})]
    if args.format == "brat":
        inputs += [p.with_suffix(".ann") for p in inputs if p.with_suffix(".ann").exists()]
    out.manifest("convert", set(inputs), extra={"format": args.format, "documents": len(docs)})


# ---------------------------------------------------------------- evaluate


def pair_documents(gold_docs, pred_docs) -> list[Document]:
    """Gold documents carrying the predictions from ``pred_docs`` (matched by doc_id)."""
    gold_ids = {d.doc_id for d in gold_docs}
    pred_by_id = {d.doc_id: d for d in pred_docs}
    missing = sorted(gold_ids - set(pred_by_id))
    extra = sorted(set(pred_by_id) - gold_ids)
    if missing or extra:
        raise DocIdMismatch(f"no predictions for {missing}; predictions without gold {extra}")
    out = []
    for g in gold_docs:
        p = pred_by_id[g.doc_id]
        if p.text != g.text:
            raise SurfaceMismatch(f"{g.doc_id}: prediction text differs from the gold text")
        out.append(Document(g.doc_id, g.text, g.gold, list(p.predicted), g.tokens, g.sections))
    return out


def _load_evaluation_docs(args):
    docs = read_corpus(args.gold)
    inputs = [args.gold]
    if args.pred:
        docs = pair_documents(docs, read_corpus(args.pred))
        inputs.append(args.pred)
    return docs, inputs


def write_evaluation(out: Outputs, docs, formats, prefix=""):
    report = classify_documents(docs)
    table = aggregate([report], gold_totals(docs))
    if "csv" in formats:
        out.text(prefix + "rates.csv", table.to_csv())
        out.text(prefix + "match_counts.csv", report.to_csv())
    if "md" in formats:
        out.text(prefix + "rates.md", table.to_markdown())
    if "svg" in formats:
        from .plots import rate_chart

        rate_chart(table, out.path(prefix + "rates.svg"))
    return report, table


def cmd_evaluate(args):
    docs, inputs = _load_evaluation_docs(args)
    out = Outputs(args.out)
    write_evaluation(out, docs, _formats(args.format))
    out.manifest("evaluate", inputs)


# ---------------------------------------------------------------- analyze


def _read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise MalformedInput("no rows", source=path)
    return rows


def _grouped(rows, path, needed):
    missing = [k for k in needed if k not in rows[0]]
    if missing:
        raise MalformedInput(f"missing column(s) {missing}", source=path)
    groups: dict[str, list] = {}
    for i, row in enumerate(rows, 2):
        groups.setdefault(row.get("model", "") or "", []).append((i, row))
    return groups


def _num(row, key, kind, path, line):
    try:
        return kind(row[key])
    except (TypeError, ValueError) as exc:
        raise MalformedInput(f"bad {key} value {row[key]!r}", source=path, line=line) from exc


def length_from_csv(path):
    """Columns: [model,] category, n, mean, sd."""
    results = {}
    for model, rows in _grouped(_read_csv(path), path, ["category", "n", "mean", "sd"]).items():
        summaries = {}
        for line, row in rows:
            cat = _CATEGORY_NAMES.get(row["category"])
            if cat is None:
                raise MalformedInput(f"unknown category {row['category']!r}", source=path, line=line)
            summaries[cat] = SummarySample(_num(row, "mean", float, path, line),
                                           _num(row, "sd", float, path, line),
                                           _num(row, "n", int, path, line))
        results[model] = analysis.length_analysis_from_summaries(summaries)
    return results


def notes_from_csv(path):
    """Columns: [model,] doc_id, gold_count, word_count, em, rm, mm, ud, od."""
    cols = ["doc_id", "gold_count", "word_count", "em", "rm", "mm", "ud", "od"]
    results = {}
    for model, rows in _grouped(_read_csv(path), path, cols).items():
        notes = [analysis.NoteRecord(row["doc_id"], *(_num(row, c, int, path, line) for c in cols[1:]))
                 for line, row in rows]
        results[model] = analysis.note_length_analysis(notes)
    return results


def sections_from_csv(path):
    """Columns: [model,] group, em_rm_in, em_rm_out, mmud_in, mmud_out."""
    cols = ["group", "em_rm_in", "em_rm_out", "mmud_in", "mmud_out"]
    results = {}
    for model, rows in _grouped(_read_csv(path), path, cols).items():
        tables = {row["group"]: ContingencyTable(*(_num(row, c, int, path, line) for c in cols[1:]))
                  for line, row in rows}
        results[model] = analysis.segmentation_from_tables(tables)
    return results


def _lexicon(args):
    path = os.environ.get(LEXICON_ENV) or args.lexicon
    return (analysis.load_lexicon(path), path) if path else (analysis.make_lexicon(), None)


def _from_corpus(which, args):
    docs, inputs = _load_evaluation_docs(args)
    report = classify_documents(docs)
    if which == "length":
        res = analysis.entity_length_analysis(
            analysis.length_records(report, {d.doc_id: d for d in docs}))
    elif which == "notes":
        res = analysis.note_length_analysis(analysis.note_records(report, docs))
    else:
        lexicon, lex_path = _lexicon(args)
        if lex_path:
            inputs.append(lex_path)
        res = analysis.segmentation_analysis({d.doc_id: d for d in docs}, report, lexicon)
    return {"": res}, inputs


def cmd_analyze(args):
    if args.input:
        reader = {"length": length_from_csv, "notes": notes_from_csv, "sections": sections_from_csv}
        results, inputs = reader[args.which](args.input), [args.input]
    elif args.gold:
        results, inputs = _from_corpus(args.which, args)
    else:
        raise MalformedInput("analyze needs --input CSV or --gold corpus")
    formats = _formats(args.format)
    out = Outputs(args.out)
    if args.which == "length":
        header = analysis.LENGTH_CSV_HEADER
        rows = [r for m, res in results.items() for r in res.csv_rows(m)]
        md = "".join(res.to_markdown(m or None) for m, res in results.items())
    elif args.which == "notes":
        header = analysis.NOTES_CSV_HEADER
        rows = [r for m, res in results.items() for r in res.csv_rows(m)]
        md = "".join(res.to_markdown(m or None) for m, res in results.items())
    else:
        header = analysis.SECTIONS_CSV_HEADER
        rows = [r for m, res in results.items() for r in analysis.segmentation_csv_rows(res, m)]
        md = "".join(analysis.segmentation_markdown(res, m or None) for m, res in results.items())
    if "csv" in formats:
        out.text(f"{args.which}.csv", analysis.write_csv(rows, header))
    if "md" in formats:
        out.text(f"{args.which}.md", md)
    if "svg" in formats:
        from . import plots

        chart = {"length": plots.length_chart, "notes": plots.notes_chart,
                 "sections": plots.sections_chart}[args.which]
        chart(results, out.path(f"{args.which}.svg"))
    out.manifest(f"analyze {args.which}", inputs)


# ---------------------------------------------------------------- train


def cmd_train(args):
    from .tagger import TrainConfig, make_folds, train

    docs = read_corpus(args.gold)
    inputs = [args.gold]
    bme = None
    if args.bme:
        bme_docs = read_corpus(args.bme)
        inputs.append(args.bme)
        bme = {d.doc_id: [e for e in d.gold if not e.is_mhe] for d in bme_docs}
    config = TrainConfig(lr=args.lr, epochs=args.epochs, hash_bits=args.hash_bits)
    plan = make_folds([d.doc_id for d in docs], args.folds, args.seed)
    result = train(docs, args.mode, plan, args.seed, config, bme)
    out = Outputs(args.out)
    for fold in result.folds:
        fold.model.save(out.path(f"models/fold{fold.fold}.txt"))
    predicted = result.predicted_documents(docs)
    write_corpus(out.path("predictions.jsonl"), predicted)
    losses = [[f.fold, e + 1, repr(loss)] for f in result.folds for e, loss in enumerate(f.epoch_losses)]
    out.text("losses.csv", analysis.write_csv(losses, ["fold", "epoch", "mean_token_loss"]))
    folds = [[k, doc_id] for k, ids in enumerate(plan.folds) for doc_id in ids]
    out.text("folds.csv", analysis.write_csv(folds, ["fold", "doc_id"]))
    write_evaluation(out, predicted, _formats(args.format))
    out.manifest("train", inputs, seed=args.seed,
                 extra={"mode": args.mode, "config": vars(config)})


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="histent", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"histent {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="normalize brat / GPT HTML / standoff JSON into a JSONL corpus")
    p.add_argument("inputs", nargs="+", help="files or directories")
    p.add_argument("--format", choices=IN_FORMATS, required=True, help="input format")
    p.add_argument("--role", choices=("gold", "predicted"), default="gold",
                   help="store brat/HTML entities as gold or as predictions")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_convert)

    def report_flags(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--format", default="csv,md", help="comma list of csv, md, svg")

    p = sub.add_parser("evaluate", help="match predictions against gold and write rate tables")
    p.add_argument("--gold", required=True, help="JSONL corpus")
    p.add_argument("--pred", help="JSONL corpus whose 'predicted' entities are scored "
                                  "(default: the gold file's own)")
    report_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="entity length, note length or section association tests")
    p.add_argument("which", choices=("length", "notes", "sections"))
    p.add_argument("--input", help="precomputed CSV (summaries, per-note counts or 2x2 cells)")
    p.add_argument("--gold", help="JSONL corpus (instead of --input)")
    p.add_argument("--pred")
    p.add_argument("--lexicon", help=f"JSON header lexicon; ${LEXICON_ENV} takes precedence")
    report_flags(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("train", help="5-fold tagger training and out-of-fold evaluation")
    p.add_argument("--gold", required=True)
    p.add_argument("--bme", help="JSONL corpus whose gold entities are BME spans")
    p.add_argument("--mode", choices=("basic", "with_bme"), default="basic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--hash-bits", type=int, default=18)
    report_flags(p)
    p.set_defaults(func=cmd_train)
    return parser


def _fail(payload) -> int:
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except HistentError as exc:
        return _fail(exc.to_dict())
    except FileNotFoundError as exc:
        return _fail({"error": "FileNotFound", "message": str(exc.filename or exc)})
    except (OSError, RuntimeError, ValueError) as exc:
        return _fail({"error": type(exc).__name__, "message": str(exc)})
    return 0


if __name__ == "__main__":
    sys.exit(main())
