"""Command-line interface binding the library modules into pipelines.

Exit codes: 0 success, 1 data/validation failure, 2 usage error. A config
file of ``key = value`` lines (TOML-style) may preset any long flag; flags
given on the command line win.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .annotations import (
    AnnotationError,
    DatasetManifest,
    VisualTag,
    convert_quads_to_rects,
    dataset_stats,
    validate_manifest,
    write_image_annotation,
)
from .decisions import DecisionError, DecisionParams, decide_image, parse_detections
from .evaluation import (
    EvaluationError,
    evaluate,
    make_splits,
    parse_prediction_line,
    report_to_json,
    whisker_stats,
    write_prediction_line,
    PredictionRecord,
)
from .patches import (
    AugmentationConfig,
    PatchError,
    SeedSpec,
    apply_augmentations,
    extract_patch,
    load_image,
    save_patch_png,
    save_patch_tensor,
)


def _fail(message: str, code: int = 1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_manifest(path: str) -> DatasetManifest:
    p = Path(path)
    if p.is_dir():
        entries = sorted(str(f.relative_to(p)) for f in p.rglob("*.json")
                         if f.name != "manifest.json")
        return DatasetManifest(name=p.name, root=p, entries=tuple(entries))
    return DatasetManifest.load(p)


def _parse_ratio(text: str) -> tuple[int, int, int]:
    parts = text.split(":")
    if len(parts) != 3 or not all(s.isdigit() and int(s) > 0 for s in parts):
        raise click.BadParameter(f"ratio must look like 6:1:3, got {text!r}")
    return tuple(int(s) for s in parts)  # type: ignore[return-value]


def _read_config(ctx, param, value):
    if value is None:
        return None
    defaults = {}
    for lineno, raw in enumerate(Path(value).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.BadParameter(f"{value}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        defaults[key.replace("-", "_")] = val.strip("\"'")
    ctx.default_map = {**(ctx.default_map or {}), **defaults}
    return value


CONFIG_OPTION = click.option(
    "--config", callback=_read_config, expose_value=False, is_eager=True,
    type=click.Path(exists=True, dir_okay=False),
    help="TOML-style key = value file presetting any flag of this command.")


@click.group()
def main():
    """Parking-lot occupancy toolkit."""


@main.command()
@CONFIG_OPTION
@click.option("--annotations", required=True, type=click.Path(exists=True),
              help="Annotation directory or manifest file (quad-form lots).")
@click.option("--detections", "detections_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Detections JSON: one per-image document or a list of them.")
@click.option("--heuristic", type=click.Choice(["h1", "h2"]), default="h1", show_default=True)
@click.option("--tau", type=float, default=0.5, show_default=True)
@click.option("--score-threshold", type=float, default=0.5, show_default=True)
@click.option("--accepted-labels", default="car,truck,bus", show_default=True)
@click.option("--output", required=True, type=click.Path(),
              help="Predictions JSONL output path.")
@click.option("--predicted-dir", type=click.Path(), default=None,
              help="Optional directory for predicted annotation files.")
def decide(annotations, detections_path, heuristic, tau, score_threshold,
           accepted_labels, output, predicted_dir):
    """Decide lot occupancy from detector boxes."""
    try:
        params = DecisionParams(heuristic=heuristic, tau=tau, score_threshold=score_threshold,
                                accepted_labels=frozenset(
                                    s.strip() for s in accepted_labels.split(",") if s.strip()))
    except DecisionError as exc:
        _fail(str(exc), 2)
    try:
        raw = json.loads(Path(detections_path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        _fail(f"{detections_path}: {exc}")
    docs = raw if isinstance(raw, list) else [raw]
    by_image = {}
    try:
        for doc in docs:
            image, dets = parse_detections(json.dumps(doc))
            by_image[image] = dets
    except AnnotationError as exc:
        _fail(f"{detections_path}: {exc}")
    manifest = _load_manifest(annotations)
    lines = []
    try:
        for entry in manifest.entries:
            ann = manifest.read_entry(entry)
            results, predicted = decide_image(ann, by_image.get(ann.image, []), params)
            occupied = sum(1 for r in results if r.decided == "occupied")
            click.echo(f"{ann.image}: {occupied}/{len(results)} occupied")
            for r in results:
                lines.append(write_prediction_line(
                    PredictionRecord(image=ann.image, lot_id=r.lot_id, decided=r.decided)))
            if predicted_dir is not None:
                out_path = Path(predicted_dir) / entry
                out_path.parent.mkdir(parents=True, exist_ok=True)
                out_path.write_bytes(write_image_annotation(predicted))
    except (AnnotationError, DecisionError) as exc:
        _fail(str(exc))
    Path(output).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


@main.command("evaluate")
@CONFIG_OPTION
@click.option("--predictions", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--threshold", type=float, default=0.5, show_default=True,
              help="Probability binarization threshold.")
@click.option("--splits", "splits_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Split file from `lotkit split`; adds per-split whiskers.")
@click.option("--per-tag/--no-per-tag", default=True, show_default=True)
@click.option("--output", required=True, type=click.Path())
def evaluate_cmd(predictions, manifest, threshold, splits_path, per_tag, output):
    """Score a predictions file against ground truth."""
    m = _load_manifest(manifest)
    try:
        truth = list(m.images())
        records = [parse_prediction_line(line)
                   for line in Path(predictions).read_text(encoding="utf-8").splitlines() if line]
        report = evaluate(records, truth, decision_threshold=threshold)
    except (AnnotationError, EvaluationError) as exc:
        _fail(str(exc))
    whiskers = None
    splits_doc = None
    if splits_path is not None:
        doc = json.loads(Path(splits_path).read_text(encoding="utf-8"))
        f1_by_split = []
        splits_doc = []
        try:
            for spec in doc["splits"]:
                test_images = {img for img, part in spec["assignment"].items() if part == "test"}
                sub_truth = [a for a in truth if a.image in test_images]
                sub_records = [r for r in records if r.image in test_images]
                sub_report = evaluate(sub_records, sub_truth, decision_threshold=threshold)
                f1_by_split.append(sub_report.overall.f1)
                splits_doc.append({"split_index": spec["split_index"],
                                   "test_f1": sub_report.overall.f1,
                                   "test_images": len(test_images)})
        except EvaluationError as exc:
            _fail(str(exc))
        if len(f1_by_split) >= 4:
            whiskers = {"overall_f1": whisker_stats(f1_by_split)}
    if not per_tag:
        report.per_tag = {}
    payload = report_to_json(report, whiskers=whiskers, splits=splits_doc)
    Path(output).write_bytes(payload)
    click.echo(f"overall f1 = {report.overall.f1:.4f} "
               f"({report.overall_counts.total} lots)")


@main.command()
@CONFIG_OPTION
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", required=True, type=click.Path())
def convert(input_path, output):
    """Convert quad annotations to circumscribing-rectangle form."""
    manifest = _load_manifest(input_path)
    out_root = Path(output)
    try:
        for entry in manifest.entries:
            ann = convert_quads_to_rects(manifest.read_entry(entry))
            out_path = out_root / entry
            out_path.parent.mkdir(parents=True, exist_ok=True)
            out_path.write_bytes(write_image_annotation(ann))
    except AnnotationError as exc:
        _fail(str(exc))
    click.echo(f"converted {len(manifest.entries)} annotation files to {out_root}")


@main.command()
@CONFIG_OPTION
@click.option("--manifest", required=True, type=click.Path(exists=True))
def validate(manifest):
    """Validate every annotation referenced by a manifest."""
    m = _load_manifest(manifest)
    violations = validate_manifest(m)
    for v in violations:
        lot = f" lot {v.lot_id!r}" if v.lot_id else ""
        click.echo(f"{v.file}{lot}: [{v.rule}] {v.message}", err=True)
    if violations:
        _fail(f"{len(violations)} violation(s) in {m.name}")
    click.echo(f"{m.name}: {len(m.entries)} annotation files OK")


@main.command()
@CONFIG_OPTION
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--json", "as_json", is_flag=True, help="Emit counts as JSON.")
def stats(manifest, as_json):
    """Per-visual-condition image counts."""
    m = _load_manifest(manifest)
    try:
        counts = dataset_stats(m)
    except AnnotationError as exc:
        _fail(str(exc))
    if as_json:
        click.echo(json.dumps(counts, indent=2))
        return
    click.echo(f"{'condition':<16} {m.name}")
    click.echo(f"{'total images':<16} {counts['total']}")
    for tag in VisualTag:
        click.echo(f"{tag.value:<16} {counts[tag.value]}")


@main.command()
@CONFIG_OPTION
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--k", type=int, default=5, show_default=True)
@click.option("--ratio", default="6:1:3", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", required=True, type=click.Path())
def split(manifest, k, ratio, seed, output):
    """Generate k stratified train/val/test splits."""
    ratio_t = _parse_ratio(ratio)
    m = _load_manifest(manifest)
    try:
        truth = list(m.images())
        specs = make_splits(truth, k=k, ratio=ratio_t, seed=seed)
    except (AnnotationError, EvaluationError) as exc:
        _fail(str(exc))
    doc = {
        "seed": seed,
        "ratio": list(ratio_t),
        "splits": [
            {"split_index": s.split_index,
             "assignment": {img: s.assignment[img] for img in sorted(s.assignment)}}
            for s in specs
        ],
    }
    Path(output).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    sizes = [sum(1 for p in specs[0].assignment.values() if p == part)
             for part in ("train", "val", "test")]
    click.echo(f"wrote {k} splits of {len(truth)} images "
               f"(train/val/test = {sizes[0]}/{sizes[1]}/{sizes[2]})")


@main.command("extract-patches")
@CONFIG_OPTION
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--images-root", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--output", required=True, type=click.Path())
@click.option("--augment", is_flag=True, help="Apply the augmentation pipeline and save tensors.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--epoch", type=int, default=0, show_default=True)
def extract_patches(manifest, images_root, output, augment, seed, epoch):
    """Cut per-lot patches (PNG), optionally augmented+normalized (tensor files)."""
    m = _load_manifest(manifest)
    out_root = Path(output)
    out_root.mkdir(parents=True, exist_ok=True)
    cfg = AugmentationConfig()
    n = 0
    try:
        for ann in m.images():
            img = load_image(Path(images_root) / ann.image)
            stem = Path(ann.image).with_suffix("").as_posix().replace("/", "__")
            for lot in ann.lots:
                patch = extract_patch(img, lot, target_size=cfg.target_size)
                if augment:
                    spec = SeedSpec(global_seed=seed, image=ann.image, lot_id=lot.id, epoch=epoch)
                    tensor = apply_augmentations(patch, cfg, spec)
                    save_patch_tensor(out_root / f"{stem}__{lot.id}.lkpt", tensor)
                else:
                    save_patch_png(out_root / f"{stem}__{lot.id}.png", patch)
                n += 1
    except (AnnotationError, PatchError, OSError) as exc:
        _fail(str(exc))
    click.echo(f"wrote {n} patches to {out_root}")


@main.command()
@CONFIG_OPTION
@click.option("--manifest", required=True, type=click.Path(exists=True))
@click.option("--images-root", type=click.Path(file_okay=False), default=None,
              help="Directory with the image files (defaults to the manifest root).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8742, show_default=True)
def serve(manifest, images_root, host, port):
    """Start the local annotation service (HTTP API + /ui)."""
    import uvicorn

    from .service import create_app

    m = _load_manifest(manifest)
    app = create_app(m, images_root=Path(images_root) if images_root else None)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
