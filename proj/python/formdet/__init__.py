"""Form field detection toolkit: mining, dataset building, evaluation, form preparation."""

import json
import os
from pathlib import Path

from . import _core
from ._core import (
    CLASS_NAMES,
    DEFAULT_TARGET_PX,
    ConfigError,
    DegenerateRect,
    EncryptedPdf,
    Error,
    ExistingForm,
    GeometryMismatch,
    InsufficientPages,
    IoError,
    MalformedDetections,
    MalformedPdf,
    MalformedTagFile,
    PageOutOfRange,
    RenderFailure,
    UnknownSliceKey,
    doc_id,
    inspect,
    label_line,
    page_text,
    pixels_to_pdf_rect,
    pdf_rect_to_pixels,
    render_scale,
    split_documents,
    verify_roundtrip,
)

__all__ = [
    "CLASS_NAMES",
    "DEFAULT_TARGET_PX",
    "Error",
    "build",
    "doc_id",
    "evaluate",
    "evaluate_files",
    "inspect",
    "label_line",
    "map_50_95",
    "mine",
    "mine_corpus",
    "page_text",
    "pixels_to_pdf_rect",
    "pdf_rect_to_pixels",
    "prepare",
    "read_detections",
    "read_manifest",
    "render_scale",
    "split_documents",
    "stats",
    "verify_roundtrip",
    "write_detections",
]


def _read_bytes(pdf):
    if isinstance(pdf, (bytes, bytearray)):
        return bytes(pdf)
    return Path(pdf).read_bytes()


def mine(pdf, **cleaning):
    """Document record for one PDF (path or bytes) as a dict."""
    return json.loads(_core.mine(_read_bytes(pdf), **cleaning))


def mine_corpus(config):
    """Runs the mine step. `config` is a RunConfig dict; returns the stats dict."""
    return json.loads(_core.run_mine(json.dumps(config)))


def build(records, config, tags=None, renderer=None):
    """Builds the dataset from a records file. Returns (pages, render_failures, degenerate_boxes)."""
    return _core.run_build(
        os.fspath(records),
        json.dumps(config),
        None if tags is None else os.fspath(tags),
        renderer,
    )


def stats(records):
    return json.loads(_core.stats(os.fspath(records)))


def evaluate(manifest, detections, slice=None, include_empty_pages=False):
    """Sliced mAP50-95 reports.

    `manifest` is a manifest.jsonl path or a list of row dicts, `detections` a
    detections file path or a list of detection dicts.
    """
    return _reports(
        _core.evaluate(
            _ndjson_text(manifest),
            _ndjson_text(detections),
            slice=slice,
            include_empty_pages=include_empty_pages,
        )
    )


def evaluate_files(manifest, detections, slice=None, out_dir=".", include_empty_pages=False):
    return _reports(
        _core.evaluate_files(
            os.fspath(manifest),
            os.fspath(detections),
            slice=slice,
            out_dir=os.fspath(out_dir),
            include_empty_pages=include_empty_pages,
        )
    )


def map_50_95(detections, ground_truth, images):
    """Tuple-level evaluator: see _core.map_50_95. Returns the report dict."""
    return _reports(_core.map_50_95(detections, ground_truth, images))[0]


def prepare(pdf, detections, manifest=None, **options):
    """Inserts detected fields into a flat PDF. Returns (bytes, fields)."""
    return _core.prepare(
        _read_bytes(pdf),
        _ndjson_text(detections),
        None if manifest is None else _ndjson_text(manifest),
        **options,
    )


def read_manifest(path):
    return _read_ndjson(path)


def read_detections(path):
    return _read_ndjson(path)


def write_detections(path, detections):
    """Writes detection dicts {doc_id, page_index, class, box, score} as NDJSON."""
    Path(path).write_text("".join(json.dumps(d) + "\n" for d in detections))


def _reports(text):
    return json.loads(text)["reports"]


def _read_ndjson(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def _ndjson_text(value):
    if isinstance(value, (str, os.PathLike)):
        return Path(value).read_text()
    return "".join(json.dumps(row) + "\n" for row in value)
