"""Synthetic fixture datasets with the published per-condition image counts.

Each fixture image gets a tiny valid annotation file with one quad lot; tag
``t`` is attached to the first ``count[t]`` images, which reproduces the
per-tag marginals exactly while keeping generation trivial and deterministic.
"""

from __future__ import annotations

import json
from pathlib import Path

from .annotations import DatasetManifest

# Per-dataset image counts by visual condition.
DATASET_TABLE: dict[str, dict[str, int]] = {
    "PKLot": {
        "total": 12417, "sunny": 6913, "overcast": 4162, "rainy": 1342,
        "winter": 0, "fog": 0, "glare": 0, "night": 0, "infrared": 0,
        "occlusion_car": 7, "occlusion_tree": 10, "distortion": 0,
    },
    "CNRPark": {
        "total": 3119, "sunny": 1075, "overcast": 915, "rainy": 576,
        "winter": 0, "fog": 33, "glare": 26, "night": 27, "infrared": 0,
        "occlusion_car": 54, "occlusion_tree": 3119, "distortion": 0,
    },
    "ACPDS": {
        "total": 293, "sunny": 134, "overcast": 132, "rainy": 13,
        "winter": 0, "fog": 34, "glare": 1, "night": 13, "infrared": 0,
        "occlusion_car": 87, "occlusion_tree": 35, "distortion": 293,
    },
    "ACMPS": {
        "total": 13126, "sunny": 2231, "overcast": 312, "rainy": 275,
        "winter": 0, "fog": 0, "glare": 20, "night": 4, "infrared": 4,
        "occlusion_car": 0, "occlusion_tree": 0, "distortion": 0,
    },
    "SPKL": {
        "total": 1203, "sunny": 187, "overcast": 76, "rainy": 87,
        "winter": 440, "fog": 0, "glare": 27, "night": 507, "infrared": 495,
        "occlusion_car": 1203, "occlusion_tree": 0, "distortion": 400,
    },
}


def generate_fixture_dataset(name: str, root: Path) -> DatasetManifest:
    """Write a fixture dataset under ``root`` and return its manifest.

    The manifest file itself is saved as ``root / manifest.json``.
    """
    table = DATASET_TABLE[name]
    root = Path(root)
    ann_dir = root / "annotations"
    ann_dir.mkdir(parents=True, exist_ok=True)
    total = table["total"]
    entries = []
    for i in range(total):
        tags = sorted(tag for tag, count in table.items() if tag != "total" and i < count)
        doc = {
            "image": f"images/{name.lower()}_{i:05d}.jpg",
            "width": 640,
            "height": 480,
            "tags": tags,
            "lots": [
                {"id": "lot_0",
                 "quad": [[10.0, 10.0], [110.0, 10.0], [110.0, 60.0], [10.0, 60.0]],
                 "occupied": i % 2 == 0},
            ],
        }
        entry = f"annotations/{name.lower()}_{i:05d}.json"
        (root / entry).write_text(json.dumps(doc) + "\n", encoding="utf-8")
        entries.append(entry)
    manifest = DatasetManifest(name=name, root=root, entries=tuple(entries))
    manifest.save(root / "manifest.json", root=".")
    return manifest
