"""Feature cache: JSONL with a versioned header, one record per stimulus.

The header pins the producing backend id/version/dims; loading against a
different backend raises so stale features are never silently reused.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from talkqa.errors import CacheVersionError
from talkqa.model.backends import BackendInfo
from talkqa.model.fusion import FeatureBundle

FORMAT = "talkqa-features-v1"


def write_feature_cache(bundles: dict[str, FeatureBundle], info: BackendInfo, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"_header": {"format": FORMAT, "backend": info.to_dict()}}, sort_keys=True) + "\n")
        for sid in sorted(bundles):
            b = bundles[sid]
            fh.write(
                json.dumps(
                    {
                        "stimulus_id": sid,
                        "f_g": np.asarray(b.f_g).tolist(),
                        "f_h": np.asarray(b.f_h).tolist(),
                        "f_i": float(b.f_i),
                        "f_s": np.asarray(b.f_s).tolist(),
                    },
                    sort_keys=True,
                )
                + "\n"
            )


def read_feature_cache(path, expected_info: BackendInfo | None = None) -> tuple[dict[str, FeatureBundle], dict]:
    path = Path(path)
    bundles: dict[str, FeatureBundle] = {}
    header: dict | None = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            if "_header" in obj:
                header = obj["_header"]
                if header.get("format") != FORMAT:
                    raise CacheVersionError(
                        f"{path}: cache format {header.get('format')!r}, expected {FORMAT!r}"
                    )
                continue
            if header is None:
                raise CacheVersionError(f"{path}:{lineno}: missing cache header line")
            bundles[obj["stimulus_id"]] = FeatureBundle(
                stimulus_id=obj["stimulus_id"],
                f_g=np.asarray(obj["f_g"], dtype=np.float64),
                f_h=np.asarray(obj["f_h"], dtype=np.float64),
                f_i=float(obj["f_i"]),
                f_s=np.asarray(obj["f_s"], dtype=np.float64),
            )
    if header is None:
        raise CacheVersionError(f"{path}: empty cache file")
    if expected_info is not None and header.get("backend") != expected_info.to_dict():
        raise CacheVersionError(
            f"{path}: cache produced by {header.get('backend')}, expected {expected_info.to_dict()}"
        )
    return bundles, header
