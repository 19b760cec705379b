"""On-disk layout for datasets, checkpoints and histories.

A dataset directory holds a manifest.txt naming the scans plus, per scan,
CXT tensors (truth, maps, full and undersampled k-space, masks) and a
key=value .meta sidecar with the mask geometry.  A checkpoint directory
holds a manifest plus one CXT per parameter array.
"""

import csv
import os

import numpy as np

from .cascade import ModelParams
from .errors import ConfigError
from .netdiff import SGBlockParams
from .sampling import SamplingMask
from .simulate import Scan
from .cxt import read_cxt, write_cxt

__all__ = [
    "save_scan",
    "load_scan",
    "write_manifest",
    "read_manifest",
    "save_checkpoint",
    "load_checkpoint",
    "write_history",
]


def _meta_path(data_dir, scan_id):
    return os.path.join(data_dir, f"{scan_id}.meta")


def save_scan(data_dir, scan: Scan) -> None:
    sid = scan.scan_id
    write_cxt(os.path.join(data_dir, f"{sid}.truth.cxt"), scan.truth_img)
    write_cxt(os.path.join(data_dir, f"{sid}.maps.cxt"), scan.sens_maps)
    write_cxt(os.path.join(data_dir, f"{sid}.full.cxt"), scan.full_ksp)
    write_cxt(os.path.join(data_dir, f"{sid}.und.cxt"), scan.und_ksp)
    write_cxt(os.path.join(data_dir, f"{sid}.mask.cxt"), scan.mask.mask)
    if scan.mask.split is not None:
        write_cxt(os.path.join(data_dir, f"{sid}.dcmask.cxt"), scan.mask.split[0])
        write_cxt(os.path.join(data_dir, f"{sid}.lossmask.cxt"), scan.mask.split[1])
    meta = {
        "calib": ",".join(str(v) for v in scan.mask.calib),
        "accel": repr(scan.mask.accel_target),
        "pattern": scan.mask.pattern,
        "seed": str(scan.mask.seed),
        "split": "1" if scan.mask.split is not None else "0",
    }
    with open(_meta_path(data_dir, sid), "w", encoding="utf-8") as fh:
        for k, v in meta.items():
            fh.write(f"{k}={v}\n")


def _read_meta(data_dir, scan_id) -> dict:
    meta = {}
    with open(_meta_path(data_dir, scan_id), "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                k, _, v = line.partition("=")
                meta[k] = v
    return meta


def load_scan(data_dir, scan_id) -> Scan:
    meta = _read_meta(data_dir, scan_id)
    mask_arr = read_cxt(os.path.join(data_dir, f"{scan_id}.mask.cxt"))
    split = None
    if meta.get("split") == "1":
        split = (
            read_cxt(os.path.join(data_dir, f"{scan_id}.dcmask.cxt")),
            read_cxt(os.path.join(data_dir, f"{scan_id}.lossmask.cxt")),
        )
    mask = SamplingMask(
        mask=mask_arr,
        calib=tuple(int(v) for v in meta["calib"].split(",")),
        accel_target=float(meta["accel"]),
        pattern=meta["pattern"],
        seed=int(meta["seed"]),
        split=split,
    )
    return Scan(
        scan_id=scan_id,
        truth_img=read_cxt(os.path.join(data_dir, f"{scan_id}.truth.cxt")),
        sens_maps=read_cxt(os.path.join(data_dir, f"{scan_id}.maps.cxt")),
        full_ksp=read_cxt(os.path.join(data_dir, f"{scan_id}.full.cxt")),
        mask=mask,
        und_ksp=read_cxt(os.path.join(data_dir, f"{scan_id}.und.cxt")),
    )


def write_manifest(data_dir, scan_ids) -> None:
    with open(os.path.join(data_dir, "manifest.txt"), "w", encoding="utf-8") as fh:
        for sid in scan_ids:
            fh.write(sid + "\n")


def read_manifest(data_dir) -> list:
    path = os.path.join(data_dir, "manifest.txt")
    if not os.path.exists(path):
        raise ConfigError(f"no manifest.txt in {data_dir}")
    with open(path, "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def save_checkpoint(ckpt_dir, params: ModelParams, kind: str, meta: dict) -> None:
    os.makedirs(ckpt_dir, exist_ok=True)
    lines = [f"kind={kind}", f"layers={len(params.sg.weights)}"]
    lines += [f"{k}={v}" for k, v in meta.items()]
    with open(os.path.join(ckpt_dir, "manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    for i, (w, b) in enumerate(zip(params.sg.weights, params.sg.biases)):
        write_cxt(os.path.join(ckpt_dir, f"sg_w{i}.cxt"), w)
        write_cxt(os.path.join(ckpt_dir, f"sg_b{i}.cxt"), b)
    if kind == "psfnet":
        write_cxt(os.path.join(ckpt_dir, "eta.cxt"), params.eta)
        write_cxt(os.path.join(ckpt_dir, "gamma.cxt"), params.gamma)


def load_checkpoint(ckpt_dir):
    """Returns (params, kind, meta); fusion scalars default to 1 when absent."""
    path = os.path.join(ckpt_dir, "manifest.txt")
    if not os.path.exists(path):
        raise ConfigError(f"no checkpoint manifest in {ckpt_dir}")
    meta = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                k, _, v = line.partition("=")
                meta[k] = v
    kind = meta.pop("kind")
    layers = int(meta.pop("layers"))
    weights, biases = [], []
    for i in range(layers):
        weights.append(read_cxt(os.path.join(ckpt_dir, f"sg_w{i}.cxt")))
        biases.append(read_cxt(os.path.join(ckpt_dir, f"sg_b{i}.cxt")))
    sg = SGBlockParams(weights, biases)
    cascades = int(meta.get("cascades", 5))
    if kind == "psfnet":
        eta = read_cxt(os.path.join(ckpt_dir, "eta.cxt"))
        gamma = read_cxt(os.path.join(ckpt_dir, "gamma.cxt"))
    else:
        eta = np.ones(cascades)
        gamma = np.ones(cascades)
    return ModelParams(sg, eta, gamma), kind, meta


def write_history(path, history) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "step", "loss"])
        for epoch, step, loss in history:
            writer.writerow([epoch, step, repr(loss)])
