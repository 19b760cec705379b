"""Command-line front end: simulate, mask, train, reconstruct, evaluate.

Exit codes: 0 success, 1 configuration/validation, 2 I/O or file format,
3 numeric failure.
"""

import argparse
import csv
import os
import sys
import time

import numpy as np

from . import _kernels
from .cascade import coil_combine
from .config import load_config
from .datafiles import (load_checkpoint, load_scan, read_manifest, save_checkpoint,
                        save_scan, write_history, write_manifest)
from .errors import ConfigError, CxtError, NumericError
from .cxt import read_cxt, write_cxt, write_pgm
from .metrics import EvalReport, psnr, ssim
from .sampling import make_mask, split_for_selfsup
from .simulate import Scan, make_scan_set
from .training import TrainConfig, reconstruct_scan, train_selfsup, train_supervised

METHODS = ("zf", "spirit", "modl", "psfnet", "psfnet_serial")


def _add_common(sub):
    sub.add_argument("--config", default=None, help="run configuration file")
    sub.add_argument("--seed", type=int, default=None, help="override config seeds")
    sub.add_argument("--threads", type=int, default=None,
                     help="numba thread-pool size (the desk-scale kernels are "
                          "single-threaded, so this is a hint for larger runs)")


def _apply_threads(args):
    if args.threads is not None and _kernels.HAVE_NUMBA:
        import numba

        numba.set_num_threads(max(1, args.threads))


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        for section in ("simulate", "mask", "train"):
            cfg.override(section, "seed", args.seed)
    return cfg


def cmd_simulate(args) -> int:
    cfg = _load(args)
    sim, msk = cfg["simulate"], cfg["mask"]
    os.makedirs(args.out, exist_ok=True)
    scans = make_scan_set(
        n_scans=sim["n_scans"], h=sim["h"], w=sim["w"], coils=sim["coils"],
        accel=msk["accel"], pattern=msk["pattern"], calib_size=msk["calib"],
        noise_sigma=sim["noise_sigma"], seed=sim["seed"],
        selfsup=msk["selfsup_split"], loss_frac=msk["loss_frac"],
    )
    for scan in scans:
        save_scan(args.out, scan)
    write_manifest(args.out, [s.scan_id for s in scans])
    print(f"simulate: wrote {len(scans)} scans to {args.out}")
    return 0


def cmd_mask(args) -> int:
    cfg = _load(args)
    msk = cfg["mask"]
    ids = read_manifest(args.data)
    for i, sid in enumerate(ids):
        scan = load_scan(args.data, sid)
        h, w = scan.full_ksp.shape[-2:]
        mask = make_mask(h, w, msk["accel"], pattern=msk["pattern"],
                         calib_size=msk["calib"], seed=msk["seed"] + i)
        if msk["selfsup_split"]:
            mask = split_for_selfsup(mask, loss_frac=msk["loss_frac"],
                                     seed=msk["seed"] + i + 1)
        und = scan.full_ksp * mask.mask[None]
        save_scan(args.data, Scan(sid, scan.truth_img, scan.sens_maps,
                                  scan.full_ksp, mask, und))
    print(f"mask: re-masked {len(ids)} scans in {args.data}")
    return 0


def _train_config(cfg) -> TrainConfig:
    tr, mdl = cfg["train"], cfg["model"]
    return TrainConfig(
        mode=tr["mode"], model=mdl["kind"], epochs=tr["epochs"],
        batch_size=tr["batch_size"], lr=tr["lr"], beta1=tr["beta1"],
        beta2=tr["beta2"], adam_eps=tr["adam_eps"], seed=tr["seed"],
        cascades=mdl["cascades"], channels=mdl["channels"],
        kernel_size=mdl["kernel_size"], kappa=mdl["kappa"],
        loss_frac=cfg["mask"]["loss_frac"], normalize=tr["normalize"],
        final_dc=mdl["final_dc"],
    )


def cmd_train(args) -> int:
    cfg = _load(args)
    tc = _train_config(cfg)
    if tc.model not in ("psfnet", "modl", "psfnet_serial"):
        raise ConfigError(f"model kind {tc.model!r} is not trainable")
    scans = [load_scan(args.data, sid) for sid in read_manifest(args.data)]
    train = train_selfsup if tc.mode == "selfsup" else train_supervised
    params, history = train(scans, tc)
    meta = {
        "cascades": tc.cascades, "channels": tc.channels,
        "kernel_size": tc.kernel_size, "kappa": tc.kappa, "seed": tc.seed,
        "mode": tc.mode, "final_dc": int(tc.final_dc),
    }
    save_checkpoint(args.out, params, tc.model, meta)
    write_history(os.path.join(args.out, "history.csv"), history)
    print(f"train: {tc.model}/{tc.mode} on {len(scans)} scans, "
          f"final loss {history[-1][2]:.6g}, checkpoint in {args.out}")
    return 0


def cmd_reconstruct(args) -> int:
    cfg = _load(args)
    mdl = cfg["model"]
    method = args.method or mdl["kind"]
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}")
    params = None
    if method in ("modl", "psfnet", "psfnet_serial"):
        if args.ckpt is None:
            raise ConfigError(f"method {method!r} requires --ckpt")
        params, kind, _ = load_checkpoint(args.ckpt)
        if kind != method:
            raise ConfigError(
                f"checkpoint holds a {kind!r} model, requested {method!r}"
            )
    out_dir = os.path.join(args.out, method)
    os.makedirs(out_dir, exist_ok=True)
    timings = []
    for sid in read_manifest(args.data):
        scan = load_scan(args.data, sid)
        t0 = time.perf_counter()
        img = reconstruct_scan(
            method, scan, params=params, kernel_size=mdl["kernel_size"],
            kappa=mdl["kappa"], n_iter=mdl["n_iter"], final_dc=mdl["final_dc"],
        )
        dt = time.perf_counter() - t0
        mag = np.abs(img)
        write_cxt(os.path.join(out_dir, f"{sid}.mag.cxt"), mag)
        if args.pgm or cfg["eval"]["pgm"]:
            write_pgm(os.path.join(out_dir, f"{sid}.pgm"), mag)
        timings.append((sid, dt))
        print(f"reconstruct: {sid} method={method} {dt:.3f}s")
    with open(os.path.join(out_dir, "timing.csv"), "w", encoding="utf-8",
              newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scan_id", "seconds"])
        writer.writerows((sid, f"{dt:.6f}") for sid, dt in timings)
    total = sum(dt for _, dt in timings)
    print(f"reconstruct: {len(timings)} scans in {total:.3f}s total")
    return 0


def _reference_mag(data_dir, sid) -> np.ndarray:
    truth = read_cxt(os.path.join(data_dir, f"{sid}.truth.cxt"))
    maps = read_cxt(os.path.join(data_dir, f"{sid}.maps.cxt"))
    return np.abs(coil_combine(truth, maps))


def cmd_evaluate(args) -> int:
    cfg = _load(args)
    ids = read_manifest(args.data)
    methods = args.methods.split(",") if args.methods else sorted(
        d for d in os.listdir(args.recon)
        if os.path.isdir(os.path.join(args.recon, d))
    )
    if not methods:
        raise ConfigError(f"no method directories under {args.recon}")
    os.makedirs(args.out, exist_ok=True)

    report = EvalReport(scan_ids=ids)
    for method in methods:
        mdir = os.path.join(args.recon, method)
        psnrs, ssims = [], []
        for sid in ids:
            path = os.path.join(mdir, f"{sid}.mag.cxt")
            if not os.path.exists(path):
                raise ConfigError(f"{method}: missing reconstruction for {sid}")
            ref = _reference_mag(args.data, sid)
            mag = read_cxt(path)
            psnrs.append(psnr(mag, ref))
            ssims.append(ssim(mag, ref))
        report.add_method(method, psnrs, ssims)
        with open(os.path.join(args.out, f"metrics_{method}.csv"), "w",
                  encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scan_id", "psnr_db", "ssim"])
            for sid, p, s in zip(ids, psnrs, ssims):
                writer.writerow([sid, repr(p), repr(s)])

    if cfg["eval"]["wilcoxon"]:
        report.run_pairwise()
        with open(os.path.join(args.out, "wilcoxon.csv"), "w", encoding="utf-8",
                  newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["method_a", "method_b", "metric", "p_value"])
            for (m1, m2, name), p in sorted(report.pairwise.items()):
                writer.writerow([m1, m2, name, repr(p)])

    lines = ["method  psnr_db(mean+-se)  ssim(mean+-se)"]
    for method in methods:
        mp, sp, ms, ss_ = report.summary(method)
        lines.append(f"{method}  {mp:.3f}+-{sp:.3f}  {ms:.4f}+-{ss_:.4f}")
    text = "\n".join(lines)
    with open(os.path.join(args.out, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(text + "\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psfnet",
        description="Simulate, train and evaluate accelerated-MRI reconstructions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic scan dataset")
    _add_common(p)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mask", help="re-mask an existing dataset")
    _add_common(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("train", help="train a reconstruction model")
    _add_common(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("reconstruct", help="reconstruct a dataset with one method")
    _add_common(p)
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--method", default=None, choices=METHODS)
    p.add_argument("--ckpt", default=None, help="checkpoint directory")
    p.add_argument("--out", required=True, help="reconstruction output directory")
    p.add_argument("--pgm", action="store_true", help="also write PGM previews")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("evaluate", help="score reconstructions against the truth")
    _add_common(p)
    p.add_argument("--data", required=True, help="dataset directory (ground truth)")
    p.add_argument("--recon", required=True, help="reconstruction root directory")
    p.add_argument("--methods", default=None, help="comma-separated method list")
    p.add_argument("--out", required=True, help="report directory")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_threads(args)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (CxtError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
