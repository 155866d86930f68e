"""Command-line pipeline driver.

Subcommands: phantom, train, compress, decompress, simulate, eval, report.
All stochastic subcommands require an explicit --seed; nothing is seeded
from the wall clock, so reruns are byte-identical.

Exit codes: 1 generic failure, 2 I/O failure, 3 segmentation topology
failure, 4 chain-code encodability failure.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys

import numpy as np

from . import codec, config, metrics, phantom, segmenter, speckle, synth
from .errors import TopologyFailure, UnencodableDelta, UsqzError
from .grid import (CLASS_NAMES, ContourSet, LabelMap, PolarFrame,
                   ProbeGeometry, TISSUE_CLASSES, boundary_radii,
                   polar_to_cartesian)
from .pgm import read_pgm, write_pgm

EXIT_GENERIC = 1
EXIT_IO = 2
EXIT_TOPOLOGY = 3
EXIT_ENCODABILITY = 4

PAIR_NAMES = {(0, 1): "lumen-media", (1, 2): "media-external", (0, 2): "lumen-external"}


def _geometry_from_frame(samples, width, height, radial_step):
    n_r, n_t = samples.shape
    return ProbeGeometry(n_t, n_r, width, height, radial_step)


def _load_polar(path, width, height, radial_step):
    samples = read_pgm(path)
    return PolarFrame(_geometry_from_frame(samples, width, height, radial_step), samples)


def cmd_phantom(args):
    geometry = ProbeGeometry(args.scan_lines, args.samples, args.width, args.height,
                             args.radial_step)
    params, psf, _, _ = config.synthesis_settings(args.config, args.freq_khz / 1000.0)
    manifest = phantom.generate_dataset(args.out, args.count, geometry,
                                        seed=args.seed, params=params, psf=psf,
                                        acquisition_frequency_khz=args.freq_khz)
    print("wrote %d phantoms, manifest %s" % (args.count, manifest))
    return 0


def cmd_train(args):
    items = [it for it in phantom.read_manifest(args.manifest) if it["role"] == "train"]
    if not items:
        print("no training items in manifest", file=sys.stderr)
        return EXIT_IO
    _, _, dyn, radial_step = config.synthesis_settings(args.config)
    stacks, labels = [], []
    for it in items:
        frame = _load_polar(it["frame"], 512, 512, radial_step)
        stacks.append(speckle.feature_map(frame, args.window, dyn))
        labels.append(LabelMap(frame.geometry, read_pgm(it["labels"])))
    model = segmenter.train_classifier(stacks, labels)
    model.save(args.out)
    print("trained on %d frames -> %s" % (len(items), args.out))
    return 0


def cmd_compress(args):
    _, _, dyn, radial_step = config.synthesis_settings(args.config)
    samples = read_pgm(args.input)
    geometry = _geometry_from_frame(samples, args.width, args.height, radial_step)
    if args.from_labels:
        label_map = LabelMap(geometry, read_pgm(args.from_labels))
        radii = boundary_radii(label_map)
        contours = ContourSet(tuple(TISSUE_CLASSES[:2]), radii,
                              num_samples=geometry.samples_per_line)
    else:
        if not args.model:
            print("--model (or --from-labels) is required", file=sys.stderr)
            return EXIT_GENERIC
        frame = PolarFrame(geometry, samples)
        model = segmenter.ClassifierModel.load(args.model)
        stack = speckle.feature_map(frame, args.window, dyn)
        label_map = segmenter.classify_labels(stack, model)
        contours = segmenter.extract_contours(label_map)
    blob = codec.compress_contour_set(contours, geometry, args.freq_khz)
    with open(args.out, "wb") as f:
        f.write(blob)
    header, _ = codec.read_file(blob)
    print("wrote %s (%d bytes)" % (args.out, len(blob)))
    print("compression ratio (payload): %.1f" % codec.compression_ratio(header, "payload"))
    print("compression ratio (file):    %.1f" % codec.compression_ratio(header, "file"))
    return 0


def cmd_decompress(args):
    with open(args.input, "rb") as f:
        blob = f.read()
    header, _ = codec.read_file(blob)
    params, psf, dyn, radial_step = config.synthesis_settings(
        args.config, header.acquisition_frequency_khz / 1000.0)
    _, labels, polar = synth.decompress_to_polar(
        blob, params, psf, seed=args.seed, radial_step=radial_step, dyn_range_db=dyn)
    cart = polar_to_cartesian(polar)
    write_pgm(args.out, cart.pixels)
    if args.polar_out:
        write_pgm(args.polar_out, polar.samples)
    if args.labels_out:
        write_pgm(args.labels_out, labels.labels)
    print("wrote %s (%dx%d)" % (args.out, cart.width, cart.height))
    return 0


def cmd_simulate(args):
    params, psf, dyn, radial_step = config.synthesis_settings(
        args.config, args.freq_khz / 1000.0)
    labels_arr = read_pgm(args.labels)
    geometry = _geometry_from_frame(labels_arr, args.width, args.height, radial_step)
    labels = LabelMap(geometry, labels_arr)
    frame = synth.simulate_bmode(labels, params, psf, dyn, seed=args.seed)
    write_pgm(args.out, frame.samples)
    print("wrote %s" % args.out)
    return 0


def cmd_eval(args):
    _, _, dyn, radial_step = config.synthesis_settings(args.config)
    original = _load_polar(args.original, 512, 512, radial_step)
    decompressed = _load_polar(args.decompressed, 512, 512, radial_step)
    labels = LabelMap(original.geometry, read_pgm(args.labels))
    frame_id = args.frame_id
    rows = []
    inter_o = metrics.inter_tissue_jsd(original, labels, args.bins)
    inter_d = metrics.inter_tissue_jsd(decompressed, labels, args.bins)
    for pair, name in PAIR_NAMES.items():
        rows.append((frame_id, "inter_jsd_original", name, inter_o[pair]))
        rows.append((frame_id, "inter_jsd_decompressed", name, inter_d[pair]))
    intra = metrics.intra_tissue_jsd(original, decompressed, labels, args.bins)
    for cid, v in intra.items():
        rows.append((frame_id, "intra_jsd", CLASS_NAMES[cid], v))
    att = metrics.attenuation_jsd(original, decompressed, labels, args.window, args.bins)
    for cid, v in att.items():
        rows.append((frame_id, "attenuation_jsd", CLASS_NAMES[cid], v))
    if args.pred_labels:
        pred = LabelMap(original.geometry, read_pgm(args.pred_labels))
        for cid in TISSUE_CLASSES:
            for key, v in metrics.overlap_metrics(pred, labels, cid).items():
                rows.append((frame_id, key, CLASS_NAMES[cid], v))
    with open(args.out, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["frame_id", "metric", "class_or_pair", "value"])
        for row in rows:
            writer.writerow([row[0], row[1], row[2], "%.6f" % row[3]])
    _print_summary(rows)
    print("wrote %s" % args.out)
    return 0


def _print_summary(rows):
    groups = {}
    for _, metric, key, value in rows:
        groups.setdefault((metric, key), []).append(value)
    print("%-26s %-18s %s" % ("metric", "class/pair", "mean(std)"))
    print("-" * 60)
    for (metric, key), values in sorted(groups.items()):
        std = statistics.pstdev(values) if len(values) > 1 else 0.0
        print("%-26s %-18s %.3f(%.3f)" % (metric, key, statistics.fmean(values), std))


def cmd_report(args):
    rows = []
    for path in args.csv:
        with open(path, newline="") as f:
            reader = csv.DictReader(f)
            for rec in reader:
                rows.append((rec["frame_id"], rec["metric"],
                             rec["class_or_pair"], float(rec["value"])))
    if not rows:
        print("no rows found", file=sys.stderr)
        return EXIT_IO
    _print_summary(rows)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="usqz",
                                     description="Contour chain-code ultrasound codec")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed=True):
        p.add_argument("--config", default=None, help="key=value synthesis config")
        if seed:
            p.add_argument("--seed", type=int, required=True,
                           help="RNG seed (required; no wall-clock seeding)")

    p = sub.add_parser("phantom", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--scan-lines", type=int, default=256)
    p.add_argument("--samples", type=int, default=384)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--radial-step", type=float, default=0.01)
    p.add_argument("--freq-khz", type=int, default=20000)
    add_common(p)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("train", help="train the tissue classifier")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--window", type=int, default=9)
    add_common(p, seed=False)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compress", help="compress a polar frame")
    p.add_argument("--input", required=True, help="polar frame PGM")
    p.add_argument("--out", required=True)
    p.add_argument("--model", default=None)
    p.add_argument("--from-labels", default=None,
                   help="bypass the classifier with a ground-truth label PGM")
    p.add_argument("--freq-khz", type=int, default=20000)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--window", type=int, default=9)
    add_common(p, seed=False)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="decompress to a Cartesian PGM")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--polar-out", default=None)
    p.add_argument("--labels-out", default=None)
    add_common(p)
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("simulate", help="simulate B-mode from a label PGM")
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--freq-khz", type=int, default=20000)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="compare original vs decompressed frames")
    p.add_argument("--original", required=True)
    p.add_argument("--decompressed", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--pred-labels", default=None)
    p.add_argument("--out", required=True, help="CSV output path")
    p.add_argument("--frame-id", default="frame")
    p.add_argument("--bins", type=int, default=metrics.DEFAULT_BINS)
    p.add_argument("--window", type=int, default=32)
    add_common(p, seed=False)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="aggregate eval CSVs into a table")
    p.add_argument("csv", nargs="+")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_IO if isinstance(exc, OSError) else EXIT_GENERIC
    except TopologyFailure as exc:
        print("topology failure: %s" % exc, file=sys.stderr)
        return EXIT_TOPOLOGY
    except UnencodableDelta as exc:
        print("encodability failure: %s" % exc, file=sys.stderr)
        return EXIT_ENCODABILITY
    except UsqzError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_GENERIC


if __name__ == "__main__":
    sys.exit(main())
