"""Command line entry point: ``avseld <command> ...``.

Exit codes: 0 success, 1 validation failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys
import textwrap
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from avseld import augment as aug
from avseld import labels, metrics, synth
from avseld.core import FrameGeometry
from avseld.doaval import validate_scene
from avseld.errors import AvseldError
from avseld.pngseq import (
    QuarterTiledFrame,
    list_frames,
    read_frame,
    read_sidecar,
    sidecar,
    write_sidecar,
)
from avseld.wavio import atomic_dir, atomic_path, read_foa, write_foa

log = logging.getLogger("avseld")

JOBS_ENV = "AVSELD_JOBS"

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2

FORMATS = """\
file formats:
  metadata CSV    one row per active source and 100 ms frame, no header:
                  frame,class,source,azimuth,elevation  (integers, degrees;
                  azimuth in [-180, 180) counterclockwise, elevation in [-90, 90])
  FOA WAV         4 channels, ACN order (W, Y, Z, X), SN3D, PCM16 or float32
  frame directory zero-padded PNG (or .npy) equirectangular frames, width = 2 x height,
                  plus an optional frames.json sidecar (fps, width, height, count)
  RIR manifest    path,azimuth,elevation,distance,room_id per line; paths relative to
                  the manifest, each a 4-channel ACN/SN3D WAV; or the word 'anechoic'
  asset manifest  audio_path,class_idx[,tile_frames_dir] per line (mono WAVs); pass the
                  file or a directory containing assets.csv
  boxes CSV       frame,cx,cy,w,h with normalised box centre and size
  tensor file     8 little-endian float32 header values (magic, version, d0..d3, 0, 0)
                  followed by the float32 payload in C order
"""


def default_jobs() -> int:
    try:
        return max(1, int(os.environ.get(JOBS_ENV, "1")))
    except ValueError:
        return 1


class UsageError(Exception):
    pass


# augment ---------------------------------------------------------------------

def _augment_frames(frame_paths, out_dirs, jobs):
    """Write every frame in its eight transformed versions."""
    transforms = aug.augmentation_set()

    def work(path):
        if path.suffix == ".npy":
            frame = np.load(path)
            g = FrameGeometry(frame.shape[1], frame.shape[0])
            for t, d in zip(transforms, out_dirs):
                np.save(d / path.name, aug.transform_frame(t, frame, g))
            return
        frame = read_frame(path)
        FrameGeometry(frame.shape[1], frame.shape[0])
        tiled = QuarterTiledFrame(frame)
        name = path.with_suffix(".png").name
        for t, d in zip(transforms, out_dirs):
            (d / name).write_bytes(tiled.png(t.quarter_turns, t.elevation_flip))

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as pool:
            list(pool.map(work, frame_paths))
    else:
        for p in frame_paths:
            work(p)


def cmd_augment(args) -> int:
    clip, subtype = read_foa(args.audio)
    events = labels.read_metadata(args.meta)
    stem = args.name or Path(args.audio).stem
    out = Path(args.out)
    frame_paths = list_frames(args.frames) if args.frames else []
    meta_sidecar = read_sidecar(args.frames) if args.frames else {}

    with contextlib.ExitStack() as stack:
        video_dirs = []
        if args.frames:
            video_dirs = [
                stack.enter_context(atomic_dir(out / "video" / f"{stem}_t{t.index}"))
                for t in aug.augmentation_set()
            ]
            _augment_frames(frame_paths, video_dirs, args.jobs)
            if meta_sidecar:
                for d in video_dirs:
                    write_sidecar(d, meta_sidecar)
        for t in aug.augmentation_set():
            name = f"{stem}_t{t.index}"
            write_foa(out / "foa" / f"{name}.wav", aug.transform_foa(t, clip), subtype)
            labels.write_metadata(aug.transform_metadata(t, events), out / "metadata" / f"{name}.csv")
            log.info("wrote %s (%s)", name, t)
    return EXIT_OK


# synth -----------------------------------------------------------------------

def scene_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])


def _load_bank(spec: str, sr: int) -> synth.RirBank:
    if spec == "anechoic":
        return synth.anechoic_bank(sr)
    return synth.load_rir_bank(spec)


def write_scene(out: Path, name: str, spec, bank, video: bool, fps: float, g: FrameGeometry):
    clip, events = synth.render_audio(spec, bank)
    write_foa(out / "foa" / f"{name}.wav", clip)
    synth.emit_metadata(events, out / "metadata" / f"{name}.csv")
    if video:
        with atomic_dir(out / "video" / name) as d:
            n = 0
            for n, frame in enumerate(synth.render_video(spec, g, fps, bank), start=1):
                (d / f"{n - 1:06d}.png").write_bytes(QuarterTiledFrame(frame).png())
            write_sidecar(d, sidecar(n, fps, g))


def cmd_synth(args) -> int:
    assets = synth.load_assets(args.assets)
    bank = _load_bank(args.rirs, args.sr)
    if bank.sample_rate != args.sr:
        raise UsageError(f"RIR bank is {bank.sample_rate} Hz but --sr is {args.sr}")
    g = FrameGeometry(args.width, args.width // 2)
    out = Path(args.out)

    def work(i):
        name = f"synth_mix{i + 1:03d}"
        spec = synth.sample_scene(
            scene_seed(args.seed, i), assets, bank, args.duration, args.max_polyphony, args.sr
        )
        write_scene(out, name, spec, bank, not args.no_video, args.fps, g)
        log.info("wrote %s (%d events)", name, len(spec.events))

    indices = range(args.start_index, args.start_index + args.count)
    if args.jobs > 1:
        with ThreadPoolExecutor(args.jobs) as pool:
            list(pool.map(work, indices))
    else:
        for i in indices:
            work(i)
    return EXIT_OK


# encoders --------------------------------------------------------------------

def cmd_encode_accdoa(args) -> int:
    events = labels.read_metadata(args.meta)
    n = args.frames if args.frames is not None else labels.n_frames(events)
    values = labels.encode_multi_accdoa(events, n)
    labels.write_tensor(args.out, values, labels.ACCDOA_MAGIC)
    print(f"{args.out}: {values.shape[0]}x{values.shape[1]}x{values.shape[2]}x{values.shape[3]}")
    return EXIT_OK


def cmd_encode_visual(args) -> int:
    boxes = labels.read_boxes(args.boxes)
    n = args.frames if args.frames is not None else max(boxes, default=-1) + 1
    values = labels.encode_visual_sequence(boxes, n)
    labels.write_tensor(args.out, values, labels.VISUAL_MAGIC)
    print(f"{args.out}: {values.shape[0]}x{values.shape[1]}x{values.shape[2]}x{values.shape[3]}")
    return EXIT_OK


# eval ------------------------------------------------------------------------

def _fmt(x) -> str:
    return "undefined" if x is None else f"{x:.4f}"


def _score_row(name, s: metrics.SeldScores) -> list[str]:
    return [name, f"{s.er20:.4f}", f"{s.f20:.4f}", _fmt(s.le), f"{s.lr:.4f}"]


def _pair_files(ref: Path, pred: Path) -> list[tuple[str, Path, Path]]:
    if ref.is_file():
        return [(ref.stem, ref, pred)]
    pairs = []
    for r in sorted(ref.glob("*.csv")):
        pairs.append((r.stem, r, pred / r.name))
    if not pairs:
        raise UsageError(f"no metadata files in {ref}")
    return pairs


def cmd_eval(args) -> int:
    pairs = _pair_files(Path(args.ref), Path(args.pred))
    total = metrics.SeldEvaluator(args.threshold, args.segment, args.average)
    rows = []
    for name, ref_path, pred_path in pairs:
        ref = labels.read_metadata(ref_path)
        if pred_path.exists():
            pred = labels.read_metadata(pred_path)
        else:
            log.warning("no prediction for %s, scoring it as empty", name)
            pred = []
        per_file = metrics.SeldEvaluator(args.threshold, args.segment, args.average)
        per_file.update(ref, pred)
        total.update(ref, pred)
        rows.append(_score_row(name, per_file.scores()))
    overall = total.scores()
    rows.append(_score_row("ALL", overall))

    header = ["file", "ER20", "F20", "LE", "LR"]
    widths = [max(len(r[i]) for r in rows + [header]) for i in range(len(header))]
    for r in [header] + rows:
        print("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(r, widths))))

    print()
    print(f"{'class':>5}  {'LE':>9}  {'LR':>7}  {'F20':>7}  {'n_ref':>6}")
    for cls, c in enumerate(overall.classwise):
        if c.n_ref or c.fp:
            print(f"{cls:>5}  {_fmt(c.le):>9}  {_fmt(c.lr):>7}  {_fmt(c.f):>7}  {c.n_ref:>6}")

    if args.csv:
        lines = [",".join(header)] + [",".join(r) for r in rows]
        lines.append("")
        lines.append("class,LE,LR,F20,TP,FP,FN,n_ref,matched")
        for cls, c in enumerate(overall.classwise):
            lines.append(
                f"{cls},{_fmt(c.le)},{_fmt(c.lr)},{_fmt(c.f)},{c.tp},{c.fp},{c.fn},{c.n_ref},{c.matched}"
            )
        with atomic_path(args.csv) as tmp:
            tmp.write_text("\n".join(lines) + "\n")
    return EXIT_OK


# validate-doa ----------------------------------------------------------------

def cmd_validate_doa(args) -> int:
    clip, _ = read_foa(args.audio)
    events = labels.read_metadata(args.meta)
    report = validate_scene(clip, events, args.tolerance, args.min_run)
    print(report.format())
    return EXIT_OK if report.passed else EXIT_FAILED


# parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avseld",
        description="Augment, synthesise, encode, score and validate spatial audio-visual SELD data.",
        epilog=FORMATS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", default="WARNING", help="logging level on stderr (default WARNING)")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, help_text, epilog=""):
        return sub.add_parser(
            name,
            help=help_text,
            description=help_text,
            epilog=textwrap.dedent(epilog) + "\n" + FORMATS,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )

    jobs_help = f"parallel workers (default ${JOBS_ENV} or 1)"

    p = add(
        "augment",
        "Write all 8 channel-swap / pixel-swap versions (identity included) of one recording.",
        """\
        outputs, for t = 0..7 (t0 is the identity, t1 rotates azimuth by -90 degrees,
        t4..t7 additionally flip elevation):
          OUT/foa/STEM_tN.wav  OUT/metadata/STEM_tN.csv  OUT/video/STEM_tN/ (with --frames)
        """,
    )
    p.add_argument("--audio", required=True, help="4-channel FOA WAV")
    p.add_argument("--meta", required=True, help="metadata CSV of the recording")
    p.add_argument("--frames", help="directory of equirectangular frames (optional)")
    p.add_argument("--out", required=True, help="output root directory")
    p.add_argument("--name", help="output stem (default: audio file stem)")
    p.add_argument("--jobs", type=int, default=default_jobs(), help=jobs_help)
    p.set_defaults(func=cmd_augment)

    p = add(
        "synth",
        "Generate seeded synthetic audio-visual scenes.",
        """\
        outputs per scene i: OUT/foa/synth_mixNNN.wav (4-channel PCM16),
        OUT/metadata/synth_mixNNN.csv and OUT/video/synth_mixNNN/ (PNG frames + frames.json).
        Encode a frame directory with an external tool, e.g.
          ffmpeg -framerate 29.97 -i OUT/video/synth_mix001/%06d.png -i OUT/foa/synth_mix001.wav out.mp4
        """,
    )
    p.add_argument("--seed", type=int, default=0, help="base seed; scene i uses a seed derived from (seed, i)")
    p.add_argument("--count", type=int, default=1, help="number of scenes (default 1)")
    p.add_argument("--start-index", type=int, default=0, help="index of the first scene (default 0)")
    p.add_argument("--duration", type=float, default=synth.DEFAULT_DURATION, help="seconds per scene (default 30)")
    p.add_argument("--max-polyphony", type=int, default=synth.DEFAULT_POLYPHONY, help="max concurrent events (default 3)")
    p.add_argument("--assets", required=True, help="asset manifest or directory with assets.csv")
    p.add_argument("--rirs", default="anechoic", help="RIR manifest, or 'anechoic' for the built-in delta bank")
    p.add_argument("--out", required=True, help="output root directory")
    p.add_argument("--sr", type=int, default=24000, help="sample rate in Hz (default 24000)")
    p.add_argument("--fps", type=float, default=synth.DEFAULT_FPS, help="video frame rate (default 29.97)")
    p.add_argument("--width", type=int, default=1920, help="frame width; height is width/2 (default 1920)")
    p.add_argument("--no-video", action="store_true", help="skip rendering frames")
    p.add_argument("--jobs", type=int, default=default_jobs(), help=jobs_help)
    p.set_defaults(func=cmd_synth)

    p = add("encode-accdoa", "Encode a metadata CSV as a (T, 3, 13, 3) multi-ACCDOA tensor file.")
    p.add_argument("--meta", required=True, help="metadata CSV")
    p.add_argument("--out", required=True, help="tensor file to write")
    p.add_argument("--frames", type=int, help="number of frames T (default: last labelled frame + 1)")
    p.set_defaults(func=cmd_encode_accdoa)

    p = add("encode-visual", "Encode per-frame boxes as a (T, 2, 6, 37) visual embedding tensor file.")
    p.add_argument("--boxes", required=True, help="boxes CSV (frame,cx,cy,w,h)")
    p.add_argument("--out", required=True, help="tensor file to write")
    p.add_argument("--frames", type=int, help="number of frames T (default: last frame + 1)")
    p.set_defaults(func=cmd_encode_visual)

    p = add(
        "eval",
        "Score predicted metadata against references (ER20, F20, LE, LR).",
        """\
        files are paired by name: REF/x.csv with PRED/x.csv; a missing prediction
        scores as empty. LE prints 'undefined' when no class-matched pair exists.
        """,
    )
    p.add_argument("--ref", required=True, help="reference metadata directory (or file)")
    p.add_argument("--pred", required=True, help="prediction metadata directory (or file)")
    p.add_argument("--threshold", type=float, default=metrics.DOA_THRESHOLD, help="DoA gate in degrees (default 20)")
    p.add_argument("--segment", type=int, default=metrics.SEGMENT_FRAMES, help="frames per segment (default 10)")
    p.add_argument("--average", choices=("macro", "micro"), default="macro", help="class averaging (default macro)")
    p.add_argument("--csv", help="also write per-file and per-class scores to this CSV")
    p.set_defaults(func=cmd_eval)

    p = add(
        "validate-doa",
        "Check that intensity-vector DoA estimates match the labels of single-source stretches.",
        "exit status is 1 when any evaluated run exceeds the tolerance.\n",
    )
    p.add_argument("--audio", required=True, help="4-channel FOA WAV")
    p.add_argument("--meta", required=True, help="metadata CSV")
    p.add_argument("--tolerance", type=float, default=5.0, help="degrees (default 5; use ~10 for measured RIRs)")
    p.add_argument("--min-run", type=int, default=5, help="shortest single-source run evaluated, in frames (default 5)")
    p.set_defaults(func=cmd_validate_doa)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "jobs", 1) < 1:
        print("avseld: --jobs must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, AvseldError, OSError, ValueError) as err:
        print(f"avseld {args.command}: {err}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
