"""Command-line entry point: ``freev <verb> ...``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from threadpoolctl import threadpool_limits

from .config import Config, load_config
from .dsp import PhaseSpectrogram, amplitude, log_compress, polar_split, stft
from .errors import FormatError, FreeVError, SignalError
from .fixtures import FixtureKind, fixture_set
from .io import read_fvt, read_wav, write_fvt, write_wav
from .losses import waveform_losses
from .melbank import MelSpectrogram, apply_mel, build_filterbank
from .metrics.suite import aggregate, evaluate_pair, format_table
from .net import APNET2_OVERRIDES, GeneratorWeights, gen_weights, parameter_counts, vocode
from .prior import BenchReport, PriorMethod, bench_priors


def _threads() -> int | None:
    raw = os.environ.get("FREEV_THREADS")
    if raw is None:
        return None
    try:
        n = int(raw)
    except ValueError:
        raise FreeVError(f"FREEV_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise FreeVError(f"FREEV_THREADS must be >= 1, got {n}")
    return n


def _write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def cmd_features(args, cfg: Config) -> int:
    fb = build_filterbank(cfg.spectral, cfg.mel)
    w = read_wav(args.wav, expected_rate=cfg.spectral.sample_rate)
    amp = amplitude(w, cfg.spectral)
    mel = apply_mel(amp, fb)
    prefix = args.out
    outputs = {
        "amp": amp.frames,
        "logamp": log_compress(amp.frames),
        "mel": mel.frames,
    }
    for name, arr in outputs.items():
        path = f"{prefix}.{name}.fvt"
        write_fvt(path, arr)
        print(f"{path}: {list(arr.shape)}")
    return 0


def _bench_clips(args, cfg: Config):
    if args.clips:
        paths = sorted(Path(args.clips).glob("*.wav"))
        if not paths:
            raise SignalError(f"no .wav files in {args.clips}")
        return [read_wav(p, expected_rate=cfg.spectral.sample_rate) for p in paths]
    if args.fixtures is None or args.fixtures < 1:
        raise SignalError("need --clips DIR or --fixtures N with N >= 1")
    clips = fixture_set(args.fixtures, FixtureKind.HARMONIC_VOICE, args.duration, args.seed)
    if cfg.spectral.sample_rate != clips[0].sample_rate:
        raise SignalError("fixtures are generated at 22050 Hz; use --clips for other rates")
    return clips


def cmd_bench_prior(args, cfg: Config) -> int:
    fb = build_filterbank(cfg.spectral, cfg.mel)
    methods = PriorMethod.parse_list(args.methods)
    report = bench_priors(_bench_clips(args, cfg), fb, methods, repeats=args.repeats)
    table = report.to_table()
    print(table)
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n")
        Path(args.out).with_suffix(".txt").write_text(table + "\n")
    return 0


def cmd_vocode(args, cfg: Config) -> int:
    fb = build_filterbank(cfg.spectral, cfg.mel)
    weights = GeneratorWeights.load(args.weights)
    mel = MelSpectrogram(read_fvt(args.mel))
    override = None
    if args.oracle_phase:
        ref = read_wav(args.oracle_phase, expected_rate=cfg.spectral.sample_rate)
        _, phase = polar_split(stft(ref, cfg.spectral))
        n = mel.frames.shape[0]
        if phase.frames.shape[0] < n:
            raise SignalError("oracle-phase reference is shorter than the mel input")
        override = PhaseSpectrogram(phase.frames[:n], cfg.spectral)
    result = vocode(mel, fb, weights, phase_override=override)
    write_wav(args.out, result.waveform)
    print(f"{args.out}: {len(result.waveform)} samples, sha256 {result.checksum()}")
    return 0


def _eval_pair(ref_path, deg_path, cfg, fb):
    ref = read_wav(ref_path, expected_rate=cfg.spectral.sample_rate)
    deg = read_wav(deg_path, expected_rate=cfg.spectral.sample_rate)
    return evaluate_pair(ref, deg, fb)


def cmd_eval(args, cfg: Config) -> int:
    fb = build_filterbank(cfg.spectral, cfg.mel)
    refs = {p.name: p for p in sorted(Path(args.ref).glob("*.wav"))}
    degs = {p.name: p for p in sorted(Path(args.deg).glob("*.wav"))}
    names = sorted(set(refs) & set(degs))
    if not names:
        raise SignalError(f"no matching .wav names in {args.ref} and {args.deg}")
    workers = _threads() or 1
    with ThreadPoolExecutor(max_workers=workers) as pool:
        reports = list(pool.map(lambda n: _eval_pair(refs[n], degs[n], cfg, fb), names))
    summary = aggregate(reports)
    print(format_table(summary))
    if args.out:
        _write_json(args.out, {
            "kind": "metric-eval",
            "pairs": {n: r.to_dict() for n, r in zip(names, reports)},
            "aggregate": summary,
        })
    return 0


def cmd_losses(args, cfg: Config) -> int:
    fb = build_filterbank(cfg.spectral, cfg.mel)
    ref = read_wav(args.ref, expected_rate=cfg.spectral.sample_rate)
    pred = read_wav(args.pred, expected_rate=cfg.spectral.sample_rate)
    breakdown = waveform_losses(pred, ref, fb, cfg.loss)
    print(json.dumps(breakdown.to_dict(), indent=2, sort_keys=True))
    if args.out:
        _write_json(args.out, breakdown.to_dict())
    return 0


def _parse_overrides(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise FreeVError(f"--set expects key=value, got {item!r}")
        try:
            out[key] = int(value)
        except ValueError:
            raise FreeVError(f"--set {key}: value must be an integer") from None
    return out


def cmd_gen_weights(args, cfg: Config) -> int:
    overrides = _parse_overrides(args.set)
    overrides.setdefault("n_mels", cfg.mel.n_mels)
    overrides.setdefault("n_freq", cfg.spectral.n_freq)
    overrides.setdefault("asp_dim", overrides["n_freq"])
    weights = gen_weights(args.seed, overrides)
    weights.save(args.out)
    ours = parameter_counts(weights.manifest)
    apnet2 = parameter_counts({**weights.manifest, **APNET2_OVERRIDES})
    print(f"{args.out}: seed {args.seed}, {ours['total']:,} parameters "
          f"(PSP {ours['psp']:,}, ASP {ours['asp']:,}); "
          f"APNet2-shaped ASP would total {apnet2['total']:,}")
    return 0


def cmd_plot(args, cfg: Config) -> int:
    from .plot import plot_reports

    reports = []
    for path in args.reports:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: not JSON ({exc})") from None
        if data.get("kind") != BenchReport.kind:
            raise FormatError(f"{path}: not a prior-bench report")
        reports.append(data)
    summary = plot_reports(reports, args.out, labels=[Path(p).stem for p in args.reports])
    print(f"{args.out}: {summary.n_series} series, {summary.n_bars} bars")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="freev", description="Vocoder DSP toolkit and benchmarks.")
    parser.add_argument("--config", help="TOML file with [spectral], [mel] and [loss] tables")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="amplitude, log-amplitude and mel tensors of a WAV")
    p.add_argument("wav")
    p.add_argument("--out", required=True, help="output prefix; writes PREFIX.{amp,logamp,mel}.fvt")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("bench-prior", help="time and score amplitude-prior methods")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--clips", help="directory of mono WAV clips")
    src.add_argument("--fixtures", type=int, help="number of synthetic voice fixtures")
    p.add_argument("--duration", type=float, default=2.0, help="fixture length in seconds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--methods", default="nnls,ls,pi,pi-abs")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--out", help="JSON report path (a .txt table is written next to it)")
    p.set_defaults(func=cmd_bench_prior)

    p = sub.add_parser("vocode", help="synthesise a waveform from a mel tensor")
    p.add_argument("--weights", required=True)
    p.add_argument("--mel", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--oracle-phase", help="take the phase from this WAV instead of the PSP branch")
    p.set_defaults(func=cmd_vocode)

    p = sub.add_parser("eval", help="objective metrics over paired WAV directories")
    p.add_argument("--ref", required=True)
    p.add_argument("--deg", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("losses", help="generator loss breakdown for a predicted WAV")
    p.add_argument("--ref", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_losses)

    p = sub.add_parser("gen-weights", help="write reproducible random generator weights")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="manifest override, e.g. --set psp_blocks=2")
    p.set_defaults(func=cmd_gen_weights)

    p = sub.add_parser("plot", help="SVG chart of one or more bench reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        limit = _threads()
        with threadpool_limits(limits=limit):
            return args.func(args, cfg)
    except (FreeVError, OSError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"freev {args.command}: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
