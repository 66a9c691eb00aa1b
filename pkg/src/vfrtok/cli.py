"""Command-line front end.

Exit codes: 0 success, 2 validation error, 3 file format error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import chunking, io, pipeline, rad
from .core import FrameSequence, TokenSequence, compute_rates
from .duration import DEFAULT_LAMBDA, DurationParams, decode_budget, decode_free
from .errors import FormatError, VfrError
from .hazard import BoundaryDecodeConfig, HazardSequence, decode_boundaries
from .ssq import SsqConfig

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_FORMAT = 3


def _column(x: FrameSequence, what: str) -> np.ndarray:
    if x.dim != 1:
        raise VfrError(f"{what} file must have D=1, got D={x.dim}")
    return x.data[:, 0].astype(np.float64)


def _boundary_cfg(args) -> BoundaryDecodeConfig:
    return BoundaryDecodeConfig(
        tau_h=args.tau_h,
        min_gap=args.min_gap,
        max_gap=args.max_gap,
        mode=getattr(args, "decode", "greedy"),
        seed=args.seed,
    )


def _token_mode(t) -> str:
    if t.durations is not None:
        return "durations"
    return "length" if t.total_frames is not None else "tokens"


def _pipeline_cfg(args, tokens=None) -> pipeline.PipelineConfig:
    mode = args.mode or (_token_mode(tokens) if tokens is not None else "durations")
    # a token file already fixes the quantizer shape
    L, K = (tokens.num_streams, tokens.levels) if tokens is not None else (args.L, args.K)
    return pipeline.PipelineConfig(
        ssq=SsqConfig(L=L, K=K),
        boundary=_boundary_cfg(args),
        mode=mode,
        compressor_seed=args.seed,
        d_min=args.d_min,
        rad=rad.RadConfig(args.tau, args.n_probe) if getattr(args, "index", None) else None,
    )


def _emit(obj, out=None) -> None:
    text = json.dumps(obj, default=lambda v: v.item() if hasattr(v, "item") else str(v))
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)


def cmd_boundaries(args) -> None:
    h = HazardSequence.from_probs(_column(io.read_frames(args.hazard), "hazard"))
    b = decode_boundaries(h, _boundary_cfg(args))
    _emit({"ends": list(b.ends), "num_chunks": b.num_chunks, "num_frames": len(h)}, args.out)


def cmd_durations(args) -> None:
    mu = _column(io.read_frames(args.mu_free), "mu_free")
    params = DurationParams(mu, d_min=args.d_min, lam=args.lam)
    if args.T is not None:
        d = decode_budget(params, args.T)
    else:
        d = decode_free(params)
    if args.tokens:
        t = io.read_tokens(args.tokens)
        t = TokenSequence(t.indices, t.levels, durations=tuple(d), total_frames=t.total_frames)
        io.write_tokens(args.out, t)
    else:
        _emit({"durations": d.tolist(), "total": int(d.sum())}, args.out)


def cmd_encode(args) -> None:
    x = io.read_frames(args.frames)
    cfg = _pipeline_cfg(args)
    if args.alignment:
        targets = chunking.alignment_to_targets(chunking.read_alignment(args.alignment))
        res = pipeline.encode(x, cfg, boundaries=targets.boundaries)
    elif args.hazard:
        h = HazardSequence.from_probs(_column(io.read_frames(args.hazard), "hazard"))
        res = pipeline.encode(x, cfg, hazard=h)
    else:
        raise VfrError("encode needs --alignment or --hazard")
    io.write_tokens(args.out, res.tokens)
    rates = pipeline.rate_report(res.tokens, x.num_frames, x.frame_rate_hz, args.max_gap)
    _emit(
        {
            "num_tokens": res.tokens.num_tokens,
            "frame_rate_hz": rates.frame_rate_hz,
            "bitrate_bps": rates.bitrate_bps,
            "duration_overhead_bps": rates.duration_overhead_bps,
        }
    )


def cmd_decode(args) -> None:
    t = io.read_tokens(args.tokens)
    cfg = _pipeline_cfg(args, t)
    model = None
    if args.mu_free:
        mu = _column(io.read_frames(args.mu_free), "mu_free")
        model = lambda tokens: DurationParams(mu, d_min=args.d_min, lam=args.lam)  # noqa: E731
    index = pool = None
    if args.index:
        index = rad.IvfIndex.load(args.index)
        pool = rad.LatentPool(io.read_frames(args.pool).data)
    res = pipeline.decode(
        t, cfg, args.dim, target_T=args.target_T, duration_model=model, index=index, pool=pool,
        frame_rate_hz=args.frame_rate,
    )
    io.write_frames(args.out, res.frames)
    summary = {"num_frames": res.num_frames, "num_tokens": t.num_tokens}
    if res.rad is not None:
        summary["replaced"] = res.rad.num_replaced
    _emit(summary)


def cmd_rad_build(args) -> None:
    vectors = io.read_frames(args.pool).data
    ids = rad.read_ids(args.ids) if args.ids else None
    pool = rad.LatentPool(vectors, ids)
    idx = rad.build_index(pool, args.n_list, args.train_size, args.seed, min(args.n_probe, args.n_list))
    idx.save(args.out)
    _emit({"n_list": idx.n_list, "num_vectors": idx.num_vectors, "dim": idx.dim})


def cmd_rad_apply(args) -> None:
    z = io.read_frames(args.latents)
    pool = rad.LatentPool(io.read_frames(args.pool).data)
    index = rad.IvfIndex.load(args.index)
    res = rad.rad_apply(z.data, index, pool, rad.RadConfig(args.tau, args.n_probe))
    io.write_frames(args.out, FrameSequence(res.latents, z.frame_rate_hz))
    _emit({"num_rows": int(res.replaced.size), "replaced": res.num_replaced})


def cmd_bitrate(args) -> None:
    if args.tokens:
        t = io.read_tokens(args.tokens)
        T = args.num_frames if args.num_frames is not None else t.total_frames
        if T is None:
            T = int(sum(t.durations)) if t.durations else None
        if T is None:
            raise VfrError("cannot infer the frame count; pass --num-frames")
        r = pipeline.rate_report(t, T, args.base_rate, args.max_duration)
    else:
        if args.rate is None:
            raise VfrError("bitrate needs --rate or a token file")
        r = compute_rates(args.rate, args.L, args.K, args.max_duration or 1)
    _emit(
        {
            "frame_rate_hz": r.frame_rate_hz,
            "bits_per_token": r.bits_per_token,
            "bitrate_bps": r.bitrate_bps,
            "bitrate_kbps": r.bitrate_kbps,
            "duration_overhead_bps": r.duration_overhead_bps,
        }
    )


def cmd_synth(args) -> None:
    if args.kind == "periodic":
        x, b = pipeline.synth_periodic(args.T, args.period, args.dim, args.seed)
        io.write_frames(args.out, x)
        if args.alignment:
            d = np.diff(np.asarray(b.ends), prepend=-1)
            spans = [chunking.AlignmentSpan("x", e - k + 1, e) for e, k in zip(b.ends, d)]
            chunking.write_alignment(args.alignment, spans)
        _emit({"num_frames": x.num_frames, "num_chunks": b.num_chunks})
    elif args.kind == "nb-durations":
        d = pipeline.synth_nb_durations(args.mu, args.alpha, args.n, args.seed, args.d_min)
        io.write_frames(args.out, FrameSequence(d.astype(np.float32)[:, None]))
        _emit({"n": int(d.size), "mean": float(d.mean())})
    elif args.kind == "clustered-latents":
        pool, _ = pipeline.synth_clustered_latents(args.clusters, args.M, args.dim, args.spread, args.seed)
        io.write_frames(args.out, FrameSequence(pool.vectors))
        if args.ids:
            rad.write_ids(args.ids, pool.ids)
        _emit({"num_vectors": len(pool), "dim": pool.dim})
    elif args.kind == "alignment":
        spans = pipeline.synth_alignment(args.n, args.seed)
        chunking.write_alignment(args.out, spans)
        _emit({"num_spans": len(spans), "num_frames": int(spans[-1].end) + 1})


def _add_boundary_flags(p) -> None:
    p.add_argument("--tau-h", type=float, default=0.5)
    p.add_argument("--min-gap", type=int, default=1)
    p.add_argument("--max-gap", type=int, default=None)


def _add_codec_flags(p) -> None:
    p.add_argument("--mode", choices=pipeline.MODES, default=None, help="decode infers it from the token file")
    p.add_argument("--L", type=int, default=32)
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--d-min", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tau", type=float, default=97.0)
    p.add_argument("--n-probe", type=int, default=16)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vfrtok", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("boundaries", help="decode chunk ends from a D=1 hazard file")
    p.add_argument("hazard")
    _add_boundary_flags(p)
    p.add_argument("--mode", dest="decode", choices=["greedy", "sample"], default="greedy")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_boundaries)

    p = sub.add_parser("durations", help="decode durations from a D=1 mu_free file")
    p.add_argument("mu_free")
    p.add_argument("--T", type=int, default=None, help="frame budget; free decoding when omitted")
    p.add_argument("--d-min", type=int, default=1)
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--tokens", help="attach the durations to this token file")
    p.add_argument("--out")
    p.set_defaults(func=cmd_durations)

    p = sub.add_parser("encode", help="frames to tokens")
    p.add_argument("frames")
    p.add_argument("--out", required=True)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--alignment")
    src.add_argument("--hazard")
    _add_boundary_flags(p)
    _add_codec_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="tokens to frames")
    p.add_argument("tokens")
    p.add_argument("--out", required=True)
    p.add_argument("--dim", type=int, required=True, help="feature width D used at encode time")
    p.add_argument("--target-T", type=int, default=None)
    p.add_argument("--mu-free", help="D=1 file of free mean durations, one per token")
    p.add_argument("--frame-rate", type=float, default=50.0)
    p.add_argument("--index")
    p.add_argument("--pool")
    _add_boundary_flags(p)
    _add_codec_flags(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("rad-build", help="build an IVF index over a latent pool")
    p.add_argument("pool")
    p.add_argument("--out", required=True)
    p.add_argument("--ids")
    p.add_argument("--n-list", type=int, default=64)
    p.add_argument("--n-probe", type=int, default=16)
    p.add_argument("--train-size", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_rad_build)

    p = sub.add_parser("rad-apply", help="retrieval-augmented replacement of latents")
    p.add_argument("latents")
    p.add_argument("--pool", required=True)
    p.add_argument("--index", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tau", type=float, default=97.0)
    p.add_argument("--n-probe", type=int, default=16)
    p.set_defaults(func=cmd_rad_apply)

    p = sub.add_parser("bitrate", help="token rate and bitrate arithmetic")
    p.add_argument("tokens", nargs="?")
    p.add_argument("--rate", type=float, help="tokens per second")
    p.add_argument("--L", type=int, default=32)
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--max-duration", "--max-gap", dest="max_duration", type=int, default=None)
    p.add_argument("--num-frames", type=int, default=None)
    p.add_argument("--base-rate", type=float, default=50.0)
    p.set_defaults(func=cmd_bitrate)

    p = sub.add_parser("synth", help="write a synthetic corpus")
    p.add_argument("kind", choices=["periodic", "nb-durations", "clustered-latents", "alignment"])
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--T", type=int, default=64)
    p.add_argument("--period", type=int, default=4)
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--alignment")
    p.add_argument("--mu", type=float, default=5.0)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--d-min", type=int, default=0)
    p.add_argument("--clusters", type=int, default=4)
    p.add_argument("--M", type=int, default=100)
    p.add_argument("--spread", type=float, default=0.05)
    p.add_argument("--ids")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_VALIDATION if e.code else EXIT_OK
    try:
        args.func(args)
    except FormatError as e:
        print(f"format error: {e}", file=sys.stderr)
        return EXIT_FORMAT
    except VfrError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
