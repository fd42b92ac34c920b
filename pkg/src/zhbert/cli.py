"""Single command-line entry point.

Subcommand groups mirror the library: tok, mask, sched, enc, train,
corpus, bench. All CSV output uses '.' decimals and LF line endings;
floats are written with repr (shortest round-trip), so equal-seed runs
produce byte-identical files. Every artifact-producing command logs the
fully-resolved arguments next to its outputs as resolved.cfg.

Exit codes: 0 ok, 2 usage, 3 config error, 4 input error, 5 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import torch

from . import CONFIG_SCHEMA_VERSION, __version__
from .benchkit import BenchBucket, sts_score, throughput
from .configfile import (
    curriculum_from,
    encoder_config_from,
    optimizer_config_from,
    read_config,
    schedule_config_from,
)
from .corpus.dedup import dedup
from .corpus.manifest import parse_manifest
from .corpus.mixture import MixtureStream, mixture_sampler
from .corpus.records import read_records, record_files, write_records
from .encoder.checkpoint import load_checkpoint, save_checkpoint
from .encoder.model import forward, init_checkpoint
from .encoder.packing import pack_sequences
from .errors import (
    EXIT_CONFIG,
    EXIT_INPUT,
    EXIT_OK,
    EXIT_RUNTIME,
    ConfigError,
    InputError,
    ZhbertError,
)
from .optimsched import Phase, ScheduleConfig, eta_at, trapezoid_eta
from .seeding import derive_seed
from .tokenizer.bpe import train_bpe
from .tokenizer.segment import RunSegmenter
from .tokenizer.stats import compression_stats
from .tokenizer.store import load_tokenizer, save_tokenizer
from .trainloop import StagePlan, pseudo_perplexity, run_stage
from .wordmask import MaskingCurriculum, curriculum_rate, group_words, realize_mask


def _f(x) -> str:
    return repr(float(x))


def _write_lines(path, lines) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in lines:
            fh.write(line)
            fh.write("\n")


def _emit(lines, out_path) -> None:
    if out_path:
        _write_lines(out_path, lines)
    else:
        for line in lines:
            print(line)


def _log_resolved(args, target_dir) -> None:
    """Lossless record of the run's resolved arguments."""
    skip = {"func", "command_name"}
    lines = ["[command]", f"name = {args.command_name}", "", "[args]"]
    for key in sorted(vars(args)):
        if key in skip:
            continue
        lines.append(f"{key} = {getattr(args, key)!r}")
    Path(target_dir).mkdir(parents=True, exist_ok=True)
    _write_lines(Path(target_dir) / "resolved.cfg", lines)


def _load_docs(path: str) -> list[str]:
    """Documents from a .rec file, or a directory of .rec/.txt files
    (one document per .txt file), file names sorted."""
    p = Path(path)
    if p.is_file():
        return read_records(p)
    if not p.is_dir():
        raise InputError(f"corpus path {p} does not exist")
    docs: list[str] = []
    rec_files = sorted(p.glob("*.rec"))
    txt_files = sorted(p.glob("*.txt"))
    if not rec_files and not txt_files:
        raise InputError(f"no .rec or .txt files in {p}")
    for f in rec_files:
        docs.extend(read_records(f))
    for f in txt_files:
        docs.append(f.read_text(encoding="utf-8"))
    return docs


def _source_path(manifest_path: str, src_path: str) -> Path:
    p = Path(src_path)
    return p if p.is_absolute() else Path(manifest_path).parent / p


# -- tok ---------------------------------------------------------------------


def cmd_tok_train(args) -> int:
    docs = _load_docs(args.corpus)
    dictionary: list[str] = []
    if args.dict:
        dictionary = [
            w.strip()
            for w in Path(args.dict).read_text(encoding="utf-8").splitlines()
            if w.strip()
        ]
    model = train_bpe(
        docs,
        args.size,
        "round_to_64" if args.round64 else "exact",
        segmenter=RunSegmenter(dictionary),
        sample_fraction=args.sample_fraction,
        sample_seed=args.seed,
    )
    save_tokenizer(model, args.out)
    _log_resolved(args, args.out)
    print(f"trained vocab of {model.vocab_size} tokens, {len(model.merges)} merges")
    return EXIT_OK


def cmd_tok_encode(args) -> int:
    model = load_tokenizer(args.model)
    text = Path(args.input).read_text(encoding="utf-8")
    ids = model.encode(text)
    _emit([" ".join(str(i) for i in ids)], args.out)
    return EXIT_OK


def cmd_tok_stats(args) -> int:
    model = load_tokenizer(args.model)
    texts = [Path(f).read_text(encoding="utf-8") for f in args.inputs]
    bucket = {"512": "short_512", "8192": "long_8192"}.get(args.bucket)
    if bucket is None:
        raise ConfigError(f"--bucket must be 512 or 8192, got {args.bucket!r}")
    report = compression_stats(model, texts, bucket)
    print(
        f"bucket={report.bucket} chars={report.char_count} tokens={report.token_count} "
        f"chars_per_token={report.chars_per_token} ({float(report.chars_per_token):.4f})"
    )
    return EXIT_OK


# -- mask --------------------------------------------------------------------


def cmd_mask_preview(args) -> int:
    model = load_tokenizer(args.model)
    text = Path(args.text).read_text(encoding="utf-8")
    ids = [model.cls_id] + model.encode(text) + [model.sep_id]
    curriculum = MaskingCurriculum(total_steps=args.total)
    rate = curriculum_rate(curriculum, args.step)
    grouping = group_words(ids, model)
    plan = realize_mask(grouping, rate, derive_seed(args.seed, "preview"))
    print(f"step {args.step}/{args.total}  target rate {_f(rate)}  "
          f"realized {_f(plan.realized_rate)}")
    for start, end in grouping.spans:
        word = "".join(
            model.vocab[ids[i]].removeprefix(model.continuation_prefix)
            for i in range(start, end + 1)
        )
        masked = start in plan.masked_positions
        kinds = (
            ",".join(plan.replacement[i].value for i in range(start, end + 1))
            if masked
            else "-"
        )
        flag = "MASK" if masked else "    "
        print(f"  [{start:>4}..{end:>4}] {flag} {word!r} {kinds}")
    return EXIT_OK


def cmd_mask_curve(args) -> int:
    curriculum = MaskingCurriculum(
        total_steps=args.total,
        warmup_fraction=args.warmup_fraction,
        r_start=args.r_start,
        r_peak=args.r_peak,
        r_end=args.r_end,
    )
    lines = [
        f"{step},{_f(curriculum_rate(curriculum, step))}" for step in range(args.total + 1)
    ]
    _emit(lines, args.out)
    return EXIT_OK


# -- sched -------------------------------------------------------------------


def cmd_sched_dump(args) -> int:
    if args.kind == "trapezoid":
        cfg = ScheduleConfig(
            total_steps=args.steps,
            phase=Phase.DAMPED_COSINE,
            eta_max=args.emax,
            eta_min=args.emin,
            warmup_start=args.warmup_start,
        )
        lines = [
            f"{s},{_f(trapezoid_eta(cfg, s, ramp_steps=args.ramp_steps, decay_steps=args.decay_steps))}"
            for s in range(args.steps + 1)
        ]
    else:
        try:
            phase = Phase(args.kind)
        except ValueError:
            raise ConfigError(f"unknown schedule kind {args.kind!r}") from None
        cfg = ScheduleConfig(
            total_steps=args.steps,
            phase=phase,
            eta_max=args.emax,
            eta_min=args.emin,
            cycles_n=args.N,
            damping_gamma=args.gamma,
            warmup_steps=args.warmup_steps,
            warmup_start=args.warmup_start,
        )
        lines = [f"{s},{_f(eta_at(cfg, s))}" for s in range(args.steps + 1)]
    _emit(lines, args.out)
    return EXIT_OK


# -- enc ---------------------------------------------------------------------


def cmd_enc_init(args) -> int:
    sections = read_config(args.config, allowed_sections={"encoder"})
    if "encoder" not in sections:
        raise ConfigError(f"{args.config} has no [encoder] section")
    cfg = encoder_config_from(sections["encoder"])
    ckpt = init_checkpoint(cfg, derive_seed(args.seed, "init"))
    save_checkpoint(ckpt, args.out)
    _log_resolved(args, args.out)
    print(f"initialized checkpoint at {args.out}")
    return EXIT_OK


def cmd_enc_forward(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    sequences = []
    for line in Path(args.input).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            sequences.append([int(t) for t in line.split()])
    if not sequences:
        raise InputError(f"no token sequences in {args.input}")
    batch = pack_sequences(sequences)
    with torch.no_grad():
        result = forward(ckpt, batch)
    lines = ["seq,pos,top_id,top_logit"]
    for s, (a, b) in enumerate(batch.seq_slices()):
        for pos in range(b - a):
            row = result.logits[a + pos]
            top = int(row.argmax())
            lines.append(f"{s},{pos},{top},{_f(row[top])}")
    _emit(lines, args.out)
    return EXIT_OK


# -- train -------------------------------------------------------------------


def _load_plan(path: str) -> tuple[StagePlan, dict]:
    sections = read_config(
        path, allowed_sections={"stage", "schedule", "curriculum", "optimizer", "encoder"}
    )
    if "stage" not in sections:
        raise ConfigError(f"{path} has no [stage] section")
    stage_vals = sections["stage"]
    for required in ("stage", "max_len", "batch_sequences", "steps"):
        if required not in stage_vals:
            raise ConfigError(f"{path}: [stage] is missing {required!r}")
    steps = stage_vals["steps"]
    plan = StagePlan(
        stage=stage_vals["stage"],
        max_len=stage_vals["max_len"],
        batch_sequences=stage_vals["batch_sequences"],
        steps=steps,
        schedule=schedule_config_from(sections.get("schedule", {}), steps),
        curriculum=curriculum_from(sections.get("curriculum", {}), steps),
        optimizer=optimizer_config_from(sections.get("optimizer", {})),
        checkpoint_every=stage_vals.get("checkpoint_every", 0),
    )
    return plan, sections


def _load_tokenized_sources(manifest_path: str, tok) -> dict[str, list[list[int]]]:
    manifest = parse_manifest(manifest_path)
    docs_by_source: dict[str, list[list[int]]] = {}
    for src in manifest.sources:
        docs = read_records(_source_path(manifest_path, src.path))
        token_docs = [ids for ids in (tok.encode(d) for d in docs) if ids]
        if not token_docs:
            raise ConfigError(f"source {src.name!r} has no non-empty documents")
        docs_by_source[src.name] = token_docs
    return docs_by_source


def cmd_train_run(args) -> int:
    plan, sections = _load_plan(args.plan)
    tok = load_tokenizer(args.tok)
    if args.ckpt:
        ckpt = load_checkpoint(args.ckpt)
    else:
        if "encoder" not in sections:
            raise ConfigError("no --ckpt given and plan has no [encoder] section")
        enc_vals = dict(sections["encoder"])
        enc_vals.setdefault("vocab_size", tok.vocab_size)
        ckpt = init_checkpoint(encoder_config_from(enc_vals), derive_seed(args.seed, "init"))
    manifest = parse_manifest(args.data)
    docs_by_source = _load_tokenized_sources(args.data, tok)
    stream = MixtureStream(manifest, docs_by_source, derive_seed(args.seed, "stream"))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _log_resolved(args, out)
    result = run_stage(
        plan, stream, ckpt, tok, seed=derive_seed(args.seed, "stage", plan.stage),
        out_dir=str(out),
    )
    lines = ["step,loss,eta,mask_rate"]
    lines += [
        f"{r.step},{_f(r.loss)},{_f(r.eta)},{_f(r.mask_rate)}" for r in result.trace
    ]
    _write_lines(out / "trace.csv", lines)
    first, last = result.trace[0].loss, result.trace[-1].loss
    print(f"stage {plan.stage}: {plan.steps} steps, loss {first:.4f} -> {last:.4f}, "
          f"checkpoint at {out / 'final'}")
    return EXIT_OK


def cmd_train_pppl(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    tok = load_tokenizer(args.tok)
    texts = _load_docs(args.input)
    buckets = [int(b) for b in args.buckets.split(",")]
    report = pseudo_perplexity(
        ckpt, texts, buckets, args.positions, derive_seed(args.seed, "pppl"), tok
    )
    lines = ["bucket,pppl,positions_sampled,n_sequences"]
    lines += [
        f"{e.bucket},{_f(e.pppl)},{e.positions_sampled},{e.n_sequences}"
        for e in report.entries
    ]
    _emit(lines, args.out)
    return EXIT_OK


# -- corpus ------------------------------------------------------------------


def cmd_corpus_pack(args) -> int:
    files = sorted(Path(args.input).glob("*.txt"))
    if not files:
        raise InputError(f"no .txt files in {args.input}")
    docs = [f.read_text(encoding="utf-8") for f in files]
    n = write_records(args.out, docs)
    print(f"packed {n} documents into {args.out}")
    return EXIT_OK


def cmd_corpus_dedup(args) -> int:
    files = record_files(args.input)
    docs: list[str] = []
    file_of: list[int] = []
    for fi, f in enumerate(files):
        for doc in read_records(f):
            docs.append(doc)
            file_of.append(fi)
    result = dedup(
        docs,
        threshold=args.threshold,
        k=args.k,
        shingle_size=args.shingle_size,
        bands=args.bands,
        seed=args.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    kept_by_file: dict[int, list[str]] = {fi: [] for fi in range(len(files))}
    for idx, doc in zip(result.kept_indices, result.kept_docs):
        kept_by_file[file_of[idx]].append(doc)
    for fi, f in enumerate(files):
        write_records(out / f.name, kept_by_file[fi])
    drop_lines = ["index,kept_index,estimated_similarity"]
    drop_lines += [
        f"{d.index},{d.kept_index},{_f(d.estimated_similarity)}" for d in result.drops
    ]
    _write_lines(out / "drops.csv", drop_lines)
    _log_resolved(args, out)
    print(f"kept {len(result.kept_docs)}/{len(docs)} documents "
          f"({len(result.drops)} dropped)")
    return EXIT_OK


def cmd_corpus_mix(args) -> int:
    manifest = parse_manifest(args.manifest)
    docs_by_source = {
        src.name: read_records(_source_path(args.manifest, src.path))
        for src in manifest.sources
    }
    for src in manifest.sources:
        print(f"{src.name}: ratio={src.ratio!r} docs={len(docs_by_source[src.name])}")
    if args.dry_run:
        return EXIT_OK
    totals = {src.name: 0 for src in manifest.sources}
    for step in range(args.steps):
        for name, doc in mixture_sampler(
            manifest, docs_by_source, args.batch_tokens, args.seed, step
        ):
            totals[name] += len(doc)
    grand = sum(totals.values())
    for src in manifest.sources:
        share = totals[src.name] / grand if grand else 0.0
        print(f"{src.name}: sampled_share={share:.4f} (target {src.ratio!r})")
    return EXIT_OK


# -- bench -------------------------------------------------------------------


def cmd_bench_run(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    bucket = BenchBucket.parse(args.bucket)
    report = throughput(
        ckpt, bucket, args.runs, seed=args.seed, reduced_precision=args.reduced_precision
    )
    out = Path(args.out)
    lines = ["run,tokens_per_second"]
    lines += [f"{i},{_f(v)}" for i, v in enumerate(report.per_run_tokens_per_second)]
    lines.append(f"mean,{_f(report.mean_tokens_per_second)}")
    _write_lines(out, lines)
    counts_path = out.with_name(out.stem + ".counts.csv")
    count_lines = ["layer,kind,score_count"]
    count_lines += [
        f"{i},{kind},{count}"
        for i, (kind, count) in enumerate(zip(report.layer_kinds, report.score_counts))
    ]
    _write_lines(counts_path, count_lines)
    note = (
        f" (batch reduced {report.requested_batch} -> {report.effective_batch})"
        if report.batch_reduced
        else ""
    )
    print(
        f"bucket {report.bucket}: mean {report.mean_tokens_per_second:.1f} tokens/s "
        f"over {report.runs} runs{note}"
    )
    return EXIT_OK


def cmd_bench_sts(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    tok = load_tokenizer(args.tok)
    pairs: list[tuple[str, str, float]] = []
    for lineno, raw in enumerate(
        Path(args.pairs).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not raw.strip():
            continue
        parts = raw.split("\t")
        if len(parts) != 3:
            raise InputError(f"{args.pairs}:{lineno}: expected textA<TAB>textB<TAB>gold")
        pairs.append((parts[0], parts[1], float(parts[2])))
    report = sts_score(ckpt, pairs, tok, pooling=args.pooling)
    out_line = (
        f"pearson={_f(report.pearson_r)} spearman={_f(report.spearman_rho)} "
        f"n_pairs={report.n_pairs}"
    )
    if args.out:
        _write_lines(args.out, ["pearson,spearman,n_pairs",
                                f"{_f(report.pearson_r)},{_f(report.spearman_rho)},{report.n_pairs}"])
    print(out_line)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zhbert",
        description="Desk-scale Chinese encoder pre-training stack",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"zhbert {__version__} (config schema {CONFIG_SCHEMA_VERSION})",
    )
    groups = parser.add_subparsers(dest="group", required=True)

    def sub(group, group_name, name, fn, **kwargs):
        p = group.add_parser(name, **kwargs)
        p.set_defaults(func=fn, command_name=f"{group_name} {name}")
        p.add_argument("--seed", type=int, default=0, help="root seed for this run")
        return p

    # tok
    tok = groups.add_parser("tok", help="tokenizer training and application")
    tok_sub = tok.add_subparsers(dest="action", required=True)
    p = sub(tok_sub, "tok", "train", cmd_tok_train)
    p.add_argument("--corpus", required=True, help=".rec file or directory of .rec/.txt")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--round64", action="store_true", help="round size up to a multiple of 64")
    p.add_argument("--dict", default=None, help="CJK segmentation dictionary, one word per line")
    p.add_argument("--sample-fraction", type=float, default=1.0, dest="sample_fraction")
    p.add_argument("--out", required=True)
    p = sub(tok_sub, "tok", "encode", cmd_tok_encode)
    p.add_argument("--model", required=True)
    p.add_argument("--in", required=True, dest="input")
    p.add_argument("--out", default=None)
    p = sub(tok_sub, "tok", "stats", cmd_tok_stats)
    p.add_argument("--model", required=True)
    p.add_argument("--in", required=True, dest="inputs", nargs="+")
    p.add_argument("--bucket", required=True, choices=["512", "8192"])

    # mask
    mask = groups.add_parser("mask", help="whole-word masking preview and curve")
    mask_sub = mask.add_subparsers(dest="action", required=True)
    p = sub(mask_sub, "mask", "preview", cmd_mask_preview)
    p.add_argument("--model", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--step", type=int, required=True)
    p.add_argument("--total", type=int, required=True)
    p = sub(mask_sub, "mask", "curve", cmd_mask_curve)
    p.add_argument("--total", type=int, required=True)
    p.add_argument("--warmup-fraction", type=float, default=0.04, dest="warmup_fraction")
    p.add_argument("--r-start", type=float, default=0.15, dest="r_start")
    p.add_argument("--r-peak", type=float, default=0.30, dest="r_peak")
    p.add_argument("--r-end", type=float, default=0.15, dest="r_end")
    p.add_argument("--out", default=None)

    # sched
    sched = groups.add_parser("sched", help="learning-rate schedule dumps")
    sched_sub = sched.add_subparsers(dest="action", required=True)
    p = sub(sched_sub, "sched", "dump", cmd_sched_dump)
    p.add_argument(
        "--kind",
        default="damped_cosine",
        choices=["damped_cosine", "warmup_ramp", "stage2_linear", "trapezoid"],
    )
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--emax", type=float, default=8e-4)
    p.add_argument("--emin", type=float, default=5e-5)
    p.add_argument("--N", type=int, default=3)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--warmup-steps", type=int, default=0, dest="warmup_steps")
    p.add_argument("--warmup-start", type=float, default=5e-5, dest="warmup_start")
    p.add_argument("--ramp-steps", type=int, default=0, dest="ramp_steps")
    p.add_argument("--decay-steps", type=int, default=0, dest="decay_steps")
    p.add_argument("--out", default=None)

    # enc
    enc = groups.add_parser("enc", help="encoder checkpoints and forward passes")
    enc_sub = enc.add_subparsers(dest="action", required=True)
    p = sub(enc_sub, "enc", "init", cmd_enc_init)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p = sub(enc_sub, "enc", "forward", cmd_enc_forward)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", required=True, dest="input",
                   help="token id sequences, one space-separated line each")
    p.add_argument("--out", default=None)

    # train
    train = groups.add_parser("train", help="two-stage pre-training and evaluation")
    train_sub = train.add_subparsers(dest="action", required=True)
    p = sub(train_sub, "train", "run", cmd_train_run)
    p.add_argument("--plan", required=True)
    p.add_argument("--data", required=True, help="mixture manifest")
    p.add_argument("--tok", required=True, help="tokenizer model directory")
    p.add_argument("--ckpt", default=None, help="checkpoint to continue from")
    p.add_argument("--out", required=True)
    p = sub(train_sub, "train", "pppl", cmd_train_pppl)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--tok", required=True)
    p.add_argument("--in", required=True, dest="input", help="evaluation texts (.rec or dir)")
    p.add_argument("--buckets", required=True, help="comma-separated lengths")
    p.add_argument("--positions", type=int, default=32)
    p.add_argument("--out", default=None)

    # corpus
    corpus = groups.add_parser("corpus", help="corpus packing, dedup, and mixing")
    corpus_sub = corpus.add_subparsers(dest="action", required=True)
    p = sub(corpus_sub, "corpus", "pack", cmd_corpus_pack)
    p.add_argument("--in", required=True, dest="input", help="directory of .txt files")
    p.add_argument("--out", required=True)
    p = sub(corpus_sub, "corpus", "dedup", cmd_corpus_dedup)
    p.add_argument("--in", required=True, dest="input", help="directory of .rec files")
    p.add_argument("--threshold", type=float, default=0.8)
    p.add_argument("--k", type=int, default=128)
    p.add_argument("--shingle-size", type=int, default=5, dest="shingle_size")
    p.add_argument("--bands", type=int, default=32)
    p.add_argument("--out", required=True)
    p = sub(corpus_sub, "corpus", "mix", cmd_corpus_mix)
    p.add_argument("--manifest", required=True)
    p.add_argument("--dry-run", action="store_true", dest="dry_run")
    p.add_argument("--batch-tokens", type=int, default=4096, dest="batch_tokens")
    p.add_argument("--steps", type=int, default=100)

    # bench
    bench = groups.add_parser("bench", help="throughput and STS measurement")
    bench_sub = bench.add_subparsers(dest="action", required=True)
    p = sub(bench_sub, "bench", "run", cmd_bench_run)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--bucket", default="512x4", help="seq_len x batch, e.g. 512x4")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--reduced-precision", action="store_true", dest="reduced_precision")
    p.add_argument("--out", required=True)
    p = sub(bench_sub, "bench", "sts", cmd_bench_sts)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--tok", required=True)
    p.add_argument("--pairs", required=True, help="TSV: textA, textB, gold score")
    p.add_argument("--pooling", default="mean", choices=["mean", "cls"])
    p.add_argument("--out", default=None)

    return parser


def dispatch(argv) -> int:
    # Single-threaded math keeps equal-seed runs bit-identical.
    torch.set_num_threads(1)
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


def main(argv=None) -> int:
    try:
        return dispatch(sys.argv[1:] if argv is None else argv)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ZhbertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
