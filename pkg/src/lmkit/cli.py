"""Command line front end for the toolkit.

One executable with subcommands: train language models, report
(pseudo-)perplexity, extract and rerank n-best lists, rescore lattice
sets, tune interpolation weights, and generate the synthetic evaluation
fixtures.  A --config file holds key=value lines named after the long
flags; explicit flags override it.

Exit codes: 0 success, 1 usage error, 2 data or format error, 3 numeric
failure.
"""

import argparse
import math
import multiprocessing
import os
import sys

from . import corpus as corpus_mod
from . import evaluate
from . import interpolate
from . import lattice as lattice_mod
from . import models
from . import ngram as ngram_mod
from . import nn
from . import synth


class UsageError(ValueError):
    """Bad flag combination or malformed command line."""


class ConfigError(ValueError):
    """Malformed --config file."""


class _Parser(argparse.ArgumentParser):
    # argparse wants to sys.exit(2) on bad flags; route that through the
    # usage-error path instead so the exit code contract holds
    def error(self, message):
        raise UsageError(message)


def _write_text(path, text):
    # write-then-rename so a failure never leaves a partial file
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(text)
    os.replace(tmp, path)


def _read_config(path):
    pairs = []
    with open(path, encoding="utf-8") as f:
        for ln, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError("%s:%d: expected key=value" % (path, ln))
            key, val = line.split("=", 1)
            key = key.strip()
            if not key:
                raise ConfigError("%s:%d: empty key" % (path, ln))
            pairs.append(("--" + key.replace("_", "-"), val.strip()))
    return pairs


def _apply_config(argv):
    """Splice config key=value pairs in as flags right after the subcommand,
    so flags given on the command line itself still win."""
    path = None
    rest = list(argv)
    for i, tok in enumerate(rest):
        if tok == "--config":
            if i + 1 >= len(rest):
                raise UsageError("--config needs a file argument")
            path = rest[i + 1]
            rest = rest[:i] + rest[i + 2:]
            break
        if tok.startswith("--config="):
            path = tok.split("=", 1)[1]
            rest = rest[:i] + rest[i + 1:]
            break
    if path is None:
        return rest
    if not rest or rest[0].startswith("-"):
        raise UsageError("--config requires a subcommand")
    inject = []
    for flag, val in _read_config(path):
        inject.extend([flag, val])
    return rest[:1] + inject + rest[1:]


# ---------------------------------------------------------------------------
# shared flag groups

def _add_interp_flags(sp, lambda1=0.75, lambda2=0.3, alpha=0.7):
    sp.add_argument("--lambda1", type=float, default=lambda1,
                    help="weight of the first recurrent stream in the linear "
                         "mix (default %(default)s)")
    sp.add_argument("--lambda2", type=float, default=lambda2,
                    help="weight of the succeeding-word stream in the "
                         "log-linear mix (default %(default)s)")
    sp.add_argument("--alpha", type=float, default=alpha,
                    help="softmax smoothing factor for succeeding-word "
                         "scores (default %(default)s)")


def _add_scale_flags(sp):
    sp.add_argument("--acoustic-scale", type=float, default=1.0,
                    help="weight on acoustic scores (default %(default)s)")
    sp.add_argument("--lm-scale", type=float, default=1.0,
                    help="weight on language model scores (default %(default)s)")


def _load_rnnlm(path, want=None):
    model = models.load_rnnlm(path)
    if want is not None and model.arch not in want:
        raise UsageError("%s holds a %s model, expected %s"
                         % (path, model.arch, " or ".join(want)))
    return model


def _interp_config(args):
    cfg = interpolate.InterpConfig(lambda1=args.lambda1, lambda2=args.lambda2)
    try:
        cfg.validate()
    except ValueError as e:
        raise UsageError(str(e))
    return cfg


# ---------------------------------------------------------------------------
# train

_RNN_FLAGS = ("hidden", "embed", "seed", "epochs", "lr", "lr_decay",
              "streams", "bptt", "clip")
_NGRAM_FLAGS = ("order", "discount")


def _reject_flags(args, names, why):
    for name in names:
        if getattr(args, name) is not None:
            raise UsageError("--%s does not apply when %s"
                             % (name.replace("_", "-"), why))


def _hyper_from(args):
    hyper = models.Hyper()
    for flag, field in (("epochs", "epochs"), ("lr", "lr"),
                        ("lr_decay", "lr_decay"), ("streams", "num_streams"),
                        ("bptt", "bptt"), ("clip", "clip")):
        val = getattr(args, flag)
        if val is not None:
            setattr(hyper, field, val)
    return hyper


def cmd_train(args):
    with open(args.train, encoding="utf-8") as f:
        lines = [line for line in f if line.strip()]
    if args.vocab:
        if args.shortlist is not None:
            raise UsageError("--shortlist conflicts with --vocab")
        vocab = corpus_mod.Vocabulary.load(args.vocab)
    else:
        vocab = corpus_mod.build_vocabulary(lines, args.shortlist)
    if args.write_vocab:
        vocab.save(args.write_vocab)
    train = corpus_mod.TokenizedCorpus.from_lines(vocab, lines)

    if args.arch == "ngram":
        _reject_flags(args, _RNN_FLAGS + ("succ",), "--arch is ngram")
        order = 3 if args.order is None else args.order
        discount = 0.75 if args.discount is None else args.discount
        model = ngram_mod.train_kn(train, order, discount)
        ngram_mod.save_arpa(model, args.model_out)
        for m in range(1, model.order + 1):
            print("%d-grams: %d" % (m, len(model.entries[m])))
        print("wrote %s" % args.model_out)
        return

    _reject_flags(args, _NGRAM_FLAGS, "--arch is %s" % args.arch)
    if args.arch != "su":
        _reject_flags(args, ("succ",), "--arch is %s" % args.arch)
    hidden = 32 if args.hidden is None else args.hidden
    embed = 16 if args.embed is None else args.embed
    seed = 0 if args.seed is None else args.seed
    if args.arch == "uni":
        model = models.UniRnnlm(vocab, hidden, embed, seed=seed)
    elif args.arch == "bi":
        model = models.BiRnnlm(vocab, hidden, embed, seed=seed)
    else:
        succ = 1 if args.succ is None else args.succ
        model = models.SuRnnlm(vocab, hidden, embed, succ=succ, seed=seed)
    log = model.train(train, _hyper_from(args))
    for i, loss in enumerate(log["epoch_loss"], 1):
        print("epoch %d loss %.6f" % (i, loss))
    # timing is run-dependent, keep it off stdout
    print("%d tokens in %.1f s (%.0f w/s)"
          % (log["tokens"], log["seconds"], log["wps"]), file=sys.stderr)
    model.save(args.model_out)
    print("wrote %s" % args.model_out)


# ---------------------------------------------------------------------------
# ppl

def _two_stage_scorer(arpa, uni, su, cfg, alpha):
    def fn(ids):
        h_u = uni.zero_state()
        h_s = su.zero_state()
        out = []
        for t in range(1, len(ids)):
            dist_u, h_u = uni.step(h_u, ids[t - 1])
            dist_s, h_s = su.step(h_s, ids[t - 1], su._window_ids(ids, t), alpha)
            p_ng = math.exp(arpa.logprob(ids[:t], ids[t]))
            p_u = math.exp(uni.word_logprob_from_dist(dist_u, ids[t]))
            p_s = math.exp(su.word_logprob_from_dist(dist_s, ids[t]))
            out.append(interpolate.two_stage(p_ng, p_u, p_s, cfg))
        return out
    return fn


def _linear_scorer(arpa, model, lam):
    if lam == 0.0:
        return arpa.sentence_word_logprobs
    if lam == 1.0:
        return model.sentence_word_logprobs

    def fn(ids):
        lp_a = arpa.sentence_word_logprobs(ids)
        lp_b = model.sentence_word_logprobs(ids)
        return [interpolate.safe_ln(
                    interpolate.linear(math.exp(a), math.exp(b), lam))
                for a, b in zip(lp_a, lp_b)]
    return fn


def cmd_ppl(args):
    if args.model is None and args.arpa is None:
        raise UsageError("need --model and/or --arpa")
    model = _load_rnnlm(args.model) if args.model else None
    if model is not None and args.vocab:
        raise UsageError("the model file carries its vocabulary, drop --vocab")
    if model is not None:
        vocab = model.vocab
    elif args.vocab:
        vocab = corpus_mod.Vocabulary.load(args.vocab)
    else:
        raise UsageError("--arpa needs --vocab (or a --model to borrow from)")
    arpa = ngram_mod.load_arpa(args.arpa, vocab) if args.arpa else None
    su = _load_rnnlm(args.su_model, want=("su",)) if args.su_model else None
    if su is not None and (arpa is None or model is None or model.arch != "uni"):
        raise UsageError("--su-model rides on --arpa plus a uni --model")
    if arpa is not None and model is not None and model.arch != "uni":
        raise UsageError("linear interpolation needs a normalized "
                         "left-to-right model, not %s" % model.arch)

    cfg = _interp_config(args)
    test = corpus_mod.TokenizedCorpus.from_file(vocab, args.test)
    if su is not None:
        report = evaluate.pseudo_perplexity(
            _two_stage_scorer(arpa, model, su, cfg, args.alpha), test)
    elif arpa is not None and model is not None:
        report = evaluate.perplexity(
            _linear_scorer(arpa, model, args.lambda1), test)
    elif model is not None and model.arch == "uni":
        report = evaluate.perplexity(model.sentence_word_logprobs, test)
    elif model is not None and model.arch == "su":
        report = evaluate.pseudo_perplexity(
            lambda ids: model.sentence_word_logprobs(ids, args.alpha), test)
    elif model is not None:
        report = evaluate.pseudo_perplexity(model.sentence_word_logprobs, test)
    else:
        report = evaluate.perplexity(arpa.sentence_word_logprobs, test)

    for line in report.lines():
        print(line)
    if args.report:
        rows = ["sent %d %.6f" % (i, s)
                for i, s in enumerate(report.per_sentence)]
        _write_text(args.report, "\n".join(report.lines() + rows) + "\n")


# ---------------------------------------------------------------------------
# nbest

def cmd_nbest(args):
    if args.lattice:
        lat = lattice_mod.load_slf(args.lattice)
        hyps = lattice_mod.nbest(lat, args.n, args.acoustic_scale,
                                 args.lm_scale)
    else:
        hyps = lattice_mod.read_nbest(args.from_list)
    if args.model:
        uni = _load_rnnlm(args.model, want=("uni",))
        if not args.arpa:
            raise UsageError("n-best rescoring needs --arpa for the "
                             "first-stage mix")
        arpa = ngram_mod.load_arpa(args.arpa, uni.vocab)
        su = _load_rnnlm(args.su_model, want=("su",)) if args.su_model else None
        cfg = _interp_config(args)
        cfg.normalize_locally = args.normalize_locally
        lm_fn = lattice_mod.make_two_stage_scorer(arpa, uni, su, cfg,
                                                  args.alpha)
        hyps = lattice_mod.rescore_nbest(hyps, lm_fn, args.acoustic_scale,
                                         args.lm_scale)
    elif args.su_model or args.arpa:
        raise UsageError("rescoring flags need --model")
    if not hyps:
        raise lattice_mod.LatticeError("no hypotheses to write")
    if args.out:
        lattice_mod.write_nbest(hyps, args.out)
    best = hyps[0]
    print("%.6f\t%.6f\t%.6f\t%s" % (best.total, best.ac, best.lm,
                                    " ".join(best.words)))


# ---------------------------------------------------------------------------
# rescore

_WORKERS = None


def _rescore_one(task):
    path, opts = task
    uni, su, caches = _WORKERS
    lat = lattice_mod.load_slf(path)
    if opts["beam"] is not None:
        lat = lattice_mod.prune(lat, opts["beam"], opts["ac_scale"],
                                opts["lm_scale"])
    lat = lattice_mod.rescore_lattice_uni(
        lat, uni, n_hist=opts["n_hist"], lam=opts["lambda1"],
        cache=caches[0], ac_scale=opts["ac_scale"], lm_scale=opts["lm_scale"])
    if su is not None:
        lat = lattice_mod.rescore_lattice_su(
            lat, su, n_hist=opts["n_hist"], lam=opts["lambda2"],
            alpha=opts["alpha"], cache=caches[1],
            ac_scale=opts["ac_scale"], lm_scale=opts["lm_scale"])
    hyp = lattice_mod.best_path(lat, opts["ac_scale"], opts["lm_scale"])
    return hyp.words, lattice_mod.write_slf(lat)


def cmd_rescore(args):
    global _WORKERS
    names = sorted(n for n in os.listdir(args.lattices) if n.endswith(".slf"))
    if not names:
        raise lattice_mod.LatticeError("no .slf files in %s" % args.lattices)
    uni = _load_rnnlm(args.model, want=("uni",))
    su = _load_rnnlm(args.su_model, want=("su",)) if args.su_model else None
    _interp_config(args)
    if args.ngram_approx < 1:
        raise UsageError("--ngram-approx must be at least 1")
    refs = None
    if args.refs:
        refs = {}
        with open(args.refs, encoding="utf-8") as f:
            for raw in f:
                parts = raw.split()
                if parts:
                    refs[parts[0]] = parts[1:]
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)

    opts = {"beam": args.beam, "n_hist": args.ngram_approx,
            "lambda1": args.lambda1, "lambda2": args.lambda2,
            "alpha": args.alpha, "ac_scale": args.acoustic_scale,
            "lm_scale": args.lm_scale}
    tasks = [(os.path.join(args.lattices, n), opts) for n in names]
    if args.jobs > 1:
        # fork inherits the loaded models; results come back in input order
        _WORKERS = (uni, su, (None, None))
        with multiprocessing.get_context("fork").Pool(args.jobs) as pool:
            results = list(pool.imap(_rescore_one, tasks))
    else:
        _WORKERS = (uni, su,
                    (lattice_mod.ProbCache(), lattice_mod.ProbCache()))
        results = [_rescore_one(t) for t in tasks]

    pairs = []
    for name, (words, text) in zip(names, results):
        utt = name[:-4]
        if args.out_dir:
            _write_text(os.path.join(args.out_dir, name), text)
        print("%s %s" % (utt, " ".join(words)))
        if refs is not None:
            if utt not in refs:
                raise corpus_mod.CorpusError("no reference for %s" % utt)
            pairs.append((refs[utt], words))
    if refs is not None:
        c = evaluate.corpus_wer(pairs)
        print("wer %.2f%% (sub %d del %d ins %d / %d)"
              % (100.0 * c.rate, c.sub, c.dele, c.ins, c.ref_len))


# ---------------------------------------------------------------------------
# tune

def cmd_tune(args):
    uni = _load_rnnlm(args.model, want=("uni",))
    arpa = ngram_mod.load_arpa(args.arpa, uni.vocab)
    test = corpus_mod.TokenizedCorpus.from_file(uni.vocab, args.test)
    pair_lists = []
    for ids in test.sentences:
        lp_a = arpa.sentence_word_logprobs(ids)
        lp_b = uni.sentence_word_logprobs(ids)
        pair_lists.append([(math.exp(a), math.exp(b))
                           for a, b in zip(lp_a, lp_b)])
    lam1, ppl1, table = interpolate.tune_linear(pair_lists)
    for lam, val in table:
        print("lambda1 %.2f ppl %.4f" % (lam, val))
    print("best lambda1 %.2f ppl %.4f" % (lam1, ppl1))

    if not args.su_model:
        return
    su = _load_rnnlm(args.su_model, want=("su",))
    if args.lambda1 is not None:
        lam1 = args.lambda1
    # remix cheaply: freeze the linear stage, grid the log-linear weight
    flat_lin = []
    flat_su = []
    for sent_pairs, ids in zip(pair_lists, test.sentences):
        lp_s = su.sentence_word_logprobs(ids, args.alpha)
        for (p_a, p_b), s in zip(sent_pairs, lp_s):
            flat_lin.append(interpolate.safe_ln(
                interpolate.linear(p_a, p_b, lam1)))
            flat_su.append(s)

    def pseudo_at(lam2):
        total = 0.0
        for a, b in zip(flat_lin, flat_su):
            total += interpolate.loglinear_score(a, b, lam2)
        return math.exp(-total / len(flat_lin))

    lam2, ppl2, table2 = interpolate.grid_search(pseudo_at)
    for lam, val in table2:
        print("lambda2 %.2f pseudo_ppl %.4f" % (lam, val))
    print("best lambda2 %.2f pseudo_ppl %.4f (lambda1 %.2f)"
          % (lam2, ppl2, lam1))


# ---------------------------------------------------------------------------
# fixtures

def cmd_fixtures(args):
    os.makedirs(args.out, exist_ok=True)
    lang = synth.SyntheticLanguage()
    train_lines = synth.build_corpus_lines(lang, args.seed, args.train_tokens)
    test_lines = synth.build_corpus_lines(lang, args.seed + 1,
                                          args.test_tokens)
    _write_text(os.path.join(args.out, "train.txt"),
                "\n".join(train_lines) + "\n")
    _write_text(os.path.join(args.out, "test.txt"),
                "\n".join(test_lines) + "\n")
    vocab = corpus_mod.build_vocabulary(train_lines, args.shortlist)
    vocab.save(os.path.join(args.out, "vocab.txt"))
    train = corpus_mod.TokenizedCorpus.from_lines(vocab, train_lines)
    arpa = ngram_mod.train_kn(train, args.order)
    ngram_mod.save_arpa(arpa, os.path.join(args.out, "baseline.arpa"))
    utts = synth.build_confusion_set(lang, arpa, args.seed + 2,
                                     per_kind=args.per_kind, extra=args.extra)
    lat_dir = os.path.join(args.out, "lattices")
    os.makedirs(lat_dir, exist_ok=True)
    refs = []
    for utt in utts:
        lattice_mod.save_slf(utt.lattice, os.path.join(lat_dir,
                                                       utt.name + ".slf"))
        refs.append("%s %s" % (utt.name, " ".join(utt.ref)))
    _write_text(os.path.join(args.out, "refs.txt"), "\n".join(refs) + "\n")
    print("wrote %d train / %d test sentences, %d-gram model, %d lattices"
          % (len(train_lines), len(test_lines), args.order, len(utts)))


# ---------------------------------------------------------------------------

def _build_parser():
    p = _Parser(prog="lmkit",
                description="Recurrent and n-gram language modeling with "
                            "lattice rescoring.")
    p.add_argument("--config", metavar="FILE",
                   help="key=value file of flag defaults for the subcommand")
    sub = p.add_subparsers(dest="command", metavar="command")

    sp = sub.add_parser("train", help="train an n-gram or recurrent model")
    sp.add_argument("--arch", required=True,
                    choices=("ngram", "uni", "bi", "su"),
                    help="model family to train")
    sp.add_argument("--train", required=True, metavar="FILE",
                    help="training text, one sentence per line")
    sp.add_argument("--model-out", required=True, metavar="FILE",
                    help="where to write the trained model")
    sp.add_argument("--vocab", metavar="FILE",
                    help="existing vocabulary file to reuse")
    sp.add_argument("--shortlist", type=int, metavar="N",
                    help="shortlist size when building the vocabulary "
                         "(default: all words)")
    sp.add_argument("--write-vocab", metavar="FILE",
                    help="also write the vocabulary used")
    sp.add_argument("--order", type=int, help="n-gram order (default 3)")
    sp.add_argument("--discount", type=float,
                    help="absolute discount (default 0.75)")
    sp.add_argument("--hidden", type=int,
                    help="recurrent layer width (default 32)")
    sp.add_argument("--embed", type=int,
                    help="embedding width (default 16)")
    sp.add_argument("--succ", type=int,
                    help="succeeding words read by the su model (default 1)")
    sp.add_argument("--seed", type=int,
                    help="initialization seed (default 0)")
    sp.add_argument("--epochs", type=int, help="training epochs (default 8)")
    sp.add_argument("--lr", type=float, help="learning rate (default 0.5)")
    sp.add_argument("--lr-decay", type=float,
                    help="per-epoch rate decay (default 0.9)")
    sp.add_argument("--streams", type=int,
                    help="parallel text streams per batch (default 8)")
    sp.add_argument("--bptt", type=int,
                    help="truncated backprop span (default 32)")
    sp.add_argument("--clip", type=float,
                    help="global gradient norm cap (default 5.0)")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("ppl", help="report perplexity or pseudo-perplexity")
    sp.add_argument("--test", required=True, metavar="FILE",
                    help="evaluation text")
    sp.add_argument("--model", metavar="FILE", help="recurrent model file")
    sp.add_argument("--arpa", metavar="FILE", help="back-off model file")
    sp.add_argument("--vocab", metavar="FILE",
                    help="vocabulary for --arpa when no --model is given")
    sp.add_argument("--su-model", metavar="FILE",
                    help="succeeding-word model for the two-stage mix")
    sp.add_argument("--report", metavar="FILE",
                    help="also write the report with per-sentence scores")
    _add_interp_flags(sp)
    sp.set_defaults(func=cmd_ppl)

    sp = sub.add_parser("nbest", help="extract and rerank n-best lists")
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--lattice", metavar="FILE",
                       help="lattice to extract hypotheses from")
    group.add_argument("--from-list", metavar="FILE",
                       help="existing n-best file to rerank")
    sp.add_argument("--n", type=int, default=10,
                    help="hypotheses to extract (default %(default)s)")
    sp.add_argument("--model", metavar="FILE",
                    help="uni model; adds full-context rescoring")
    sp.add_argument("--arpa", metavar="FILE",
                    help="back-off model mixed in linearly")
    sp.add_argument("--su-model", metavar="FILE",
                    help="succeeding-word model mixed in log-linearly")
    sp.add_argument("--normalize-locally", action="store_true",
                    help="renormalize combined scores over the vocabulary "
                         "at each position")
    sp.add_argument("--out", metavar="FILE", help="write the ranked list here")
    _add_interp_flags(sp)
    _add_scale_flags(sp)
    sp.set_defaults(func=cmd_nbest)

    sp = sub.add_parser("rescore",
                        help="rescore a directory of lattices, print "
                             "1-best transcripts")
    sp.add_argument("--lattices", required=True, metavar="DIR",
                    help="directory of .slf files")
    sp.add_argument("--model", required=True, metavar="FILE",
                    help="uni model for the first pass")
    sp.add_argument("--su-model", metavar="FILE",
                    help="succeeding-word model for a second pass")
    sp.add_argument("--ngram-approx", type=int, default=3, metavar="N",
                    help="merge rescoring states on the last N-1 words "
                         "(default %(default)s)")
    sp.add_argument("--beam", type=float,
                    help="posterior beam; prune arcs before rescoring")
    sp.add_argument("--out-dir", metavar="DIR",
                    help="write rescored lattices here")
    sp.add_argument("--refs", metavar="FILE",
                    help="references ('utt word...' lines); reports WER")
    sp.add_argument("--jobs", type=int, default=1,
                    help="worker processes across lattices (default "
                         "%(default)s)")
    _add_interp_flags(sp)
    _add_scale_flags(sp)
    sp.set_defaults(func=cmd_rescore)

    sp = sub.add_parser("tune", help="grid-search interpolation weights")
    sp.add_argument("--test", required=True, metavar="FILE",
                    help="held-out text")
    sp.add_argument("--arpa", required=True, metavar="FILE",
                    help="back-off model file")
    sp.add_argument("--model", required=True, metavar="FILE",
                    help="uni model file")
    sp.add_argument("--su-model", metavar="FILE",
                    help="also tune the log-linear weight of this model")
    sp.add_argument("--lambda1", type=float,
                    help="freeze the linear weight instead of tuning it")
    sp.add_argument("--alpha", type=float, default=0.7,
                    help="smoothing factor for succeeding-word scores "
                         "(default %(default)s)")
    sp.set_defaults(func=cmd_tune)

    sp = sub.add_parser("fixtures",
                        help="generate the synthetic evaluation set")
    sp.add_argument("--out", required=True, metavar="DIR",
                    help="output directory")
    sp.add_argument("--seed", type=int, default=11,
                    help="generator seed (default %(default)s)")
    sp.add_argument("--train-tokens", type=int, default=50000,
                    help="training corpus size (default %(default)s)")
    sp.add_argument("--test-tokens", type=int, default=5000,
                    help="test corpus size (default %(default)s)")
    sp.add_argument("--shortlist", type=int, default=15,
                    help="vocabulary shortlist size (default %(default)s)")
    sp.add_argument("--order", type=int, default=3,
                    help="baseline n-gram order (default %(default)s)")
    sp.add_argument("--per-kind", type=int, default=80,
                    help="confusion utterances per kind (default %(default)s)")
    sp.add_argument("--extra", type=float, default=0.8,
                    help="score margin of the planted distractor "
                         "(default %(default)s)")
    sp.set_defaults(func=cmd_fixtures)
    return p


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    try:
        argv = _apply_config(argv)
        args = _build_parser().parse_args(argv)
        if not hasattr(args, "func"):
            raise UsageError("a subcommand is required")
        args.func(args)
        return 0
    except UsageError as e:
        print("usage error: %s" % e, file=sys.stderr)
        return 1
    except (corpus_mod.CorpusError, ngram_mod.FormatError,
            lattice_mod.LatticeError, ConfigError, OSError) as e:
        print("data error: %s" % e, file=sys.stderr)
        return 2
    except nn.NumericError as e:
        print("numeric error: %s" % e, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
