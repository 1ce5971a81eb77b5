"""The three recurrent LM architectures.

All of them share one word embedding table and a softmax output layer over the
shortlist plus a single out-of-shortlist slot:

  uni: P(w_t | w_1..w_{t-1}) from a left-to-right GRU.
  bi:  P(w_t | w_1..w_{t-1}, w_{t+1}..w_L) from two GRUs, contexts concatenated.
  su:  P(w_t | w_1..w_{t-1}, w_{t+1}..w_{t+k}) from the uni GRU plus a
       feedforward unit over the k succeeding word embeddings.

bi and su scores are unnormalized over sentences, so only per-word pseudo
perplexity is meaningful for them.  Gradients are hand derived; the trainers
use plain SGD with global-norm clipping.
"""

import math
import time
from dataclasses import dataclass

import numpy as np

from . import nn
from .corpus import Vocabulary, future_window, make_null_aligned_batches, make_spliced_batches


@dataclass
class SmoothingConfig:
    """Temperature applied to output activations before the softmax."""
    alpha: float = 0.7


def smooth(logits, alpha):
    """Softmax of alpha-scaled activations.  alpha=1 is exactly the softmax;
    smaller alpha flattens the distribution without changing the argmax."""
    if hasattr(alpha, "alpha"):
        alpha = alpha.alpha
    logits = np.asarray(logits)
    if alpha == 1.0:
        return nn.softmax(logits)
    return nn.softmax(alpha * logits)


@dataclass
class Hyper:
    epochs: int = 8
    lr: float = 0.5
    lr_decay: float = 0.9
    num_streams: int = 8
    bptt: int = 32
    clip: float = 5.0


def _safe_log(p):
    return math.log(p) if p > 0.0 else float("-inf")


class UniRnnlm:
    """Left-to-right GRU language model."""

    arch = "uni"

    def __init__(self, vocab, hidden=32, embed=16, seed=0, dtype=np.float64):
        self.vocab = vocab
        self.hidden = hidden
        self.embed = embed
        self.dtype = dtype
        self.k = 0
        rng = np.random.default_rng(seed)
        self._init_params(rng)

    # parameter creation order is fixed so equal seeds give equal weights
    def _init_params(self, rng):
        self.emb = nn.uniform_init(rng, (len(self.vocab), self.embed), dtype=self.dtype)
        self.emb[self.vocab.pad] = 0.0
        self.gru = nn.GruCell(self.embed, self.hidden, rng, dtype=self.dtype)
        self._init_future(rng)
        out = self.vocab.output_size
        self.out_w = nn.uniform_init(rng, (out, self.context_size), dtype=self.dtype)
        self.out_b = nn.uniform_init(rng, (out,), dtype=self.dtype)

    def _init_future(self, rng):
        pass

    @property
    def context_size(self):
        return self.hidden

    def params(self):
        p = {"emb": self.emb, "out.W": self.out_w, "out.b": self.out_b}
        p.update(self.gru.params())
        return p

    def zero_state(self):
        return np.zeros(self.hidden, dtype=self.dtype)

    def advance(self, h, prev_id):
        """Consume one word id, returning the next hidden state."""
        return nn.gru_step(self.gru, self.emb[prev_id], h)

    def _future_vec(self, window):
        return None

    def output_logits(self, h, window=None):
        ctx = h
        f = self._future_vec(window)
        if f is not None:
            ctx = np.concatenate([h, f])
        return self.out_w @ ctx + self.out_b

    def output_dist(self, h, window=None, alpha=1.0):
        return smooth(self.output_logits(h, window), alpha)

    def step(self, h, prev_id, window=None, alpha=1.0):
        """One prediction step: distribution over output slots and new state."""
        h_new = self.advance(h, prev_id)
        return self.output_dist(h_new, window, alpha), h_new

    def word_logprob_from_dist(self, dist, word_id):
        """Log probability of a word id, dividing the out-of-shortlist slot
        mass uniformly over the words it covers."""
        p = dist[self.vocab.output_index(word_id)]
        if self.vocab.is_oos(word_id):
            if self.vocab.n_oos == 0:
                return float("-inf")
            return _safe_log(p) - math.log(self.vocab.n_oos)
        return _safe_log(p)

    def _window_ids(self, ids, t):
        return None

    def sentence_word_logprobs(self, ids, alpha=1.0):
        """Natural-log probabilities for every predicted position of one
        encoded sentence (everything after the begin token)."""
        h = self.zero_state()
        out = []
        for t in range(1, len(ids)):
            dist, h = self.step(h, ids[t - 1], self._window_ids(ids, t), alpha)
            out.append(self.word_logprob_from_dist(dist, ids[t]))
        return out

    def sentence_logprob(self, ids, alpha=1.0):
        return float(sum(self.sentence_word_logprobs(ids, alpha)))

    # ---- training ----

    def _prepare_spliced(self, corpus, num_streams):
        batch = make_spliced_batches(corpus, num_streams, future_k=self.k)
        v = self.vocab
        S = batch.num_streams
        width = max(len(s) for s in batch.streams) - 1
        inputs = np.full((S, width), v.pad, dtype=np.int64)
        targets = np.full((S, width), -1, dtype=np.int64)
        windows = None
        if self.k:
            windows = np.full((S, width, self.k), v.pad, dtype=np.int64)
        for s, stream in enumerate(batch.streams):
            n = len(stream) - 1
            inputs[s, :n] = stream[:-1]
            targets[s, :n] = stream[1:]
            if self.k:
                windows[s, :n] = batch.step_windows[s]
        valid = (targets >= 0) & (targets != v.sent_begin)
        resets = inputs == v.sent_begin
        slots = np.where(valid, np.minimum(targets, v.shortlist_size), 0)
        return inputs, slots, valid, resets, windows

    def _forward_backward(self, inputs, slots, valid, resets, windows, t0, t1, h,
                          want_grads=True):
        """Loss (and gradients) over steps [t0, t1) of the rectangles, starting
        from hidden state rows `h`.  Returns (loss, tokens, grads, h_out)."""
        S = inputs.shape[0]
        rows = np.arange(S)
        caches = []
        loss = 0.0
        tokens = int(valid[:, t0:t1].sum())
        h_rows = h
        for t in range(t0, t1):
            h_rows = h_rows.copy()
            h_rows[resets[:, t]] = 0.0
            x = self.emb[inputs[:, t]]
            h_new, cache = self.gru.step(x, h_rows)
            ctx, fcache = self._context_rows(h_new, windows, t)
            logits = ctx @ self.out_w.T + self.out_b
            dist = nn.softmax(logits, axis=1)
            mask = valid[:, t]
            picked = dist[rows, slots[:, t]]
            loss -= float(np.sum(np.log(picked, where=mask, out=np.zeros(S)) * mask))
            if want_grads:
                caches.append((cache, ctx, dist, fcache))
            h_rows = h_new
        if not want_grads:
            return loss, tokens, None, h_rows
        grads = nn.zeros_like_params(self.params())
        dh = np.zeros((S, self.hidden), dtype=self.dtype)
        dx_steps = np.empty((t1 - t0, S, self.embed), dtype=self.dtype)
        dwin_steps = None
        if self.k:
            dwin_steps = np.empty((t1 - t0, S, self.k * self.embed), dtype=self.dtype)
        for i in range(t1 - t0 - 1, -1, -1):
            t = t0 + i
            cache, ctx, dist, fcache = caches[i]
            mask = valid[:, t]
            dlogits = dist.copy()
            dlogits[rows, slots[:, t]] -= 1.0
            dlogits[~mask] = 0.0
            grads["out.W"] += dlogits.T @ ctx
            grads["out.b"] += dlogits.sum(axis=0)
            dctx = dlogits @ self.out_w
            dh_step, dwin = self._split_context_grad(dctx, fcache, grads)
            dh_total = dh + dh_step
            if dwin_steps is not None:
                dwin_steps[i] = dwin
            dx, dh_prev = self.gru.backward(cache, dh_total, grads)
            dx_steps[i] = dx
            dh_prev[resets[:, t]] = 0.0
            dh = dh_prev
        ids_flat = inputs[:, t0:t1].T.reshape(-1)
        np.add.at(grads["emb"], ids_flat, dx_steps.reshape(-1, self.embed))
        if self.k:
            win_flat = windows[:, t0:t1].transpose(1, 0, 2).reshape(-1)
            np.add.at(grads["emb"], win_flat, dwin_steps.reshape(-1, self.embed))
        grads["emb"][self.vocab.pad] = 0.0
        return loss, tokens, grads, h_rows

    def _context_rows(self, h_new, windows, t):
        return h_new, None

    def _split_context_grad(self, dctx, fcache, grads):
        return dctx, None

    def loss_and_grads(self, corpus, num_streams=2):
        """Total loss and gradients over one full-backprop pass; used by the
        finite-difference checks."""
        inputs, slots, valid, resets, windows = self._prepare_spliced(corpus, num_streams)
        h = np.zeros((inputs.shape[0], self.hidden), dtype=self.dtype)
        loss, tokens, grads, _ = self._forward_backward(
            inputs, slots, valid, resets, windows, 0, inputs.shape[1], h)
        return loss, tokens, grads

    def loss_only(self, corpus, num_streams=2):
        inputs, slots, valid, resets, windows = self._prepare_spliced(corpus, num_streams)
        h = np.zeros((inputs.shape[0], self.hidden), dtype=self.dtype)
        loss, _, _, _ = self._forward_backward(
            inputs, slots, valid, resets, windows, 0, inputs.shape[1], h, want_grads=False)
        return loss

    def train(self, corpus, hyper):
        """SGD over spliced streams with truncated backprop.  Returns per-epoch
        mean loss, token counts, and wall-clock words per second."""
        inputs, slots, valid, resets, windows = self._prepare_spliced(
            corpus, hyper.num_streams)
        S, width = inputs.shape
        span = hyper.bptt or width
        params = self.params()
        history = []
        total_tokens = 0
        t_start = time.perf_counter()
        lr = hyper.lr
        for epoch in range(hyper.epochs):
            h = np.zeros((S, self.hidden), dtype=self.dtype)
            ep_loss, ep_tokens = 0.0, 0
            for t0 in range(0, width, span):
                t1 = min(t0 + span, width)
                loss, tokens, grads, h = self._forward_backward(
                    inputs, slots, valid, resets, windows, t0, t1, h)
                if not np.isfinite(loss):
                    raise nn.NumericError("non-finite training loss")
                if tokens:
                    # mean over streams, sum over the span; clipping tames the rest
                    for g in grads.values():
                        g /= S
                    nn.sgd_step(params, grads, lr, hyper.clip)
                ep_loss += loss
                ep_tokens += tokens
            self.emb[self.vocab.pad] = 0.0
            nn.check_finite(params)
            history.append(ep_loss / max(ep_tokens, 1))
            total_tokens += ep_tokens
            lr *= hyper.lr_decay
        wall = time.perf_counter() - t_start
        return {
            "epoch_loss": history,
            "tokens": total_tokens,
            "seconds": wall,
            "wps": total_tokens / wall if wall > 0 else float("inf"),
        }

    # ---- persistence ----

    def _header(self):
        return {
            "arch": self.arch,
            "vocab_size": len(self.vocab),
            "shortlist_size": self.vocab.shortlist_size,
            "embed": self.embed,
            "hidden": self.hidden,
            "succ": self.k,
            "future_hidden": getattr(self, "future_hidden", 0),
            "dtype": str(np.dtype(self.dtype)),
            "words": self.vocab.words,
        }

    def save(self, path):
        nn.save_model(path, self._header(), self.params())

    def _restore(self, tensors):
        for name, arr in self.params().items():
            if name not in tensors or tensors[name].shape != arr.shape:
                raise ValueError("model container missing tensor %s" % name)
            arr[...] = tensors[name]


class SuRnnlm(UniRnnlm):
    """uni plus a tanh feedforward unit over the k succeeding word embeddings.
    With k=0 it is exactly the uni model."""

    arch = "su"

    def __init__(self, vocab, hidden=32, embed=16, succ=1, future_hidden=None,
                 seed=0, dtype=np.float64):
        self.k = succ
        self.future_hidden = (hidden if future_hidden is None else future_hidden) if succ else 0
        # base init consumes the rng in the same order, so k=0 weights match uni
        self.vocab = vocab
        self.hidden = hidden
        self.embed = embed
        self.dtype = dtype
        rng = np.random.default_rng(seed)
        self._init_params(rng)

    def _init_future(self, rng):
        if self.k:
            self.fut_w = nn.uniform_init(rng, (self.future_hidden, self.k * self.embed),
                                         dtype=self.dtype)
            self.fut_b = nn.uniform_init(rng, (self.future_hidden,), dtype=self.dtype)

    @property
    def context_size(self):
        return self.hidden + self.future_hidden

    def params(self):
        p = super().params()
        if self.k:
            p["fut.W"] = self.fut_w
            p["fut.b"] = self.fut_b
        return p

    def _future_vec(self, window):
        if not self.k:
            return None
        if window is None or len(window) != self.k:
            raise ValueError("need %d succeeding word ids" % self.k)
        flat = self.emb[np.asarray(window, dtype=np.int64)].reshape(-1)
        return np.tanh(self.fut_w @ flat + self.fut_b)

    def _window_ids(self, ids, t):
        if not self.k:
            return None
        return future_window(self.vocab, ids, t, self.k).ids

    def _context_rows(self, h_new, windows, t):
        if not self.k:
            return h_new, None
        S = h_new.shape[0]
        flat = self.emb[windows[:, t]].reshape(S, self.k * self.embed)
        f = np.tanh(flat @ self.fut_w.T + self.fut_b)
        return np.concatenate([h_new, f], axis=1), (flat, f)

    def _split_context_grad(self, dctx, fcache, grads):
        if not self.k:
            return dctx, None
        dh = dctx[:, :self.hidden]
        df = dctx[:, self.hidden:]
        flat, f = fcache
        da = df * (1.0 - f * f)
        grads["fut.W"] += da.T @ flat
        grads["fut.b"] += da.sum(axis=0)
        return dh, da @ self.fut_w


class BiRnnlm:
    """Two GRUs read the sentence from both ends; each position is predicted
    from the concatenated contexts.  Sentence scores are unnormalized."""

    arch = "bi"

    def __init__(self, vocab, hidden=32, embed=16, seed=0, dtype=np.float64):
        self.vocab = vocab
        self.hidden = hidden
        self.embed = embed
        self.dtype = dtype
        self.k = 0
        rng = np.random.default_rng(seed)
        self.emb = nn.uniform_init(rng, (len(vocab), embed), dtype=dtype)
        self.emb[vocab.pad] = 0.0
        self.gru_f = nn.GruCell(embed, hidden, rng, dtype=dtype, prefix="gru_f")
        self.gru_b = nn.GruCell(embed, hidden, rng, dtype=dtype, prefix="gru_b")
        out = vocab.output_size
        self.out_w = nn.uniform_init(rng, (out, 2 * hidden), dtype=dtype)
        self.out_b = nn.uniform_init(rng, (out,), dtype=dtype)

    def params(self):
        p = {"emb": self.emb, "out.W": self.out_w, "out.b": self.out_b}
        p.update(self.gru_f.params())
        p.update(self.gru_b.params())
        return p

    def _forward_rect(self, rows, lengths):
        """Forward pass over a left-aligned rectangle.  Returns the per-step
        tensors the backward pass and the scoring API need."""
        S, T = rows.shape
        lengths = np.asarray(lengths)
        emb_cells = self.emb[rows]
        f_states = np.zeros((T, S, self.hidden), dtype=self.dtype)
        f_caches = [None] * T
        h = np.zeros((S, self.hidden), dtype=self.dtype)
        for t in range(T - 1):
            mask = (t < lengths - 1)[:, None]
            h_new, cache = self.gru_f.step(emb_cells[:, t], h)
            h = np.where(mask, h_new, h)
            f_caches[t] = cache
            f_states[t + 1] = h
        b_used = np.zeros((T, S, self.hidden), dtype=self.dtype)
        b_caches = [None] * T
        b = np.zeros((S, self.hidden), dtype=self.dtype)
        for t in range(T - 1, 0, -1):
            b_used[t] = b
            if t >= 2:
                mask = (t <= lengths - 1)[:, None]
                b_new, cache = self.gru_b.step(emb_cells[:, t], b)
                b = np.where(mask, b_new, b)
                b_caches[t] = cache
        return emb_cells, f_states, f_caches, b_used, b_caches

    def _positions(self, T, lengths):
        # predicted positions are 1..len-1 per row
        pos_valid = np.zeros((T, len(lengths)), dtype=bool)
        for i in range(1, T):
            pos_valid[i] = i <= np.asarray(lengths) - 1
        return pos_valid

    def sentence_dists(self, ids, alpha=1.0):
        """Distributions for every predicted position of one encoded sentence."""
        rows = np.asarray([ids], dtype=np.int64)
        _, f_states, _, b_used, _ = self._forward_rect(rows, [len(ids)])
        out = []
        for i in range(1, len(ids)):
            ctx = np.concatenate([f_states[i][0], b_used[i][0]])
            out.append(smooth(self.out_w @ ctx + self.out_b, alpha))
        return out

    def word_logprob_from_dist(self, dist, word_id):
        p = dist[self.vocab.output_index(word_id)]
        if self.vocab.is_oos(word_id):
            if self.vocab.n_oos == 0:
                return float("-inf")
            return _safe_log(p) - math.log(self.vocab.n_oos)
        return _safe_log(p)

    def sentence_word_logprobs(self, ids, alpha=1.0):
        dists = self.sentence_dists(ids, alpha)
        return [self.word_logprob_from_dist(d, ids[i + 1]) for i, d in enumerate(dists)]

    def loss_and_grads_batch(self, batch, want_grads=True):
        """Loss and gradients for one rectangle batch, NULL cells excluded."""
        rows, lengths = batch.rows, batch.lengths
        S, T = rows.shape
        emb_cells, f_states, f_caches, b_used, b_caches = self._forward_rect(rows, lengths)
        pos_valid = self._positions(T, lengths)
        grads = nn.zeros_like_params(self.params())
        loss = 0.0
        tokens = 0
        slots = np.minimum(rows, self.vocab.shortlist_size)
        df_inject = np.zeros((T, S, self.hidden), dtype=self.dtype)
        db_inject = np.zeros((T, S, self.hidden), dtype=self.dtype)
        rng_rows = np.arange(S)
        for i in range(1, T):
            mask = pos_valid[i]
            if not mask.any():
                continue
            ctx = np.concatenate([f_states[i], b_used[i]], axis=1)
            logits = ctx @ self.out_w.T + self.out_b
            dist = nn.softmax(logits, axis=1)
            picked = dist[rng_rows, slots[:, i]]
            loss -= float(np.sum(np.log(picked, where=mask, out=np.zeros(S)) * mask))
            tokens += int(mask.sum())
            if not want_grads:
                continue
            dlogits = dist
            dlogits[rng_rows, slots[:, i]] -= 1.0
            dlogits[~mask] = 0.0
            grads["out.W"] += dlogits.T @ ctx
            grads["out.b"] += dlogits.sum(axis=0)
            dctx = dlogits @ self.out_w
            df_inject[i] = dctx[:, :self.hidden]
            db_inject[i] = dctx[:, self.hidden:]
        if not want_grads:
            return loss, tokens, None
        dx_cells = np.zeros((S, T, self.embed), dtype=self.dtype)
        # forward chain ran t = 0..T-2, so backprop runs in reverse
        dh = np.zeros((S, self.hidden), dtype=self.dtype)
        for t in range(T - 2, -1, -1):
            mask = (t < np.asarray(lengths) - 1)[:, None]
            dh_total = dh + df_inject[t + 1]
            dx, dh_prev = self.gru_f.backward(f_caches[t], dh_total * mask, grads)
            dx_cells[:, t] += dx
            dh = dh_prev + dh_total * ~mask
        # backward chain ran t = T-1..2, so backprop runs t = 2..T-1
        db = np.zeros((S, self.hidden), dtype=self.dtype)
        for t in range(2, T):
            db_total = db + db_inject[t - 1]
            mask = (t <= np.asarray(lengths) - 1)[:, None]
            dx, db_prev = self.gru_b.backward(b_caches[t], db_total * mask, grads)
            dx_cells[:, t] += dx
            db = db_prev + db_total * ~mask
        np.add.at(grads["emb"], rows.reshape(-1), dx_cells.reshape(-1, self.embed))
        grads["emb"][self.vocab.pad] = 0.0
        return loss, tokens, grads

    def loss_and_grads(self, corpus, num_streams=2):
        total_loss, total_tokens = 0.0, 0
        grads = nn.zeros_like_params(self.params())
        for batch in make_null_aligned_batches(corpus, num_streams):
            loss, tokens, g = self.loss_and_grads_batch(batch)
            total_loss += loss
            total_tokens += tokens
            for name in grads:
                grads[name] += g[name]
        return total_loss, total_tokens, grads

    def loss_only(self, corpus, num_streams=2):
        total = 0.0
        for batch in make_null_aligned_batches(corpus, num_streams):
            loss, _, _ = self.loss_and_grads_batch(batch, want_grads=False)
            total += loss
        return total

    def train(self, corpus, hyper):
        batches = make_null_aligned_batches(corpus, hyper.num_streams)
        params = self.params()
        history = []
        total_tokens = 0
        t_start = time.perf_counter()
        lr = hyper.lr
        for epoch in range(hyper.epochs):
            ep_loss, ep_tokens = 0.0, 0
            for batch in batches:
                loss, tokens, grads = self.loss_and_grads_batch(batch)
                if not np.isfinite(loss):
                    raise nn.NumericError("non-finite training loss")
                if tokens:
                    for g in grads.values():
                        g /= batch.num_rows
                    nn.sgd_step(params, grads, lr, hyper.clip)
                ep_loss += loss
                ep_tokens += tokens
            self.emb[self.vocab.pad] = 0.0
            nn.check_finite(params)
            history.append(ep_loss / max(ep_tokens, 1))
            total_tokens += ep_tokens
            lr *= hyper.lr_decay
        wall = time.perf_counter() - t_start
        return {
            "epoch_loss": history,
            "tokens": total_tokens,
            "seconds": wall,
            "wps": total_tokens / wall if wall > 0 else float("inf"),
        }

    def _header(self):
        return {
            "arch": self.arch,
            "vocab_size": len(self.vocab),
            "shortlist_size": self.vocab.shortlist_size,
            "embed": self.embed,
            "hidden": self.hidden,
            "succ": 0,
            "dtype": str(np.dtype(self.dtype)),
            "words": self.vocab.words,
        }

    def save(self, path):
        nn.save_model(path, self._header(), self.params())

    def _restore(self, tensors):
        for name, arr in self.params().items():
            if name not in tensors or tensors[name].shape != arr.shape:
                raise ValueError("model container missing tensor %s" % name)
            arr[...] = tensors[name]


def train_uni(model, corpus, hyper):
    return model.train(corpus, hyper)


def train_su(model, corpus, hyper):
    return model.train(corpus, hyper)


def train_bi(model, corpus, hyper):
    return model.train(corpus, hyper)


def load_rnnlm(path):
    """Rebuild a model from the container written by `save`."""
    header, tensors = nn.load_model(path)
    vocab = Vocabulary(header["words"], header["shortlist_size"])
    dtype = np.dtype(header["dtype"])
    arch = header["arch"]
    if arch == "uni":
        model = UniRnnlm(vocab, header["hidden"], header["embed"], dtype=dtype)
    elif arch == "su":
        model = SuRnnlm(vocab, header["hidden"], header["embed"], succ=header["succ"],
                        future_hidden=header.get("future_hidden") or None, dtype=dtype)
    elif arch == "bi":
        model = BiRnnlm(vocab, header["hidden"], header["embed"], dtype=dtype)
    else:
        raise ValueError("unknown architecture %r" % arch)
    model._restore(tensors)
    return model
