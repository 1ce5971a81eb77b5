"""Text corpora, vocabularies, and the batch layouts the trainers consume."""

import collections
import os

import numpy as np

SENT_BEGIN = "<s>"
SENT_END = "</s>"
OOV = "<oov>"
OOS = "<oos>"
NULL = "<null>"
PAD = "<pad>"
SPECIALS = (SENT_BEGIN, SENT_END, OOV, OOS, NULL, PAD)


class CorpusError(ValueError):
    pass


class Vocabulary:
    """Bidirectional word/id map with a frequency shortlist.

    Id layout: in-shortlist corpus words by descending frequency (ties broken
    lexicographically), then the six reserved tokens, then any remaining
    corpus words in the same frequency order.  `shortlist_size` counts the
    leading block including the reserved tokens, so every id at or above it
    shares the single out-of-shortlist slot of an output layer.
    """

    def __init__(self, words, shortlist_size):
        self.words = list(words)
        self.index = {}
        for i, w in enumerate(self.words):
            if w in self.index:
                raise CorpusError("duplicate word in vocabulary: %r" % w)
            self.index[w] = i
        for tok in SPECIALS:
            if tok not in self.index:
                raise CorpusError("missing reserved token: %r" % tok)
        self.shortlist_size = shortlist_size
        self.sent_begin = self.index[SENT_BEGIN]
        self.sent_end = self.index[SENT_END]
        self.oov = self.index[OOV]
        self.oos = self.index[OOS]
        self.null = self.index[NULL]
        self.pad = self.index[PAD]
        if not (0 < shortlist_size <= len(self.words)):
            raise CorpusError("shortlist size out of range")
        if self.pad >= shortlist_size:
            raise CorpusError("reserved tokens must sit inside the shortlist block")

    def __len__(self):
        return len(self.words)

    @property
    def n_oos(self):
        """Number of words that share the out-of-shortlist output slot."""
        return len(self.words) - self.shortlist_size

    @property
    def output_size(self):
        # one slot per shortlist id plus the shared out-of-shortlist slot
        return self.shortlist_size + 1

    def output_index(self, word_id):
        return word_id if word_id < self.shortlist_size else self.shortlist_size

    def is_oos(self, word_id):
        return word_id >= self.shortlist_size

    def id_of(self, word):
        """Input-side id of a surface form, unknowns collapse to the OOV id."""
        return self.index.get(word, self.oov)

    def encode(self, sentence):
        """Encode one sentence (string or token list) with boundary tokens."""
        if isinstance(sentence, str):
            sentence = sentence.split()
        ids = [self.sent_begin]
        ids.extend(self.index.get(w, self.oov) for w in sentence)
        ids.append(self.sent_end)
        return ids

    def decode(self, ids):
        """Surface forms for ids, dropping boundary tokens."""
        out = []
        for i in ids:
            if i in (self.sent_begin, self.sent_end):
                continue
            out.append(self.words[i])
        return out

    def save(self, path):
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            for w in self.words:
                fh.write(w + "\n")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            words = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
        try:
            first = words.index(SENT_BEGIN)
        except ValueError:
            raise CorpusError("vocabulary file lacks reserved tokens: %s" % path)
        if tuple(words[first:first + len(SPECIALS)]) != SPECIALS:
            raise CorpusError("reserved token block malformed in %s" % path)
        return cls(words, shortlist_size=first + len(SPECIALS))


def build_vocabulary(lines, shortlist_size=None):
    """Count whitespace tokens and build a Vocabulary.

    `shortlist_size` is the number of corpus words kept in the shortlist;
    None (or anything at least the number of distinct words) keeps them all.
    """
    counts = collections.Counter()
    for line in lines:
        for tok in line.split():
            if tok in SPECIALS:
                raise CorpusError("reserved token appears in corpus text: %r" % tok)
            counts[tok] += 1
    if not counts:
        raise CorpusError("empty corpus")
    ordered = sorted(counts, key=lambda w: (-counts[w], w))
    if shortlist_size is None:
        shortlist_size = len(ordered)
    if shortlist_size <= 0 or shortlist_size > len(ordered) + len(SPECIALS):
        raise CorpusError("shortlist size out of range")
    n_short = min(shortlist_size, len(ordered))
    words = ordered[:n_short] + list(SPECIALS) + ordered[n_short:]
    return Vocabulary(words, shortlist_size=n_short + len(SPECIALS))


class TokenizedCorpus:
    """Encoded sentences plus the vocabulary that produced them."""

    def __init__(self, vocab, sentences):
        self.vocab = vocab
        self.sentences = sentences
        # predicted positions per sentence: everything after the begin token
        self.word_count = sum(len(s) - 1 for s in sentences)

    @classmethod
    def from_lines(cls, vocab, lines):
        sentences = [vocab.encode(line) for line in lines if line.strip()]
        if not sentences:
            raise CorpusError("empty corpus")
        return cls(vocab, sentences)

    @classmethod
    def from_file(cls, vocab, path):
        with open(path) as fh:
            return cls.from_lines(vocab, fh)


class FutureWindow:
    """The k word ids following one sentence position, padded past the end."""

    __slots__ = ("ids", "pad_mask")

    def __init__(self, ids, pad_mask):
        self.ids = tuple(ids)
        self.pad_mask = tuple(pad_mask)


def future_window(vocab, sentence, t, k):
    """Window of the k ids after position t; PAD fills slots past the end."""
    if not 0 <= t < len(sentence):
        raise CorpusError("position out of range")
    if k < 0:
        raise CorpusError("window size must be non-negative")
    ids, mask = [], []
    for j in range(1, k + 1):
        if t + j < len(sentence):
            ids.append(sentence[t + j])
            mask.append(False)
        else:
            ids.append(vocab.pad)
            mask.append(True)
    return FutureWindow(ids, mask)


class SplicedBatch:
    """Sentences spliced end to end into a fixed number of parallel streams.

    `streams[s]` is an int array of ids, `step_targets[s][t] == streams[s][t+1]`.
    When built with `future_k > 0`, `step_windows[s]` holds the (T-1, k) window
    ids aligned with the targets; windows never cross a sentence boundary.
    """

    def __init__(self, streams, sentence_starts, step_windows=None):
        self.streams = streams
        self.sentence_starts = sentence_starts
        self.step_targets = [s[1:] for s in streams]
        self.step_windows = step_windows

    @property
    def num_streams(self):
        return len(self.streams)


def make_spliced_batches(corpus, num_streams, future_k=0):
    """Greedy splicing: each sentence joins the currently shortest stream."""
    if num_streams <= 0:
        raise CorpusError("need at least one stream")
    if num_streams > len(corpus.sentences):
        raise CorpusError("more streams than sentences")
    streams = [[] for _ in range(num_streams)]
    starts = [[] for _ in range(num_streams)]
    for sent in corpus.sentences:
        s = min(range(num_streams), key=lambda i: len(streams[i]))
        starts[s].append(len(streams[s]))
        streams[s].extend(sent)
    windows = None
    if future_k > 0:
        vocab = corpus.vocab
        windows = []
        for s in range(num_streams):
            win = np.full((max(len(streams[s]) - 1, 0), future_k), vocab.pad, dtype=np.int64)
            bounds = starts[s] + [len(streams[s])]
            for b, (lo, hi) in enumerate(zip(bounds, bounds[1:])):
                sent = streams[s][lo:hi]
                # target at step t predicts stream position t+1
                for t in range(lo, hi - 1):
                    fw = future_window(vocab, sent, t + 1 - lo, future_k)
                    win[t] = fw.ids
            windows.append(win)
    streams = [np.asarray(s, dtype=np.int64) for s in streams]
    return SplicedBatch(streams, starts, windows)


class AlignedNullBatch:
    """Sentences left-aligned into a rectangle, short rows padded with NULL."""

    def __init__(self, rows, lengths, null_id):
        self.rows = rows                      # (S, T) int array
        self.lengths = np.asarray(lengths)    # true encoded lengths
        self.null_mask = rows == null_id      # True on padding cells

    @property
    def num_rows(self):
        return self.rows.shape[0]


def make_null_aligned_batches(corpus, num_streams):
    """Rectangular batches of `num_streams` consecutive sentences each."""
    if num_streams <= 0:
        raise CorpusError("need at least one stream")
    if num_streams > len(corpus.sentences):
        raise CorpusError("more streams than sentences")
    null_id = corpus.vocab.null
    batches = []
    for off in range(0, len(corpus.sentences), num_streams):
        group = corpus.sentences[off:off + num_streams]
        width = max(len(s) for s in group)
        rows = np.full((len(group), width), null_id, dtype=np.int64)
        for r, sent in enumerate(group):
            rows[r, :len(sent)] = sent
        batches.append(AlignedNullBatch(rows, [len(s) for s in group], null_id))
    return batches
