"""Word lattices: file IO, search, posteriors, pruning, and rescoring.

A lattice is a DAG with a single initial and a single final node.  Nodes
carry times; arcs carry a surface word plus acoustic and language-model
scores, both natural-log.  A path scores ac_scale * sum(acoustic) +
lm_scale * sum(lm) over its arcs.

Rescoring replaces arc lm scores with a combination of the old score and a
recurrent model's word probability.  Exact rescoring would need one hidden
state per distinct path prefix, so prefixes are merged when they agree on
their last n-1 words, keeping the hidden state of the best-scoring arrival.
A model that also reads succeeding words gets states extended with the
pending window of the next k words; a state is only continued along arcs
that realize the words it promised, and the output lattice expands to keep
those promises distinct.
"""

import heapq
import math
import os
from dataclasses import dataclass

from . import interpolate

NEG_INF = float("-inf")

# incoming lm scores are floored here before log-linear mixing, so a path a
# previous pass killed can still be revived by the new model
LM_FLOOR = math.log(1e-12)


class LatticeError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = "line %d: %s" % (line, message)
        super().__init__(message)
        self.line = line


class Node:
    __slots__ = ("id", "time")

    def __init__(self, id, time):
        self.id = id
        self.time = time


class Arc:
    __slots__ = ("id", "start", "end", "word", "ac", "lm")

    def __init__(self, id, start, end, word, ac=0.0, lm=0.0):
        self.id = id
        self.start = start
        self.end = end
        self.word = word
        self.ac = ac
        self.lm = lm


class Lattice:
    def __init__(self, nodes, arcs):
        self.nodes = nodes
        self.arcs = arcs
        self.out_arcs = None
        self.in_arcs = None
        self.initial = None
        self.final = None
        self.topo = None

    def finish(self):
        """Build adjacency, locate the endpoints, and validate structure."""
        n = len(self.nodes)
        if not self.arcs:
            raise LatticeError("lattice has no arcs")
        for i, nd in enumerate(self.nodes):
            if nd.id != i:
                raise LatticeError("node ids not consecutive from 0")
        for i, a in enumerate(self.arcs):
            if a.id != i:
                raise LatticeError("arc ids not consecutive from 0")
            if not 0 <= a.start < n or not 0 <= a.end < n:
                raise LatticeError("arc %d endpoint out of range" % a.id)
            if a.start == a.end:
                raise LatticeError("arc %d is a self loop" % a.id)
        self.out_arcs = [[] for _ in range(n)]
        self.in_arcs = [[] for _ in range(n)]
        for a in self.arcs:
            self.out_arcs[a.start].append(a.id)
            self.in_arcs[a.end].append(a.id)
        starts = [i for i in range(n) if not self.in_arcs[i]]
        ends = [i for i in range(n) if not self.out_arcs[i]]
        if len(starts) != 1:
            raise LatticeError("expected one initial node, found %d" % len(starts))
        if len(ends) != 1:
            raise LatticeError("expected one final node, found %d" % len(ends))
        self.initial, self.final = starts[0], ends[0]
        # Kahn's algorithm; a heap keeps the order deterministic
        indeg = [len(self.in_arcs[i]) for i in range(n)]
        ready = [i for i in range(n) if indeg[i] == 0]
        heapq.heapify(ready)
        topo = []
        while ready:
            u = heapq.heappop(ready)
            topo.append(u)
            for aid in self.out_arcs[u]:
                v = self.arcs[aid].end
                indeg[v] -= 1
                if indeg[v] == 0:
                    heapq.heappush(ready, v)
        if len(topo) != n:
            raise LatticeError("lattice contains a cycle")
        self.topo = topo
        for name, frontier, step in (
                ("unreachable", [self.initial], self.out_arcs),
                ("cannot reach the final node", [self.final], self.in_arcs)):
            seen = set(frontier)
            while frontier:
                u = frontier.pop()
                for aid in step[u]:
                    a = self.arcs[aid]
                    v = a.end if step is self.out_arcs else a.start
                    if v not in seen:
                        seen.add(v)
                        frontier.append(v)
            if len(seen) != n:
                missing = min(set(range(n)) - seen)
                raise LatticeError("node %d %s" % (missing, name))
        for a in self.arcs:
            if self.nodes[a.end].time + 1e-9 < self.nodes[a.start].time:
                raise LatticeError("arc %d runs backwards in time" % a.id)
        return self


# ---- SLF subset IO ----

def _parse_int(fields, key, line):
    try:
        return int(fields[key])
    except ValueError:
        raise LatticeError("field %s is not an integer: %r" % (key, fields[key]), line)


def _parse_float(fields, key, line, default=None):
    if key not in fields:
        if default is None:
            raise LatticeError("missing field %s" % key, line)
        return default
    try:
        return float(fields[key])
    except ValueError:
        raise LatticeError("field %s is not a number: %r" % (key, fields[key]), line)


def parse_slf(text):
    """Parse the lattice subset: a counts line N=.. L=.., node lines
    I=.. t=.., and arc lines J=.. S=.. E=.. W=.. a=.. l=..  Fields on a line
    may come in any order; blank lines and # comments are skipped."""
    n_decl = l_decl = None
    node_rows = {}
    arc_rows = {}
    for line_no, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = {}
        for tok in stripped.split():
            if "=" not in tok:
                raise LatticeError("expected key=value, got %r" % tok, line_no)
            key, val = tok.split("=", 1)
            if key in fields:
                raise LatticeError("duplicate field %s" % key, line_no)
            fields[key] = val
        if "J" in fields:
            if n_decl is None:
                raise LatticeError("arc line before the N=/L= counts line", line_no)
            j = _parse_int(fields, "J", line_no)
            if j in arc_rows:
                raise LatticeError("duplicate arc id %d" % j, line_no)
            for key in ("S", "E", "W"):
                if key not in fields:
                    raise LatticeError("missing field %s" % key, line_no)
            s = _parse_int(fields, "S", line_no)
            e = _parse_int(fields, "E", line_no)
            if not 0 <= s < n_decl or not 0 <= e < n_decl:
                raise LatticeError("arc endpoint out of range", line_no)
            ac = _parse_float(fields, "a", line_no, default=0.0)
            lm = _parse_float(fields, "l", line_no, default=0.0)
            arc_rows[j] = (s, e, fields["W"], ac, lm)
        elif "I" in fields:
            if n_decl is None:
                raise LatticeError("node line before the N=/L= counts line", line_no)
            i = _parse_int(fields, "I", line_no)
            if i in node_rows:
                raise LatticeError("duplicate node id %d" % i, line_no)
            if not 0 <= i < n_decl:
                raise LatticeError("node id %d out of range" % i, line_no)
            node_rows[i] = _parse_float(fields, "t", line_no)
        elif "N" in fields and "L" in fields:
            if n_decl is not None:
                raise LatticeError("second N=/L= counts line", line_no)
            n_decl = _parse_int(fields, "N", line_no)
            l_decl = _parse_int(fields, "L", line_no)
        elif "VERSION" in fields or "UTTERANCE" in fields:
            continue
        else:
            raise LatticeError("unrecognized line: %r" % stripped, line_no)
    if n_decl is None:
        raise LatticeError("missing N=/L= counts line")
    if len(node_rows) != n_decl:
        raise LatticeError("declared %d nodes, found %d" % (n_decl, len(node_rows)))
    if len(arc_rows) != l_decl:
        raise LatticeError("declared %d arcs, found %d" % (l_decl, len(arc_rows)))
    nodes = [Node(i, node_rows[i]) for i in range(n_decl)]
    arcs = [Arc(j, *arc_rows[j]) for j in range(l_decl)]
    return Lattice(nodes, arcs).finish()


def write_slf(lat):
    out = ["VERSION=1.0", "N=%d\tL=%d" % (len(lat.nodes), len(lat.arcs))]
    for nd in lat.nodes:
        out.append("I=%d\tt=%.2f" % (nd.id, nd.time))
    for a in lat.arcs:
        out.append("J=%d\tS=%d\tE=%d\tW=%s\ta=%.6f\tl=%.6f"
                   % (a.id, a.start, a.end, a.word, a.ac, a.lm))
    return "\n".join(out) + "\n"


def load_slf(path):
    with open(path, encoding="utf-8") as f:
        return parse_slf(f.read())


def save_slf(lat, path):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(write_slf(lat))
    os.replace(tmp, path)


# ---- search ----

@dataclass
class Hypothesis:
    words: list
    arc_ids: tuple
    ac: float
    lm: float
    total: float


def _arc_weight(arc, ac_scale, lm_scale):
    return ac_scale * arc.ac + lm_scale * arc.lm


def _make_hypothesis(lat, arc_ids, ac_scale, lm_scale):
    arcs = [lat.arcs[aid] for aid in arc_ids]
    ac = sum(a.ac for a in arcs)
    lm = sum(a.lm for a in arcs)
    return Hypothesis([a.word for a in arcs], tuple(arc_ids), ac, lm,
                      ac_scale * ac + lm_scale * lm)


def best_path(lat, ac_scale=1.0, lm_scale=1.0):
    """Highest-scoring path.  Arcs relax in ascending id order with a strict
    comparison, so ties resolve the same way every run."""
    score = {lat.initial: 0.0}
    back = {}
    for u in lat.topo:
        if u not in score:
            continue
        for aid in lat.out_arcs[u]:
            a = lat.arcs[aid]
            s = score[u] + _arc_weight(a, ac_scale, lm_scale)
            if a.end not in score or s > score[a.end]:
                score[a.end] = s
                back[a.end] = aid
    arc_ids = []
    u = lat.final
    while u != lat.initial:
        aid = back[u]
        arc_ids.append(aid)
        u = lat.arcs[aid].start
    arc_ids.reverse()
    return _make_hypothesis(lat, arc_ids, ac_scale, lm_scale)


def nbest(lat, n, ac_scale=1.0, lm_scale=1.0):
    """Best-first search for the top n word sequences.  The cost-to-go is the
    exact best completion score, so hypotheses come out in true score order;
    duplicate word sequences are dropped; ties order by arc-id sequence."""
    if n <= 0:
        return []
    togo = {lat.final: 0.0}
    for u in reversed(lat.topo):
        if u == lat.final:
            continue
        best = NEG_INF
        for aid in lat.out_arcs[u]:
            a = lat.arcs[aid]
            best = max(best, _arc_weight(a, ac_scale, lm_scale) + togo[a.end])
        togo[u] = best
    heap = [(-togo[lat.initial], (), lat.initial, 0.0)]
    seen = set()
    out = []
    while heap and len(out) < n:
        neg_f, arc_ids, u, g = heapq.heappop(heap)
        if u == lat.final:
            words = tuple(lat.arcs[aid].word for aid in arc_ids)
            if words not in seen:
                seen.add(words)
                out.append(_make_hypothesis(lat, list(arc_ids), ac_scale, lm_scale))
            continue
        for aid in lat.out_arcs[u]:
            a = lat.arcs[aid]
            g2 = g + _arc_weight(a, ac_scale, lm_scale)
            heapq.heappush(heap, (-(g2 + togo[a.end]), arc_ids + (aid,), a.end, g2))
    return out


def write_nbest(hyps, path):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as f:
        for h in hyps:
            f.write("%.6f\t%.6f\t%.6f\t%s\n" % (h.total, h.ac, h.lm, " ".join(h.words)))
    os.replace(tmp, path)


def read_nbest(path):
    hyps = []
    with open(path, encoding="utf-8") as f:
        for line_no, raw in enumerate(f, 1):
            line = raw.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise LatticeError("expected total, acoustic, lm, words", line_no)
            try:
                total, ac, lm = (float(p) for p in parts[:3])
            except ValueError:
                raise LatticeError("bad score field", line_no)
            hyps.append(Hypothesis(parts[3].split(), (), ac, lm, total))
    return hyps


def enumerate_paths(lat, limit=100000):
    """All complete paths as arc-id tuples, in depth-first arc-id order."""
    out = []
    stack = [(lat.initial, ())]
    while stack:
        u, arc_ids = stack.pop()
        if u == lat.final:
            out.append(arc_ids)
            continue
        for aid in reversed(lat.out_arcs[u]):
            stack.append((lat.arcs[aid].end, arc_ids + (aid,)))
        if len(out) > limit:
            raise LatticeError("more than %d paths" % limit)
    return out


def path_words(lat, arc_ids):
    return [lat.arcs[aid].word for aid in arc_ids]


# ---- posteriors and pruning ----

def _logadd(a, b):
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


def _alpha_beta(lat, ac_scale, lm_scale):
    alpha = [NEG_INF] * len(lat.nodes)
    beta = [NEG_INF] * len(lat.nodes)
    alpha[lat.initial] = 0.0
    for u in lat.topo:
        for aid in lat.out_arcs[u]:
            a = lat.arcs[aid]
            alpha[a.end] = _logadd(alpha[a.end],
                                   alpha[u] + _arc_weight(a, ac_scale, lm_scale))
    beta[lat.final] = 0.0
    for u in reversed(lat.topo):
        for aid in lat.out_arcs[u]:
            a = lat.arcs[aid]
            beta[u] = _logadd(beta[u],
                              _arc_weight(a, ac_scale, lm_scale) + beta[a.end])
    return alpha, beta, alpha[lat.final]


def arc_posteriors(lat, ac_scale=1.0, lm_scale=1.0):
    """Per-arc posterior probabilities from the forward-backward sums,
    indexed by arc id, plus the total path mass.  The posteriors of the arcs
    crossing any topological cut sum to one."""
    alpha, beta, log_z = _alpha_beta(lat, ac_scale, lm_scale)
    post = [math.exp(alpha[a.start] + _arc_weight(a, ac_scale, lm_scale)
                     + beta[a.end] - log_z) for a in lat.arcs]
    return post, log_z


def prune(lat, beam, ac_scale=1.0, lm_scale=1.0):
    """Drop arcs whose log posterior falls more than beam below the best one.
    The best path always survives, then ids are renumbered compactly in the
    original order."""
    if beam < 0:
        raise ValueError("beam must be nonnegative")
    alpha, beta, log_z = _alpha_beta(lat, ac_scale, lm_scale)
    log_post = [alpha[a.start] + _arc_weight(a, ac_scale, lm_scale)
                + beta[a.end] - log_z for a in lat.arcs]
    cutoff = max(log_post) - beam
    keep = {a.id for a in lat.arcs if log_post[a.id] >= cutoff}
    keep.update(best_path(lat, ac_scale, lm_scale).arc_ids)
    # drop arcs stranded by the cut: both endpoints must still connect
    fwd = {lat.initial}
    for u in lat.topo:
        if u not in fwd:
            continue
        for aid in lat.out_arcs[u]:
            if aid in keep:
                fwd.add(lat.arcs[aid].end)
    bwd = {lat.final}
    for u in reversed(lat.topo):
        if u not in bwd:
            continue
        for aid in lat.in_arcs[u]:
            if aid in keep:
                bwd.add(lat.arcs[aid].start)
    live = fwd & bwd
    arcs_kept = [a for a in lat.arcs
                 if a.id in keep and a.start in live and a.end in live]
    node_ids = sorted({a.start for a in arcs_kept} | {a.end for a in arcs_kept})
    node_map = {old: new for new, old in enumerate(node_ids)}
    nodes = [Node(node_map[i], lat.nodes[i].time) for i in node_ids]
    arcs = [Arc(j, node_map[a.start], node_map[a.end], a.word, a.ac, a.lm)
            for j, a in enumerate(arcs_kept)]
    return Lattice(nodes, arcs).finish()


# ---- rescoring ----

class ProbCache:
    """Memo for hidden states and output distributions during rescoring.
    Hidden states are keyed by the exact word-id sequence consumed so far,
    distributions additionally by the succeeding-word window.  A hit returns
    the identical array, so cached and uncached runs give the same bytes."""

    def __init__(self):
        self.h = {}
        self.dist = {}
        self.h_hits = self.h_misses = 0
        self.dist_hits = self.dist_misses = 0


def _state_h(model, cache, full, h_prev, w):
    if cache is None:
        return model.advance(h_prev, w)
    h = cache.h.get(full)
    if h is None:
        cache.h_misses += 1
        h = model.advance(h_prev, w)
        cache.h[full] = h
    else:
        cache.h_hits += 1
    return h


def _state_dist(model, cache, full, window, h, alpha):
    win = window if model.k else None
    if cache is None:
        return model.output_dist(h, win, alpha)
    key = (full, window)
    dist = cache.dist.get(key)
    if dist is None:
        cache.dist_misses += 1
        dist = model.output_dist(h, win, alpha)
        cache.dist[key] = dist
    else:
        cache.dist_hits += 1
    return dist


def _future_sets(lat, word_ids, k, pad_id):
    """For every node, the set of k-word windows that can follow it on some
    path, padded past the final node."""
    futures = [None] * len(lat.nodes)
    futures[lat.final] = {(pad_id,) * k}
    for u in reversed(lat.topo):
        if u == lat.final:
            continue
        futs = set()
        for aid in lat.out_arcs[u]:
            a = lat.arcs[aid]
            for f in futures[a.end]:
                futs.add(((word_ids[aid],) + f)[:k])
        futures[u] = futs
    return [sorted(f) if f is not None else None for f in futures]


def _trunc_hist(seq, n_hist):
    if n_hist <= 1:
        return ()
    return seq[-(n_hist - 1):]


class _State:
    __slots__ = ("g", "ac", "lm", "h", "full")

    def __init__(self, g, ac, lm, h, full):
        self.g = g
        self.ac = ac
        self.lm = lm
        self.h = h
        self.full = full


def _rescore(lat, model, combine, n_hist, alpha, no_merge, cache,
             ac_scale, lm_scale):
    if n_hist < 1:
        raise ValueError("history length must be at least 1")
    vocab = model.vocab
    k = model.k
    word_ids = [vocab.id_of(a.word) for a in lat.arcs]
    futures = _future_sets(lat, word_ids, k, vocab.pad)

    full0 = (vocab.sent_begin,)
    hist0 = full0 if no_merge else _trunc_hist(full0, n_hist)
    h0 = _state_h(model, cache, full0, model.zero_state(), vocab.sent_begin)
    key0 = (hist0, None)
    final_key = (None, None)
    states = [dict() for _ in lat.nodes]
    states[lat.initial][key0] = _State(0.0, 0.0, 0.0, h0, full0)
    transitions = []

    for u in lat.topo:
        for skey, st in sorted(states[u].items(), key=lambda kv: kv[0]):
            fut = skey[1]
            for aid in lat.out_arcs[u]:
                a = lat.arcs[aid]
                w = word_ids[aid]
                if k and fut is not None:
                    # only continue along arcs this state promised
                    if fut[0] != w:
                        continue
                    cand = [f for f in futures[a.end] if f[:k - 1] == fut[1:]]
                elif k:
                    cand = futures[a.end]
                else:
                    cand = ((),)
                full_v = st.full + (w,)
                hist_v = full_v if no_merge else _trunc_hist(full_v, n_hist)
                for fut_v in cand:
                    dist = _state_dist(model, cache, st.full, fut_v, st.h, alpha)
                    new_lm = combine(a.lm, model.word_logprob_from_dist(dist, w))
                    dkey = final_key if a.end == lat.final else (hist_v, fut_v)
                    transitions.append((u, skey, a.end, dkey, aid, new_lm))
                    g = st.g + ac_scale * a.ac + lm_scale * new_lm
                    cur = states[a.end].get(dkey)
                    if cur is None or g > cur.g:
                        h_v = _state_h(model, cache, full_v, st.h, w)
                        states[a.end][dkey] = _State(g, st.ac + a.ac,
                                                     st.lm + new_lm, h_v, full_v)

    node_ids = {(lat.initial, key0): 0}
    origin = [(lat.initial, hist0, None)]
    for u in lat.topo:
        if u in (lat.initial, lat.final):
            continue
        for skey in sorted(states[u]):
            node_ids[(u, skey)] = len(origin)
            origin.append((u, skey[0], skey[1]))
    node_ids[(lat.final, final_key)] = len(origin)
    origin.append((lat.final, None, None))

    nodes = []
    for (u, _), out_id in sorted(node_ids.items(), key=lambda kv: kv[1]):
        nodes.append(Node(out_id, lat.nodes[u].time))
    rows = sorted((node_ids[(u, skey)], aid, node_ids[(v, dkey)], new_lm)
                  for u, skey, v, dkey, aid, new_lm in transitions)
    arcs = [Arc(j, s, e, lat.arcs[aid].word, lat.arcs[aid].ac, new_lm)
            for j, (s, aid, e, new_lm) in enumerate(rows)]
    out = Lattice(nodes, arcs).finish()
    out.node_origin = origin
    out.arc_origin = [aid for _, aid, _, _ in rows]
    return out


def _linear_combine(lam):
    def f(old_lm, lp):
        if lam == 0.0:
            return old_lm
        if lam == 1.0:
            return lp
        return interpolate.safe_ln(
            interpolate.linear(math.exp(old_lm), math.exp(lp), lam))
    return f


def _loglinear_combine(lam):
    def f(old_lm, lp):
        return interpolate.loglinear_score(max(old_lm, LM_FLOOR), lp, lam)
    return f


def _combine_fn(combine, lam):
    if combine == "linear":
        return _linear_combine(lam)
    if combine == "loglinear":
        return _loglinear_combine(lam)
    raise ValueError("unknown combine rule %r" % (combine,))


def rescore_lattice_uni(lat, model, n_hist=3, lam=0.75, no_merge=False,
                        cache=None, ac_scale=1.0, lm_scale=1.0,
                        combine="linear"):
    """Rescore with a left-to-right model, mixing its word probability
    linearly with the existing arc probability under weight lam.  States
    merge on the last n_hist - 1 words; no_merge keeps full histories."""
    return _rescore(lat, model, _combine_fn(combine, lam), n_hist, 1.0,
                    no_merge, cache, ac_scale, lm_scale)


def rescore_lattice_su(lat, model, n_hist=3, lam=0.3, alpha=0.7,
                       no_merge=False, cache=None, ac_scale=1.0, lm_scale=1.0,
                       combine="loglinear"):
    """Rescore with a succeeding-word model, mixing its smoothed log
    probability log-linearly with the existing arc score under weight lam.
    The state expansion follows the model's window size; with k=0 and the
    same combine rule this reduces exactly to rescore_lattice_uni."""
    return _rescore(lat, model, _combine_fn(combine, lam), n_hist, alpha,
                    no_merge, cache, ac_scale, lm_scale)


# ---- hypothesis-list rescoring ----

def rescore_nbest(hyps, lm_fn, ac_scale=1.0, lm_scale=1.0):
    """Replace each hypothesis' lm total with lm_fn(words) and re-rank.
    The sort is stable, so exact ties keep their incoming order."""
    out = []
    for h in hyps:
        lm = lm_fn(h.words)
        out.append(Hypothesis(h.words, h.arc_ids, h.ac, lm,
                              ac_scale * h.ac + lm_scale * lm))
    out.sort(key=lambda h: -h.total)
    return out


def make_two_stage_scorer(ngram, uni, su=None, config=None, alpha=0.7):
    """Build an lm_fn for rescore_nbest.  Per word, the n-gram and
    left-to-right probabilities mix linearly; with a succeeding-word model
    its smoothed probability then mixes in log-linearly.  With
    normalize_locally the combined score is renormalized over the candidate
    vocabulary at each position."""
    if config is None:
        config = interpolate.InterpConfig()
    config.validate()
    vocab = uni.vocab
    skip = {vocab.sent_begin, vocab.null, vocab.pad}
    candidates = [i for i in range(len(vocab.words)) if i not in skip]

    def combined(hist_ids, w, dist_u, dist_s):
        p_ng = math.exp(ngram.logprob(hist_ids, w))
        p_u = math.exp(uni.word_logprob_from_dist(dist_u, w))
        if su is None:
            return interpolate.safe_ln(
                interpolate.linear(p_ng, p_u, config.lambda1))
        p_s = math.exp(su.word_logprob_from_dist(dist_s, w))
        return interpolate.two_stage(p_ng, p_u, p_s, config)

    def lm_fn(words):
        ids = vocab.encode(words)
        h_u = uni.zero_state()
        h_s = su.zero_state() if su is not None else None
        total = 0.0
        for t in range(1, len(ids)):
            dist_u, h_u = uni.step(h_u, ids[t - 1])
            dist_s = None
            if su is not None:
                dist_s, h_s = su.step(h_s, ids[t - 1], su._window_ids(ids, t), alpha)
            score = combined(tuple(ids[:t]), ids[t], dist_u, dist_s)
            if config.normalize_locally:
                all_scores = [combined(tuple(ids[:t]), w, dist_u, dist_s)
                              for w in candidates]
                log_z = all_scores[0]
                for s in all_scores[1:]:
                    log_z = _logadd(log_z, s)
                score -= log_z
            total += score
        return total

    return lm_fn
