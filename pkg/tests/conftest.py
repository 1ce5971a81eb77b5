"""Session fixtures: one frozen synthetic setup shared by every module.

Building the corpus and training the four recurrent models takes around a
minute, so everything heavy is session scoped and lazy.  The seeds and
hyperparameters below are load bearing for the trend tests; change them
and the expected orderings move.
"""

import pytest

from lmkit.corpus import TokenizedCorpus, build_vocabulary
from lmkit.models import Hyper, SuRnnlm, UniRnnlm
from lmkit.ngram import train_kn
from lmkit.synth import SyntheticLanguage, build_corpus_lines, build_confusion_set

TRAIN_SEED = 11
TEST_SEED = 12
CONF_SEED = 13
SHORTLIST = 15
HIDDEN = 48
EMBED = 24
TRAIN_TOKENS = 50000
TEST_TOKENS = 5000


def train_hyper():
    return Hyper(epochs=20, lr=0.5, lr_decay=0.95, num_streams=16, bptt=32)


@pytest.fixture(scope="session")
def lang():
    return SyntheticLanguage()


@pytest.fixture(scope="session")
def train_lines(lang):
    return build_corpus_lines(lang, TRAIN_SEED, TRAIN_TOKENS)


@pytest.fixture(scope="session")
def heldout_lines(lang):
    return build_corpus_lines(lang, TEST_SEED, TEST_TOKENS)


@pytest.fixture(scope="session")
def vocab(train_lines):
    return build_vocabulary(train_lines, SHORTLIST)


@pytest.fixture(scope="session")
def train_corpus(vocab, train_lines):
    return TokenizedCorpus.from_lines(vocab, train_lines)


@pytest.fixture(scope="session")
def heldout_corpus(vocab, heldout_lines):
    return TokenizedCorpus.from_lines(vocab, heldout_lines)


@pytest.fixture(scope="session")
def arpa(train_corpus):
    return train_kn(train_corpus, 3)


def _train_su(vocab, corpus, k, seed):
    model = SuRnnlm(vocab, HIDDEN, EMBED, succ=k, seed=seed)
    model.train(corpus, train_hyper())
    return model


@pytest.fixture(scope="session")
def uni(vocab, train_corpus):
    model = UniRnnlm(vocab, HIDDEN, EMBED, seed=40)
    model.train(train_corpus, train_hyper())
    return model


@pytest.fixture(scope="session")
def su1(vocab, train_corpus):
    return _train_su(vocab, train_corpus, 1, 41)


@pytest.fixture(scope="session")
def su2(vocab, train_corpus):
    return _train_su(vocab, train_corpus, 2, 42)


@pytest.fixture(scope="session")
def su3(vocab, train_corpus):
    return _train_su(vocab, train_corpus, 3, 43)


@pytest.fixture(scope="session")
def confusion(lang, arpa):
    return build_confusion_set(lang, arpa, CONF_SEED, per_kind=80, extra=0.8)
