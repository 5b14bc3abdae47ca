"""Topic modeling over the two corpora and their similarity experiments.

Posts become bags of content lemmas, a collapsed Gibbs sampler fits LDA,
topic quality is scored by co-occurrence coherence, and corpus-level
comparison works on the Jaccard similarity of topics' top term sets.
The partition experiment asks whether the code-switched corpus talks
about different things than the monolingual one: it repeatedly halves
the monolingual corpus and compares across-corpus topic similarity with
the similarity between the two monolingual halves.
"""

from __future__ import annotations

import io
import logging
import zipfile
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from numba import njit

from . import DataError, PipelineError
from .stats import wilcoxon_rank_sum
from .tokens import lemma, tokenize

logger = logging.getLogger(__name__)

DEFAULT_BETA = 0.01
DEFAULT_ITERATIONS = 1000
DEFAULT_RANK_CUTOFF = 10_000
KEEP_POS = frozenset({"NOUN", "VERB", "ADJ", "ADV"})

_DATA = Path(__file__).parent / "data"
_MODEL_FORMAT = "cswitch-lda-1"


@dataclass(frozen=True)
class Document:
    """One post as a bag of term ids over a shared vocabulary."""

    post_id: str
    counts: dict[int, int]
    source: str  # cs | mono

    def size(self) -> int:
        return sum(self.counts.values())


class Vocabulary:
    """Immutable term list with id lookup; ids are positions."""

    def __init__(self, terms: Sequence[str]):
        self.terms = tuple(terms)
        self._index = {t: i for i, t in enumerate(self.terms)}

    def __len__(self) -> int:
        return len(self.terms)

    def __getitem__(self, term_id: int) -> str:
        return self.terms[term_id]

    def id_of(self, term: str) -> int | None:
        return self._index.get(term)


class PreprocessResult(NamedTuple):
    documents: list[Document]
    vocabulary: Vocabulary
    dropped: int  # posts left empty by filtering


def load_rank_list(path: str | Path) -> dict[str, int]:
    """Word frequency ranks, TSV ``word<TAB>rank`` with rank 1 = most common."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"rank list not found: {path}")
    ranks: dict[str, int] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected word<TAB>rank")
        try:
            rank = int(parts[1])
        except ValueError:
            raise DataError(f"{path}:{lineno}: rank {parts[1]!r} is not an "
                            f"integer") from None
        ranks.setdefault(parts[0], rank)
    return ranks


_STOPWORD_CACHE: dict[str, frozenset[str]] = {}


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    if path is None:
        path = _DATA / "stopwords.txt"
    key = str(path)
    if key not in _STOPWORD_CACHE:
        words = set()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                words.add(line.lower())
        _STOPWORD_CACHE[key] = frozenset(words)
    return _STOPWORD_CACHE[key]


def load_pos_sidecar(path: str | Path) -> dict[str, list[tuple[int, str, str]]]:
    """Token annotations per post: TSV rows of post id, token index, lemma, POS.

    Indices refer to the tokenization of the text handed to preprocess.
    """
    sidecar: dict[str, list[tuple[int, str, str]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(f"{path}:{lineno}: expected "
                                f"post_id<TAB>token_index<TAB>lemma<TAB>pos")
            post_id, index_text, lem, pos = parts
            try:
                index = int(index_text)
            except ValueError:
                raise DataError(f"{path}:{lineno}: token index {index_text!r} "
                                f"is not an integer") from None
            sidecar.setdefault(post_id, []).append((index, lem, pos))
    return sidecar


def preprocess(posts: Iterable[tuple[str, str, str]],
               rank_list: dict[str, int],
               stopwords: frozenset[str] | None = None,
               pos_sidecar: dict[str, list[tuple[int, str, str]]] | None = None,
               rank_cutoff: int = DEFAULT_RANK_CUTOFF) -> PreprocessResult:
    """Turn (post_id, text, source) triples into documents over one vocabulary.

    With sidecar annotations for a post, its lemma and POS columns are
    authoritative and only content classes (noun, verb, adjective,
    adverb) survive; otherwise every alphabetic token is lemmatized by
    rule.  Either way a term must be a non-stopword ranked in the most
    common ``rank_cutoff`` words of the rank list.  Posts left empty are
    dropped and tallied.
    """
    if stopwords is None:
        stopwords = load_stopwords()
    bags: list[tuple[str, list[str], str]] = []
    dropped = 0
    for post_id, text, source in posts:
        terms = []
        rows = pos_sidecar.get(post_id) if pos_sidecar else None
        if rows is not None:
            toks = tokenize(text)
            for index, lem, pos in rows:
                if not 0 <= index < len(toks):
                    raise DataError(
                        f"post {post_id}: annotation references token {index}, "
                        f"but the text has {len(toks)} tokens")
                if pos in KEEP_POS:
                    terms.append(lem.lower())
        else:
            terms = [lemma(t.text) for t in tokenize(text)
                     if t.text.isalpha()]
        kept = [t for t in terms
                if t not in stopwords
                and rank_list.get(t, rank_cutoff + 1) <= rank_cutoff]
        if kept:
            bags.append((post_id, kept, source))
        else:
            dropped += 1
    if dropped:
        logger.info("preprocess dropped %d empty post(s)", dropped)
    vocab = Vocabulary(sorted({t for _, terms, _ in bags for t in terms}))
    documents = []
    for post_id, terms, source in bags:
        counts: dict[int, int] = {}
        for t in terms:
            tid = vocab.id_of(t)
            counts[tid] = counts.get(tid, 0) + 1
        documents.append(Document(post_id, counts, source))
    return PreprocessResult(documents, vocab, dropped)


@dataclass(frozen=True)
class TopicModel:
    n_topics: int
    vocab: tuple[str, ...]
    topic_term: np.ndarray  # T x V, rows sum to 1
    doc_topic: np.ndarray   # D x T, rows sum to 1
    doc_ids: tuple[str, ...]
    alpha: float
    beta: float
    iterations: int
    seed: int
    topic_coherence: tuple[float, ...]
    coherence: float


@njit(cache=True)
def _gibbs(doc_of, word_of, z, ndk, nkw, nk, nd,
           alpha, beta, n_vocab, iterations, seed):  # pragma: no cover
    # xorshift64* seeded through splitmix64; own generator so runs are
    # bitwise reproducible regardless of numpy/numba versions
    state = np.uint64(seed)
    state = (state + np.uint64(0x9E3779B97F4A7C15))
    state = (state ^ (state >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    state = (state ^ (state >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    state = state ^ (state >> np.uint64(31))
    if state == np.uint64(0):
        state = np.uint64(0x9E3779B97F4A7C15)

    n_topics = nk.shape[0]
    n_tokens = doc_of.shape[0]
    p = np.empty(n_topics, dtype=np.float64)

    for i in range(n_tokens):
        state ^= state >> np.uint64(12)
        state ^= state << np.uint64(25)
        state ^= state >> np.uint64(27)
        draw = state * np.uint64(0x2545F4914F6CDD1D)
        k = np.int64(draw % np.uint64(n_topics))
        z[i] = k
        d = doc_of[i]
        ndk[d, k] += 1
        nkw[k, word_of[i]] += 1
        nk[k] += 1
        nd[d] += 1

    vbeta = n_vocab * beta
    for _ in range(iterations):
        for i in range(n_tokens):
            d = doc_of[i]
            w = word_of[i]
            k = z[i]
            ndk[d, k] -= 1
            nkw[k, w] -= 1
            nk[k] -= 1
            total = 0.0
            for t in range(n_topics):
                val = (ndk[d, t] + alpha) * (nkw[t, w] + beta) / (nk[t] + vbeta)
                p[t] = val
                total += val
            state ^= state >> np.uint64(12)
            state ^= state << np.uint64(25)
            state ^= state >> np.uint64(27)
            draw = state * np.uint64(0x2545F4914F6CDD1D)
            u = (draw >> np.uint64(11)) * (1.0 / 9007199254740992.0) * total
            acc = 0.0
            knew = n_topics - 1
            for t in range(n_topics):
                acc += p[t]
                if acc >= u:
                    knew = t
                    break
            z[i] = knew
            ndk[d, knew] += 1
            nkw[knew, w] += 1
            nk[knew] += 1


def _instances(docs: Sequence[Document]) -> tuple[np.ndarray, np.ndarray]:
    doc_of: list[int] = []
    word_of: list[int] = []
    for d, doc in enumerate(docs):
        for w, c in sorted(doc.counts.items()):
            doc_of.extend([d] * c)
            word_of.extend([w] * c)
    return (np.asarray(doc_of, dtype=np.int32),
            np.asarray(word_of, dtype=np.int32))


def fit_lda(docs: Sequence[Document], vocab: Vocabulary, n_topics: int,
            alpha: float | None = None, beta: float = DEFAULT_BETA,
            iterations: int = DEFAULT_ITERATIONS, seed: int = 0,
            coherence_top_n: int = 10) -> TopicModel:
    """Collapsed Gibbs LDA; same seed gives bitwise-identical models.

    ``alpha`` defaults to 50 / n_topics.  Distributions are read off the
    final count state with the usual smoothing, so every row of both
    matrices is a proper probability vector.
    """
    if n_topics < 2:
        raise PipelineError(f"need at least 2 topics, got {n_topics}")
    if not docs:
        raise PipelineError("no documents to fit")
    if n_topics > len(vocab):
        raise PipelineError(f"{n_topics} topics exceed the vocabulary "
                            f"size {len(vocab)}")
    if alpha is None:
        alpha = 50.0 / n_topics
    doc_of, word_of = _instances(docs)
    n_docs = len(docs)
    n_vocab = len(vocab)
    z = np.zeros(len(doc_of), dtype=np.int64)
    ndk = np.zeros((n_docs, n_topics), dtype=np.int64)
    nkw = np.zeros((n_topics, n_vocab), dtype=np.int64)
    nk = np.zeros(n_topics, dtype=np.int64)
    nd = np.zeros(n_docs, dtype=np.int64)
    _gibbs(doc_of, word_of, z, ndk, nkw, nk, nd,
           float(alpha), float(beta), n_vocab, iterations, seed)

    topic_term = (nkw + beta) / (nk[:, None] + n_vocab * beta)
    doc_topic = (ndk + alpha) / (nd[:, None] + n_topics * alpha)
    model = TopicModel(
        n_topics=n_topics, vocab=vocab.terms, topic_term=topic_term,
        doc_topic=doc_topic, doc_ids=tuple(d.post_id for d in docs),
        alpha=float(alpha), beta=float(beta), iterations=iterations,
        seed=seed, topic_coherence=(), coherence=0.0)
    scores = tuple(
        coherence(top_terms(model, t, coherence_top_n), docs, vocab)
        for t in range(n_topics))
    return TopicModel(
        n_topics=n_topics, vocab=vocab.terms, topic_term=topic_term,
        doc_topic=doc_topic, doc_ids=model.doc_ids,
        alpha=float(alpha), beta=float(beta), iterations=iterations,
        seed=seed, topic_coherence=scores,
        coherence=float(sum(scores) / len(scores)))


def top_terms(model: TopicModel, topic: int, n: int = 100) -> tuple[str, ...]:
    """Highest-probability terms of one topic; rank ties break by spelling."""
    row = model.topic_term[topic]
    order = sorted(range(len(row)), key=lambda w: (-row[w], model.vocab[w]))
    return tuple(model.vocab[w] for w in order[:n])


def _doc_sets(docs: Sequence[Document],
              vocab: Vocabulary) -> dict[str, set[int]]:
    appears: dict[str, set[int]] = {}
    for d, doc in enumerate(docs):
        for tid in doc.counts:
            appears.setdefault(vocab[tid], set()).add(d)
    return appears


def coherence(terms: Sequence[str], docs: Sequence[Document],
              vocab: Vocabulary, top_n: int | None = None,
              variant: str = "npmi") -> float:
    """Co-occurrence coherence of a term list against a document set.

    npmi: normalized PMI from document frequencies under add-one
    smoothing of presence/absence, averaged over all ordered pairs.
    Two terms present in every document score exactly 1; terms that
    never co-occur score negative.  umass: log((d_ij + 1) / d_j) over
    rank-ordered pairs, the classic asymmetric variant, for
    cross-checking.  Pairs involving a term absent from every document
    are skipped and tallied.
    """
    if variant not in ("npmi", "umass"):
        raise ValueError(f"unknown coherence variant {variant!r}")
    if top_n is not None:
        terms = terms[:top_n]
    if len(terms) < 2:
        raise ValueError("coherence needs at least two terms")
    appears = _doc_sets(docs, vocab)
    n_docs = len(docs)
    scores: list[float] = []
    skipped = 0
    for i, a in enumerate(terms):
        for j, b in enumerate(terms):
            if i == j:
                continue
            if variant == "umass" and j <= i:
                continue
            da = appears.get(a, ())
            db = appears.get(b, ())
            if not da or not db:
                skipped += 1
                continue
            dab = len(set(da) & set(db))
            if variant == "npmi":
                pa = (len(da) + 1.0) / (n_docs + 2.0)
                pb = (len(db) + 1.0) / (n_docs + 2.0)
                pab = (dab + 1.0) / (n_docs + 2.0)
                scores.append(np.log(pab / (pa * pb)) / -np.log(pab))
            else:
                scores.append(float(np.log((dab + 1.0) / len(db))))
    if skipped:
        logger.warning("coherence skipped %d pair(s) with zero document "
                       "frequency", skipped)
    if not scores:
        return 0.0
    return float(sum(scores) / len(scores))


def select_topic_count(docs: Sequence[Document], vocab: Vocabulary,
                       t_range: Sequence[int], seeds: Sequence[int] = (0,),
                       alpha: float | None = None, beta: float = DEFAULT_BETA,
                       iterations: int = DEFAULT_ITERATIONS,
                       coherence_top_n: int = 10,
                       ) -> tuple[int, TopicModel]:
    """Pick the topic count whose fits score the best mean coherence.

    Each candidate count is fitted once per seed; its score is the mean
    model coherence across seeds.  Ties go to the smaller count.  The
    returned model is the best-scoring fit at the winning count.
    """
    if not t_range:
        raise PipelineError("empty topic-count range")
    if not seeds:
        raise PipelineError("need at least one seed")
    best: tuple[float, int, TopicModel] | None = None
    for n_topics in sorted(t_range):
        fits = [fit_lda(docs, vocab, n_topics, alpha=alpha, beta=beta,
                        iterations=iterations, seed=s,
                        coherence_top_n=coherence_top_n) for s in seeds]
        score = sum(m.coherence for m in fits) / len(fits)
        if best is None or score > best[0]:
            best = (score, n_topics, max(fits, key=lambda m: m.coherence))
    return best[1], best[2]


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


def model_similarity(m1: TopicModel, m2: TopicModel, mode: str = "avg",
                     top_terms_n: int = 100) -> float:
    """Topic-set similarity between two models.

    Every topic pairs with every topic of the other model through the
    Jaccard similarity of their top term sets; avg mode means over all
    pairs, max mode keeps the two most similar topics.
    """
    if mode not in ("avg", "max"):
        raise ValueError(f"unknown similarity mode {mode!r}")
    sets1 = [set(top_terms(m1, t, top_terms_n)) for t in range(m1.n_topics)]
    sets2 = [set(top_terms(m2, t, top_terms_n)) for t in range(m2.n_topics)]
    scores = [jaccard(s1, s2) for s1 in sets1 for s2 in sets2]
    if mode == "avg":
        return float(sum(scores) / len(scores))
    return float(max(scores))


def partition_experiment(cs_docs: Sequence[Document],
                         mono_docs: Sequence[Document], vocab: Vocabulary,
                         n_partitions: int = 30, seed: int = 0,
                         n_topics: int = 10, mode: str = "avg",
                         top_terms_n: int = 100, alpha: float | None = None,
                         beta: float = DEFAULT_BETA,
                         iterations: int = DEFAULT_ITERATIONS,
                         reuse_cs: bool = False,
                         ) -> tuple[list[float], list[float], float | None]:
    """Across-corpus vs within-corpus topic similarity, many random halvings.

    Per partition the monolingual documents are shuffled and halved (an
    odd one out lands on a random side), three models are fitted, and
    two scores recorded: inter, the mean similarity of the CS model to
    each half's model, and intra, the similarity between the two halves'
    models.  A rank-sum test over the two score lists gives the p-value;
    with a single partition it is None.  ``reuse_cs`` fits the CS model
    once up front instead of per partition.
    """
    if len(mono_docs) < 2:
        raise PipelineError("need at least two monolingual documents to halve")
    if n_partitions < 1:
        raise PipelineError("need at least one partition")
    rng = np.random.default_rng(seed)

    def fit(subset: Sequence[Document]) -> TopicModel:
        fit_seed = int(rng.integers(0, 2**31))
        return fit_lda(subset, vocab, n_topics, alpha=alpha, beta=beta,
                       iterations=iterations, seed=fit_seed)

    cs_model = fit(cs_docs) if reuse_cs else None
    inter: list[float] = []
    intra: list[float] = []
    for _ in range(n_partitions):
        perm = rng.permutation(len(mono_docs))
        half = len(mono_docs) // 2
        if len(mono_docs) % 2:
            half += int(rng.integers(0, 2))
        first = [mono_docs[i] for i in perm[:half]]
        second = [mono_docs[i] for i in perm[half:]]
        m1 = fit(first)
        m2 = fit(second)
        mcs = cs_model if cs_model is not None else fit(cs_docs)
        inter.append((model_similarity(mcs, m1, mode, top_terms_n)
                      + model_similarity(mcs, m2, mode, top_terms_n)) / 2.0)
        intra.append(model_similarity(m1, m2, mode, top_terms_n))
    if n_partitions < 2:
        return inter, intra, None
    return inter, intra, wilcoxon_rank_sum(inter, intra).p_value


def save_model(model: TopicModel, path: str | Path) -> None:
    """Versioned dump of everything needed to reload or audit a model.

    The file is a plain npz archive, but written with a fixed zip
    timestamp so that identical models produce identical bytes; np.savez
    would stamp the wall clock into the archive.
    """
    arrays = {
        "format": np.array(_MODEL_FORMAT),
        "vocab": np.array(model.vocab, dtype=np.str_),
        "topic_term": model.topic_term,
        "doc_topic": model.doc_topic,
        "doc_ids": np.array(model.doc_ids, dtype=np.str_),
        "params": np.array([model.alpha, model.beta], dtype=np.float64),
        "run": np.array([model.n_topics, model.iterations, model.seed],
                        dtype=np.int64),
        "topic_coherence": np.array(model.topic_coherence, dtype=np.float64),
        "coherence": np.array(model.coherence, dtype=np.float64),
    }
    with zipfile.ZipFile(path, "w", zipfile.ZIP_STORED) as archive:
        for name, array in arrays.items():
            buffer = io.BytesIO()
            np.lib.format.write_array(buffer, np.asanyarray(array))
            info = zipfile.ZipInfo(f"{name}.npy", date_time=(1980, 1, 1, 0, 0, 0))
            archive.writestr(info, buffer.getvalue())


def load_model(path: str | Path) -> TopicModel:
    with np.load(path, allow_pickle=False) as data:
        if "format" not in data or str(data["format"]) != _MODEL_FORMAT:
            raise DataError(f"{path}: not a recognized model dump")
        run = data["run"]
        params = data["params"]
        return TopicModel(
            n_topics=int(run[0]),
            vocab=tuple(str(t) for t in data["vocab"]),
            topic_term=data["topic_term"],
            doc_topic=data["doc_topic"],
            doc_ids=tuple(str(i) for i in data["doc_ids"]),
            alpha=float(params[0]), beta=float(params[1]),
            iterations=int(run[1]), seed=int(run[2]),
            topic_coherence=tuple(float(c) for c in data["topic_coherence"]),
            coherence=float(data["coherence"]),
        )


def export_top_terms(model: TopicModel, n: int = 10) -> str:
    """CSV table of each topic's coherence and top terms, best topics first."""
    import csv
    import io
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["topic", "coherence", "top_terms"])
    order = sorted(range(model.n_topics),
                   key=lambda t: (-model.topic_coherence[t], t))
    for t in order:
        writer.writerow([t, f"{model.topic_coherence[t]:.4f}",
                         " ".join(top_terms(model, t, n))])
    return buf.getvalue()
