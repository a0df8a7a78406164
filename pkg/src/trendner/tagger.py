"""Feature-based linear-chain CRF tagger: feature templates, exact
inference, and maximum-likelihood training.

Scores decompose into per-position emission scores (binary indicator
features times a feature-by-label weight block) plus a dense label-pair
transition block; the two blocks live in one flat weight vector.

The training objective is the standard unconstrained chain likelihood, so
a single-token sequence under zero weights is exactly uniform over the
label set. Decoding additionally masks structurally invalid BIO moves
(anything into ``I-X`` except from ``B-X``/``I-X``, including at the start
of the sequence) with -inf, so decoded output is always valid BIO.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .corpus import Instance
from .evalmetrics import entity_f1
from .textproc import URL_TOKEN

logger = logging.getLogger(__name__)


def bio_labels(entity_types: Sequence[str]) -> tuple[str, ...]:
    """Ordered BIO label set; ``O`` first so it wins index tie-breaks."""
    labels = ["O"]
    for etype in entity_types:
        labels += [f"B-{etype}", f"I-{etype}"]
    return tuple(labels)


def word_shape(token: str) -> str:
    if token.isdigit():
        return "dd"
    if token.isalpha():
        if token.isupper():
            return "XX"
        if token.islower():
            return "xx"
        if token[0].isupper() and token[1:].islower():
            return "Xx"
    return "mixed"


def extract_features(inst: Instance, i: int) -> list[str]:
    """Indicator feature names for position ``i`` of an instance.

    Identity features use normalized tokens (so URLs fall together);
    shape, capitalization, and affix features come from the raw token.
    Boundary positions omit prev/next features rather than padding.
    """
    raw = inst.raw_tokens[i]
    norm = inst.norm_tokens[i]
    low = raw.lower()
    feats = [f"w0={norm}", f"shape={word_shape(raw)}"]
    for n in (1, 2, 3):
        if len(low) >= n:
            feats.append(f"pre{n}={low[:n]}")
            feats.append(f"suf{n}={low[-n:]}")
    if raw[:1].isupper():
        feats.append("cap")
    if i == 0:
        feats.append("start")
    if len(raw) > 1 and raw.startswith("@"):
        feats.append("mention")
    if len(raw) > 1 and raw.startswith("#"):
        feats.append("hashtag")
    if norm == URL_TOKEN:
        feats.append("url")
    if i > 0:
        feats.append(f"w-1={inst.norm_tokens[i - 1]}")
    if i + 1 < len(inst):
        feats.append(f"w+1={inst.norm_tokens[i + 1]}")
    return feats


@dataclass(frozen=True)
class TaggerConfig:
    """Optimizer and regularization settings (batch gradient ascent with
    per-coordinate adaptive scaling and step halving on rejection)."""

    l2: float = 1e-3
    max_epochs: int = 100
    patience: int = 10
    learning_rate: float = 0.5
    tol: float = 1e-7
    max_halvings: int = 25


@dataclass
class TrainLog:
    """Trajectory of one ``fit`` call: accepted objective values (the
    initial state first), per-epoch dev F1, and why training stopped."""

    objectives: list[float]
    dev_f1: list[float]
    best_epoch: int
    stop_reason: str


@dataclass
class _Encoded:
    n_seqs: int
    max_len: int
    lengths: np.ndarray  # (B,)
    feat_ids: np.ndarray  # (F,) feature vocabulary indices
    feat_pos: np.ndarray  # (F,) flat position index b * max_len + t
    gold: np.ndarray | None  # (B, max_len) label indices, -1 padding


def _bio_masks(labels: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    n = len(labels)
    trans_ok = np.ones((n, n), dtype=bool)
    start_ok = np.ones(n, dtype=bool)
    for j, lab in enumerate(labels):
        if lab.startswith("I-"):
            etype = lab[2:]
            start_ok[j] = False
            allowed = (f"B-{etype}", f"I-{etype}")
            for i, prev in enumerate(labels):
                trans_ok[i, j] = prev in allowed
    return trans_ok, start_ok


class CrfModel:
    """Linear-chain CRF over BIO labels with a growable feature vocabulary.

    The weight vector has length ``|vocab| * |labels| + |labels|**2``:
    emission weights first (feature-major), then the transition matrix.
    The vocabulary grows only inside ``fit``; unseen features elsewhere
    are ignored.
    """

    def __init__(self, labels: Sequence[str], config: TaggerConfig | None = None):
        labels = tuple(labels)
        if not labels or len(set(labels)) != len(labels):
            raise ValueError("label set must be nonempty and free of duplicates")
        self.labels = labels
        self.config = config or TaggerConfig()
        self.feature_vocab: dict[str, int] = {}
        self.weights = np.zeros(len(labels) * len(labels))
        self._label_index = {lab: i for i, lab in enumerate(labels)}
        self._trans_ok, self._start_ok = _bio_masks(labels)

    # -- weight layout -------------------------------------------------

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    def _emit_w(self, w: np.ndarray | None = None) -> np.ndarray:
        w = self.weights if w is None else w
        n_feat, n_lab = len(self.feature_vocab), self.n_labels
        return w[: n_feat * n_lab].reshape(n_feat, n_lab)

    def _trans_w(self, w: np.ndarray | None = None) -> np.ndarray:
        w = self.weights if w is None else w
        n_lab = self.n_labels
        return w[len(self.feature_vocab) * n_lab :].reshape(n_lab, n_lab)

    def _grow_weights(self, added: int) -> None:
        n_lab = self.n_labels
        old_v = len(self.feature_vocab) - added
        self.weights = np.concatenate(
            [self.weights[: old_v * n_lab], np.zeros(added * n_lab), self.weights[old_v * n_lab :]]
        )

    # -- encoding ------------------------------------------------------

    def register_features(self, instances: Sequence[Instance]) -> int:
        """Grow the feature vocabulary from training instances.

        New features get zero weights; existing weights are untouched, so
        warm-started models keep what they learned. Returns the number of
        features added. Called by ``fit``; everywhere else unseen features
        are simply ignored.
        """
        vocab = self.feature_vocab
        added = 0
        for inst in instances:
            for t in range(len(inst)):
                for name in extract_features(inst, t):
                    if name not in vocab:
                        vocab[name] = len(vocab)
                        added += 1
        if added:
            self._grow_weights(added)
        return added

    def _encode(self, instances: Sequence[Instance], with_gold: bool) -> _Encoded:
        if not instances:
            raise ValueError("empty instance list")
        lengths = np.array([len(inst) for inst in instances], dtype=np.int64)
        if (lengths == 0).any():
            raise ValueError("instances must have at least one token")
        max_len = int(lengths.max())
        vocab = self.feature_vocab
        feat_ids: list[int] = []
        feat_pos: list[int] = []
        gold = None
        if with_gold:
            gold = np.full((len(instances), max_len), -1, dtype=np.int64)
        for b, inst in enumerate(instances):
            if with_gold:
                try:
                    gold[b, : len(inst)] = [self._label_index[lab] for lab in inst.labels]
                except KeyError as exc:
                    raise ValueError(f"label {exc.args[0]!r} not in model label set") from None
            base = b * max_len
            for t in range(len(inst)):
                pos = base + t
                for name in extract_features(inst, t):
                    idx = vocab.get(name)
                    if idx is not None:
                        feat_ids.append(idx)
                        feat_pos.append(pos)
        return _Encoded(
            len(instances),
            max_len,
            lengths,
            np.asarray(feat_ids, dtype=np.int64),
            np.asarray(feat_pos, dtype=np.int64),
            gold,
        )

    def _emissions(self, enc: _Encoded, w: np.ndarray | None = None) -> np.ndarray:
        n_lab = self.n_labels
        n_pos = enc.n_seqs * enc.max_len
        emissions = np.zeros((n_pos, n_lab))
        if enc.feat_ids.size:
            rows = self._emit_w(w)[enc.feat_ids]
            for y in range(n_lab):
                emissions[:, y] = np.bincount(enc.feat_pos, weights=rows[:, y], minlength=n_pos)
        return emissions.reshape(enc.n_seqs, enc.max_len, n_lab)

    # -- likelihood ----------------------------------------------------

    def log_likelihood_and_gradient(
        self, batch: Sequence[Instance]
    ) -> tuple[float, np.ndarray]:
        """L2-regularized conditional log-likelihood of the batch and its
        gradient (empirical minus expected feature counts, minus l2 * w).

        Expectations come from forward-backward in log space; any
        non-finite intermediate is a hard error.
        """
        enc = self._encode(list(batch), with_gold=True)
        return self._objective(enc)

    def sequence_log_prob(self, inst: Instance) -> float:
        """log p(gold labels | tokens) for one instance, unregularized."""
        enc = self._encode([inst], with_gold=True)
        value, _ = self._objective(enc, l2=0.0)
        return value

    def _objective(
        self, enc: _Encoded, w: np.ndarray | None = None, l2: float | None = None
    ) -> tuple[float, np.ndarray]:
        w = self.weights if w is None else w
        l2 = self.config.l2 if l2 is None else l2
        n_lab = self.n_labels
        n_seqs, max_len, lengths = enc.n_seqs, enc.max_len, enc.lengths
        emissions = self._emissions(enc, w)
        trans = self._trans_w(w)
        gold = enc.gold
        valid = np.arange(max_len)[None, :] < lengths[:, None]
        last = lengths - 1

        alpha = np.empty((n_seqs, max_len, n_lab))
        alpha[:, 0] = emissions[:, 0]
        for t in range(1, max_len):
            alpha[:, t] = (
                logsumexp(alpha[:, t - 1][:, :, None] + trans[None, :, :], axis=1)
                + emissions[:, t]
            )
        log_z = logsumexp(alpha[np.arange(n_seqs), last], axis=1)

        beta = np.zeros((n_seqs, max_len, n_lab))
        for t in range(max_len - 2, -1, -1):
            val = logsumexp(
                trans[None, :, :] + (emissions[:, t + 1] + beta[:, t + 1])[:, None, :], axis=2
            )
            beta[:, t] = np.where((last == t)[:, None], 0.0, val)

        safe_gold = np.maximum(gold, 0)
        gold_emit = np.take_along_axis(emissions, safe_gold[..., None], axis=2)[..., 0]
        gold_score = np.where(valid, gold_emit, 0.0).sum(axis=1)
        if max_len > 1:
            prev, nxt = safe_gold[:, :-1], safe_gold[:, 1:]
            edge_valid = valid[:, 1:]
            gold_score += np.where(edge_valid, trans[prev, nxt], 0.0).sum(axis=1)
        value = float(np.sum(gold_score - log_z)) - 0.5 * l2 * float(w @ w)

        # node marginals; padded positions are zeroed after the exp
        gamma = np.exp(alpha + beta - log_z[:, None, None])
        gamma[~valid] = 0.0
        marg = -gamma.reshape(n_seqs * max_len, n_lab)
        flat_valid = np.nonzero(valid.ravel())[0]
        marg[flat_valid, gold.ravel()[flat_valid]] += 1.0

        grad_e = np.zeros((len(self.feature_vocab), n_lab))
        if enc.feat_ids.size:
            contrib = marg[enc.feat_pos]
            for y in range(n_lab):
                grad_e[:, y] = np.bincount(
                    enc.feat_ids, weights=contrib[:, y], minlength=grad_e.shape[0]
                )

        grad_t = np.zeros((n_lab, n_lab))
        if max_len > 1:
            np.add.at(grad_t, (prev[edge_valid], nxt[edge_valid]), 1.0)
            for t in range(max_len - 1):
                active = last > t
                if not active.any():
                    continue
                xi = np.exp(
                    alpha[:, t][:, :, None]
                    + trans[None, :, :]
                    + (emissions[:, t + 1] + beta[:, t + 1])[:, None, :]
                    - log_z[:, None, None]
                )
                xi[~active] = 0.0
                grad_t -= xi.sum(axis=0)

        grad = np.concatenate([grad_e.ravel(), grad_t.ravel()]) - l2 * w
        if not np.isfinite(value) or not np.isfinite(grad).all():
            raise FloatingPointError("CRF objective diverged (non-finite value or gradient)")
        return value, grad

    def chain_potentials(self, inst: Instance) -> tuple[np.ndarray, np.ndarray]:
        """Emission score matrix (length x labels) and the transition
        matrix under the current weights, without BIO masking. Exposed so
        chain computations can be checked against direct enumeration."""
        enc = self._encode([inst], with_gold=False)
        return self._emissions(enc)[0].copy(), self._trans_w().copy()

    # -- decoding --------------------------------------------------------

    def decode(self, instances: Sequence[Instance]) -> list[list[str]]:
        """Viterbi decode a batch; always returns valid BIO sequences."""
        instances = list(instances)
        if not instances:
            return []
        enc = self._encode(instances, with_gold=False)
        return [
            [self.labels[y] for y in path] for path in self._decode_encoded(enc)
        ]

    def viterbi(self, inst: Instance) -> list[str]:
        """Exact argmax labeling of one instance under the masked chain
        score; argmax ties break toward the lowest label index."""
        return self.decode([inst])[0]

    def _decode_encoded(self, enc: _Encoded) -> list[list[int]]:
        n_lab = self.n_labels
        n_seqs, max_len = enc.n_seqs, enc.max_len
        emissions = self._emissions(enc)
        trans = np.where(self._trans_ok, self._trans_w(), -np.inf)

        delta = np.empty((n_seqs, max_len, n_lab))
        delta[:, 0] = np.where(self._start_ok[None, :], emissions[:, 0], -np.inf)
        backptr = np.zeros((n_seqs, max_len, n_lab), dtype=np.int64)
        for t in range(1, max_len):
            scores = delta[:, t - 1][:, :, None] + trans[None, :, :]
            bp = np.argmax(scores, axis=1)  # first max = lowest previous index
            best = np.take_along_axis(scores, bp[:, None, :], axis=1)[:, 0, :]
            delta[:, t] = best + emissions[:, t]
            backptr[:, t] = bp

        paths: list[list[int]] = []
        for b in range(n_seqs):
            end = int(enc.lengths[b]) - 1
            y = int(np.argmax(delta[b, end]))
            path = [y]
            for t in range(end, 0, -1):
                y = int(backptr[b, t, y])
                path.append(y)
            path.reverse()
            paths.append(path)
        return paths

    # -- training --------------------------------------------------------

    def fit(self, data: Sequence[Instance], dev: Sequence[Instance] | None = None) -> TrainLog:
        """Maximize the regularized likelihood from the current weights.

        Warm start is the point: incremental retraining calls ``fit`` on a
        model that already has weights. Each epoch takes one adaptive
        full-batch step, halving the step until the objective does not
        decrease; when a dev set is given, training early-stops on dev
        entity F1 and the dev-best weights are restored at the end.
        """
        data = list(data)
        if not data:
            raise ValueError("training data must be nonempty")
        cfg = self.config
        self.register_features(data)
        enc = self._encode(data, with_gold=True)
        dev_insts = list(dev) if dev is not None else []
        dev_enc = self._encode(dev_insts, with_gold=False) if dev_insts else None

        value, grad = self._objective(enc)
        accum = np.zeros_like(self.weights)
        lr = cfg.learning_rate
        objectives = [value]
        dev_scores: list[float] = []
        best_w: np.ndarray | None = None
        best_f1 = -1.0
        best_epoch = 0
        since_best = 0
        if dev_enc is not None:
            # logged for the trajectory; only trained epochs are restore
            # candidates, so a warm start cannot freeze training
            dev_scores.append(self._dev_f1(dev_insts, dev_enc))

        stop = "epoch budget exhausted"
        for epoch in range(1, cfg.max_epochs + 1):
            accum += grad * grad
            direction = grad / (np.sqrt(accum) + 1e-8)
            w_old = self.weights
            accepted = False
            for _ in range(cfg.max_halvings):
                w_new = w_old + lr * direction
                new_value, new_grad = self._objective(enc, w=w_new)
                if new_value >= value - 1e-12:
                    accepted = True
                    break
                lr *= 0.5
            if not accepted:
                stop = "no ascent step accepted"
                break
            improvement = new_value - value
            self.weights = w_new
            value, grad = new_value, new_grad
            objectives.append(value)

            if dev_enc is not None:
                f1 = self._dev_f1(dev_insts, dev_enc)
                dev_scores.append(f1)
                if f1 >= best_f1:
                    # ties keep the most recent weights so warm-started
                    # retraining can still absorb new data on a plateau
                    if f1 > best_f1:
                        since_best = 0
                    else:
                        since_best += 1
                    best_f1, best_epoch = f1, epoch
                    best_w = self.weights.copy()
                else:
                    since_best += 1
                if since_best >= cfg.patience:
                    stop = "dev F1 patience exhausted"
                    break
            if improvement < cfg.tol * (1.0 + abs(value)):
                stop = "objective converged"
                break

        if best_w is not None:
            self.weights = best_w
        logger.debug(
            "fit: %d instances, %d accepted epochs, stop=%s, best dev F1 %.4f",
            len(data), len(objectives) - 1, stop, best_f1,
        )
        return TrainLog(objectives, dev_scores, best_epoch, stop)

    def _dev_f1(self, dev_insts: Sequence[Instance], dev_enc: _Encoded) -> float:
        paths = self._decode_encoded(dev_enc)
        preds = [[self.labels[y] for y in path] for path in paths]
        return entity_f1(dev_insts, preds).overall.f1

    # -- persistence -----------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Self-describing dump: label set, vocabulary, weights, config."""
        meta = {
            "labels": list(self.labels),
            "features": list(self.feature_vocab),
            "config": asdict(self.config),
        }
        blob = np.frombuffer(json.dumps(meta).encode("utf-8"), dtype=np.uint8)
        with open(path, "wb") as fh:
            np.savez(fh, weights=self.weights, meta=blob)

    @classmethod
    def load(cls, path: str | Path) -> "CrfModel":
        with np.load(path, allow_pickle=False) as archive:
            meta = json.loads(bytes(archive["meta"]).decode("utf-8"))
            weights = archive["weights"].copy()
        model = cls(meta["labels"], TaggerConfig(**meta["config"]))
        model.feature_vocab = {name: i for i, name in enumerate(meta["features"])}
        expected = len(model.feature_vocab) * model.n_labels + model.n_labels**2
        if weights.shape != (expected,):
            raise ValueError(f"corrupt model file: expected {expected} weights")
        model.weights = weights
        return model
