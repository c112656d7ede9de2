"""Trainable log-linear task models over a shared hashed feature space.

One feature space is shared by every language, so surface forms that look
alike contribute to the same weights regardless of language; this is what
lets a single pooled model transfer across languages. All three models are
multinomial logistic layers over sparse hashed features, trained by
mini-batch gradient ascent with a learning-rate search and patience-based
early stopping on the task metric.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .corpus import DepTree, Instance
from .errors import ConfigError, FormatError, ModelStateError
from .graph import ArcScores, chu_liu_edmonds
from .tasks import TaskKind, accuracy, attachment_scores, span_f1

ROOT_FORM = "<root>"
ROOT_UPOS = "<root>"

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class FeatureSpace:
    """Hashed character n-gram space shared across languages."""

    hash_dimension: int = 4096
    ngram_min: int = 2
    ngram_max: int = 4

    def __post_init__(self):
        d = self.hash_dimension
        if d < 1024 or d & (d - 1):
            raise ConfigError("hash_dimension must be a power of two >= 1024")
        if not 1 <= self.ngram_min <= self.ngram_max <= 8:
            raise ConfigError("ngram range must satisfy 1 <= min <= max <= 8")


@dataclass(frozen=True)
class TrainingConfig:
    learning_rates: tuple[float, ...] = (0.1, 0.5)
    batch_size: int = 32
    max_epochs: int = 75
    patience: int = 25
    l2: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not self.learning_rates:
            raise ConfigError("need at least one learning rate")
        if self.patience > self.max_epochs:
            raise ConfigError("patience cannot exceed max_epochs")
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ConfigError("batch_size, max_epochs, and patience must be positive")
        if self.l2 < 0:
            raise ConfigError("l2 must be non-negative")


def _stable_hash(key: str) -> int:
    return zlib.crc32(key.encode("utf-8"))


def hash_features(keys: Sequence[str], dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Hash string features into (sorted indices, counts)."""
    counts: dict[int, float] = {}
    mask = dim - 1
    for key in keys:
        idx = _stable_hash(key) & mask
        counts[idx] = counts.get(idx, 0.0) + 1.0
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices], dtype=np.float64)
    return indices, values


def char_ngrams(text: str, lo: int, hi: int) -> list[str]:
    grams = []
    for k in range(lo, hi + 1):
        grams.extend(text[i : i + k] for i in range(len(text) - k + 1))
    return grams


def featurize_text(text: str, space: FeatureSpace):
    return hash_features(char_ngrams(text, space.ngram_min, space.ngram_max), space.hash_dimension)


def featurize_tokens(tokens: Sequence[str], space: FeatureSpace):
    """One vector per token: n-grams of the token and its window-1 neighbors."""
    vecs = []
    for i, token in enumerate(tokens):
        keys = [f"t:{g}" for g in char_ngrams(token, space.ngram_min, space.ngram_max)]
        prev_tok = tokens[i - 1] if i > 0 else "<s>"
        next_tok = tokens[i + 1] if i + 1 < len(tokens) else "</s>"
        keys.extend(f"p:{g}" for g in char_ngrams(prev_tok, space.ngram_min, space.ngram_max))
        keys.extend(f"n:{g}" for g in char_ngrams(next_tok, space.ngram_min, space.ngram_max))
        vecs.append(hash_features(keys, space.hash_dimension))
    return vecs


def _distance_bucket(dist: int) -> str:
    if dist <= 2:
        return str(dist)
    if dist <= 5:
        return "3-5"
    if dist <= 10:
        return "6-10"
    return ">10"


def arc_feature_keys(tokens, upos, head: int, dep: int) -> list[str]:
    """Conjunction features for the arc head -> dep (positions, 0 = ROOT)."""
    hf = ROOT_FORM if head == 0 else tokens[head - 1]
    hp = ROOT_UPOS if head == 0 else upos[head - 1]
    df = tokens[dep - 1]
    dp = upos[dep - 1]
    direction = "R" if head < dep else "L"
    bucket = _distance_bucket(abs(head - dep))
    pos_pair = f"{hp}|{dp}"
    return [
        f"hf:{hf}",
        f"df:{df}",
        f"hf|df:{hf}|{df}",
        f"pp:{pos_pair}",
        f"dir:{direction}",
        f"dist:{bucket}",
        f"pp|dir:{pos_pair}|{direction}",
        f"pp|dist:{pos_pair}|{bucket}",
        f"pp|dir|dist:{pos_pair}|{direction}|{bucket}",
    ]


def featurize_arc(tokens, upos, head: int, dep: int, space: FeatureSpace):
    return hash_features(arc_feature_keys(tokens, upos, head, dep), space.hash_dimension)


def _log_softmax(z: np.ndarray) -> np.ndarray:
    m = z.max()
    return z - (m + np.log(np.exp(z - m).sum()))


def softmax(z: np.ndarray) -> np.ndarray:
    return np.exp(_log_softmax(z))


# ---------------------------------------------------------------------------
# Training objectives. Each returns (log-likelihood - l2 penalty, gradient)
# so that the analytic gradients can be checked against finite differences.
# ---------------------------------------------------------------------------


def class_objective(weights: np.ndarray, examples, l2: float):
    """Multinomial logistic log-likelihood over ((indices, values), y) pairs."""
    value = 0.0
    grad = np.zeros_like(weights)
    for (idx, vals), y in examples:
        z = weights[:, idx] @ vals
        logp = _log_softmax(z)
        value += logp[y]
        coef = -np.exp(logp)
        coef[y] += 1.0
        grad[:, idx] += np.outer(coef, vals)
    if l2:
        value -= 0.5 * l2 * float((weights * weights).sum())
        grad -= l2 * weights
    return value, grad


def parser_objective(arc_w: np.ndarray, label_w: np.ndarray, sentences, l2: float):
    """Gold-tree log-likelihood: head softmax terms plus arc-label terms.

    `sentences` holds (arc_groups, label_examples) pairs where each arc group
    is (candidate feature vectors, gold candidate index).
    """
    value = 0.0
    grad_arc = np.zeros_like(arc_w)
    grad_label = np.zeros_like(label_w)
    for arc_groups, label_examples in sentences:
        for cand_vecs, gold in arc_groups:
            z = np.array([arc_w[idx] @ vals for idx, vals in cand_vecs])
            logp = _log_softmax(z)
            value += logp[gold]
            p = np.exp(logp)
            for k, (idx, vals) in enumerate(cand_vecs):
                coef = (1.0 if k == gold else 0.0) - p[k]
                grad_arc[idx] += coef * vals
        for (idx, vals), y in label_examples:
            z = label_w[:, idx] @ vals
            logp = _log_softmax(z)
            value += logp[y]
            coef = -np.exp(logp)
            coef[y] += 1.0
            grad_label[:, idx] += np.outer(coef, vals)
    if l2:
        value -= 0.5 * l2 * (float((arc_w * arc_w).sum()) + float((label_w * label_w).sum()))
        grad_arc -= l2 * arc_w
        grad_label -= l2 * label_w
    return value, grad_arc, grad_label


def run_epochs(
    state,
    epoch_fn: Callable,
    eval_fn: Callable,
    max_epochs: int,
    patience: int,
    copy_fn: Callable,
):
    """Run training epochs with patience-based early stopping.

    After each epoch the validation score is computed; training stops once
    `patience` consecutive epochs fail to improve on the best score (or at
    `max_epochs`). Returns (best state, best score, epochs run).
    """
    best_state = None
    best_score = -np.inf
    bad = 0
    epochs_run = 0
    for epoch in range(1, max_epochs + 1):
        state = epoch_fn(state, epoch)
        score = eval_fn(state)
        epochs_run = epoch
        if score > best_score:
            best_score = score
            best_state = copy_fn(state)
            bad = 0
        else:
            bad += 1
        if bad >= patience:
            break
    return best_state, best_score, epochs_run


def _search_learning_rates(config: TrainingConfig, train_one):
    """Train once per learning rate (ascending); keep the best validation score."""
    best = None
    for lr in sorted(config.learning_rates):
        state, score = train_one(lr)
        if best is None or score > best[1]:
            best = (state, score, lr)
    return best


class _ModelBase:
    task: TaskKind

    def __init__(self, space: FeatureSpace):
        self.space = space

    def _require_trained(self):
        if getattr(self, "weights", None) is None:
            raise ModelStateError("model has no weights; train it or set them explicitly")


class TextClassifier(_ModelBase):
    task = TaskKind.CLASSIFICATION

    def __init__(self, space: FeatureSpace, classes: Sequence[str] | None = None):
        super().__init__(space)
        self.classes = tuple(classes) if classes is not None else None
        self.weights: np.ndarray | None = None

    @classmethod
    def with_zero_weights(cls, space: FeatureSpace, classes: Sequence[str]):
        model = cls(space, classes)
        model.weights = np.zeros((len(model.classes), space.hash_dimension))
        return model

    def _examples(self, instances: Sequence[Instance], class_index):
        examples = []
        for inst in instances:
            vec = featurize_text(inst.payload.text, self.space)
            examples.append((vec, class_index[inst.payload.label]))
        return examples

    def fit(self, labeled: Sequence[Instance], validation: Sequence[Instance], config: TrainingConfig) -> float:
        if not labeled or not validation:
            raise ConfigError("need non-empty labeled and validation sets")
        classes = tuple(sorted({i.payload.label for i in labeled if i.payload.label is not None}))
        if not classes:
            raise ConfigError("empty label vocabulary")
        class_index = {c: k for k, c in enumerate(classes)}
        examples = self._examples([i for i in labeled if i.payload.label is not None], class_index)
        val_texts = [featurize_text(i.payload.text, self.space) for i in validation]
        val_gold = [i.payload.label for i in validation]

        def train_one(lr):
            rng = np.random.default_rng(config.rng_seed)
            init = np.zeros((len(classes), self.space.hash_dimension))

            def epoch_fn(weights, _epoch):
                order = rng.permutation(len(examples))
                for start in range(0, len(order), config.batch_size):
                    batch = [examples[int(i)] for i in order[start : start + config.batch_size]]
                    _, grad = class_objective(weights, batch, config.l2)
                    weights += (lr / len(batch)) * grad
                return weights

            def eval_fn(weights):
                preds = [classes[int(np.argmax(weights[:, idx] @ vals))] for idx, vals in val_texts]
                return accuracy(preds, val_gold)

            state, score, _ = run_epochs(
                init, epoch_fn, eval_fn, config.max_epochs, config.patience, np.copy
            )
            return state, score

        weights, score, _lr = _search_learning_rates(config, train_one)
        self.classes = classes
        self.weights = weights
        return score

    def predict_proba(self, instance: Instance) -> np.ndarray:
        self._require_trained()
        idx, vals = featurize_text(instance.payload.text, self.space)
        return softmax(self.weights[:, idx] @ vals)

    def predict(self, instance: Instance) -> str:
        return self.classes[int(np.argmax(self.predict_proba(instance)))]


class SequenceTagger(_ModelBase):
    task = TaskKind.SEQUENCE_TAGGING

    def __init__(self, space: FeatureSpace, tags: Sequence[str] | None = None):
        super().__init__(space)
        self.tags = tuple(tags) if tags is not None else None
        self.weights: np.ndarray | None = None

    @classmethod
    def with_zero_weights(cls, space: FeatureSpace, tags: Sequence[str]):
        model = cls(space, tags)
        model.weights = np.zeros((len(model.tags), space.hash_dimension))
        return model

    def fit(self, labeled: Sequence[Instance], validation: Sequence[Instance], config: TrainingConfig) -> float:
        if not labeled or not validation:
            raise ConfigError("need non-empty labeled and validation sets")
        tags = tuple(sorted({t for i in labeled if i.payload.tags for t in i.payload.tags}))
        if not tags:
            raise ConfigError("empty tag vocabulary")
        tag_index = {t: k for k, t in enumerate(tags)}
        examples = []
        for inst in labeled:
            if inst.payload.tags is None:
                continue
            vecs = featurize_tokens(inst.payload.tokens, self.space)
            examples.extend((vec, tag_index[t]) for vec, t in zip(vecs, inst.payload.tags))
        val_vecs = [featurize_tokens(i.payload.tokens, self.space) for i in validation]
        val_gold = [list(i.payload.tags) for i in validation]

        def train_one(lr):
            rng = np.random.default_rng(config.rng_seed)
            init = np.zeros((len(tags), self.space.hash_dimension))

            def epoch_fn(weights, _epoch):
                order = rng.permutation(len(examples))
                for start in range(0, len(order), config.batch_size):
                    batch = [examples[int(i)] for i in order[start : start + config.batch_size]]
                    _, grad = class_objective(weights, batch, config.l2)
                    weights += (lr / len(batch)) * grad
                return weights

            def eval_fn(weights):
                preds = [
                    [tags[int(np.argmax(weights[:, idx] @ vals))] for idx, vals in vecs]
                    for vecs in val_vecs
                ]
                return span_f1(preds, val_gold).f1

            state, score, _ = run_epochs(
                init, epoch_fn, eval_fn, config.max_epochs, config.patience, np.copy
            )
            return state, score

        weights, score, _lr = _search_learning_rates(config, train_one)
        self.tags = tags
        self.weights = weights
        return score

    def predict_tag_probas(self, instance: Instance) -> np.ndarray:
        self._require_trained()
        vecs = featurize_tokens(instance.payload.tokens, self.space)
        out = np.empty((len(vecs), len(self.tags)))
        for i, (idx, vals) in enumerate(vecs):
            out[i] = softmax(self.weights[:, idx] @ vals)
        return out

    def predict_tags(self, instance: Instance) -> list[str]:
        probas = self.predict_tag_probas(instance)
        return [self.tags[int(k)] for k in probas.argmax(axis=1)]


class DependencyParser(_ModelBase):
    """Arc-factored parser: a head softmax per dependent plus a label classifier."""

    task = TaskKind.DEPENDENCY_PARSING

    def __init__(self, space: FeatureSpace, labels: Sequence[str] | None = None):
        super().__init__(space)
        self.labels = tuple(labels) if labels is not None else None
        self.arc_weights: np.ndarray | None = None
        self.label_weights: np.ndarray | None = None

    @property
    def weights(self):
        return self.arc_weights

    @classmethod
    def with_zero_weights(cls, space: FeatureSpace, labels: Sequence[str]):
        model = cls(space, labels)
        model.arc_weights = np.zeros(space.hash_dimension)
        model.label_weights = np.zeros((len(model.labels), space.hash_dimension))
        return model

    def _arc_candidates(self, payload: DepTree):
        n = len(payload.tokens)
        per_dep = []
        for d in range(1, n + 1):
            cands = [h for h in range(n + 1) if h != d]
            vecs = [
                featurize_arc(payload.tokens, payload.upos, h, d, self.space) for h in cands
            ]
            per_dep.append((cands, vecs))
        return per_dep

    def _sentence_examples(self, payload: DepTree, label_index):
        arc_groups = []
        label_examples = []
        for (cands, vecs), gold_head, gold_label in zip(
            self._arc_candidates(payload), payload.heads, payload.labels
        ):
            gold_pos = cands.index(gold_head)
            arc_groups.append((vecs, gold_pos))
            label_examples.append((vecs[gold_pos], label_index[gold_label]))
        return arc_groups, label_examples

    def fit(self, labeled: Sequence[Instance], validation: Sequence[Instance], config: TrainingConfig) -> float:
        if not labeled or not validation:
            raise ConfigError("need non-empty labeled and validation sets")
        labels = tuple(
            sorted({l for i in labeled if i.payload.labels for l in i.payload.labels})
        )
        if not labels:
            raise ConfigError("empty dependency label vocabulary")
        label_index = {l: k for k, l in enumerate(labels)}
        sentences = [
            self._sentence_examples(i.payload, label_index)
            for i in labeled
            if i.payload.heads is not None
        ]
        val_gold = [i.payload for i in validation]

        def train_one(lr):
            rng = np.random.default_rng(config.rng_seed)
            dim = self.space.hash_dimension
            init = (np.zeros(dim), np.zeros((len(labels), dim)))

            def epoch_fn(state, _epoch):
                arc_w, label_w = state
                order = rng.permutation(len(sentences))
                for start in range(0, len(order), config.batch_size):
                    batch = [sentences[int(i)] for i in order[start : start + config.batch_size]]
                    _, g_arc, g_label = parser_objective(arc_w, label_w, batch, config.l2)
                    arc_w += (lr / len(batch)) * g_arc
                    label_w += (lr / len(batch)) * g_label
                return arc_w, label_w

            def eval_fn(state):
                arc_w, label_w = state
                preds = [
                    self._decode_with(arc_w, label_w, labels, payload) for payload in val_gold
                ]
                return attachment_scores(preds, val_gold).las

            def copy_fn(state):
                return (state[0].copy(), state[1].copy())

            state, score, _ = run_epochs(
                init, epoch_fn, eval_fn, config.max_epochs, config.patience, copy_fn
            )
            return state, score

        (arc_w, label_w), score, _lr = _search_learning_rates(config, train_one)
        self.labels = labels
        self.arc_weights = arc_w
        self.label_weights = label_w
        return score

    def _head_scores(self, arc_w: np.ndarray, payload: DepTree) -> np.ndarray:
        n = len(payload.tokens)
        scores = np.full((n + 1, n), -np.inf)
        for d, (cands, vecs) in enumerate(self._arc_candidates(payload), start=1):
            for h, (idx, vals) in zip(cands, vecs):
                scores[h, d - 1] = arc_w[idx] @ vals
        return scores

    def predict_arc_probas(self, instance: Instance):
        """Head distribution per dependent plus a label distribution per arc.

        Returns (head_probs, label_probs) with shapes (n+1, n) and
        (n+1, n, num_labels); forbidden arcs (h == d) carry zero probability.
        """
        self._require_trained()
        payload = instance.payload
        n = len(payload.tokens)
        head_probs = np.zeros((n + 1, n))
        label_probs = np.zeros((n + 1, n, len(self.labels)))
        for d, (cands, vecs) in enumerate(self._arc_candidates(payload), start=1):
            z = np.array([self.arc_weights[idx] @ vals for idx, vals in vecs])
            head_probs[cands, d - 1] = softmax(z)
            for h, (idx, vals) in zip(cands, vecs):
                label_probs[h, d - 1] = softmax(self.label_weights[:, idx] @ vals)
        return head_probs, label_probs

    def _decode_with(self, arc_w, label_w, labels, payload: DepTree) -> DepTree:
        raw = self._head_scores(arc_w, payload)
        n = raw.shape[1]
        log_probs = np.full_like(raw, -np.inf)
        for j in range(n):
            finite = np.isfinite(raw[:, j])
            log_probs[finite, j] = _log_softmax(raw[finite, j])
        tree = chu_liu_edmonds(ArcScores(log_probs))
        pred_labels = []
        for d, h in enumerate(tree.heads, start=1):
            idx, vals = featurize_arc(payload.tokens, payload.upos, h, d, self.space)
            pred_labels.append(labels[int(np.argmax(label_w[:, idx] @ vals))])
        return DepTree(payload.tokens, payload.upos, tree.heads, tuple(pred_labels))

    def decode_tree(self, instance: Instance) -> DepTree:
        """Best single-root tree under the head softmax, with argmax arc labels."""
        self._require_trained()
        return self._decode_with(self.arc_weights, self.label_weights, self.labels, instance.payload)


def build_model(task: TaskKind, space: FeatureSpace):
    if task is TaskKind.CLASSIFICATION:
        return TextClassifier(space)
    if task is TaskKind.SEQUENCE_TAGGING:
        return SequenceTagger(space)
    return DependencyParser(space)


# ---------------------------------------------------------------------------
# Checkpoints: a JSON container with a mandatory version field.
# ---------------------------------------------------------------------------


def save_checkpoint(model, path) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "task": model.task.value,
        "feature_space": {
            "hash_dimension": model.space.hash_dimension,
            "ngram_min": model.space.ngram_min,
            "ngram_max": model.space.ngram_max,
        },
    }
    if isinstance(model, DependencyParser):
        model._require_trained()
        payload["labels"] = list(model.labels)
        payload["arc_weights"] = model.arc_weights.tolist()
        payload["label_weights"] = model.label_weights.tolist()
    elif isinstance(model, SequenceTagger):
        model._require_trained()
        payload["tags"] = list(model.tags)
        payload["weights"] = model.weights.tolist()
    else:
        model._require_trained()
        payload["classes"] = list(model.classes)
        payload["weights"] = model.weights.tolist()
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle)


def load_checkpoint(path):
    with open(path, encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise FormatError(f"unsupported checkpoint version {payload.get('version')!r}")
    space = FeatureSpace(**payload["feature_space"])
    task = TaskKind(payload["task"])
    if task is TaskKind.DEPENDENCY_PARSING:
        model = DependencyParser(space, payload["labels"])
        model.arc_weights = np.asarray(payload["arc_weights"], dtype=np.float64)
        model.label_weights = np.asarray(payload["label_weights"], dtype=np.float64)
    elif task is TaskKind.SEQUENCE_TAGGING:
        model = SequenceTagger(space, payload["tags"])
        model.weights = np.asarray(payload["weights"], dtype=np.float64)
    else:
        model = TextClassifier(space, payload["classes"])
        model.weights = np.asarray(payload["weights"], dtype=np.float64)
    return model
