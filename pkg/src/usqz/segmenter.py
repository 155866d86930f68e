"""Pixelwise tissue classification and radial contour extraction.

The classifier is a diagonal-Gaussian Bayes model over the speckle feature
channels; the model container is deliberately generic so other classifiers
can be slotted in behind the same interface.  Extracted contours go through
per-ray majority filtering, circular median smoothing and a delta-clamping
pass that guarantees chain-code encodability.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .codec import ALPHABET_DELTAS
from .errors import MissingClass, TopologyFailure
from .grid import (CLASS_NAMES, ContourSet, LabelMap, LUMEN, MEDIA,
                   ProbeGeometry, TISSUE_CLASSES)
from .speckle import CHANNEL_NAMES, FeatureStack

_VAR_FLOOR_REL = 1e-6
_RAY_MAJORITY_WIDTH = 7
_THETA_MEDIAN_WIDTH = 9

MODEL_MAGIC = b"USQZMDL1"


@dataclass
class ClassifierModel:
    """Diagonal-Gaussian Bayes classifier over feature channels."""

    class_ids: tuple
    means: np.ndarray      # (C, F)
    variances: np.ndarray  # (C, F)
    priors: np.ndarray     # (C,)
    feature_names: tuple = CHANNEL_NAMES

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        self.priors = np.asarray(self.priors, dtype=np.float64)
        c = len(self.class_ids)
        f = len(self.feature_names)
        if self.means.shape != (c, f) or self.variances.shape != (c, f):
            raise ValueError("means/variances must be (num_classes, num_features)")
        if self.priors.shape != (c,) or abs(self.priors.sum() - 1.0) > 1e-9:
            raise ValueError("priors must sum to 1")
        if np.any(self.variances <= 0):
            raise ValueError("variances must be positive")

    def save(self, path) -> None:
        """Versioned binary: text header, then little-endian float64 blocks."""
        header = ["classes " + " ".join("%d:%s" % (cid, CLASS_NAMES.get(cid, "c%d" % cid))
                                        for cid in self.class_ids),
                  "features " + " ".join(self.feature_names)]
        head = "\n".join(header).encode() + b"\n"
        with open(path, "wb") as fp:
            fp.write(MODEL_MAGIC)
            fp.write(struct.pack("<I", len(head)))
            fp.write(head)
            for arr in (self.priors, self.means, self.variances):
                fp.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "ClassifierModel":
        with open(path, "rb") as fp:
            if fp.read(len(MODEL_MAGIC)) != MODEL_MAGIC:
                raise ValueError("%s: not a classifier model file" % path)
            (head_len,) = struct.unpack("<I", fp.read(4))
            lines = fp.read(head_len).decode().splitlines()
            fields = dict(line.split(" ", 1) for line in lines)
            class_ids = tuple(int(tok.split(":")[0]) for tok in fields["classes"].split())
            feature_names = tuple(fields["features"].split())
            c, f = len(class_ids), len(feature_names)
            blob = np.frombuffer(fp.read(), dtype="<f8")
        if blob.size != c + 2 * c * f:
            raise ValueError("%s: truncated model payload" % path)
        priors = blob[:c]
        means = blob[c:c + c * f].reshape(c, f)
        variances = blob[c + c * f:].reshape(c, f)
        return cls(class_ids, means, variances, priors, feature_names)


def train_classifier(stacks, label_maps) -> ClassifierModel:
    """Fit per-class feature means/variances and pixel-count priors."""
    stacks = list(stacks)
    label_maps = list(label_maps)
    if not stacks or len(stacks) != len(label_maps):
        raise ValueError("need equally many feature stacks and label maps")
    feats = np.concatenate([s.channels.reshape(s.channels.shape[0], -1).T
                            for s in stacks])
    labels = np.concatenate([lm.labels.ravel() for lm in label_maps])
    n_feat = feats.shape[1]
    global_var = feats.var(axis=0)
    floor = np.maximum(_VAR_FLOOR_REL * global_var, np.finfo(float).tiny)
    means = np.empty((len(TISSUE_CLASSES), n_feat))
    variances = np.empty_like(means)
    counts = np.empty(len(TISSUE_CLASSES))
    for k, cid in enumerate(TISSUE_CLASSES):
        sel = feats[labels == cid]
        if sel.shape[0] == 0:
            raise MissingClass("class %d (%s) absent from all training labels"
                               % (cid, CLASS_NAMES[cid]))
        means[k] = sel.mean(axis=0)
        variances[k] = np.maximum(sel.var(axis=0), floor)
        counts[k] = sel.shape[0]
    return ClassifierModel(tuple(TISSUE_CLASSES), means, variances,
                           counts / counts.sum())


def classify(stack: FeatureStack, model: ClassifierModel) -> np.ndarray:
    """Per-pixel class posteriors, shape (num_classes, N_r, N_theta)."""
    if tuple(model.feature_names) != tuple(CHANNEL_NAMES):
        raise ValueError("model features %s do not match stack channels"
                         % (model.feature_names,))
    f = stack.channels
    log_post = np.empty((len(model.class_ids),) + f.shape[1:])
    for k in range(len(model.class_ids)):
        mu = model.means[k][:, None, None]
        var = model.variances[k][:, None, None]
        ll = -0.5 * (((f - mu) ** 2) / var + np.log(var)).sum(axis=0)
        log_post[k] = ll + np.log(model.priors[k])
    log_post -= log_post.max(axis=0, keepdims=True)
    post = np.exp(log_post)
    post /= post.sum(axis=0, keepdims=True)
    return post


def classify_labels(stack: FeatureStack, model: ClassifierModel) -> LabelMap:
    """Argmax of :func:`classify` as a label map."""
    post = classify(stack, model)
    idx = post.argmax(axis=0)
    ids = np.asarray(model.class_ids, dtype=np.uint8)
    return LabelMap(stack.geometry, ids[idx])


def _ray_majority(mask: np.ndarray, width: int) -> np.ndarray:
    """Binary majority filter along r (axis 0) with clamped end padding."""
    half = width // 2
    padded = np.pad(mask.astype(np.int64), ((half, half), (0, 0)), mode="edge")
    csum = np.cumsum(padded, axis=0)
    csum = np.vstack([np.zeros((1, mask.shape[1]), dtype=np.int64), csum])
    window_sums = csum[width:] - csum[:-width]
    return window_sums * 2 > width


def _circular_median(values: np.ndarray, width: int) -> np.ndarray:
    """Median filter over a circular 1-D integer sequence."""
    half = width // 2
    n = values.size
    idx = (np.arange(n)[:, None] + np.arange(-half, half + 1)[None, :]) % n
    return np.median(values[idx], axis=1).astype(np.int64)


def _clamp_deltas(radii: np.ndarray, n_samples: int) -> np.ndarray:
    """Project a circular radius sequence onto chain-code-feasible sequences.

    Repeated circular passes pull each radius into the [-1, +2] delta band of
    its predecessor (and into the sample range); large jumps get spread over
    the following scan lines.  Falls back to the constant median if the
    iteration fails to settle.
    """
    r = radii.astype(np.int64).copy()
    np.clip(r, 0, n_samples - 1, out=r)
    n = r.size
    for _ in range(2 * n):
        changed = False
        for i in range(n):
            j = (i + 1) % n
            v = min(max(r[j], r[i] - 1), r[i] + 2)
            v = min(max(v, 0), n_samples - 1)
            if v != r[j]:
                r[j] = v
                changed = True
        if not changed:
            break
    deltas = np.diff(np.append(r, r[0]))
    if not np.all(np.isin(deltas, list(ALPHABET_DELTAS))):
        r[:] = int(np.median(radii))
        np.clip(r, 0, n_samples - 1, out=r)
    return r


def extract_contours(labels, geometry: ProbeGeometry = None,
                     class_ids=(LUMEN, MEDIA)) -> ContourSet:
    """Extract nested, encodable boundary radii from a (possibly noisy) map.

    Accepts a LabelMap or a posterior array from :func:`classify` (argmax is
    taken).  Raises TopologyFailure when, after per-ray majority filtering,
    some scan line has no inner-class sample left.
    """
    if isinstance(labels, LabelMap):
        label_arr = labels.labels
        geometry = labels.geometry
    else:
        post = np.asarray(labels)
        if geometry is None:
            raise ValueError("geometry required for posterior-array input")
        ids = np.asarray(TISSUE_CLASSES, dtype=np.uint8)
        label_arr = ids[post.argmax(axis=0)]
    n_r, n_t = label_arr.shape
    radii = np.empty((len(class_ids), n_t), dtype=np.int64)
    inner = np.zeros(label_arr.shape, dtype=bool)
    for k, cid in enumerate(class_ids):
        inner |= label_arr == cid
        filtered = _ray_majority(inner, _RAY_MAJORITY_WIDTH)
        has = filtered.any(axis=0)
        if not has.all():
            raise TopologyFailure(
                "class %d: %d scan lines have no inner-class run"
                % (cid, int((~has).sum())))
        # boundary b maximizing (inner hits below b) + (outer hits above b);
        # equivalently argmax of 2*prefix(b) - b.  Exact on clean bands,
        # robust to stray misclassified blobs.
        prefix = np.vstack([np.zeros((1, n_t), dtype=np.int64),
                            np.cumsum(filtered, axis=0)])
        score = 2 * prefix - np.arange(n_r + 1)[:, None]
        radii[k] = np.minimum(score.argmax(axis=0), n_r - 1)
    for k in range(len(class_ids)):
        radii[k] = _circular_median(radii[k], _THETA_MEDIAN_WIDTH)
        radii[k] = _clamp_deltas(radii[k], n_r)
        if k > 0:
            # pointwise max of two feasible sequences stays feasible
            radii[k] = np.maximum(radii[k], radii[k - 1])
    return ContourSet(tuple(class_ids), radii, num_samples=n_r)
