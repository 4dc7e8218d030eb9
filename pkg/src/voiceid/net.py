"""BLSTM embedding network: forward pass, BPTT, Adam training, weight I/O.

Parameters of one direction are stored stacked along the gate axis in
the order i, f, g(cell candidate), o: w is (4H, D), u is (4H, H), b is
(4H,). The deployed network is 3 bidirectional layers of 256 units; the
embedding is the concatenation of the last forward hidden state and the
first-timestep backward hidden state (512 values). Smaller
configurations are supported for testing.
"""

import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dsp import (
    SAMPLE_RATE,
    WINDOW_LEN,
    AudioSegment,
    FeatureKind,
    FeatureMatrix,
    feature_extract,
    vad_filter,
)
from .errors import (
    AllSilentError,
    BadMagicError,
    ChecksumMismatchError,
    CorpusTooSmallError,
    DimensionMismatchError,
    LabelOutOfRangeError,
    SegmentTooShortError,
    TooShortError,
    TruncatedFileError,
    VersionMismatchError,
)

HIDDEN = 256
N_LAYERS = 3
EMBED_DIM = 2 * HIDDEN

WEIGHTS_MAGIC = b"BLSVW001"


@dataclass
class LstmDirectionParams:
    w: np.ndarray  # (4H, D) input weights, gate blocks i,f,g,o
    u: np.ndarray  # (4H, H) recurrent weights
    b: np.ndarray  # (4H,) biases


@dataclass
class BlstmLayer:
    fwd: LstmDirectionParams
    bwd: LstmDirectionParams


@dataclass
class EmbeddingNet:
    layers: list
    feature_kind: FeatureKind | None
    input_dim: int
    hidden: int

    @property
    def embed_dim(self) -> int:
        return 2 * self.hidden


@dataclass
class ClassifierHead:
    w: np.ndarray  # (num_classes, 2H)
    b: np.ndarray  # (num_classes,)

    @property
    def num_classes(self) -> int:
        return self.w.shape[0]


@dataclass
class TrainConfig:
    learning_rate: float = 0.0001
    batch_size: int = 100
    epochs: int = 30
    segment_len_s: float = 0.5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.25 <= self.segment_len_s <= 2.0:
            raise ValueError("segment_len_s must lie in [0.25, 2.0]")


def _init_direction(input_dim, hidden, rng, dtype):
    k = 1.0 / np.sqrt(hidden)
    w = rng.uniform(-k, k, size=(4 * hidden, input_dim))
    u = rng.uniform(-k, k, size=(4 * hidden, hidden))
    b = np.zeros(4 * hidden)
    b[hidden : 2 * hidden] = 1.0  # forget gate bias
    return LstmDirectionParams(w.astype(dtype), u.astype(dtype), b.astype(dtype))


def init_net(
    feature_kind: FeatureKind | None = FeatureKind.SpecdB,
    hidden: int = HIDDEN,
    n_layers: int = N_LAYERS,
    input_dim: int | None = None,
    rng=None,
    dtype=np.float32,
) -> EmbeddingNet:
    """Create a randomly initialized network (uniform +-1/sqrt(H))."""
    if input_dim is None:
        if feature_kind is None:
            raise ValueError("need feature_kind or explicit input_dim")
        input_dim = feature_kind.dim
    if rng is None:
        rng = np.random.default_rng(0)
    layers = []
    d = input_dim
    for _ in range(n_layers):
        layers.append(
            BlstmLayer(
                _init_direction(d, hidden, rng, dtype),
                _init_direction(d, hidden, rng, dtype),
            )
        )
        d = 2 * hidden
    return EmbeddingNet(layers, feature_kind, input_dim, hidden)


def init_head(num_classes: int, embed_dim: int, rng=None, dtype=np.float32) -> ClassifierHead:
    if num_classes < 2:
        raise ValueError("num_classes must be >= 2")
    if rng is None:
        rng = np.random.default_rng(0)
    k = 1.0 / np.sqrt(embed_dim)
    w = rng.uniform(-k, k, size=(num_classes, embed_dim)).astype(dtype)
    return ClassifierHead(w, np.zeros(num_classes, dtype=dtype))


# -- forward / backward --------------------------------------------------

@dataclass
class _DirectionCache:
    x: np.ndarray
    h: np.ndarray
    c: np.ndarray
    gates: np.ndarray


def _direction_forward(params: LstmDirectionParams, x: np.ndarray):
    b, t, d = x.shape
    a_in = x.reshape(b * t, d) @ params.w.T + params.b
    h, c, gates = kernels.lstm_sequence_forward(
        np.ascontiguousarray(a_in.reshape(b, t, -1)), params.u
    )
    return h, _DirectionCache(x, h, c, gates)


def _direction_backward(params: LstmDirectionParams, cache: _DirectionCache, dh):
    da = kernels.lstm_sequence_backward(
        np.ascontiguousarray(dh), cache.gates, cache.c, params.u
    )
    b, t, h4 = da.shape
    h = h4 // 4
    da2 = da.reshape(b * t, h4)
    x2 = cache.x.reshape(b * t, -1)
    h_prev = np.concatenate(
        [np.zeros((b, 1, h), dtype=cache.h.dtype), cache.h[:, :-1]], axis=1
    ).reshape(b * t, h)
    grads = {"w": da2.T @ x2, "u": da2.T @ h_prev, "b": da2.sum(axis=0)}
    dx = (da2 @ params.w).reshape(b, t, -1)
    return dx, grads


def blstm_stack_forward(net: EmbeddingNet, x: np.ndarray):
    """Run a (B, T, D) batch through all layers.

    Returns the (B, 2H) raw embeddings and the per-layer caches needed
    for backpropagation.
    """
    if x.shape[2] != net.input_dim:
        raise DimensionMismatchError(
            f"input dim {x.shape[2]} != network dim {net.input_dim}"
        )
    caches = []
    h_f = h_b_rev = None
    for layer in net.layers:
        h_f, cache_f = _direction_forward(layer.fwd, x)
        h_b_rev, cache_b = _direction_forward(
            layer.bwd, np.ascontiguousarray(x[:, ::-1])
        )
        x = np.concatenate([h_f, h_b_rev[:, ::-1]], axis=2)
        caches.append((cache_f, cache_b))
    emb = np.concatenate([h_f[:, -1], h_b_rev[:, -1]], axis=1)
    return emb, caches


def blstm_stack_backward(net: EmbeddingNet, caches, demb: np.ndarray) -> dict:
    """Backpropagate a (B, 2H) embedding gradient; returns name -> grad."""
    h = net.hidden
    grads = {}
    b, t = caches[-1][0].h.shape[:2]
    dtype = caches[-1][0].h.dtype
    dh_f = np.zeros((b, t, h), dtype=dtype)
    dh_f[:, -1] = demb[:, :h]
    dh_b_rev = np.zeros((b, t, h), dtype=dtype)
    dh_b_rev[:, -1] = demb[:, h:]
    for li in range(len(net.layers) - 1, -1, -1):
        cache_f, cache_b = caches[li]
        layer = net.layers[li]
        dx_f, g_f = _direction_backward(layer.fwd, cache_f, dh_f)
        dx_b_rev, g_b = _direction_backward(layer.bwd, cache_b, dh_b_rev)
        for name, g in g_f.items():
            grads[f"layer{li}.fwd.{name}"] = g
        for name, g in g_b.items():
            grads[f"layer{li}.bwd.{name}"] = g
        if li > 0:
            dx = dx_f + dx_b_rev[:, ::-1]
            dh_f = np.ascontiguousarray(dx[:, :, :h])
            dh_b_rev = np.ascontiguousarray(dx[:, ::-1, h:])
    return grads


def _check_feats(net: EmbeddingNet, feats: FeatureMatrix):
    if net.feature_kind is not None and feats.kind is not net.feature_kind:
        raise DimensionMismatchError(
            f"feature kind {feats.kind} != network kind {net.feature_kind}"
        )
    if feats.dim != net.input_dim:
        raise DimensionMismatchError(
            f"feature dim {feats.dim} != network dim {net.input_dim}"
        )


def blstm_forward(net: EmbeddingNet, feats: FeatureMatrix) -> np.ndarray:
    """Raw (pre-normalization) embedding of one feature matrix."""
    _check_feats(net, feats)
    dtype = net.layers[0].fwd.w.dtype
    x = np.ascontiguousarray(feats.frames[None], dtype=dtype)
    emb, _ = blstm_stack_forward(net, x)
    return emb[0]


def classify_forward(net: EmbeddingNet, head: ClassifierHead, feats: FeatureMatrix) -> np.ndarray:
    """Logits of the training-time classification topology."""
    emb = blstm_forward(net, feats)
    if head.w.shape[1] != emb.shape[0]:
        raise DimensionMismatchError("head width != embedding dim")
    return head.w @ emb + head.b


def cross_entropy(logits: np.ndarray, label):
    """Softmax cross-entropy loss and its gradient w.r.t. the logits.

    Accepts a single (C,) logit vector with an int label, or a (B, C)
    batch with a label array; the batch variant averages the loss and
    scales the gradient by 1/B.
    """
    logits = np.asarray(logits)
    single = logits.ndim == 1
    lg = logits[None] if single else logits
    labels = np.atleast_1d(np.asarray(label, dtype=np.int64))
    if np.any(labels < 0) or np.any(labels >= lg.shape[1]):
        raise LabelOutOfRangeError(f"label out of range for {lg.shape[1]} classes")
    shifted = lg - lg.max(axis=1, keepdims=True)
    expv = np.exp(shifted)
    probs = expv / expv.sum(axis=1, keepdims=True)
    rows = np.arange(lg.shape[0])
    losses = -(shifted[rows, labels] - np.log(expv.sum(axis=1)))
    grad = probs.copy()
    grad[rows, labels] -= 1.0
    if single:
        return float(losses[0]), grad[0].astype(logits.dtype)
    return float(losses.mean()), (grad / lg.shape[0]).astype(logits.dtype)


def batch_backward(net: EmbeddingNet, head: ClassifierHead, x: np.ndarray, labels) -> tuple:
    """Loss and full gradient dict for a (B, T, D) batch."""
    emb, caches = blstm_stack_forward(net, x)
    logits = emb @ head.w.T + head.b
    loss, dlogits = cross_entropy(logits, labels)
    grads = {
        "head.w": dlogits.T @ emb,
        "head.b": dlogits.sum(axis=0),
    }
    demb = dlogits @ head.w
    grads.update(blstm_stack_backward(net, caches, demb))
    return loss, grads


def backward(net: EmbeddingNet, head: ClassifierHead, feats: FeatureMatrix, label: int):
    """Single-example loss and gradients (shape-congruent with params_dict)."""
    _check_feats(net, feats)
    dtype = net.layers[0].fwd.w.dtype
    x = np.ascontiguousarray(feats.frames[None], dtype=dtype)
    return batch_backward(net, head, x, [label])


# -- parameter containers and Adam ---------------------------------------

def params_dict(net: EmbeddingNet, head: ClassifierHead | None = None) -> dict:
    """Live views of every parameter array, keyed by canonical name."""
    params = {}
    for li, layer in enumerate(net.layers):
        for dname, direction in (("fwd", layer.fwd), ("bwd", layer.bwd)):
            params[f"layer{li}.{dname}.w"] = direction.w
            params[f"layer{li}.{dname}.u"] = direction.u
            params[f"layer{li}.{dname}.b"] = direction.b
    if head is not None:
        params["head.w"] = head.w
        params["head.b"] = head.b
    return params


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0


def adam_step(params: dict, grads: dict, state: AdamState, cfg: TrainConfig) -> AdamState:
    """Standard Adam with bias correction; updates params in place."""
    state.step += 1
    b1, b2 = cfg.adam_beta1, cfg.adam_beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for name, p in params.items():
        g = np.asarray(grads[name], dtype=p.dtype)
        if g.shape != p.shape:
            raise DimensionMismatchError(
                f"{name}: grad shape {g.shape} != param shape {p.shape}"
            )
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.adam_eps)
    return state


# -- training -------------------------------------------------------------

def _usable(utts, crop_samples):
    """Post-VAD signals long enough for the crop."""
    out = []
    for utt in utts:
        try:
            active = vad_filter(utt)
        except (TooShortError, AllSilentError):
            continue
        if len(active.samples) >= crop_samples:
            out.append(active.samples)
    return out


def train(
    corpus,
    cfg: TrainConfig,
    feature_kind: FeatureKind = FeatureKind.SpecdB,
    hidden: int = HIDDEN,
    n_layers: int = N_LAYERS,
    val_draws_per_speaker: int = 2,
):
    """Train the classification network on a labeled corpus.

    corpus is a sequence of (speaker_name, [AudioSegment, ...]). Each
    epoch draws one random crop per training utterance, shuffles, and
    runs minibatch Adam updates; validation accuracy is measured on
    crops from one held-out utterance per speaker. Fully deterministic
    for a fixed cfg.rng_seed.

    Returns (net, head, log) where log has one dict per epoch.
    """
    corpus = list(corpus)
    if len(corpus) < 2:
        raise CorpusTooSmallError("need at least 2 speakers")
    crop = int(round(cfg.segment_len_s * SAMPLE_RATE))
    if crop < WINDOW_LEN:
        raise SegmentTooShortError("crop shorter than one analysis window")
    rng = np.random.default_rng(cfg.rng_seed)

    train_pool = []  # (label, samples)
    val_pool = []
    for label, (name, utts) in enumerate(corpus):
        usable = _usable(utts, crop)
        if not usable:
            raise SegmentTooShortError(
                f"speaker {name!r} has no utterance >= {cfg.segment_len_s} s after VAD"
            )
        if len(usable) >= 2:
            val_pool.append((label, usable[-1]))
            usable = usable[:-1]
        else:
            val_pool.append((label, usable[0]))
        train_pool.extend((label, s) for s in usable)

    net = init_net(feature_kind, hidden=hidden, n_layers=n_layers, rng=rng)
    head = init_head(len(corpus), net.embed_dim, rng=rng)
    params = params_dict(net, head)
    state = AdamState()

    def crop_features(samples):
        start = int(rng.integers(0, len(samples) - crop + 1))
        fm = feature_extract(AudioSegment(samples[start : start + crop]), feature_kind)
        return fm.frames

    log = []
    total_steps = 0
    for epoch in range(cfg.epochs):
        picks = rng.integers(0, len(train_pool), size=len(train_pool))
        examples = []
        for idx in picks:
            label, samples = train_pool[idx]
            examples.append((label, crop_features(samples)))
        losses = []
        for lo in range(0, len(examples), cfg.batch_size):
            batch = examples[lo : lo + cfg.batch_size]
            x = np.ascontiguousarray(
                np.stack([f for _, f in batch]), dtype=np.float32
            )
            labels = np.array([l for l, _ in batch])
            loss, grads = batch_backward(net, head, x, labels)
            adam_step(params, grads, state, cfg)
            losses.append(loss)
            total_steps += 1
        correct = 0
        total = 0
        for label, samples in val_pool:
            for _ in range(val_draws_per_speaker):
                feats = crop_features(samples)
                emb, _ = blstm_stack_forward(
                    net, np.ascontiguousarray(feats[None], dtype=np.float32)
                )
                logits = emb[0] @ head.w.T + head.b
                correct += int(np.argmax(logits) == label)
                total += 1
        log.append(
            {
                "epoch": epoch,
                "mean_loss": float(np.mean(losses)),
                "val_accuracy": correct / total,
                "steps": total_steps,
            }
        )
    return net, head, log


# -- accounting and serialization -----------------------------------------

def param_count(net: EmbeddingNet) -> int:
    """Deployed parameter count (classifier head excluded)."""
    return sum(int(p.size) for n, p in params_dict(net).items())


def memory_bytes(net: EmbeddingNet) -> int:
    """Deployment footprint assuming 32-bit IEEE-754 storage."""
    return 4 * param_count(net)


def _direction_tensors(d: LstmDirectionParams):
    # Stacked blocks already sit in canonical gate order i,f,g,o, so the
    # per-gate tensor sequence W_i..W_o, U_i..U_o, b_i..b_o is exactly
    # the stacked arrays written in order w, u, b.
    return [d.w, d.u, d.b]


def save_weights(net: EmbeddingNet, path, head: ClassifierHead | None = None) -> None:
    """Write the binary weight file (format: magic BLSVW001, header, f32 payload, CRC32)."""
    if net.feature_kind is None:
        raise ValueError("cannot serialize a network without a feature kind")
    header = WEIGHTS_MAGIC + struct.pack(
        "<BIIIBI",
        net.feature_kind.value,
        net.input_dim,
        net.hidden,
        len(net.layers),
        1 if head is not None else 0,
        head.num_classes if head is not None else 0,
    )
    chunks = []
    for layer in net.layers:
        for direction in (layer.fwd, layer.bwd):
            for tensor in _direction_tensors(direction):
                chunks.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    if head is not None:
        chunks.append(np.ascontiguousarray(head.w, dtype="<f4").tobytes())
        chunks.append(np.ascontiguousarray(head.b, dtype="<f4").tobytes())
    payload = b"".join(chunks)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.write(struct.pack("<I", zlib.crc32(payload)))


def load_weights(path):
    """Read a weight file; returns (net, head_or_None)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 8:
        raise TruncatedFileError("file shorter than the magic")
    magic = blob[:8]
    if magic != WEIGHTS_MAGIC:
        if magic[:5] == WEIGHTS_MAGIC[:5]:
            raise VersionMismatchError(f"unsupported version {magic!r}")
        raise BadMagicError(f"bad magic {magic!r}")
    header_len = 8 + struct.calcsize("<BIIIBI")
    if len(blob) < header_len + 4:
        raise TruncatedFileError("file shorter than the header")
    kind_code, input_dim, hidden, n_layers, has_head, num_classes = struct.unpack(
        "<BIIIBI", blob[8:header_len]
    )
    try:
        kind = FeatureKind(kind_code)
    except ValueError as exc:
        raise VersionMismatchError(f"unknown feature kind code {kind_code}") from exc
    payload = blob[header_len:-4]
    (crc,) = struct.unpack("<I", blob[-4:])

    sizes = []
    d = input_dim
    for _ in range(n_layers):
        for _ in range(2):  # fwd, bwd
            sizes += [(4 * hidden, d), (4 * hidden, hidden), (4 * hidden,)]
        d = 2 * hidden
    if has_head:
        sizes += [(num_classes, 2 * hidden), (num_classes,)]
    expected = 4 * sum(int(np.prod(s)) for s in sizes)
    if len(payload) < expected:
        raise TruncatedFileError(
            f"payload has {len(payload)} bytes, expected {expected}"
        )
    if zlib.crc32(payload) != crc:
        raise ChecksumMismatchError("payload CRC32 does not match")

    values = np.frombuffer(payload, dtype="<f4")
    arrays = []
    pos = 0
    for shape in sizes:
        n = int(np.prod(shape))
        arrays.append(values[pos : pos + n].reshape(shape).copy())
        pos += n
    layers = []
    it = iter(arrays[: 6 * n_layers])
    for _ in range(n_layers):
        fwd = LstmDirectionParams(next(it), next(it), next(it))
        bwd = LstmDirectionParams(next(it), next(it), next(it))
        layers.append(BlstmLayer(fwd, bwd))
    net = EmbeddingNet(layers, kind, input_dim, hidden)
    head = None
    if has_head:
        head = ClassifierHead(arrays[-2], arrays[-1])
    return net, head
