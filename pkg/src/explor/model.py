"""Multi-head matching network, trained with hand-written backprop and Adam.

The network is a small ELU trunk with K logistic heads. Head j is trained to
match pseudo-labeler j, not the true labels: the objective is

    total = mean_abs(D) + match(D) + lambda * match(Ex(D))

where match is mean binary cross-entropy between head logits and the hard
pseudo-labels, mean_abs is the l1 gap between the mean head probability and
the mean pseudo-label per point, and Ex(D) is the radial expansion of the
batch, which supplies matching targets outside the training shell.

Trunk weights use Kaiming-uniform fan-in init. Head weights and all biases
start at zero, so an untrained net outputs probability 0.5 on every head and
the bagged predictor degrades to (ensemble_mean + 0.5) / 2.

Everything is float64 numpy; with a fixed seed, training is reproducible
bit-for-bit (single fixed reduction order, no threading in the Python layer).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .latent import LatentMap, encode, expand_with, fit_pca
from .pseudolabel import PseudoLabelConfig, PseudoLabelEnsemble, fit_ensemble
from .seeding import derive_seed, generator

LOSS_MODES = ("full", "match_only", "mean_only", "single_head")

_PROB_EPS = 1e-12  # clamp for log() in the probability-space loss


class TrainingDivergence(RuntimeError):
    """Raised when the training loss explodes; carries the trace so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


def elu(x: np.ndarray) -> np.ndarray:
    out = np.array(x, dtype=np.float64, copy=True)
    neg = out <= 0
    out[neg] = np.expm1(out[neg])
    return out


def elu_grad(x: np.ndarray) -> np.ndarray:
    # 1 above zero, exp(x) at and below; continuous since exp(0) = 1.
    out = np.ones_like(x)
    neg = x <= 0
    out[neg] = np.exp(x[neg])
    return out


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def bce_logits(z: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Elementwise binary cross-entropy on logits, stable at saturation."""
    return np.maximum(z, 0.0) - z * target + np.log1p(np.exp(-np.abs(z)))


@dataclass(frozen=True)
class NetConfig:
    """Architecture and optimization settings for the matching network."""

    hidden: tuple = (512, 512)
    lambda_expand: float = 0.5
    batch_size: int = 256
    iterations: int = 10000
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    redraw_expansion_each_batch: bool = True
    loss_mode: str = "full"
    snapshot_interval: int = 2500

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ValueError(f"hidden must be nonempty positive widths, got {self.hidden}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.iterations < 0:
            raise ValueError(f"iterations must be >= 0, got {self.iterations}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.lambda_expand < 0:
            raise ValueError(f"lambda_expand must be >= 0, got {self.lambda_expand}")
        if self.loss_mode not in LOSS_MODES:
            raise ValueError(f"loss_mode must be one of {LOSS_MODES}, got {self.loss_mode!r}")
        if self.snapshot_interval < 1:
            raise ValueError(f"snapshot_interval must be >= 1, got {self.snapshot_interval}")


class ExplorNet:
    """ELU trunk with K independent logistic heads, stored as plain arrays."""

    def __init__(self, input_dim: int, hidden, heads: int, seed: int = 0):
        if input_dim < 1 or heads < 1:
            raise ValueError(f"need input_dim >= 1 and heads >= 1, got {input_dim}, {heads}")
        self.input_dim = int(input_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.heads = int(heads)
        rng = generator(derive_seed(seed, "init"))
        self.params = {}
        fan_in = self.input_dim
        for i, width in enumerate(self.hidden):
            bound = np.sqrt(6.0 / fan_in)
            self.params[f"trunk.{i}.w"] = rng.uniform(-bound, bound, size=(width, fan_in))
            self.params[f"trunk.{i}.b"] = np.zeros(width)
            fan_in = width
        self.params["heads.w"] = np.zeros((self.heads, fan_in))
        self.params["heads.b"] = np.zeros(self.heads)

    def param_names(self):
        names = []
        for i in range(len(self.hidden)):
            names.extend([f"trunk.{i}.w", f"trunk.{i}.b"])
        names.extend(["heads.w", "heads.b"])
        return names

    def forward(self, Z: np.ndarray):
        """Head logits for latent rows Z, plus the caches backward needs."""
        Z = np.asarray(Z, dtype=np.float64)
        if Z.ndim != 2 or Z.shape[1] != self.input_dim:
            raise ValueError(f"expected shape (N, {self.input_dim}), got {Z.shape}")
        acts = [Z]
        pres = []
        for i in range(len(self.hidden)):
            pre = acts[-1] @ self.params[f"trunk.{i}.w"].T + self.params[f"trunk.{i}.b"]
            pres.append(pre)
            acts.append(elu(pre))
        logits = acts[-1] @ self.params["heads.w"].T + self.params["heads.b"]
        return logits, (acts, pres)

    def logits(self, Z: np.ndarray) -> np.ndarray:
        return self.forward(Z)[0]

    def backward(self, cache, dlogits: np.ndarray, grads: dict) -> None:
        """Accumulate parameter gradients for one batch given dL/dlogits."""
        acts, pres = cache
        grads["heads.w"] += dlogits.T @ acts[-1]
        grads["heads.b"] += dlogits.sum(axis=0)
        delta = dlogits @ self.params["heads.w"]
        for i in reversed(range(len(self.hidden))):
            dpre = delta * elu_grad(pres[i])
            grads[f"trunk.{i}.w"] += dpre.T @ acts[i]
            grads[f"trunk.{i}.b"] += dpre.sum(axis=0)
            if i > 0:
                delta = dpre @ self.params[f"trunk.{i}.w"]
        return None

    def zero_grads(self) -> dict:
        return {k: np.zeros_like(v) for k, v in self.params.items()}

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "heads": self.heads,
            "params": {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in self.params.items()},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ExplorNet":
        net = cls(doc["input_dim"], doc["hidden"], doc["heads"])
        for k, spec in doc["params"].items():
            net.params[k] = np.array(spec["data"], dtype=np.float64).reshape(spec["shape"])
        return net


def _mean_gap_terms(logits, targets):
    """Per-row mean head probability, mean target, and sigma'(logits)."""
    probs = sigmoid(logits)
    p = probs.mean(axis=1)
    q = targets.mean(axis=1)
    return probs, p, q


def _prob_bce(p, q):
    pc = np.clip(p, _PROB_EPS, 1.0 - _PROB_EPS)
    return -(q * np.log(pc) + (1.0 - q) * np.log1p(-pc))


def loss_terms(net: ExplorNet, Z, targets, Z_exp, targets_exp, cfg: NetConfig):
    """Loss total and the (match, mean, expand) parts, without gradients.

    The expand part is reported unweighted; the total applies lambda. With
    lambda = 0 the total is exactly mean + match of the unexpanded batch.
    """
    total, parts, _ = _loss_and_grads(net, Z, targets, Z_exp, targets_exp, cfg, want_grads=False)
    return total, parts


def loss_and_grads(net: ExplorNet, Z, targets, Z_exp, targets_exp, cfg: NetConfig):
    return _loss_and_grads(net, Z, targets, Z_exp, targets_exp, cfg, want_grads=True)


def _dlogits_match(logits, targets):
    b, k = logits.shape
    return (sigmoid(logits) - targets) / (b * k)


def _dlogits_mean(logits, targets):
    b, k = logits.shape
    probs, p, q = _mean_gap_terms(logits, targets)
    return np.sign(p - q)[:, None] * (probs * (1.0 - probs)) / (b * k)


def _dlogits_prob_bce(logits, targets):
    b, k = logits.shape
    probs, p, q = _mean_gap_terms(logits, targets)
    inside = (p > _PROB_EPS) & (p < 1.0 - _PROB_EPS)
    pc = np.clip(p, _PROB_EPS, 1.0 - _PROB_EPS)
    dp = np.where(inside, (pc - q) / (pc * (1.0 - pc)), 0.0)
    return dp[:, None] * (probs * (1.0 - probs)) / (b * k)


def _batch_loss(logits, targets, mode):
    """(loss value, dL/dlogits) of one batch under the given matching mode."""
    if mode == "match":
        return float(bce_logits(logits, targets).mean()), _dlogits_match(logits, targets)
    if mode == "mean_abs":
        _, p, q = _mean_gap_terms(logits, targets)
        return float(np.abs(p - q).mean()), _dlogits_mean(logits, targets)
    if mode == "prob_bce":
        _, p, q = _mean_gap_terms(logits, targets)
        return float(_prob_bce(p, q).mean()), _dlogits_prob_bce(logits, targets)
    raise ValueError(f"unknown batch loss {mode!r}")


def _loss_and_grads(net, Z, targets, Z_exp, targets_exp, cfg, want_grads=True):
    Z = np.asarray(Z, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    mode = cfg.loss_mode
    if mode == "single_head" and net.heads != 1:
        raise ValueError("single_head loss requires a one-head network")
    if mode == "single_head":
        targets = targets.mean(axis=1, keepdims=True)

    logits, cache = net.forward(Z)
    if mode == "full":
        match_val, d_match = _batch_loss(logits, targets, "match")
        mean_val, d_mean = _batch_loss(logits, targets, "mean_abs")
        dlogits = d_match + d_mean
    elif mode == "match_only" or mode == "single_head":
        match_val, dlogits = _batch_loss(logits, targets, "match")
        mean_val = 0.0
    else:  # mean_only
        mean_val, dlogits = _batch_loss(logits, targets, "prob_bce")
        match_val = 0.0

    expand_val = 0.0
    exp_pack = None
    if Z_exp is not None:
        Z_exp = np.asarray(Z_exp, dtype=np.float64)
        targets_exp = np.asarray(targets_exp, dtype=np.float64)
        if mode == "single_head":
            targets_exp = targets_exp.mean(axis=1, keepdims=True)
        logits_exp, cache_exp = net.forward(Z_exp)
        exp_mode = "prob_bce" if mode == "mean_only" else "match"
        expand_val, d_exp = _batch_loss(logits_exp, targets_exp, exp_mode)
        exp_pack = (cache_exp, d_exp)

    total = match_val + mean_val + cfg.lambda_expand * expand_val
    parts = {"match": match_val, "mean": mean_val, "expand": expand_val}
    if not want_grads:
        return total, parts, None

    grads = net.zero_grads()
    net.backward(cache, dlogits, grads)
    if exp_pack is not None and cfg.lambda_expand != 0.0:
        cache_exp, d_exp = exp_pack
        net.backward(cache_exp, cfg.lambda_expand * d_exp, grads)
    return total, parts, grads


class Adam:
    """Adam with bias correction, stepping parameters in a fixed name order."""

    def __init__(self, net: ExplorNet, cfg: NetConfig):
        self.net = net
        self.cfg = cfg
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in net.params.items()}
        self.v = {k: np.zeros_like(v) for k, v in net.params.items()}

    def step(self, grads: dict) -> None:
        self.t += 1
        c = self.cfg
        bc1 = 1.0 - c.beta1**self.t
        bc2 = 1.0 - c.beta2**self.t
        for name in self.net.param_names():
            g = grads[name]
            self.m[name] = c.beta1 * self.m[name] + (1.0 - c.beta1) * g
            self.v[name] = c.beta2 * self.v[name] + (1.0 - c.beta2) * g * g
            m_hat = self.m[name] / bc1
            v_hat = self.v[name] / bc2
            self.net.params[name] -= c.learning_rate * m_hat / (np.sqrt(v_hat) + c.eps)


class _BatchStream:
    """Without-replacement batches from a reshuffled epoch permutation."""

    def __init__(self, n: int, batch_size: int, seed: int):
        self.n = n
        self.b = min(batch_size, n)
        self.rng = generator(seed)
        self.perm = self.rng.permutation(n)
        self.pos = 0

    def next(self) -> np.ndarray:
        if self.pos + self.b > self.n:
            self.perm = self.rng.permutation(self.n)
            self.pos = 0
        out = self.perm[self.pos : self.pos + self.b]
        self.pos += self.b
        return out


def _check_finite_grads(grads: dict) -> None:
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingDivergence(f"non-finite gradient in {name}", trace=None)


def _check_finite_params(net: ExplorNet, trace) -> None:
    for name, p in net.params.items():
        if not np.all(np.isfinite(p)):
            raise TrainingDivergence(f"non-finite parameter {name} after update", trace)


@dataclass
class TrainedBundle:
    """Everything a deployment needs: latent map, labelers, net, and the trace."""

    method: str
    latent_map: LatentMap
    ensemble: PseudoLabelEnsemble | None
    net: ExplorNet | None
    net_config: NetConfig | None
    pl_config: PseudoLabelConfig | None
    sigma: float
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        nc = None
        if self.net_config is not None:
            nc = {
                "hidden": list(self.net_config.hidden),
                "lambda_expand": self.net_config.lambda_expand,
                "batch_size": self.net_config.batch_size,
                "iterations": self.net_config.iterations,
                "learning_rate": self.net_config.learning_rate,
                "beta1": self.net_config.beta1,
                "beta2": self.net_config.beta2,
                "eps": self.net_config.eps,
                "seed": self.net_config.seed,
                "redraw_expansion_each_batch": self.net_config.redraw_expansion_each_batch,
                "loss_mode": self.net_config.loss_mode,
                "snapshot_interval": self.net_config.snapshot_interval,
            }
        pc = None
        if self.pl_config is not None:
            p = self.pl_config
            pc = {
                "k": p.k,
                "max_depth": p.max_depth,
                "min_leaf": p.min_leaf,
                "instance_fraction": p.instance_fraction,
                "feature_fraction": p.feature_fraction,
                "trees_per_labeler": p.trees_per_labeler,
                "decision_threshold": p.decision_threshold,
                "seed": p.seed,
            }
        return {
            "format_version": 1,
            "method": self.method,
            "latent_map": {
                "mean": self.latent_map.mean.tolist(),
                "components": self.latent_map.components.tolist(),
                "explained_variance": self.latent_map.explained_variance.tolist(),
            },
            "ensemble": None if self.ensemble is None else self.ensemble.to_dict(),
            "net": None if self.net is None else self.net.to_dict(),
            "net_config": nc,
            "pl_config": pc,
            "sigma": self.sigma,
            "trace": [[float(a), float(b), float(c)] for a, b, c in self.trace],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainedBundle":
        if doc.get("format_version") != 1:
            raise ValueError(f"unsupported bundle format_version {doc.get('format_version')!r}")
        lm = LatentMap(
            mean=np.array(doc["latent_map"]["mean"], dtype=np.float64),
            components=np.array(doc["latent_map"]["components"], dtype=np.float64),
            explained_variance=np.array(doc["latent_map"]["explained_variance"], dtype=np.float64),
        )
        nc = None
        if doc["net_config"] is not None:
            d = dict(doc["net_config"])
            d["hidden"] = tuple(d["hidden"])
            nc = NetConfig(**d)
        pc = None
        if doc["pl_config"] is not None:
            pc = PseudoLabelConfig(**doc["pl_config"])
        return cls(
            method=doc["method"],
            latent_map=lm,
            ensemble=None if doc["ensemble"] is None else PseudoLabelEnsemble.from_dict(doc["ensemble"]),
            net=None if doc["net"] is None else ExplorNet.from_dict(doc["net"]),
            net_config=nc,
            pl_config=pc,
            sigma=doc["sigma"],
            trace=[tuple(t) for t in doc["trace"]],
        )


def save_bundle(bundle: TrainedBundle, path) -> None:
    """Write a bundle as deterministic JSON (sorted keys, repr floats)."""
    with open(path, "w") as fh:
        json.dump(bundle.to_dict(), fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_bundle(path) -> TrainedBundle:
    with open(path) as fh:
        return TrainedBundle.from_dict(json.load(fh))


def _resolve_components(n_components, n, d) -> int:
    cap = 128 if n_components is None else int(n_components)
    return min(cap, n - 1, d)


def train(
    ds: Dataset,
    net_cfg: NetConfig,
    pl_cfg: PseudoLabelConfig,
    n_components: int | None = None,
    sigma: float = 0.5,
) -> TrainedBundle:
    """Fit the full pipeline: PCA, pseudo-labelers, then the matching net.

    Pseudo-labels for the raw batch are precomputed once; labels for expanded
    points are produced by the ensemble on the fly each batch. With
    ``redraw_expansion_each_batch`` off, one expansion per training row is
    drawn up front and reused.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    lm = fit_pca(ds.features, n_components)
    Z = encode(lm, ds.features)
    ens = fit_ensemble(Dataset(Z, ds.labels), pl_cfg)
    pseudo = ens.predict_matrix(Z).astype(np.float64)

    heads = 1 if net_cfg.loss_mode == "single_head" else ens.k
    net = ExplorNet(lm.s, net_cfg.hidden, heads, seed=net_cfg.seed)
    opt = Adam(net, net_cfg)
    stream = _BatchStream(ds.n, net_cfg.batch_size, derive_seed(net_cfg.seed, "batches"))
    rng_exp = generator(derive_seed(net_cfg.seed, "expansion"))

    if not net_cfg.redraw_expansion_each_batch:
        eps_fixed = rng_exp.normal(0.0, sigma, size=ds.n)
        Z_exp_all = expand_with(Z, eps_fixed)
        pseudo_exp_all = ens.predict_matrix(Z_exp_all).astype(np.float64)

    trace = []
    for _ in range(net_cfg.iterations):
        idx = stream.next()
        Zb, Gb = Z[idx], pseudo[idx]
        if net_cfg.redraw_expansion_each_batch:
            eps = rng_exp.normal(0.0, sigma, size=idx.size)
            Zx = expand_with(Zb, eps)
            Gx = ens.predict_matrix(Zx).astype(np.float64)
        else:
            Zx, Gx = Z_exp_all[idx], pseudo_exp_all[idx]
        total, parts, grads = loss_and_grads(net, Zb, Gb, Zx, Gx, net_cfg)
        _check_finite_grads(grads)
        opt.step(grads)
        _check_finite_params(net, trace)
        trace.append((parts["match"], parts["mean"], parts["expand"]))
        if total > 1e6:
            raise TrainingDivergence(f"loss diverged to {total}", trace)

    return TrainedBundle(
        method="explor",
        latent_map=lm,
        ensemble=ens,
        net=net,
        net_config=net_cfg,
        pl_config=pl_cfg,
        sigma=sigma,
        trace=trace,
    )


def train_erm(
    ds: Dataset,
    net_cfg: NetConfig,
    heads: int = 64,
    n_components: int | None = None,
) -> TrainedBundle:
    """Baseline: same architecture, every head fit to the true labels.

    The deployed parameters are the uniform average of snapshots taken every
    ``snapshot_interval`` iterations (the final parameters if none were
    taken). The trace stores the label loss in the match slot.
    """
    lm = fit_pca(ds.features, n_components)
    Z = encode(lm, ds.features)
    y = ds.labels.astype(np.float64)

    net = ExplorNet(lm.s, net_cfg.hidden, heads, seed=net_cfg.seed)
    opt = Adam(net, net_cfg)
    stream = _BatchStream(ds.n, net_cfg.batch_size, derive_seed(net_cfg.seed, "batches"))

    trace = []
    snapshots = []
    for it in range(1, net_cfg.iterations + 1):
        idx = stream.next()
        Zb = Z[idx]
        targets = np.repeat(y[idx][:, None], heads, axis=1)
        logits, cache = net.forward(Zb)
        loss = float(bce_logits(logits, targets).mean())
        dlogits = _dlogits_match(logits, targets)
        grads = net.zero_grads()
        net.backward(cache, dlogits, grads)
        _check_finite_grads(grads)
        opt.step(grads)
        _check_finite_params(net, trace)
        trace.append((loss, 0.0, 0.0))
        if loss > 1e6:
            raise TrainingDivergence(f"loss diverged to {loss}", trace)
        if it % net_cfg.snapshot_interval == 0:
            snapshots.append({k: v.copy() for k, v in net.params.items()})

    if snapshots:
        for name in net.param_names():
            net.params[name] = sum(s[name] for s in snapshots) / len(snapshots)

    return TrainedBundle(
        method="erm",
        latent_map=lm,
        ensemble=None,
        net=net,
        net_config=net_cfg,
        pl_config=None,
        sigma=0.0,
        trace=trace,
    )


def train_pl_ens(ds: Dataset, pl_cfg: PseudoLabelConfig, n_components: int | None = None) -> TrainedBundle:
    """Latent map plus pseudo-labeler ensemble only, no network."""
    lm = fit_pca(ds.features, n_components)
    Z = encode(lm, ds.features)
    ens = fit_ensemble(Dataset(Z, ds.labels), pl_cfg)
    return TrainedBundle(
        method="pl_ens",
        latent_map=lm,
        ensemble=ens,
        net=None,
        net_config=None,
        pl_config=pl_cfg,
        sigma=0.0,
        trace=[],
    )


def predict_heads(bundle: TrainedBundle, X) -> np.ndarray:
    """Per-head probabilities of the network on raw feature rows."""
    if bundle.net is None:
        raise ValueError(f"bundle of method {bundle.method!r} has no network heads")
    Z = encode(bundle.latent_map, X)
    return sigmoid(bundle.net.logits(Z))


def predict_explor(bundle: TrainedBundle, X) -> np.ndarray:
    """Bagged score: average of the ensemble mean and the mean head probability."""
    if bundle.method != "explor":
        raise ValueError(f"predict_explor needs an explor bundle, got {bundle.method!r}")
    Z = encode(bundle.latent_map, X)
    g = bundle.ensemble.ensemble_mean(Z)
    h = sigmoid(bundle.net.logits(Z)).mean(axis=1)
    return 0.5 * (g + h)


def predict(bundle: TrainedBundle, X) -> np.ndarray:
    """Score rows of X with whatever the bundle's method deploys."""
    if bundle.method == "explor":
        return predict_explor(bundle, X)
    if bundle.method == "erm":
        return predict_heads(bundle, X).mean(axis=1)
    if bundle.method == "pl_ens":
        Z = encode(bundle.latent_map, X)
        return bundle.ensemble.ensemble_mean(Z)
    raise ValueError(f"unknown bundle method {bundle.method!r}")
