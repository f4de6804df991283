"""Fully-connected variational autoencoder with hand-written backprop.

The model is small enough to train full batch in plain numpy: an encoder
trunk feeding separate mean and log-variance heads, the usual
reparameterization z = mu + exp(logvar / 2) * eps, and a decoder mapping
the latent code back to a flattened trajectory row.  Hidden layers use a
leaky linear unit with a shallow positive slope (0.06) and a much
shallower negative slope (0.001); the remaining layers are linear.

The loss is mean squared reconstruction error plus a small KL penalty
pulling the code distribution toward a standard normal:

    total = mse(x, x_hat) + beta * kl(mu, logvar)
    kl    = -0.5 * sum(1 + logvar - mu^2 - exp(logvar))  (mean over batch)

Gradients are exact analytic derivatives of that loss; the test-suite
verifies them against central finite differences.  Training runs
full-batch steps with either plain gradient descent or adaptive-moment
updates, and is deterministic given the seed.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .validation import as_float_array

_ACTIVATIONS = ("leaky", "linear")


class TrainingDiverged(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass(frozen=True)
class Architecture:
    """Layer widths and activation placement for the network.

    encoder_sizes includes the input width; decoder_sizes includes the
    output width (which must equal the input width).  Activation tags are
    one per weight layer: len(encoder_sizes) - 1 for the encoder trunk
    and len(decoder_sizes) for the decoder (the last one is the output
    layer and is normally "linear").
    """

    encoder_sizes: tuple
    latent_dim: int
    decoder_sizes: tuple
    encoder_activations: tuple
    decoder_activations: tuple
    pos_slope: float = 0.06
    neg_slope: float = 0.001

    def __post_init__(self):
        enc = tuple(int(s) for s in self.encoder_sizes)
        dec = tuple(int(s) for s in self.decoder_sizes)
        object.__setattr__(self, "encoder_sizes", enc)
        object.__setattr__(self, "decoder_sizes", dec)
        object.__setattr__(self, "encoder_activations", tuple(self.encoder_activations))
        object.__setattr__(self, "decoder_activations", tuple(self.decoder_activations))
        if len(enc) < 2 or len(dec) < 1:
            raise ValueError("encoder and decoder need at least one weight layer each")
        if any(s <= 0 for s in enc + dec) or self.latent_dim <= 0:
            raise ValueError("all layer sizes must be positive")
        if enc[0] != dec[-1]:
            raise ValueError(
                f"decoder output width {dec[-1]} must match input width {enc[0]}"
            )
        if len(self.encoder_activations) != len(enc) - 1:
            raise ValueError("need one encoder activation per trunk layer")
        if len(self.decoder_activations) != len(dec):
            raise ValueError("need one decoder activation per layer")
        for tag in self.encoder_activations + self.decoder_activations:
            if tag not in _ACTIVATIONS:
                raise ValueError(f"unknown activation {tag!r}")
        if not (math.isfinite(self.pos_slope) and math.isfinite(self.neg_slope)):
            raise ValueError("activation slopes must be finite")

    @property
    def n_features(self):
        return self.encoder_sizes[0]


def default_architecture(n_features, latent_dim=3, pos_slope=0.06, neg_slope=0.001):
    """The reference layout: trunk n->300->100, latent, 100->100->300->n."""
    return Architecture(
        encoder_sizes=(n_features, 300, 100),
        latent_dim=latent_dim,
        decoder_sizes=(100, 100, 300, n_features),
        encoder_activations=("leaky", "linear"),
        decoder_activations=("leaky", "leaky", "linear", "linear"),
        pos_slope=pos_slope,
        neg_slope=neg_slope,
    )


@dataclass
class VaeParams:
    """Weights and biases, grouped by role.  Weight shape is (out, in)."""

    arch: Architecture
    enc_w: list = field(default_factory=list)
    enc_b: list = field(default_factory=list)
    mu_w: np.ndarray = None
    mu_b: np.ndarray = None
    logvar_w: np.ndarray = None
    logvar_b: np.ndarray = None
    dec_w: list = field(default_factory=list)
    dec_b: list = field(default_factory=list)


def init_params(arch, seed=0):
    """Scaled-normal weights (sd = 1/sqrt(fan_in)), zero biases."""
    rng = np.random.default_rng(seed)

    def layer(n_out, n_in):
        return rng.standard_normal((n_out, n_in)) / np.sqrt(n_in), np.zeros(n_out)

    params = VaeParams(arch=arch)
    sizes = arch.encoder_sizes
    for i in range(len(sizes) - 1):
        w, b = layer(sizes[i + 1], sizes[i])
        params.enc_w.append(w)
        params.enc_b.append(b)
    params.mu_w, params.mu_b = layer(arch.latent_dim, sizes[-1])
    params.logvar_w, params.logvar_b = layer(arch.latent_dim, sizes[-1])
    widths = (arch.latent_dim,) + arch.decoder_sizes
    for j in range(len(arch.decoder_sizes)):
        w, b = layer(widths[j + 1], widths[j])
        params.dec_w.append(w)
        params.dec_b.append(b)
    return params


def _act(x, tag, arch):
    if tag == "linear":
        return x
    return np.where(x >= 0, arch.pos_slope * x, arch.neg_slope * x)


def _act_grad(x, tag, arch):
    if tag == "linear":
        return np.ones_like(x)
    return np.where(x >= 0, arch.pos_slope, arch.neg_slope)


def _check_finite(arr, stage):
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(f"numerical overflow in {stage}")


def _as_batch(x, width, name):
    arr = as_float_array(x, name)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != width:
        raise ValueError(f"{name} must have width {width}, got shape {arr.shape}")
    return arr, single


def _encoder_forward(params, X):
    arch = params.arch
    h = X
    pre = []
    hidden = [h]
    for i, (w, b) in enumerate(zip(params.enc_w, params.enc_b)):
        a = h @ w.T + b
        pre.append(a)
        h = _act(a, arch.encoder_activations[i], arch)
        hidden.append(h)
    mu = h @ params.mu_w.T + params.mu_b
    logvar = h @ params.logvar_w.T + params.logvar_b
    return mu, logvar, pre, hidden


def _decoder_forward(params, Z):
    arch = params.arch
    g = Z
    pre = []
    hidden = [g]
    for j, (w, b) in enumerate(zip(params.dec_w, params.dec_b)):
        c = g @ w.T + b
        pre.append(c)
        g = _act(c, arch.decoder_activations[j], arch)
        hidden.append(g)
    return g, pre, hidden


def encode(params, x):
    """Map input rows to (mu, logvar); accepts a single row or a batch."""
    X, single = _as_batch(x, params.arch.n_features, "x")
    mu, logvar, _, _ = _encoder_forward(params, X)
    _check_finite(mu, "encoder")
    _check_finite(logvar, "encoder")
    if single:
        return mu[0], logvar[0]
    return mu, logvar


def decode(params, z):
    """Map latent rows back to reconstruction space."""
    Z, single = _as_batch(z, params.arch.latent_dim, "z")
    out, _, _ = _decoder_forward(params, Z)
    _check_finite(out, "decoder")
    return out[0] if single else out


def reparameterize(mu, logvar, rng):
    """Draw z = mu + exp(logvar / 2) * eps with eps ~ N(0, I)."""
    mu = np.asarray(mu, dtype=float)
    eps = rng.standard_normal(mu.shape)
    return mu + np.exp(0.5 * np.asarray(logvar, dtype=float)) * eps


def latent_codes(params, X):
    """Deterministic codes for a batch: the posterior means."""
    mu, _ = encode(params, X)
    return mu


def loss(x, x_hat, mu, logvar, beta):
    """Return (total, mse, kl), each averaged over the batch."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    x_hat = np.atleast_2d(np.asarray(x_hat, dtype=float))
    mu = np.atleast_2d(np.asarray(mu, dtype=float))
    logvar = np.atleast_2d(np.asarray(logvar, dtype=float))
    if x.shape != x_hat.shape:
        raise ValueError(f"x and x_hat shapes differ: {x.shape} vs {x_hat.shape}")
    mse = float(np.mean((x - x_hat) ** 2))
    kl_rows = -0.5 * np.sum(1.0 + logvar - mu**2 - np.exp(logvar), axis=1)
    kl = float(np.mean(kl_rows))
    return mse + beta * kl, mse, kl


def loss_and_gradients(params, X, beta, eps):
    """One full forward/backward pass with explicit reparameterization
    noise.  Returns (total, mse, kl, grads) where grads mirrors the
    VaeParams layout.  Passing eps explicitly keeps the pass a pure
    function, which is what the finite-difference check needs.
    """
    arch = params.arch
    X, _ = _as_batch(X, arch.n_features, "X")
    B, D = X.shape
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (B, arch.latent_dim):
        raise ValueError(f"eps must have shape {(B, arch.latent_dim)}, got {eps.shape}")

    mu, logvar, enc_pre, enc_hidden = _encoder_forward(params, X)
    sigma = np.exp(0.5 * logvar)
    z = mu + sigma * eps
    x_hat, dec_pre, dec_hidden = _decoder_forward(params, z)
    _check_finite(x_hat, "forward pass")

    total, mse, kl = loss(X, x_hat, mu, logvar, beta)

    grads = VaeParams(arch=arch)
    grads.enc_w = [None] * len(params.enc_w)
    grads.enc_b = [None] * len(params.enc_b)
    grads.dec_w = [None] * len(params.dec_w)
    grads.dec_b = [None] * len(params.dec_b)

    # decoder: d total / d x_hat back to d total / d z
    g = (2.0 / (B * D)) * (x_hat - X)
    for j in range(len(params.dec_w) - 1, -1, -1):
        p = g * _act_grad(dec_pre[j], arch.decoder_activations[j], arch)
        grads.dec_w[j] = p.T @ dec_hidden[j]
        grads.dec_b[j] = p.sum(axis=0)
        g = p @ params.dec_w[j]

    # reparameterization and KL terms
    d_mu = g + (beta / B) * mu
    d_logvar = g * eps * 0.5 * sigma + (beta / B) * 0.5 * (np.exp(logvar) - 1.0)

    h_last = enc_hidden[-1]
    grads.mu_w = d_mu.T @ h_last
    grads.mu_b = d_mu.sum(axis=0)
    grads.logvar_w = d_logvar.T @ h_last
    grads.logvar_b = d_logvar.sum(axis=0)

    # encoder trunk
    g = d_mu @ params.mu_w + d_logvar @ params.logvar_w
    for i in range(len(params.enc_w) - 1, -1, -1):
        q = g * _act_grad(enc_pre[i], arch.encoder_activations[i], arch)
        grads.enc_w[i] = q.T @ enc_hidden[i]
        grads.enc_b[i] = q.sum(axis=0)
        g = q @ params.enc_w[i]

    return total, mse, kl, grads


def backward(params, X, beta, rng):
    """Analytic gradients for one full-batch pass; the reparameterization
    noise comes from rng so the pass is reproducible."""
    X, _ = _as_batch(X, params.arch.n_features, "X")
    eps = rng.standard_normal((X.shape[0], params.arch.latent_dim))
    return loss_and_gradients(params, X, beta, eps)[3]


def flatten_params(params):
    """Concatenate all weights and biases into one float vector."""
    return np.concatenate([a.ravel() for a in _param_arrays(params)])


def unflatten_params(arch, vec):
    """Inverse of flatten_params for the given architecture."""
    template = init_params(arch, seed=0)
    out = VaeParams(arch=arch)
    offset = 0

    def take(shape):
        nonlocal offset
        size = int(np.prod(shape))
        chunk = vec[offset:offset + size].reshape(shape).copy()
        offset += size
        return chunk

    for w, b in zip(template.enc_w, template.enc_b):
        out.enc_w.append(take(w.shape))
        out.enc_b.append(take(b.shape))
    out.mu_w = take(template.mu_w.shape)
    out.mu_b = take(template.mu_b.shape)
    out.logvar_w = take(template.logvar_w.shape)
    out.logvar_b = take(template.logvar_b.shape)
    for w, b in zip(template.dec_w, template.dec_b):
        out.dec_w.append(take(w.shape))
        out.dec_b.append(take(b.shape))
    if offset != len(vec):
        raise ValueError(f"vector length {len(vec)} does not match architecture")
    return out


def _param_arrays(params):
    arrays = []
    for w, b in zip(params.enc_w, params.enc_b):
        arrays.extend([w, b])
    arrays.extend([params.mu_w, params.mu_b, params.logvar_w, params.logvar_b])
    for w, b in zip(params.dec_w, params.dec_b):
        arrays.extend([w, b])
    return arrays


@dataclass
class TrainConfig:
    epochs: int = 5000
    learning_rate: float = 1e-3
    kl_weight: float = 0.001
    optimizer: str = "adam"
    momentum_decay: float = 0.9
    variance_decay: float = 0.999
    epsilon: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be positive, got {self.epochs}")
        if self.optimizer not in ("adam", "gd"):
            raise ValueError(f"optimizer must be 'adam' or 'gd', got {self.optimizer!r}")
        if not math.isfinite(self.learning_rate) or self.learning_rate < 0:
            raise ValueError(f"learning_rate must be non-negative, got {self.learning_rate}")


@dataclass
class LossHistory:
    total: np.ndarray
    reconstruction: np.ndarray
    kl: np.ndarray

    def __len__(self):
        return len(self.total)


def train(params, X, config):
    """Full-batch training loop.  Returns (trained_params, history).

    Each epoch draws fresh reparameterization noise, takes one gradient
    step on the whole matrix, and records the loss seen by that step.
    Raises TrainingDiverged when the loss leaves the finite range.
    """
    arch = params.arch
    X, _ = _as_batch(X, arch.n_features, "X")
    rng = np.random.default_rng(config.seed)
    flat = flatten_params(params)
    m1 = np.zeros_like(flat)
    m2 = np.zeros_like(flat)
    totals = np.empty(config.epochs)
    recons = np.empty(config.epochs)
    kls = np.empty(config.epochs)
    current = unflatten_params(arch, flat)
    for epoch in range(config.epochs):
        eps = rng.standard_normal((X.shape[0], arch.latent_dim))
        try:
            total, mse, kl, grads = loss_and_gradients(current, X, config.kl_weight, eps)
        except FloatingPointError as exc:
            raise TrainingDiverged(f"training diverged at epoch {epoch + 1}: {exc}") from None
        if not np.isfinite(total):
            raise TrainingDiverged(
                f"training diverged at epoch {epoch + 1}: loss is not finite"
            )
        totals[epoch] = total
        recons[epoch] = mse
        kls[epoch] = kl
        g = flatten_params(grads)
        if config.optimizer == "adam":
            m1 = config.momentum_decay * m1 + (1.0 - config.momentum_decay) * g
            m2 = config.variance_decay * m2 + (1.0 - config.variance_decay) * g**2
            t = epoch + 1
            m1_hat = m1 / (1.0 - config.momentum_decay**t)
            m2_hat = m2 / (1.0 - config.variance_decay**t)
            flat = flat - config.learning_rate * m1_hat / (np.sqrt(m2_hat) + config.epsilon)
        else:
            flat = flat - config.learning_rate * g
        current = unflatten_params(arch, flat)
    history = LossHistory(total=totals, reconstruction=recons, kl=kls)
    return current, history


class TrajectoryVAE(BaseEstimator, TransformerMixin):
    """Variational autoencoder over flattened trajectory rows.

    fit() trains on an (n, d) matrix of normalized rows; transform()
    returns the latent posterior means.  Hidden widths follow the
    reference layout by default but are configurable for smaller inputs.
    """

    def __init__(
        self,
        encoder_hidden=(300, 100),
        latent_dim=3,
        decoder_hidden=(100, 100, 300),
        pos_slope=0.06,
        neg_slope=0.001,
        kl_weight=0.001,
        epochs=5000,
        learning_rate=1e-3,
        optimizer="adam",
        random_state=0,
    ):
        self.encoder_hidden = encoder_hidden
        self.latent_dim = latent_dim
        self.decoder_hidden = decoder_hidden
        self.pos_slope = pos_slope
        self.neg_slope = neg_slope
        self.kl_weight = kl_weight
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.optimizer = optimizer
        self.random_state = random_state

    def _build_architecture(self, n_features):
        n_enc = len(self.encoder_hidden)
        enc_act = tuple(
            "linear" if (n_enc >= 2 and i == n_enc - 1) else "leaky"
            for i in range(n_enc)
        )
        n_dec = len(self.decoder_hidden)
        dec_act = tuple(
            "linear" if (n_dec >= 2 and j == n_dec - 1) else "leaky"
            for j in range(n_dec)
        ) + ("linear",)
        return Architecture(
            encoder_sizes=(n_features, *self.encoder_hidden),
            latent_dim=self.latent_dim,
            decoder_sizes=(*self.decoder_hidden, n_features),
            encoder_activations=enc_act,
            decoder_activations=dec_act,
            pos_slope=self.pos_slope,
            neg_slope=self.neg_slope,
        )

    def fit(self, X, y=None):
        X = as_float_array(X, "X")
        if X.ndim != 2 or X.shape[0] == 0:
            raise ValueError(f"X must be a non-empty 2-d matrix, got shape {X.shape}")
        init_seed, train_seed = _split_seed(self.random_state)
        arch = self._build_architecture(X.shape[1])
        params = init_params(arch, seed=init_seed)
        config = TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            kl_weight=self.kl_weight,
            optimizer=self.optimizer,
            seed=train_seed,
        )
        self.params_, self.history_ = train(params, X, config)
        self.architecture_ = arch
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "params_"):
            raise NotFittedError("TrajectoryVAE is not fitted; call fit() first")

    def transform(self, X):
        self._check_fitted()
        return latent_codes(self.params_, X)

    def encode(self, X):
        self._check_fitted()
        return encode(self.params_, X)

    def inverse_transform(self, Z):
        self._check_fitted()
        return decode(self.params_, Z)


def _split_seed(seed):
    ss = np.random.SeedSequence(seed)
    a, b = ss.spawn(2)
    return a, b
