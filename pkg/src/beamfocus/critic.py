"""Gram-form power critic.

The critic predicts the received power of a constant-modulus beam w as
||Q^H w||^2 for a learned complex matrix Q of shape (M, rank). Because the
true single-path power is |h^H w|^2, a rank-1 Q equal to the channel
reproduces it exactly; extra rank over-parameterizes benignly and speeds up
the regression. Training minimizes squared error on measured powers with an
exact analytic gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CriticModel:
    """Model parameters: complex matrix of shape (M, rank)."""

    matrix: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.matrix, dtype=complex)
        if q.ndim != 2 or q.shape[1] < 1:
            raise ValueError("matrix must be (M, rank) with rank >= 1")
        q.setflags(write=False)
        object.__setattr__(self, "matrix", q)

    @property
    def num_antennas(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class PowerDataset:
    """(beam, power) training pairs: beams (n, M) unit-norm, powers (n,) >= 0."""

    beams: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        beams = np.asarray(self.beams, dtype=complex)
        powers = np.atleast_1d(np.asarray(self.powers, dtype=float))
        if beams.ndim != 2 or beams.shape[0] != powers.size:
            raise ValueError("need one power per beam")
        norms = np.linalg.norm(beams, axis=1)
        if beams.shape[0] and np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("beams must be unit-norm")
        if np.any(powers < 0.0):
            raise ValueError("powers must be nonnegative")
        beams.setflags(write=False)
        powers.setflags(write=False)
        object.__setattr__(self, "beams", beams)
        object.__setattr__(self, "powers", powers)

    def __len__(self) -> int:
        return self.powers.size


def beam_from_phases(phases) -> np.ndarray:
    """Constant-modulus beam (1/sqrt(M)) exp(j phases)."""
    phases = np.atleast_1d(np.asarray(phases, dtype=float))
    return np.exp(1j * phases) / np.sqrt(phases.size)


def predict_power(model: CriticModel, w: np.ndarray) -> float:
    """Predicted power ||Q^H w||^2 (real, nonnegative)."""
    w = np.asarray(w, dtype=complex)
    if w.shape != (model.num_antennas,):
        raise ValueError("beam length does not match the model")
    g = model.matrix.conj().T @ w
    return float(np.real(np.vdot(g, g)))


def critic_value(model: CriticModel, s, a) -> float:
    """Predicted reward: power of the action beam minus power of the state beam."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if s.shape != a.shape:
        raise ValueError("state and action lengths differ")
    return predict_power(model, beam_from_phases(a)) - predict_power(
        model, beam_from_phases(s)
    )


def _predictions(q: np.ndarray, beams: np.ndarray) -> np.ndarray:
    # row i of beams is beam w_i; prediction_i = ||Q^H w_i||^2
    g = beams.conj() @ q
    return np.sum(np.abs(g) ** 2, axis=1)


def critic_loss_and_gradient(model: CriticModel, data: PowerDataset):
    """Mean squared power error and its gradient in the model matrix.

    loss = (1/n) sum_i (||Q^H w_i||^2 - p_i)^2. The returned complex array
    packs the derivative with respect to the real and imaginary parts of Q
    (so it matches finite differences on the 2*M*rank real coordinates):
    grad = (4/n) sum_i err_i (w_i w_i^H) Q.
    """
    if len(data) == 0:
        raise ValueError("dataset is empty")
    if data.beams.shape[1] != model.num_antennas:
        raise ValueError("beam length does not match the model")
    q = model.matrix
    err = _predictions(q, data.beams) - data.powers
    loss = float(np.mean(err**2))
    grad = (4.0 / len(data)) * (data.beams.T @ (err[:, None] * (data.beams.conj() @ q)))
    return loss, grad


def initialize_critic(
    num_antennas: int, rank: int, data: PowerDataset, seed: int = 0
) -> CriticModel:
    """Random init scaled so the mean predicted power matches the data mean.

    Keeps the optimizer away from the stationary saddle at Q = 0.
    """
    if len(data) == 0:
        raise ValueError("dataset is empty")
    rng = np.random.default_rng(seed)
    q = (
        rng.standard_normal((num_antennas, rank))
        + 1j * rng.standard_normal((num_antennas, rank))
    ) / np.sqrt(2.0 * rank)
    mean_pred = float(np.mean(_predictions(q, data.beams)))
    mean_power = float(np.mean(data.powers))
    if mean_pred > 0.0 and mean_power > 0.0:
        q *= np.sqrt(mean_power / mean_pred)
    return CriticModel(matrix=q)


@dataclass(frozen=True)
class TrainOptions:
    """Gradient-descent settings for the power regression."""

    lr: float = 0.2
    iters: int = 300
    batch: int = 1024
    seed: int = 0

    def __post_init__(self):
        if self.lr < 0.0:
            raise ValueError("learning rate must be nonnegative")
        if self.iters < 1:
            raise ValueError("need at least one iteration")
        if self.batch < 1:
            raise ValueError("batch size must be positive")


def train_critic(model: CriticModel, data: PowerDataset, opts: TrainOptions):
    """Mini-batch gradient descent with halving-on-increase backtracking.

    Steps use the analytic batch gradient; a step is only accepted if the
    full-dataset loss does not increase (halving the step until it fits, the
    halved step persisting). Powers are rescaled to unit mean internally,
    which rescales Q by the square root and leaves predictions consistent.
    Returns the trained model and the per-iteration full-dataset loss trace
    (in original units); the final loss never exceeds the initial one.
    Deterministic per opts.seed.
    """
    if len(data) == 0:
        raise ValueError("dataset is empty")
    n = len(data)
    scale = float(np.mean(data.powers))
    if scale <= 0.0:
        scale = 1.0
    powers_scaled = data.powers / scale

    def full_loss(q):
        return float(np.mean((_predictions(q, data.beams) - powers_scaled) ** 2))

    if opts.lr == 0.0:
        trace = np.full(opts.iters, full_loss(model.matrix / np.sqrt(scale)) * scale**2)
        return model, trace

    rng = np.random.default_rng(opts.seed)
    q = model.matrix / np.sqrt(scale)
    current = full_loss(q)
    trace = np.empty(opts.iters)
    batch_size = min(opts.batch, n)
    for it in range(opts.iters):
        idx = rng.choice(n, size=batch_size, replace=False)
        batch = PowerDataset(beams=data.beams[idx], powers=powers_scaled[idx])
        _, grad = critic_loss_and_gradient(CriticModel(matrix=q), batch)
        # backtrack from the fixed base step each iteration; a persistent
        # step decay would let one noisy batch freeze all later progress
        lr = opts.lr
        for _ in range(30):
            candidate = q - lr * grad
            cand_loss = full_loss(candidate)
            if cand_loss <= current:
                q, current = candidate, cand_loss
                break
            lr *= 0.5
        trace[it] = current * scale**2
    return CriticModel(matrix=q * np.sqrt(scale)), trace


def critic_to_text(model: CriticModel) -> str:
    """Header `M v` followed by M rows of rank `re:im` entries."""
    m, v = model.matrix.shape
    lines = [f"{m} {v}"]
    for row in model.matrix:
        lines.append(" ".join(f"{float(c.real)!r}:{float(c.imag)!r}" for c in row))
    return "\n".join(lines) + "\n"


def critic_from_text(text: str) -> CriticModel:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    m, v = (int(tok) for tok in lines[0].split())
    if len(lines) != m + 1:
        raise ValueError(f"expected {m} rows")
    q = np.empty((m, v), dtype=complex)
    for i in range(m):
        entries = lines[1 + i].split()
        if len(entries) != v:
            raise ValueError(f"row {i} has {len(entries)} entries, expected {v}")
        for j, entry in enumerate(entries):
            re, _, im = entry.partition(":")
            q[i, j] = complex(float(re), float(im))
    return CriticModel(matrix=q)


def save_critic(model: CriticModel, path, header_comment: str = "") -> None:
    with open(path, "w") as fh:
        if header_comment:
            fh.write(header_comment)
        fh.write(critic_to_text(model))


def load_critic(path) -> CriticModel:
    with open(path) as fh:
        return critic_from_text(fh.read())
