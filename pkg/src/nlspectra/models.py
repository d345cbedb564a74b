"""Samplers for the random matrix and signal ensembles, with reproducible seeding.

The observation model is a rank-one spike in symmetric Gaussian noise,

    y_hat = beta * x x^T + w_hat,

where ``w_hat`` is a normalized GOE draw (off-diagonal variance 1/n, diagonal
variance 2/n) and ``x = y / ||y||`` is a sparse non-negative signal whose
entries are drawn from a distribution ``eta`` on a random support.

Reproducibility contract
------------------------
All samplers are pure functions of ``(spec, n, seed)``.  Randomness comes from
numpy's counter-based Philox generator.  A 64-bit master seed is split into
named sub-streams via ``numpy.random.SeedSequence(seed, spawn_key=(stream_id,))``
with the fixed ids below; this guarantees that changing ``beta`` alone never
changes the noise realization, which enables variance-reduced (paired) sweeps.
Bit-level reproducibility is tied to numpy's stable stream guarantees for
Philox/SeedSequence; the numpy version is recorded by the experiment harness.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import InvalidDimensionError, InvalidParameterError, SamplingError

# Named sub-streams of the master seed.  Fixed for the life of the format.
STREAM_IDS = {"noise": 0, "signal-support": 1, "signal-values": 2}

_MAGIC = b"NLSI"
_FORMAT_VERSION = 1
_JSON_MAX_N = 64
_RESAMPLE_LIMIT = 8


def substream(seed: int, name: str) -> np.random.Generator:
    """Return the named Philox sub-stream of a 64-bit master seed."""
    if name not in STREAM_IDS:
        raise KeyError(f"unknown stream name: {name!r}")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(STREAM_IDS[name],))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *indices: int) -> int:
    """Derive a 64-bit child seed from a master seed and index tuple.

    Used by the experiment harness to give every (beta index, trial index)
    cell its own master seed, independent of scheduling order.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(0x5EED, *map(int, indices)))
    lo, hi = ss.generate_state(2)
    return (int(hi) << 32) | int(lo)


class SparsityMode(Enum):
    RANDOM_SUBSET = "random_subset"
    INDEPENDENT_ENTRIES = "independent_entries"


@dataclass(frozen=True)
class Eta:
    """Signal-entry distribution: point mass, half-normal |N(0,1)|, or finite discrete.

    ``atoms``/``weights`` are only used by the discrete kind.  The menu matches
    the distributions needed by the experiments; moments are exact.
    """

    kind: str  # "point_mass" | "half_normal" | "discrete"
    c: float = 1.0
    atoms: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "point_mass":
            if not self.c > 0:
                raise InvalidParameterError("point mass location must be > 0")
        elif self.kind == "half_normal":
            pass
        elif self.kind == "discrete":
            if len(self.atoms) == 0 or len(self.atoms) != len(self.weights):
                raise InvalidParameterError("discrete eta needs matching atoms/weights")
            w = np.asarray(self.weights, dtype=float)
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise InvalidParameterError("discrete eta weights must be a probability vector")
        else:
            raise InvalidParameterError(f"unknown eta kind: {self.kind!r}")

    @property
    def m1(self) -> float:
        if self.kind == "point_mass":
            return self.c
        if self.kind == "half_normal":
            return float(np.sqrt(2.0 / np.pi))
        return float(np.dot(self.atoms, self.weights))

    @property
    def m2(self) -> float:
        if self.kind == "point_mass":
            return self.c * self.c
        if self.kind == "half_normal":
            return 1.0
        return float(np.dot(np.square(self.atoms), self.weights))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.kind == "point_mass":
            return np.full(size, self.c)
        if self.kind == "half_normal":
            return np.abs(rng.standard_normal(size))
        idx = rng.choice(len(self.atoms), size=size, p=np.asarray(self.weights))
        return np.asarray(self.atoms, dtype=float)[idx]

    def quadrature(self, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights for expectations over eta.

        Discrete kinds are exact; the half-normal uses ``n_nodes`` equal-weight
        quantile midpoints.
        """
        if self.kind == "point_mass":
            return np.array([self.c]), np.array([1.0])
        if self.kind == "discrete":
            return np.asarray(self.atoms, dtype=float), np.asarray(self.weights, dtype=float)
        from scipy.special import ndtri

        u = (2.0 * np.arange(n_nodes) + 1.0) / (2.0 * n_nodes)
        nodes = ndtri((1.0 + u) / 2.0)  # half-normal quantiles
        return nodes, np.full(n_nodes, 1.0 / n_nodes)

    def to_json_obj(self) -> dict:
        if self.kind == "point_mass":
            return {"kind": "point_mass", "c": self.c}
        if self.kind == "half_normal":
            return {"kind": "half_normal"}
        return {"kind": "discrete", "atoms": list(self.atoms), "weights": list(self.weights)}

    @staticmethod
    def from_json_obj(obj: dict) -> "Eta":
        kind = obj["kind"]
        if kind == "point_mass":
            return Eta("point_mass", c=float(obj.get("c", 1.0)))
        if kind == "half_normal":
            return Eta("half_normal")
        return Eta("discrete", atoms=tuple(obj["atoms"]), weights=tuple(obj["weights"]))


#: Convenience instances for the two distributions used throughout the experiments.
POINT_MASS_1 = Eta("point_mass", c=1.0)
HALF_NORMAL = Eta("half_normal")


@dataclass(frozen=True)
class ModelSpec:
    """Parameters of the sparse biased observation model.

    ``m1``/``m2`` are the first two moments of ``eta`` and are stored explicitly
    (they enter the theoretical equations); they are filled in from ``eta``
    automatically and validated against it.
    """

    eta: Eta
    p: float
    sparsity_mode: SparsityMode = SparsityMode.RANDOM_SUBSET
    beta: float = 0.0
    m1: float = field(default=None)  # type: ignore[assignment]
    m2: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.m1 is None:
            object.__setattr__(self, "m1", self.eta.m1)
        if self.m2 is None:
            object.__setattr__(self, "m2", self.eta.m2)
        if not (0.0 < self.p <= 1.0):
            raise InvalidParameterError(f"sparsity level p must be in (0, 1], got {self.p}")
        if not self.beta >= 0.0:
            raise InvalidParameterError(f"signal strength beta must be >= 0, got {self.beta}")
        if not self.m1 > 0:
            raise InvalidParameterError("eta must have positive mean")
        if self.m2 < self.m1**2 - 1e-12:
            raise InvalidParameterError("moments violate m2 >= m1^2")

    def with_beta(self, beta: float) -> "ModelSpec":
        return replace(self, beta=beta)

    def to_json_obj(self) -> dict:
        return {
            "kind": "sparse_biased",
            "eta": self.eta.to_json_obj(),
            "p": self.p,
            "sparsity_mode": self.sparsity_mode.value,
            "beta": self.beta,
        }

    @staticmethod
    def from_json_obj(obj: dict) -> "ModelSpec":
        return ModelSpec(
            eta=Eta.from_json_obj(obj["eta"]),
            p=float(obj["p"]),
            sparsity_mode=SparsityMode(obj.get("sparsity_mode", "random_subset")),
            beta=float(obj.get("beta", 0.0)),
        )


def gaussian_planted_submatrix_model(n: int, beta: float) -> ModelSpec:
    """Planted-submatrix specialization: eta = delta_1, p = beta / sqrt(n).

    For beta = 0 the sparsity level is a placeholder (no signal is drawn).
    """
    p = beta / np.sqrt(n) if beta > 0 else 1.0 / n
    return ModelSpec(eta=POINT_MASS_1, p=min(p, 1.0), beta=beta)


@dataclass(frozen=True)
class Instance:
    """A sampled problem: normalized observation, hidden signal, seed metadata.

    ``y_hat`` is exactly symmetric (bitwise); ``x`` is a unit vector when
    beta > 0 and the zero vector otherwise.
    """

    n: int
    y_hat: np.ndarray
    x: np.ndarray
    seed: int
    model: ModelSpec | None = None

    def support(self) -> np.ndarray:
        """Indices of the nonzero coordinates of the hidden signal."""
        return np.flatnonzero(self.x)


def sample_goe(n: int, seed: int) -> np.ndarray:
    """Draw a normalized GOE matrix w_hat = W / sqrt(n).

    Off-diagonal entries have variance 1/n, diagonal entries 2/n.  The output
    is bitwise symmetric and deterministic given ``(n, seed)``.
    """
    if n < 1:
        raise InvalidDimensionError(f"n must be >= 1, got {n}")
    rng = substream(seed, "noise")
    a = rng.standard_normal((n, n))
    w = np.triu(a, 1)
    w = w + w.T
    np.fill_diagonal(w, np.sqrt(2.0) * np.diag(a))
    return w / np.sqrt(n)


def sample_signal(model: ModelSpec, n: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw the hidden signal: returns ``(x, y)`` with ``x = y / ||y||``.

    ``y_i = eps_i * z_i`` where ``z_i ~ eta`` i.i.d. and ``eps`` follows the
    sparsity mode.  Support and value draws come from separate sub-streams, so
    the support is unchanged if only ``eta`` changes.  A degenerate all-zero
    draw (possible when eta has an atom at 0, or with an empty independent
    support) is retried a bounded number of times.
    """
    if n < 1:
        raise InvalidDimensionError(f"n must be >= 1, got {n}")
    k = int(round(n * model.p))
    if model.sparsity_mode is SparsityMode.RANDOM_SUBSET and k < 1:
        raise InvalidParameterError(
            f"round(n*p) = {k} < 1: random-subset support would be empty (n={n}, p={model.p})"
        )
    rng_support = substream(seed, "signal-support")
    rng_values = substream(seed, "signal-values")
    eps = np.zeros(n)
    if model.sparsity_mode is SparsityMode.RANDOM_SUBSET:
        support = rng_support.choice(n, size=k, replace=False)
        eps[support] = 1.0
    else:
        eps[rng_support.random(n) < model.p] = 1.0

    for _ in range(_RESAMPLE_LIMIT):
        z = model.eta.sample(rng_values, n)
        y = eps * z
        norm = float(np.linalg.norm(y))
        if norm > 0:
            return y / norm, y
        if model.sparsity_mode is SparsityMode.INDEPENDENT_ENTRIES and not eps.any():
            eps[rng_support.random(n) < model.p] = 1.0
    raise SamplingError(f"signal vector was all-zero after {_RESAMPLE_LIMIT} resampling attempts")


def sample_observation(model: ModelSpec, n: int, seed: int) -> Instance:
    """Draw a full instance: ``y_hat = beta * x x^T + w_hat``.

    When beta = 0 the signal is the zero vector and ``y_hat`` equals the
    ``sample_goe`` output for the same seed.
    """
    w_hat = sample_goe(n, seed)
    if model.beta > 0:
        x, _ = sample_signal(model, n, seed)
        y_hat = model.beta * np.outer(x, x) + w_hat
    else:
        x = np.zeros(n)
        y_hat = w_hat
    return Instance(n=n, y_hat=y_hat, x=x, seed=int(seed), model=model)


def sample_planted_clique(n: int, beta: float, seed: int) -> Instance:
    """Draw a planted-clique instance encoded as a Seidel matrix over {-1, 0, +1}.

    The base graph is Erdos-Renyi(1/2); a clique is planted on ``round(beta *
    sqrt(n))`` vertices.  Returns the normalized matrix Y / sqrt(n) together
    with the indicator signal 1_S / sqrt(|S|) (zero vector when the clique is
    empty).
    """
    if n < 1:
        raise InvalidDimensionError(f"n must be >= 1, got {n}")
    if beta < 0:
        raise InvalidParameterError(f"beta must be >= 0, got {beta}")
    k = int(round(beta * np.sqrt(n)))
    if k > n:
        raise InvalidParameterError(f"clique size round(beta*sqrt(n)) = {k} exceeds n = {n}")
    rng = substream(seed, "noise")
    signs = 2.0 * rng.integers(0, 2, size=(n, n)).astype(float) - 1.0
    y = np.triu(signs, 1)
    y = y + y.T
    x = np.zeros(n)
    if k >= 1:
        rng_support = substream(seed, "signal-support")
        support = rng_support.choice(n, size=k, replace=False)
        block = np.ix_(support, support)
        y[block] = 1.0
        y[support, support] = 0.0
        x[support] = 1.0 / np.sqrt(k)
    return Instance(n=n, y_hat=y / np.sqrt(n), x=x, seed=int(seed), model=None)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _model_descriptor(inst: Instance) -> dict:
    if inst.model is None:
        return {"kind": "none"}
    return inst.model.to_json_obj()


def save_instance(inst: Instance, path_or_file) -> None:
    """Write an instance to the binary container format.

    Layout: magic, format version, n, seed, model descriptor (length-prefixed
    JSON), the row-major lower triangle of ``y_hat`` as little-endian float64,
    then the signal vector.
    """
    close = False
    f = path_or_file
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        f = open(path_or_file, "wb")
        close = True
    try:
        desc = json.dumps(_model_descriptor(inst), sort_keys=True).encode("utf-8")
        f.write(_MAGIC)
        f.write(struct.pack("<IQQI", _FORMAT_VERSION, inst.n, inst.seed, len(desc)))
        f.write(desc)
        tri = inst.y_hat[np.tril_indices(inst.n)]
        f.write(np.ascontiguousarray(tri, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(inst.x, dtype="<f8").tobytes())
    finally:
        if close:
            f.close()


def load_instance(path_or_file) -> Instance:
    """Read an instance written by :func:`save_instance`."""
    close = False
    f = path_or_file
    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        f = open(path_or_file, "rb")
        close = True
    try:
        if f.read(4) != _MAGIC:
            raise ValueError("not an instance container (bad magic)")
        version, n, seed, desc_len = struct.unpack("<IQQI", f.read(24))
        if version != _FORMAT_VERSION:
            raise ValueError(f"unsupported container version {version}")
        desc = json.loads(f.read(desc_len).decode("utf-8"))
        m = n * (n + 1) // 2
        tri = np.frombuffer(f.read(8 * m), dtype="<f8").astype(np.float64)
        x = np.frombuffer(f.read(8 * n), dtype="<f8").astype(np.float64)
        y_hat = np.zeros((n, n))
        y_hat[np.tril_indices(n)] = tri
        y_hat = y_hat + np.tril(y_hat, -1).T
        model = None if desc.get("kind") == "none" else ModelSpec.from_json_obj(desc)
        return Instance(n=int(n), y_hat=y_hat, x=x, seed=int(seed), model=model)
    finally:
        if close:
            f.close()


def instance_to_json(inst: Instance) -> str:
    """JSON form for small instances (n <= 64), used by golden tests."""
    if inst.n > _JSON_MAX_N:
        raise InvalidDimensionError(f"JSON serialization limited to n <= {_JSON_MAX_N}")
    obj = {
        "format_version": _FORMAT_VERSION,
        "n": inst.n,
        "seed": inst.seed,
        "model": _model_descriptor(inst),
        "y_hat": [[float(v) for v in row] for row in inst.y_hat],
        "x": [float(v) for v in inst.x],
    }
    return json.dumps(obj, sort_keys=True)


def instance_from_json(text: str) -> Instance:
    obj = json.loads(text)
    desc = obj["model"]
    model = None if desc.get("kind") == "none" else ModelSpec.from_json_obj(desc)
    y_hat = np.array(obj["y_hat"], dtype=float)
    return Instance(
        n=int(obj["n"]),
        y_hat=y_hat,
        x=np.array(obj["x"], dtype=float),
        seed=int(obj["seed"]),
        model=model,
    )
