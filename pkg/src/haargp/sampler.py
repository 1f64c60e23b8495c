"""Haar sampling and Monte Carlo evaluation of QNN outputs.

An output is ``C(rho) = <psi| V^dag O V |psi>`` with ``V`` Haar-random on
U(d) or O(d) and ``O`` a Pauli string. For a dataset spanning an
r-dimensional subspace with orthonormal basis ``Q`` (d x r) the images
``V Q`` form a Haar-random isometry, so one d x r isometry per sample
reproduces the joint law of all outputs at cost O(d r^2) instead of O(d^3).

Reproducibility: samples are split into fixed-size chunks, chunk ``c`` draws
from the ``c``-th child of ``SeedSequence(seed)`` through a Philox
generator. Chunking depends only on the problem size, so results are
identical for any number of worker threads.
"""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, MemoryGuardError, RealStatesRequiredError, UnsupportedError
from .exact_weingarten import check_group
from .export import write_table
from .perm import InnerProductMatrix

CHUNK_ELEMENTS = 1 << 21  # complex entries per chunk of Gaussian draws
MAX_CHUNK_BYTES = 1 << 31


def make_rng(seed) -> np.random.Generator:
    """Counter-based Philox generator seeded through a SeedSequence."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(ss))


# --- states and observables -----------------------------------------------


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray
    label: str = ""

    def __post_init__(self):
        a = np.asarray(self.amplitudes)
        if a.ndim != 1:
            raise ValueError("state amplitudes must be a vector")
        nrm = np.linalg.norm(a)
        if abs(nrm - 1) > 1e-12:
            raise ValueError(f"state is not normalized (norm {nrm!r})")
        object.__setattr__(self, "amplitudes", a)

    @property
    def d(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def real_flag(self) -> bool:
        return not np.iscomplexobj(self.amplitudes) or not np.any(self.amplitudes.imag)


_SINGLE = re.compile(r"^([XYZ])(\d+)$")


@dataclass(frozen=True)
class PauliObservable:
    """Pauli string; character ``q`` acts on qubit ``q`` (qubit 0 is the most
    significant bit of the basis index)."""

    spec: str

    def __post_init__(self):
        s = self.spec.upper()
        if not s or set(s) - set("IXYZ"):
            raise ValueError(f"Pauli string must use I, X, Y, Z: {self.spec!r}")
        if set(s) == {"I"}:
            raise ValueError("the all-identity string is not traceless")
        object.__setattr__(self, "spec", s)

    @classmethod
    def parse(cls, text: str, n: int) -> "PauliObservable":
        """Accept a full string of length n, or ``Z1``-style single-qubit
        shorthand with a 1-based qubit index."""
        m = _SINGLE.match(text.upper())
        if m:
            q = int(m.group(2))
            if not 1 <= q <= n:
                raise ValueError(f"qubit {q} out of range 1..{n}")
            return cls("I" * (q - 1) + m.group(1) + "I" * (n - q))
        obs = cls(text)
        if obs.n != n:
            raise ValueError(f"Pauli string has {obs.n} qubits, expected {n}")
        return obs

    @property
    def n(self) -> int:
        return len(self.spec)

    @property
    def d(self) -> int:
        return 2**self.n

    @property
    def diagonal_flag(self) -> bool:
        return set(self.spec) <= {"I", "Z"}

    @property
    def real_flag(self) -> bool:
        return "Y" not in self.spec

    def flip_mask(self) -> int:
        mask = 0
        for q, c in enumerate(self.spec):
            if c in "XY":
                mask |= 1 << (self.n - 1 - q)
        return mask

    def phases(self) -> np.ndarray:
        """``O|x> = phases[x] |x ^ mask>``."""
        x = np.arange(self.d, dtype=np.int64)
        ph = np.ones(self.d, dtype=complex)
        for q, c in enumerate(self.spec):
            if c in "ZY":
                bit = (x >> (self.n - 1 - q)) & 1
                sgn = 1 - 2 * bit
                ph = ph * (sgn if c == "Z" else 1j * sgn)
        if self.real_flag:
            return ph.real.copy()
        return ph

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """``O psi`` along the last-but-one axis if 2D/3D, else the vector."""
        idx = np.arange(self.d) ^ self.flip_mask()
        ph = self.phases()
        if psi.ndim == 1:
            return (ph * psi)[idx]
        shape = [1] * psi.ndim
        shape[-2] = self.d
        return np.take(ph.reshape(shape) * psi, idx, axis=-2)

    def matrix(self) -> np.ndarray:
        """Dense matrix (tests and small d only)."""
        return self.apply(np.eye(self.d))


# --- Haar matrices --------------------------------------------------------


def _ginibre(rng: np.random.Generator, shape, real: bool) -> np.ndarray:
    if real:
        return rng.standard_normal(shape)
    shape = tuple(shape) if isinstance(shape, tuple) else (shape,)
    z = rng.standard_normal(shape + (2,)).view(np.complex128).reshape(shape)
    z *= math.sqrt(0.5)
    return z


def _qr_haar(z: np.ndarray) -> np.ndarray:
    """Q factor with the R-diagonal phase (sign) absorbed; stacked inputs allowed."""
    if z.shape[-1] == 1:
        return z / np.linalg.norm(z, axis=-2, keepdims=True)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    ph = diag / np.abs(diag)
    return q * ph[..., None, :]


def haar_isometry(d: int, r: int, rng: np.random.Generator, group: str = "unitary", batch: int | None = None) -> np.ndarray:
    """First r columns of a Haar-random element of U(d) or O(d).

    With ``batch`` set, returns an array of shape ``(batch, d, r)``.
    """
    group = check_group(group)
    if r > d:
        raise DomainError(f"isometry needs r <= d, got r={r}, d={d}")
    if r < 1:
        raise DomainError(f"isometry needs r >= 1, got {r}")
    shape = (d, r) if batch is None else (batch, d, r)
    return _qr_haar(_ginibre(rng, shape, group == "orthogonal"))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return haar_isometry(d, d, rng, "unitary")


def haar_orthogonal(d: int, rng: np.random.Generator) -> np.ndarray:
    return haar_isometry(d, d, rng, "orthogonal")


# --- datasets -------------------------------------------------------------


def _basis_state(d: int, index: int) -> np.ndarray:
    v = np.zeros(d)
    v[index] = 1.0
    return v


def _normalize(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def _resolve_d(n: int | None, d: int | None) -> int:
    if d is None and n is None:
        raise ValueError("give the number of qubits n or the dimension d")
    if d is not None and n is not None and d != 2**n:
        raise ValueError(f"d={d} inconsistent with n={n} qubits")
    return int(d if d is not None else 2**n)


def make_dataset(
    kind: str,
    n: int | None = None,
    d: int | None = None,
    m: int = 2,
    rng: np.random.Generator | None = None,
    real: bool = False,
    classes: int = 2,
    spread: float = 0.1,
    overlap: float = 0.5,
) -> tuple[list[PureState], InnerProductMatrix]:
    """Construct a named dataset and its inner-product matrix.

    kinds: ``computational`` (first m basis states), ``ghz_pair``
    (|0..0> and GHZ), ``epsilon_pair`` (|0..0> and a state at overlap 1/d),
    ``orthonormal_basis`` (m orthonormal states; random if ``rng`` given),
    ``haar_random`` (m i.i.d. Haar states), ``clustered`` (``classes``
    orthonormal centres, each perturbed by Gaussian noise of size ``spread``),
    ``common_overlap`` (m real states with every pairwise overlap equal to
    ``overlap``, built as ``a|0> + b|i>``).
    """
    dim = _resolve_d(n, d)
    if kind == "computational":
        if m > dim:
            raise ValueError(f"need m <= d, got m={m}, d={dim}")
        states = [PureState(_basis_state(dim, i), f"|{i}>") for i in range(m)]
        return states, InnerProductMatrix.identity(m)
    if kind == "ghz_pair":
        if dim < 2:
            raise ValueError("ghz_pair needs d >= 2")
        ghz = np.zeros(dim)
        ghz[0] = ghz[-1] = math.sqrt(0.5)
        states = [PureState(_basis_state(dim, 0), "zero"), PureState(ghz, "ghz")]
        return states, InnerProductMatrix.from_states([s.amplitudes for s in states])
    if kind == "epsilon_pair":
        if dim < 2:
            raise ValueError("epsilon_pair needs d >= 2")
        psi = np.zeros(dim)
        psi[0] = math.sqrt(1.0 / dim)
        psi[-1] = math.sqrt(1.0 - 1.0 / dim)
        states = [PureState(_basis_state(dim, 0), "zero"), PureState(_normalize(psi), "psi_eps")]
        return states, InnerProductMatrix.from_states([s.amplitudes for s in states])
    if kind == "orthonormal_basis":
        if m > dim:
            raise ValueError(f"need m <= d, got m={m}, d={dim}")
        if rng is None:
            return make_dataset("computational", d=dim, m=m)
        Q = haar_isometry(dim, m, rng, "orthogonal" if real else "unitary")
        states = [PureState(Q[:, i], f"b{i}") for i in range(m)]
        return states, InnerProductMatrix.from_states([s.amplitudes for s in states])
    if kind == "common_overlap":
        if not 0 <= overlap < 1:
            raise ValueError(f"overlap must lie in [0, 1), got {overlap}")
        if m + 1 > dim:
            raise ValueError(f"need m + 1 <= d, got m={m}, d={dim}")
        a = math.sqrt(math.sqrt(overlap))
        b = math.sqrt(1 - a * a)
        states = []
        for i in range(m):
            v = np.zeros(dim)
            v[0], v[i + 1] = a, b
            states.append(PureState(v, f"t{i}"))
        return states, InnerProductMatrix.from_states([s.amplitudes for s in states])
    if rng is None:
        rng = make_rng(0)
    if kind == "haar_random":
        vs = _ginibre(rng, (m, dim), real)
        states = [PureState(_normalize(v), f"h{i}") for i, v in enumerate(vs)]
        return states, InnerProductMatrix.from_states([s.amplitudes for s in states])
    if kind == "clustered":
        if classes > dim:
            raise ValueError("more classes than dimensions")
        centres = haar_isometry(dim, classes, rng, "orthogonal" if real else "unitary").T
        states = []
        for i in range(m):
            c = i * classes // m
            noise = _ginibre(rng, (dim,), real) * spread / math.sqrt(dim)
            states.append(PureState(_normalize(centres[c] + noise), f"c{c}_{i}"))
        return states, InnerProductMatrix.from_states([s.amplitudes for s in states])
    raise ValueError(f"unknown dataset kind {kind!r}")


# --- sampling -------------------------------------------------------------


@dataclass
class SampleBatch:
    values: np.ndarray
    group: str
    d: int
    seed: object
    state_labels: list[str]
    observable: str
    meta: dict = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    def column(self, j) -> np.ndarray:
        if isinstance(j, str):
            j = self.state_labels.index(j)
        return self.values[:, j]

    def metadata(self) -> dict:
        return {
            "group": self.group,
            "d": self.d,
            "seed": self.seed,
            "observable": self.observable,
            "state_labels": list(self.state_labels),
            "n_samples": int(self.n_samples),
            **self.meta,
        }

    def to_csv(self, path) -> None:
        """One row per sample, one column per state; metadata in a JSON sidecar."""
        write_table(path, self.state_labels, self.values, self.metadata())


def orthonormalize(vectors: np.ndarray, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Modified Gram-Schmidt with one re-orthogonalization pass.

    ``vectors`` has shape (m, d). Returns ``Q`` (d x r) and coordinates
    ``C`` (m x r) with ``vectors[i] = Q @ C[i]``.
    """
    basis: list[np.ndarray] = []
    for v in vectors:
        w = np.array(v, dtype=np.result_type(v, float))
        for _ in range(2):
            for q in basis:
                w = w - np.vdot(q, w) * q
        nrm = np.linalg.norm(w)
        if nrm > tol * max(1.0, np.linalg.norm(v)):
            basis.append(w / nrm)
    Q = np.array(basis).T
    coords = (Q.conj().T @ np.asarray(vectors).T).T
    return Q, coords


def _chunk_plan(n_samples: int, per_sample: int) -> list[int]:
    size = max(1, min(n_samples, CHUNK_ELEMENTS // max(1, per_sample)))
    if per_sample * 16 > MAX_CHUNK_BYTES:
        raise MemoryGuardError(f"a single sample needs {per_sample} complex entries; exceeds the memory guard")
    sizes = [size] * (n_samples // size)
    if n_samples % size:
        sizes.append(n_samples % size)
    return sizes


def _run_chunks(fn, sizes: list[int], seed, threads: int | None) -> list:
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = list(zip(sizes, children))
    if threads is None or threads <= 1 or len(jobs) == 1:
        return [fn(b, make_rng(ss)) for b, ss in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(job[0], make_rng(job[1])), jobs))


def _herm_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.swapaxes(a.conj(), -1, -2) @ b


def _row_order(observables: Sequence[PauliObservable]):
    """Row order putting the +1 eigenspace of the first observable first.

    Rows of a Ginibre matrix are i.i.d., so relabelling them by a fixed
    permutation leaves the law unchanged; with every observable diagonal this
    turns the first sandwich into two contiguous Gram products.
    """
    if not all(o.diagonal_flag for o in observables):
        return None, None
    s = observables[0].phases().real
    return np.argsort(-s, kind="stable"), int(np.count_nonzero(s > 0))


def _sandwiches(Z: np.ndarray, observables: Sequence[PauliObservable], order, npos) -> tuple[np.ndarray, list[np.ndarray]]:
    """Gram matrix ``Z^dag Z`` and raw ``Z^dag O Z`` for each observable."""
    raws = []
    if order is not None:
        top, bot = Z[:, :npos], Z[:, npos:]
        gt, gb = _herm_product(top, top), _herm_product(bot, bot)
        gram = gt + gb
        raws.append(gt - gb)
        for obs in observables[1:]:
            s = obs.phases().real[order]
            raws.append(_herm_product(Z, Z * s[:, None]))
        return gram, raws
    gram = _herm_product(Z, Z)
    for obs in observables:
        if obs.diagonal_flag:
            raws.append(_herm_product(Z, Z * obs.phases().real[:, None]))
        else:
            raws.append(_herm_product(Z, obs.apply(Z)))
    return gram, raws


def _compressed_observables(V: np.ndarray, observables: Sequence[PauliObservable]) -> list[np.ndarray]:
    """``V^dag O V`` for each observable; V has shape (B, d, r) with orthonormal columns."""
    return _sandwiches(V, observables, None, None)[1]


def _haar_compressed(
    rng: np.random.Generator, b: int, d: int, r: int, real: bool, observables: Sequence[PauliObservable]
) -> list[np.ndarray]:
    """``V^dag O V`` for ``b`` Haar isometries V (d x r) without forming V.

    With ``Z = V R`` (R upper triangular with positive diagonal, ``R^dag R =
    Z^dag Z``), ``V^dag O V = R^-dag (Z^dag O Z) R^-1``. Tall matrices are
    well conditioned so the Cholesky route is accurate; for ``d < 2r`` an
    explicit QR is used instead.
    """
    Z = _ginibre(rng, (b, d, r), real)
    if d < 2 * r:
        return _compressed_observables(_qr_haar(Z), observables)
    order, npos = _row_order(observables)
    gram, raws = _sandwiches(Z, observables, order, npos)
    linv = np.linalg.inv(np.linalg.cholesky(gram))
    linv_h = np.swapaxes(linv.conj(), -1, -2)
    out = []
    for raw in raws:
        m = linv @ raw @ linv_h
        out.append(0.5 * (m + np.swapaxes(m.conj(), -1, -2)))
    return out


def _validate(states: Sequence[PureState], observables: Sequence[PauliObservable], group: str) -> int:
    if not states:
        raise ValueError("need at least one state")
    d = states[0].d
    for s in states:
        if s.d != d:
            raise ValueError("states have different dimensions")
    for o in observables:
        if o.d != d:
            raise ValueError(f"observable acts on d={o.d}, states live in d={d}")
    if group == "orthogonal":
        if not all(s.real_flag for s in states):
            raise RealStatesRequiredError("orthogonal-group sampling requires real states")
        if not all(o.real_flag for o in observables):
            raise RealStatesRequiredError("orthogonal-group sampling excludes Y (observable must be real)")
    return d


def sample_outputs(
    states: Sequence[PureState],
    obs: PauliObservable | Sequence[PauliObservable],
    group: str,
    n_samples: int,
    seed=0,
    threads: int | None = None,
) -> SampleBatch:
    """Monte Carlo draws of ``C_j(rho_i) = Tr[V rho_i V^dag O_j]``.

    One Haar isometry per sample is shared by all states, so correlations are
    preserved. With several observables, columns are ordered observable-major.
    """
    group = check_group(group)
    observables = [obs] if isinstance(obs, PauliObservable) else list(obs)
    d = _validate(states, observables, group)
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    vecs = np.array([s.amplitudes for s in states])
    if group == "orthogonal":
        vecs = vecs.real
    Q, coords = orthonormalize(vecs)
    r = Q.shape[1]

    def chunk(b: int, rng: np.random.Generator) -> np.ndarray:
        cols = []
        for M in _haar_compressed(rng, b, d, r, group == "orthogonal", observables):
            cols.append(np.einsum("ir,brs,is->bi", coords.conj(), M, coords, optimize=True).real)
        return np.clip(np.concatenate(cols, axis=1), -1.0, 1.0)

    parts = _run_chunks(chunk, _chunk_plan(n_samples, d * r), seed, threads)
    values = np.concatenate(parts, axis=0)
    labels = [s.label or f"s{i}" for i, s in enumerate(states)]
    if len(observables) > 1:
        labels = [f"{lab}@{o.spec}" for o in observables for lab in labels]
    return SampleBatch(values, group, d, seed, labels, ",".join(o.spec for o in observables), {"span_rank": r})


def parameter_shift_gradient_samples(
    state: PureState,
    obs: PauliObservable,
    group: str = "unitary",
    n_samples: int = 10_000,
    seed=0,
    generator: PauliObservable | None = None,
    threads: int | None = None,
) -> SampleBatch:
    """Samples of ``dC/dtheta = C(+) - C(-)`` for a gate ``exp(-i theta H)``.

    The circuit is ``V_A exp(-i theta H) V_B`` with independent Haar ``V_A``,
    ``V_B``; by invariance ``theta`` is absorbed into ``V_B`` and the two
    shifted outputs are ``<psi_pm| V_A^dag O V_A |psi_pm>`` with
    ``psi_pm = exp(-+ i pi/4 H) V_B psi``. Columns: ``dC``, ``C+``, ``C-``.
    ``H`` defaults to X on the first qubit.
    """
    if check_group(group) != "unitary":
        raise UnsupportedError("parameter-shift gradients are supported for the unitary group only")
    d = _validate([state], [obs], "unitary")
    H = generator if generator is not None else PauliObservable("X" + "I" * (obs.n - 1))
    c = math.cos(math.pi / 4)

    def chunk(b: int, rng: np.random.Generator) -> np.ndarray:
        psi = haar_isometry(d, 1, rng, "unitary", batch=b)  # (b, d, 1)
        Hpsi = H.apply(psi)
        plus = c * psi - 1j * c * Hpsi
        minus = c * psi + 1j * c * Hpsi
        # orthonormal basis of span{plus, minus} per sample
        ov = np.einsum("bx,bx->b", plus[..., 0].conj(), minus[..., 0])
        w = minus[..., 0] - ov[:, None] * plus[..., 0]
        wn = np.linalg.norm(w, axis=1)
        coords_p = np.zeros((b, 2), dtype=complex)
        coords_p[:, 0] = 1
        coords_m = np.stack([ov, wn.astype(complex)], axis=1)
        (M,) = _haar_compressed(rng, b, d, 2, False, [obs])
        cp = np.einsum("br,brs,bs->b", coords_p.conj(), M, coords_p).real
        cm = np.einsum("br,brs,bs->b", coords_m.conj(), M, coords_m).real
        cp, cm = np.clip(cp, -1, 1), np.clip(cm, -1, 1)
        return np.stack([cp - cm, cp, cm], axis=1)

    parts = _run_chunks(chunk, _chunk_plan(n_samples, 3 * d), seed, threads)
    return SampleBatch(
        np.concatenate(parts, axis=0), "unitary", d, seed, ["dC", "C+", "C-"], obs.spec, {"generator": H.spec}
    )
