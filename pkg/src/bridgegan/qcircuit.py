"""Statevector simulator for the generator's RY / CNOT-ring circuit family.

Qubit ``i`` is bit ``i`` of the basis index (little-endian).  Every gate in the
family is real, so amplitudes are stored as real ``float64`` arrays of shape
``(batch, 2**M)``.

Circuit: angle-encode ``z`` as ``RY(pi * z_i)`` on ``|0...0>``, then for each
layer apply ``RY(theta[l, i])`` on every qubit followed by the CNOT ring
``i -> (i + 1) % M`` for ``i = 0 .. M-1``; read out ``<Z_i>``.

Because the encoding and the first rotation layer act on the same product
state, they are fused into one product-state construction.  Rotation layers on
more than a few qubits are applied as Kronecker-factor matmuls over groups of up
to 8 qubits, and the ring as a single precomputed index permutation.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Protocol

import numpy as np

MAX_QUBITS = 20
_GROUP = 8


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class CircuitSpec:
    qubits: int
    layers: int

    def __post_init__(self):
        if not 1 <= self.qubits <= MAX_QUBITS:
            raise ValueError(f"qubits must be in [1, {MAX_QUBITS}], got {self.qubits}")
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")

    @property
    def param_count(self) -> int:
        return self.qubits * self.layers


def count_quantum_params(spec: CircuitSpec) -> int:
    return spec.qubits * spec.layers


def _ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


@lru_cache(maxsize=None)
def ring_gather(m: int) -> np.ndarray:
    """Index array ``g`` with ``ring(psi) == psi[..., g]``."""
    idx = np.arange(2 ** m)
    if m == 1:
        return idx
    pairs = [(0, 1)] if m == 2 else [(i, (i + 1) % m) for i in range(m)]
    fwd = idx.copy()
    for c, t in pairs:
        fwd = fwd ^ (((fwd >> c) & 1) << t)
    # basis state b maps to fwd[b]; new[fwd[b]] = old[b]
    inv = np.empty_like(fwd)
    inv[fwd] = idx
    return inv


@lru_cache(maxsize=None)
def ring_scatter(m: int) -> np.ndarray:
    """Inverse of :func:`ring_gather` (the ring is a real permutation, so this is its transpose)."""
    g = ring_gather(m)
    inv = np.empty_like(g)
    inv[g] = np.arange(len(g))
    return inv


def _groups(m: int) -> list[tuple[int, int]]:
    """Split qubits ``0..m-1`` into contiguous [start, stop) groups of at most 8."""
    n_groups = -(-m // _GROUP)
    size = -(-m // n_groups)
    return [(s, min(s + size, m)) for s in range(0, m, size)]


def _kron_ry(thetas: np.ndarray) -> np.ndarray:
    # highest qubit is the most significant kron factor
    k = np.ones((1, 1))
    for t in thetas[::-1]:
        k = np.kron(k, _ry(t))
    return k


def apply_ry_layer(states: np.ndarray, thetas: np.ndarray, transpose: bool = False) -> np.ndarray:
    """Apply ``RY(thetas[i])`` to every qubit of a ``(B, 2**M)`` batch."""
    b, dim = states.shape
    m = len(thetas)
    out = states
    for s, e in _groups(m):
        k = _kron_ry(thetas[s:e])
        if transpose:
            k = k.T
        if s == 0:
            out = (out.reshape(-1, 2 ** e) @ k.T).reshape(b, dim)
        else:
            v = out.reshape(b * 2 ** (m - e), 2 ** (e - s), 2 ** s)
            out = np.matmul(k, v).reshape(b, dim)
    return out


def _pair_products(lam: np.ndarray, phi: np.ndarray, start: int, stop: int) -> np.ndarray:
    """``C[i, j] = sum lam[.., i, ..] * phi[.., j, ..]`` over everything but qubits [start, stop)."""
    g = stop - start
    if start == 0:
        lv = lam.reshape(-1, 2 ** g)
        pv = phi.reshape(-1, 2 ** g)
        return lv.T @ pv
    # fold the outer index into the contraction: one GEMM instead of a batch
    lv = lam.reshape(-1, 2 ** g, 2 ** start).transpose(1, 0, 2).reshape(2 ** g, -1)
    pv = phi.reshape(-1, 2 ** g, 2 ** start).transpose(1, 0, 2).reshape(2 ** g, -1)
    return lv @ pv.T


def product_state(angles: np.ndarray) -> np.ndarray:
    """``(B, 2**M)`` amplitudes of ``prod_i RY(angles[:, i])|0>``."""
    angles = np.atleast_2d(angles)
    b, m = angles.shape
    c, s = np.cos(angles / 2), np.sin(angles / 2)
    out = np.ones((b, 1))
    for i in range(m - 1, -1, -1):
        q = np.stack([c[:, i], s[:, i]], axis=1)
        out = (out[:, :, None] * q[:, None, :]).reshape(b, -1)
    return out


@lru_cache(maxsize=None)
def z_signs(m: int) -> np.ndarray:
    """``(2**M, M)`` matrix of +1 / -1 eigenvalues of ``Z_i`` per basis state."""
    idx = np.arange(2 ** m)
    bits = (idx[:, None] >> np.arange(m)[None, :]) & 1
    return 1.0 - 2.0 * bits


def _check(z: np.ndarray, spec: CircuitSpec, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = np.atleast_2d(np.asarray(z, dtype=float))
    params = np.asarray(params, dtype=float)
    if z.shape[1] != spec.qubits:
        raise DimensionMismatch(f"z has {z.shape[1]} entries, circuit has {spec.qubits} qubits")
    if params.size != spec.param_count:
        raise DimensionMismatch(f"expected {spec.param_count} angles, got {params.size}")
    return z, params.reshape(spec.layers, spec.qubits)


# --------------------------------------------------------------------------
# single-state API


def encode_input(z) -> np.ndarray:
    """Angle-encode a noise vector: ``prod_i RY(pi * z_i)|0>``."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1:
        raise DimensionMismatch("encode_input takes one noise vector")
    return product_state(np.pi * z[None, :])[0]


def apply_variational(state, spec: CircuitSpec, params) -> np.ndarray:
    state = np.asarray(state, dtype=float)
    if state.shape != (2 ** spec.qubits,):
        raise DimensionMismatch(f"state length {state.shape} does not match {spec.qubits} qubits")
    params = np.asarray(params, dtype=float)
    if params.size != spec.param_count:
        raise DimensionMismatch(f"expected {spec.param_count} angles, got {params.size}")
    theta = params.reshape(spec.layers, spec.qubits)
    gather = ring_gather(spec.qubits)
    out = state[None, :]
    for layer in theta:
        out = apply_ry_layer(out, layer)[:, gather]
    return out[0]


def expectations_z(state) -> np.ndarray:
    state = np.atleast_2d(np.asarray(state, dtype=float))
    m = int(np.log2(state.shape[1]))
    out = (state ** 2) @ z_signs(m)
    return out[0] if out.shape[0] == 1 else out


def forward(z, spec: CircuitSpec, params) -> np.ndarray:
    return forward_batch(np.atleast_2d(z), spec, params)[0]


# --------------------------------------------------------------------------
# batched forward + gradients


def forward_batch(z: np.ndarray, spec: CircuitSpec, params: np.ndarray,
                  keep: bool = False):
    """Latents ``(B, M)`` for a batch of noise rows.

    With ``keep=True`` also returns the per-layer states needed by
    :func:`adjoint_grad`.
    """
    z, theta = _check(z, spec, params)
    gather = ring_gather(spec.qubits)
    phi = product_state(np.pi * z + theta[0][None, :])
    cache = [phi]
    state = phi[:, gather]
    for layer in theta[1:]:
        phi = apply_ry_layer(state, layer)
        cache.append(phi)
        state = phi[:, gather]
    latent = (state ** 2) @ z_signs(spec.qubits)
    if keep:
        return latent, (state, cache, theta)
    return latent


def adjoint_grad(spec: CircuitSpec, cache, upstream: np.ndarray) -> np.ndarray:
    """Gradient of ``sum(upstream * latent)`` w.r.t. all angles, layer-major.

    One backward sweep: the adjoint state is carried back through the ring
    and rotation layers, and each angle's derivative is read off as
    ``<lambda| RY_q(pi) |phi>`` with ``phi`` the state right after its layer.
    """
    state, phis, theta = cache
    upstream = np.atleast_2d(np.asarray(upstream, dtype=float))
    m = spec.qubits
    lam = state * (upstream @ z_signs(m).T)
    scatter = ring_scatter(m)
    grads = np.zeros_like(theta)
    for layer in range(spec.layers - 1, -1, -1):
        lam = lam[:, scatter]
        phi = phis[layer]
        for s, e in _groups(m):
            c = _pair_products(lam, phi, s, e)
            idx = np.arange(2 ** (e - s))
            for k in range(e - s):
                hi = idx[(idx >> k) & 1 == 1]
                lo = hi ^ (1 << k)
                grads[layer, s + k] = c[hi, lo].sum() - c[lo, hi].sum()
        if layer:
            lam = apply_ry_layer(lam, theta[layer], transpose=True)
    return grads.reshape(-1)


def grad_params(z, spec: CircuitSpec, params, upstream, method: str = "shift") -> np.ndarray:
    """Vector-Jacobian product of the latent w.r.t. the circuit angles.

    ``method="shift"`` evaluates the parameter-shift rule
    ``d<Z_i>/dtheta_k = (<Z_i>(theta_k + pi/2) - <Z_i>(theta_k - pi/2)) / 2``;
    ``method="adjoint"`` uses the single backward sweep.  ``z`` and ``upstream``
    may be single vectors or ``(B, M)`` batches (gradients are summed).
    """
    z, _ = _check(z, spec, params)
    upstream = np.atleast_2d(np.asarray(upstream, dtype=float))
    if upstream.shape != z.shape:
        raise DimensionMismatch(f"upstream shape {upstream.shape} != {z.shape}")
    params = np.asarray(params, dtype=float).reshape(-1)
    if method == "adjoint":
        _, cache = forward_batch(z, spec, params, keep=True)
        return adjoint_grad(spec, cache, upstream)
    if method != "shift":
        raise ValueError(f"unknown gradient method {method!r}")
    grads = np.zeros(spec.param_count)
    shift = np.pi / 2
    for k in range(spec.param_count):
        plus = params.copy()
        plus[k] += shift
        minus = params.copy()
        minus[k] -= shift
        diff = forward_batch(z, spec, plus) - forward_batch(z, spec, minus)
        grads[k] = 0.5 * float(np.sum(diff * upstream))
    return grads


# --------------------------------------------------------------------------
# backends


class QuantumBackend(Protocol):
    """What the generator needs from a quantum device."""

    def forward(self, z: np.ndarray, spec: CircuitSpec, params: np.ndarray) -> np.ndarray: ...

    def grad_params(self, z: np.ndarray, spec: CircuitSpec, params: np.ndarray,
                    upstream: np.ndarray) -> np.ndarray: ...


class StatevectorBackend:
    """Exact simulator backend.

    ``gradient`` selects the training-time method; both are exact.  The last
    forward's states are cached so a following ``grad_params`` on the same
    inputs skips recomputation.
    """

    def __init__(self, gradient: str = "adjoint"):
        if gradient not in ("adjoint", "shift"):
            raise ValueError(f"unknown gradient method {gradient!r}")
        self.gradient = gradient
        self._last = None

    def forward(self, z, spec, params):
        latent, cache = forward_batch(z, spec, params, keep=self.gradient == "adjoint")
        self._last = (np.array(z, copy=True), np.array(params, copy=True), cache)
        return latent

    def grad_params(self, z, spec, params, upstream):
        if self.gradient == "shift":
            return grad_params(z, spec, params, upstream, method="shift")
        last = self._last
        if last is not None and np.array_equal(last[0], z) and np.array_equal(last[1], params):
            cache = last[2]
        else:
            _, cache = forward_batch(z, spec, params, keep=True)
        return adjoint_grad(spec, cache, upstream)


# --------------------------------------------------------------------------
# dense reference


def dense_unitary(spec: CircuitSpec, params) -> np.ndarray:
    """Full ``2**M x 2**M`` matrix of the variational block, built gate by gate."""
    m = spec.qubits
    theta = np.asarray(params, dtype=float).reshape(spec.layers, m)
    dim = 2 ** m
    eye2 = np.eye(2)

    def one_qubit(g, q):
        out = np.ones((1, 1))
        for k in range(m - 1, -1, -1):
            out = np.kron(out, g if k == q else eye2)
        return out

    def cnot(c, t):
        u = np.zeros((dim, dim))
        for b in range(dim):
            u[b ^ (((b >> c) & 1) << t), b] = 1.0
        return u

    pairs = [] if m == 1 else [(0, 1)] if m == 2 else [(i, (i + 1) % m) for i in range(m)]
    u = np.eye(dim)
    for layer in theta:
        for q in range(m):
            u = one_qubit(_ry(layer[q]), q) @ u
        for c, t in pairs:
            u = cnot(c, t) @ u
    return u
