"""Linear-elastic plane truss with 23 bars.

Geometry (Warren layout, span 24 m, six bays of 4 m, height 2 m):

* bottom chord nodes 1..7 at x = 0, 4, ..., 24 (y = 0);
* top chord nodes 8..13 at x = 2, 6, ..., 22 (y = 2);
* 6 bottom and 5 top chord bars (group 1: E1, A1) and 12 diagonals
  (group 2: E2, A2);
* loads P1..P6 act downward on nodes 8..13;
* pin at node 1, roller (vertical support) at node 7.

The quantity of interest is the downward deflection of node 4, the bottom
chord node at mid-span.  Inputs are ordered (E1, E2, A1, A2, P1, ..., P6).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import yaml

from ..errors import ArgumentError, MechanismError

NAMES = ("E1", "E2", "A1", "A2", "P1", "P2", "P3", "P4", "P5", "P6")


@dataclass(frozen=True)
class TrussSpec:
    nodes: np.ndarray        # (13, 2) coordinates in m
    members: np.ndarray      # (23, 2) 0-based node pairs
    groups: np.ndarray       # (23,) 1 = horizontal chord, 2 = diagonal
    load_nodes: tuple        # nodes carrying P1..P6
    fixed_dofs: tuple        # constrained dofs (2 * node + {0: x, 1: y})
    monitored_node: int

    @property
    def n_dofs(self) -> int:
        return 2 * self.nodes.shape[0]

    @property
    def free_dofs(self) -> np.ndarray:
        return np.setdiff1d(np.arange(self.n_dofs), self.fixed_dofs)

    def lengths(self) -> np.ndarray:
        d = self.nodes[self.members[:, 1]] - self.nodes[self.members[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def group_stiffness(self, group: int) -> np.ndarray:
        """Global stiffness of one bar group with unit E*A."""
        K = np.zeros((self.n_dofs, self.n_dofs))
        L = self.lengths()
        for (a, b), g, length in zip(self.members, self.groups, L):
            if g != group:
                continue
            c, s = (self.nodes[b] - self.nodes[a]) / length
            t = np.array([-c, -s, c, s])
            dofs = [2 * a, 2 * a + 1, 2 * b, 2 * b + 1]
            K[np.ix_(dofs, dofs)] += np.outer(t, t) / length
        return K

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": i + 1, "x": float(x), "y": float(y)} for i, (x, y) in enumerate(self.nodes)],
            "members": [
                {"id": k + 1, "start": int(a) + 1, "end": int(b) + 1, "group": int(g)}
                for k, ((a, b), g) in enumerate(zip(self.members, self.groups))
            ],
            "groups": {1: "horizontal chords (E1, A1)", 2: "diagonals (E2, A2)"},
            "loads": [{"name": f"P{k + 1}", "node": int(n) + 1, "direction": "-y"} for k, n in enumerate(self.load_nodes)],
            "supports": [{"node": 1, "type": "pin"}, {"node": 7, "type": "roller", "restrains": "y"}],
            "monitored": {"node": int(self.monitored_node) + 1, "quantity": "downward vertical displacement"},
        }

    def dump(self, path) -> None:
        with open(path, "w") as fh:
            yaml.safe_dump(self.to_dict(), fh, sort_keys=False)


def default_truss() -> TrussSpec:
    bottom = [(4.0 * i, 0.0) for i in range(7)]
    top = [(4.0 * k + 2.0, 2.0) for k in range(6)]
    nodes = np.array(bottom + top)
    members, groups = [], []
    for i in range(6):
        members.append((i, i + 1))
        groups.append(1)
    for k in range(5):
        members.append((7 + k, 8 + k))
        groups.append(1)
    for k in range(6):
        members += [(k, 7 + k), (7 + k, k + 1)]
        groups += [2, 2]
    return TrussSpec(
        nodes,
        np.array(members),
        np.array(groups),
        load_nodes=tuple(range(7, 13)),
        fixed_dofs=(0, 1, 13),
        monitored_node=3,
    )


_SPEC = default_truss()
_K1 = _SPEC.group_stiffness(1)
_K2 = _SPEC.group_stiffness(2)
_FREE = _SPEC.free_dofs
_LOAD_DOFS = np.array([2 * n + 1 for n in _SPEC.load_nodes])
_MONITOR = 2 * _SPEC.monitored_node + 1


def _split(x):
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if X.shape[1] != 10:
        raise ArgumentError(f"truss expects 10 inputs, got {X.shape[1]}")
    if np.any(~np.isfinite(X)):
        raise ArgumentError("truss inputs must be finite")
    if np.any(X[:, :4] <= 0):
        raise ArgumentError("moduli and cross-sections must be positive")
    return X


def _load_vector(X):
    F = np.zeros((X.shape[0], _SPEC.n_dofs))
    F[:, _LOAD_DOFS] = -X[:, 4:10]
    return F


def _solve(X):
    k1 = (X[:, 0] * X[:, 2])[:, None, None]
    k2 = (X[:, 1] * X[:, 3])[:, None, None]
    Kf = (k1 * _K1[np.ix_(_FREE, _FREE)] + k2 * _K2[np.ix_(_FREE, _FREE)])
    try:
        L = np.linalg.cholesky(Kf)
    except np.linalg.LinAlgError as exc:
        raise MechanismError("truss stiffness matrix is singular (mechanism)") from exc
    Ff = _load_vector(X)[:, _FREE, None]
    y = np.linalg.solve(L, Ff)
    uf = np.linalg.solve(np.swapaxes(L, 1, 2), y)[:, :, 0]
    U = np.zeros((X.shape[0], _SPEC.n_dofs))
    U[:, _FREE] = uf
    return U


def _spectral_basis():
    # K1 v = lam (K1 + K2) v with V^T (K1 + K2) V = I, so that
    # E1 A1 K1 + E2 A2 K2 = (K1 + K2) V diag(a lam + b (1 - lam)) V^T (K1 + K2)
    K1 = _K1[np.ix_(_FREE, _FREE)]
    K2 = _K2[np.ix_(_FREE, _FREE)]
    lam, V = scipy.linalg.eigh(K1, K1 + K2)
    loads = np.searchsorted(_FREE, _LOAD_DOFS)
    monitor = int(np.searchsorted(_FREE, _MONITOR))
    return lam, V[monitor], V[loads]


_LAM, _V_MONITOR, _V_LOADS = _spectral_basis()


def _spectral_deflection(X):
    a = X[:, 0] * X[:, 2]
    b = X[:, 1] * X[:, 3]
    d = a[:, None] * _LAM[None, :] + b[:, None] * (1.0 - _LAM[None, :])
    # load vector is -P on the load dofs, deflection is -u4
    return ((X[:, 4:10] @ _V_LOADS) / d) @ _V_MONITOR


def truss_deflection(x, method: str = "cholesky", block: int = 100_000):
    """Downward mid-span deflection u4 (m) for one point or an (n, 10) array.

    ``method="cholesky"`` factorizes the reduced stiffness matrix of every
    sample.  ``method="spectral"`` uses the fact that the stiffness is
    E1 A1 K1 + E2 A2 K2: one generalized eigendecomposition of the pencil
    (K1, K1 + K2) turns each solve into a diagonal scaling.  Both are exact
    up to rounding; the spectral route is much faster for large samples.
    """
    X = _split(x)
    out = np.empty(X.shape[0])
    for s in range(0, X.shape[0], block):
        Xb = X[s: s + block]
        if method == "cholesky":
            out[s: s + block] = -_solve(Xb)[:, _MONITOR]
        elif method == "spectral":
            out[s: s + block] = _spectral_deflection(Xb)
        else:
            raise ArgumentError(f"unknown truss solver {method!r}")
    return float(out[0]) if np.ndim(x) == 1 else out


def truss_solve(x):
    """Full nodal displacements (26,) and support reactions (26,), zero off the supports."""
    X = _split(np.asarray(x, dtype=float).ravel())
    U = _solve(X)[0]
    K = X[0, 0] * X[0, 2] * _K1 + X[0, 1] * X[0, 3] * _K2
    R = K @ U - _load_vector(X)[0]
    return U, R
