import numpy as np
import pytest

from srcd.connection import compute_connection
from srcd.invariants import compute_constants
from srcd.liealg import LieSRStructure, adapted_orthonormal_frame, build_example

CATALOG = [
    ("heisenberg", {}),
    ("free-step2", {"n": 2}),
    ("free-step2", {"n": 3}),
    ("free-step2", {"n": 4}),
    ("su2-double-v1", {"rho": 1.0}),
    ("su2-double-v2", {"rho": 1.0}),
    ("su2-hopf", {"rho": 1.0}),
    ("sl2c", {}),
]

CATALOG_IDS = [f"{name}{tuple(p.values()) if p else ''}" for name, p in CATALOG]


@pytest.fixture(scope="session", params=CATALOG, ids=CATALOG_IDS)
def catalog_structure(request):
    name, params = request.param
    return build_example(name, dict(params))


@pytest.fixture(scope="session", params=CATALOG, ids=CATALOG_IDS)
def catalog_analysis(request):
    """(structure, orthonormal structure, connection, constants) per example."""
    name, params = request.param
    s = build_example(name, dict(params))
    son = adapted_orthonormal_frame(s)
    conn = compute_connection(son)
    k = compute_constants(son, conn)
    return s, son, conn, k


def analysis_for(name, params=None):
    s = build_example(name, dict(params or {}))
    son = adapted_orthonormal_frame(s)
    conn = compute_connection(son)
    return s, son, conn, compute_constants(son, conn)


def rotate_frame(son: LieSRStructure, q_h: np.ndarray, q_v: np.ndarray) -> LieSRStructure:
    """Conjugate an orthonormal-frame structure by a block orthogonal matrix."""
    d = son.dim
    p = np.zeros((d, d))
    p[:son.n, :son.n] = q_h
    p[son.n:, son.n:] = q_v
    c_new = np.einsum('ia,jb,ijk,ck->abc', p, p, son.c, np.linalg.inv(p), optimize=True)
    return LieSRStructure(name=son.name + "-rot", n=son.n, nu=son.nu, c=c_new,
                          gram_h=np.eye(son.n), gram_v=np.eye(son.nu))


def random_orthogonal(rng, size):
    if size == 0:
        return np.zeros((0, 0))
    q, r = np.linalg.qr(rng.standard_normal((size, size)))
    return q * np.sign(np.diag(r))
