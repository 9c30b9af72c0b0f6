"""Seeded samplers and reference constructions shared by the tests."""

import math

import numpy as np

from quanton.qstate import DensityMatrix, ModeSpace, PureState


def rng(seed=0):
    return np.random.default_rng(seed)


def ginibre(gen, rows, cols=None):
    cols = rows if cols is None else cols
    return gen.standard_normal((rows, cols)) + 1j * gen.standard_normal((rows, cols))


def random_density(gen, d):
    g = ginibre(gen, d)
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_vector(gen, d):
    v = gen.standard_normal(d) + 1j * gen.standard_normal(d)
    return v / np.linalg.norm(v)


def random_unitary(gen, d):
    q, r = np.linalg.qr(ginibre(gen, d))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def space(*dims, labels="abcdefgh"):
    return ModeSpace(tuple(zip(labels, dims)))


def random_pure(gen, *dims):
    sp = space(*dims)
    return PureState(sp, random_vector(gen, sp.dim))


def random_mixed(gen, d):
    return DensityMatrix(space(d), random_density(gen, d))


def ket(space_, amplitudes):
    return PureState(space_, np.asarray(amplitudes, dtype=complex))


FUZZ_ALPHABET = np.frombuffer(b"modeinitbspqwhlck path pol:=|><,#\n0123456789.-+e/sqrt2T=phi=arm=", np.uint8)


def fuzz_inputs(count, seeds, seed=0):
    """Random bytes, random token soup, and small mutations of the seed sources, in rotation."""
    g = rng(seed)
    for i in range(count):
        kind = i % 3
        if kind == 0:
            yield bytes(g.integers(0, 256, int(g.integers(0, 80)), dtype=np.uint8))
        elif kind == 1:
            yield bytes(g.choice(FUZZ_ALPHABET, int(g.integers(0, 120))))
        else:
            data = bytearray(seeds[int(g.integers(len(seeds)))])
            for _ in range(int(g.integers(1, 4))):
                pos = int(g.integers(0, len(data)))
                op = int(g.integers(3))
                if op == 0:
                    data[pos] = int(g.choice(FUZZ_ALPHABET))
                elif op == 1:
                    del data[pos]
                else:
                    data.insert(pos, int(g.integers(0, 256)))
            yield bytes(data)


def reduced_first(amplitudes, da):
    """Reduced density matrix of the first factor, by explicit index contraction."""
    psi = np.asarray(amplitudes).reshape(da, -1)
    return np.einsum("ik,jk->ij", psi, psi.conj())


def l1_parts(rho):
    """(C, P) of a density matrix straight from the entry-wise definitions."""
    d = rho.shape[0]
    c = sum(abs(rho[j, k]) for j in range(d) for k in range(d) if j != k)
    p = d - 1 - sum(math.sqrt(rho[j, j].real * rho[k, k].real) for j in range(d) for k in range(d) if j != k)
    return c, p
