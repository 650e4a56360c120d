"""Finite quotient of a grid by a diagonal floor, vectorized over numpy.

Elements of the quotient are mixed-radix digit vectors: digit j ranges
over [0, p^(W_j - u_j)) and encodes the true coordinate digit * p^u_j.
All polynomial evaluation happens on p^u-scaled integers with a common
denominator per coordinate and exact-division asserts, so the arithmetic
stays exact; int64 is only a container.

This is the substrate of the brute-force subgroup-counting oracle: the
search pipeline never touches it, which is what makes the oracle an
independent check.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm

import numpy as np

from . import polynomials as P
from .goodbasis import LatticeError
from .malcev import GroupSpec
from .padic import p_power


class GridQuotient:
    def __init__(self, G: GroupSpec, p: int, u, W, max_size: int = 65536):
        from .floors import CapExceeded, grid_closed, normalizes

        self.G, self.p = G, p
        self.u = tuple(int(x) for x in u)
        self.W = tuple(int(x) for x in W)
        d = G.d
        if not grid_closed(G, p, self.u) or not grid_closed(G, p, self.W):
            raise LatticeError("quotient grids must be certified subgroups")
        if not normalizes(G, p, self.u, self.W):
            raise LatticeError("floor grid is not normal in the ambient grid")
        self.radix = tuple(p ** (W[j] - u[j]) for j in range(d))
        n = 1
        for r in self.radix:
            n *= r
        if n > max_size:
            raise CapExceeded(f"quotient of size {n} exceeds cap {max_size}")
        self.size = n
        self.strides = []
        acc = 1
        for r in self.radix:
            self.strides.append(acc)
            acc *= r
        idx = np.arange(n, dtype=np.int64)
        self.E = np.empty((n, d), dtype=np.int64)
        for j in range(d):
            self.E[:, j] = (idx // self.strides[j]) % self.radix[j]

        self._mu = [self._compile(G.mu[j], j) for j in range(d)]
        self._lam = [self._compile(G.lam[j], j, with_k=True) for j in range(d)]
        # power law of the pure-diagonal floor generator f_i, coordinate j:
        # only terms whose variables are all a_{i+1} survive.
        self._floor_lam = []
        for i in range(d):
            per_coord = []
            for j in range(d):
                terms = []
                for coeff, mono in G.lam[j]:
                    mk, ok, scale = 0, True, Fraction(coeff)
                    for var, e in mono:
                        if var == "k":
                            mk = e
                        elif P.coord_index(var) - 1 == i:
                            scale *= p_power(p, self.W[i]) ** e
                        else:
                            ok = False
                    if ok:
                        terms.append((scale * p_power(p, -self.u[j]), mk))
                den = lcm(*(t[0].denominator for t in terms)) if terms else 1
                per_coord.append(
                    ([(int(c * den), mk) for c, mk in terms], den)
                )
            self._floor_lam.append(per_coord)
        self._inv_cache: np.ndarray | None = None

    def _compile(self, poly: P.Poly, j: int, with_k: bool = False):
        """Scale a coordinate-j law to p^u digits: returns (terms, den) with
        integer term coefficients over a common denominator."""
        raw = []
        for coeff, mono in poly:
            scale = Fraction(coeff)
            spec = []
            mk = 0
            for var, e in mono:
                if var == "k":
                    mk = e
                    continue
                idx = P.coord_index(var) - 1
                side = 0 if var[0] == "a" else 1
                scale *= p_power(self.p, self.u[idx]) ** e
                spec.append((side, idx, e))
            raw.append((scale * p_power(self.p, -self.u[j]), tuple(spec), mk))
        den = lcm(*(t[0].denominator for t in raw)) if raw else 1
        terms = [(int(c * den), spec, mk) for c, spec, mk in raw]
        return terms, den

    # -- raw scaled arithmetic (inputs/outputs: (n, d) int64 digit arrays,
    #    not necessarily inside the digit box) --

    def _eval(self, compiled, a, b=None, k: int = 0):
        terms, den = compiled
        acc = np.zeros(a.shape[0], dtype=np.int64)
        for cnum, spec, mk in terms:
            t = np.full(a.shape[0], cnum, dtype=np.int64)
            if mk:
                t = t * (k**mk)
            for side, idx, e in spec:
                arr = a if side == 0 else b
                for _ in range(e):
                    t = t * arr[:, idx]
            acc = acc + t
        if den != 1:
            rem = acc % den
            if rem.any():
                raise LatticeError("inexact division in quotient arithmetic")
            acc = acc // den
        return acc

    def _raw_mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        out = np.empty_like(a)
        for j in range(self.G.d):
            out[:, j] = self._eval(self._mu[j], a, b)
        return out

    def _raw_pow(self, a: np.ndarray, k: int) -> np.ndarray:
        out = np.empty((a.shape[0], self.G.d), dtype=np.int64)
        for j in range(self.G.d):
            out[:, j] = self._eval(self._lam[j], a, None, k)
        return out

    def _floor_pow(self, i: int, t: np.ndarray) -> np.ndarray:
        """Digits of f_i^t for an int64 exponent array t."""
        out = np.zeros((t.shape[0], self.G.d), dtype=np.int64)
        for j in range(self.G.d):
            terms, den = self._floor_lam[i][j]
            acc = np.zeros(t.shape[0], dtype=np.int64)
            for cnum, mk in terms:
                acc = acc + cnum * t**mk
            if den != 1:
                if (acc % den).any():
                    raise LatticeError("inexact division in floor power")
                acc = acc // den
            out[:, j] = acc
        return out

    def reduce(self, x: np.ndarray) -> np.ndarray:
        """Canonical digits of the cosets represented by raw scaled rows.

        Peels from the top coordinate down, right-multiplying by floor
        generator powers; each step fixes one digit into its box without
        touching the higher ones.
        """
        x = x.copy()
        for j in range(self.G.d - 1, -1, -1):
            t = x[:, j] // self.radix[j]
            mask = t != 0
            if mask.any():
                w = self._floor_pow(j, -t[mask])
                x[mask] = self._raw_mul(x[mask], w)
        if (x < 0).any() or (x >= np.array(self.radix)).any():
            raise LatticeError("reduction left the digit box")
        return x

    # -- index-level API --

    def index_of(self, digits: np.ndarray) -> np.ndarray:
        return digits @ np.array(self.strides, dtype=np.int64)

    def mul_idx(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return self.index_of(self.reduce(self._raw_mul(self.E[a], self.E[b])))

    def pow_all(self, k: int) -> np.ndarray:
        """Index array of x^k for every x in the quotient."""
        return self.index_of(self.reduce(self._raw_pow(self.E, k)))

    def inv_all(self) -> np.ndarray:
        if self._inv_cache is None:
            self._inv_cache = self.pow_all(-1)
        return self._inv_cache

    def coords_of(self, i: int) -> tuple[Fraction, ...]:
        return tuple(
            Fraction(int(self.E[i, j])) * p_power(self.p, self.u[j])
            for j in range(self.G.d)
        )

    def index_of_coords(self, coords) -> int:
        row = np.empty((1, self.G.d), dtype=np.int64)
        for j, q in enumerate(coords):
            scaled = Fraction(q) * p_power(self.p, -self.u[j])
            if scaled.denominator != 1:
                raise LatticeError("coordinates do not lie in the ambient grid")
            row[0, j] = int(scaled)
        return int(self.index_of(self.reduce(row))[0])
