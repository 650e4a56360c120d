"""Local and global commensurability growth series.

Local data is a finite table of coefficients c_{p^k}; regularity shows up
as an exact linear recurrence with a validation window, equivalently as a
rational generating function.  Global coefficients are assembled
multiplicatively from the local tables (the Euler-product structure), and
the rank-one abelian case has the closed form c_n = 2^omega(n) to check
everything against.

All arithmetic is exact (Fractions); there is no fitting in the numerical
sense, only solving and verifying linear systems.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction

from .padic import factorize


@dataclass(frozen=True)
class LocalSeries:
    gid: str
    prime: int
    coeffs: tuple[int, ...]  # coeffs[k] = c_{p^k}

    @property
    def kmax(self) -> int:
        return len(self.coeffs) - 1

    def to_json(self) -> dict:
        return {"group": self.gid, "prime": self.prime, "coeffs": list(self.coeffs)}

    @classmethod
    def from_json(cls, doc: dict) -> "LocalSeries":
        return cls(doc["group"], doc["prime"], tuple(doc["coeffs"]))


@dataclass(frozen=True)
class RecurrenceFit:
    order: int  # L
    start: int  # recurrence holds for all n >= start
    q: tuple[Fraction, ...]  # c_n = sum_j q_j c_{n-j}
    window: int  # number of verified terms beyond those needed to solve

    @property
    def integral(self) -> bool:
        return all(x.denominator == 1 for x in self.q)

    def to_json(self) -> dict:
        return {
            "order": self.order,
            "start": self.start,
            "q": [str(x) for x in self.q],
            "window": self.window,
        }


def fit_recurrence(coeffs, max_order: int | None = None) -> RecurrenceFit | None:
    """Smallest exact linear recurrence satisfied by the coefficient table.

    Searches order L ascending, then start ascending; a candidate is
    accepted only if the available terms give at least L verification
    equations beyond the L used to determine the coefficients, and every
    equation holds exactly.  Returns None when no recurrence of any
    admissible order fits, which is itself a meaningful (reportable)
    outcome.
    """
    c = [Fraction(x) for x in coeffs]
    n_terms = len(c)
    if max_order is None:
        max_order = (n_terms - 1) // 2
    for L in range(1, max_order + 1):
        for start in range(L, n_terms):
            eqs = list(range(start, n_terms))
            if len(eqs) < 2 * L:
                continue
            rows = [[c[n - j] for j in range(1, L + 1)] for n in eqs]
            rhs = [c[n] for n in eqs]
            q = _solve_consistent(rows, rhs)
            if q is None:
                continue
            return RecurrenceFit(L, start, tuple(q), len(eqs) - L)
    return None


def _solve_consistent(rows, rhs):
    """Exact solution of an overdetermined rational system, or None.

    Gaussian elimination over Fractions; free variables are set to zero;
    every equation must be satisfied exactly by the result.
    """
    m = [list(r) + [b] for r, b in zip(rows, rhs)]
    n_var = len(rows[0])
    piv_cols = []
    r = 0
    for col in range(n_var):
        piv = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv_ = 1 / m[r][col]
        m[r] = [x * inv_ for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        piv_cols.append(col)
        r += 1
    # rows below the pivot rows must be all-zero, else inconsistent
    for i in range(r, len(m)):
        if m[i][n_var] != 0:
            return None
    sol = [Fraction(0)] * n_var
    for i, col in enumerate(piv_cols):
        sol[col] = m[i][n_var]
    # free variables at zero: re-verify every original equation
    for row, b in zip(rows, rhs):
        if sum(x * s for x, s in zip(row, sol)) != b:
            return None
    return sol


# ---------------------------------------------------------------------------
# rational generating functions


def to_rational_function(coeffs, fit: RecurrenceFit):
    """(numerator, denominator) polynomials with N/D = sum c_k t^k.

    D(t) = 1 - sum q_j t^j; the product D * C telescopes to zero from
    degree `start` on, so N is just its low-degree truncation.  The
    re-expansion is verified exactly against every supplied coefficient.
    """
    c = [Fraction(x) for x in coeffs]
    D = [Fraction(1)] + [-x for x in fit.q]
    prod = _poly_mul(D, c)
    N = prod[: fit.start]
    while N and N[-1] == 0:
        N.pop()
    if expand_rational(N, D, len(c)) != c:
        raise ValueError("rational function does not reproduce the series")
    return N, D


def _poly_mul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def expand_rational(N, D, n_terms: int) -> list[Fraction]:
    """Power-series coefficients of N/D (requires D(0) != 0)."""
    if not D or D[0] == 0:
        raise ValueError("denominator must have nonzero constant term")
    out = []
    for n in range(n_terms):
        acc = N[n] if n < len(N) else Fraction(0)
        for j in range(1, min(n, len(D) - 1) + 1):
            acc -= D[j] * out[n - j]
        out.append(acc / D[0])
    return out


def poly_str(p, var: str = "t") -> str:
    if not p:
        return "0"
    parts = []
    for i, x in enumerate(p):
        if x == 0:
            continue
        if i == 0:
            parts.append(str(x))
        else:
            coef = "" if x == 1 else ("-" if x == -1 else f"{x}*")
            parts.append(f"{coef}{var}" + (f"^{i}" if i > 1 else ""))
    return " + ".join(parts).replace("+ -", "- ")


# ---------------------------------------------------------------------------
# global assembly


def global_coefficients(locals_: dict[int, LocalSeries], n_max: int) -> list[int]:
    """c_n for 1 <= n <= n_max from local tables, multiplicatively.

    Requires a local table for every prime power dividing some n; raises
    KeyError/IndexError-style errors as ValueError with context.
    """
    out = []
    for n in range(1, n_max + 1):
        c = 1
        for p, e in factorize(n):
            loc = locals_.get(p)
            if loc is None:
                raise ValueError(f"no local table for prime {p} (needed by n={n})")
            if e > loc.kmax:
                raise ValueError(
                    f"local table at p={p} stops at k={loc.kmax}, need k={e}"
                )
            c *= loc.coeffs[e]
        out.append(c)
    return out


def abelian_reference(n: int) -> int:
    """Closed form 2^omega(n) for the rank-one abelian group."""
    return 2 ** len(factorize(n)) if n > 1 else 1


def abelian_local(p: int, kmax: int) -> LocalSeries:
    """Local table of the rank-one abelian group: c_{p^k} = 2 for k >= 1."""
    return LocalSeries("Z1", p, (1,) + (2,) * kmax)


# ---------------------------------------------------------------------------
# serialization helpers


def coefficients_csv(rows: list[dict]) -> str:
    """CSV text for coefficient listings (one dict per row)."""
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()
