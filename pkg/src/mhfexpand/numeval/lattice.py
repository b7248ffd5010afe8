"""Truncated box summation of one MHF by index elimination.

The summand factorises into one table per distinct index form. Summing out
indices one at a time, the state keeps only the partial values of the forms
that still involve both summed and unsummed indices. For the chain-like forms
produced by the derivative engine this turns an ``O(N^r)`` sum into a few
``O(N^2)`` sweeps. Accumulation order is fixed, so float results are
reproducible bit for bit.
"""

from __future__ import annotations

import contextlib
import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import gmpy2
import numpy as np

from ..errors import DenominatorZero

__all__ = ["Backend", "EXACT", "LONGDOUBLE", "CLONGDOUBLE", "mpfr_backend", "FormTable", "box_sum", "elimination_order"]


def _fraction_to_longdouble(q: Fraction) -> np.longdouble:
    n, d = q.numerator, q.denominator
    if abs(n) < 2**63 and d < 2**63:
        return np.longdouble(n) / np.longdouble(d)
    x = gmpy2.mpfr(gmpy2.mpq(n, d), 64)
    if not gmpy2.is_finite(x) or x == 0:
        return np.longdouble(float(x))
    man, exp = x.as_mantissa_exp()
    man = int(man)
    sign = -1 if man < 0 else 1
    man = abs(man)
    hi = np.longdouble(man >> 32) * np.longdouble(2**32) + np.longdouble(man & 0xFFFFFFFF)
    return sign * np.ldexp(hi, int(exp))


@dataclass(frozen=True)
class Backend:
    """Element arithmetic used by the summation kernel."""

    name: str
    dtype: object
    from_rational: Callable[[Fraction], object]
    from_value: Callable[[object], object]
    finish: Callable[[object], object]
    exact: bool = False
    prec: int | None = None

    def context(self):
        """Context manager that fixes the working precision, if any."""
        if self.prec is None:
            return contextlib.nullcontext()
        return gmpy2.context(gmpy2.get_context(), precision=self.prec)

    def array(self, items: Sequence) -> np.ndarray:
        out = np.empty(len(items), dtype=self.dtype)
        for i, v in enumerate(items):
            out[i] = v
        return out


def _exact_value(v):
    if isinstance(v, (int, Fraction)):
        return gmpy2.mpq(v.numerator, v.denominator) if isinstance(v, Fraction) else gmpy2.mpq(v)
    raise TypeError(f"exact summation needs rational inputs, got {v!r}")


def _mpf_fraction(x) -> Fraction:
    """Exact rational value of a finite mpmath real."""
    sign, man, exp, _ = x._mpf_
    if not man and exp:
        raise ValueError(f"{x} is not finite")
    m = -int(man) if sign else int(man)
    return Fraction(m * 2**exp) if exp >= 0 else Fraction(m, 2**-exp)


def _ld_value(v):
    if isinstance(v, Fraction):
        return _fraction_to_longdouble(v)
    if isinstance(v, complex) or type(v).__name__ == "mpc":
        raise TypeError("complex value given to a real summation")
    if hasattr(v, "_mpf_"):
        return _fraction_to_longdouble(_mpf_fraction(v))
    return np.longdouble(v)


def _cld_value(v):
    if isinstance(v, Fraction):
        return np.clongdouble(_fraction_to_longdouble(v))
    if isinstance(v, complex) or hasattr(v, "imag"):
        return _cplx(v)
    return np.clongdouble(_ld_value(v))


def _cplx(v) -> np.clongdouble:
    out = np.zeros(1, dtype=np.clongdouble)
    out.real[0] = _real_ld(v.real)
    out.imag[0] = _real_ld(v.imag)
    return out[0]


def _real_ld(x) -> np.longdouble:
    if isinstance(x, (float, int, np.floating)):
        return np.longdouble(x)
    if isinstance(x, Fraction):
        return _fraction_to_longdouble(x)
    if hasattr(x, "_mpf_"):
        return _fraction_to_longdouble(_mpf_fraction(x))
    return np.longdouble(format(x, ".25e"))


EXACT = Backend(
    "exact",
    object,
    lambda q: gmpy2.mpq(q.numerator, q.denominator),
    _exact_value,
    lambda x: Fraction(int(gmpy2.numer(gmpy2.mpq(x))), int(gmpy2.denom(gmpy2.mpq(x)))),
    exact=True,
)
LONGDOUBLE = Backend("float", np.longdouble, _fraction_to_longdouble, _ld_value, lambda x: np.longdouble(x))
CLONGDOUBLE = Backend("complex", np.clongdouble, lambda q: np.clongdouble(_fraction_to_longdouble(q)), _cld_value, lambda x: np.clongdouble(x))


@lru_cache(maxsize=None)
def mpfr_backend(prec: int) -> Backend:
    """Real summation with ``prec``-bit binary floats (gmpy2/MPFR)."""
    def conv_q(q: Fraction):
        return gmpy2.mpfr(gmpy2.mpq(q.numerator, q.denominator), prec)

    def conv_v(v):
        if hasattr(v, "_mpf_"):
            v = _mpf_fraction(v)
        if isinstance(v, Fraction):
            return conv_q(v)
        if isinstance(v, complex) or type(v).__name__ == "mpc":
            raise TypeError("complex value given to a real summation")
        return gmpy2.mpfr(v, prec)

    return Backend(f"mpfr{prec}", object, conv_q, conv_v, lambda x: x, prec=prec)


@dataclass
class FormTable:
    """Values of ``prod (a)_v / prod (b)_v`` for ``v`` in ``[vmin, vmax]``."""

    form: tuple[int, ...]
    vmin: int
    values: np.ndarray
    poison: np.ndarray | None = None


def poch_ratio_table(nums: Sequence[Fraction], dens: Sequence[Fraction], vmin: int, vmax: int, backend: Backend) -> tuple[np.ndarray, np.ndarray | None]:
    """Tabulate ``prod (a)_v / prod (b)_v`` by two-sided recurrence from ``v = 0``.

    A zero numerator factor met before a zero denominator terminates the series
    (value stays zero); the reverse is recorded in the poison mask.
    """
    n = vmax - vmin + 1
    vals: list = [None] * n
    poison = np.zeros(n, dtype=bool)
    one = backend.from_rational(Fraction(1))
    zero = backend.from_rational(Fraction(0))
    vals[-vmin] = one
    # upward: f(v+1) = f(v) * prod(a+v)/prod(b+v)
    cur, dead, bad = one, False, False
    for v in range(0, vmax):
        if not dead and not bad:
            nz = [a + v for a in nums]
            dz = [b + v for b in dens]
            if any(x == 0 for x in nz):
                dead = True
                cur = zero
            elif any(x == 0 for x in dz):
                bad = True
            else:
                r = Fraction(1)
                for x in nz:
                    r *= x
                for x in dz:
                    r /= x
                cur = cur * backend.from_rational(r)
        vals[v + 1 - vmin] = zero if (dead or bad) else cur
        poison[v + 1 - vmin] = bad
    # downward: f(v-1) = f(v) * prod(b+v-1)/prod(a+v-1)
    cur, dead, bad = one, False, False
    for v in range(0, vmin, -1):
        if not dead and not bad:
            nz = [b + v - 1 for b in dens]
            dz = [a + v - 1 for a in nums]
            if any(x == 0 for x in nz):
                dead = True
                cur = zero
            elif any(x == 0 for x in dz):
                bad = True
            else:
                r = Fraction(1)
                for x in nz:
                    r *= x
                for x in dz:
                    r /= x
                cur = cur * backend.from_rational(r)
        vals[v - 1 - vmin] = zero if (dead or bad) else cur
        poison[v - 1 - vmin] = bad
    arr = backend.array(vals)
    return arr, (poison if poison.any() else None)


# elimination order ----------------------------------------------------------


def _simulate(order: Sequence[int], forms: Sequence[tuple[int, ...]], limits: Sequence[int]) -> tuple[float, float]:
    elim: set[int] = set()
    m_prev = 1.0
    total = 0.0
    peak = 0.0
    box = 1.0
    for j in order:
        total += m_prev * (limits[j] + 1)
        elim.add(j)
        box *= limits[j] + 1
        keys = set()
        for f in forms:
            sup = {i for i, v in enumerate(f) if v}
            if sup & elim and not sup <= elim:
                keys.add(tuple(v if i in elim else 0 for i, v in enumerate(f)))
        size = 1.0
        for k in keys:
            size *= sum(abs(v) * limits[i] for i, v in enumerate(k)) + 1
        m_prev = min(size, box)
        peak = max(peak, m_prev)
    return total, peak


@lru_cache(maxsize=4096)
def elimination_order(forms: tuple[tuple[int, ...], ...], limits: tuple[int, ...]) -> tuple[int, ...]:
    """Cheapest summation order under a state-size estimate."""
    r = len(limits)
    if r <= 1:
        return tuple(range(r))
    if r <= 7:
        best = None
        for perm in itertools.permutations(range(r)):
            c = _simulate(perm, forms, limits)
            if best is None or c < best[0]:
                best = (c, perm)
        return best[1]
    order: list[int] = []
    rest = set(range(r))
    while rest:
        j = min(rest, key=lambda j: _simulate(order + [j], forms, limits))
        order.append(j)
        rest.remove(j)
    return tuple(order)


# kernel ---------------------------------------------------------------------


def _convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty(len(a) + len(b) - 1, dtype=a.dtype)
    rb = b[::-1]
    nb = len(b) - 1
    for u in range(len(out)):
        lo = max(0, u - nb)
        hi = min(u, len(a) - 1)
        out[u] = (a[lo : hi + 1] * rb[nb - u + lo : nb - u + hi + 1]).sum()
    return out


def merge_twin_indices(psi: list[np.ndarray], tables: list[FormTable]) -> tuple[list[np.ndarray], list[FormTable]]:
    """Fuse indices that enter every multi-index form with equal coefficients.

    If ``F_i = F_j`` for all forms, the summand sees ``s_i`` and ``s_j`` only
    through ``s_i + s_j`` apart from their own weights, so the pair becomes a
    single index whose weight is the (box-limited) convolution. Forms that
    end up touching one index fold into that index's weight.
    """
    while True:
        r = len(psi)
        pair = None
        for i in range(r):
            for j in range(i + 1, r):
                if all(t.form[i] == t.form[j] for t in tables):
                    pair = (i, j)
                    break
            if pair:
                break
        if pair is None or not tables:
            return psi, tables
        i, j = pair
        merged = _convolve(psi[i], psi[j])
        keep = [k for k in range(r) if k != j]
        new_psi = [merged if k == i else psi[k] for k in keep]
        new_tables: list[FormTable] = []
        for t in tables:
            form = tuple(t.form[k] for k in keep)
            sup = [k for k, v in enumerate(form) if v]
            if len(sup) == 1:
                c = form[sup[0]]
                idx = c * np.arange(len(new_psi[sup[0]])) - t.vmin
                if t.poison is not None and t.poison[idx].any():
                    raise DenominatorZero(f"denominator Pochhammer vanishes for form {t.form}")
                new_psi[sup[0]] = new_psi[sup[0]] * t.values[idx]
            else:
                new_tables.append(FormTable(form, t.vmin, t.values, t.poison))
        psi, tables = new_psi, new_tables


def _nonzero_mask(vals: np.ndarray) -> np.ndarray:
    if vals.dtype == object:
        return np.fromiter((bool(v) for v in vals), dtype=bool, count=len(vals))
    return vals != 0


def box_sum(
    psi: Sequence[np.ndarray],
    tables: Sequence[FormTable],
    backend: Backend,
    order: Sequence[int] | None = None,
):
    """Sum ``prod_j psi_j[s_j] * prod_F table_F[F.s]`` over the box.

    Args:
        psi: One weight array per index; its length fixes that index's range.
        tables: Tables for forms touching at least two indices.
        backend: Element arithmetic.
        order: Index elimination order; chosen automatically when omitted.
    """
    psi, tables = merge_twin_indices(list(psi), list(tables))
    r = len(psi)
    limits = tuple(len(p) - 1 for p in psi)
    forms = [t.form for t in tables]
    if order is None:
        order = elimination_order(tuple(forms), limits)
    supports = [frozenset(i for i, v in enumerate(f) if v) for f in forms]

    one = backend.from_rational(Fraction(1))
    keys: list[tuple[int, ...]] = []
    coords = np.zeros((1, 0), dtype=np.int64)
    vals = backend.array([one])
    elim: set[int] = set()
    for j in order:
        new_elim = elim | {j}
        s = np.arange(limits[j] + 1, dtype=np.int64)
        p = psi[j]
        keep = _nonzero_mask(p)
        if not keep.all():
            s = s[keep]
            p = p[keep]
        if len(s) == 0 or len(vals) == 0:
            return backend.finish(backend.from_rational(Fraction(0)))
        col = {k: c for c, k in enumerate(keys)}
        block = vals[:, None] * p[None, :]

        def partial(f: tuple[int, ...]) -> np.ndarray:
            old = tuple(v if i in elim else 0 for i, v in enumerate(f))
            base = coords[:, col[old]][:, None] if any(old) else np.zeros((len(vals), 1), dtype=np.int64)
            return base + f[j] * s[None, :]

        for t, sup in zip(tables, supports):
            if j in sup and sup <= new_elim:
                w = partial(t.form) - t.vmin
                if t.poison is not None and t.poison[w].any():
                    raise DenominatorZero(f"denominator Pochhammer vanishes for form {t.form}")
                block = block * t.values[w]
        new_keys: list[tuple[int, ...]] = []
        for f, sup in zip(forms, supports):
            if sup & new_elim and not sup <= new_elim:
                k = tuple(v if i in new_elim else 0 for i, v in enumerate(f))
                if k not in new_keys:
                    new_keys.append(k)
        flat = block.reshape(-1)
        if not new_keys:
            total = flat.sum() if len(flat) else backend.from_rational(Fraction(0))
            keys, coords, vals = [], np.zeros((1, 0), dtype=np.int64), backend.array([total])
            elim = new_elim
            continue
        cols = [partial(k).reshape(-1) for k in new_keys]
        new_coords = np.stack(cols, axis=1)
        nz = _nonzero_mask(flat)
        if not nz.all():
            flat = flat[nz]
            new_coords = new_coords[nz]
        coords, vals = _aggregate(new_coords, flat)
        keys = new_keys
        elim = new_elim
    return backend.finish(vals.sum() if len(vals) else backend.from_rational(Fraction(0)))


def _aggregate(coords: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if len(vals) == 0:
        return coords, vals
    lo = coords.min(axis=0)
    span = coords.max(axis=0) - lo + 1
    if float(np.prod(span.astype(float))) < 2**62:
        stride = np.cumprod(np.concatenate(([1], span[:-1]))).astype(np.int64)
        key = (coords - lo) @ stride
        perm = np.argsort(key, kind="stable")
        ks = key[perm]
    else:
        perm = np.lexsort(coords.T[::-1])
        ks = coords[perm]
        ks = np.concatenate(([True], np.any(ks[1:] != ks[:-1], axis=1)))
        starts = np.flatnonzero(ks)
        return coords[perm][starts], np.add.reduceat(vals[perm], starts)
    starts = np.flatnonzero(np.concatenate(([True], ks[1:] != ks[:-1])))
    sorted_vals = vals[perm]
    return coords[perm][starts], np.add.reduceat(sorted_vals, starts)
