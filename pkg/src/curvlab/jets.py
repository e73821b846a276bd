"""Truncated multivariate Taylor arithmetic (forward-mode jets of arbitrary order).

A :class:`Jet` holds the Taylor coefficients ``c_alpha = d^alpha f / alpha!`` of a
function of ``nvars`` real variables, truncated at total degree ``order``.  The
coefficient array has shape ``(ncoef, *batch)`` so a single jet carries the
expansion at many base points at once.

The elementary functions in this module (``sin``, ``log``, ...) accept jets,
numpy arrays and Python scalars alike, so metric laws are written once and
evaluated either on plain coordinates or on seeded jets.
"""

from __future__ import annotations

import functools
import itertools
import math

import numpy as np
from numba import njit


@functools.lru_cache(maxsize=None)
def algebra(nvars: int, order: int) -> "JetAlgebra":
    return JetAlgebra(nvars, order)


@njit(cache=True)
def _sparse_mul(a, b, left, right, out, res):
    # res[out[p]] += a[left[p]] * b[right[p]] for every monomial pair p
    for p in range(left.shape[0]):
        ra = a[left[p]]
        rb = b[right[p]]
        ro = res[out[p]]
        for q in range(ra.shape[0]):
            ro[q] += ra[q] * rb[q]


class JetAlgebra:
    """Monomial bookkeeping shared by all jets with the same (nvars, order)."""

    def __init__(self, nvars: int, order: int):
        if nvars < 1 or order < 0:
            raise ValueError("need nvars >= 1 and order >= 0")
        self.nvars = nvars
        self.order = order
        monos = []
        for deg in range(order + 1):
            for combo in itertools.combinations_with_replacement(range(nvars), deg):
                alpha = [0] * nvars
                for v in combo:
                    alpha[v] += 1
                monos.append(tuple(alpha))
        self.monomials = monos
        self.index = {m: i for i, m in enumerate(monos)}
        self.ncoef = len(monos)
        self.degree = np.array([sum(m) for m in monos])

        left, right, out = [], [], []
        for i, a in enumerate(monos):
            da = sum(a)
            for j, b in enumerate(monos):
                if da + sum(b) <= order:
                    left.append(i)
                    right.append(j)
                    out.append(self.index[tuple(x + y for x, y in zip(a, b))])
        perm = np.argsort(out, kind="stable")
        self._left = np.asarray(left)[perm]
        self._right = np.asarray(right)[perm]
        out = np.asarray(out)[perm]
        self._out = out

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])
        dtype = np.result_type(a, b)
        a2 = np.ascontiguousarray(np.broadcast_to(a, (a.shape[0],) + shape), dtype).reshape(a.shape[0], -1)
        b2 = np.ascontiguousarray(np.broadcast_to(b, (b.shape[0],) + shape), dtype).reshape(b.shape[0], -1)
        res = np.zeros((self.ncoef, a2.shape[1]), dtype)
        _sparse_mul(a2, b2, self._left, self._right, self._out, res)
        return res.reshape((self.ncoef,) + shape)

    @functools.lru_cache(maxsize=None)
    def derivative_map(self, var: int):
        """Index maps for d/dt_var: (target indices in order-1 algebra, source, factor)."""
        lower = algebra(self.nvars, self.order - 1)
        tgt, src, fac = [], [], []
        for i, m in enumerate(lower.monomials):
            up = list(m)
            up[var] += 1
            tgt.append(i)
            src.append(self.index[tuple(up)])
            fac.append(up[var])
        return lower, np.asarray(tgt), np.asarray(src), np.asarray(fac, dtype=float)

    @functools.lru_cache(maxsize=None)
    def tensor_map(self, rank: int):
        """Gather index and alpha! factor for the dense rank-``rank`` derivative tensor."""
        idx = np.empty((self.nvars,) * rank, dtype=np.intp)
        fac = np.empty((self.nvars,) * rank)
        for combo in itertools.product(range(self.nvars), repeat=rank):
            alpha = [0] * self.nvars
            for v in combo:
                alpha[v] += 1
            idx[combo] = self.index[tuple(alpha)]
            fac[combo] = math.prod(math.factorial(k) for k in alpha)
        return idx, fac


class Jet:
    """Truncated Taylor expansion; arithmetic follows the usual truncated-product rules."""

    __array_priority__ = 100

    def __init__(self, alg: JetAlgebra, coeffs: np.ndarray):
        self.alg = alg
        self.c = coeffs

    # construction --------------------------------------------------------
    @classmethod
    def constant(cls, alg: JetAlgebra, value) -> "Jet":
        value = np.asarray(value)
        c = np.zeros((alg.ncoef,) + value.shape, dtype=np.result_type(value, float))
        c[0] = value
        return cls(alg, c)

    @classmethod
    def variable(cls, alg: JetAlgebra, value, var: int) -> "Jet":
        jet = cls.constant(alg, value)
        if alg.order >= 1:
            e = [0] * alg.nvars
            e[var] = 1
            jet.c[alg.index[tuple(e)]] = 1.0
        return jet

    @classmethod
    def seed(cls, point: np.ndarray, order: int) -> list["Jet"]:
        """One jet per coordinate; ``point`` has shape (*batch, nvars)."""
        point = np.asarray(point, dtype=float)
        nvars = point.shape[-1]
        alg = algebra(nvars, order)
        return [cls.variable(alg, point[..., v], v) for v in range(nvars)]

    # accessors -----------------------------------------------------------
    @property
    def value(self) -> np.ndarray:
        return self.c[0]

    @property
    def batch_shape(self) -> tuple:
        return self.c.shape[1:]

    def gradient(self) -> np.ndarray:
        """First derivatives, shape (*batch, nvars)."""
        return self.derivative_tensor(1)

    def hessian(self) -> np.ndarray:
        return self.derivative_tensor(2)

    def derivative_tensor(self, rank: int) -> np.ndarray:
        """Dense tensor of all rank-th partial derivatives, shape (*batch, nvars^rank)."""
        if rank > self.alg.order:
            raise ValueError(f"jet of order {self.alg.order} has no rank-{rank} derivatives")
        if rank == 0:
            return self.c[0]
        idx, fac = self.alg.tensor_map(rank)
        dense = self.c[idx.ravel()] * fac.ravel().reshape((-1,) + (1,) * len(self.batch_shape))
        dense = dense.reshape(idx.shape + self.batch_shape)
        return np.moveaxis(dense, tuple(range(rank)), tuple(range(-rank, 0)))

    def diff(self, var: int) -> "Jet":
        """Partial derivative; the result is a jet of one lower order."""
        if self.alg.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        lower, tgt, src, fac = self.alg.derivative_map(var)
        c = np.zeros((lower.ncoef,) + self.batch_shape, dtype=self.c.dtype)
        c[tgt] = self.c[src] * fac.reshape((-1,) + (1,) * len(self.batch_shape))
        return Jet(lower, c)

    def truncate(self, order: int) -> "Jet":
        alg = algebra(self.alg.nvars, order)
        return Jet(alg, self.c[: alg.ncoef].copy())

    def conj(self) -> "Jet":
        return Jet(self.alg, np.conj(self.c))

    @property
    def real(self) -> "Jet":
        return Jet(self.alg, self.c.real.copy())

    @property
    def imag(self) -> "Jet":
        return Jet(self.alg, self.c.imag.copy())

    # arithmetic ----------------------------------------------------------
    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            if other.alg is not self.alg:
                raise ValueError("jets from different algebras")
            return other
        return Jet.constant(self.alg, other)

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b = _broadcast_pair(self.c, self._lift(other).c)
            return Jet(self.alg, a + b)
        other = np.asarray(other)
        shape = np.broadcast_shapes(self.batch_shape, other.shape)
        c = np.array(np.broadcast_to(self.c, self.c.shape[:1] + shape),
                     dtype=np.result_type(self.c, other))
        c[0] = c[0] + other
        return Jet(self.alg, c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.alg, -self.c)

    def __sub__(self, other):
        if isinstance(other, Jet):
            a, b = _broadcast_pair(self.c, self._lift(other).c)
            return Jet(self.alg, a - b)
        return self + (-np.asarray(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b = _broadcast_pair(self.c, self._lift(other).c)
            return Jet(self.alg, self.alg.mul(a, b))
        return Jet(self.alg, self._expanded(other) * other)

    __rmul__ = __mul__

    def _expanded(self, other) -> np.ndarray:
        other = np.asarray(other)
        extra = other.ndim - len(self.batch_shape)
        if extra <= 0:
            return self.c
        return self.c.reshape(self.c.shape[:1] + (1,) * extra + self.batch_shape)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        other = np.asarray(other)
        return Jet(self.alg, self._expanded(other) / other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) and p >= 0:
            out = Jet.constant(self.alg, np.ones(self.batch_shape))
            base = self
            while p:
                if p & 1:
                    out = out * base
                p >>= 1
                if p:
                    base = base * base
            return out
        return power(self, p)

    def __repr__(self):
        return f"Jet(nvars={self.alg.nvars}, order={self.alg.order}, batch={self.batch_shape})"


def _broadcast_pair(a: np.ndarray, b: np.ndarray):
    if a.shape[1:] == b.shape[1:]:
        return a, b
    shape = np.broadcast_shapes(a.shape[1:], b.shape[1:])

    def expand(x):
        x = x.reshape(x.shape[:1] + (1,) * (len(shape) - x.ndim + 1) + x.shape[1:])
        return np.broadcast_to(x, x.shape[:1] + shape)

    return expand(a), expand(b)


def compose(a: Jet, derivs: list[np.ndarray]) -> Jet:
    """f(a) given ``derivs[k] = f^(k)(a0)`` for k = 0..order (Horner in a - a0)."""
    order = a.alg.order
    h = Jet(a.alg, a.c.copy())
    h.c[0] = 0
    coeff = [d / math.factorial(k) for k, d in enumerate(derivs)]
    out = Jet.constant(a.alg, coeff[order])
    for k in range(order - 1, -1, -1):
        out = out * h + coeff[k]
    return out


def _scalar_or(fn_np, jet_fn):
    def apply(x):
        if isinstance(x, Jet):
            return jet_fn(x)
        return fn_np(x)

    apply.__name__ = fn_np.__name__
    return apply


def _sin_jet(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    cycle = [s, c, -s, -c]
    return compose(a, [cycle[k % 4] for k in range(a.alg.order + 1)])


def _cos_jet(a: Jet) -> Jet:
    s, c = np.sin(a.value), np.cos(a.value)
    cycle = [c, -s, -c, s]
    return compose(a, [cycle[k % 4] for k in range(a.alg.order + 1)])


def _exp_jet(a: Jet) -> Jet:
    e = np.exp(a.value)
    return compose(a, [e] * (a.alg.order + 1))


def _log_jet(a: Jet) -> Jet:
    x = a.value
    derivs = [np.log(x)]
    for k in range(1, a.alg.order + 1):
        derivs.append((-1) ** (k - 1) * math.factorial(k - 1) / x**k)
    return compose(a, derivs)


def power(a, p: float):
    if not isinstance(a, Jet):
        return np.power(a, p)
    x = a.value
    derivs = []
    coef = 1.0
    for k in range(a.alg.order + 1):
        derivs.append(coef * x ** (p - k))
        coef *= p - k
    return compose(a, derivs)


def reciprocal(a):
    if not isinstance(a, Jet):
        return 1.0 / a
    x = a.value
    derivs = [(-1) ** k * math.factorial(k) / x ** (k + 1) for k in range(a.alg.order + 1)]
    return compose(a, derivs)


sin = _scalar_or(np.sin, _sin_jet)
cos = _scalar_or(np.cos, _cos_jet)
exp = _scalar_or(np.exp, _exp_jet)
log = _scalar_or(np.log, _log_jet)


def sqrt(a):
    return power(a, 0.5)


def value_of(x):
    """Plain value of a jet or pass-through for numbers/arrays."""
    return x.value if isinstance(x, Jet) else np.asarray(x)
