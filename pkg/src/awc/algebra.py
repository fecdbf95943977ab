"""Arithmetic in the scalar field of BLS12-381 and in polynomials over it.

Field elements are plain ``int`` values in ``[0, P)``.  A polynomial is a list
of field elements in ascending degree order, so ``[7, 8, 1]`` is
``7 + 8x + x^2``.  Lists never carry trailing zero coefficients; the zero
polynomial is ``[0]``.

Small inputs are handled with schoolbook routines written here.  Above
``FAST_THRESHOLD`` coefficients the heavy kernels (multiplication and
division with remainder) run on FLINT's ``fmpz_mod_poly`` type, and the
extended Euclidean algorithm switches to a half-GCD recursion so that Bezout
cofactors of degree-N polynomials cost O(M(N) log N) instead of O(N^2).
"""

from __future__ import annotations

import hashlib
from typing import Sequence

import flint

# Order of the BLS12-381 prime-order subgroups (the scalar field).
P = 0x73EDA753299D7D483339D80809A1D80553BDA402FFFE5BFEFFFFFFFF00000001

FAST_THRESHOLD = 64

Poly = list  # list[int], ascending degree

_ctx = flint.fmpz_mod_poly_ctx(P)
_ONE = _ctx.one()
_ZERO = _ctx.zero()
_IDENTITY = (_ONE, _ZERO, _ZERO, _ONE)


def inv(x: int) -> int:
    """Multiplicative inverse mod P; raises ZeroDivisionError for 0."""
    x %= P
    if x == 0:
        raise ZeroDivisionError("0 has no inverse mod P")
    return pow(x, -1, P)


def normalize(poly: Sequence[int]) -> Poly:
    """Reduce coefficients mod P and strip trailing zeros."""
    out = [c % P for c in poly]
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out or [0]


def degree(poly: Sequence[int]) -> int:
    """Degree of a normalized polynomial; -1 for the zero polynomial."""
    if len(poly) == 1 and poly[0] == 0:
        return -1
    return len(poly) - 1


def is_zero(poly: Sequence[int]) -> bool:
    return degree(poly) < 0


def _to_flint(poly: Sequence[int]):
    return _ctx(list(poly))


def _from_flint(f) -> Poly:
    coeffs = [int(c) for c in f.coeffs()]
    return coeffs or [0]


def poly_add(a: Sequence[int], b: Sequence[int]) -> Poly:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] = (out[i] + c) % P
    return normalize(out)


def poly_sub(a: Sequence[int], b: Sequence[int]) -> Poly:
    return poly_add(a, [(-c) % P for c in b])


def poly_scale(a: Sequence[int], k: int) -> Poly:
    return normalize([c * k for c in a])


def poly_eval(poly: Sequence[int], x: int) -> int:
    """Horner evaluation of ``poly`` at ``x``."""
    acc = 0
    for c in reversed(poly):
        acc = (acc * x + c) % P
    return acc


def _schoolbook(a: Sequence[int], b: Sequence[int]) -> Poly:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return normalize(out)


def poly_mul(a: Sequence[int], b: Sequence[int]) -> Poly:
    """Product of two polynomials mod P."""
    if min(len(a), len(b)) < FAST_THRESHOLD:
        return _schoolbook(a, b)
    return _from_flint(_to_flint(a) * _to_flint(b))


def _expand_small(roots: Sequence[int]) -> Poly:
    # multiply in one linear factor (x + r) at a time
    out = [1]
    for r in roots:
        r %= P
        nxt = [0] * (len(out) + 1)
        for i, c in enumerate(out):
            nxt[i] = (nxt[i] + c * r) % P
            nxt[i + 1] = c
        out = nxt
    return out


def _product_tree_flint(roots: Sequence[int]):
    n = len(roots)
    if n <= FAST_THRESHOLD:
        return _to_flint(_expand_small(roots))
    mid = n // 2
    return _product_tree_flint(roots[:mid]) * _product_tree_flint(roots[mid:])


def poly_from_roots(roots: Sequence[int]) -> Poly:
    """Coefficients of prod_i (x + roots[i]).

    Expanded with a balanced product tree: leaves of up to ``FAST_THRESHOLD``
    roots are expanded directly, upper levels use fast multiplication.
    """
    roots = list(roots)
    if len(roots) <= FAST_THRESHOLD:
        return _expand_small(roots)
    return _from_flint(_product_tree_flint(roots))


def _long_division(a: Sequence[int], b: Sequence[int]) -> tuple[Poly, Poly]:
    rem = list(a)
    db = len(b) - 1
    lead_inv = inv(b[-1])
    if len(a) - 1 < db:
        return [0], normalize(a)
    quot = [0] * (len(a) - db)
    for k in range(len(a) - 1 - db, -1, -1):
        c = rem[k + db] * lead_inv % P
        quot[k] = c
        if c:
            for j in range(db + 1):
                rem[k + j] = (rem[k + j] - c * b[j]) % P
    return normalize(quot), normalize(rem[:db] or [0])


def poly_divrem(a: Sequence[int], b: Sequence[int]) -> tuple[Poly, Poly]:
    """Return ``(q, r)`` with ``a = q*b + r`` and ``deg r < deg b``."""
    a = normalize(a)
    b = normalize(b)
    if is_zero(b):
        raise ZeroDivisionError("division by the zero polynomial")
    if len(b) < FAST_THRESHOLD or len(a) - len(b) < FAST_THRESHOLD:
        return _long_division(a, b)
    q, r = divmod(_to_flint(a), _to_flint(b))
    return _from_flint(q), _from_flint(r)


# --- extended Euclid -------------------------------------------------------
#
# A transition matrix M = (m00, m01, m10, m11) maps the input pair (a, b) to
# (m00*a + m01*b, m10*a + m11*b).  One Euclidean step with quotient q is the
# left factor [[0, 1], [1, -q]].


def _deg(f) -> int:
    return -1 if f.is_zero() else f.degree()


def _step(M, q):
    return (M[2], M[3], M[0] - q * M[2], M[1] - q * M[3])


def _apply(M, a, b):
    return (M[0] * a + M[1] * b, M[2] * a + M[3] * b)


def _matmul(A, B):
    return (
        A[0] * B[0] + A[1] * B[2],
        A[0] * B[1] + A[1] * B[3],
        A[2] * B[0] + A[3] * B[2],
        A[2] * B[1] + A[3] * B[3],
    )


def _euclid_until(a, b, bound: int):
    M = _IDENTITY
    while _deg(b) >= bound:
        q, r = divmod(a, b)
        a, b = b, r
        M = _step(M, q)
    return M


def _half_gcd(a, b):
    """Matrix reducing (a, b) to the consecutive remainders straddling deg(a)/2.

    Requires deg a > deg b.  On return, applying the matrix to (a, b) gives
    (c, d) with deg c >= ceil(deg a / 2) > deg d.
    """
    n = _deg(a)
    m = (n + 1) // 2
    if _deg(b) < m:
        return _IDENTITY
    if n < FAST_THRESHOLD:
        return _euclid_until(a, b, m)
    M = _half_gcd(a.right_shift(m), b.right_shift(m))
    c, d = _apply(M, a, b)
    if _deg(d) < m:
        return M
    q, r = divmod(c, d)
    c, d = d, r
    M = _step(M, q)
    if _deg(d) < m:
        return M
    k = 2 * m - _deg(c)
    M2 = _half_gcd(c.right_shift(k), d.right_shift(k))
    return _matmul(M2, M)


def _xgcd_flint(a, b):
    swapped = _deg(a) < _deg(b)
    if swapped:
        a, b = b, a
    M = _IDENTITY
    while not b.is_zero():
        if _deg(b) > FAST_THRESHOLD and _deg(a) > _deg(b):
            H = _half_gcd(a, b)
            a, b = _apply(H, a, b)
            M = _matmul(H, M)
            if b.is_zero():
                break
        q, r = divmod(a, b)
        a, b = b, r
        M = _step(M, q)
    s, t = M[0], M[1]
    if swapped:
        s, t = t, s
    if not a.is_zero():
        lc_inv = a.leading_coefficient().inverse()
        a, s, t = a * lc_inv, s * lc_inv, t * lc_inv
    return a, s, t


def poly_xgcd(a: Sequence[int], b: Sequence[int]) -> tuple[Poly, Poly, Poly]:
    """Return ``(g, s, t)`` with ``s*a + t*b = g`` and ``g`` monic."""
    g, s, t = _xgcd_flint(_to_flint(normalize(a)), _to_flint(normalize(b)))
    return _from_flint(g), _from_flint(s), _from_flint(t)


def bezout(polys: Sequence[Sequence[int]]) -> tuple[Poly, list[Poly]]:
    """Monic gcd of ``polys`` and cofactors ``q_j`` with sum q_j*P_j = gcd.

    The t-ary identity is built by folding the two-polynomial extended
    Euclid from the left.  Afterwards every cofactor except the one paired
    with the highest-degree input is reduced modulo that input, which keeps
    all cofactor degrees below the largest input degree.
    """
    if not polys:
        raise ValueError("bezout needs at least one polynomial")
    fl = [_to_flint(normalize(p)) for p in polys]
    if any(f.is_zero() for f in fl):
        raise ValueError("bezout inputs must be nonzero")

    lc_inv = fl[0].leading_coefficient().inverse()
    g = fl[0] * lc_inv
    cof = [_ctx([int(lc_inv)])]
    for f in fl[1:]:
        g, u, v = _xgcd_flint(g, f)
        cof = [u * c for c in cof]
        cof.append(v)

    k = max(range(len(fl)), key=lambda j: _deg(fl[j]))
    if _deg(fl[k]) > 0:
        carry = _ZERO
        for j in range(len(fl)):
            if j == k:
                continue
            quo, rem = divmod(cof[j], fl[k])
            cof[j] = rem
            carry += quo * fl[j]
        cof[k] += carry
    return _from_flint(g), [_from_flint(c) for c in cof]


def multi_bezout(polys: Sequence[Sequence[int]]) -> list[Poly]:
    """Cofactors q_1..q_t with sum q_j * polys[j] = 1.

    Raises NotCoprimeError (carrying the gcd and the cofactors for it) when
    the polynomials share a common factor.
    """
    from .errors import NotCoprimeError

    g, cof = bezout(polys)
    if g != [1]:
        err = NotCoprimeError(g)
        err.cofactors = cof
        raise err
    return cof


def hash_to_field(data: bytes) -> int:
    """SHA-256 of ``data`` as a big-endian integer mod P, never zero.

    A zero reduction is retried on ``data || counter`` with a 4-byte
    big-endian counter starting at 1.
    """
    digest = hashlib.sha256(data).digest()
    x = int.from_bytes(digest, "big") % P
    counter = 1
    while x == 0:
        digest = hashlib.sha256(data + counter.to_bytes(4, "big")).digest()
        x = int.from_bytes(digest, "big") % P
        counter += 1
    return x
