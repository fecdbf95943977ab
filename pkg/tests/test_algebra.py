import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from awc.algebra import (
    FAST_THRESHOLD,
    P,
    bezout,
    degree,
    hash_to_field,
    inv,
    multi_bezout,
    normalize,
    poly_divrem,
    poly_eval,
    poly_from_roots,
    poly_mul,
    poly_xgcd,
)
from awc.errors import NotCoprimeError

from oracle import combination, naive_eval, naive_from_roots, naive_mul, sympy_gcd

field = st.integers(min_value=0, max_value=P - 1)
nonzero = st.integers(min_value=1, max_value=P - 1)


def rand_poly(rng, deg):
    coeffs = [rng.randrange(P) for _ in range(deg)] + [rng.randrange(1, P)]
    return coeffs


def test_from_roots_table1_answer():
    assert poly_from_roots([1, 7]) == [7, 8, 1]


def test_from_roots_empty_is_one():
    assert poly_from_roots([]) == [1]


def test_from_roots_pinned_values():
    # frozen from the schoolbook oracle
    assert poly_from_roots([2, 4, 5, 6]) == [240, 268, 104, 17, 1]
    assert poly_from_roots([3, 5, 8, 9]) == [1080, 831, 223, 25, 1]


@pytest.mark.parametrize("size", [1, 2, 63, 64, 65, 130, 512])
def test_from_roots_matches_direct_product(size):
    rng = random.Random(size)
    roots = [rng.randrange(P) for _ in range(size)]
    poly = poly_from_roots(roots)
    assert len(poly) == size + 1 and poly[-1] == 1
    for _ in range(3):
        x = rng.randrange(P)
        direct = 1
        for r in roots:
            direct = direct * (x + r) % P
        assert poly_eval(poly, x) == direct


def test_eval_examples():
    assert poly_eval([7, 8, 1], 1) == 16
    assert poly_eval([1], 12345) == 1
    kappa = 0xABCDEF
    assert poly_eval(poly_from_roots([1, 7]), kappa) == (kappa + 1) * (kappa + 7) % P


def test_mul_examples():
    assert poly_mul([2, 1], [4, 1]) == [8, 6, 1]
    a = [5, 0, 3]
    assert poly_mul(a, [1]) == a
    A, B = [3, 11, 19], [2, 29]
    assert poly_mul(poly_from_roots(A), poly_from_roots(B)) == poly_from_roots(A + B)


@pytest.mark.parametrize("da,db", [(0, 0), (5, 3), (63, 64), (100, 40), (300, 300)])
def test_mul_against_schoolbook(da, db):
    rng = random.Random(da * 1000 + db)
    a, b = rand_poly(rng, da), rand_poly(rng, db)
    assert poly_mul(a, b) == naive_mul(a, b)


def test_mul_by_zero():
    assert poly_mul([0], [1, 2, 3]) == [0]


def test_divrem_examples():
    assert poly_divrem([8, 6, 1], [2, 1]) == ([4, 1], [0])
    a = [3, 1, 4, 1]
    assert poly_divrem(a, a) == ([1], [0])
    assert poly_divrem([1, 2], [1, 2, 3]) == ([0], [1, 2])


def test_divrem_by_zero():
    with pytest.raises(ZeroDivisionError):
        poly_divrem([1, 2], [0])


@pytest.mark.parametrize("da,db", [(10, 3), (200, 70), (500, 499), (1000, 10)])
def test_divrem_reconstructs(da, db):
    rng = random.Random(da + db)
    a, b = rand_poly(rng, da), rand_poly(rng, db)
    q, r = poly_divrem(a, b)
    assert degree(r) < degree(b)
    recon = naive_mul(q, b)
    recon = [(recon[i] if i < len(recon) else 0) + (r[i] if i < len(r) else 0) for i in range(len(a))]
    assert normalize(recon) == normalize(a)


def test_normalize_and_degree():
    assert normalize([1, 2, 0, 0]) == [1, 2]
    assert normalize([0, 0]) == [0]
    assert normalize([P + 3]) == [3]
    assert degree([0]) < 0
    assert degree([4, 0, 1]) == 2


def test_inv():
    assert inv(2) * 2 % P == 1
    with pytest.raises(ZeroDivisionError):
        inv(0)


def test_bezout_table1_family():
    polys = [naive_from_roots([2, 4, 5, 6]), naive_from_roots([3, 5, 8, 9]), naive_from_roots([4])]
    qs = multi_bezout(polys)
    assert combination(qs, polys) == [1]
    assert all(degree(q) < 4 for q in qs)


def test_bezout_single_polynomial():
    assert multi_bezout([[1]]) == [[1]]
    g, qs = bezout([[6, 2]])
    assert g == [3, 1]
    assert combination(qs, [[6, 2]]) == [3, 1]


def test_bezout_identical_inputs_not_coprime():
    with pytest.raises(NotCoprimeError) as exc:
        multi_bezout([[1, 1], [1, 1]])
    assert exc.value.gcd == [1, 1]
    assert combination(exc.value.cofactors, [[1, 1], [1, 1]]) == [1, 1]


def test_bezout_rejects_bad_input():
    with pytest.raises(ValueError):
        bezout([])
    with pytest.raises(ValueError):
        bezout([[1, 1], [0]])


@pytest.mark.parametrize("degs", [(200, 150), (700, 300), (1500, 1500, 20), (90, 2000)])
def test_bezout_large_uses_fast_path(degs):
    rng = random.Random(sum(degs))
    polys = [naive_from_roots([rng.randrange(P) for _ in range(d)]) for d in degs]
    qs = multi_bezout(polys)
    assert all(degree(q) < max(degs) for q in qs)
    x = rng.randrange(P)
    assert sum(poly_eval(q, x) * poly_eval(p, x) for q, p in zip(qs, polys)) % P == 1


def test_xgcd_identity_and_monic():
    rng = random.Random(5)
    common = naive_from_roots([11, 12])
    a = naive_mul(common, rand_poly(rng, 150))
    b = naive_mul(common, rand_poly(rng, 90))
    g, s, t = poly_xgcd(a, b)
    assert g[-1] == 1
    assert g == sympy_gcd([a, b])
    assert combination([s, t], [a, b]) == g


def test_xgcd_zero_operand():
    g, s, t = poly_xgcd([0], [2, 4])
    assert g == [inv(4) * 2 % P, 1]
    assert combination([s, t], [[0], [2, 4]]) == g


def test_hash_to_field_golden_and_properties():
    # frozen from hashlib: sha256(b"") as big-endian mod p
    assert hash_to_field(b"") == 0x6FC31CEF6F5E9ECC67C21CC08FCDE11ED3F09DE1649D374DA495991C7852B854
    assert hash_to_field(b"doc1") == hash_to_field(b"doc1")
    assert hash_to_field(b"doc1") != hash_to_field(b"doc2")
    assert 0 < hash_to_field(b"abc") < P


def test_hash_to_field_zero_retry(monkeypatch):
    import hashlib

    import awc.algebra as alg

    real = hashlib.sha256

    class Fake:
        def __init__(self, data):
            self.data = data

        def digest(self):
            if self.data == b"x":
                return P.to_bytes(32, "big")
            return real(self.data).digest()

    monkeypatch.setattr(alg.hashlib, "sha256", Fake)
    expected = int.from_bytes(real(b"x" + (1).to_bytes(4, "big")).digest(), "big") % P
    assert alg.hash_to_field(b"x") == expected


def test_threshold_boundaries_agree():
    rng = random.Random(9)
    for n in (FAST_THRESHOLD - 1, FAST_THRESHOLD, FAST_THRESHOLD + 1):
        roots = [rng.randrange(P) for _ in range(n)]
        assert poly_from_roots(roots) == naive_from_roots(roots)


@settings(max_examples=60, deadline=None)
@given(st.lists(field, max_size=40), st.lists(field, max_size=40))
def test_prop_from_roots_concat(a, b):
    assert poly_mul(poly_from_roots(a), poly_from_roots(b)) == poly_from_roots(a + b)


@settings(max_examples=60, deadline=None)
@given(st.lists(field, min_size=1, max_size=30), st.lists(field, min_size=1, max_size=30).filter(lambda b: b[-1] != 0))
def test_prop_divrem(a, b):
    q, r = poly_divrem(a, b)
    back = combination([q, [1]], [b, r])
    assert back == normalize(a)
    assert degree(r) < degree(b)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(nonzero, min_size=0, max_size=12), min_size=1, max_size=4), st.lists(nonzero, max_size=3))
def test_prop_bezout_identity(root_sets, common):
    polys = [naive_from_roots(rs + common) for rs in root_sets]
    g, qs = bezout(polys)
    assert g == sympy_gcd(polys)
    assert combination(qs, polys) == g


def test_pure_and_deterministic():
    roots = list(range(1, 200))
    assert poly_from_roots(roots) == poly_from_roots(list(roots))
    polys = [naive_from_roots([1, 2, 3]), naive_from_roots([4, 5])]
    assert multi_bezout(polys) == multi_bezout(polys)
