"""NIST P-256 group arithmetic.

Points are affine ``(x, y)`` tuples with ``None`` as the identity.  Scalar
multiplication runs in Jacobian coordinates internally; nothing here is
constant-time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

Point = Optional[Tuple[int, int]]


@dataclass(frozen=True)
class Curve:
    name: str
    p: int
    a: int
    b: int
    gx: int
    gy: int
    q: int  # group order
    byte_len: int

    @property
    def G(self) -> Tuple[int, int]:
        return (self.gx, self.gy)

    @property
    def bits(self) -> int:
        return self.q.bit_length()


P256 = Curve(
    name="P-256",
    p=0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF,
    a=-3,
    b=0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B,
    gx=0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296,
    gy=0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5,
    q=0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551,
    byte_len=32,
)


def on_curve(curve: Curve, point: Point) -> bool:
    if point is None:
        return False
    x, y = point
    p = curve.p
    if not (0 <= x < p and 0 <= y < p):
        return False
    return (y * y - (x * x * x + curve.a * x + curve.b)) % p == 0


# Jacobian (X, Y, Z) with Z == 0 meaning the identity.

def _to_jacobian(point: Point) -> tuple:
    if point is None:
        return (1, 1, 0)
    return (point[0], point[1], 1)


def _from_jacobian(curve: Curve, P: tuple) -> Point:
    X, Y, Z = P
    if Z == 0:
        return None
    p = curve.p
    zinv = pow(Z, -1, p)
    zinv2 = zinv * zinv % p
    return (X * zinv2 % p, Y * zinv2 * zinv % p)


def _jdouble(curve: Curve, P: tuple) -> tuple:
    X, Y, Z = P
    if Z == 0 or Y == 0:
        return (1, 1, 0)
    p = curve.p
    YY = Y * Y % p
    S = 4 * X * YY % p
    ZZ = Z * Z % p
    # a = -3: M = 3(X - Z^2)(X + Z^2)
    M = 3 * (X - ZZ) * (X + ZZ) % p
    X3 = (M * M - 2 * S) % p
    Y3 = (M * (S - X3) - 8 * YY * YY) % p
    Z3 = 2 * Y * Z % p
    return (X3, Y3, Z3)


def _jadd(curve: Curve, P: tuple, Q: tuple) -> tuple:
    X1, Y1, Z1 = P
    X2, Y2, Z2 = Q
    if Z1 == 0:
        return Q
    if Z2 == 0:
        return P
    p = curve.p
    Z1Z1 = Z1 * Z1 % p
    Z2Z2 = Z2 * Z2 % p
    U1 = X1 * Z2Z2 % p
    U2 = X2 * Z1Z1 % p
    S1 = Y1 * Z2 * Z2Z2 % p
    S2 = Y2 * Z1 * Z1Z1 % p
    if U1 == U2:
        if S1 != S2:
            return (1, 1, 0)
        return _jdouble(curve, P)
    H = (U2 - U1) % p
    R = (S2 - S1) % p
    HH = H * H % p
    HHH = H * HH % p
    V = U1 * HH % p
    X3 = (R * R - HHH - 2 * V) % p
    Y3 = (R * (V - X3) - S1 * HHH) % p
    Z3 = H * Z1 * Z2 % p
    return (X3, Y3, Z3)


def point_add(curve: Curve, P: Point, Q: Point) -> Point:
    return _from_jacobian(curve, _jadd(curve, _to_jacobian(P), _to_jacobian(Q)))


def point_neg(curve: Curve, P: Point) -> Point:
    if P is None:
        return None
    return (P[0], (-P[1]) % curve.p)


def scalar_mul(curve: Curve, k: int, P: Point) -> Point:
    k %= curve.q
    if k == 0 or P is None:
        return None
    R = (1, 1, 0)
    J = _to_jacobian(P)
    for bit in bin(k)[2:]:
        R = _jdouble(curve, R)
        if bit == "1":
            R = _jadd(curve, R, J)
    return _from_jacobian(curve, R)


def base_mul(curve: Curve, k: int) -> Point:
    return scalar_mul(curve, k, curve.G)


def double_mul(curve: Curve, u: int, v: int, Q: Point) -> Point:
    """Return ``u*G + v*Q`` with a single shared doubling chain."""
    u %= curve.q
    v %= curve.q
    G = _to_jacobian(curve.G)
    Qj = _to_jacobian(Q)
    GQ = _jadd(curve, G, Qj)
    R = (1, 1, 0)
    for i in range(max(u.bit_length(), v.bit_length()) - 1, -1, -1):
        R = _jdouble(curve, R)
        bu = (u >> i) & 1
        bv = (v >> i) & 1
        if bu and bv:
            R = _jadd(curve, R, GQ)
        elif bu:
            R = _jadd(curve, R, G)
        elif bv:
            R = _jadd(curve, R, Qj)
    return _from_jacobian(curve, R)
