"""Pure-Python group arithmetic for the 224-bit beacon-key curve.

Reference backend: correct everywhere Python runs, roughly two orders of
magnitude slower than the compiled twin in _kernel.pyx. Both expose the same
module-level API and are selected through tagsim.backend.

Internally points live in Jacobian coordinates (X, Y, Z) with the curve's
a = -3 speedups; None stands for the point at infinity in the affine API.
"""

from __future__ import annotations

NAME = "pure"

P = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFF000000000000000000000001
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFF16A2E0B8F03E13DD29455C5C2A3D
B = 0xB4050A850C04B3ABF54132565044B0B7D7BFD8BA270B39432355FFB4
GX = 0xB70E0CBD6BB4BF7F321390B94A03C1D356C21122343280D6115C1D21
GY = 0xBD376388B5F723FB4C22DFE6CD4375A05A07476444D5819985007E34

_WINDOW = 6
_DIGITS = (224 + _WINDOW - 1) // _WINDOW  # 38

# Jacobian points are (X, Y, Z) tuples; Z == 0 encodes infinity.
_INF = (1, 1, 0)


def is_on_curve(x: int, y: int) -> bool:
    if not (0 <= x < P and 0 <= y < P):
        return False
    return (y * y - (x * x * x - 3 * x + B)) % P == 0


def _jdbl(pt):
    X1, Y1, Z1 = pt
    if Z1 == 0 or Y1 == 0:
        return _INF
    delta = Z1 * Z1 % P
    gamma = Y1 * Y1 % P
    beta = X1 * gamma % P
    alpha = 3 * (X1 - delta) * (X1 + delta) % P
    X3 = (alpha * alpha - 8 * beta) % P
    Z3 = ((Y1 + Z1) * (Y1 + Z1) - gamma - delta) % P
    Y3 = (alpha * (4 * beta - X3) - 8 * gamma * gamma) % P
    return (X3, Y3, Z3)


def _jadd(p1, p2):
    X1, Y1, Z1 = p1
    X2, Y2, Z2 = p2
    if Z1 == 0:
        return p2
    if Z2 == 0:
        return p1
    Z1Z1 = Z1 * Z1 % P
    Z2Z2 = Z2 * Z2 % P
    U1 = X1 * Z2Z2 % P
    U2 = X2 * Z1Z1 % P
    S1 = Y1 * Z2 * Z2Z2 % P
    S2 = Y2 * Z1 * Z1Z1 % P
    H = (U2 - U1) % P
    r = 2 * (S2 - S1) % P
    if H == 0:
        if r == 0:
            return _jdbl(p1)
        return _INF
    I = 4 * H * H % P
    J = H * I % P
    V = U1 * I % P
    X3 = (r * r - J - 2 * V) % P
    Y3 = (r * (V - X3) - 2 * S1 * J) % P
    Z3 = ((Z1 + Z2) * (Z1 + Z2) - Z1Z1 - Z2Z2) * H % P
    return (X3, Y3, Z3)


def _jadd_affine(p1, x2, y2):
    """p1 + (x2, y2) with the second point affine (Z2 = 1)."""
    X1, Y1, Z1 = p1
    if Z1 == 0:
        return (x2, y2, 1)
    Z1Z1 = Z1 * Z1 % P
    U2 = x2 * Z1Z1 % P
    S2 = y2 * Z1 * Z1Z1 % P
    H = (U2 - X1) % P
    r = 2 * (S2 - Y1) % P
    if H == 0:
        if r == 0:
            return _jdbl(p1)
        return _INF
    HH = H * H % P
    I = 4 * HH % P
    J = H * I % P
    V = X1 * I % P
    X3 = (r * r - J - 2 * V) % P
    Y3 = (r * (V - X3) - 2 * Y1 * J) % P
    Z3 = ((Z1 + H) * (Z1 + H) - Z1Z1 - HH) % P
    return (X3, Y3, Z3)


def _to_affine(pt):
    X, Y, Z = pt
    if Z == 0:
        return None
    zi = pow(Z, -1, P)
    zi2 = zi * zi % P
    return (X * zi2 % P, Y * zi2 * zi % P)


def _batch_affine(pts):
    """Normalize many Jacobian points with a single field inversion."""
    zs = [pt[2] for pt in pts]
    prefix = [1] * (len(pts) + 1)
    for i, z in enumerate(zs):
        prefix[i + 1] = prefix[i] * z % P
    inv = pow(prefix[-1], -1, P)
    out = [None] * len(pts)
    for i in range(len(pts) - 1, -1, -1):
        zi = inv * prefix[i] % P
        inv = inv * zs[i] % P
        zi2 = zi * zi % P
        out[i] = (pts[i][0] * zi2 % P, pts[i][1] * zi2 * zi % P)
    return out


class Table:
    """Fixed-base window table: _DIGITS rows of 63 affine multiples."""

    __slots__ = ("rows", "x", "y")

    def __init__(self, x: int, y: int):
        if not is_on_curve(x, y):
            raise ValueError("table base must be on the curve")
        self.x, self.y = x, y
        rows = []
        base = (x, y, 1)
        jac_entries = []
        for _ in range(_DIGITS):
            acc = base
            row = [acc]
            for _ in range(62):
                acc = _jadd(acc, base)
                row.append(acc)
            jac_entries.append(row)
            for _ in range(_WINDOW):
                base = _jdbl(base)
        flat = [e for row in jac_entries for e in row]
        normalized = _batch_affine(flat)
        self.rows = [normalized[i * 63:(i + 1) * 63] for i in range(_DIGITS)]


def make_table(x: int, y: int) -> Table:
    return Table(x, y)


def _table_mult_jac(tab: Table, k: int):
    k %= N
    acc = _INF
    for w in range(_DIGITS):
        digit = (k >> (w * _WINDOW)) & 63
        if digit:
            ax, ay = tab.rows[w][digit - 1]
            acc = _jadd_affine(acc, ax, ay)
    return acc


def table_mult(tab: Table, k: int):
    return _to_affine(_table_mult_jac(tab, k))


_G_TABLE: Table | None = None


def _g_table() -> Table:
    global _G_TABLE
    if _G_TABLE is None:
        _G_TABLE = Table(GX, GY)
    return _G_TABLE


def base_mult(k: int):
    return table_mult(_g_table(), k)


def _scalar_mult_jac(x: int, y: int, k: int):
    k %= N
    if k == 0:
        return _INF
    # 4-bit fixed window over a 15-entry odd+even multiples table
    tbl = [(x, y, 1)]
    for _ in range(14):
        tbl.append(_jadd_affine(tbl[-1], x, y))
    acc = _INF
    started = False
    for shift in range(220, -4, -4):
        if started:
            acc = _jdbl(_jdbl(_jdbl(_jdbl(acc))))
        digit = (k >> shift) & 15
        if digit:
            acc = _jadd(acc, tbl[digit - 1])
            started = True
    return acc


def scalar_mult(x: int, y: int, k: int):
    if not is_on_curve(x, y):
        raise ValueError("point not on curve")
    return _to_affine(_scalar_mult_jac(x, y, k))


def mult_add_base(u: int, x: int, y: int, v: int):
    """u * (x, y) + v * G in one normalization."""
    if not is_on_curve(x, y):
        raise ValueError("point not on curve")
    acc = _jadd(_scalar_mult_jac(x, y, u), _table_mult_jac(_g_table(), v))
    return _to_affine(acc)


def ecies_pair(e: int, tab: Table):
    """(e * G, e * table base) with one shared normalization.

    Returns (rx, ry, sx, sy); raises ValueError if either lands at infinity
    (impossible for 0 < e < N on order-N bases).
    """
    r_jac = _table_mult_jac(_g_table(), e)
    s_jac = _table_mult_jac(tab, e)
    if r_jac[2] == 0 or s_jac[2] == 0:
        raise ValueError("scalar must be in [1, N)")
    (rx, ry), (sx, sy) = _batch_affine([r_jac, s_jac])
    return rx, ry, sx, sy


def point_add(ax: int, ay: int, bx: int, by: int):
    return _to_affine(_jadd((ax, ay, 1), (bx, by, 1)))
