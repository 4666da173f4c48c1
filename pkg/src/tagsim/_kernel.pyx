# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled group arithmetic for the 224-bit beacon-key curve.

Same API as _kernel_pure; field elements are 4x64-bit limbs in Montgomery
form (R = 2^256), points are Jacobian with a = -3 formulas, fixed bases go
through 6-bit window tables normalized with one batched inversion.
"""

from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset

ctypedef unsigned long long u64

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"

NAME = "compiled"

# Python-visible domain parameters (match the pure backend's attributes).
P = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFF000000000000000000000001
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFF16A2E0B8F03E13DD29455C5C2A3D
B = 0xB4050A850C04B3ABF54132565044B0B7D7BFD8BA270B39432355FFB4
GX = 0xB70E0CBD6BB4BF7F321390B94A03C1D356C21122343280D6115C1D21
GY = 0xBD376388B5F723FB4C22DFE6CD4375A05A07476444D5819985007E34

DEF WINDOW = 6
DEF DIGITS = 38          # ceil(224 / 6)
DEF ROWLEN = 63          # nonzero digit values per window

cdef u64 PL[4]           # modulus limbs, little-endian
cdef u64 R2[4]           # 2^512 mod p (to-Montgomery factor)
cdef u64 ONE_M[4]        # 1 in Montgomery form (R mod p)
cdef u64 ONE_PLAIN[4]    # literal 1 (for leaving Montgomery form)
cdef u64 B_M[4]          # curve b in Montgomery form
cdef u64 THREE_M[4]      # 3 in Montgomery form
cdef u64 INV             # -p^-1 mod 2^64
cdef u64 GX_M[4]
cdef u64 GY_M[4]

cdef object _N_INT = N


cdef void _int_to_limbs(object v, u64* out):
    cdef int i
    for i in range(4):
        out[i] = <u64>((v >> (64 * i)) & 0xFFFFFFFFFFFFFFFF)


cdef object _limbs_to_int(const u64* a):
    return (int(a[0]) | (int(a[1]) << 64) | (int(a[2]) << 128)
            | (int(a[3]) << 192))


# ---------------------------------------------------------------- field ops

cdef inline void mont_mul(u64* r, const u64* a, const u64* b) noexcept nogil:
    cdef u64 t0 = 0, t1 = 0, t2 = 0, t3 = 0, t4 = 0, t5 = 0
    cdef u64 carry, m, ai
    cdef u128 c
    cdef int i
    for i in range(4):
        ai = a[i]
        c = <u128>t0 + <u128>ai * b[0]; t0 = <u64>c; carry = <u64>(c >> 64)
        c = <u128>t1 + <u128>ai * b[1] + carry; t1 = <u64>c; carry = <u64>(c >> 64)
        c = <u128>t2 + <u128>ai * b[2] + carry; t2 = <u64>c; carry = <u64>(c >> 64)
        c = <u128>t3 + <u128>ai * b[3] + carry; t3 = <u64>c; carry = <u64>(c >> 64)
        c = <u128>t4 + carry; t4 = <u64>c; t5 = t5 + <u64>(c >> 64)
        m = t0 * INV
        c = <u128>t0 + <u128>m * PL[0]; carry = <u64>(c >> 64)
        c = <u128>t1 + <u128>m * PL[1] + carry; t0 = <u64>c; carry = <u64>(c >> 64)
        c = <u128>t2 + <u128>m * PL[2] + carry; t1 = <u64>c; carry = <u64>(c >> 64)
        c = <u128>t3 + <u128>m * PL[3] + carry; t2 = <u64>c; carry = <u64>(c >> 64)
        c = <u128>t4 + carry; t3 = <u64>c; carry = <u64>(c >> 64)
        t4 = t5 + carry
        t5 = 0
    # at most one conditional subtraction needed (result < 2p)
    cdef u64 b0, b1, b2, b3
    cdef u128 d
    cdef u64 borrow
    d = <u128>t0 - PL[0]; b0 = <u64>d; borrow = 1 if (d >> 64) else 0
    d = <u128>t1 - PL[1] - borrow; b1 = <u64>d; borrow = 1 if (d >> 64) else 0
    d = <u128>t2 - PL[2] - borrow; b2 = <u64>d; borrow = 1 if (d >> 64) else 0
    d = <u128>t3 - PL[3] - borrow; b3 = <u64>d; borrow = 1 if (d >> 64) else 0
    if t4 or not borrow:
        r[0] = b0; r[1] = b1; r[2] = b2; r[3] = b3
    else:
        r[0] = t0; r[1] = t1; r[2] = t2; r[3] = t3


cdef inline void mont_sqr(u64* r, const u64* a) noexcept nogil:
    mont_mul(r, a, a)


cdef inline bint _geq_p(const u64* a) noexcept nogil:
    cdef int i
    for i in range(3, -1, -1):
        if a[i] > PL[i]:
            return 1
        if a[i] < PL[i]:
            return 0
    return 1


cdef inline void fadd(u64* r, const u64* a, const u64* b) noexcept nogil:
    cdef u128 c = 0
    cdef int i
    for i in range(4):
        c = c + a[i] + b[i]
        r[i] = <u64>c
        c = c >> 64
    # a, b < p < 2^224 so no carry out of limb 3; reduce once if needed
    if _geq_p(r):
        c = 0
        for i in range(4):
            c = <u128>r[i] - PL[i] - <u64>c
            r[i] = <u64>c
            c = 1 if (c >> 64) else 0


cdef inline void fsub(u64* r, const u64* a, const u64* b) noexcept nogil:
    cdef u128 c = 0
    cdef int i
    cdef u64 borrow = 0
    for i in range(4):
        c = <u128>a[i] - b[i] - borrow
        r[i] = <u64>c
        borrow = 1 if (c >> 64) else 0
    if borrow:
        c = 0
        for i in range(4):
            c = c + r[i] + PL[i]
            r[i] = <u64>c
            c = c >> 64


cdef inline void fdbl(u64* r, const u64* a) noexcept nogil:
    fadd(r, a, a)


cdef inline bint fis_zero(const u64* a) noexcept nogil:
    return (a[0] | a[1] | a[2] | a[3]) == 0


cdef void finv(u64* r, const u64* a) noexcept nogil:
    # Fermat: a^(p-2). p-2 is all-ones over 224 bits except bit 96.
    cdef u64 acc[4]
    cdef int bit
    memcpy(acc, a, 32)
    for bit in range(222, -1, -1):
        mont_sqr(acc, acc)
        if bit != 96:
            mont_mul(acc, acc, a)
    memcpy(r, acc, 32)


cdef void to_mont(u64* r, const u64* a) noexcept nogil:
    mont_mul(r, a, R2)


cdef void from_mont(u64* r, const u64* a) noexcept nogil:
    mont_mul(r, a, ONE_PLAIN)


# ------------------------------------------------------------- point ops
# Jacobian point = u64[12]: X (0..4), Y (4..8), Z (8..12); Z == 0 is infinity.

cdef void jdbl(u64* o, const u64* p) noexcept nogil:
    cdef u64 delta[4]
    cdef u64 gamma[4]
    cdef u64 beta[4]
    cdef u64 alpha[4]
    cdef u64 t[4]
    cdef u64 t2[4]
    cdef u64 x3[4]
    cdef u64 y3[4]
    cdef u64 z3[4]
    if fis_zero(p + 8) or fis_zero(p + 4):
        memset(o, 0, 96)
        return
    mont_sqr(delta, p + 8)
    mont_sqr(gamma, p + 4)
    mont_mul(beta, p, gamma)
    fsub(t, p, delta)
    fadd(t2, p, delta)
    mont_mul(alpha, t, t2)
    fadd(t, alpha, alpha)
    fadd(alpha, t, alpha)                 # alpha = 3 (X - d)(X + d)
    mont_sqr(x3, alpha)
    fdbl(t, beta); fdbl(t, t); fdbl(t, t)  # 8 beta
    fsub(x3, x3, t)
    fadd(z3, p + 4, p + 8)
    mont_sqr(z3, z3)
    fsub(z3, z3, gamma)
    fsub(z3, z3, delta)
    fdbl(t, beta); fdbl(t, t)             # 4 beta
    fsub(t, t, x3)
    mont_mul(y3, alpha, t)
    mont_sqr(t, gamma)
    fdbl(t, t); fdbl(t, t); fdbl(t, t)    # 8 gamma^2
    fsub(y3, y3, t)
    memcpy(o, x3, 32); memcpy(o + 4, y3, 32); memcpy(o + 8, z3, 32)


cdef void jadd(u64* o, const u64* p, const u64* q) noexcept nogil:
    cdef u64 z1z1[4]
    cdef u64 z2z2[4]
    cdef u64 u1[4]
    cdef u64 u2[4]
    cdef u64 s1[4]
    cdef u64 s2[4]
    cdef u64 h[4]
    cdef u64 i4[4]
    cdef u64 j[4]
    cdef u64 rr[4]
    cdef u64 v[4]
    cdef u64 t[4]
    cdef u64 x3[4]
    cdef u64 y3[4]
    cdef u64 z3[4]
    if fis_zero(p + 8):
        memcpy(o, q, 96)
        return
    if fis_zero(q + 8):
        memcpy(o, p, 96)
        return
    mont_sqr(z1z1, p + 8)
    mont_sqr(z2z2, q + 8)
    mont_mul(u1, p, z2z2)
    mont_mul(u2, q, z1z1)
    mont_mul(t, q + 8, z2z2)
    mont_mul(s1, p + 4, t)
    mont_mul(t, p + 8, z1z1)
    mont_mul(s2, q + 4, t)
    fsub(h, u2, u1)
    fsub(rr, s2, s1)
    fdbl(rr, rr)
    if fis_zero(h):
        if fis_zero(rr):
            jdbl(o, p)
        else:
            memset(o, 0, 96)
        return
    fdbl(t, h)
    mont_sqr(i4, t)                       # (2H)^2
    mont_mul(j, h, i4)
    mont_mul(v, u1, i4)
    mont_sqr(x3, rr)
    fsub(x3, x3, j)
    fdbl(t, v)
    fsub(x3, x3, t)
    fsub(t, v, x3)
    mont_mul(y3, rr, t)
    mont_mul(t, s1, j)
    fdbl(t, t)
    fsub(y3, y3, t)
    fadd(z3, p + 8, q + 8)
    mont_sqr(z3, z3)
    fsub(z3, z3, z1z1)
    fsub(z3, z3, z2z2)
    mont_mul(z3, z3, h)
    memcpy(o, x3, 32); memcpy(o + 4, y3, 32); memcpy(o + 8, z3, 32)


cdef void jadd_affine(u64* o, const u64* p, const u64* ax, const u64* ay) noexcept nogil:
    # mixed add, second operand affine (Z = 1, Montgomery form)
    cdef u64 z1z1[4]
    cdef u64 u2[4]
    cdef u64 s2[4]
    cdef u64 h[4]
    cdef u64 hh[4]
    cdef u64 i4[4]
    cdef u64 j[4]
    cdef u64 rr[4]
    cdef u64 v[4]
    cdef u64 t[4]
    cdef u64 x3[4]
    cdef u64 y3[4]
    cdef u64 z3[4]
    if fis_zero(p + 8):
        memcpy(o, ax, 32); memcpy(o + 4, ay, 32)
        memcpy(o + 8, ONE_M, 32)
        return
    mont_sqr(z1z1, p + 8)
    mont_mul(u2, ax, z1z1)
    mont_mul(t, p + 8, z1z1)
    mont_mul(s2, ay, t)
    fsub(h, u2, p)
    fsub(rr, s2, p + 4)
    fdbl(rr, rr)
    if fis_zero(h):
        if fis_zero(rr):
            jdbl(o, p)
        else:
            memset(o, 0, 96)
        return
    mont_sqr(hh, h)
    fdbl(i4, hh); fdbl(i4, i4)            # 4 H^2
    mont_mul(j, h, i4)
    mont_mul(v, p, i4)
    mont_sqr(x3, rr)
    fsub(x3, x3, j)
    fdbl(t, v)
    fsub(x3, x3, t)
    fsub(t, v, x3)
    mont_mul(y3, rr, t)
    mont_mul(t, p + 4, j)
    fdbl(t, t)
    fsub(y3, y3, t)
    fadd(z3, p + 8, h)
    mont_sqr(z3, z3)
    fsub(z3, z3, z1z1)
    fsub(z3, z3, hh)
    memcpy(o, x3, 32); memcpy(o + 4, y3, 32); memcpy(o + 8, z3, 32)


cdef void j_to_affine(const u64* p, u64* ox, u64* oy) noexcept nogil:
    # caller guarantees Z != 0; outputs leave Montgomery form
    cdef u64 zi[4]
    cdef u64 zi2[4]
    cdef u64 t[4]
    finv(zi, p + 8)
    mont_sqr(zi2, zi)
    mont_mul(t, p, zi2)
    from_mont(ox, t)
    mont_mul(zi2, zi2, zi)
    mont_mul(t, p + 4, zi2)
    from_mont(oy, t)


cdef bint _on_curve_m(const u64* xm, const u64* ym) noexcept nogil:
    cdef u64 lhs[4]
    cdef u64 rhs[4]
    cdef u64 t[4]
    mont_sqr(lhs, ym)
    mont_sqr(rhs, xm)
    mont_mul(rhs, rhs, xm)
    mont_mul(t, THREE_M, xm)
    fsub(rhs, rhs, t)
    fadd(rhs, rhs, B_M)
    fsub(lhs, lhs, rhs)
    return fis_zero(lhs)


# ---------------------------------------------------------- scalar helpers

cdef void _scalar_bytes(object k, unsigned char* out28):
    kb = (k % _N_INT).to_bytes(28, "little")
    cdef const unsigned char[:] view = kb
    memcpy(out28, &view[0], 28)


cdef inline int _digit6(const unsigned char* kb, int w) noexcept nogil:
    cdef int bitpos = 6 * w
    cdef int byi = bitpos >> 3
    cdef int sh = bitpos & 7
    cdef unsigned int v = kb[byi]
    if byi + 1 < 28:
        v = v | (<unsigned int>kb[byi + 1] << 8)
    return <int>((v >> sh) & 63)


# ------------------------------------------------------------------ tables

cdef void _normalize_into(u64* out, u64* jac, u64* prefix, int count) noexcept nogil:
    # batched inversion of all Z; out receives affine (x, y) pairs
    cdef int i
    cdef u64 inv[4]
    cdef u64 zi[4]
    cdef u64 zi2[4]
    cdef u64 t[4]
    memcpy(prefix, ONE_M, 32)
    for i in range(count):
        mont_mul(prefix + (i + 1) * 4, prefix + i * 4, jac + i * 12 + 8)
    finv(inv, prefix + count * 4)
    for i in range(count - 1, -1, -1):
        mont_mul(zi, inv, prefix + i * 4)
        mont_mul(inv, inv, jac + i * 12 + 8)
        mont_sqr(zi2, zi)
        mont_mul(out + i * 8, jac + i * 12, zi2)
        mont_mul(t, zi2, zi)
        mont_mul(out + i * 8 + 4, jac + i * 12 + 4, t)


cdef class Table:
    """Window table of affine (Montgomery-form) multiples of a fixed base."""

    cdef u64* data           # DIGITS * ROWLEN * 8 u64
    cdef readonly object base

    def __cinit__(self, x, y):
        self.data = NULL
        xi = int(x); yi = int(y)
        if not is_on_curve(xi, yi):
            raise ValueError("table base must be on the curve")
        self.base = (xi, yi)
        self.data = <u64*>malloc(DIGITS * ROWLEN * 8 * sizeof(u64))
        if self.data == NULL:
            raise MemoryError()
        cdef u64* jac = <u64*>malloc(DIGITS * ROWLEN * 12 * sizeof(u64))
        if jac == NULL:
            free(self.data); self.data = NULL
            raise MemoryError()
        cdef u64 base_pt[12]
        cdef u64 tmp[4]
        _int_to_limbs(xi, tmp); to_mont(base_pt, tmp)
        _int_to_limbs(yi, tmp); to_mont(base_pt + 4, tmp)
        memcpy(base_pt + 8, ONE_M, 32)
        cdef u64* prefix = <u64*>malloc((DIGITS * ROWLEN + 1) * 4 * sizeof(u64))
        if prefix == NULL:
            free(jac); free(self.data); self.data = NULL
            raise MemoryError()
        cdef int w, e, i
        cdef u64* row
        with nogil:
            for w in range(DIGITS):
                row = jac + w * ROWLEN * 12
                memcpy(row, base_pt, 96)
                for e in range(1, ROWLEN):
                    jadd(row + e * 12, row + (e - 1) * 12, base_pt)
                for i in range(WINDOW):
                    jdbl(base_pt, base_pt)
            _normalize_into(self.data, jac, prefix, DIGITS * ROWLEN)
        free(prefix)
        free(jac)

    def __dealloc__(self):
        if self.data != NULL:
            free(self.data)


cdef void _table_mult_jac(const u64* tdata, const unsigned char* kb, u64* out) noexcept nogil:
    cdef int w, d
    memset(out, 0, 96)
    for w in range(DIGITS):
        d = _digit6(kb, w)
        if d:
            jadd_affine(out, out, tdata + (w * ROWLEN + d - 1) * 8,
                        tdata + (w * ROWLEN + d - 1) * 8 + 4)


cdef void _scalar_mult_jac(const u64* xm, const u64* ym,
                           const unsigned char* kb, u64* out) noexcept nogil:
    # 4-bit window over a 15-entry Jacobian multiples table
    cdef u64 tbl[15 * 12]
    cdef int i, shift, digit
    cdef bint started = 0
    memcpy(tbl, xm, 32); memcpy(tbl + 4, ym, 32); memcpy(tbl + 8, ONE_M, 32)
    for i in range(1, 15):
        jadd_affine(tbl + i * 12, tbl + (i - 1) * 12, xm, ym)
    memset(out, 0, 96)
    for shift in range(220, -1, -4):
        if started:
            jdbl(out, out); jdbl(out, out); jdbl(out, out); jdbl(out, out)
        digit = (kb[shift >> 3] >> (shift & 7)) & 15
        if digit:
            jadd(out, out, tbl + (digit - 1) * 12)
            started = 1


# ------------------------------------------------------------- public API

def is_on_curve(x, y):
    xi = int(x); yi = int(y)
    if not (0 <= xi < P and 0 <= yi < P):
        return False
    cdef u64 t[4]
    cdef u64 xm[4]
    cdef u64 ym[4]
    _int_to_limbs(xi, t); to_mont(xm, t)
    _int_to_limbs(yi, t); to_mont(ym, t)
    return bool(_on_curve_m(xm, ym))


cdef object _jac_out(u64* jac):
    cdef u64 ox[4]
    cdef u64 oy[4]
    if fis_zero(jac + 8):
        return None
    j_to_affine(jac, ox, oy)
    return (_limbs_to_int(ox), _limbs_to_int(oy))


def make_table(x, y):
    return Table(x, y)


def table_mult(Table tab, k):
    cdef unsigned char kb[28]
    cdef u64 acc[12]
    _scalar_bytes(k, kb)
    _table_mult_jac(tab.data, kb, acc)
    return _jac_out(acc)


cdef Table _G_TABLE = None


cdef Table _g_table():
    global _G_TABLE
    if _G_TABLE is None:
        _G_TABLE = Table(GX, GY)
    return _G_TABLE


def base_mult(k):
    return table_mult(_g_table(), k)


def scalar_mult(x, y, k):
    if not is_on_curve(x, y):
        raise ValueError("point not on curve")
    cdef u64 t[4]
    cdef u64 xm[4]
    cdef u64 ym[4]
    cdef u64 acc[12]
    cdef unsigned char kb[28]
    _int_to_limbs(int(x), t); to_mont(xm, t)
    _int_to_limbs(int(y), t); to_mont(ym, t)
    _scalar_bytes(k, kb)
    _scalar_mult_jac(xm, ym, kb, acc)
    return _jac_out(acc)


def mult_add_base(u, x, y, v):
    """u * (x, y) + v * G in one normalization."""
    if not is_on_curve(x, y):
        raise ValueError("point not on curve")
    cdef u64 t[4]
    cdef u64 xm[4]
    cdef u64 ym[4]
    cdef u64 a1[12]
    cdef u64 a2[12]
    cdef unsigned char ub[28]
    cdef unsigned char vb[28]
    _int_to_limbs(int(x), t); to_mont(xm, t)
    _int_to_limbs(int(y), t); to_mont(ym, t)
    _scalar_bytes(u, ub)
    _scalar_bytes(v, vb)
    cdef u64* gdata = _g_table().data
    with nogil:
        _scalar_mult_jac(xm, ym, ub, a1)
        _table_mult_jac(gdata, vb, a2)
        jadd(a1, a1, a2)
    return _jac_out(a1)


def ecies_pair(e, Table tab):
    """(e * G, e * table base) with one shared normalization."""
    cdef unsigned char kb[28]
    cdef u64 r_j[12]
    cdef u64 s_j[12]
    cdef u64 zz[4]
    cdef u64 inv[4]
    cdef u64 z1i[4]
    cdef u64 z2i[4]
    cdef u64 zi2[4]
    cdef u64 t[4]
    cdef u64 rx[4]
    cdef u64 ry[4]
    cdef u64 sx[4]
    cdef u64 sy[4]
    _scalar_bytes(e, kb)
    cdef u64* gdata = _g_table().data
    cdef u64* tdata = tab.data
    with nogil:
        _table_mult_jac(gdata, kb, r_j)
        _table_mult_jac(tdata, kb, s_j)
    if fis_zero(r_j + 8) or fis_zero(s_j + 8):
        raise ValueError("scalar must be in [1, N)")
    with nogil:
        mont_mul(zz, r_j + 8, s_j + 8)
        finv(inv, zz)
        mont_mul(z1i, inv, s_j + 8)
        mont_mul(z2i, inv, r_j + 8)
        mont_sqr(zi2, z1i)
        mont_mul(t, r_j, zi2); from_mont(rx, t)
        mont_mul(zi2, zi2, z1i)
        mont_mul(t, r_j + 4, zi2); from_mont(ry, t)
        mont_sqr(zi2, z2i)
        mont_mul(t, s_j, zi2); from_mont(sx, t)
        mont_mul(zi2, zi2, z2i)
        mont_mul(t, s_j + 4, zi2); from_mont(sy, t)
    return (_limbs_to_int(rx), _limbs_to_int(ry),
            _limbs_to_int(sx), _limbs_to_int(sy))


def point_add(ax, ay, bx, by):
    cdef u64 t[4]
    cdef u64 p1[12]
    cdef u64 p2[12]
    _int_to_limbs(int(ax), t); to_mont(p1, t)
    _int_to_limbs(int(ay), t); to_mont(p1 + 4, t)
    memcpy(p1 + 8, ONE_M, 32)
    _int_to_limbs(int(bx), t); to_mont(p2, t)
    _int_to_limbs(int(by), t); to_mont(p2 + 4, t)
    memcpy(p2 + 8, ONE_M, 32)
    jadd(p1, p1, p2)
    return _jac_out(p1)


# ----------------------------------------------------------- module init

cdef void _init() except *:
    cdef u64 t[4]
    _int_to_limbs(P, PL)
    _int_to_limbs((1 << 512) % P, R2)
    global INV
    INV = <u64>((-pow(P, -1, 1 << 64)) % (1 << 64))
    _int_to_limbs(1, ONE_PLAIN)
    to_mont(ONE_M, ONE_PLAIN)
    _int_to_limbs(B, t); to_mont(B_M, t)
    _int_to_limbs(3, t); to_mont(THREE_M, t)
    _int_to_limbs(GX, t); to_mont(GX_M, t)
    _int_to_limbs(GY, t); to_mont(GY_M, t)

_init()
