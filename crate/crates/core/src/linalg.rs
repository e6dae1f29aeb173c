//! Small dense complex linear-algebra helpers shared by the dynamics, channel
//! and benchmarking code. Density matrices are vectorized column-major
//! (column stacking), so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use nalgebra::{Complex, DMatrix, DVector, Matrix2};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Largest absolute entry.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max |U†U − I|` over entries.
pub fn unitarity_error(u: &CMat) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - CMat::identity(n, n)))
}

pub fn vectorize(rho: &CMat) -> CVec {
    CVec::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &CVec, d: usize) -> CMat {
    CMat::from_column_slice(d, d, v.as_slice())
}

/// Superoperator of `ρ ↦ U ρ U†`.
pub fn unitary_superop(u: &CMat) -> CMat {
    kron(&u.conjugate(), u)
}

/// Superoperator generator of `ρ ↦ −i[H, ρ]`.
pub fn commutator_generator(h: &CMat) -> CMat {
    let d = h.nrows();
    let id = CMat::identity(d, d);
    (kron(&id, h) - kron(&h.transpose(), &id)) * (-I)
}

/// Superoperator generator of the dissipator `D[L]ρ = LρL† − ½{L†L, ρ}`.
pub fn dissipator_generator(l: &CMat) -> CMat {
    let d = l.nrows();
    let id = CMat::identity(d, d);
    let ldl = l.adjoint() * l;
    kron(&l.conjugate(), l) - (kron(&id, &ldl) + kron(&ldl.transpose(), &id)) * re(0.5)
}

/// `|a⟩⟨b|` in dimension `d`.
pub fn ket_bra(d: usize, a: usize, b: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(a, b)] = re(1.0);
    m
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().sum()
}

/// Embed a 2×2 matrix into the top-left corner of a `d × d` zero matrix.
pub fn embed2(m: &Matrix2<C64>, d: usize) -> CMat {
    let mut out = CMat::zeros(d, d);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = m[(i, j)];
        }
    }
    out
}

/// Pauli matrices in the order I, X, Y, Z.
pub fn paulis() -> [Matrix2<C64>; 4] {
    let o = re(0.0);
    let l = re(1.0);
    [
        Matrix2::new(l, o, o, l),
        Matrix2::new(o, l, l, o),
        Matrix2::new(o, -I, I, o),
        Matrix2::new(l, o, o, -l),
    ]
}

/// Phase-insensitive overlap `|Tr(U†V)| / 2` of two 2×2 unitaries.
pub fn phase_free_overlap(u: &Matrix2<C64>, v: &Matrix2<C64>) -> f64 {
    (u.adjoint() * v).trace().norm() / 2.0
}

/// Rotation `exp(−i θ/2 (cos φ σx + sin φ σy))`.
pub fn xy_rotation(theta: f64, phi: f64) -> Matrix2<C64> {
    let (s, co) = (theta / 2.0).sin_cos();
    let off = |sign: f64| -I * s * C64::from_polar(1.0, sign * phi);
    Matrix2::new(re(co), off(-1.0), off(1.0), re(co))
}
