//! Binary extension fields GF(2^8) and GF(2^16), plus the small amount of
//! linear algebra the packet-level engines need.

use std::fmt::Debug;
use std::hash::Hash;
use std::ops::{Add, AddAssign, Mul};
use std::sync::LazyLock;

use rand::Rng;

/// `x^8 + x^4 + x^3 + x^2 + 1`
pub const POLY_GF256: u32 = 0x11D;
/// `x^16 + x^12 + x^3 + x + 1`
pub const POLY_GF65536: u32 = 0x1100B;

pub trait FieldElement:
    Copy + Eq + Hash + Debug + Default + Send + Sync + Add<Output = Self> + AddAssign + Mul<Output = Self> + 'static
{
    /// Field size is `2^BITS`.
    const BITS: u32;
    const ZERO: Self;
    const ONE: Self;

    fn from_raw(v: u32) -> Self;
    fn raw(self) -> u32;
    fn inv(self) -> Option<Self>;

    fn is_zero(self) -> bool {
        self == Self::ZERO
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

struct LogTables {
    exp: [u8; 510],
    log: [u8; 256],
}

static GF256_TABLES: LazyLock<LogTables> = LazyLock::new(|| {
    let mut exp = [0u8; 510];
    let mut log = [0u8; 256];
    let mut x: u32 = 1;
    for i in 0..255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= POLY_GF256;
        }
    }
    for i in 255..510 {
        exp[i] = exp[i - 255];
    }
    LogTables { exp, log }
});

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Gf256(pub u8);

impl Debug for Gf256 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#04x}", self.0)
    }
}

impl Add for Gf256 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Gf256(self.0 ^ rhs.0)
    }
}

impl AddAssign for Gf256 {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.0 ^= rhs.0;
    }
}

impl Mul for Gf256 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        if self.0 == 0 || rhs.0 == 0 {
            return Gf256(0);
        }
        let t = &*GF256_TABLES;
        Gf256(t.exp[t.log[self.0 as usize] as usize + t.log[rhs.0 as usize] as usize])
    }
}

impl FieldElement for Gf256 {
    const BITS: u32 = 8;
    const ZERO: Self = Gf256(0);
    const ONE: Self = Gf256(1);

    fn from_raw(v: u32) -> Self {
        Gf256(v as u8)
    }

    fn raw(self) -> u32 {
        self.0 as u32
    }

    fn inv(self) -> Option<Self> {
        if self.0 == 0 {
            return None;
        }
        let t = &*GF256_TABLES;
        Some(Gf256(t.exp[(255 - t.log[self.0 as usize] as usize) % 255]))
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Gf256(rng.gen())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct Gf65536(pub u16);

impl Debug for Gf65536 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#06x}", self.0)
    }
}

impl Add for Gf65536 {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Gf65536(self.0 ^ rhs.0)
    }
}

impl AddAssign for Gf65536 {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.0 ^= rhs.0;
    }
}

struct LogTables16 {
    exp: Vec<u16>,
    log: Vec<u16>,
}

/// `x` generates the multiplicative group mod `POLY_GF65536`.
static GF65536_TABLES: LazyLock<LogTables16> = LazyLock::new(|| {
    let mut exp = vec![0u16; 2 * 65535];
    let mut log = vec![0u16; 65536];
    let mut x: u32 = 1;
    for i in 0..65535 {
        exp[i] = x as u16;
        log[x as usize] = i as u16;
        x <<= 1;
        if x & 0x10000 != 0 {
            x ^= POLY_GF65536;
        }
    }
    for i in 65535..2 * 65535 {
        exp[i] = exp[i - 65535];
    }
    LogTables16 { exp, log }
});

impl Mul for Gf65536 {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        if self.0 == 0 || rhs.0 == 0 {
            return Gf65536(0);
        }
        let t = &*GF65536_TABLES;
        Gf65536(t.exp[t.log[self.0 as usize] as usize + t.log[rhs.0 as usize] as usize])
    }
}

impl FieldElement for Gf65536 {
    const BITS: u32 = 16;
    const ZERO: Self = Gf65536(0);
    const ONE: Self = Gf65536(1);

    fn from_raw(v: u32) -> Self {
        Gf65536(v as u16)
    }

    fn raw(self) -> u32 {
        self.0 as u32
    }

    fn inv(self) -> Option<Self> {
        if self.0 == 0 {
            return None;
        }
        let t = &*GF65536_TABLES;
        Some(Gf65536(t.exp[(65535 - t.log[self.0 as usize] as usize) % 65535]))
    }

    fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Gf65536(rng.gen())
    }
}

pub fn gf_mul<F: FieldElement>(a: F, b: F) -> F {
    a * b
}

/// A uniformly random vector of `len` field elements.
pub fn random_vector<F: FieldElement, R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<F> {
    (0..len).map(|_| F::random(rng)).collect()
}

/// `dst += c * src`
#[inline]
pub fn axpy<F: FieldElement>(dst: &mut [F], c: F, src: &[F]) {
    if c.is_zero() {
        return;
    }
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += c * s;
    }
}

/// Dense row-major matrix of coefficient vectors; every row has `cols` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoeffMatrix<F> {
    cols: usize,
    data: Vec<F>,
}

impl<F: FieldElement> CoeffMatrix<F> {
    pub fn new(cols: usize) -> Self {
        CoeffMatrix { cols, data: Vec::new() }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CoeffMatrix { cols, data: vec![F::ZERO; rows * cols] }
    }

    pub fn identity(k: usize) -> Self {
        let mut m = Self::zeros(k, k);
        for i in 0..k {
            m.data[i * k + i] = F::ONE;
        }
        m
    }

    pub fn from_rows<I, R>(cols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: AsRef<[F]>,
    {
        let mut m = Self::new(cols);
        for r in rows {
            m.push_row(r.as_ref());
        }
        m
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        if self.cols == 0 {
            0
        } else {
            self.data.len() / self.cols
        }
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn push_row(&mut self, row: &[F]) {
        assert_eq!(row.len(), self.cols, "row length must equal column count");
        self.data.extend_from_slice(row);
    }

    pub fn stacked(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        CoeffMatrix { cols: self.cols, data }
    }

    /// Row rank by Gaussian elimination on a copy.
    pub fn rank(&self) -> usize {
        let mut work = self.clone();
        work.eliminate_in_place().len()
    }

    /// Reduces to row echelon form in place; returns the pivot columns.
    /// Rows past the rank are zero afterwards.
    pub fn eliminate_in_place(&mut self) -> Vec<usize> {
        let rows = self.rows();
        let cols = self.cols;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(p) = (r..rows).find(|&i| !self.data[i * cols + c].is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..cols {
                    self.data.swap(p * cols + j, r * cols + j);
                }
            }
            let inv = self.data[r * cols + c].inv().expect("pivot is nonzero");
            for j in c..cols {
                self.data[r * cols + j] = self.data[r * cols + j] * inv;
            }
            let (head, tail) = self.data.split_at_mut((r + 1) * cols);
            let pivot_row = &head[r * cols..];
            for i in 0..rows - r - 1 {
                let row = &mut tail[i * cols..(i + 1) * cols];
                let f = row[c];
                axpy(&mut row[c..], f, &pivot_row[c..]);
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }
}

pub fn rank<F: FieldElement>(m: &CoeffMatrix<F>) -> usize {
    m.rank()
}

/// `dim(span A ∩ span B)` via `rank A + rank B - rank [A; B]`.
pub fn intersection_dim<F: FieldElement>(a: &CoeffMatrix<F>, b: &CoeffMatrix<F>) -> usize {
    a.rank() + b.rank() - a.stacked(b).rank()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Shift-and-add multiply with explicit polynomial long division,
    /// kept independent of the table and clmul code paths.
    fn reference_mul(a: u32, b: u32, poly: u32, bits: u32) -> u32 {
        let mut prod: u64 = 0;
        for i in 0..bits {
            if b >> i & 1 == 1 {
                prod ^= (a as u64) << i;
            }
        }
        for deg in (bits..2 * bits).rev() {
            if prod >> deg & 1 == 1 {
                prod ^= (poly as u64) << (deg - bits);
            }
        }
        prod as u32
    }

    #[test]
    fn mul_identities() {
        for x in 0..=255u8 {
            assert_eq!(Gf256(0) * Gf256(x), Gf256(0));
            assert_eq!(Gf256(1) * Gf256(x), Gf256(x));
        }
        assert_eq!(Gf65536(1) * Gf65536(0xBEEF), Gf65536(0xBEEF));
        assert_eq!(Gf65536(0) * Gf65536(0xBEEF), Gf65536(0));
    }

    #[test]
    fn gf256_known_product() {
        assert_eq!(reference_mul(0x02, 0x80, POLY_GF256, 8), 0x1D);
        assert_eq!(gf_mul(Gf256(0x02), Gf256(0x80)), Gf256(0x1D));
    }

    #[test]
    fn gf256_matches_reference_exhaustively() {
        for a in 0..256u32 {
            for b in 0..256u32 {
                assert_eq!((Gf256(a as u8) * Gf256(b as u8)).raw(), reference_mul(a, b, POLY_GF256, 8));
            }
        }
    }

    #[test]
    fn gf65536_matches_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100_000 {
            let (a, b): (u16, u16) = (rng.gen(), rng.gen());
            assert_eq!((Gf65536(a) * Gf65536(b)).raw(), reference_mul(a as u32, b as u32, POLY_GF65536, 16));
        }
    }

    #[test]
    fn x_generates_the_multiplicative_group() {
        let x = Gf65536(2);
        let mut p = x;
        let mut order = 1u32;
        while p != Gf65536::ONE {
            p = p * x;
            order += 1;
        }
        assert_eq!(order, 65535);
    }

    #[test]
    fn field_axioms_randomized() {
        fn check<F: FieldElement>(seed: u64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..100_000 {
                let (a, b, c) = (F::random(&mut rng), F::random(&mut rng), F::random(&mut rng));
                assert_eq!((a * b) * c, a * (b * c));
                assert_eq!(a * b, b * a);
                assert_eq!(a + b, b + a);
                assert_eq!((a + b) + c, a + (b + c));
                assert_eq!(a * (b + c), a * b + a * c);
                assert_eq!(a + a, F::ZERO);
                if !a.is_zero() {
                    assert_eq!(a * a.inv().unwrap(), F::ONE);
                }
            }
            assert_eq!(F::ZERO.inv(), None);
        }
        check::<Gf256>(1);
        check::<Gf65536>(2);
    }

    fn v(xs: &[u8]) -> Vec<Gf256> {
        xs.iter().map(|&x| Gf256(x)).collect()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(CoeffMatrix::<Gf256>::identity(7).rank(), 7);
        assert_eq!(CoeffMatrix::<Gf256>::zeros(4, 5).rank(), 0);
        let vrow = v(&[1, 7, 0, 3]);
        let two_v: Vec<Gf256> = vrow.iter().map(|&x| Gf256(2) * x).collect();
        let u = v(&[0, 1, 0, 0]);
        let m = CoeffMatrix::from_rows(4, [vrow.clone(), two_v.clone(), u.clone()]);
        assert_eq!(m.rank(), 2);
        // second elimination order
        let m2 = CoeffMatrix::from_rows(4, [u, two_v, vrow]);
        assert_eq!(m2.rank(), 2);
        let before = m.clone();
        let _ = m.rank();
        assert_eq!(m, before);
    }

    #[test]
    fn intersection_examples() {
        let e = |i: usize| {
            let mut r = vec![Gf256(0); 4];
            r[i] = Gf256(1);
            r
        };
        let a = CoeffMatrix::from_rows(4, [e(0), e(1)]);
        let b = CoeffMatrix::from_rows(4, [e(1), e(2)]);
        assert_eq!(intersection_dim(&a, &b), 1);
        assert_eq!(intersection_dim(&a, &a), 2);
        let c = CoeffMatrix::from_rows(4, [e(2), e(3)]);
        assert_eq!(intersection_dim(&a, &c), 0);
    }

    #[test]
    fn random_vector_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(random_vector::<Gf256, _>(0, &mut rng).is_empty());
        let a: Vec<Gf65536> = random_vector(32, &mut ChaCha8Rng::seed_from_u64(77));
        let b: Vec<Gf65536> = random_vector(32, &mut ChaCha8Rng::seed_from_u64(77));
        assert_eq!(a, b);
    }

    #[test]
    fn random_vector_is_uniform() {
        // 1e6 draws over 256 cells: expected 3906.25, sd ~62.4; allow 5 sd per cell.
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = [0u32; 256];
        for x in random_vector::<Gf256, _>(1_000_000, &mut rng) {
            counts[x.0 as usize] += 1;
        }
        let expected = 1_000_000.0 / 256.0;
        let sd = (1_000_000.0 * (1.0 / 256.0) * (255.0 / 256.0f64)).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() < 5.0 * sd, "{c}");
        }
    }

    fn matrix_strategy() -> impl Strategy<Value = (usize, Vec<Vec<u8>>)> {
        (1usize..6).prop_flat_map(|cols| {
            (Just(cols), prop::collection::vec(prop::collection::vec(prop_oneof![Just(0u8), any::<u8>()], cols), 0..7))
        })
    }

    proptest! {
        #[test]
        fn rank_invariant_under_permutation_and_scaling(
            (cols, rows) in matrix_strategy(),
            perm_seed in any::<u64>(),
            scales in prop::collection::vec(1u8..=255, 7),
        ) {
            use rand::seq::SliceRandom;
            let m = CoeffMatrix::from_rows(cols, rows.iter().map(|r| v(r)));
            let mut shuffled: Vec<Vec<Gf256>> = rows.iter().zip(&scales)
                .map(|(r, &s)| v(r).into_iter().map(|x| x * Gf256(s)).collect())
                .collect();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
            let m2 = CoeffMatrix::from_rows(cols, shuffled);
            prop_assert_eq!(m.rank(), m2.rank());
        }

        #[test]
        fn intersection_is_symmetric_and_bounded(
            (cols, a) in matrix_strategy(),
            b_seed in any::<u64>(),
            b_rows in 0usize..6,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(b_seed);
            let a = CoeffMatrix::from_rows(cols, a.iter().map(|r| v(r)));
            // Mix rows of A into B so intersections are non-trivial.
            let mut b = CoeffMatrix::<Gf256>::new(cols);
            for _ in 0..b_rows {
                let mut row: Vec<Gf256> = random_vector(cols, &mut rng);
                if a.rows() > 0 && rng.gen_bool(0.5) {
                    row = a.row(rng.gen_range(0..a.rows())).to_vec();
                }
                b.push_row(&row);
            }
            let ab = intersection_dim(&a, &b);
            prop_assert_eq!(ab, intersection_dim(&b, &a));
            prop_assert!(ab <= a.rank().min(b.rank()));
        }
    }
}
