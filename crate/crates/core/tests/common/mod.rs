#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use tdstab::quasipoly::CharacteristicFunction;
use tdstab::feedback::Plant;
use tdstab::quasipoly::TimeDelaySystem;
use tdstab::RealMatrix;

pub fn m(rows: &[&[f64]]) -> RealMatrix {
    RealMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

pub fn blockdiag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() + b.nrows();
    let mut out = DMatrix::zeros(n, n);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}

pub fn a11() -> RealMatrix {
    m(&[&[0.0, 1.0], &[-1.0, 1.0]])
}
pub fn b11() -> RealMatrix {
    m(&[&[0.0, 0.0], &[0.0, 1.0]])
}
pub fn a22_ex2() -> RealMatrix {
    m(&[&[0.0, 2.0], &[-1.0, 0.0]])
}
pub fn b22_ex2() -> RealMatrix {
    m(&[&[0.0, 1.0], &[0.0, 0.0]])
}
pub fn a22_ex3() -> RealMatrix {
    m(&[&[0.0, 0.0, -1.0], &[1.0, 0.0, 1.0], &[1.0, -1.0, 1.0]])
}
pub fn b22_ex3() -> RealMatrix {
    m(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0]])
}

/// Subsystem pairs as single-delay systems.
pub fn sub5() -> TimeDelaySystem {
    TimeDelaySystem::single_delay(a11(), b11()).unwrap()
}
pub fn sub6() -> TimeDelaySystem {
    TimeDelaySystem::single_delay(a22_ex2(), b22_ex2()).unwrap()
}
pub fn sub9() -> TimeDelaySystem {
    TimeDelaySystem::single_delay(a22_ex3(), b22_ex3()).unwrap()
}

pub fn t_ex2() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            -1.0, 11.0 / 3.0, 13.0 / 3.0, 0.0, //
            3f64.sqrt(), 1.6, 0.0, 1.25, //
            2.0 / 7.0, 0.0, 5.0 / 6.0, 8.0 / 3.0, //
            0.0, 2.25, 4.0 / 3.0, 2.0 / 3.0,
        ],
    )
}

pub fn t_ex3() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        5,
        5,
        &[
            0.125, 4.5, 2.0 / 3.0, 2.75, 0.0, //
            2f64.sqrt(), 0.75, 1.625, 0.0, 1.0 / 2f64.sqrt(), //
            3.0, 6.0 / 7.0, 0.0, 31.0 / 7.0, 1.0, //
            -1.0, 0.0, 2.0, 8.0 / 3.0, -2.0, //
            0.0, 3f64.sqrt(), -1.0, 2f64.sqrt(), 3.0 / 7.0,
        ],
    )
}

/// `T^-1 blockdiag T`, the full-precision system behind a printed example.
pub fn conjugated(t: &DMatrix<f64>, blocks: &DMatrix<f64>) -> RealMatrix {
    let ti = t.clone().try_inverse().unwrap();
    RealMatrix::new(ti * blocks * t).unwrap()
}

pub fn example2_exact() -> (RealMatrix, RealMatrix) {
    let t = t_ex2();
    (
        conjugated(&t, &blockdiag(&a11(), &a22_ex2())),
        conjugated(&t, &blockdiag(&b11(), &b22_ex2())),
    )
}

pub fn example3_exact() -> (RealMatrix, RealMatrix) {
    let t = t_ex3();
    (
        conjugated(&t, &blockdiag(&a11(), &a22_ex3())),
        conjugated(&t, &blockdiag(&b11(), &b22_ex3())),
    )
}

pub fn example2_printed() -> (RealMatrix, RealMatrix) {
    (
        m(&[
            &[3.2423, -1.4176, -2.7298, 4.6267],
            &[-1.0366, -0.9812, -0.7598, -3.2319],
            &[2.0250, 0.8723, 0.0129, 4.0908],
            &[-0.9802, 1.5668, 1.2885, -1.2741],
        ]),
        m(&[
            &[1.4104, 1.1252, -0.1052, 0.9652],
            &[-0.2045, -0.5965, -0.2415, -0.2683],
            &[0.4985, 0.7644, 0.1801, 0.4498],
            &[-0.3069, 0.4843, 0.4550, 0.0060],
        ]),
    )
}

pub fn example2_printed_e() -> DMatrix<f64> {
    DMatrix::from_row_slice(4, 2, &[0.3878, 0.8143, -0.2562, -0.1180, 0.5371, 0.2878, -0.2094, -0.1772])
}

pub fn example3_printed() -> (RealMatrix, RealMatrix) {
    (
        m(&[
            &[-14.6102, -4.9441, 11.3503, -11.5177, -11.9699],
            &[-3.9437, -1.0804, 3.4948, -3.3674, -3.2193],
            &[6.4695, 0.5153, -4.1521, 3.9784, 5.0394],
            &[6.0633, 2.1406, -4.6372, 5.0694, 4.8474],
            &[20.3590, 4.5468, -15.5102, 13.5751, 16.7733],
        ]),
        m(&[
            &[-11.1098, -3.6577, -2.2712, -13.4823, -4.0327],
            &[-3.1263, -1.0354, -0.6680, -3.7568, -1.1390],
            &[4.8695, 1.7361, 1.6197, 5.1076, 1.8581],
            &[4.4403, 1.4397, 0.8037, 5.5222, 1.5967],
            &[16.3449, 5.4846, 3.8268, 19.2118, 6.0034],
        ]),
    )
}

pub fn example3_printed_e() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        5,
        2,
        &[1.2775, -1.3977, 0.6036, -0.4111, -0.5536, 0.9967, -0.5480, 0.4946, -1.9230, 2.3550],
    )
}

pub fn example1() -> (RealMatrix, RealMatrix) {
    (
        m(&[&[1.0, 1.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 3.0, 1.0]]),
        m(&[&[0.0, 1.0, 0.0], &[0.0, 4.0, 0.0], &[2.0, 2.0, 0.0]]),
    )
}

pub fn plant10() -> Plant {
    Plant::new(a11(), b11(), 3.2, m(&[&[1.0], &[0.0]])).unwrap()
}

pub fn plant12() -> Plant {
    Plant::new(a22_ex2(), b22_ex2(), 3.2, m(&[&[1.0], &[0.0]])).unwrap()
}

pub fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(r: &mut impl rand::Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.gen_range(-scale..scale))
}

/// Pair `S U_i S^-1` with `U_i` block upper triangular (leading block `k x k`).
pub fn random_block_pair(r: &mut impl rand::Rng, n: usize, k: usize) -> (RealMatrix, RealMatrix, DMatrix<f64>) {
    let s = loop {
        let s = random_matrix(r, n, n, 1.0) + DMatrix::identity(n, n) * 2.0;
        if s.clone().svd(false, false).singular_values.min() > 0.2 {
            break s;
        }
    };
    let si = s.clone().try_inverse().unwrap();
    let mut make = || {
        let mut u = random_matrix(r, n, n, 2.0);
        u.view_mut((k, 0), (n - k, k)).fill(0.0);
        RealMatrix::new(&s * u * &si).unwrap()
    };
    let a1 = make();
    let a2 = make();
    (a1, a2, s.columns(0, k).into_owned())
}

/// Random single-delay system `x' = A1 x + A2 x(t - tau)`.
pub fn random_system(r: &mut impl rand::Rng, n: usize) -> TimeDelaySystem {
    let a1 = random_matrix(r, n, n, 1.5) - DMatrix::identity(n, n) * 0.5;
    let a2 = random_matrix(r, n, n, 1.0);
    TimeDelaySystem::single_delay(RealMatrix::new(a1).unwrap(), RealMatrix::new(a2).unwrap()).unwrap()
}

pub fn inside_count(c: &[Complex64], samples: usize) -> i64 {
    // winding number of sum c_m u^m around the unit circle
    let p = |phi: f64| -> Complex64 {
        let u = Complex64::from_polar(1.0, phi);
        c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, cm| acc * u + cm)
    };
    let mut total = 0.0;
    let mut prev = p(0.0);
    for k in 1..=samples {
        let cur = p(2.0 * PI * k as f64 / samples as f64);
        total += (cur / prev).arg();
        prev = cur;
    }
    (total / (2.0 * PI)).round() as i64
}

/// Crossing frequencies from a dense frequency scan of the inside-root count.
pub fn oracle_crossings(f: &CharacteristicFunction, omega_max: f64) -> Vec<f64> {
    let count = |w: f64| inside_count(&f.unit_coefficients(w), 720);
    let step = 2e-3;
    let mut out = Vec::new();
    let mut lo = step;
    let mut c_lo = count(lo);
    while lo < omega_max {
        let hi = (lo + step).min(omega_max);
        let c_hi = count(hi);
        if c_hi != c_lo {
            let (mut a, mut b) = (lo, hi);
            while b - a > 1e-6 {
                let mid = 0.5 * (a + b);
                if count(mid) == c_lo {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            out.push(0.5 * (a + b));
        }
        lo = hi;
        c_lo = c_hi;
    }
    out
}
