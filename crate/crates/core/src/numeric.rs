//! Small numerical kernels: compensated sums, uniform grids and the
//! eigenvalue-only QR iteration used by the companion solver.

use num_complex::Complex64;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Neumaier-compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ComplexKahanSum {
    re: KahanSum,
    im: KahanSum,
}

impl ComplexKahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, z: C64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> C64 {
        C64::new(self.re.value(), self.im.value())
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<KahanSum>().value()
}

/// `n` equally spaced points covering `[a, b]` inclusively.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let h = (b - a) / (n - 1) as f64;
            (0..n).map(|i| a + h * i as f64).collect()
        }
    }
}

/// Trapezoidal rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let mut s = KahanSum::new();
            s.add(0.5 * values[0]);
            for v in &values[1..n - 1] {
                s.add(*v);
            }
            s.add(0.5 * values[n - 1]);
            h * s.value()
        }
    }
}

/// Reduce an angle-like coordinate into `[0, period)`.
pub fn wrap(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r >= period {
        0.0
    } else {
        r
    }
}

/// Distance between two points of the circle `R / period Z`.
pub fn circle_distance(a: f64, b: f64, period: f64) -> f64 {
    let d = (a - b).rem_euclid(period);
    d.min(period - d)
}

pub fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Eigenvalues of an upper Hessenberg matrix stored row-major in `h`.
///
/// Single-shift complex QR with Wilkinson shifts and Givens rotations,
/// restricted to the active unreduced block. Only eigenvalues are formed,
/// so rotations never touch the already deflated part of the matrix.
/// Returns `None` if some eigenvalue fails to converge.
pub fn hessenberg_eigenvalues(h: &mut [C64], n: usize) -> Option<Vec<C64>> {
    assert_eq!(h.len(), n * n);
    let mut out = vec![ZERO; n];
    if n == 0 {
        return Some(out);
    }
    let at = |i: usize, j: usize| i * n + j;
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut its = 0usize;
    let mut total_its = 0usize;
    loop {
        if hi == 0 {
            out[0] = h[at(0, 0)];
            break;
        }
        let mut lo = 0;
        let mut k = hi;
        while k > 0 {
            let sub = h[at(k, k - 1)].norm();
            let mut scale = h[at(k - 1, k - 1)].norm() + h[at(k, k)].norm();
            if scale == 0.0 {
                scale = f64::MIN_POSITIVE;
            }
            if sub <= eps * scale {
                h[at(k, k - 1)] = ZERO;
                lo = k;
                break;
            }
            k -= 1;
        }
        if lo == hi {
            out[hi] = h[at(hi, hi)];
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total_its += 1;
        if its > 60 || total_its > 60 * n {
            return None;
        }
        let a = h[at(hi - 1, hi - 1)];
        let b = h[at(hi - 1, hi)];
        let c = h[at(hi, hi - 1)];
        let d = h[at(hi, hi)];
        let shift = if its.is_multiple_of(10) {
            // exceptional shift
            d + C64::new(0.75 * c.norm(), 0.0)
        } else {
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let mean = (a + d) * 0.5;
            let e1 = mean + disc;
            let e2 = mean - disc;
            if (e1 - d).norm() < (e2 - d).norm() {
                e1
            } else {
                e2
            }
        };
        let mut x = h[at(lo, lo)] - shift;
        let mut y = h[at(lo + 1, lo)];
        for k in lo..hi {
            if k > lo {
                x = h[at(k, k - 1)];
                y = h[at(k + 1, k - 1)];
            }
            let xa = x.norm();
            let r = xa.hypot(y.norm());
            if r == 0.0 {
                continue;
            }
            let (cs, sn) = if xa == 0.0 {
                (0.0, C64::new(1.0, 0.0))
            } else {
                (xa / r, x * y.conj() / (xa * r))
            };
            let j0 = if k > lo { k - 1 } else { lo };
            for j in j0..=hi {
                let h1 = h[at(k, j)];
                let h2 = h[at(k + 1, j)];
                h[at(k, j)] = h1 * cs + sn * h2;
                h[at(k + 1, j)] = -sn.conj() * h1 + h2 * cs;
            }
            if k > lo {
                h[at(k + 1, k - 1)] = ZERO;
            }
            let i1 = (k + 2).min(hi);
            for i in lo..=i1 {
                let h1 = h[at(i, k)];
                let h2 = h[at(i, k + 1)];
                h[at(i, k)] = h1 * cs + sn.conj() * h2;
                h[at(i, k + 1)] = -sn * h1 + h2 * cs;
            }
        }
    }
    Some(out)
}
