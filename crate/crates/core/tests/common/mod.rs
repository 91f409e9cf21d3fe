#![allow(dead_code)]

use nodal_core::C64;

/// Error-free double-double accumulator used as an extended-precision oracle.
#[derive(Clone, Copy, Default)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl DoubleDouble {
    pub fn add(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        let (h, l) = two_sum(s, e + self.lo);
        self.hi = h;
        self.lo = l;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

pub fn dd_complex_sum(terms: impl IntoIterator<Item = C64>) -> C64 {
    let (mut re, mut im) = (DoubleDouble::default(), DoubleDouble::default());
    for z in terms {
        re.add(z.re);
        im.add(z.im);
    }
    C64::new(re.value(), im.value())
}

/// Every lattice point with `lo^2 <= n1^2 + n2^2 <= hi^2`, by scanning a square.
pub fn lattice_scan(lo: f64, hi: f64) -> Vec<[i64; 2]> {
    let r = hi.ceil() as i64 + 1;
    let mut out = Vec::new();
    for a in -r..=r {
        for b in -r..=r {
            let n2 = (a * a + b * b) as f64;
            if n2 >= lo.max(0.0) * lo.max(0.0) && n2 <= hi * hi {
                out.push([a, b]);
            }
        }
    }
    out.sort();
    out
}

pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (inner + 0.5 * (values[0] + values[values.len() - 1]))
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 { a.abs() } else { gcd(b, a % b) }
}
