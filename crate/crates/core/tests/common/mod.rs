//! Independent oracles shared by the integration and acceptance suites:
//! a tiny trigonometric-polynomial CAS, a brute-force convolution, a cyclic
//! finite-difference solver for the dispersive inversion, Fornberg stencil
//! weights, adaptive Simpson quadrature, and seeded random field generators.
//! Nothing here calls back into the code paths under test.

#![allow(dead_code)]

use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crestfall_core::spectral::SpectralField;

pub type C64 = Complex<f64>;

// ---------------------------------------------------------------------------
// Trigonometric polynomials with exact product/derivative rules
// ---------------------------------------------------------------------------

/// `f(x) = sum_{k=-d}^{d} c_k exp(i k x)` with `c_{-k} = conj(c_k)`.
#[derive(Clone, Debug)]
pub struct TrigPoly {
    /// Coefficient of `exp(i k x)` at index `k + degree`.
    coeffs: Vec<C64>,
    degree: i64,
}

impl TrigPoly {
    pub fn zero(degree: i64) -> Self {
        Self {
            coeffs: vec![C64::new(0.0, 0.0); (2 * degree + 1) as usize],
            degree,
        }
    }

    pub fn constant(v: f64) -> Self {
        let mut p = Self::zero(0);
        p.set(0, C64::new(v, 0.0));
        p
    }

    pub fn cosine(k: i64, amp: f64) -> Self {
        let mut p = Self::zero(k);
        p.set(k, C64::new(amp / 2.0, 0.0));
        p.set(-k, C64::new(amp / 2.0, 0.0));
        p
    }

    pub fn sine(k: i64, amp: f64) -> Self {
        let mut p = Self::zero(k);
        p.set(k, C64::new(0.0, -amp / 2.0));
        p.set(-k, C64::new(0.0, amp / 2.0));
        p
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn get(&self, k: i64) -> C64 {
        if k.abs() > self.degree {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.degree) as usize]
        }
    }

    fn set(&mut self, k: i64, v: C64) {
        self.coeffs[(k + self.degree) as usize] = v;
    }

    pub fn add(&self, other: &Self) -> Self {
        let d = self.degree.max(other.degree);
        let mut out = Self::zero(d);
        for k in -d..=d {
            out.set(k, self.get(k) + other.get(k));
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.coeffs {
            *v *= c;
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.degree + other.degree;
        let mut out = Self::zero(d);
        for k1 in -self.degree..=self.degree {
            let a = self.get(k1);
            if a.norm() == 0.0 {
                continue;
            }
            for k2 in -other.degree..=other.degree {
                let b = other.get(k2);
                if b.norm() == 0.0 {
                    continue;
                }
                let k = k1 + k2;
                out.set(k, out.get(k) + a * b);
            }
        }
        out
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self::zero(self.degree);
        for k in -self.degree..=self.degree {
            out.set(k, self.get(k) * C64::new(0.0, k as f64));
        }
        out
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        let mut p = self.clone();
        for _ in 0..n {
            p = p.derivative();
        }
        p
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = self.get(0).re;
        for k in 1..=self.degree {
            let e = C64::new(0.0, k as f64 * x).exp();
            acc += 2.0 * (self.get(k) * e).re;
        }
        acc
    }

    /// Build the matching band-limited `SpectralField` (exact coefficients).
    pub fn to_field(&self, n: usize) -> SpectralField<f64> {
        let pairs: Vec<(i64, C64)> = (0..=self.degree).map(|k| (k, self.get(k))).collect();
        SpectralField::from_coeffs(n, &pairs).expect("valid grid")
    }
}

// ---------------------------------------------------------------------------
// Brute-force convolution of retained modes
// ---------------------------------------------------------------------------

/// Direct `O(K^2)` convolution `c(n) = sum_m f(n - m) g(m)` over the retained
/// band, the oracle for `multiply`.
pub fn convolution_oracle(f: &SpectralField<f64>, g: &SpectralField<f64>) -> Vec<(i64, C64)> {
    let kmax = f.max_mode();
    let mut out = Vec::new();
    for n in -kmax..=kmax {
        let mut acc = C64::new(0.0, 0.0);
        for m in -kmax..=kmax {
            if (n - m).abs() <= kmax {
                acc += f.coeff(n - m) * g.coeff(m);
            }
        }
        out.push((n, acc));
    }
    out
}

// ---------------------------------------------------------------------------
// Cyclic tridiagonal finite-difference solve of  w - (mu/3h) d/dx(h^3 w_x) = f
// ---------------------------------------------------------------------------

/// Second-order conservative finite differences on an `m`-point periodic
/// grid; `h` and `f` are supplied as closures so the oracle never touches the
/// spectral machinery. Returns the solution samples at `x_j = -pi + 2 pi j/m`.
pub fn fd_invert_dispersive(
    h: &dyn Fn(f64) -> f64,
    f: &dyn Fn(f64) -> f64,
    mu: f64,
    m: usize,
) -> Vec<f64> {
    let dx = 2.0 * std::f64::consts::PI / m as f64;
    let x = |j: usize| -std::f64::consts::PI + dx * j as f64;
    let mut sub = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for j in 0..m {
        let xm = x(j) - 0.5 * dx;
        let xp = x(j) + 0.5 * dx;
        let km = h(xm).powi(3);
        let kp = h(xp).powi(3);
        let w = mu / (3.0 * h(x(j)) * dx * dx);
        sub[j] = -w * km;
        sup[j] = -w * kp;
        diag[j] = 1.0 + w * (km + kp);
        rhs[j] = f(x(j));
    }
    solve_cyclic_tridiag(&sub, &diag, &sup, &rhs)
}

/// Thomas algorithm with Sherman-Morrison for the periodic corner entries.
pub fn solve_cyclic_tridiag(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 3);
    let alpha = sub[0]; // coupling to w[n-1] in row 0
    let beta = sup[n - 1]; // coupling to w[0] in row n-1
    let gamma = -diag[0];

    let mut d = diag.to_vec();
    d[0] = diag[0] - gamma;
    d[n - 1] = diag[n - 1] - alpha * beta / gamma;

    let solve = |d: &[f64], r: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        let mut y = vec![0.0; n];
        c[0] = sup[0] / d[0];
        y[0] = r[0] / d[0];
        for j in 1..n {
            let m = d[j] - sub[j] * c[j - 1];
            c[j] = if j < n - 1 { sup[j] / m } else { 0.0 };
            y[j] = (r[j] - sub[j] * y[j - 1]) / m;
        }
        for j in (0..n - 1).rev() {
            y[j] -= c[j] * y[j + 1];
        }
        y
    };

    let y = solve(&d, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = beta;
    let z = solve(&d, &u);
    let vy = y[0] + alpha / gamma * y[n - 1];
    let vz = 1.0 + z[0] + alpha / gamma * z[n - 1];
    let factor = vy / vz;
    y.iter().zip(&z).map(|(yi, zi)| yi - factor * zi).collect()
}

/// Richardson-extrapolated dispersive inversion: combines solves at `m` and
/// `2m` points for fourth-order accuracy, returned as samples on the coarse
/// grid.
pub fn fd_invert_dispersive_rich(
    h: &dyn Fn(f64) -> f64,
    f: &dyn Fn(f64) -> f64,
    mu: f64,
    m: usize,
) -> Vec<f64> {
    let coarse = fd_invert_dispersive(h, f, mu, m);
    let fine = fd_invert_dispersive(h, f, mu, 2 * m);
    (0..m)
        .map(|j| (4.0 * fine[2 * j] - coarse[j]) / 3.0)
        .collect()
}

// ---------------------------------------------------------------------------
// Fornberg finite-difference weights
// ---------------------------------------------------------------------------

/// Weights for the `m`-th derivative at `z` from nodes `x` (Fornberg 1988).
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature
// ---------------------------------------------------------------------------

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 60)
}

/// Oracle for `int_0^omega g(x) x^(-lambda) dx`: adaptive Simpson away from
/// the origin plus an analytic bound for the `[0, x0]` tail (negligible for
/// `x0 = 1e-14`).
pub fn singular_integral_oracle(g: &dyn Fn(f64) -> f64, lambda: f64, omega: f64) -> f64 {
    let x0 = 1e-14;
    adaptive_simpson(&|x| g(x) * x.powf(-lambda), x0, omega, 1e-12)
}

// ---------------------------------------------------------------------------
// Seeded random band-limited fields
// ---------------------------------------------------------------------------

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random real field with modes `1..=kmax`, coefficient magnitudes scaled by
/// `amp * decay^k`.
pub fn random_field(
    rng: &mut ChaCha8Rng,
    n: usize,
    kmax: i64,
    amp: f64,
    decay: f64,
) -> SpectralField<f64> {
    let mut pairs = Vec::new();
    let mut scale = amp;
    for k in 1..=kmax {
        scale *= decay;
        let re = rng.gen_range(-1.0..1.0) * scale;
        let im = rng.gen_range(-1.0..1.0) * scale;
        pairs.push((k, C64::new(re, im)));
    }
    SpectralField::from_coeffs(n, &pairs).expect("valid grid")
}

/// Random even real field (cosine series), e.g. for symmetric depth data.
pub fn random_even_field(
    rng: &mut ChaCha8Rng,
    n: usize,
    kmax: i64,
    amp: f64,
    decay: f64,
) -> SpectralField<f64> {
    let mut pairs = Vec::new();
    let mut scale = amp;
    for k in 1..=kmax {
        scale *= decay;
        pairs.push((k, C64::new(rng.gen_range(-1.0..1.0) * scale, 0.0)));
    }
    SpectralField::from_coeffs(n, &pairs).expect("valid grid")
}

/// Random odd real field (sine series).
pub fn random_odd_field(
    rng: &mut ChaCha8Rng,
    n: usize,
    kmax: i64,
    amp: f64,
    decay: f64,
) -> SpectralField<f64> {
    let mut pairs = Vec::new();
    let mut scale = amp;
    for k in 1..=kmax {
        scale *= decay;
        pairs.push((k, C64::new(0.0, rng.gen_range(-1.0..1.0) * scale)));
    }
    SpectralField::from_coeffs(n, &pairs).expect("valid grid")
}

/// Uniform sample points for pointwise comparisons.
pub fn sample_points(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / count as f64)
        .collect()
}
