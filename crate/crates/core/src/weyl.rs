//! Weyl–Titchmarsh m-functions, the whole-line `M(z)` and measure windows of
//! the canonical spectral measure.

use crate::cocycle::{QpCocycle, Torus128};
use crate::error::{invalid, QpError, Result};
use crate::subordinacy::Side;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::f64::consts::PI;
use twofloat::TwoFloat;

/// Below this imaginary part the recursion runs in double-double arithmetic.
pub const DD_THRESHOLD: f64 = 1e-8;

/// Potential samples cached per side; beyond this they are recomputed.
const CACHE_CAP: usize = 1 << 23;

/// `w = (z − √(z²−4))/2` with `|w| < 1`: the decaying free solution `u(n) = wⁿ`.
pub fn free_w(z: C64) -> C64 {
    let s = (z * z - 4.0).sqrt();
    let w1 = (z - s) / 2.0;
    let w2 = (z + s) / 2.0;
    if w1.norm() <= w2.norm() {
        w1
    } else {
        w2
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MValue {
    pub value: C64,
    pub n_used: usize,
    /// Difference between two seeds at the final depth.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MTriple {
    pub z: C64,
    pub m_plus: C64,
    pub m_minus: C64,
    #[serde(rename = "M")]
    pub big_m: C64,
    pub n_used: usize,
    pub residual: f64,
}

/// Möbius rotation of the boundary condition by `β`.
pub fn rotate_m(m: C64, beta: f64, side: Side) -> C64 {
    let (s, c) = beta.sin_cos();
    match side {
        Side::Plus => (m * c + s) / (-m * s + c),
        Side::Minus => (m * c - s) / (m * s + c),
    }
}

/// `M = (m⁺m⁻ − 1)/(m⁺ + m⁻)`.
pub fn assemble_m(m_plus: C64, m_minus: C64) -> Result<C64> {
    let den = m_plus + m_minus;
    if den.norm() < 1e-300 {
        return Err(QpError::Singular { cond: f64::INFINITY });
    }
    Ok((m_plus * m_minus - 1.0) / den)
}

/// m-function evaluator for one Schrödinger operator and phase, with
/// potential samples shared across energies.
pub struct WeylSolver {
    c: QpCocycle,
    theta: f64,
    vbar: f64,
    /// `v(1), v(2), …`
    plus: RefCell<Vec<f64>>,
    /// `v(0), v(−1), …`
    minus: RefCell<Vec<f64>>,
    pub tol: f64,
    pub max_depth: usize,
}

impl WeylSolver {
    pub fn new(c: &QpCocycle, theta: f64) -> Result<Self> {
        let Some((v, _)) = c.schrodinger_data() else {
            return invalid("m-functions need a Schrödinger cocycle");
        };
        Ok(WeylSolver {
            c: c.clone(),
            theta,
            vbar: v.cos.first().copied().unwrap_or(0.0),
            plus: RefCell::new(Vec::new()),
            minus: RefCell::new(Vec::new()),
            tol: 1e-12,
            max_depth: 1 << 33,
        })
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn ensure(&self, side: Side, n: usize) {
        let n = n.min(CACHE_CAP);
        let mut cache = match side {
            Side::Plus => self.plus.borrow_mut(),
            Side::Minus => self.minus.borrow_mut(),
        };
        if cache.len() >= n {
            return;
        }
        let start = cache.len() as i64;
        let t0 = Torus128::from_f64(self.theta);
        let step = self.c.step();
        let mut t = match side {
            Side::Plus => t0.add(step.mul(start + 1)),
            Side::Minus => t0.sub(step.mul(start)),
        };
        let have = cache.len();
        cache.reserve(n - have);
        while cache.len() < n {
            let x = self.c.potential(t.to_f64());
            cache.push(x);
            t = match side {
                Side::Plus => t.add(step),
                Side::Minus => t.sub(step),
            };
        }
    }

    /// `v(1+j)` (plus) or `v(−j)` (minus).
    #[inline]
    fn v(&self, cache: &[f64], side: Side, j: usize) -> f64 {
        if j < cache.len() {
            return cache[j];
        }
        let t0 = Torus128::from_f64(self.theta);
        let t = match side {
            Side::Plus => t0.add(self.c.step().mul(j as i64 + 1)),
            Side::Minus => t0.sub(self.c.step().mul(j as i64)),
        };
        self.c.potential(t.to_f64())
    }

    /// Unrotated half-line m-function, depth doubled until two seeds agree.
    pub fn m(&self, z: C64, side: Side) -> Result<MValue> {
        if !(z.im > 0.0) {
            return invalid("m-functions need Im z > 0");
        }
        let w = free_w(z - self.vbar);
        // Depth at which a constant-potential tail would contract the seed error by e^{-8}.
        let mut depth = ((8.0 / -w.norm().ln()).ceil() as usize).clamp(32, 1 << 20);
        let dd = z.im < DD_THRESHOLD;
        // Rounding keeps two marginally contracting seeds about ulp/sqrt(κ) apart.
        let unit = if dd { 1e-30 } else { f64::EPSILON };
        let floor = 256.0 * unit / (-w.norm().ln()).sqrt();
        let mut prev = f64::INFINITY;
        loop {
            self.ensure(side, depth);
            let (a, b) = if dd { self.run_dd(z, side, depth, w) } else { self.run(z, side, depth, w) };
            let residual = (a - b).norm();
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(QpError::NonConvergence { residual: f64::NAN, detail: "non-finite m-function".into() });
            }
            let scale = a.norm().max(1.0);
            // A residual that no longer shrinks with depth is at the round-off floor.
            let stalled = residual > 0.5 * prev && residual <= 1e-9 * scale;
            if residual <= self.tol.max(floor) * scale || stalled {
                return Ok(MValue { value: a, n_used: depth, residual });
            }
            if depth >= self.max_depth {
                return Err(QpError::NonConvergence {
                    residual,
                    detail: format!("m-function seeds still differ at depth {depth} (Im z = {:.3e})", z.im),
                });
            }
            prev = residual;
            depth *= 2;
        }
    }

    /// Returns the value from the contracting seed and from a second seed.
    fn run(&self, z: C64, side: Side, depth: usize, w: C64) -> (C64, C64) {
        let cache = match side {
            Side::Plus => self.plus.borrow(),
            Side::Minus => self.minus.borrow(),
        };
        match side {
            Side::Plus => {
                // r(n−1) = 1/((z − v(n)) − r(n)), m⁺ = −r(0).
                let (mut r1, mut r2) = (w, C64::new(0.0, 0.0));
                for j in (0..depth).rev() {
                    let a = z - self.v(&cache, side, j);
                    r1 = (a - r1).inv();
                    r2 = (a - r2).inv();
                }
                (-r1, -r2)
            }
            Side::Minus => {
                // q(n) = (z − v(n)) − 1/q(n−1), m⁻ = q(0).
                let (mut q1, mut q2) = (w.inv(), z - self.vbar);
                for j in (0..depth).rev() {
                    let a = z - self.v(&cache, side, j);
                    q1 = a - q1.inv();
                    q2 = a - q2.inv();
                }
                (q1, q2)
            }
        }
    }

    fn run_dd(&self, z: C64, side: Side, depth: usize, w: C64) -> (C64, C64) {
        let cache = match side {
            Side::Plus => self.plus.borrow(),
            Side::Minus => self.minus.borrow(),
        };
        let zd = Cdd::from(z);
        match side {
            Side::Plus => {
                let (mut r1, mut r2) = (Cdd::from(w), Cdd::from(C64::new(0.0, 0.0)));
                for j in (0..depth).rev() {
                    let a = zd.sub_re(self.v(&cache, side, j));
                    r1 = a.sub(&r1).recip();
                    r2 = a.sub(&r2).recip();
                }
                (-r1.to_c64(), -r2.to_c64())
            }
            Side::Minus => {
                let (mut q1, mut q2) = (Cdd::from(w.inv()), Cdd::from(z - self.vbar));
                for j in (0..depth).rev() {
                    let a = zd.sub_re(self.v(&cache, side, j));
                    q1 = a.sub(&q1.recip());
                    q2 = a.sub(&q2.recip());
                }
                (q1.to_c64(), q2.to_c64())
            }
        }
    }

    pub fn m_beta(&self, z: C64, side: Side, beta: f64) -> Result<MValue> {
        let m = self.m(z, side)?;
        Ok(MValue { value: rotate_m(m.value, beta, side), ..m })
    }

    pub fn whole(&self, z: C64) -> Result<MTriple> {
        let p = self.m(z, Side::Plus)?;
        let q = self.m(z, Side::Minus)?;
        let big_m = assemble_m(p.value, q.value)?;
        if !(big_m.im > 0.0) {
            return Err(QpError::NonConvergence {
                residual: big_m.im,
                detail: format!("Herglotz property failed at z={z}"),
            });
        }
        Ok(MTriple {
            z,
            m_plus: p.value,
            m_minus: q.value,
            big_m,
            n_used: p.n_used.max(q.n_used),
            residual: p.residual.max(q.residual),
        })
    }
}

/// Complex double-double.
#[derive(Clone, Copy, Debug)]
struct Cdd {
    re: TwoFloat,
    im: TwoFloat,
}

impl Cdd {
    fn from(z: C64) -> Self {
        Cdd { re: TwoFloat::from(z.re), im: TwoFloat::from(z.im) }
    }

    fn sub_re(&self, x: f64) -> Self {
        Cdd { re: self.re - x, im: self.im }
    }

    fn sub(&self, o: &Cdd) -> Self {
        Cdd { re: self.re - o.re, im: self.im - o.im }
    }

    fn recip(&self) -> Self {
        let d = self.re * self.re + self.im * self.im;
        Cdd { re: self.re / d, im: -self.im / d }
    }

    fn to_c64(self) -> C64 {
        C64::new(f64::from(self.re), f64::from(self.im))
    }
}

/// `m_β^±(z)`.
pub fn half_line_m(c: &QpCocycle, theta: f64, z: C64, side: Side, beta: f64) -> Result<MValue> {
    WeylSolver::new(c, theta)?.m_beta(z, side, beta)
}

/// `M(z)` with the β-independence checked at `β = 0` and `β = 0.7`.
#[allow(non_snake_case)]
pub fn whole_line_M(c: &QpCocycle, theta: f64, z: C64) -> Result<MTriple> {
    let s = WeylSolver::new(c, theta)?;
    let t = s.whole(z)?;
    let beta = 0.7;
    let mb = assemble_m(rotate_m(t.m_plus, beta, Side::Plus), rotate_m(t.m_minus, beta, Side::Minus))?;
    let spread = (mb - t.big_m).norm() / t.big_m.norm();
    if spread > 1e-8 {
        return Err(QpError::NonConvergence { residual: spread, detail: "M depends on the boundary angle".into() });
    }
    Ok(t)
}

/// `ε · Im M(E + iε)`.
pub fn poisson_mass(c: &QpCocycle, theta: f64, e: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return invalid("poisson_mass needs eps > 0");
    }
    let s = WeylSolver::new(c, theta)?;
    Ok(eps * s.whole(C64::new(e, eps))?.big_m.im)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassMethod {
    PoissonBound,
    Stieltjes,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MeasureWindow {
    pub e: f64,
    pub eps: f64,
    pub mass: f64,
    pub method: MassMethod,
    pub eta_used: f64,
    /// `|mass(η) − mass(η/2)|` when the bias check ran.
    pub bias: Option<f64>,
    pub evaluations: usize,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct MeasureOptions {
    pub eta_ratio: f64,
    /// Run at `η` and `η/2` and extrapolate linearly in `η`.
    pub bias_check: bool,
    pub rel_tol: f64,
    pub max_evals: usize,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions { eta_ratio: 1e-2, bias_check: true, rel_tol: 1e-3, max_evals: 20_000 }
    }
}

/// `μ(E−ε, E+ε)` by Stieltjes inversion at `η = eta_ratio·ε`.
pub fn measure_window(c: &QpCocycle, theta: f64, e: f64, eps: f64, eta_ratio: f64) -> Result<MeasureWindow> {
    let s = WeylSolver::new(c, theta)?;
    measure_window_with(&s, e, eps, &MeasureOptions { eta_ratio, ..Default::default() })
}

pub fn measure_window_with(s: &WeylSolver, e: f64, eps: f64, o: &MeasureOptions) -> Result<MeasureWindow> {
    if !(eps > 0.0 && o.eta_ratio > 0.0) {
        return invalid("measure_window needs eps > 0 and eta_ratio > 0");
    }
    let eta = o.eta_ratio * eps;
    let (m1, n1, r1) = stieltjes(s, e - eps, e + eps, eta, o)?;
    let (mass, bias, evals, residual) = if o.bias_check {
        let (m2, n2, r2) = stieltjes(s, e - eps, e + eps, eta / 2.0, o)?;
        (2.0 * m2 - m1, Some((m1 - m2).abs()), n1 + n2, r1.max(r2))
    } else {
        (m1, None, n1, r1)
    };
    Ok(MeasureWindow {
        e,
        eps,
        mass: mass.max(0.0),
        method: MassMethod::Stieltjes,
        eta_used: eta,
        bias,
        evaluations: evals,
        residual,
    })
}

/// `(1/π) ∫_a^b Im M(x + iη) dx`, adaptive Gauss–Kronrod.
pub fn stieltjes(s: &WeylSolver, a: f64, b: f64, eta: f64, o: &MeasureOptions) -> Result<(f64, usize, f64)> {
    let f = |x: f64| -> Result<f64> { Ok(s.whole(C64::new(x, eta))?.big_m.im / PI) };
    // Start with panels about 4η wide so features of width η are resolved.
    let panels = (((b - a) / (4.0 * eta)).ceil() as usize).clamp(1, 4096);
    let mut stack = Vec::new();
    let mut evals = 0usize;
    let mut total = 0.0;
    let mut err_total = 0.0;
    let h = (b - a) / panels as f64;
    for i in 0..panels {
        let (lo, hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
        let (v, err) = gk15(&f, lo, hi)?;
        evals += 15;
        stack.push((lo, hi, v, err));
        total += v;
        err_total += err;
    }
    while err_total > o.rel_tol * total.abs().max(1e-300) && err_total > 1e-15 {
        if evals >= o.max_evals {
            return Err(QpError::NonConvergence {
                residual: err_total / total.abs().max(1e-300),
                detail: format!("Stieltjes quadrature needs more than {} evaluations", o.max_evals),
            });
        }
        // Bisect the panel with the largest error.
        let (idx, _) = stack
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty panel list");
        let (lo, hi, v, err) = stack.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid)?;
        let (v2, e2) = gk15(&f, mid, hi)?;
        evals += 30;
        total += v1 + v2 - v;
        err_total += e1 + e2 - err;
        stack.push((lo, mid, v1, e1));
        stack.push((mid, hi, v2, e2));
    }
    Ok((total, evals, err_total))
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<(f64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x)? + f(c + x)?;
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::Frequency;
    use crate::cocycle::PotentialSpec;
    use std::sync::Arc;

    #[test]
    fn free_m_plus_at_i() {
        let c = QpCocycle::schrodinger(Arc::new(Frequency::golden(256)), PotentialSpec::zero(), 0.0);
        let m = half_line_m(&c, 0.0, C64::new(0.0, 1.0), Side::Plus, 0.0).unwrap();
        assert!((m.value - C64::new(0.0, (5f64.sqrt() - 1.0) / 2.0)).norm() < 1e-14);
    }

    #[test]
    fn gk15_integrates_polynomials() {
        let (v, _) = gk15(&|x| Ok(x.powi(6)), 0.0, 1.0).unwrap();
        assert!((v - 1.0 / 7.0).abs() < 1e-15);
    }
}
