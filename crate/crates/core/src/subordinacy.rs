//! Solution norms over lattice intervals, the matrices `P_(k),±`, and the
//! scale maps `ε(k)` and `L^±(ε)`.

use crate::cocycle::{QpCocycle, Torus128};
use crate::error::{invalid, QpError, Result};
use crate::scaling::linear_fit;
use serde::{Deserialize, Serialize};

/// Determinants beyond this are reported as precision exhaustion.
const DET_LIMIT: f64 = 1e280;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

/// 2×2 real symmetric matrix `[[p11, p12], [p12, p22]]` with its determinant
/// tracked separately so that it never suffers cancellation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub p11: f64,
    pub p12: f64,
    pub p22: f64,
    pub det: f64,
}

impl Sym2 {
    pub fn zero() -> Self {
        Sym2 { p11: 0.0, p12: 0.0, p22: 0.0, det: 0.0 }
    }

    /// `P + T` for PSD `T` with known `det T`. Every term of
    /// `det(P+T) = det P + det T + tr(adj(P) T)` is non-negative.
    pub fn add_psd(&mut self, t11: f64, t12: f64, t22: f64, det_t: f64) {
        let cross = self.p11 * t22 + self.p22 * t11 - 2.0 * self.p12 * t12;
        self.det += det_t + cross.max(0.0);
        self.p11 += t11;
        self.p12 += t12;
        self.p22 += t22;
    }

    /// `P + f·aaᵀ`.
    pub fn add_rank_one(&mut self, a: [f64; 2], f: f64) {
        let q = self.quad_adj(a);
        self.det += f * q.max(0.0);
        self.p11 += f * a[0] * a[0];
        self.p12 += f * a[0] * a[1];
        self.p22 += f * a[1] * a[1];
    }

    /// `aᵀ adj(P) a`.
    pub fn quad_adj(&self, a: [f64; 2]) -> f64 {
        self.p22 * a[0] * a[0] - 2.0 * self.p12 * a[0] * a[1] + self.p11 * a[1] * a[1]
    }

    /// `⟨P w, w⟩`.
    pub fn quad(&self, w: [f64; 2]) -> f64 {
        self.p11 * w[0] * w[0] + 2.0 * self.p12 * w[0] * w[1] + self.p22 * w[1] * w[1]
    }

    pub fn trace(&self) -> f64 {
        self.p11 + self.p22
    }

    /// Largest eigenvalue.
    pub fn norm(&self) -> f64 {
        let t = self.trace() / 2.0;
        let disc = ((self.p11 - self.p22) / 2.0).hypot(self.p12);
        t + disc
    }

    /// Smallest eigenvalue `‖P⁻¹‖⁻¹ = det P / ‖P‖`.
    pub fn inv_norm_inv(&self) -> f64 {
        self.det / self.norm()
    }

    /// Entrywise determinant, for cross-checking the tracked one.
    pub fn det_direct(&self) -> f64 {
        self.p11 * self.p22 - self.p12 * self.p12
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.p11, self.p12], [self.p12, self.p22]]
    }
}

/// Initial vector `ũ_β = (u(1), u(0)) = (cos β, −sin β)`.
pub fn initial_vector(beta: f64) -> [f64; 2] {
    [beta.cos(), -beta.sin()]
}

/// Walks the rows `a_n` with `u(n) = a_n · (u(1), u(0))` on one side, in the
/// order the lattice norm visits them: `n = 1, 2, …` or `n = 0, −1, …`.
struct RowWalker<'a> {
    c: &'a QpCocycle,
    side: Side,
    /// Current 2×2 transfer `(u(1), u(0)) ↦ (u(m+1), u(m))` (plus) or `↦ (u(m), u(m−1))` (minus).
    m: [f64; 4],
    phase: Torus128,
    emitted_first: bool,
}

impl<'a> RowWalker<'a> {
    fn new(c: &'a QpCocycle, theta: f64, side: Side) -> Self {
        // Phase of A mapping (u(1),u(0)) → (u(2),u(1)) is θ + α.
        let phase = Torus128::from_f64(theta).add(c.step());
        RowWalker { c, side, m: [1.0, 0.0, 0.0, 1.0], phase, emitted_first: false }
    }

    fn next_row(&mut self) -> [f64; 2] {
        match self.side {
            Side::Plus => {
                // Rows of the identity first give u(1); afterwards advance.
                if !self.emitted_first {
                    self.emitted_first = true;
                    return [self.m[0], self.m[1]];
                }
                let a = self.c.eval_real_at(self.phase);
                self.phase = self.phase.add(self.c.step());
                self.m = mul(a, self.m);
                [self.m[0], self.m[1]]
            }
            Side::Minus => {
                if !self.emitted_first {
                    self.emitted_first = true;
                    return [self.m[2], self.m[3]];
                }
                // (u(m), u(m−1)) = A(θ + (m−1)α)⁻¹ (u(m+1), u(m)).
                self.phase = self.phase.sub(self.c.step());
                let a = self.c.eval_real_at(self.phase);
                self.m = mul(inv(a), self.m);
                [self.m[2], self.m[3]]
            }
        }
    }
}

fn mul(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

fn inv(a: [f64; 4]) -> [f64; 4] {
    let d = a[0] * a[3] - a[1] * a[2];
    [a[3] / d, -a[1] / d, -a[2] / d, a[0] / d]
}

/// `‖u_β^±‖²_L`, with the fractional last term of the lattice norm.
///
/// Returns the squared norm.
pub fn solution_norm(c: &QpCocycle, theta: f64, beta: f64, l: f64, side: Side) -> Result<f64> {
    if !(l >= 1.0) || !l.is_finite() {
        return invalid("solution_norm needs L >= 1");
    }
    let w = initial_vector(beta);
    let whole = l.floor() as i64;
    let frac = l - l.floor();
    let mut walker = RowWalker::new(c, theta, side);
    let mut sum = 0.0;
    for _ in 0..whole {
        let a = walker.next_row();
        let u = a[0] * w[0] + a[1] * w[1];
        sum += u * u;
    }
    if frac > 0.0 {
        let a = walker.next_row();
        let u = a[0] * w[0] + a[1] * w[1];
        sum += frac * u * u;
    }
    Ok(sum)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PkMatrix {
    pub k: i64,
    pub side: Side,
    pub matrix: Sym2,
    pub theta: f64,
}

impl PkMatrix {
    /// `⟨P ũ_β, ũ_β⟩`, equal to `‖u_β‖²_{2k}`.
    pub fn form(&self, beta: f64) -> f64 {
        self.matrix.quad(initial_vector(beta))
    }
}

/// Running sum of `𝒜*_{2j−1}(θ+α) 𝒜_{2j−1}(θ+α)` over `j = 1..k`.
struct PkAccumulator<'a> {
    c: &'a QpCocycle,
    side: Side,
    iter: [f64; 4],
    phase: Torus128,
    n: i64,
    p: Sym2,
}

impl<'a> PkAccumulator<'a> {
    fn new(c: &'a QpCocycle, theta: f64, side: Side) -> Self {
        let phase = Torus128::from_f64(theta).add(c.step());
        PkAccumulator { c, side, iter: [1.0, 0.0, 0.0, 1.0], phase, n: 0, p: Sym2::zero() }
    }

    fn advance(&mut self) {
        match self.side {
            Side::Plus => {
                let a = self.c.eval_real_at(self.phase);
                self.phase = self.phase.add(self.c.step());
                self.iter = mul(a, self.iter);
            }
            Side::Minus => {
                self.phase = self.phase.sub(self.c.step());
                let a = self.c.eval_real_at(self.phase);
                self.iter = mul(inv(a), self.iter);
            }
        }
        self.n += 1;
    }

    /// Adds the term for the next `j`, so `P` becomes `P_(j)`.
    fn push(&mut self) {
        self.advance();
        let m = self.iter;
        let t11 = m[0] * m[0] + m[2] * m[2];
        let t12 = m[0] * m[1] + m[2] * m[3];
        let t22 = m[1] * m[1] + m[3] * m[3];
        let d = m[0] * m[3] - m[1] * m[2];
        self.p.add_psd(t11, t12, t22, d * d);
        self.advance();
    }
}

/// `P_(k),±(θ)`.
pub fn pk(c: &QpCocycle, theta: f64, k: i64, side: Side) -> Result<PkMatrix> {
    if k < 1 {
        return invalid("pk needs k >= 1");
    }
    let mut acc = PkAccumulator::new(c, theta, side);
    for _ in 0..k {
        acc.push();
    }
    if !(acc.p.det < DET_LIMIT) {
        return Err(QpError::PrecisionExhausted {
            achieved: 0,
            requested: k as usize,
            detail: "det P_(k) overflows double range".into(),
        });
    }
    Ok(PkMatrix { k, side, matrix: acc.p, theta })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ProfileRow {
    pub k: i64,
    pub det_plus: f64,
    pub det_minus: f64,
    /// `‖P₊⁻¹‖⁻¹`.
    pub inv_norm_plus: f64,
    pub norm_plus: f64,
    /// `(P₊)₁₁ = ‖u_0⁺‖²_{2k}`.
    pub x11: f64,
    pub eps_of_k: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubordinacyProfile {
    pub theta: f64,
    pub rows: Vec<ProfileRow>,
    /// First `k` at which the profile was cut for overflow.
    pub truncated_at: Option<i64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SlopeFit {
    pub k_lo: f64,
    pub k_hi: f64,
    pub slope: f64,
    pub stderr: f64,
    pub points: usize,
}

impl SubordinacyProfile {
    /// Least-squares slope of `ln det P₊` against `ln k` on `[k_lo, k_hi]`.
    pub fn slope(&self, k_lo: f64, k_hi: f64) -> Result<SlopeFit> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| (r.k as f64) >= k_lo && (r.k as f64) <= k_hi)
            .map(|r| ((r.k as f64).ln(), r.det_plus.ln()))
            .collect();
        if pts.len() < 3 {
            return invalid(format!("only {} profile points in [{k_lo}, {k_hi}]", pts.len()));
        }
        let f = linear_fit(&pts);
        Ok(SlopeFit { k_lo, k_hi, slope: f.slope, stderr: f.slope_stderr, points: pts.len() })
    }

    /// Effective exponent `ln det P₊ / ln k` at the profile point nearest `k`.
    pub fn effective_exponent(&self, k: f64) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.k > 1)
            .min_by(|a, b| ((a.k as f64).ln() - k.ln()).abs().total_cmp(&((b.k as f64).ln() - k.ln()).abs()))
            .map(|r| r.det_plus.ln() / (r.k as f64).ln())
    }

    pub fn csv_header() -> &'static str {
        "k,detP_plus,detP_minus,invnormP,normP,x11,eps_of_k"
    }
}

/// Geometric grid `1 = k_0 < k_1 < … <= k_max` with ratio `ratio`.
pub fn geometric_grid(k_max: i64, ratio: f64) -> Vec<i64> {
    let mut out = vec![1i64];
    let mut x = 1.0f64;
    while *out.last().unwrap() < k_max {
        x *= ratio;
        let k = (x.round() as i64).min(k_max);
        if k > *out.last().unwrap() {
            out.push(k);
        }
    }
    out
}

/// `det P_(k),±`, norms and `ε(k)` on a geometric `k`-grid.
pub fn profile(c: &QpCocycle, theta: f64, k_max: i64, ratio: f64) -> Result<SubordinacyProfile> {
    if k_max < 16 {
        return invalid("profile needs k_max >= 16");
    }
    if !(ratio > 1.0) {
        return invalid("grid ratio must exceed 1");
    }
    let grid = geometric_grid(k_max, ratio);
    let (plus, minus) = rayon::join(
        || sweep(c, theta, &grid, Side::Plus),
        || sweep(c, theta, &grid, Side::Minus),
    );
    let mut rows = Vec::with_capacity(grid.len());
    let mut truncated_at = None;
    for ((k, (_, p)), (_, m)) in grid.iter().zip(plus).zip(minus) {
        if !(p.det < DET_LIMIT && m.det < DET_LIMIT) || !p.det.is_finite() {
            truncated_at = Some(*k);
            break;
        }
        rows.push(ProfileRow {
            k: *k,
            det_plus: p.det,
            det_minus: m.det,
            inv_norm_plus: p.inv_norm_inv(),
            norm_plus: p.norm(),
            x11: p.p11,
            eps_of_k: p.det.powf(-0.5),
        });
    }
    Ok(SubordinacyProfile { theta, rows, truncated_at })
}

fn sweep(c: &QpCocycle, theta: f64, grid: &[i64], side: Side) -> Vec<(i64, Sym2)> {
    let mut acc = PkAccumulator::new(c, theta, side);
    let mut out = Vec::with_capacity(grid.len());
    let mut j = 0;
    for &k in grid {
        while j < k {
            acc.push();
            j += 1;
            if !(acc.p.det < DET_LIMIT) {
                break;
            }
        }
        out.push((k, acc.p));
        if !(acc.p.det < DET_LIMIT) {
            break;
        }
    }
    out
}

/// `L` solving `|||K^±|||²_L = det Q_L = 1/ε²`, where `Q_L` is the Gram matrix of
/// the rows `a_n` visited by `‖·‖^±_L`. `det Q_L` is affine in the fractional
/// part of `L`, so the solution is exact once the integer bracket is found.
pub fn match_length(c: &QpCocycle, theta: f64, eps: f64, side: Side, max_len: i64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps={eps} must lie in (0,1); larger eps gives L < 2"));
    }
    let target = eps.powi(-2);
    let mut walker = RowWalker::new(c, theta, side);
    let mut q = Sym2::zero();
    let first = walker.next_row();
    q.add_rank_one(first, 1.0);
    let mut n = 1i64;
    while n < max_len {
        let a = walker.next_row();
        let gain = q.quad_adj(a);
        if q.det + gain >= target {
            let f = if gain > 0.0 { (target - q.det) / gain } else { 0.0 };
            return Ok(n as f64 + f.clamp(0.0, 1.0));
        }
        q.add_rank_one(a, 1.0);
        n += 1;
    }
    Err(QpError::NonConvergence {
        residual: target / q.det.max(f64::MIN_POSITIVE),
        detail: format!("det Q_L did not reach 1/ε² within L <= {max_len}"),
    })
}

/// `L⁻(ε)`.
pub fn match_length_minus(c: &QpCocycle, theta: f64, eps: f64) -> Result<f64> {
    match_length(c, theta, eps, Side::Minus, 1 << 34)
}

/// `L⁺(ε)`.
pub fn match_length_plus(c: &QpCocycle, theta: f64, eps: f64) -> Result<f64> {
    match_length(c, theta, eps, Side::Plus, 1 << 34)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::Frequency;
    use crate::cocycle::PotentialSpec;
    use std::sync::Arc;

    fn free(e: f64) -> QpCocycle {
        QpCocycle::schrodinger(Arc::new(Frequency::golden(256)), PotentialSpec::zero(), e)
    }

    #[test]
    fn free_rotation_solution_norm() {
        let c = free(0.0);
        // β = π/2 gives (u(1), u(0)) = (0, −1).
        let n = solution_norm(&c, 0.0, std::f64::consts::FRAC_PI_2, 20.0, Side::Plus).unwrap();
        assert!((n - 10.0).abs() < 1e-12);
        let p = pk(&c, 0.0, 1, Side::Plus).unwrap();
        assert!((p.matrix.det - 1.0).abs() < 1e-14 && (p.matrix.p11 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn free_match_length() {
        let l = match_length_minus(&free(0.0), 0.0, 1e-2).unwrap();
        assert!((l - 200.0).abs() <= 1.0, "L⁻ = {l}");
    }
}
