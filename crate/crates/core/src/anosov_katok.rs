//! Anosov–Katok construction of an analytic cocycle near the identity with a
//! prescribed resonance profile, carried out in SU(1,1).
//!
//! Stage `s` starts from the constant `Ā_s = exp πi[[t_s, λ_s], [−λ_s, −t_s]]`,
//! diagonalizes it with `D_s`, and conjugates by `H_{s*}` with
//! `s* = k_{s+2} − k_{s+1}` to reach `Ā_{s+1}` after a perturbation `e^{f̄_s}`.
//! The cocycles `A_s = B̄_s(·+α) Ā_s B̄_s(·)⁻¹` are accumulated through their
//! increments, which keeps every Fourier coefficient at relative precision.

use crate::arithmetic::{EngineerOptions, Frequency};
use crate::cocycle::{rotation_number, QpCocycle};
use crate::error::{invalid, QpError, Result};
use crate::fixed::Fixed;
use crate::fourier::{cis, FourierMat};
use crate::linalg2::{bch_log, elliptic_normal_form, schur_upper_rho, su11_to_sl2r, Mat2, BCH_RADIUS, I};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Relative cutoff for Fourier coefficients of `B̄_s` and `A_s`.
pub const FOURIER_CUTOFF: f64 = 1e-20;
/// Relative noise floor for sampled coefficients of `f̃_s`.
const SAMPLED_CUTOFF: f64 = 1e-13;
/// Residual allowed in the stage identities.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AkParams {
    pub delta: f64,
    pub h: f64,
    pub h_prime: f64,
    /// Number of constants `Ā_0 … Ā_{S−1}`; the output is `A_{S−1}`.
    pub stages: usize,
    pub eps_budget: f64,
    /// Share of each leading exponent allowed as slack in the stage bounds.
    pub rel_tol: f64,
    /// Constant absorbed into the slack as `ln(prefactor)/|k|`.
    pub prefactor: f64,
    /// First nonzero resonance `k_2`.
    pub seed_k: i64,
    /// Points of the θ-grid used for identities and sup norms.
    pub grid: usize,
    pub max_search: i64,
}

impl AkParams {
    pub fn new(delta: f64, h: f64, h_prime: f64, stages: usize, eps_budget: f64) -> Self {
        AkParams {
            delta,
            h,
            h_prime,
            stages,
            eps_budget,
            rel_tol: 0.1,
            prefactor: 4.0 * PI,
            seed_k: -3,
            grid: 256,
            max_search: 2_000_000,
        }
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = (2.0 * PI * self.h_prime, 2.0 * PI * self.h);
        if !(0.0 < a && a < b && b <= self.delta && self.delta.is_finite()) {
            return invalid(format!(
                "need 0 < 2πh' < 2πh <= δ < ∞ (2πh'={a:.4}, 2πh={b:.4}, δ={})",
                self.delta
            ));
        }
        if self.stages < 1 {
            return invalid("at least one stage is required");
        }
        if !(self.eps_budget > 0.0) || !(self.rel_tol >= 0.0 && self.rel_tol < 1.0) || !(self.prefactor >= 1.0) {
            return invalid("eps_budget > 0, rel_tol in [0, 1) and prefactor >= 1 are required");
        }
        if self.grid < 16 {
            return invalid("grid must have at least 16 points");
        }
        Ok(())
    }

    /// Slack replacing `o(1)` in a bound with leading exponent `lead` at `|k|`.
    pub fn slack(&self, lead: f64, k: i64) -> f64 {
        self.rel_tol * lead.abs() + self.prefactor.ln() / (k.unsigned_abs().max(1) as f64)
    }
}

/// Data of one constant `Ā_s`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AkStage {
    pub s: usize,
    /// `k_{s+1}`.
    pub k: i64,
    pub lambda: f64,
    pub t: f64,
    /// `‖2ϑ − k_{s+1}α‖_T`.
    pub gap: f64,
    pub ln_gap: f64,
}

#[derive(Clone, Debug)]
pub struct AkSchedule {
    pub alpha: Arc<Frequency>,
    pub params: AkParams,
    /// `ϑ`.
    pub theta: Fixed,
    pub two_theta: Fixed,
    /// `k_1 = 0, k_2, …, k_S`.
    pub ks: Vec<i64>,
    /// `gap_s` for `s = 1..=S`, exact.
    pub gaps: Vec<Fixed>,
    pub stages: Vec<AkStage>,
    pub summability: f64,
    pub warnings: Vec<String>,
}

impl AkSchedule {
    pub fn theta_f64(&self) -> f64 {
        self.theta.to_f64()
    }

    /// `η̂` of resonance `k_s` (`s >= 2`).
    pub fn eta_hat(&self, s: usize) -> Option<f64> {
        let k = *self.ks.get(s - 1)?;
        (k != 0).then(|| -self.gaps[s - 1].ln_abs() / k.unsigned_abs() as f64)
    }
}

/// Resonance schedule with the parity normalization `2ϑ − k_sα ∈ 2ℤ + [0, 1/2)`.
pub fn ak_schedule(alpha: &Arc<Frequency>, p: &AkParams) -> Result<AkSchedule> {
    p.validate()?;
    let mut opts = EngineerOptions::new(p.delta, (p.stages - 1).max(1), p.seed_k);
    opts.parity = true;
    opts.max_disturbance = None;
    opts.tol = p.rel_tol * p.delta;
    opts.max_search = p.max_search;
    let eng = crate::arithmetic::engineer_phase_with(alpha, &opts)?;
    let two_theta = eng.two_phi.clone();
    let mut ks = vec![0i64];
    ks.extend(eng.ks.iter().take(p.stages - 1));
    let a = alpha.value();
    let mut gaps = Vec::with_capacity(ks.len());
    for &k in &ks {
        let r = two_theta.sub(&a.mul_int(k)).rem_int(2);
        // Parity case: the residual mod 2 lies in [0, 1/2).
        if r.is_negative() || r.to_f64() >= 0.5 {
            return invalid(format!("k={k} violates the parity normalization"));
        }
        gaps.push(r);
    }
    let two_pi_h = 2.0 * PI * p.h;
    let stages: Vec<AkStage> = (0..ks.len())
        .map(|s| {
            let k = ks[s];
            // λ_0 = 0 so that Ā_0 is the rotation by ϑ.
            let lambda = if s == 0 { 0.0 } else { (-two_pi_h * k.unsigned_abs() as f64).exp() };
            let gap = gaps[s].to_f64();
            AkStage { s, k, lambda, t: lambda.hypot(gap), gap, ln_gap: gaps[s].ln_abs() }
        })
        .collect();
    let lead = two_pi_h - 2.0 * PI * p.h_prime;
    let summability: f64 = ks
        .iter()
        .skip(1)
        .map(|&k| (-(lead - p.rel_tol * lead) * k.unsigned_abs() as f64).exp())
        .sum();
    if !(summability < p.eps_budget / 2.0) {
        return Err(QpError::NormBound(format!(
            "summability {summability:.4e} exceeds eps_budget/2 = {:.4e}",
            p.eps_budget / 2.0
        )));
    }
    let mut warnings = Vec::new();
    let a0 = PI * stages[0].t;
    if a0 > p.eps_budget / 4.0 {
        warnings.push(format!(
            "‖A_0 − Id‖ <= πt_0 = {a0:.4} exceeds eps_budget/4 = {:.4}; ϑ is forced by the first resonance",
            p.eps_budget / 4.0
        ));
    }
    Ok(AkSchedule {
        alpha: alpha.clone(),
        params: p.clone(),
        theta: two_theta.half(),
        two_theta,
        ks,
        gaps,
        stages,
        summability,
        warnings,
    })
}

/// `Ā − I` for `Ā = exp πi[[t, λ], [−λ, −t]]` with eigenphases `±πg`.
pub fn abar_minus_id(t: f64, lambda: f64, g: f64) -> Mat2 {
    let x = PI * g;
    let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
    let gen = Mat2::new(I * t, I * lambda, -I * lambda, -I * t).scale_re(PI * sinc);
    let c = -2.0 * (x / 2.0).sin().powi(2);
    Mat2::scalar(C64::from(c)) + gen
}

pub fn abar(st: &AkStage) -> Mat2 {
    Mat2::identity() + abar_minus_id(st.t, st.lambda, st.gap)
}

/// Norms recorded at one stage.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageLedger {
    pub s: usize,
    pub s_star: i64,
    pub d_norm_sq: f64,
    pub d_bounds: (f64, f64),
    /// `|(gap_{s+1} − s*α) mod 2 − gap_{s+2}|`, exact arithmetic.
    pub key_relation_defect: f64,
    /// `sup_θ (‖X‖ + ‖Y(θ)‖)` against the BCH radius.
    pub bch_sup: f64,
    pub f_tilde_h: f64,
    pub f_bound: f64,
    pub reconstruction_residual: f64,
    /// `‖A_{s+1} − A_s‖_{h'}`.
    pub step_norm_h: f64,
    pub b_bar_sup: f64,
    pub degree: i64,
}

#[derive(Clone, Debug)]
pub struct AkState {
    pub s: usize,
    pub a_bar: Mat2,
    /// `B̄_s` in SU(1,1).
    pub b_bar: FourierMat,
    /// `A_s` in SU(1,1).
    pub a_series: FourierMat,
    pub degree: i64,
    pub ledger: Vec<StageLedger>,
}

impl AkState {
    pub fn initial(sched: &AkSchedule) -> Self {
        let a0 = abar(&sched.stages[0]);
        AkState {
            s: 0,
            a_bar: a0,
            b_bar: FourierMat::identity(),
            a_series: FourierMat::constant(a0),
            degree: 0,
            ledger: Vec::new(),
        }
    }
}

fn theta_grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| i as f64 / n as f64)
}

fn h_at(m: i64, theta: f64) -> Mat2 {
    let e = cis(PI * m as f64 * theta);
    Mat2::diag(e, e.conj())
}

/// One step `Ā_s → Ā_{s+1}`.
pub fn ak_step(state: &AkState, sched: &AkSchedule) -> Result<AkState> {
    let s = state.s;
    if s + 1 >= sched.stages.len() {
        return invalid(format!("no stage {} in a schedule of {} stages", s + 1, sched.stages.len()));
    }
    let p = &sched.params;
    let (cur, next) = (&sched.stages[s], &sched.stages[s + 1]);
    let s_star = next.k - cur.k;
    let alpha = sched.alpha.value();
    let k_next = sched.ks[s + 1];

    // D_s with D⁻¹ Ā_s D = exp πi diag(gap, −gap).
    let d = if cur.lambda == 0.0 {
        Mat2::identity()
    } else {
        elliptic_normal_form(PI * cur.t, I * (PI * cur.lambda))?.d
    };
    let d_inv = d.adjugate();
    let d_norm_sq = d.norm().powi(2);
    let d_bounds = if cur.lambda == 0.0 { (1.0, 1.0) } else { (cur.t / cur.gap, 2.0 * cur.t / cur.gap) };

    // X = −πi diag(x, −x) with x = (gap_{s+1} − s*α) mod 2, centered.
    let x_fixed = sched.gaps[s].sub(&alpha.mul_int(s_star)).rem_int(2);
    let key_relation_defect = x_fixed.sub(&sched.gaps[s + 1]).abs().to_f64();
    let x_c = {
        let v = x_fixed.to_f64();
        if v > 1.0 { v - 2.0 } else { v }
    };
    let x_mat = Mat2::diag(-I * (PI * x_c), I * (PI * x_c));
    let y_at = |u: C64| {
        Mat2::new(I * next.t, I * next.lambda * u, -I * next.lambda * u.conj(), -I * next.t).scale_re(PI)
    };
    let x_norm = x_mat.norm();
    let y_norm = y_at(C64::new(1.0, 0.0)).norm();
    let bch_sup = x_norm + y_norm;
    if !(bch_sup < BCH_RADIUS) {
        return Err(QpError::NormBound(format!(
            "stage {s}: ‖X‖ + ‖Y‖ = {bch_sup:.4e} is not below (ln 2)/2; the resonances grow too slowly"
        )));
    }

    // f̃_s depends on θ through e^{2πi s* θ}; its coefficients sit at multiples of s*.
    let m = 64usize;
    let samples: Vec<Mat2> = (0..m)
        .map(|j| bch_log(&x_mat, &y_at(cis(2.0 * PI * j as f64 / m as f64))))
        .collect::<Result<_>>()?;
    let mut coeffs: Vec<(i64, f64)> = Vec::new();
    for n in -(m as i64 / 2)..(m as i64 / 2) {
        let mut c = Mat2::zero();
        for (j, f) in samples.iter().enumerate() {
            c = c + f.scale(cis(-2.0 * PI * (n * j as i64) as f64 / m as f64));
        }
        coeffs.push((n, c.scale_re(1.0 / m as f64).norm()));
    }
    let top = coeffs.iter().map(|c| c.1).fold(0.0, f64::max);
    let f_tilde_h: f64 = coeffs
        .iter()
        .filter(|c| c.1 > SAMPLED_CUTOFF * top)
        .map(|&(n, c)| c * (2.0 * PI * p.h_prime * (n * s_star).unsigned_abs() as f64).exp())
        .sum();
    let lead = 2.0 * PI * (p.h - p.h_prime);
    let f_bound = (-(lead - p.slack(lead, k_next)) * k_next.unsigned_abs() as f64).exp();
    if f_tilde_h > f_bound {
        return Err(QpError::NormBound(format!(
            "stage {s}: ‖f̃‖_h' = {f_tilde_h:.4e} exceeds e^(-(2πh-2πh'-tol)|k|) = {f_bound:.4e}"
        )));
    }

    // H(·+α)⁻¹ D⁻¹ Ā_s D e^{f̃} H(·) = Ā_{s+1} on the θ-grid.
    let a_next = abar(next);
    let shift_phase = cis(PI * alpha.mul_int(s_star).rem_int(2).to_f64());
    let a_tilde = d_inv * state.a_bar * d;
    let mut reconstruction_residual = 0.0f64;
    for th in theta_grid(p.grid) {
        let y = y_at(cis(2.0 * PI * s_star as f64 * th));
        let f = bch_log(&x_mat, &y)?;
        let h = h_at(s_star, th);
        let h_shift_inv = Mat2::diag(h.a().conj() * shift_phase.conj(), h.d().conj() * shift_phase);
        let lhs = h_shift_inv * a_tilde * f.exp() * h;
        reconstruction_residual = reconstruction_residual.max((lhs - a_next).max_abs());
    }
    if !(reconstruction_residual <= RECONSTRUCTION_TOL) {
        return Err(QpError::NonConvergence {
            residual: reconstruction_residual,
            detail: format!("stage {s} reconstruction identity"),
        });
    }

    // Z − I = (e^X − I) + e^X H (Ā_{s+1} − I) H⁻¹, exactly as a trigonometric polynomial.
    let ex_m1 = x_mat.expm1();
    let ex = Mat2::identity() + ex_m1;
    let am1 = abar_minus_id(next.t, next.lambda, next.gap);
    let conj_h = FourierMat::h(s_star)
        .mul(&FourierMat::constant(am1))
        .mul(&FourierMat::h(-s_star));
    let z_m1 = FourierMat::constant(ex_m1).add(&conj_h.left_mul(&ex));
    // A_{s+1} − A_s = B̄_s(·+α) Ā_s D (Z − I) D⁻¹ B̄_s(·)⁻¹.
    let mut delta = state
        .b_bar
        .shift(alpha)
        .mul(&z_m1.left_mul(&(state.a_bar * d)).right_mul(&d_inv))
        .mul(&state.b_bar.adjugate());
    delta.truncate(FOURIER_CUTOFF);
    let step_norm_h = delta.norm_h(p.h_prime);
    // Increments are truncated relative to themselves so small late modes survive.
    let a_series = state.a_series.add(&delta);

    let mut b_bar = state.b_bar.mul(&FourierMat::constant(d).mul(&FourierMat::h(s_star)));
    b_bar.truncate(FOURIER_CUTOFF);
    let degree = state.degree + s_star;
    let b_bar_sup = b_bar.sup_norm(p.grid);

    let mut ledger = state.ledger.clone();
    ledger.push(StageLedger {
        s,
        s_star,
        d_norm_sq,
        d_bounds,
        key_relation_defect,
        bch_sup,
        f_tilde_h,
        f_bound,
        reconstruction_residual,
        step_norm_h,
        b_bar_sup,
        degree,
    });
    Ok(AkState { s: s + 1, a_bar: a_next, b_bar, a_series, degree, ledger })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AkDiagnostics {
    /// `‖A_∞ − Id‖_{h'}`.
    pub a_inf_minus_id_h: f64,
    pub a0_minus_id: f64,
    /// `πt_0`.
    pub a0_bound: f64,
    pub step_norms: Vec<f64>,
    pub det_defect: f64,
    /// `sup_θ ‖B̄_{S−1}(θ+α)⁻¹ A_∞(θ) B̄_{S−1}(θ) − Ā_{S−1}‖`.
    pub conjugation_residual: f64,
    pub fitted_decay_rate: Option<f64>,
    pub max_twice_k: i64,
    pub summability: f64,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct AkBuild {
    pub schedule: AkSchedule,
    /// `A_∞` in its SL(2,ℝ) realization.
    pub a_infinity: QpCocycle,
    pub a_infinity_su11: FourierMat,
    /// `B̄_0 … B̄_{S−1}`.
    pub conjugators: Vec<FourierMat>,
    pub a_bars: Vec<Mat2>,
    pub ledger: Vec<StageLedger>,
    pub diagnostics: AkDiagnostics,
}

/// Stages `0 … S−1`; `A_∞` is the last `A_s`.
pub fn ak_build(alpha: &Arc<Frequency>, p: &AkParams) -> Result<AkBuild> {
    let sched = ak_schedule(alpha, p)?;
    let mut state = AkState::initial(&sched);
    let a0 = state.a_series.clone();
    let mut conjugators = vec![state.b_bar.clone()];
    let mut a_bars = vec![state.a_bar];
    while state.s + 1 < sched.stages.len() {
        state = ak_step(&state, &sched)?;
        conjugators.push(state.b_bar.clone());
        a_bars.push(state.a_bar);
    }
    let a_inf = state.a_series.clone();
    let id = FourierMat::identity();
    let a_inf_minus_id_h = a_inf.sub(&id).norm_h(p.h_prime);
    let a0_minus_id = a0.sub(&id).norm_h(p.h_prime);
    let step_norms: Vec<f64> = state.ledger.iter().map(|l| l.step_norm_h).collect();
    if a0_minus_id + step_norms.iter().sum::<f64>() > 2.0 * p.eps_budget {
        return Err(QpError::NormBound(format!(
            "‖A_0 − Id‖ + Σ‖A_(s+1) − A_s‖ = {:.4e} exceeds the budget",
            a0_minus_id + step_norms.iter().sum::<f64>()
        )));
    }
    let alpha_f = alpha.value();
    let b_last = conjugators.last().expect("at least one conjugator");
    let b_shift = b_last.shift(alpha_f);
    let mut det_defect = 0.0f64;
    let mut conjugation_residual = 0.0f64;
    for th in theta_grid(p.grid) {
        let a = a_inf.eval(th);
        det_defect = det_defect.max((a.det() - 1.0).norm());
        let c = b_shift.eval(th).adjugate() * a * b_last.eval(th);
        conjugation_residual = conjugation_residual.max((c - state.a_bar).max_abs());
    }
    let mut sl = FourierMat { modes: a_inf.modes.iter().map(|(&j, m)| (j, su11_to_sl2r(m))).collect() };
    sl.truncate(FOURIER_CUTOFF);
    let diagnostics = AkDiagnostics {
        a_inf_minus_id_h,
        a0_minus_id,
        a0_bound: PI * sched.stages[0].t,
        step_norms,
        det_defect,
        conjugation_residual,
        fitted_decay_rate: a_inf.sub(&id).fitted_decay_rate(),
        max_twice_k: a_inf.max_twice_k(),
        summability: sched.summability,
        warnings: sched.warnings.clone(),
    };
    Ok(AkBuild {
        a_infinity: QpCocycle::fourier(alpha.clone(), sl, p.h_prime),
        a_infinity_su11: a_inf,
        conjugators,
        a_bars,
        ledger: state.ledger,
        diagnostics,
        schedule: sched,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoodnessRow {
    pub s: usize,
    pub k: i64,
    pub nu_abs: f64,
    /// `‖2ρ_s‖_T`.
    pub two_rho: f64,
    pub ln_two_rho: f64,
    pub f_bar_sup: f64,
    pub b_sup: f64,
    pub degree: i64,
    /// `−ln|ν_s|/|k_s|`.
    pub zeta: Option<f64>,
    /// `−ln‖2ρ_s‖/|k_s|`.
    pub eta_hat: Option<f64>,
    pub b_bar_bound: Option<f64>,
    pub b_bar_sup: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GoodnessReport {
    pub rows: Vec<GoodnessRow>,
    /// `C₀′` and `C₀` with `‖B_s‖₀ ≤ C₀′|k_s|^{C₀}` over the rows with `|k_s| >= 2`.
    pub c0_prime: f64,
    pub c0: f64,
    pub two_pi_h: f64,
    pub delta: f64,
    pub rotation_number: f64,
    pub rotation_error_bar: f64,
    pub theta: f64,
}

impl GoodnessReport {
    pub fn last(&self) -> &GoodnessRow {
        self.rows.last().expect("non-empty report")
    }
}

/// Schur data `(ρ_s, ν_s)` of `Ā_{s−1}` and the residual `F̄_s` of `A_∞` along `B_s = B̄_{s−1}U_{s−1}`.
pub fn ak_goodness_report(build: &AkBuild, rotation_n: i64) -> Result<GoodnessReport> {
    let sched = &build.schedule;
    let p = &sched.params;
    let alpha = sched.alpha.value();
    let two_pi_h = 2.0 * PI * p.h;
    let mut rows = Vec::new();
    for s in 1..=sched.stages.len() {
        let st = &sched.stages[s - 1];
        let k = sched.ks[s - 1];
        let rho = PI * st.gap;
        let (u, nu) = if st.lambda == 0.0 {
            (Mat2::identity(), C64::new(0.0, 0.0))
        } else {
            let sr = schur_upper_rho(PI * st.t, I * (PI * st.lambda), rho)?;
            (sr.u, sr.nu)
        };
        let b_bar = &build.conjugators[s - 1];
        let b = b_bar.right_mul(&u);
        let b_shift = b.shift(alpha);
        let tri = u.adjoint() * build.a_bars[s - 1] * u;
        let mut f_bar_sup = 0.0f64;
        for th in theta_grid(p.grid) {
            let c = b_shift.eval(th).adjugate() * build.a_infinity_su11.eval(th) * b.eval(th);
            f_bar_sup = f_bar_sup.max((c - tri).norm());
        }
        let kk = k.unsigned_abs() as f64;
        let lead = p.delta - two_pi_h;
        rows.push(GoodnessRow {
            s,
            k,
            nu_abs: nu.norm(),
            two_rho: st.gap,
            ln_two_rho: st.ln_gap,
            f_bar_sup,
            b_sup: b.sup_norm(p.grid),
            degree: k,
            zeta: (k != 0 && nu.norm() > 0.0).then(|| -nu.norm().ln() / kk),
            eta_hat: (k != 0).then(|| -st.ln_gap / kk),
            b_bar_bound: (k != 0).then(|| ((lead + p.slack(lead, k)) * kk / 2.0).exp()),
            b_bar_sup: b_bar.sup_norm(p.grid),
        });
    }
    let mut c0 = 0.0f64;
    for r in &rows {
        if r.k.abs() >= 2 {
            c0 = c0.max(r.b_sup.ln() / (r.k.unsigned_abs() as f64).ln());
        }
    }
    let rot = rotation_number(&build.a_infinity, rotation_n, 0.0)?;
    Ok(GoodnessReport {
        rows,
        c0_prime: 1.0,
        c0,
        two_pi_h,
        delta: p.delta,
        rotation_number: rot.rho,
        rotation_error_bar: rot.error_bar,
        theta: sched.theta_f64(),
    })
}
