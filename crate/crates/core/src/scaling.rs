//! Scaling predictors for the local distribution of spectral measures and
//! log–log fitting of measured data against them.
//!
//! Every resonant-window law has the same shape. With `L = ln ε⁻¹`, a
//! window `L ∈ [hn, hN]` and resonance strength `η`:
//!
//! * `η ≤ h`: `f = 1`;
//! * `L ∈ [hn, (2η−h)n]`: `f = 1/2 + hn/(2L)`;
//! * `L ∈ [(2η−h)n, hN]`: `f = (1 − b·hN/L)/(1 − b)`, `b = (η−h)n/(hN − ηn)`.
//!
//! The almost Mathieu law uses `h = −ln λ`; the Anosov–Katok law uses `2πh`
//! in place of `h` and `η = δ`.

use crate::arithmetic::{Ext, ResonanceSequence};
use crate::error::{domain, invalid, QpError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `η ≤ h`.
    Weak,
    /// `1/2 + hn/(2L)`.
    Rise,
    /// The `b`-interpolation back to 1.
    Relax,
    /// `1 − (η−h)n/L` when no later resonance exists.
    Tail,
}

/// One resonance window `L = ln ε⁻¹ ∈ [h·n, h·N]`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Window {
    pub n: f64,
    /// `None` for an unbounded last window.
    pub big_n: Option<f64>,
    pub eta: Ext,
    pub h: f64,
    /// `L` above which the formula is no longer determined by the data.
    pub l_max: f64,
}

impl Window {
    pub fn l_lo(&self) -> f64 {
        self.h * self.n
    }

    pub fn l_hi(&self) -> f64 {
        match self.big_n {
            Some(nn) => (self.h * nn).min(self.l_max),
            None => self.l_max,
        }
    }

    pub fn eps_range(&self) -> (f64, f64) {
        ((-self.l_hi()).exp(), (-self.l_lo()).exp())
    }

    /// `b = (η−h)n/(hN − ηn)`.
    pub fn b(&self) -> Option<f64> {
        match (self.eta, self.big_n) {
            (Ext::Finite(eta), Some(nn)) => Some((eta - self.h) * self.n / (self.h * nn - eta * self.n)),
            _ => None,
        }
    }

    /// `f` at `L` (no coverage check).
    pub fn f_at(&self, l: f64) -> (f64, Branch) {
        let h = self.h;
        let n = self.n;
        let eta = match self.eta {
            Ext::Infinite => return (0.5 + h * n / (2.0 * l), Branch::Rise),
            Ext::Finite(e) => e,
        };
        if eta <= h {
            return (1.0, Branch::Weak);
        }
        if l <= (2.0 * eta - h) * n {
            return (0.5 + h * n / (2.0 * l), Branch::Rise);
        }
        match self.big_n {
            Some(nn) if h * nn > eta * n => {
                let b = (eta - h) * n / (h * nn - eta * n);
                ((1.0 - b * h * nn / l) / (1.0 - b), Branch::Relax)
            }
            // Window too short to relax; the rise branch is continued.
            Some(_) => (0.5 + h * n / (2.0 * l), Branch::Rise),
            None => (1.0 - (eta - h) * n / l, Branch::Tail),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawKind {
    Amo { lambda: f64 },
    General { h: f64 },
    Ak { h: f64, delta: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub kind: LawKind,
    pub windows: Vec<Window>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FValue {
    pub f: f64,
    pub window_id: usize,
    pub branch: Branch,
}

impl ScalingLaw {
    /// Windows between consecutive resonances of the IDS value.
    ///
    /// The last window is only covered up to where the next resonance could
    /// start (`|k| > K`) and only while `f` does not depend on it.
    pub fn amo(lambda: f64, res: &ResonanceSequence) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return invalid("amo law needs λ in (0,1)");
        }
        let h = -lambda.ln();
        let ent: Vec<_> = res.entries.iter().filter(|e| e.k != 0).collect();
        let mut windows = Vec::new();
        for (i, e) in ent.iter().enumerate() {
            let n = e.k.unsigned_abs() as f64;
            let eta = e.eta.unwrap_or(Ext::Infinite);
            let (big_n, l_max) = match ent.get(i + 1) {
                Some(nx) => {
                    let nn = nx.k.unsigned_abs() as f64;
                    (Some(nn), h * nn)
                }
                None => {
                    let bound = h * (res.search_bound + 1) as f64;
                    let l_max = match eta {
                        Ext::Infinite => f64::INFINITY,
                        Ext::Finite(x) if x <= h => bound,
                        Ext::Finite(x) => bound.min((2.0 * x - h) * n),
                    };
                    (None, l_max)
                }
            };
            windows.push(Window { n, big_n, eta, h, l_max });
        }
        Ok(ScalingLaw { kind: LawKind::Amo { lambda }, windows })
    }

    pub fn general(h: f64, n: f64, big_n: Ext, eta: Ext) -> Result<Self> {
        if !(h > 0.0 && n > 0.0) {
            return invalid("general law needs h > 0 and n > 0");
        }
        let (big_n, l_max) = match big_n {
            Ext::Finite(nn) => {
                if !(nn > n) {
                    return invalid("general law needs N > n");
                }
                (Some(nn), h * nn)
            }
            Ext::Infinite => (None, f64::INFINITY),
        };
        Ok(ScalingLaw { kind: LawKind::General { h }, windows: vec![Window { n, big_n, eta, h, l_max }] })
    }

    pub fn ak(h: f64, delta: f64, k_seq: &[i64]) -> Result<Self> {
        if !(h > 0.0 && delta >= 2.0 * PI * h) {
            return invalid("ak law needs 0 < 2πh <= δ");
        }
        let ks: Vec<f64> = k_seq.iter().filter(|k| **k != 0).map(|k| k.unsigned_abs() as f64).collect();
        if ks.len() < 2 {
            return invalid("ak law needs at least two nonzero resonances");
        }
        let th = 2.0 * PI * h;
        let windows = ks
            .windows(2)
            .map(|w| Window { n: w[0], big_n: Some(w[1]), eta: Ext::Finite(delta), h: th, l_max: th * w[1] })
            .collect();
        Ok(ScalingLaw { kind: LawKind::Ak { h, delta }, windows })
    }

    pub fn eval(&self, eps: f64) -> Result<FValue> {
        if !(eps > 0.0 && eps < 1.0) {
            return domain(format!("eps={eps} outside (0,1)"));
        }
        let l = -eps.ln();
        for (i, w) in self.windows.iter().enumerate() {
            if l >= w.l_lo() && l <= w.l_hi() {
                let (f, branch) = w.f_at(l);
                return Ok(FValue { f, window_id: i, branch });
            }
        }
        Err(QpError::Uncovered(format!("eps={eps:.3e} lies outside every resonance window")))
    }

    /// Windows as `(eps_lo, eps_hi)`.
    pub fn eps_windows(&self) -> Vec<(f64, f64)> {
        self.windows.iter().map(|w| w.eps_range()).collect()
    }
}

/// `f(ε)` for the almost Mathieu operator.
pub fn amo_f(eps: f64, lambda: f64, res: &ResonanceSequence) -> Result<f64> {
    Ok(ScalingLaw::amo(lambda, res)?.eval(eps)?.f)
}

/// `f(ε)` of the general criterion on `ln ε⁻¹ ∈ [hn, hN]` (`N` may be infinite).
pub fn general_f(eps: f64, h: f64, n: f64, big_n: Ext, eta: Ext) -> Result<f64> {
    let law = ScalingLaw::general(h, n, big_n, eta)?;
    let l = -eps.ln();
    let w = &law.windows[0];
    if !(l >= w.l_lo() - 1e-12 * l.abs() && l <= w.l_hi() * (1.0 + 1e-12)) {
        return domain(format!("ln ε⁻¹ = {l} outside [{}, {}]", w.l_lo(), w.l_hi()));
    }
    Ok(w.f_at(l).0)
}

/// `f(ε)` of the Anosov–Katok cocycle with resonances `k_seq`.
pub fn ak_f(eps: f64, h: f64, delta: f64, k_seq: &[i64]) -> Result<f64> {
    ScalingLaw::ak(h, delta, k_seq)?.eval(eps).map(|v| v.f).map_err(|e| match e {
        QpError::Uncovered(m) => QpError::Domain(m),
        other => other,
    })
}

/// `ψ(x)` on `ln x ∈ [hn, hN]`.
pub fn psi(x: f64, n: f64, big_n: f64, eta_n: f64, h: f64) -> Result<f64> {
    let l = x.ln();
    if !(l >= h * n * (1.0 - 1e-12) && l <= h * big_n * (1.0 + 1e-12)) {
        return domain(format!("ln x = {l} outside [{}, {}]", h * n, h * big_n));
    }
    Ok(psi_ln(l, n, big_n, eta_n, h))
}

/// `ψ` as a function of `ln x`.
pub fn psi_ln(l: f64, n: f64, big_n: f64, eta_n: f64, h: f64) -> f64 {
    if eta_n <= h {
        return 2.0;
    }
    if l <= eta_n * n {
        4.0 - 2.0 * h * n / l
    } else {
        2.0 + (2.0 * eta_n * n - 2.0 * h * n) / l * (1.0 - (l - eta_n * n) / (h * big_n - eta_n * n))
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EtaProfile {
    pub n: f64,
    pub big_n: f64,
    pub zeta_n: Ext,
    pub eta_hat_n: Ext,
    pub eta_n: Ext,
    pub gamma0: f64,
    pub h: f64,
}

/// `η₊ⁿ(k) = max{ηⁿ(k), 2}` on `e^{γ₀n/5} <= k <= e^{γ₀N/5}`.
pub fn eta_plus(k: f64, p: &EtaProfile) -> Result<f64> {
    let lk = k.ln();
    let (lo, hi) = (p.gamma0 * p.n / 5.0, p.gamma0 * p.big_n / 5.0);
    if !(lk >= lo * (1.0 - 1e-12) && lk <= hi * (1.0 + 1e-12)) {
        return domain(format!("ln k = {lk} outside [{lo}, {hi}]"));
    }
    Ok(eta_plus_unchecked(lk, p))
}

/// `η₊ⁿ` as a function of `ln k`, without the window check.
pub fn eta_plus_unchecked(lk: f64, p: &EtaProfile) -> f64 {
    let zeta = match p.zeta_n {
        Ext::Infinite => return 2.0,
        Ext::Finite(z) => z,
    };
    let v = match p.eta_hat_n {
        Ext::Infinite => 4.0 - 2.0 * zeta * p.n / lk,
        Ext::Finite(eh) if lk <= eh * p.n => 4.0 - 2.0 * zeta * p.n / lk,
        Ext::Finite(eh) => 2.0 + (2.0 * eh * p.n - 2.0 * zeta * p.n) / lk,
    };
    v.max(2.0)
}

/// `(D̲μ, D̄μ)` for the almost Mathieu operator.
pub fn local_dimensions(lambda: f64, delta: Ext, gap_edge: bool) -> (f64, f64) {
    if gap_edge {
        return (0.5, 0.5);
    }
    match delta {
        Ext::Infinite => (0.5, 1.0),
        Ext::Finite(d) => (d / (2.0 * d + lambda.ln()).max(d), 1.0),
    }
}

/// Stratified Hölder exponent for resonance strength `δ` and band `2πh`.
pub fn holder_exponent(delta: Ext, two_pi_h: f64) -> f64 {
    match delta {
        Ext::Infinite => 0.5,
        Ext::Finite(d) if d >= two_pi_h => d / (2.0 * d - two_pi_h),
        Ext::Finite(_) => 1.0,
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub rms_residual: f64,
}

/// Ordinary least squares `y ≈ a + s·x`.
pub fn linear_fit(pts: &[(f64, f64)]) -> LineFit {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let dof = (n - 2.0).max(1.0);
    let slope_stderr = if sxx > 0.0 { (ss / dof / sxx).sqrt() } else { f64::INFINITY };
    LineFit { slope, intercept, slope_stderr, rms_residual: (ss / n).sqrt() }
}

/// Two-sided 97.5% Student-t quantile (Cornish–Fisher expansion).
fn t975(dof: f64) -> f64 {
    let z: f64 = 1.959963984540054;
    let z3 = z.powi(3);
    let z5 = z.powi(5);
    let z7 = z.powi(7);
    z + (z3 + z) / (4.0 * dof)
        + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * dof * dof)
        + (3.0 * z7 + 19.0 * z5 + 17.0 * z3 - 15.0 * z) / (384.0 * dof.powi(3))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WindowFit {
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub slope: f64,
    /// Half-width of the 95% confidence band.
    pub band: f64,
    pub rms_residual: f64,
    pub points: usize,
}

/// Slope of `ln mass` against `ln eps` in each window.
pub fn fit_loglog(samples: &[(f64, f64)], windows: &[(f64, f64)]) -> Result<Vec<WindowFit>> {
    windows
        .iter()
        .map(|&(lo, hi)| {
            let pts: Vec<(f64, f64)> = samples
                .iter()
                .filter(|s| s.0 >= lo && s.0 <= hi && s.0 > 0.0 && s.1 > 0.0)
                .map(|s| (s.0.ln(), s.1.ln()))
                .collect();
            if pts.len() < 8 {
                return invalid(format!("window [{lo:.3e}, {hi:.3e}] has {} samples, need 8", pts.len()));
            }
            let xs = pts.iter().map(|p| p.0);
            let span = (xs.clone().fold(f64::NEG_INFINITY, f64::max) - xs.fold(f64::INFINITY, f64::min))
                / std::f64::consts::LN_10;
            if span < 1.5 {
                return invalid(format!("window [{lo:.3e}, {hi:.3e}] spans {span:.2} decades, need 1.5"));
            }
            let f = linear_fit(&pts);
            Ok(WindowFit {
                eps_lo: lo,
                eps_hi: hi,
                slope: f.slope,
                band: t975(pts.len() as f64 - 2.0) * f.slope_stderr,
                rms_residual: f.rms_residual,
                points: pts.len(),
            })
        })
        .collect()
}

/// Single-window fit over all samples.
pub fn fit_loglog_all(samples: &[(f64, f64)]) -> Result<WindowFit> {
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(fit_loglog(samples, &[(lo, hi)])?.remove(0))
}
