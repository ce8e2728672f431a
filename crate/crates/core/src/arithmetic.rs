//! Continued fractions, torus distances, resonance detection and engineered
//! phases.

use crate::error::{invalid, QpError, Result};
use crate::fixed::Fixed;
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Fewer digits than this are rejected rather than silently cycled.
pub const MIN_CF_DIGITS: usize = 8;

/// Default working precision for torus arithmetic.
pub const DEFAULT_PRECISION_BITS: u32 = 256;

/// `inf_j |x − j|` for a double.
pub fn torus_dist(x: f64) -> f64 {
    assert!(x.is_finite(), "torus_dist of non-finite value");
    (x - x.round()).abs()
}

/// A positive real that may carry an explicit infinity flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Ext {
    Finite(f64),
    Infinite,
}

impl Ext {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Ext::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Ext::Finite(x) => Some(*x),
            Ext::Infinite => None,
        }
    }
}

/// JSON form of a frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencySpec {
    pub cf_digits: Vec<u64>,
    pub precision_bits: u32,
}

/// An irrational frequency given by continued-fraction digits.
///
/// Digit lists shorter than what `precision_bits` needs are continued
/// periodically, so `[1; 8]` is the golden mean and `[2; 8]` is `√2 − 1`.
#[derive(Clone, Debug)]
pub struct Frequency {
    pub cf_digits: Vec<u64>,
    /// Partial quotients `a_1, a_2, …` actually used (periodic continuation).
    pub partial_quotients: Vec<u64>,
    /// `(p_n, q_n)` for `n = 1..`.
    pub convergents: Vec<(BigInt, BigInt)>,
    pub precision_bits: u32,
    value: Fixed,
    /// `min_n q_n ‖q_n α‖`, the Diophantine constant for exponent τ = 1.
    pub gamma_est: f64,
    /// `max_n ln q_{n+1} / ln q_n`, a crude Diophantine exponent.
    pub tau_est: f64,
}

impl Frequency {
    pub fn spec(&self) -> FrequencySpec {
        FrequencySpec { cf_digits: self.cf_digits.clone(), precision_bits: self.precision_bits }
    }

    pub fn from_spec(s: &FrequencySpec) -> Result<Self> {
        build_frequency(&s.cf_digits, s.precision_bits)
    }

    pub fn golden(precision_bits: u32) -> Self {
        build_frequency(&[1; 60], precision_bits).expect("golden mean digits are valid")
    }

    pub fn value(&self) -> &Fixed {
        &self.value
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    /// `frac(α)` as a 128-bit phase increment for long orbits.
    pub fn to_u128(&self) -> u128 {
        self.value.to_u128_phase()
    }

    /// Denominators `q_n` that fit in an `i64`.
    pub fn denominators(&self) -> Vec<i64> {
        self.convergents.iter().filter_map(|(_, q)| q.to_i64()).collect()
    }

    /// Smallest stored denominator `q_n >= n`.
    pub fn denominator_at_least(&self, n: i64) -> i64 {
        self.denominators().into_iter().find(|&q| q >= n).unwrap_or(n)
    }

    /// `‖φ − kα‖_T` at working precision.
    pub fn dist(&self, phase: &Fixed, k: i64) -> Fixed {
        phase.sub(&self.value.mul_int(k)).torus_dist()
    }

    /// Largest rate `−ln‖q_n α‖ / q_n` over the stored convergents. Targets at
    /// or below it are dominated by the frequency's own approximations.
    pub fn diophantine_floor(&self) -> f64 {
        let mut floor = 0.0f64;
        for (_, q) in self.convergents.iter().take(40) {
            let Some(q) = q.to_i64() else { break };
            let d = self.value.mul_int(q).torus_dist();
            if d.is_zero() {
                continue;
            }
            floor = floor.max(-d.ln_abs() / q as f64);
        }
        floor
    }
}

/// Evaluate `[0; a_1, a_2, …]` to `precision_bits`.
pub fn build_frequency(cf_digits: &[u64], precision_bits: u32) -> Result<Frequency> {
    if cf_digits.is_empty() {
        return invalid("continued-fraction digit list is empty");
    }
    if cf_digits.iter().any(|&a| a == 0) {
        return invalid("continued-fraction digits must be positive");
    }
    if cf_digits.len() < MIN_CF_DIGITS {
        return invalid(format!(
            "rational tail exhausted: {} digits given, at least {} required",
            cf_digits.len(),
            MIN_CF_DIGITS
        ));
    }
    if precision_bits < 64 {
        return invalid("precision_bits must be at least 64");
    }
    // q_n must exceed 2^{bits/2 + 8} so that |α − p_n/q_n| < 1/q_n^2 is below resolution.
    let target_q: BigInt = BigInt::one() << (precision_bits as usize / 2 + 8);
    // (p_{-1}, p_0) = (1, 0), (q_{-1}, q_0) = (0, 1) for [0; a_1, …].
    let (mut p2, mut p1) = (BigInt::one(), BigInt::zero());
    let (mut q2, mut q1) = (BigInt::zero(), BigInt::one());
    let mut quotients = Vec::new();
    let mut convergents = Vec::new();
    let mut i = 0usize;
    // One extra convergent beyond the target keeps the error bound 1/(q_n q_{n+1}) meaningful.
    let mut past_target = 0;
    while past_target < 2 || i < cf_digits.len() {
        let a = cf_digits[i % cf_digits.len()];
        let a_big = BigInt::from(a);
        let p = &a_big * &p1 + &p2;
        let q = &a_big * &q1 + &q2;
        p2 = std::mem::replace(&mut p1, p.clone());
        q2 = std::mem::replace(&mut q1, q.clone());
        quotients.push(a);
        if q >= target_q {
            past_target += 1;
        }
        convergents.push((p, q));
        i += 1;
    }
    let (p, q) = convergents.last().expect("at least one convergent");
    let value = Fixed::from_ratio(p, q, precision_bits);

    let mut gamma_est = f64::INFINITY;
    let mut tau_est = 1.0f64;
    for w in convergents.windows(2).take(60) {
        let (q0, q1) = (&w[0].1, &w[1].1);
        let (Some(q0f), Some(q1f)) = (q0.to_f64(), q1.to_f64()) else { break };
        if let Some(qi) = q0.to_i64() {
            let d = value.mul_int(qi).torus_dist().to_f64();
            if d > 0.0 {
                gamma_est = gamma_est.min(q0f * d);
            }
        }
        if q0f >= 2.0 {
            tau_est = tau_est.max(q1f.ln() / q0f.ln());
        }
    }

    Ok(Frequency {
        cf_digits: cf_digits.to_vec(),
        partial_quotients: quotients,
        convergents,
        precision_bits,
        value,
        gamma_est,
        tau_est,
    })
}

/// One ε₀-resonance `k` of a phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceEntry {
    pub k: i64,
    /// `‖phase − kα‖_T`; exactly `0.0` on an exact hit.
    pub gap: f64,
    /// `ln gap`, finite even when `gap` underflows a double.
    pub ln_gap: f64,
    /// `−ln(gap)/|k|`; `None` for the `k = 0` entry.
    pub eta: Option<Ext>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResonanceSequence {
    pub phase: f64,
    pub epsilon0: f64,
    pub entries: Vec<ResonanceEntry>,
    pub search_bound: i64,
    /// `|k_{s+1}| / e^{ε₀ |k_s|}` for consecutive nonzero entries.
    pub repulsion_ratios: Vec<f64>,
}

impl ResonanceSequence {
    pub fn ks(&self) -> Vec<i64> {
        self.entries.iter().map(|e| e.k).collect()
    }

    pub fn find(&self, k: i64) -> Option<&ResonanceEntry> {
        self.entries.iter().find(|e| e.k == k)
    }

    /// CSV rows `k,gap,eta` (eta is `inf` on exact hits, empty for k = 0).
    pub fn csv_rows(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| {
                let eta = match e.eta {
                    None => String::new(),
                    Some(Ext::Infinite) => "inf".into(),
                    Some(Ext::Finite(x)) => format!("{x:.16e}"),
                };
                format!("{},{:.16e},{}", e.k, e.gap, eta)
            })
            .collect()
    }
}

fn entry(k: i64, d: &Fixed) -> ResonanceEntry {
    let ln_gap = d.ln_abs();
    let eta = if k == 0 {
        None
    } else if d.is_zero() {
        Some(Ext::Infinite)
    } else {
        Some(Ext::Finite(-ln_gap / k.unsigned_abs() as f64))
    };
    ResonanceEntry { k, gap: d.to_f64(), ln_gap, eta }
}

/// All ε₀-resonances of `phase` with `|k| <= K`, by exhaustive scan.
///
/// `k` is kept when `‖phase − kα‖ <= e^{−ε₀|k|}` and the distance equals the
/// minimum over `|j| <= |k|`. When `±k` tie, the positive one is kept.
pub fn resonances(alpha: &Frequency, phase: &Fixed, epsilon0: f64, k_max: i64) -> Result<ResonanceSequence> {
    if k_max < 1 {
        return invalid("search bound K must be at least 1");
    }
    if !(epsilon0 > 0.0) {
        return invalid("epsilon0 must be positive");
    }
    let phase = phase_at(phase, alpha.precision_bits);
    let a = alpha.value();
    let d0 = phase.torus_dist();
    let mut best = d0.clone();
    let mut entries = vec![entry(0, &d0)];
    let mut plus = phase.clone();
    let mut minus = phase.clone();
    for k in 1..=k_max {
        plus = plus.sub(a);
        minus = minus.add(a);
        let dp = plus.torus_dist();
        let dm = minus.torus_dist();
        let thresh = -epsilon0 * k as f64;
        let (cand_k, cand_d) = if dm.cmp_value(&dp).is_lt() { (-k, &dm) } else { (k, &dp) };
        if cand_d.cmp_value(&best).is_le() && cand_d.ln_abs() <= thresh {
            entries.push(entry(cand_k, cand_d));
        }
        if cand_d.cmp_value(&best).is_lt() {
            best = cand_d.clone();
        }
    }
    let repulsion_ratios = entries
        .windows(2)
        .skip(1)
        .map(|w| w[1].k.unsigned_abs() as f64 / (epsilon0 * w[0].k.unsigned_abs() as f64).exp())
        .collect();
    Ok(ResonanceSequence {
        phase: phase.to_f64(),
        epsilon0,
        entries,
        search_bound: k_max,
        repulsion_ratios,
    })
}

fn phase_at(phase: &Fixed, bits: u32) -> Fixed {
    match phase.bits().cmp(&bits) {
        std::cmp::Ordering::Equal => phase.clone(),
        std::cmp::Ordering::Less => phase.widen(bits),
        std::cmp::Ordering::Greater => Fixed::from_raw(phase.raw() >> (phase.bits() - bits) as usize, bits),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeltaEstimate {
    /// `max_{1<=|k|<=K} −ln‖φ − kα‖/|k|`. A finite-K lower bound for the limsup.
    pub lower_bound: Ext,
    pub witness_k: i64,
    pub search_bound: i64,
}

/// Finite-K lower bound for the resonance-strength exponent δ(α, φ).
pub fn delta_exponent(alpha: &Frequency, phase: &Fixed, k_max: i64) -> Result<DeltaEstimate> {
    if k_max < 1 {
        return invalid("search bound K must be at least 1");
    }
    let phase = phase_at(phase, alpha.precision_bits);
    let a = alpha.value();
    let mut plus = phase.clone();
    let mut minus = phase;
    let mut best = f64::NEG_INFINITY;
    let mut witness = 0;
    for k in 1..=k_max {
        plus = plus.sub(a);
        minus = minus.add(a);
        for (kk, d) in [(k, plus.torus_dist()), (-k, minus.torus_dist())] {
            if d.is_zero() {
                return Ok(DeltaEstimate { lower_bound: Ext::Infinite, witness_k: kk, search_bound: k_max });
            }
            let r = -d.ln_abs() / k as f64;
            if r > best {
                best = r;
                witness = kk;
            }
        }
    }
    Ok(DeltaEstimate { lower_bound: Ext::Finite(best.max(0.0)), witness_k: witness, search_bound: k_max })
}

/// Knobs of the greedy phase engineering loop.
#[derive(Clone, Debug)]
pub struct EngineerOptions {
    pub eta_target: f64,
    pub depth: usize,
    pub seed_k: i64,
    /// Accepted deviation of each achieved `eta_s` from the target.
    pub tol: f64,
    /// Maximal relative change of earlier gaps per nudge; `None` keeps only the `tol` check.
    pub max_disturbance: Option<f64>,
    /// Enforce `2φ − k_sα = j_s + x_s` with `j_s` even and `x_s ∈ [0, 1/2)`,
    /// including `k = 0` (so `2φ ∈ [0, 1/2)`).
    pub parity: bool,
    /// Upper limit on `|k|` explored for each new stage.
    pub max_search: i64,
}

impl EngineerOptions {
    pub fn new(eta_target: f64, depth: usize, seed_k: i64) -> Self {
        EngineerOptions {
            eta_target,
            depth,
            seed_k,
            tol: 0.02 * eta_target,
            max_disturbance: Some(0.01),
            parity: false,
            max_search: 2_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EngineeredPhase {
    /// `φ`, carrying one more fraction bit than `two_phi`.
    pub phi: Fixed,
    /// `2φ` (reduced to `[0, 2)` in parity mode, `[0, 1)` otherwise).
    pub two_phi: Fixed,
    pub ks: Vec<i64>,
    /// Signed residuals `x_s` with `2φ − k_sα = j_s + x_s`.
    pub residuals: Vec<Fixed>,
    pub sequence: ResonanceSequence,
}

impl EngineeredPhase {
    pub fn etas(&self) -> Vec<f64> {
        self.ks
            .iter()
            .zip(&self.residuals)
            .map(|(k, x)| -x.ln_abs() / k.unsigned_abs() as f64)
            .collect()
    }
}

/// `φ` whose doubled value resonates at rate `eta_target` along `depth` integers.
pub fn engineer_phase(alpha: &Frequency, eta_target: f64, depth: usize, seed_k: i64) -> Result<(Fixed, ResonanceSequence)> {
    let e = engineer_phase_with(alpha, &EngineerOptions::new(eta_target, depth, seed_k))?;
    Ok((e.phi, e.sequence))
}

/// Residual of `2φ − kα` in the active convention: centered mod 1, or in `[0, 2)` with parity.
fn residual(two_phi: &Fixed, alpha: &Fixed, k: i64, parity: bool) -> Fixed {
    let r = two_phi.sub(&alpha.mul_int(k));
    if parity {
        r.rem_int(2)
    } else {
        r.centered()
    }
}

pub fn engineer_phase_with(alpha: &Frequency, opts: &EngineerOptions) -> Result<EngineeredPhase> {
    let eta = opts.eta_target;
    if !(eta > 0.0) {
        return invalid("eta_target must be positive");
    }
    if opts.depth < 1 {
        return invalid("depth must be at least 1");
    }
    if opts.seed_k == 0 {
        return invalid("seed_k must be nonzero");
    }
    let floor = alpha.diophantine_floor();
    if eta <= floor {
        return invalid(format!("eta_target {eta} does not exceed the Diophantine floor {floor:.4}"));
    }
    let bits = alpha.precision_bits;
    let a = alpha.value();
    // Largest |k| whose target gap e^{-eta|k|} still has 64 significant bits.
    let k_precision = (((bits as f64 - 64.0) * std::f64::consts::LN_2) / eta).floor() as i64;
    if opts.seed_k.abs() > k_precision {
        return Err(QpError::PrecisionExhausted {
            achieved: 0,
            requested: opts.depth,
            detail: format!("seed |k|={} needs more than {bits} bits", opts.seed_k.abs()),
        });
    }

    let gap = |k: i64| Fixed::exp_neg(eta * k.unsigned_abs() as f64, bits);
    let seed = opts.seed_k;
    let mut two_phi = a.mul_int(seed).add(&gap(seed));
    two_phi = if opts.parity { two_phi.rem_int(2) } else { two_phi.frac() };
    if opts.parity && !in_sigma_plus(&two_phi) {
        return invalid(format!("seed k={seed} violates the parity normalization (2φ mod 2 must lie in [0, 1/2))"));
    }
    let mut ks = vec![seed];
    let mut res = vec![residual(&two_phi, a, seed, opts.parity)];

    while ks.len() < opts.depth {
        let last = ks.last().unwrap().abs();
        let limit = k_precision.min(opts.max_search);
        let mut found = None;
        // Running kα for both signs avoids a big multiplication per candidate.
        let mut plus = a.mul_int(last);
        let mut minus = plus.neg();
        for kk in (last + 1)..=limit {
            plus = plus.add(a);
            minus = minus.sub(a);
            for (k, ka) in [(kk, &plus), (-kk, &minus)] {
                let r = two_phi.sub(ka);
                let r = if opts.parity { r.rem_int(2) } else { r.centered() };
                let target = gap(k);
                let delta = nudge(&r, &target, opts.parity);
                if admissible(&delta, &two_phi, &ks, &res, opts) {
                    found = Some((k, delta));
                    break;
                }
            }
            if found.is_some() {
                break;
            }
        }
        let Some((k, delta)) = found else {
            return Err(QpError::PrecisionExhausted {
                achieved: ks.len(),
                requested: opts.depth,
                detail: format!(
                    "no admissible resonance with |k| <= {limit} at {bits} bits (precision allows |k| <= {k_precision})"
                ),
            });
        };
        two_phi = two_phi.add(&delta);
        two_phi = if opts.parity { two_phi.rem_int(2) } else { two_phi.frac() };
        ks.push(k);
        res = ks.iter().map(|&k| residual(&two_phi, a, k, opts.parity)).collect();
    }

    let entries = std::iter::once(entry(0, &two_phi.torus_dist()))
        .chain(ks.iter().zip(&res).map(|(&k, x)| entry(k, &x.abs().torus_dist())))
        .collect();
    let sequence = ResonanceSequence {
        phase: two_phi.to_f64(),
        epsilon0: eta - opts.tol,
        entries,
        search_bound: ks.iter().map(|k| k.abs()).max().unwrap_or(0),
        repulsion_ratios: ks
            .windows(2)
            .map(|w| w[1].unsigned_abs() as f64 / ((eta - opts.tol) * w[0].unsigned_abs() as f64).exp())
            .collect(),
    };
    Ok(EngineeredPhase { phi: two_phi.half(), two_phi, ks, residuals: res, sequence })
}

fn in_sigma_plus(x: &Fixed) -> bool {
    !x.is_negative() && x.to_f64() < 0.5
}

/// Shift of `2φ` that moves the residual `r` onto `target`.
fn nudge(r: &Fixed, target: &Fixed, parity: bool) -> Fixed {
    if parity {
        // r in [0, 2); pick the representative of target − r in (−1, 1].
        let d = target.sub(r);
        if d.to_f64() <= -1.0 {
            d.add(&Fixed::from_int(2, d.bits()))
        } else {
            d
        }
    } else {
        // r centered; land on +target or −target, whichever is closer.
        let up = target.sub(r);
        let down = target.neg().sub(r);
        if up.abs().cmp_value(&down.abs()).is_le() {
            up
        } else {
            down
        }
    }
}

fn admissible(delta: &Fixed, two_phi: &Fixed, ks: &[i64], res: &[Fixed], opts: &EngineerOptions) -> bool {
    let dabs = delta.abs();
    if let Some(md) = opts.max_disturbance {
        let ln_d = dabs.ln_abs();
        if res.iter().any(|x| ln_d > md.ln() + x.ln_abs()) {
            return false;
        }
    }
    if opts.parity {
        if !in_sigma_plus(&two_phi.add(delta)) {
            return false;
        }
    }
    for (&k, x) in ks.iter().zip(res) {
        let moved = x.add(delta);
        if moved.is_zero() {
            return false;
        }
        if opts.parity && !in_sigma_plus(&moved) {
            return false;
        }
        let eta = -moved.abs().ln_abs() / k.unsigned_abs() as f64;
        if (eta - opts.eta_target).abs() > opts.tol {
            return false;
        }
    }
    true
}
