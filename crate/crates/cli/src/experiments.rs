//! One function per subcommand. Each reads what it needs from the config,
//! runs the pipeline and writes its artifacts.

use crate::config::{CocycleSpec, ConfigError, EnergyRule, ExperimentConfig as Cfg, LawSpec};
use crate::output::{num, opt, Out};
use num_complex::Complex64 as C64;
use qp_core::anosov_katok::{ak_build, ak_goodness_report, AkBuild};
use qp_core::arithmetic::{delta_exponent, resonances, torus_dist, Ext, Frequency};
use qp_core::cocycle::{lyapunov, rotation_number, QpCocycle};
use qp_core::fixed::Fixed;
use qp_core::ids::{gap_edges, ids_scan, label_plateaus, locate_gap_edge, RotationIds, EDGE_ROTATION_N};
use qp_core::linalg2::Mat2;
use qp_core::scaling::{fit_loglog_all, ScalingLaw};
use qp_core::subordinacy::profile;
use qp_core::weyl::{measure_window_with, whole_line_M, MeasureOptions, WeylSolver};
use qp_core::QpError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::sync::Arc;

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(QpError),
    Io(std::io::Error),
    /// A verification step ran but did not pass.
    Check(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Core(QpError::InvalidInput(_) | QpError::Domain(_)) => 2,
            RunError::Core(QpError::PrecisionExhausted { .. }) => 3,
            RunError::Core(QpError::NonConvergence { .. }) => 4,
            _ => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Core(e) => write!(f, "{e}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
            RunError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<QpError> for RunError {
    fn from(e: QpError) -> Self {
        RunError::Core(e)
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

type Res = Result<(), RunError>;

fn fixed_hex(x: &Fixed) -> String {
    let raw = x.raw();
    let sign = if raw.sign() == num_bigint::Sign::Minus { "-" } else { "" };
    format!("{sign}0x{}p-{}", raw.magnitude().to_str_radix(16), x.bits())
}

fn phase(cfg: &Cfg) -> Result<Fixed, ConfigError> {
    let p = Cfg::need(&cfg.phase, "phase")?;
    Ok(Fixed::from_f64(p, cfg.precision_bits))
}

fn energy(cfg: &Cfg, alpha: &Frequency) -> Result<f64, RunError> {
    match Cfg::need(&cfg.energy, "energy")? {
        EnergyRule::Fixed { e } => Ok(e),
        EnergyRule::GapEdge { k, bracket, tol } => {
            let v = cfg.operator()?.potential();
            let edge = locate_gap_edge(&v, alpha, k, (bracket[0], bracket[1]), tol)?;
            eprintln!("gap edge k={k}: E = {:.17} (bracket {:?})", edge.e_edge, edge.bracket);
            Ok(edge.e_edge)
        }
    }
}

fn schrodinger(cfg: &Cfg, alpha: &Arc<Frequency>, e: f64) -> Result<QpCocycle, ConfigError> {
    Ok(QpCocycle::schrodinger(alpha.clone(), cfg.operator()?.potential(), e))
}

fn build_ak(cfg: &Cfg, alpha: &Arc<Frequency>) -> Result<AkBuild, RunError> {
    let spec = Cfg::need(&cfg.ak, "ak")?;
    let b = ak_build(alpha, &spec.params())?;
    for w in &b.diagnostics.warnings {
        eprintln!("warning: {w}");
    }
    Ok(b)
}

fn cocycle(cfg: &Cfg, alpha: &Arc<Frequency>) -> Result<QpCocycle, RunError> {
    match cfg.cocycle.clone().unwrap_or(CocycleSpec::Schrodinger) {
        CocycleSpec::Schrodinger => Ok(schrodinger(cfg, alpha, energy(cfg, alpha)?)?),
        CocycleSpec::Constant { m } => Ok(QpCocycle::constant(alpha.clone(), Mat2::real(m[0], m[1], m[2], m[3]))),
        CocycleSpec::Ak => Ok(build_ak(cfg, alpha)?.a_infinity),
    }
}

pub fn resonances_cmd(cfg: &Cfg, out: &mut Out) -> Res {
    let alpha = cfg.frequency()?;
    let ph = phase(cfg)?;
    let eps0 = Cfg::need(&cfg.epsilon0, "epsilon0")?;
    let k_max = Cfg::need(&cfg.k_max, "k_max")?;
    let seq = resonances(&alpha, &ph, eps0, k_max)?;
    let rows: Vec<Vec<String>> = seq
        .entries
        .iter()
        .map(|e| {
            let eta = match e.eta {
                Some(Ext::Finite(x)) => num(x),
                Some(Ext::Infinite) => "inf".into(),
                None => String::new(),
            };
            vec![e.k.to_string(), num(e.gap), num(e.ln_gap), eta]
        })
        .collect();
    out.csv("resonances.csv", &["k", "gap", "ln_gap", "eta"], &rows)?;
    out.json("resonances.json", &json!({ "phase_hex": fixed_hex(&ph), "sequence": seq }))?;
    Ok(())
}

pub fn delta_cmd(cfg: &Cfg, out: &mut Out) -> Res {
    let alpha = cfg.frequency()?;
    let ph = phase(cfg)?;
    let k_max = Cfg::need(&cfg.k_max, "k_max")?;
    let mut bounds = Vec::new();
    let mut k = 10i64;
    while k < k_max {
        bounds.push(k);
        k *= 10;
    }
    bounds.push(k_max);
    let rows = bounds
        .iter()
        .map(|&k| {
            let d = delta_exponent(&alpha, &ph, k)?;
            let lb = match d.lower_bound {
                Ext::Finite(x) => num(x),
                Ext::Infinite => "inf".into(),
            };
            Ok(vec![k.to_string(), lb, d.witness_k.to_string()])
        })
        .collect::<Result<Vec<_>, QpError>>()?;
    out.csv("delta.csv", &["K", "delta_lower_bound", "witness_k"], &rows)?;
    Ok(())
}

fn scan(cfg: &Cfg) -> Result<(Frequency, qp_core::ids::IdsCurve), RunError> {
    let alpha = cfg.frequency()?;
    let v = cfg.operator()?.potential();
    let grid = Cfg::need(&cfg.energies, "energies")?.values();
    let curve = ids_scan(&v, &alpha, cfg.theta, &grid, cfg.size.unwrap_or(10_000), cfg.rotation_n.unwrap_or(100_000))?;
    Ok((alpha, curve))
}

pub fn ids_scan_cmd(cfg: &Cfg, out: &mut Out) -> Res {
    let (alpha, curve) = scan(cfg)?;
    let rows: Vec<Vec<String>> = (0..curve.energies.len())
        .map(|i| vec![num(curve.energies[i]), num(curve.n_counting[i]), num(curve.n_rotation[i])])
        .collect();
    out.csv("ids.csv", &["E", "N_counting", "N_rotation"], &rows)?;
    let plateaus = label_plateaus(&curve, &alpha, 30, 1e-4, 2.0 / curve.rotation_n as f64)?;
    out.json("ids_plateaus.json", &json!({ "discrepancy": curve.discrepancy, "monotone": curve.is_monotone(), "plateaus": plateaus }))?;
    out.gnuplot(
        "ids.gp",
        "ids.csv",
        "set xlabel 'E'\nset ylabel 'N(E)'\nplot DATA using 1:2 with lines, DATA using 1:3 with points pt 7 ps 0.4",
    )?;
    Ok(())
}

pub fn gap_edges_cmd(cfg: &Cfg, out: &mut Out) -> Res {
    let (alpha, curve) = scan(cfg)?;
    let plateaus = label_plateaus(&curve, &alpha, 30, 1e-4, 2.0 / curve.rotation_n as f64)?;
    let rot = RotationIds::new(&cfg.operator()?.potential(), &alpha, EDGE_ROTATION_N);
    let edges = gap_edges(&rot, &curve, &alpha, &plateaus, 1e-12)?;
    let rows: Vec<Vec<String>> = edges
        .iter()
        .map(|(l, r)| vec![l.k.to_string(), num(l.n_star), num(l.e_edge), num(r.e_edge)])
        .collect();
    out.csv("gap_edges.csv", &["k", "N_star", "E_left", "E_right"], &rows)?;
    out.json("gap_edges.json", &edges)?;
    Ok(())
}

pub fn mfunc_cmd(cfg: &Cfg, out: &mut Out) -> Res {
    let alpha = Arc::new(cfg.frequency()?);
    let eta = Cfg::need(&cfg.eta, "eta")?;
    let c = schrodinger(cfg, &alpha, 0.0)?;
    let grid = Cfg::need(&cfg.energies, "energies")?.values();
    let vals = grid
        .par_iter()
        .map(|&e| whole_line_M(&c, cfg.theta, C64::new(e, eta)))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<String>> = vals
        .iter()
        .map(|t| {
            [t.z.re, t.z.im, t.m_plus.re, t.m_plus.im, t.m_minus.re, t.m_minus.im, t.big_m.re, t.big_m.im, t.residual]
                .into_iter()
                .map(num)
                .collect()
        })
        .collect();
    let header = ["E", "eta", "m_plus_re", "m_plus_im", "m_minus_re", "m_minus_im", "M_re", "M_im", "residual"];
    out.csv("mfunc.csv", &header, &rows)?;
    out.gnuplot("mfunc.gp", "mfunc.csv", "set xlabel 'E'\nset ylabel 'Im M'\nset logscale y\nplot DATA using 1:8 with lines")?;
    Ok(())
}

pub fn measure_scaling_cmd(cfg: &Cfg, out: &mut Out) -> Res {
    let alpha = Arc::new(cfg.frequency()?);
    let e = energy(cfg, &alpha)?;
    let c = schrodinger(cfg, &alpha, 0.0)?;
    let mut o = MeasureOptions::default();
    if let Some(r) = cfg.eta_ratio {
        o.eta_ratio = r;
    }
    let eps = Cfg::need(&cfg.eps_grid, "eps_grid")?.values();
    // WeylSolver caches potential samples in a RefCell, so each point gets its own.
    let windows = eps
        .par_iter()
        .map(|&x| WeylSolver::new(&c, cfg.theta).and_then(|s| measure_window_with(&s, e, x, &o)))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<String>> = windows
        .iter()
        .map(|w| vec![num(w.eps), num(w.mass), opt(w.bias), w.evaluations.to_string(), num(w.residual)])
        .collect();
    out.csv("measure.csv", &["eps", "mass", "bias", "evaluations", "residual"], &rows)?;
    let samples: Vec<(f64, f64)> = windows.iter().map(|w| (w.eps, w.mass)).collect();
    let fit = fit_loglog_all(&samples)?;
    eprintln!("slope {:.4} ± {:.4} over {} points", fit.slope, fit.band, fit.points);
    out.json("measure_fit.json", &json!({ "energy": e, "eta_ratio": o.eta_ratio, "fit": fit }))?;
    out.gnuplot(
        "measure.gp",
        "measure.csv",
        "set logscale xy\nset xlabel 'eps'\nset ylabel 'mu(E-eps, E+eps)'\nplot DATA using 1:2 with linespoints",
    )?;
    Ok(())
}

pub fn predict_f_cmd(cfg: &Cfg, out: &mut Out) -> Res {
    let law = match Cfg::need(&cfg.law, "law")? {
        LawSpec::Amo { lambda, phase, epsilon0, k_max } => {
            let alpha = cfg.frequency()?;
            let seq = resonances(&alpha, &Fixed::from_f64(phase, cfg.precision_bits), epsilon0, k_max)?;
            ScalingLaw::amo(lambda, &seq)?
        }
        LawSpec::General { h, n, big_n, eta } => ScalingLaw::general(
            h,
            n,
            big_n.map(Ext::Finite).unwrap_or(Ext::Infinite),
            eta.map(Ext::Finite).unwrap_or(Ext::Infinite),
        )?,
        LawSpec::Ak { h, delta, ks } => ScalingLaw::ak(h, delta, &ks)?,
    };
    let eps = Cfg::need(&cfg.eps_grid, "eps_grid")?.values();
    let rows: Vec<Vec<String>> = eps
        .iter()
        .map(|&x| match law.eval(x) {
            Ok(v) => vec![num(x), num(v.f), v.window_id.to_string(), format!("{:?}", v.branch).to_lowercase()],
            Err(_) => vec![num(x), String::new(), String::new(), "uncovered".into()],
        })
        .collect();
    out.csv("predict_f.csv", &["eps", "f_predicted", "window_id", "branch"], &rows)?;
    out.json("predict_f_law.json", &law)?;
    out.gnuplot(
        "predict_f.gp",
        "predict_f.csv",
        "set xlabel 'log(1/eps)'\nset ylabel 'f'\nset yrange [0.45:1.05]\nplot DATA using (-log($1)):2 with lines",
    )?;
    Ok(())
}

pub fn detp_profile_cmd(cfg: &Cfg, out: &mut Out) -> Res {
    let alpha = Arc::new(cfg.frequency()?);
    let c = cocycle(cfg, &alpha)?;
    let k_max = cfg.k_max.unwrap_or(10_000);
    let ratio = cfg.ratio.unwrap_or(1.05);
    let mut thetas = vec![cfg.theta];
    if let Some(n) = cfg.theta_probes {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        thetas.extend((0..n).map(|_| rng.gen_range(0.0..1.0)));
    }
    let profiles = thetas.iter().map(|&t| profile(&c, t, k_max, ratio)).collect::<Result<Vec<_>, _>>()?;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for p in &profiles {
        for r in &p.rows {
            rows.push(vec![num(p.theta), r.k.to_string(), num(r.det_plus), num(r.det_minus), num(r.eps_of_k)]);
        }
        fits.push(json!({ "theta": p.theta, "truncated_at": p.truncated_at, "slope": p.slope(1e2, k_max as f64).ok() }));
    }
    out.csv("detp.csv", &["theta", "k", "det_plus", "det_minus", "eps_of_k"], &rows)?;
    out.json("detp_fit.json", &fits)?;
    out.gnuplot("detp.gp", "detp.csv", "set logscale xy\nset xlabel 'k'\nset ylabel 'det P'\nplot DATA using 2:3 with points pt 7 ps 0.5")?;
    Ok(())
}

fn energy_cocycles(cfg: &Cfg) -> Result<(Arc<Frequency>, Vec<f64>), RunError> {
    let alpha = Arc::new(cfg.frequency()?);
    let grid = Cfg::need(&cfg.energies, "energies")?.values();
    cfg.operator()?;
    Ok((alpha, grid))
}

pub fn lyapunov_cmd(cfg: &Cfg, out: &mut Out) -> Res {
    let (alpha, grid) = energy_cocycles(cfg)?;
    let n = cfg.iterations.unwrap_or(10_000);
    let vals = grid
        .par_iter()
        .map(|&e| lyapunov(&schrodinger(cfg, &alpha, e).expect("operator checked"), n, 8))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<String>> =
        grid.iter().zip(&vals).map(|(e, l)| vec![num(*e), num(l.value), num(l.fluctuation)]).collect();
    out.csv("lyapunov.csv", &["E", "lyapunov", "fluctuation"], &rows)?;
    out.gnuplot("lyapunov.gp", "lyapunov.csv", "set xlabel 'E'\nset ylabel 'L(E)'\nplot DATA using 1:2 with lines")?;
    Ok(())
}

pub fn rotation_cmd(cfg: &Cfg, out: &mut Out) -> Res {
    let (alpha, grid) = energy_cocycles(cfg)?;
    let n = cfg.iterations.unwrap_or(100_000);
    let vals = grid
        .par_iter()
        .map(|&e| rotation_number(&schrodinger(cfg, &alpha, e).expect("operator checked"), n, cfg.theta))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<String>> =
        grid.iter().zip(&vals).map(|(e, r)| vec![num(*e), num(r.rho), num(r.error_bar)]).collect();
    out.csv("rotation.csv", &["E", "rho", "error_bar"], &rows)?;
    out.gnuplot("rotation.gp", "rotation.csv", "set xlabel 'E'\nset ylabel 'rho'\nplot DATA using 1:2 with lines")?;
    Ok(())
}

#[derive(Serialize)]
struct ScheduleView<'a> {
    ks: &'a [i64],
    theta: f64,
    theta_hex: String,
    stages: &'a [qp_core::anosov_katok::AkStage],
    summability: f64,
    warnings: &'a [String],
}

fn schedule_view(b: &AkBuild) -> ScheduleView<'_> {
    let s = &b.schedule;
    ScheduleView {
        ks: &s.ks,
        theta: s.theta_f64(),
        theta_hex: fixed_hex(&s.theta),
        stages: &s.stages,
        summability: s.summability,
        warnings: &s.warnings,
    }
}

pub fn ak_build_cmd(cfg: &Cfg, out: &mut Out) -> Res {
    let alpha = Arc::new(cfg.frequency()?);
    let b = build_ak(cfg, &alpha)?;
    out.json(
        "ak_report.json",
        &json!({ "schedule": schedule_view(&b), "ledger": b.ledger, "diagnostics": b.diagnostics }),
    )?;
    out.json("ak_a_infinity.json", &json!({ "form": "su11", "terms": b.a_infinity_su11.to_terms() }))?;
    Ok(())
}

pub fn ak_verify_cmd(cfg: &Cfg, out: &mut Out) -> Res {
    let alpha = Arc::new(cfg.frequency()?);
    let b = build_ak(cfg, &alpha)?;
    let report = ak_goodness_report(&b, cfg.rotation_n.unwrap_or(200_000) as i64)?;
    let p = &b.schedule.params;
    let last = report.last();
    let within = |x: Option<f64>, target: f64| x.map(|v| (v / target - 1.0).abs() <= 0.1).unwrap_or(false);
    let checks = vec![
        ("reconstruction", b.ledger.iter().all(|l| l.reconstruction_residual <= 1e-10)),
        ("zeta", within(last.zeta, report.two_pi_h)),
        ("eta_hat", within(last.eta_hat, p.delta)),
        ("rotation", torus_dist(report.rotation_number - report.theta) <= 1e-3),
        ("det", b.diagnostics.det_defect <= 1e-10),
    ];
    for (name, ok) in &checks {
        eprintln!("{} {name}", if *ok { "PASS" } else { "FAIL" });
    }
    let checks_json: serde_json::Map<String, serde_json::Value> =
        checks.iter().map(|(n, ok)| (n.to_string(), json!(ok))).collect();
    out.json("ak_verify.json", &json!({ "checks": checks_json, "report": report }))?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(RunError::Check(failed.join(", ")))
    }
}

pub fn selftest_cmd(cfg: &Cfg, out: &mut Out) -> Res {
    let alpha = Arc::new(cfg.frequency()?);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let free = QpCocycle::schrodinger(alpha.clone(), qp_core::cocycle::PotentialSpec::zero(), 0.0);
    let mut checks: Vec<(String, bool)> = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..20 {
        let z = C64::new(rng.gen_range(-3.0..3.0), 10f64.powf(rng.gen_range(-3.0..0.0)));
        let t = whole_line_M(&free, 0.0, z)?;
        let w = qp_core::weyl::free_w(z);
        let closed = -w * 2.0 / (1.0 - w * w);
        worst = worst.max((t.big_m - closed).norm() / closed.norm());
    }
    checks.push((format!("free M oracle (worst rel {worst:.1e})"), worst <= 1e-10));

    let n = qp_core::ids::ids_counting(&qp_core::cocycle::PotentialSpec::zero(), &alpha, 0.0, 0.0, 1000)?;
    checks.push(("free IDS at E=0".into(), (n - 0.5).abs() <= 2e-3));

    let law = ScalingLaw::general(1.0, 2.0, Ext::Finite(1000.0), Ext::Finite(3.0))?;
    let w = law.windows[0];
    let lj = 10.0;
    checks.push(("f junction continuity".into(), (w.f_at(lj * (1.0 - 1e-15)).0 - w.f_at(lj * (1.0 + 1e-15)).0).abs() <= 1e-12));

    let rot = rotation_number(&QpCocycle::constant(alpha.clone(), Mat2::rotation(0.1)), 10_000, 0.0)?;
    checks.push(("constant rotation".into(), torus_dist(rot.rho - 0.1) <= 1e-3));

    for (name, ok) in &checks {
        println!("{} {name}", if *ok { "PASS" } else { "FAIL" });
    }
    let map: serde_json::Map<String, serde_json::Value> = checks.iter().map(|(n, ok)| (n.clone(), json!(ok))).collect();
    out.json("selftest.json", &map)?;
    if checks.iter().all(|c| c.1) {
        Ok(())
    } else {
        Err(RunError::Check("selftest".into()))
    }
}
