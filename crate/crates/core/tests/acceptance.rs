//! Acceptance suite. Each criterion prints one PASS/FAIL line; the binary
//! exits nonzero if any criterion fails.

use std::f64::consts::{PI, SQRT_2};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use latdeconv_core::asymptotics::{
    check_lemma_limits, plancherel_check, BandwidthSchedule, LemmaProfile,
};
use latdeconv_core::deconv::{estimate_cf_form, estimate_direct};
use latdeconv_core::field::{add_noise, DependenceKind, InnovationSpec, LinearFieldSpec, MixingProfile};
use latdeconv_core::harness::{joint_diagonality, run_experiment, Admissibility, CltReport, ExperimentConfig};
use latdeconv_core::lattice::make_rect_region;
use latdeconv_core::{Condition, DeconvKernel, FieldModel, GnTable, NoiseModel, Site};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---- criterion 1 -------------------------------------------------------

fn direct_equals_cf() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc1);
    let grid: Vec<f64> = (0..41).map(|k| -5.0 + 0.25 * k as f64).collect();
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let d = rng.random_range(1..=2usize);
        let sides = if d == 1 {
            vec![rng.random_range(16..=1024usize)]
        } else {
            let s = rng.random_range(4..=32usize);
            vec![s, s]
        };
        let kernel = if rng.random_bool(0.5) {
            DeconvKernel::Indicator
        } else {
            DeconvKernel::Polynomial { order: rng.random_range(1..=4) }
        };
        let sigma = if rng.random_bool(0.5) { 0.5 } else { 1.0 };
        let noise = NoiseModel::laplace(sigma).unwrap();
        let b = rng.random_range(0.15..1.0);
        let region = Arc::new(make_rect_region(&sides, &Site::origin(d)).unwrap());
        let model = FieldModel::Linear(LinearFieldSpec::iid(d, InnovationSpec::StandardNormal).unwrap());
        let x = model.simulate(&region, 100 + i).unwrap();
        let y = add_noise(&x, &noise, 100 + i);
        let direct = estimate_direct(&y, kernel, noise, b, &grid).unwrap();
        let cf = estimate_cf_form(&y, kernel, noise, b, &grid).unwrap();
        let gap = direct
            .values
            .iter()
            .zip(&cf.values)
            .map(|(a, c)| (a - c).abs() / (1.0 + a.abs()))
            .fold(0.0, f64::max);
        worst = worst.max(gap);
    }
    check(worst < 1e-6, format!("20 configs, worst sup-grid relative gap {worst:.3e} (< 1e-6)"))
}

// ---- criterion 2 -------------------------------------------------------

/// Coefficients of `t^2 (1 − t²)^3` or `(1 − t²)^3`, lowest degree first.
fn poly_kernel_coeffs(extra_t2: bool) -> Vec<f64> {
    let base = [1.0, 0.0, -3.0, 0.0, 3.0, 0.0, -1.0];
    if extra_t2 {
        let mut v = vec![0.0, 0.0];
        v.extend_from_slice(&base);
        v
    } else {
        base.to_vec()
    }
}

fn poly_eval(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * t + a)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect()
}

/// `∫_0^1 p(t) cos(zt) dt`, by Taylor series near zero and repeated
/// integration by parts elsewhere (exact for polynomials).
fn cos_integral(c: &[f64], z: f64) -> f64 {
    if z.abs() <= 4.0 {
        let mut total = 0.0;
        for (k, a) in c.iter().enumerate() {
            if *a == 0.0 {
                continue;
            }
            let mut term = 1.0;
            let mut j = 0;
            let mut s = 0.0;
            loop {
                let contrib = term / (k as f64 + 2.0 * j as f64 + 1.0);
                s += contrib;
                if contrib.abs() < 1e-22 {
                    break;
                }
                term *= -z * z / ((2 * j + 1) as f64 * (2 * j + 2) as f64);
                j += 1;
            }
            total += a * s;
        }
        return total;
    }
    let (s1, c1) = z.sin_cos();
    let mut p = c.to_vec();
    let mut total = 0.0;
    let mut sign = 1.0;
    let mut zpow = z;
    while !p.is_empty() {
        let dp = poly_deriv(&p);
        // [p sin(zt)/z + p' cos(zt)/z²] from 0 to 1, sin(0) = 0
        total += sign * (poly_eval(&p, 1.0) * s1 / zpow);
        total += sign * (poly_eval(&dp, 1.0) * c1 - poly_eval(&dp, 0.0)) / (zpow * z);
        p = poly_deriv(&dp);
        sign = -sign;
        zpow *= z * z;
    }
    total
}

fn laplace_oracle() -> Outcome {
    let k0 = poly_kernel_coeffs(false);
    let k2 = poly_kernel_coeffs(true);
    let mut rng = ChaCha8Rng::seed_from_u64(0xc2);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (sigma, b) in [(1.0, 1.0), (1.0, 0.3), (0.5, 0.5), (0.5, 0.2)] {
        let table = GnTable::new(DeconvKernel::Polynomial { order: 3 }, NoiseModel::laplace(sigma).unwrap(), b).unwrap();
        for _ in 0..1000 {
            let z: f64 = rng.random_range(-60.0..60.0);
            // K(z) = π^{-1} ∫_0^1 φ_K cos, −K''(z) = π^{-1} ∫_0^1 t² φ_K cos
            let k = cos_integral(&k0, z) / PI;
            let minus_k2 = cos_integral(&k2, z) / PI;
            let oracle = k + sigma * sigma / (b * b) * minus_k2;
            worst = worst.max((table.eval(z) - oracle).abs());
            count += 1;
        }
    }
    check(worst < 1e-8, format!("{count} random z, worst |g_n − (K − σ²/b² K'')| = {worst:.3e} (< 1e-8)"))
}

// ---- criterion 3 -------------------------------------------------------

fn plancherel_limits() -> Outcome {
    let noise = NoiseModel::laplace(1.0).unwrap();
    let kernel = DeconvKernel::Polynomial { order: 3 };
    let checks: Vec<_> = [0.5, 0.2, 0.1, 0.05]
        .iter()
        .map(|&b| plancherel_check(kernel, noise, b).unwrap())
        .collect();
    let l2: Vec<f64> = checks.iter().map(|c| c.l2_gap()).collect();
    let l1: Vec<f64> = checks.iter().map(|c| c.l1_gap()).collect();
    let mono = |g: &[f64]| g.windows(2).all(|w| w[1] < w[0]);
    let last = checks.last().unwrap();
    let detail = format!(
        "L2 gaps {l2:.4?}, L1 gaps {l1:.4?}; limits {:.6} and {:.6} (frequency-side I1/B = {:.6})",
        last.l2_limit, last.l1_limit, last.l1_frequency_side
    );
    check(mono(&l2) && mono(&l1) && l2[3] < 0.05 && l1[3] < 0.05, detail)
}

// ---- shared Monte Carlo configs ----------------------------------------

fn iid_config(replicates: usize, seed: u64) -> ExperimentConfig {
    serde_json::from_value(json!({
        "field": {"model": "iid", "dimension": 2, "innovations": {"tag": "standard_normal"}},
        "noise": {"tag": "laplace", "scale": 1.0},
        "kernel": {"tag": "polynomial", "order": 3},
        "regions": [
            {"kind": "rect", "dimension": 2, "sides": [16, 16]},
            {"kind": "rect", "dimension": 2, "sides": [32, 32]},
            {"kind": "rect", "dimension": 2, "sides": [48, 48]}
        ],
        "schedule": {"constant": 1.0, "exponent": 0.125},
        "points": [0.0],
        "replicates": replicates,
        "seed": seed,
        "theorem": "mixing",
        "checks": {"ks_alpha": null, "check_diagonality": false}
    }))
    .unwrap()
}

fn linear_config(theorem: &str) -> ExperimentConfig {
    serde_json::from_value(json!({
        "field": {"model": "linear", "dimension": 2, "innovations": {"tag": "standard_normal"},
                  "coefficients": [{"site": [0, 0], "value": 0.6}, {"site": [1, 0], "value": 0.8}]},
        "noise": {"tag": "laplace", "scale": 3.0},
        "kernel": {"tag": "polynomial", "order": 3},
        "regions": [{"kind": "rect", "dimension": 2, "sides": [48, 48]}],
        "schedule": {"constant": 0.5, "exponent": 0.125},
        "points": [0.0, 3.0],
        "replicates": 500,
        "seed": 20240601,
        "theorem": theorem,
        "checks": {"ks_alpha": 0.01, "diagonality_threshold": 0.15}
    }))
    .unwrap()
}

fn report_bytes(r: &CltReport) -> Vec<u8> {
    let mut out = r.summary_json().into_bytes();
    for region in &r.regions {
        region.write_replicates_csv(&mut out).unwrap();
    }
    out
}

// ---- criteria 4 and 5 --------------------------------------------------

fn bias() -> Outcome {
    let r = run_experiment(&iid_config(300, 41)).map_err(|e| e.to_string())?;
    let f0 = 1.0 / (2.0 * PI).sqrt();
    let gaps: Vec<f64> = r.regions.iter().map(|g| (g.points[0].mean_fhat - f0).abs()).collect();
    let bws: Vec<f64> = r.regions.iter().map(|g| g.bandwidth).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    check(
        decreasing && gaps[2] < 0.05,
        format!("|mean f̂(0) − f(0)| = {gaps:.4?} at b = {bws:.3?}; decreasing = {decreasing}, need < 0.05 at 48²"),
    )
}

fn variance_scaling() -> Outcome {
    let r = run_experiment(&iid_config(500, 51)).map_err(|e| e.to_string())?;
    let curve = r.variance_curve(0);
    let ratio = curve.last().unwrap().1;
    check(
        (0.7..=1.3).contains(&ratio),
        format!("ratios {:.4?} for sizes {:?}; need [0.7, 1.3] at 48²", curve.iter().map(|c| c.1).collect::<Vec<_>>(), curve.iter().map(|c| c.0).collect::<Vec<_>>()),
    )
}

// ---- criteria 6, 7, 10 ---------------------------------------------------

fn theorem1(mixing: &CltReport) -> Outcome {
    let p = &mixing.largest().points[0];
    let diag = joint_diagonality(mixing, Some(0.15)).map_err(|e| e.to_string())?;
    check(
        p.ks.p_value > 0.01 && diag.pass,
        format!(
            "KS D = {:.4}, p = {:.4} at x = 0; |ρ̂(0, 3)| = {:.4} (< 0.15); variance ratio {:.3}",
            p.ks.statistic, p.ks.p_value, diag.max_abs, p.variance_ratio
        ),
    )
}

fn theorem2(mixing: &CltReport) -> Outcome {
    let cfg = linear_config("dependence");
    let exp = cfg.validate().map_err(|e| e.to_string())?;
    let Admissibility::Dependence { profile, summability } = &exp.admissibility else {
        return Err("dependence tag did not select the dependence check".into());
    };
    let DependenceKind::Finite(values) = &profile.kind else {
        return Err("expected a finite-support δ profile".into());
    };
    let expected = [(Site::new(vec![0, 0]), SQRT_2 * 0.6), (Site::new(vec![1, 0]), SQRT_2 * 0.8)];
    let delta_ok = values.len() == 2
        && expected.iter().all(|(s, v)| {
            values.iter().any(|(t, w)| t == s && (w - v).abs() < 1e-15)
        });
    let dep = latdeconv_core::harness::run_validated(&exp).map_err(|e| e.to_string())?;
    let p = &dep.largest().points[0];
    let identical = dep.largest().standardized == mixing.largest().standardized;
    check(
        delta_ok && summability.exact && summability.is_finite() && p.ks.p_value > 0.01 && identical,
        format!(
            "δ = √2|a| exact: {delta_ok}; condition (8) exact finite: {}; KS p = {:.4}; samples identical to mixing run: {identical}",
            summability.exact && summability.is_finite(),
            p.ks.p_value
        ),
    )
}

fn determinism(first: &CltReport) -> Outcome {
    let second = run_experiment(&linear_config("mixing")).map_err(|e| e.to_string())?;
    let (a, b) = (report_bytes(first), report_bytes(&second));
    check(a == b, format!("{} report bytes, identical = {}", a.len(), a == b))
}

// ---- criterion 8 -------------------------------------------------------

fn lemma_sequences() -> Outcome {
    let sched = BandwidthSchedule::new(1.0, 0.25);
    let ns = [1e2, 1e4, 1e6, 1e8];
    let r = check_lemma_limits(&sched, &LemmaProfile::Mixing(MixingProfile::m_dependent(1)), 1, &ns, 0.2)
        .map_err(|e| e.to_string())?;
    let dep = check_lemma_limits(
        &sched,
        &LemmaProfile::Dependence(latdeconv_core::field::DependenceProfile::power_decay(2, 1.0, 6.0, Some(1))),
        1,
        &ns,
        0.2,
    )
    .map_err(|e| e.to_string())?;
    // oracle: m = v_n = [b^{-1/2}] with b = n^{-1/4}, so m b = [n^{1/8}] n^{-1/4}
    let oracle: Vec<f64> = ns
        .iter()
        .map(|n: &f64| ((n.powf(0.125) + 1e-9).floor()) * n.powf(-0.25))
        .collect();
    let mdb: Vec<f64> = r.rows.iter().map(|row| row.m_d_b).collect();
    let ms: Vec<u64> = r.rows.iter().map(|row| row.m.unwrap()).collect();
    let matches = mdb.iter().zip(&oracle).all(|(a, b)| (a - b).abs() < 1e-12);
    let strictly_down = mdb.windows(2).all(|w| w[1] < w[0]);
    let tails_zero = r.rows.iter().chain(&dep.rows).all(|row| row.tail_ratio == 0.0);
    check(
        r.m_increasing && strictly_down && matches && tails_zero && dep.m_increasing,
        format!("m = {ms:?}, m b = {mdb:.4?} (oracle {oracle:.4?}), tails identically zero: {tails_zero}"),
    )
}

// ---- criterion 9 -------------------------------------------------------

fn guard_rails() -> Outcome {
    let base = serde_json::to_value(linear_config("mixing")).unwrap();
    let expect = |patch: &dyn Fn(&mut serde_json::Value), cond: Condition, text: &str| -> Result<String, String> {
        let mut v = base.clone();
        patch(&mut v);
        let cfg: ExperimentConfig = serde_json::from_value(v).map_err(|e| e.to_string())?;
        match cfg.validate() {
            Ok(_) => Err(format!("{cond} not rejected")),
            Err(e) if e.condition() == Some(cond) && e.to_string().contains(text) => Ok(format!("{cond} ✓")),
            Err(e) => Err(format!("{cond}: wrong error '{e}'")),
        }
    };
    let results = [
        expect(&|v| v["noise"] = json!({"tag": "gaussian", "scale": 1.0}), Condition::A3, "A3"),
        expect(&|v| v["points"] = json!([0.0, 3.0, 0.0]), Condition::DistinctPoints, "distinct points"),
        expect(
            &|v| v["schedule"] = json!({"constant": 1.0, "exponent": 0.2}),
            Condition::A5,
            "does not satisfy |Λ_n| b_n^{2β+1} → ∞",
        ),
        expect(
            &|v| {
                v["theorem"] = json!("dependence");
                v["field"] = json!({"model": "linear", "dimension": 2, "innovations": {"tag": "standard_normal"},
                                    "decay": {"constant": 1.0, "exponent": 4.0, "radius": 6}});
            },
            Condition::DependenceSummability,
            "condition (8)",
        ),
    ];
    let ok = results.iter().all(|r| r.is_ok());
    let detail = results
        .iter()
        .map(|r| match r {
            Ok(s) | Err(s) => s.clone(),
        })
        .collect::<Vec<_>>()
        .join(", ");
    check(ok, detail)
}

// ---- driver ------------------------------------------------------------

fn run(id: u32, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("criterion {id:>2} {tag} [{name}, {secs:.1}s] {detail}");
    outcome.is_ok()
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: u32| filter.is_empty() || filter.iter().any(|f| f == &id.to_string());
    let mut all = true;
    if wanted(1) {
        all &= run(1, "direct ≡ characteristic-function form", direct_equals_cf);
    }
    if wanted(2) {
        all &= run(2, "Laplace closed form of g_n", laplace_oracle);
    }
    if wanted(3) {
        all &= run(3, "Plancherel limits", plancherel_limits);
    }
    if wanted(4) {
        all &= run(4, "bias", bias);
    }
    if wanted(5) {
        all &= run(5, "variance scaling", variance_scaling);
    }
    if wanted(6) || wanted(7) || wanted(10) {
        let mixing = run_experiment(&linear_config("mixing"));
        match mixing {
            Ok(m) => {
                if wanted(6) {
                    all &= run(6, "mixing CLT", || theorem1(&m));
                }
                if wanted(7) {
                    all &= run(7, "dependence CLT", || theorem2(&m));
                }
                if wanted(10) {
                    all &= run(10, "determinism", || determinism(&m));
                }
            }
            Err(e) => {
                for id in [6, 7, 10] {
                    if wanted(id) {
                        all &= run(id, "CLT run", || Err(e.to_string()));
                    }
                }
            }
        }
    }
    if wanted(8) {
        all &= run(8, "blocking-lemma sequences", lemma_sequences);
    }
    if wanted(9) {
        all &= run(9, "guard rails", guard_rails);
    }
    if !all {
        std::process::exit(1);
    }
}
