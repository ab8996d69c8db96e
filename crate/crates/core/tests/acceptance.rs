//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use mopuc::cli::{cmd_scan, json_path, ExperimentConfig};
use mopuc::kernels::{circle_identity_residual, default_cd_pairs, ratio_unitarity, verify_cd};
use mopuc::opuc::{gram_schmidt_system, leading_ladder_check};
use mopuc::quadrature::circle_grid;
use mopuc::rakhmanov::{hn_bound_check, nevai_integral, ratio_deviation, scan};
use mopuc::random::{random_cmat, random_trig_weight, random_unitary, seeded};
use mopuc::recurrence::{bernstein_szego_measure, roundtrip};
use mopuc::{build_system, favard_synthesize, Atom, CMat, MatMeasure, MatPoly, Normalization, OPUCSystem, ReflectionSequence, WeightSpec, C64};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: mopuc::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn norms(sys: &OPUCSystem) -> Vec<f64> {
    sys.reflection_norms().unwrap()
}

/// mpmath Levinson on the closed-form moments of the half-circle indicator
/// (tests/oracle/scalar_oracle.py), `|H_1|..|H_20|`.
const ARC_ORACLE: [f64; 20] = [
    0.63661977236758134,
    0.68147693211788298,
    0.69582118520683103,
    0.70107035731766108,
    0.70337374518759788,
    0.70456352638401261,
    0.70525815233810213,
    0.70570044687027047,
    0.70600017189472975,
    0.70621295693366163,
    0.70636958377129455,
    0.70648826954281655,
    0.70658037865985903,
    0.70665330818758072,
    0.70671204486019352,
    0.70676005144460487,
    0.70679979416594021,
    0.70683306850814198,
    0.70686120703373545,
    0.70688521570137501,
];
const ARC_FLOOR: f64 = 0.70621295693366163;
/// Same oracle, Lebesgue plus `0.5 I` at `theta = 1`, sup over `l <= 8`, 2048 points.
const ATOM_NEVAI_SUP_5: f64 = 0.2261292746543392;
const ATOM_NEVAI_SUP_20: f64 = 0.090135407590255137;

fn fejer() -> MatMeasure {
    MatMeasure::new(WeightSpec::scalar_trig(&[1.0, 0.5]), vec![]).unwrap()
}

fn atom_measure() -> MatMeasure {
    let atom = Atom {
        theta: 1.0,
        mass: CMat::identity(2).scale_real(0.5),
    };
    MatMeasure::new(WeightSpec::IdentityLebesgue { p: 2 }, vec![atom]).unwrap()
}

fn arc() -> MatMeasure {
    MatMeasure::new(WeightSpec::scalar_arc(0.0, PI, 0.0), vec![]).unwrap()
}

fn favard_sequence() -> ReflectionSequence {
    ReflectionSequence::random(0, 2, 6, 0.9).unwrap()
}

fn trig_weight(seed: u64) -> WeightSpec {
    WeightSpec::TrigPoly {
        coeffs: random_trig_weight(&mut seeded(seed), 2, 2),
    }
}

fn lebesgue_identity() -> Outcome {
    let start = Instant::now();
    let sys = lib(build_system(&MatMeasure::lebesgue(2), 30))?;
    let hmax = norms(&sys).into_iter().fold(0.0, f64::max);
    ensure(hmax <= 1e-10, || format!("max ||H_n|| = {hmax:e}"))?;
    let mut coeff = 0.0f64;
    for n in 0..=30 {
        let target = MatPoly::monomial(n, CMat::identity(2));
        coeff = coeff.max(sys.phi_l(n).max_coeff_distance(&target)).max(sys.phi_r(n).max_coeff_distance(&target));
    }
    ensure(coeff <= 1e-10, || format!("coefficient distance to z^n I = {coeff:e}"))?;
    let mut nevai = 0.0f64;
    for n in 0..30 {
        for ell in 1..=30 - n {
            nevai = nevai.max(lib(nevai_integral(&sys, n, ell, 512))?);
        }
    }
    ensure(nevai <= 1e-9, || format!("max averaged defect = {nevai:e}"))?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(10), || format!("runtime {t:?}"))?;
    Ok(format!("max ||H|| {hmax:.1e}, coeff {coeff:.1e}, defect {nevai:.1e}, {:.2}s", t.as_secs_f64()))
}

fn fejer_weight() -> Outcome {
    let sys = lib(build_system(&fejer(), 20))?;
    let h = norms(&sys);
    ensure((h[0] - 0.5).abs() <= 1e-9, || format!("|H_1| = {}", h[0]))?;
    ensure(h.windows(2).all(|w| w[1] < w[0]), || "not strictly decreasing".into())?;
    ensure(h[19] < h[4] / 2.0, || format!("|H_20| = {} vs |H_5| = {}", h[19], h[4]))?;
    let worst = (1..=20).map(|n| (h[n - 1] - 1.0 / (n as f64 + 1.0)).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-9, || format!("oracle deviation {worst:e}"))?;
    Ok(format!("|H_1| = {:.15}, |H_20| = {:.15}, oracle deviation {worst:.1e}", h[0], h[19]))
}

fn favard_roundtrip() -> Outcome {
    let start = Instant::now();
    let seq = favard_sequence();
    let max_in = seq.as_slice().iter().map(|h| h.spectral_norm().unwrap()).fold(0.0, f64::max);
    ensure(max_in <= 0.9, || format!("input norm {max_in}"))?;
    let d = lib(roundtrip(&seq))?;
    ensure(d <= 1e-8, || format!("discrepancy {d:e}"))?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(30), || format!("runtime {t:?}"))?;
    Ok(format!("max singular-value discrepancy {d:.2e}, {:.2}s", t.as_secs_f64()))
}

/// Every system constructed by the other criteria.
fn fixture_systems() -> Result<Vec<(&'static str, OPUCSystem)>, String> {
    let seq = favard_sequence();
    let synthesized = lib(favard_synthesize(&seq, &CMat::identity(2)))?;
    let rebuilt = lib(build_system(&lib(bernstein_szego_measure(&synthesized, 6))?, 6))?;
    let base = lib(MatMeasure::new(trig_weight(7), vec![]))?;
    let table = lib(base.moment_table(8))?;
    Ok(vec![
        ("lebesgue", lib(build_system(&MatMeasure::lebesgue(2), 30))?),
        ("fejer", lib(build_system(&fejer(), 20))?),
        ("favard", synthesized),
        ("bernstein-szego", rebuilt),
        ("lebesgue+atom", lib(build_system(&atom_measure(), 33))?),
        ("half-arc", lib(build_system(&arc(), 20))?),
        ("trig", lib(build_system(&base, 8))?),
        ("trig gram-schmidt", lib(gram_schmidt_system(&table, 8))?),
    ])
}

fn identity_suite() -> Outcome {
    let pairs = default_cd_pairs();
    let grid = circle_grid(256);
    let mut worst_floor = 0.0f64;
    let mut summary = Vec::new();
    let mut breaches = Vec::new();
    for (name, sys) in fixture_systems()? {
        let n_max = sys.degree();
        let recurrence = sys.normalization() == Normalization::RecurrenceNormalized;
        let mut breach = |what: String| breaches.push(format!("{name}: {what}"));
        for n in 0..=n_max {
            let cd = lib(verify_cd(&sys, n, &pairs))?;
            if !cd.passes(1e-9) {
                breach(format!("CD n={n} relative {:.2e}", cd.relative()));
            }
            let ci = lib(circle_identity_residual(&sys, n, &grid))?;
            if !ci.passes(1e-10) {
                breach(format!("circle identity n={n} {:.2e}", ci.value()));
            }
            let ru = lib(ratio_unitarity(&sys, n, &grid))?;
            if !ru.passes(1e-10) {
                breach(format!("ratio unitarity n={n} {:.2e}", ru.deviation.value().max(ru.consistency.value())));
            }
            worst_floor = worst_floor.max(cd.relative_floor()).max(ci.relative_floor()).max(ru.deviation.relative_floor());
            if recurrence && n >= 1 {
                let h = lib(sys.h(n).spectral_norm())?;
                let rd = lib(ratio_deviation(&sys, n, &grid))?;
                worst_floor = worst_floor.max(rd.relative_floor());
                if !rd.below(h + 1e-10) {
                    breach(format!("ratio deviation n={n} exceeds ||H_n|| by {:.2e}", rd.value() - h));
                }
            }
            if n >= 1 && n < n_max && !lib(hn_bound_check(&sys, n, 8.min(n_max - n), 2048))? {
                breach(format!("||H_{}|| above the averaged defect", n + 1));
            }
        }
        if recurrence {
            let ladder = leading_ladder_check(&sys);
            if ladder > 1e-9 {
                breach(format!("leading ladder {ladder:.2e}"));
            }
        }
        summary.push(format!("{name} N={n_max}"));
    }
    let detail = format!(
        "{}; ladder and ratio deviation on recurrence-normalized systems; largest rounding floor / scale {worst_floor:.1e}",
        summary.join(", ")
    );
    if breaches.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{} breaches: {}; {detail}", breaches.len(), breaches.join("; ")))
    }
}

fn positive_control() -> Outcome {
    let report = lib(scan(&atom_measure(), 25, 8, 2048))?;
    let h25 = report.row(25).unwrap().hn_norm;
    let (s5, s20) = (report.row(5).unwrap().nevai_sup, report.row(20).unwrap().nevai_sup);
    ensure(h25 < 0.05, || format!("||H_25|| = {h25}"))?;
    ensure(s20 < s5 / 2.0, || format!("sup at n=20 {s20} vs n=5 {s5}"))?;
    ensure((s5 - ATOM_NEVAI_SUP_5).abs() <= 1e-9 && (s20 - ATOM_NEVAI_SUP_20).abs() <= 1e-9, || {
        format!("oracle mismatch: {s5} / {s20}")
    })?;
    Ok(format!("||H_25|| = {h25:.6}, sup(n=5) = {s5:.6}, sup(n=20) = {s20:.6}, verdict {}", report.verdict.as_str()))
}

fn negative_control() -> Outcome {
    let sys = lib(build_system(&arc(), 20))?;
    let h = norms(&sys);
    let floor = h[9..20].iter().copied().fold(f64::INFINITY, f64::min);
    ensure(floor > 0.1, || format!("min ||H_n|| = {floor}"))?;
    ensure((floor - ARC_FLOOR).abs() <= 1e-9, || format!("floor {floor} vs oracle {ARC_FLOOR}"))?;
    let worst = h.iter().zip(ARC_ORACLE).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-9, || format!("oracle deviation {worst:e}"))?;
    Ok(format!("min over 10..=20 of ||H_n|| = {floor:.15}, oracle deviation {worst:.1e}"))
}

fn invariance() -> Outcome {
    let n = 10;
    let base = trig_weight(11);
    let u = random_unitary(&mut seeded(12), 2);
    let plain = lib(build_system(&lib(MatMeasure::new(base.clone(), vec![]))?, n))?;
    let conj = WeightSpec::Conjugated {
        inner: Box::new(base.clone()),
        u,
    };
    let rotated = lib(build_system(&lib(MatMeasure::new(conj, vec![]))?, n))?;
    let mut sv = 0.0f64;
    for k in 1..=n {
        let (a, b) = (lib(plain.h(k).singular_values())?, lib(rotated.h(k).singular_values())?);
        sv = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(sv, f64::max);
    }
    ensure(sv <= 1e-9, || format!("conjugation singular values {sv:e}"))?;

    let entries = vec![WeightSpec::scalar_trig(&[1.0, 0.5]), WeightSpec::scalar_arc(0.0, PI, 0.2)];
    let diag = lib(build_system(&lib(MatMeasure::new(WeightSpec::DiagonalScalar { entries: entries.clone() }, vec![]))?, n))?;
    let mut dg = 0.0f64;
    for (i, e) in entries.into_iter().enumerate() {
        let scalar = lib(build_system(&lib(MatMeasure::new(e, vec![]))?, n))?;
        for k in 1..=n {
            dg = dg.max((diag.h(k)[(i, i)] - scalar.h(k)[(0, 0)]).norm());
            dg = dg.max(diag.h(k)[(i, 1 - i)].norm());
        }
    }
    ensure(dg <= 1e-10, || format!("diagonal weight deviation {dg:e}"))?;

    let measure = lib(MatMeasure::new(base, vec![]))?;
    let gs = lib(gram_schmidt_system(&lib(measure.moment_table(n))?, n))?;
    let grid = circle_grid(64);
    let mut forms = 0.0f64;
    for k in 0..=n {
        for &z in &grid {
            let (a, b) = (plain.phi_l(k).eval(z), gs.phi_l(k).eval(z));
            forms = forms.max((&(&a.herm_transpose() * &a) - &(&b.herm_transpose() * &b)).spectral_norm().unwrap());
        }
    }
    ensure(forms <= 1e-9, || format!("Gram-Schmidt vs recurrence {forms:e}"))?;
    Ok(format!("conjugation {sv:.1e}, diagonal {dg:.1e}, HPD vs recurrence {forms:.1e}"))
}

fn sum_pow(s: &[f64], q: f64) -> f64 {
    s.iter().map(|x| x.powf(q)).sum()
}

fn matrix_kernel() -> Outcome {
    let mut rng = seeded(2024);
    let mut slack = f64::NEG_INFINITY;
    for i in 0..10_000 {
        let p = 1 + i % 3;
        let (a, b) = (random_cmat(&mut rng, p), random_cmat(&mut rng, p));
        let (sa, sb, sab) = (lib(a.singular_values())?, lib(b.singular_values())?, lib((&a * &b).singular_values())?);
        for q in [0.5, 1.0] {
            let rhs: f64 = sa.iter().zip(&sb).map(|(x, y)| x.powf(q) * y.powf(q)).sum();
            let lhs = sum_pow(&sab, q);
            ensure(lhs <= rhs + 1e-12 * (1.0 + rhs), || format!("singular-value inequality q={q}: {lhs} > {rhs}"))?;
            slack = slack.max(lhs - rhs);
        }
        let psd = &a * &a.herm_transpose();
        let (norm, tr) = (lib(psd.spectral_norm())?, psd.trace().re);
        ensure(norm <= tr + 1e-12 * (1.0 + tr), || format!("||A|| = {norm} > Tr A = {tr}"))?;

        let scale = 1.0 + norm;
        let root = lib(psd.psd_sqrt())?;
        let r = (&(&root * &root) - &psd).spectral_norm().unwrap();
        ensure(r <= 1e-10 * scale, || format!("psd_sqrt residual {r:e}"))?;
        let eig = lib(psd.herm_eig())?;
        let r = (&eig.recompose(&eig.eigenvalues) - &psd).spectral_norm().unwrap();
        ensure(r <= 1e-10 * scale, || format!("herm_eig residual {r:e}"))?;
        let sv = lib(psd.singular_values())?;
        let ev: Vec<f64> = eig.eigenvalues.iter().rev().copied().collect();
        let d = sv.iter().zip(&ev).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        ensure(d <= 1e-10 * scale, || format!("singular values vs eigenvalues {d:e}"))?;
        let shifted = &a + &CMat::identity(p).scale(C64::new(3.0, 0.0));
        let inv = lib(shifted.inverse())?;
        let r = (&(&shifted * &inv) - &CMat::identity(p)).spectral_norm().unwrap();
        ensure(r <= 1e-10, || format!("inverse residual {r:e}"))?;
    }
    Ok(format!("10000 pairs, largest lhs - rhs {slack:.1e}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("scan.json");
    let text = serde_json::json!({
        "schema": 1,
        "measure": {"p": 2, "weight": {"type": "IdentityLebesgue", "p": 2},
                    "atoms": [{"theta": 1.0, "mass": [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]}]},
        "N": 12, "Lmax": 4, "resolution": 1024
    });
    std::fs::write(&config, text.to_string()).map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig::load(&config).map_err(|e| e.message)?;
    let mut outputs = Vec::new();
    for threads in [1, 4] {
        let out = dir.path().join(format!("run{threads}.csv"));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| cmd_scan(&cfg, &out)).map_err(|e| e.message)?;
        let csv = std::fs::read(&out).unwrap();
        let json = std::fs::read(json_path(&out)).unwrap();
        outputs.push((csv, json));
    }
    ensure(outputs[0] == outputs[1], || "scan outputs differ between runs".into())?;
    Ok(format!("CSV {} bytes and JSON {} bytes identical across runs", outputs[0].0.len(), outputs[0].1.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("Lebesgue identity, p=2, N=30", lebesgue_identity),
        ("Fejer weight 1+cos, N=20", fejer_weight),
        ("Favard round-trip, p=2, N=6", favard_roundtrip),
        ("identity suite on all fixture systems", identity_suite),
        ("positive control: Lebesgue + atom, p=2, N=25", positive_control),
        ("negative control: half-circle arc, N=20", negative_control),
        ("invariance suite", invariance),
        ("matrix-kernel properties", matrix_kernel),
        ("determinism of scan output", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
