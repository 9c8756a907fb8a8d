//! Acceptance suite. Prints one `criterion N: PASS|FAIL` line per criterion
//! and exits nonzero if any criterion outside `KNOWN_RED` fails.

mod common;

use std::time::Instant;

use aitv::aicv::{self, AicvConfig};
use aitv::aifr::{self, AifrConfig};
use aitv::aitv::isotropic_subgradient;
use aitv::eval::{
    corrupt, corrupted_count, dice, dice_per_label, psnr, reconstruct, score, DiceMode, GroundTruth, NoiseKind,
    NoiseSpec, SyntheticSpec,
};
use aitv::field::{grad, grad_adjoint, inner_x, inner_y, norm_l21, GradientField, ScalarField};
use aitv::image::{Constants, Image};
use aitv::pdhg::{self, PdhglsParams};
use aitv::region::{fidelity_fields, linear_coefficient, region_indicators, RegionCode};
use aitv::segment::{LabelMap, SegmentationResult};
use rand::Rng;

/// Criteria expected to fail, with the reason recorded in the README.
const KNOWN_RED: &[usize] = &[6];

const ALPHAS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn adjoint_identity() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (m, n) = (rng.random_range(1..=32), rng.random_range(1..=32));
        let u = common::uniform_field(&mut rng, m, n, -1.0, 1.0);
        let p = GradientField::new(
            common::uniform_field(&mut rng, m, n, -1.0, 1.0),
            common::uniform_field(&mut rng, m, n, -1.0, 1.0),
        )
        .unwrap();
        worst = worst.max((inner_y(&grad(&u), &p) - inner_x(&u, &grad_adjoint(&p))).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(worst <= 1e-10 && secs < 1.0, format!("max |<Du,p> - <u,D^T p>| = {worst:.2e}, {secs:.3} s"))
}

fn subgradient_validity() -> Outcome {
    let mut rng = common::rng(2);
    let mut worst = f64::INFINITY;
    for case in 0..100 {
        let (m, n) = (rng.random_range(2..=24), rng.random_range(2..=24));
        // binary fields give many exact zeros in the gradient
        let u = if case % 2 == 0 {
            common::binary_field(&mut rng, m, n)
        } else {
            common::uniform_field(&mut rng, m, n, 0.0, 1.0)
        };
        let v = common::uniform_field(&mut rng, m, n, 0.0, 1.0);
        let q = isotropic_subgradient(&u);
        let diff = v.zip_map(&u, |a, b| a - b);
        let slack = norm_l21(&grad(&v)) - norm_l21(&grad(&u)) - inner_x(&grad_adjoint(&q), &diff);
        worst = worst.min(slack);
    }
    Outcome::new(worst >= -1e-10, format!("min slack = {worst:.2e}"))
}

fn region_algebra() -> Outcome {
    let mut rng = common::rng(3);
    let mut unity = 0.0f64;
    for m in 1..=3 {
        let code = RegionCode::new(m).unwrap();
        for _ in 0..20 {
            let u: Vec<ScalarField> = (0..m).map(|_| common::uniform_field(&mut rng, 6, 7, 0.0, 1.0)).collect();
            let r = region_indicators(&code, &u).unwrap();
            for p in 0..42 {
                let total: f64 = r.iter().map(|ri| ri.as_slice()[p]).sum();
                unity = unity.max((total - 1.0).abs());
            }
        }
    }

    let problem = |rng: &mut rand_chacha::ChaCha8Rng, m: usize| {
        let f = Image::gray(common::uniform_field(rng, 6, 7, 0.0, 1.0));
        let c = Constants::gray(&(0..1 << m).map(|_| rng.random_range(0.0..1.0)).collect::<Vec<_>>());
        let u: Vec<ScalarField> = (0..m).map(|_| common::uniform_field(rng, 6, 7, 0.0, 1.0)).collect();
        (f, c, u)
    };
    let mut formula = 0.0f64;
    for _ in 0..20 {
        let (f, c, u) = problem(&mut rng, 1);
        let r = linear_coefficient(&RegionCode::new(1).unwrap(), 0, &fidelity_fields(&f, &c), &u).unwrap();
        for p in 0..42 {
            let fv = f.channels()[0].as_slice()[p];
            let want = (fv - c.region(0)[0]).powi(2) - (fv - c.region(1)[0]).powi(2);
            formula = formula.max((r.as_slice()[p] - want).abs());
        }
        let (f, c, u) = problem(&mut rng, 2);
        let code = RegionCode::new(2).unwrap();
        let fid = fidelity_fields(&f, &c);
        let r1 = linear_coefficient(&code, 0, &fid, &u).unwrap();
        let r2 = linear_coefficient(&code, 1, &fid, &u).unwrap();
        for p in 0..42 {
            let fv = f.channels()[0].as_slice()[p];
            let e: Vec<f64> = (0..4).map(|l| (fv - c.region(l)[0]).powi(2)).collect();
            let mixed = e[0] - e[1] - e[2] + e[3];
            let want1 = mixed * u[1].as_slice()[p] + e[1] - e[3];
            let want2 = mixed * u[0].as_slice()[p] + e[2] - e[3];
            formula = formula.max((r1.as_slice()[p] - want1).abs()).max((r2.as_slice()[p] - want2).abs());
        }
    }

    let mut affine = 0.0f64;
    let code = RegionCode::new(3).unwrap();
    for _ in 0..5 {
        let (f, c, u) = problem(&mut rng, 3);
        let fid = fidelity_fields(&f, &c);
        let total = |u: &[ScalarField]| -> f64 {
            region_indicators(&code, u).unwrap().iter().zip(&fid).map(|(r, fl)| inner_x(fl, r)).sum()
        };
        for k in 0..3 {
            let r = linear_coefficient(&code, k, &fid, &u).unwrap();
            for p in 0..42 {
                let (mut hi, mut lo) = (u.clone(), u.clone());
                hi[k].as_mut_slice()[p] = 1.0;
                lo[k].as_mut_slice()[p] = 0.0;
                affine = affine.max((r.as_slice()[p] - (total(&hi) - total(&lo))).abs());
            }
        }
    }
    Outcome::new(
        unity <= 1e-12 && formula <= 1e-12 && affine <= 1e-10,
        format!("unity err {unity:.1e}, M=1/M=2 formula err {formula:.1e}, M=3 affine err {affine:.1e}"),
    )
}

fn inner_optimality() -> Outcome {
    let start = Instant::now();
    let mut rng = common::rng(4);
    let params = PdhglsParams { inner_tol: 1e-12, max_inner_iters: 20_000, ..PdhglsParams::default() };
    let mut worst = f64::NEG_INFINITY;
    for case in 0..20 {
        let sub = common::random_subproblem(&mut rng, 16, 16, case % 2 == 1);
        let init = common::uniform_field(&mut rng, 16, 16, 0.0, 1.0);
        let got = sub.objective(&pdhg::solve(&sub, &init, &params).unwrap().u);
        let want = sub.objective(&common::dual_fista(&sub, 1e-10, 200_000));
        worst = worst.max((got - want) / want.abs().max(1.0));
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(worst <= 1e-5 && secs < 30.0, format!("max relative excess over oracle {worst:.2e}, {secs:.1} s"))
}

fn descent(runs: &[(String, f64, &SegmentationResult)]) -> Outcome {
    let mut bad = Vec::new();
    for (name, c, res) in runs {
        let v = res.descent_violations(*c, 1e-8);
        if !v.is_empty() {
            bad.push(format!("{name} at {v:?}"));
        }
    }
    Outcome::new(
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} tracked runs, 0 violations", runs.len())
        } else {
            format!("violations: {}", bad.join("; "))
        },
    )
}

fn noiseless_two_region(
    aicv_runs: &mut Vec<(f64, SegmentationResult)>,
    aifr_runs: &mut Vec<(f64, SegmentationResult)>,
) -> Outcome {
    let (img, gt) = SyntheticSpec::two_region().generate().unwrap();
    let mut cells = Vec::new();
    let mut pass = true;
    for alpha in ALPHAS {
        let cfg = AicvConfig { alpha, ..AicvConfig::default_for(1) };
        let t = Instant::now();
        let res = aicv::segment(&img, &cfg).unwrap();
        let secs = t.elapsed().as_secs_f64();
        let d = score(&res.labels, &res.constants, &gt).unwrap();
        pass &= d >= 0.999 && secs < 60.0;
        cells.push(format!("CV a={alpha} {d:.5}"));
        aicv_runs.push((alpha, res));

        let cfg = AifrConfig { alpha, max_outer_iters: 200, ..AifrConfig::default_for(2) };
        let t = Instant::now();
        let res = aifr::segment_fr(&img, &cfg).unwrap();
        let secs = t.elapsed().as_secs_f64();
        let d = score(&res.labels, &res.constants, &gt).unwrap();
        pass &= d >= 0.999 && secs < 60.0;
        cells.push(format!("FR a={alpha} {d:.5} ({secs:.0} s)"));
        aifr_runs.push((alpha, res));
    }
    Outcome::new(pass, cells.join(", "))
}

fn noise_trend() -> Outcome {
    let start = Instant::now();
    let (img, gt) = SyntheticSpec::two_region().generate().unwrap();
    let plain = PdhglsParams { safeguard: false, max_inner_iters: 200, ..PdhglsParams::default() };
    let mean_dice = |level: f64, run: &dyn Fn(&Image) -> SegmentationResult| -> f64 {
        (1..=5)
            .map(|seed| {
                let noisy = corrupt(&img, &NoiseSpec::new(NoiseKind::Spin, level, seed).unwrap()).unwrap();
                let res = run(&noisy);
                score(&res.labels, &res.constants, &gt).unwrap()
            })
            .sum::<f64>()
            / 5.0
    };
    let cv = |alpha: f64| {
        let cfg = AicvConfig { alpha, pdhgls: plain, ..AicvConfig::default_for(1) };
        mean_dice(0.7, &|f| aicv::segment(f, &cfg).unwrap())
    };
    let fr = |alpha: f64| {
        let cfg = AifrConfig { alpha, max_outer_iters: 200, pdhgls: plain, ..AifrConfig::default_for(2) };
        mean_dice(0.6, &|f| aifr::segment_fr(f, &cfg).unwrap())
    };
    let (cv0, cv5, fr0, fr5) = (cv(0.0), cv(0.5), fr(0.0), fr(0.5));
    let secs = start.elapsed().as_secs_f64();
    let pass = cv5 - cv0 >= 0.005 && cv0 >= 0.90 && cv5 >= 0.90 && fr5 - fr0 >= 0.01 && secs < 600.0;
    Outcome::new(
        pass,
        format!("70% SPIN CV a=0 {cv0:.4} a=0.5 {cv5:.4}; 60% SPIN FR a=0 {fr0:.4} a=0.5 {fr5:.4}; {secs:.0} s"),
    )
}

fn four_phase_color(runs: &mut Vec<(String, f64, SegmentationResult)>) -> Outcome {
    let start = Instant::now();
    let (img, gt) = SyntheticSpec::four_region_color().generate().unwrap();
    let params = PdhglsParams { max_inner_iters: 1000, ..PdhglsParams::default() };
    let cv = AicvConfig { lambda: 2.25, max_outer_iters: 40, pdhgls: params, ..AicvConfig::default_for(2) };
    let res = aicv::segment(&img, &cv).unwrap();
    let d_cv = score(&res.labels, &res.constants, &gt).unwrap();
    runs.push(("color AICV".into(), cv.c, res));
    let fr = AifrConfig { lambda: 2.25, nu: 5.0, max_outer_iters: 160, pdhgls: params, ..AifrConfig::default_for(4) };
    let res = aifr::segment_fr(&img, &fr).unwrap();
    let d_fr = score(&res.labels, &res.constants, &gt).unwrap();
    runs.push(("color AIFR".into(), fr.c, res));
    let secs = start.elapsed().as_secs_f64();
    Outcome::new(
        d_cv >= 0.99 && d_fr >= 0.99 && secs < 300.0,
        format!("mean DICE CV {d_cv:.5}, FR {d_fr:.5}, {secs:.0} s"),
    )
}

fn constant_update() -> Outcome {
    let mut rng = common::rng(9);
    let mut worst = 0.0f64;
    let mut zero_ok = true;
    for case in 0..50 {
        let (m, n) = (rng.random_range(1..=10), rng.random_range(1..=10));
        let f = common::uniform_field(&mut rng, m, n, 0.0, 1.0);
        let w = if case % 10 == 0 { ScalarField::zeros(m, n) } else { common::uniform_field(&mut rng, m, n, 0.0, 1.0) };
        let got = aifr::update_constants_fr(&Image::gray(f.clone()), std::slice::from_ref(&w)).unwrap().region(0)[0];
        if w.sum() == 0.0 {
            zero_ok &= got == 0.0;
            continue;
        }
        let quad = |c: f64| -> f64 { f.as_slice().iter().zip(w.as_slice()).map(|(a, b)| b * (a - c) * (a - c)).sum() };
        worst = worst.max((got - common::golden_section(quad, 0.0, 1.0, 1e-10)).abs());
    }
    // the phase-field route goes through the region indicators
    let code = RegionCode::new(1).unwrap();
    let f = common::uniform_field(&mut rng, 8, 8, 0.0, 1.0);
    let u = common::uniform_field(&mut rng, 8, 8, 0.0, 1.0);
    let c = aicv::update_constants(&Image::gray(f.clone()), std::slice::from_ref(&u), &code).unwrap();
    for (ell, w) in [u.clone(), u.map(|v| 1.0 - v)].iter().enumerate() {
        let quad =
            |cv: f64| -> f64 { f.as_slice().iter().zip(w.as_slice()).map(|(a, b)| b * (a - cv) * (a - cv)).sum() };
        worst = worst.max((c.region(ell)[0] - common::golden_section(quad, 0.0, 1.0, 1e-10)).abs());
    }
    let all_in = aicv::update_constants(&Image::gray(f), &[ScalarField::filled(8, 8, 1.0)], &code).unwrap();
    zero_ok &= all_in.region(1)[0] == 0.0;
    Outcome::new(worst <= 1e-6 && zero_ok, format!("max |c - oracle| = {worst:.1e}, zero mass -> 0: {zero_ok}"))
}

fn metrics() -> Outcome {
    let mut checks = Vec::new();
    // 60-pixel and 40-pixel masks overlapping in 30 pixels
    let labels = |fg: &dyn Fn(usize) -> bool| {
        LabelMap::new(10, 10, 2, (0..100).map(|p| if fg(p) { 2 } else { 1 }).collect()).unwrap()
    };
    let truth = labels(&|p| p < 60);
    let est = labels(&|p| (30..70).contains(&p));
    let gt = GroundTruth::new(truth.clone(), Constants::gray(&[0.2, 0.8]), Some(2)).unwrap();
    checks.push(("dice 0.6", dice(&est, &gt, DiceMode::ForegroundOnly).unwrap() == 0.6));
    checks.push(("dice identical", dice(&truth, &gt, DiceMode::MeanAll).unwrap() == 1.0));
    let disjoint = labels(&|p| p >= 60);
    checks.push(("dice disjoint", dice_per_label(&disjoint, &truth).unwrap()[1] == 0.0));

    let gray = |v: f64| Image::gray(ScalarField::filled(4, 4, v));
    checks.push(("psnr inf", psnr(&gray(0.3), &gray(0.3)).unwrap() == f64::INFINITY));
    let half = psnr(&gray(0.0), &gray(0.5)).unwrap();
    checks.push(("psnr 6.02", (half - 10.0 * 4f64.log10()).abs() < 1e-12));
    let px = |a: f64, b: f64, c: f64| {
        Image::new(vec![ScalarField::filled(1, 1, a), ScalarField::filled(1, 1, b), ScalarField::filled(1, 1, c)])
            .unwrap()
    };
    let color = psnr(&px(0.5, 0.5, 0.5), &px(0.4, 0.6, 0.4)).unwrap();
    checks.push(("psnr 20", (color - 20.0).abs() < 1e-9));
    let checker = LabelMap::new(2, 2, 2, vec![1, 2, 2, 1]).unwrap();
    let recon = reconstruct(&checker, &Constants::gray(&[0.0, 1.0])).unwrap();
    checks.push(("checker", recon.channels()[0].as_slice() == [0.0, 1.0, 1.0, 0.0]));

    let img = Image::gray(ScalarField::filled(100, 100, 0.5));
    let spec = NoiseSpec::new(NoiseKind::Spin, 0.3, 42).unwrap();
    let a = corrupt(&img, &spec).unwrap();
    let b = corrupt(&img, &spec).unwrap();
    let changed = a.channels()[0].as_slice().iter().filter(|&&v| v != 0.5).count();
    checks.push(("seeded", a == b));
    checks.push(("3000 positions", changed == 3000 && corrupted_count(&spec, 10_000) == 3000));
    let failed: Vec<&str> = checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    Outcome::new(
        failed.is_empty(),
        if failed.is_empty() { format!("{} checks", checks.len()) } else { format!("failed: {failed:?}") },
    )
}

fn main() {
    // report lines are printed together once every criterion has run
    eprintln!("acceptance: running (a few minutes)");
    let mut outcomes =
        vec![(1, adjoint_identity()), (2, subgradient_validity()), (3, region_algebra()), (4, inner_optimality())];

    let (mut cv_runs, mut fr_runs) = (Vec::new(), Vec::new());
    let c6 = noiseless_two_region(&mut cv_runs, &mut fr_runs);
    let c7 = noise_trend();
    let mut color_runs = Vec::new();
    let c8 = four_phase_color(&mut color_runs);

    // extra tracked runs: noisy inputs and the default outer caps
    let (img, _) = SyntheticSpec::two_region().generate().unwrap();
    let noisy = corrupt(&img, &NoiseSpec::new(NoiseKind::Spin, 0.3, 7).unwrap()).unwrap();
    let cv_noisy = aicv::segment(&noisy, &AicvConfig::default_for(1)).unwrap();
    let fr_noisy = aifr::segment_fr(&noisy, &AifrConfig::default_for(2)).unwrap();
    let c = AicvConfig::default_for(1).c;
    let mut tracked: Vec<(String, f64, &SegmentationResult)> = Vec::new();
    for (a, r) in &cv_runs {
        tracked.push((format!("AICV a={a}"), c, r));
    }
    for (a, r) in &fr_runs {
        tracked.push((format!("AIFR a={a}"), c, r));
    }
    for (name, c, r) in &color_runs {
        tracked.push((name.clone(), *c, r));
    }
    tracked.push(("AICV 30% SPIN".into(), c, &cv_noisy));
    tracked.push(("AIFR 30% SPIN".into(), c, &fr_noisy));
    outcomes.push((5, descent(&tracked)));
    outcomes.push((6, c6));
    outcomes.push((7, c7));
    outcomes.push((8, c8));
    outcomes.push((9, constant_update()));
    outcomes.push((10, metrics()));
    outcomes.sort_by_key(|(n, _)| *n);

    let mut unexpected = false;
    for (n, o) in &outcomes {
        let known = KNOWN_RED.contains(n);
        let tag = match (o.pass, known) {
            (true, false) => "PASS",
            (true, true) => "PASS (listed as known red)",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected = true;
                "FAIL"
            }
        };
        println!("criterion {n}: {tag} - {}", o.detail);
    }
    if unexpected {
        std::process::exit(1);
    }
}
