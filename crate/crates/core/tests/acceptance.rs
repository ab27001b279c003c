//! Acceptance criteria 1–10. Runs without the libtest harness so that every
//! criterion prints its verdict line; exits nonzero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::panic::{self, AssertUnwindSafe};
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

use warpspec::amplitude::{build_amplitude, eval_amplitude, transport_residual, AmplitudeModel, AmplitudeOptions};
use warpspec::classical::{quantize, turning_points, QuantizeMode, TorusSpec};
use warpspec::correction::{
    default_eps, harmonics, hermitian_eigenvalues, kinetic_momentum, matrix_symbol, solve_lambda, tw_exact_band,
    verify_lambda_invariance,
};
use warpspec::field::{
    branch_inverse, chi0, density_grid, eval_scalar_field, eval_spinor_field, overlap_discrepancy, FieldConfig,
    Region, SigmaSet,
};
use warpspec::profiles::{Band, MassRegime, ModelParams, RadialProfile};
use warpspec::specfun::airy::{self, airy};
use warpspec::Complex64;

const E_INITIAL: f64 = 0.935;
const REF_E: f64 = 0.939_054;
const REF_LAMBDA: f64 = 0.244_074;
const REF_E_SCRIPT: f64 = 0.959_999_52;

/// Verdict of one criterion: `Err` for failure, `Ok(true)` for a reported
/// deviation with the binding part satisfied.
type Outcome = Result<bool, String>;

fn example() -> ModelParams {
    let p = ModelParams {
        h: 0.085_816_3,
        b: 0.439_353,
        gamma: 0.550_271,
        potential: RadialProfile::Coulomb { strength: 0.893_663 },
        mass: MassRegime::RadialMass(RadialProfile::Constant { value: 0.7 }),
        band: Band::Plus,
    };
    assert_eq!(p, ModelParams::example());
    p
}

fn example_torus(p: &ModelParams) -> TorusSpec {
    quantize(p, 16, 15, E_INITIAL, QuantizeMode::Exact).unwrap()
}

fn amplitude(p: &ModelParams, t: &TorusSpec, n: usize, samples: usize) -> AmplitudeModel {
    let lambda = solve_lambda(p, t).unwrap();
    let table = harmonics(p, t, lambda, n, samples).unwrap();
    build_amplitude(p, t, &table, AmplitudeOptions::new(p.band, default_eps((t.omega1, t.omega2)))).unwrap()
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn c1_example_spectrum() -> Outcome {
    let p = example();
    let start = Instant::now();
    let t = example_torus(&p);
    let lambda = solve_lambda(&p, &t).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    let e_script = t.energy + p.h * lambda;
    println!("    E_nu = {:.10}, lambda = {:.10}, E_script = {:.10}, {elapsed:.3} s", t.energy, lambda, e_script);
    ensure(elapsed < 2.0, format!("runtime {elapsed:.3} s >= 2 s"))?;
    let identity = (t.action - p.h * 16.5).abs();
    let sum = (e_script - (t.energy + p.h * lambda)).abs();
    println!("    |I1 - h (nu1 + 1/2)| = {identity:e}, |E_script - (E_nu + h lambda)| = {sum:e}");
    ensure(identity <= 1e-10, format!("quantization identity {identity:e} > 1e-10"))?;
    ensure(sum <= 1e-14, format!("E_script identity {sum:e} > 1e-14"))?;
    let windows = [
        ("E_nu", t.energy, REF_E, 2e-3),
        ("lambda", lambda, REF_LAMBDA, 2e-3),
        ("E_script", e_script, REF_E_SCRIPT, 1e-4),
    ];
    let mut deviation = false;
    for (name, got, want, tol) in windows {
        let d = (got - want).abs();
        let ok = d <= tol;
        deviation |= !ok;
        println!("    {name}: |{got:.8} - {want}| = {d:.3e} {} {tol:e}", if ok { "<=" } else { ">" });
    }
    Ok(deviation)
}

fn c2_lambda_invariance() -> Outcome {
    let p = example();
    let t = example_torus(&p);
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for g in [0.550_271, 0.1, 1.0, 10.0] {
        let d = verify_lambda_invariance(&p.with_gamma(g), &t).map_err(|e| e.to_string())?;
        println!("    gamma = {g}: |lambda(gamma) - lambda(0)| = {d:e}");
        worst = worst.max(d);
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!("    {elapsed:.3} s");
    ensure(worst < 1e-10, format!("invariance violated by {worst:e}"))?;
    ensure(elapsed < 1.0, format!("runtime {elapsed:.3} s >= 1 s"))?;
    Ok(false)
}

fn c3_free_turning_points() -> Outcome {
    let p = ModelParams { potential: RadialProfile::Constant { value: 0.0 }, ..example() };
    let (e, p_phi) = (0.935, 1.287_244_5);
    let kappa = (e * e - 0.7_f64 * 0.7).sqrt();
    let root = (kappa * kappa + 2.0 * p.b * p_phi).sqrt();
    let (want_minus, want_plus) = ((root - kappa) / p.b, (root + kappa) / p.b);
    let (rm, rp) = turning_points(&p, e, p_phi).map_err(|e| e.to_string())?;
    let err = (rm - want_minus).abs().max((rp - want_plus).abs());
    println!("    r_- = {rm:.12} ({want_minus:.12}), r_+ = {rp:.12} ({want_plus:.12}), error {err:e}");
    ensure(err <= 1e-10, format!("turning points off by {err:e}"))?;
    Ok(false)
}

fn c4_airy() -> Outcome {
    // 3^{-2/3} / Gamma(2/3) and -3^{-1/3} / Gamma(1/3).
    let gamma_two_thirds = 1.354_117_939_426_400_4;
    let gamma_one_third = 2.678_938_534_707_747_6;
    let ai0 = 3f64.powf(-2.0 / 3.0) / gamma_two_thirds;
    let aip0 = -(3f64.powf(-1.0 / 3.0)) / gamma_one_third;
    let v = airy(0.0);
    let d0 = (v.ai - ai0).abs().max((v.ai_prime - aip0).abs());
    println!("    Ai(0) = {:.16}, Ai'(0) = {:.16}, error {d0:e}", v.ai, v.ai_prime);
    ensure(d0 <= 1e-10, format!("values at 0 off by {d0:e}"))?;

    let step = 1e-4;
    let mut ode = 0.0_f64;
    for x in [-7.3, -2.5, 0.5, 3.0, 6.2] {
        let second = (airy(x + step).ai_prime - airy(x - step).ai_prime) / (2.0 * step);
        let scale = airy(x).ai.abs().max(airy(x).ai_prime.abs());
        ode = ode.max((second - x * airy(x).ai).abs() / scale);
    }
    println!("    ODE residual (relative) {ode:e}");
    ensure(ode < 1e-6, format!("ODE residual {ode:e} >= 1e-6"))?;

    let mut overlap = 0.0_f64;
    for x in [airy::SERIES_LIMIT_POSITIVE, -airy::SERIES_LIMIT] {
        let (a, ap) = airy::maclaurin(x);
        let (b, bp) = airy::continued(x);
        overlap = overlap.max(((a - b) / b).abs()).max(((ap - bp) / bp).abs());
    }
    for x in [airy::ASYMPTOTIC_LIMIT, -airy::ASYMPTOTIC_LIMIT] {
        let (a, ap) = airy::continued(x);
        let (b, bp) = airy::asymptotic(x);
        let scale = b.abs().max(bp.abs());
        overlap = overlap.max((a - b).abs() / scale).max((ap - bp).abs() / scale);
    }
    println!("    regime switch agreement (relative) {overlap:e}");
    ensure(overlap < 1e-10, format!("regime mismatch {overlap:e}"))?;
    Ok(false)
}

fn c5_transport_identity() -> Outcome {
    let p = example();
    let t = example_torus(&p);
    let amp = amplitude(&p, &t, 70, 1024);
    let res = transport_residual(&amp).map_err(|e| e.to_string())?;
    let tail = amp.table.tail_bound();
    println!("    N = 70: residual {res:e}, tail bound {tail:e}, absolute limit 1e-6");
    ensure(res <= tail, format!("residual {res:e} exceeds tail bound {tail:e}"))?;
    ensure(res <= 1e-6, format!("residual {res:e} > 1e-6 at N = 70"))?;
    Ok(false)
}

fn c6_truncation_convergence() -> Outcome {
    let p = example();
    let t = example_torus(&p);
    let lambda = solve_lambda(&p, &t).unwrap();
    let full = harmonics(&p, &t, lambda, 160, 2048).unwrap();
    let opts = AmplitudeOptions::new(p.band, default_eps((t.omega1, t.omega2)));
    let model = |n: usize| build_amplitude(&p, &t, &full.with_order(n).unwrap(), opts).unwrap();
    let grid = 64;
    let mut pts = Vec::new();
    for n in [10usize, 20, 40, 80] {
        let (a, b) = (model(n), model(2 * n));
        let mut sup = 0.0_f64;
        for i in 0..grid {
            for j in 0..grid {
                let (th1, th2) = (TAU * i as f64 / grid as f64, TAU * j as f64 / grid as f64);
                let d = eval_amplitude(&b, th1, th2).unwrap() - eval_amplitude(&a, th1, th2).unwrap();
                sup = sup.max(d.norm());
            }
        }
        println!("    N = {n}: sup |A_2N - A_N| = {sup:e}");
        pts.push(((n as f64).ln(), sup.ln()));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    println!("    fitted decay order {:.3}", -slope);
    ensure(-slope >= 4.0, format!("decay order {:.3} < 4", -slope))?;
    Ok(false)
}

fn c7_density_symmetry() -> Outcome {
    let start = Instant::now();
    let base = example();
    for (gamma, angles) in [(0.0, vec![0.7, 2.1, 4.4]), (base.gamma, vec![TAU / 3.0, 2.0 * TAU / 3.0])] {
        let p = base.with_gamma(gamma);
        let t = example_torus(&p);
        let amp = amplitude(&p, &t, 70, 1024);
        let cfg = FieldConfig::for_torus(&t, 256);
        let grid = density_grid(&p, &t, &amp, &cfg).map_err(|e| e.to_string())?;
        let max = grid.max_density();
        let mut worst = 0.0_f64;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (x, y) = (cfg.grid.x_at(i), cfg.grid.y_at(j));
                let d = grid.density[grid.index(i, j)];
                for &a in &angles {
                    let (s, c) = f64::sin_cos(a);
                    let v = eval_spinor_field(&p, &t, &amp, &cfg, c * x - s * y, s * x + c * y).unwrap();
                    worst = worst.max((v[0].norm_sqr() + v[1].norm_sqr() - d).abs() / max);
                }
            }
        }
        println!("    gamma = {gamma}: max relative change under rotation {worst:e}");
        ensure(worst <= 1e-10, format!("gamma = {gamma}: symmetry broken by {worst:e}"))?;
    }
    let elapsed = start.elapsed().as_secs_f64();
    println!("    {elapsed:.2} s");
    ensure(elapsed < 60.0, format!("runtime {elapsed:.1} s >= 60 s"))?;
    Ok(false)
}

/// Two-branch WKB value, the Airy factors replaced by their leading
/// oscillatory asymptotics, and its local envelope
/// `|pre| sqrt(|A_ev|^2 + |A_odd|^2) / sqrt(pi)`.
fn wkb_oracle(
    t: &TorusSpec,
    amp: &AmplitudeModel,
    sigma: &SigmaSet,
    r: f64,
    phi: f64,
    region: Region,
) -> (Complex64, f64) {
    let h = t.params.h;
    let (tp, tm) = branch_inverse(t, r).unwrap();
    let shift = 2.0 * t.p_phi / t.omega1 * t.q_of_r(r);
    let ap = amp.eval_at(r, tp, phi - shift).unwrap();
    let am = amp.eval_at(r, tm, phi + shift).unwrap();
    let (big_phi, beta, s1, s2) = match region {
        Region::In => (t.phase(t.r_minus, r).unwrap(), PI * t.action, sigma.in1, sigma.in2),
        Region::Out => (t.phase(r, t.r_plus).unwrap(), 0.0, sigma.out1, sigma.out2),
    };
    let scale = (TAU * t.omega1).sqrt() / (-t.u_eff(r)).powf(0.25) / PI.sqrt();
    let pre = Complex64::from_polar(scale, (t.p_phi * phi - beta) / h);
    let z = big_phi / h + PI / 4.0;
    let (ev, odd) = (0.5 * (ap + am), 0.5 * (ap - am));
    (pre * (s1 * ev * z.sin() - s2 * odd * z.cos()), scale * (ev.norm_sqr() + odd.norm_sqr()).sqrt())
}

fn c8_wkb_matching() -> Outcome {
    let p = example();
    let t = example_torus(&p);
    let amp = amplitude(&p, &t, 70, 1024);
    let cfg = FieldConfig::for_torus(&t, 64);
    let h = p.h;
    let interior = |r: f64| t.phase(t.r_minus, r).unwrap() >= 5.0 * h && t.phase(r, t.r_plus).unwrap() >= 5.0 * h;
    let scan: Vec<f64> = (1..1000).map(|i| t.r_minus + t.width() * i as f64 / 1000.0).filter(|&r| interior(r)).collect();
    let (lo, hi) = (scan[0], scan[scan.len() - 1]);
    let (mut worst, mut pointwise) = (0.0_f64, 0.0_f64);
    for k in 0..20 {
        let r = lo + (hi - lo) * (k as f64 + 0.5) / 20.0;
        let phi = 0.3 + 0.29 * k as f64;
        for region in [Region::In, Region::Out] {
            let field = eval_scalar_field(&t, &amp, &cfg, r, phi, region).unwrap().norm();
            let (oracle, envelope) = wkb_oracle(&t, &amp, &cfg.sigma, r, phi, region);
            let d = (field - oracle.norm()).abs();
            worst = worst.max(d / envelope);
            pointwise = pointwise.max(d / oracle.norm());
        }
    }
    println!("    radii [{lo:.4}, {hi:.4}]: max modulus mismatch {worst:.4e} of the local envelope");
    println!("    (pointwise relative {pointwise:.4e}, ill-conditioned at standing-wave nodes)");
    ensure(worst <= 0.05, format!("mismatch {worst:.4} > 0.05"))?;
    Ok(false)
}

fn c9_overlap() -> Outcome {
    let p = example();
    let t = example_torus(&p);
    let amp = amplitude(&p, &t, 70, 1024);
    let mut cfg = FieldConfig::for_torus(&t, 64);
    let d = overlap_discrepancy(&p, &t, &amp, &cfg, 64, 64).map_err(|e| e.to_string())?;
    cfg.sigma = SigmaSet::uniform();
    let u = overlap_discrepancy(&p, &t, &amp, &cfg, 64, 64).map_err(|e| e.to_string())?;
    println!("    default sigma: {d:.4e}; all-e^(i pi/4) sigma: {u:.4e}; limit 10 h = {:.4e}", 10.0 * p.h);
    ensure(d <= 10.0 * p.h, format!("discrepancy {d:e} > 10 h"))?;
    Ok(false)
}

fn c10_eigenvectors() -> Outcome {
    let p = ModelParams {
        mass: MassRegime::RadialMass(RadialProfile::Polynomial { coefficients: vec![0.7, 0.05] }),
        ..example()
    };
    let mut runner = TestRunner::new(Config { cases: 100, ..Config::default() });
    let worst = std::cell::Cell::new((0.0_f64, 0.0_f64));
    let strategy = (-3.0..3.0f64, -3.0..3.0f64, 0.2..5.0f64, 0.0..TAU, 0.0..2.0f64);
    let result = runner.run(&strategy, |(p1, p2, r, ang, mu_scale)| {
        let (pm, x) = ([p1, p2], [r * ang.cos(), r * ang.sin()]);
        let k = kinetic_momentum(pm, x, p.b);
        let (u, _) = p.potential_at(r);
        let (m, _) = p.mass_at(r);
        let l0 = matrix_symbol(pm, x, &p, 0.0).unwrap();
        let mut eig = 0.0_f64;
        for band in [Band::Plus, Band::Minus] {
            let v = chi0(band, k, m).unwrap();
            let h0 = u + band.sign() * (m * m + k[0] * k[0] + k[1] * k[1]).sqrt();
            let res: f64 = (0..2)
                .map(|row| (l0[row][0] * v[0] + l0[row][1] * v[1] - h0 * v[row]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            eig = eig.max(res);
        }
        let mu = p.mu() * mu_scale;
        let (lo, hi) = hermitian_eigenvalues(&matrix_symbol(pm, x, &p, mu).unwrap());
        let band = (tw_exact_band(pm, x, &p, mu, Band::Plus).unwrap() - hi)
            .abs()
            .max((tw_exact_band(pm, x, &p, mu, Band::Minus).unwrap() - lo).abs());
        let (a, b) = worst.get();
        worst.set((a.max(eig), b.max(band)));
        prop_assert!(eig < 1e-12 && band < 1e-12, "eigen residual {eig:e}, band mismatch {band:e}");
        Ok(())
    });
    let (eig, band) = worst.get();
    println!("    100 points: max eigen residual {eig:e}, max band mismatch {band:e}");
    result.map_err(|e| e.to_string())?;
    Ok(false)
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 example spectrum regression", c1_example_spectrum),
        ("2 lambda invariance in gamma", c2_lambda_invariance),
        ("3 closed-form turning points", c3_free_turning_points),
        ("4 Airy suite", c4_airy),
        ("5 transport identity", c5_transport_identity),
        ("6 truncation convergence", c6_truncation_convergence),
        ("7 density symmetry", c7_density_symmetry),
        ("8 WKB/Airy matching", c8_wkb_matching),
        ("9 in/out overlap", c9_overlap),
        ("10 eigenvector residuals", c10_eigenvectors),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, f) in criteria {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        println!("criterion {name}");
        let verdict = match panic::catch_unwind(AssertUnwindSafe(f)) {
            Ok(Ok(false)) => "PASS".to_string(),
            Ok(Ok(true)) => "DEVIATION (binding identities pass, reference window missed)".to_string(),
            Ok(Err(msg)) => {
                failed += 1;
                format!("FAIL: {msg}")
            }
            Err(_) => {
                failed += 1;
                "FAIL: panicked".to_string()
            }
        };
        println!("criterion {name}: {verdict}");
    }
    println!("acceptance: {failed} failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
