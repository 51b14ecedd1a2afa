//! Verification suites: named checks with frozen tolerances, each measuring
//! a defect from the toolkit and judging it. Randomized checks draw their
//! sample seeds from one master generator seeded by the run configuration,
//! in a fixed order, so identical configurations reproduce identical
//! reports.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use clap::ValueEnum;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kale_core::chart::{curvature_at, euclidean_metric, kahler_defect, ChartPoint};
use kale_core::compactify::{
    ale_decay_rate, compactified_metric, compactified_potential, compactified_potential_in_z,
    verify_ode_system, verify_pullback_identity,
};
use kale_core::einstein::{
    best_fit_einstein_constant, conformal_laplacian_residual, einstein_certificate,
    einstein_constant, greens_function_check, ricci_flat_proportionality, scalar_hat_root,
    scalar_hat_routes,
};
use kale_core::lebrun::{
    complex_embedding, cone_angle_estimate, lebrun_metric, potential_radius, recover_potential,
    scalar_flat_certificate, LebrunChart,
};
use kale_core::potential::{
    load_corpus, metric_from_potential, outer_structure, RadialPotential, DEFAULT_CORPUS,
};
use kale_core::sample;

use crate::report::Check;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    /// Euclidean baseline: the curvature pipeline returns zero
    Flat,
    /// Potential corpus parsing, jets, and metric linearity
    Potential,
    /// Conformal rescaling: closed-form outer potentials and identities
    Compactify,
    /// Scalar-flat family certificates, cone angles, recovery
    Lebrun,
    /// Compactified scalar curvature and Einstein rescalings
    Einstein,
    /// Green-type conformal Laplacian identity
    Greens,
    /// Asymptotic decay of the family metric
    Decay,
    /// Every suite above, in order
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Flat => "flat",
            Suite::Potential => "potential",
            Suite::Compactify => "compactify",
            Suite::Lebrun => "lebrun",
            Suite::Einstein => "einstein",
            Suite::Greens => "greens",
            Suite::Decay => "decay",
            Suite::All => "all",
        }
    }
}

/// Output of a suite run: the ordered checks plus the grid sizes used,
/// echoed into the report configuration.
pub struct SuiteOutcome {
    pub checks: Vec<Check>,
    pub grid: BTreeMap<String, u64>,
}

/// Runs one suite (or all of them). `betas` overrides the default cone
/// parameter sweep of the parameterized checks; pinned single-parameter
/// checks always run at their stated parameter.
pub fn run_suite(suite: Suite, betas: &[f64], seed: u64) -> SuiteOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SuiteOutcome { checks: Vec::new(), grid: BTreeMap::new() };
    let list: &[Suite] = if suite == Suite::All {
        &[
            Suite::Flat,
            Suite::Potential,
            Suite::Compactify,
            Suite::Lebrun,
            Suite::Einstein,
            Suite::Greens,
            Suite::Decay,
        ]
    } else {
        std::slice::from_ref(&suite)
    };
    for &s in list {
        match s {
            Suite::Flat => flat_suite(&mut out, &mut rng),
            Suite::Potential => potential_suite(&mut out),
            Suite::Compactify => compactify_suite(&mut out, &mut rng),
            Suite::Lebrun => lebrun_suite(&mut out, betas),
            Suite::Einstein => einstein_suite(&mut out, betas),
            Suite::Greens => greens_suite(&mut out, betas),
            Suite::Decay => decay_suite(&mut out),
            Suite::All => unreachable!("expanded above"),
        }
    }
    out
}

fn check(
    name: &str,
    tolerance: f64,
    body: impl FnOnce() -> Result<(f64, String), String>,
) -> Check {
    match body() {
        Ok((defect, detail)) => Check::measured(name, defect, tolerance, detail),
        Err(diagnostic) => Check::aborted(name, tolerance, diagnostic),
    }
}

fn flat_suite(out: &mut SuiteOutcome, rng: &mut ChaCha8Rng) {
    let n_points = 100u64;
    out.grid.insert("flat-points".to_string(), n_points);
    let seed_a = rng.random::<u64>();
    let seed_b = rng.random::<u64>();

    out.checks.push(check("flat-curvature-entries", 1e-9, || {
        let field = euclidean_metric(4);
        let mut worst = 0.0f64;
        for p in sample::chart_points(seed_a, n_points as usize, 2, 2.0, 0.01) {
            let report = curvature_at(&field, &p, 1e-3).map_err(|e| e.to_string())?;
            worst = worst
                .max(report.riemann_lower.max_abs())
                .max(report.ricci.amax())
                .max(report.scalar.abs());
        }
        Ok((worst, format!("{n_points} seeded chart points, all curvature entries")))
    }));

    out.checks.push(check("flat-potential-curvature", 1e-9, || {
        let field = metric_from_potential(&RadialPotential::flat(), 2);
        let mut worst = 0.0f64;
        for p in sample::chart_points(seed_b, n_points as usize, 2, 2.0, 0.01) {
            let report = curvature_at(&field, &p, 1e-3).map_err(|e| e.to_string())?;
            worst = worst
                .max(report.riemann_lower.max_abs())
                .max(report.ricci.amax())
                .max(report.scalar.abs());
        }
        Ok((worst, "identity profile through the potential route".to_string()))
    }));
}

fn potential_suite(out: &mut SuiteOutcome) {
    out.checks.push(check("corpus-profiles", 1e-12, || {
        let corpus = load_corpus(DEFAULT_CORPUS).map_err(|e| e.to_string())?;
        if corpus.len() < 4 {
            return Err(format!("corpus holds {} profiles, expected at least 4", corpus.len()));
        }
        let builtins = RadialPotential::builtins();
        let mut worst = 0.0f64;
        for builtin in &builtins {
            let from_corpus = corpus
                .iter()
                .find(|p| p.label() == builtin.label())
                .ok_or_else(|| format!("corpus is missing the {} profile", builtin.label()))?;
            for &z in &[0.5, 2.0] {
                let a = builtin.jet(z).map_err(|e| e.to_string())?;
                let b = from_corpus.jet(z).map_err(|e| e.to_string())?;
                for k in 1..=4 {
                    worst = worst.max((a.derivative(k) - b.derivative(k)).abs());
                }
            }
        }
        Ok((worst, format!("{} corpus profiles parsed, validated, and matched", corpus.len())))
    }));

    out.checks.push(check("derivative-consistency", 1e-6, || {
        let mut worst = 0.0f64;
        for phi in RadialPotential::builtins() {
            for &z in &[0.1f64, 0.7, 2.0, 5.0] {
                let h = 1e-5 * z.max(1.0);
                let d1 = phi.d1(z).map_err(|e| e.to_string())?;
                let fd = (phi.value(z + h).map_err(|e| e.to_string())?
                    - phi.value(z - h).map_err(|e| e.to_string())?)
                    / (2.0 * h);
                worst = worst.max((fd - d1).abs() / (1.0 + d1.abs()));
            }
        }
        Ok((worst, "finite differences of values versus jet derivatives".to_string()))
    }));

    out.checks.push(check("scaling-linearity", 1e-12, || {
        let phi = RadialPotential::burns();
        let scaled = phi.scaled(2.5);
        let base = metric_from_potential(&phi, 2);
        let stretched = metric_from_potential(&scaled, 2);
        let mut worst = 0.0f64;
        for p in sample::chart_points(31, 5, 2, 1.5, 0.05) {
            let a = stretched.value(&p).map_err(|e| e.to_string())?;
            let b = base.value(&p).map_err(|e| e.to_string())?;
            worst = worst.max((a - b.scale(2.5)).amax());
        }
        Ok((worst, "metric is linear in the profile".to_string()))
    }));
}

fn compactify_suite(out: &mut SuiteOutcome, rng: &mut ChaCha8Rng) {
    let xi_points = 50u64;
    let system_points = 20u64;
    let kahler_points = 30u64;
    out.grid.insert("xi-points".to_string(), xi_points);
    out.grid.insert("system-points".to_string(), system_points);
    out.grid.insert("kahler-points".to_string(), kahler_points);
    let kahler_seed = rng.random::<u64>();

    out.checks.push(check("outer-potential-closed-forms", 1e-9, || {
        let mut worst = 0.0f64;
        let flat = compactified_potential(&RadialPotential::flat(), 1.0)
            .map_err(|e| e.to_string())?;
        let burns = compactified_potential(&RadialPotential::burns(), 1.0)
            .map_err(|e| e.to_string())?;
        let flat_ref = flat.value(1.0).map_err(|e| e.to_string())?;
        let burns_ref = burns.value(1.0).map_err(|e| e.to_string())?;
        for i in 0..xi_points {
            let xi = 0.01 + 0.99 * i as f64 / (xi_points - 1) as f64;
            let f = flat.jet(xi).map_err(|e| e.to_string())?;
            worst = worst.max(((f.value() - flat_ref) - (xi - 1.0)).abs());
            worst = worst.max((f.derivative(1) - 1.0).abs());
            let b = burns.jet(xi).map_err(|e| e.to_string())?;
            let closed = (1.0 + xi).ln() - 2.0f64.ln();
            worst = worst.max(((b.value() - burns_ref) - closed).abs());
            worst = worst.max((b.derivative(1) - 1.0 / (1.0 + xi)).abs());
        }
        Ok((worst, "identity and blow-up profiles against their closed outer forms".to_string()))
    }));

    out.checks.push(check("first-order-system-residuals", 1e-10, || {
        let mut worst = 0.0f64;
        for phi in [RadialPotential::flat(), RadialPotential::burns()] {
            let hat = compactified_potential_in_z(&phi, 1.0).map_err(|e| e.to_string())?;
            for i in 0..system_points {
                let z = 0.05 + 6.95 * i as f64 / (system_points - 1) as f64;
                let (r1, r2) = verify_ode_system(&phi, &hat, z).map_err(|e| e.to_string())?;
                worst = worst.max(r1.abs()).max(r2.abs());
            }
        }
        Ok((worst, "both first-order residuals for the identity and blow-up profiles".to_string()))
    }));

    out.checks.push(check("axis-pullback-residual", 1e-8, || {
        let mut worst = 0.0f64;
        for phi in [RadialPotential::flat(), RadialPotential::burns()] {
            for &z in &[0.25, 1.0, 2.25, 4.0] {
                let r = verify_pullback_identity(&phi, z).map_err(|e| e.to_string())?;
                worst = worst.max(r);
            }
        }
        Ok((worst, "fundamental-form pullback on the first-coordinate axis".to_string()))
    }));

    out.checks.push(check("outer-structure-kahler", 1e-6, || {
        let outer = outer_structure(2);
        let mut worst = 0.0f64;
        for phi in RadialPotential::builtins() {
            let hat = compactified_metric(&phi, 2);
            for p in sample::chart_points(kahler_seed, kahler_points as usize, 2, 1.4, 0.05) {
                let defect = kahler_defect(&hat, &outer, &p).map_err(|e| e.to_string())?;
                worst = worst.max(defect.max());
            }
        }
        Ok((worst, "rescaled metrics against the inversion-induced structure".to_string()))
    }));
}

fn lebrun_suite(out: &mut SuiteOutcome, betas: &[f64]) {
    let sweep: Vec<f64> =
        if betas.is_empty() { vec![0.5, 1.0, 2.0, 3.0] } else { betas.to_vec() };
    let radii = [1.3, 2.0, 5.0, 10.0];
    out.grid.insert("lebrun-radii".to_string(), radii.len() as u64);

    let mut certs = Vec::new();
    for &beta in &sweep {
        certs.push((beta, scalar_flat_certificate(beta, &radii)));
    }

    out.checks.push(check("scalar-flatness", 1e-5, || {
        let mut worst = 0.0f64;
        for (beta, cert) in &certs {
            let (s, _) = cert.as_ref().map_err(|e| format!("beta={beta}: {e}"))?;
            worst = worst.max(*s);
        }
        Ok((worst, format!("cone parameters {sweep:?}, 12 chart points each")))
    }));

    out.checks.push(check("anti-self-duality", 1e-5, || {
        let mut worst = 0.0f64;
        for (beta, cert) in &certs {
            let (_, w) = cert.as_ref().map_err(|e| format!("beta={beta}: {e}"))?;
            worst = worst.max(*w);
        }
        Ok((worst, "self-dual Weyl half in the complex orientation".to_string()))
    }));

    out.checks.push(check("cone-angles", 1e-3, || {
        let mut worst = 0.0f64;
        for &beta in &sweep {
            let angle = cone_angle_estimate(beta).map_err(|e| format!("beta={beta}: {e}"))?;
            let expected = 2.0 * PI * beta;
            worst = worst.max((angle - expected).abs() / expected);
        }
        Ok((worst, "relative error of the extrapolated edge angles".to_string()))
    }));

    out.checks.push(check("potential-recovery", 1e-8, || {
        let phi = recover_potential(1.0, (1.05, 12.0), 1e-10).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for i in 0..30 {
            let r = 1.1 + (10.0 - 1.1) * i as f64 / 29.0;
            let z = r * r - 1.0;
            let expected = (z + 1.0) / z;
            let got = phi.d1(z).map_err(|e| e.to_string())?;
            worst = worst.max((got - expected).abs() / expected);
        }
        Ok((worst, "unit cone parameter against the closed-form profile".to_string()))
    }));

    out.checks.push(check("chart-round-trip", 1e-6, || {
        let mut worst = 0.0f64;
        for &beta in &[1.0, 2.0, 3.0] {
            let frame = lebrun_metric(beta, LebrunChart::Frame).map_err(|e| e.to_string())?;
            let complex = lebrun_metric(beta, LebrunChart::Complex).map_err(|e| e.to_string())?;
            for &(r, theta, phi_a, psi) in
                &[(1.3, 0.9, 0.4, 1.2), (2.0, 1.7, 2.8, 4.1), (5.0, 2.4, 5.9, 0.6)]
            {
                let q = ChartPoint::new(vec![r, theta, phi_a, psi]).map_err(|e| e.to_string())?;
                let (p, jac) = complex_embedding(beta, &q).map_err(|e| e.to_string())?;
                let g_frame = frame.value(&q).map_err(|e| e.to_string())?;
                let g_complex = complex.value(&p).map_err(|e| e.to_string())?;
                let pulled = jac.transpose() * g_complex * &jac;
                worst = worst.max((&g_frame - &pulled).norm() / g_frame.norm());
            }
        }
        Ok((worst, "frame chart versus the recovered-potential chart".to_string()))
    }));
}

fn einstein_suite(out: &mut SuiteOutcome, betas: &[f64]) {
    let sweep: Vec<f64> =
        if betas.is_empty() { vec![0.5, 1.0, 2.0, 3.0] } else { betas.to_vec() };
    let route_points = 50u64;
    out.grid.insert("route-points".to_string(), route_points);

    out.checks.push(check("scalar-route-spread", 1e-4, || {
        let rs: Vec<f64> = (0..route_points)
            .map(|i| 1.1 + (20.0 - 1.1) * i as f64 / (route_points - 1) as f64)
            .collect();
        let mut worst = 0.0f64;
        for &beta in &sweep {
            for routes in scalar_hat_routes(beta, &rs).map_err(|e| format!("beta={beta}: {e}"))? {
                worst = worst.max(routes.spread());
            }
        }
        Ok((worst, format!("three scalar routes across cone parameters {sweep:?}")))
    }));

    out.checks.push(check("unit-scalar-constant", 1e-6, || {
        let rs: Vec<f64> = (0..10).map(|i| 1.2 + (20.0 - 1.2) * i as f64 / 9.0).collect();
        let mut worst = 0.0f64;
        for routes in scalar_hat_routes(1.0, &rs).map_err(|e| e.to_string())? {
            worst = worst.max((routes.pipeline - 24.0).abs());
        }
        Ok((worst, "pipeline scalar curvature of the constant-curvature member".to_string()))
    }));

    out.checks.push(check("zero-locus-root", 1e-6, || {
        let root = scalar_hat_root(3.0)
            .ok_or_else(|| "no sign change found for the split member".to_string())?;
        Ok((
            (root * root - 4.0).abs(),
            "root of the compactified scalar curvature versus the locus formula".to_string(),
        ))
    }));

    out.checks.push(check("einstein-defect-positive", 1e-4, || {
        let mut worst = 0.0f64;
        for &beta in &[0.5, 1.5] {
            let d = einstein_certificate(beta, &[1.3, 2.0, 4.0])
                .map_err(|e| format!("beta={beta}: {e}"))?;
            worst = worst.max(d);
        }
        Ok((worst, "positive-constant regime at two cone parameters".to_string()))
    }));

    out.checks.push(check("einstein-defect-split", 1e-4, || {
        let d = einstein_certificate(3.0, &[1.5, 1.8, 2.5, 3.5]).map_err(|e| e.to_string())?;
        Ok((d, "negative-constant regime, samples on both sides of the zero locus".to_string()))
    }));

    out.checks.push(check("ricci-flat-proportionality", 1e-8, || {
        let (constant, defect) =
            ricci_flat_proportionality(&[1.4, 2.0, 5.0]).map_err(|e| e.to_string())?;
        Ok((
            defect.max((constant - 0.25).abs()),
            format!("boundary member collapses to {constant} times the family metric"),
        ))
    }));

    out.checks.push(check("einstein-constant-coherence", 1e-3, || {
        let mut worst = 0.0f64;
        for &beta in &[0.5, 1.5, 3.0] {
            let samples: &[f64] =
                if beta > 2.0 { &[1.5, 3.0] } else { &[1.3, 2.0, 4.0] };
            let fit = best_fit_einstein_constant(beta, samples)
                .map_err(|e| format!("beta={beta}: {e}"))?;
            let formula = einstein_constant(beta);
            worst = worst.max((fit - formula).abs() / formula.abs());
        }
        Ok((worst, "least-squares constants versus the displayed formula".to_string()))
    }));
}

fn greens_suite(out: &mut SuiteOutcome, betas: &[f64]) {
    let ks: Vec<f64> = if betas.is_empty() { vec![1.0, 2.0, 3.0] } else { betas.to_vec() };
    let radii = [1.3, 1.7, 2.2, 3.0, 4.5];
    out.grid.insert("greens-radii".to_string(), radii.len() as u64);

    out.checks.push(check("greens-identity", 1e-5, || {
        let mut worst = 0.0f64;
        for &k in &ks {
            let r = greens_function_check(k, &radii).map_err(|e| format!("k={k}: {e}"))?;
            worst = worst.max(r);
        }
        Ok((worst, format!("conformal Laplacian annihilates the squared radius, k in {ks:?}")))
    }));

    out.checks.push(check("greens-negative-control", 1.0, || {
        let residual =
            conformal_laplacian_residual(1.0, &radii, 5.0).map_err(|e| e.to_string())?;
        // pass requires the wrong coefficient to leave a residual of at
        // least 0.01, i.e. a defect ratio of at most one
        Ok((0.01 / residual, format!("wrong conformal coefficient leaves residual {residual:.4}")))
    }));
}

fn decay_suite(out: &mut SuiteOutcome) {
    let radii = [10.0, 15.0, 22.0, 33.0, 47.0, 68.0, 100.0];
    out.grid.insert("decay-radii".to_string(), radii.len() as u64);

    out.checks.push(check("ale-decay-exponent", 0.1, || {
        let field = lebrun_metric(3.0, LebrunChart::Complex).map_err(|e| e.to_string())?;
        let tau = ale_decay_rate(&field, &radii).map_err(|e| e.to_string())?;
        Ok(((tau - 2.0).abs(), format!("fitted decay exponent {tau:.4}")))
    }));

    out.checks.push(check("conformal-normalization", 0.1, || {
        let phi = recover_potential(3.0, (1.05, 150.0), 1e-10).map_err(|e| e.to_string())?;
        let mut worst = 0.0f64;
        for i in 0..10 {
            let r = 10.0 + 90.0 * i as f64 / 9.0;
            let z = potential_radius(3.0, r).map_err(|e| e.to_string())?.value();
            let d1 = phi.d1(z).map_err(|e| e.to_string())?;
            // u * |x|^2 = 1 / phi'
            worst = worst.max((1.0 / d1 - 1.0).abs());
        }
        Ok((worst, "conformal factor times squared radius stays near one".to_string()))
    }));
}
