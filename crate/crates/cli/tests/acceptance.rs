//! End-to-end acceptance gate. Each test prints one `PASS`/`FAIL` line
//! straight to stdout (bypassing the test harness capture) and then asserts.

use std::io::Write;
use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use gapless_core::ensembles::{sample_gaussian_with, Beta, DiscreteSpectrumLaw};
use gapless_core::experiments::{gap_scaling_exponent, mc_near_identity_exponent, predicted_exponents};
use gapless_core::hamiltonian::{assemble_dense, random_spec, HamiltonianSpec, TermModel, DEFAULT_DENSE_CAP};
use gapless_core::planting::{
    certificate_continuous, certificate_projector, plant_continuous_region, plant_discrete_region, plant_projector_region,
    ContinuousParams, CERTIFICATE_CAP,
};
use gapless_core::seed::{derive_seed, rng_from_seed};
use gapless_core::spectra::{
    cluster_distinct, default_tau, dense_spectrum, gap, lanczos_lowest, schmidt_spectrum, LanczosOptions,
};
use gapless_core::topology::{Edge, InteractionGraph};

fn report(id: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {id:>2} {verdict} {name}: {detail}\n");
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gapless"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gapless-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn run(args: &[&str]) -> String {
    let out = bin().args(args).output().unwrap();
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// Data rows of a CSV document with `#` comments and a header line.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn edge(a: usize, b: usize) -> Edge {
    Edge::new(a, b).unwrap()
}

fn gue(graph: InteractionGraph, seed: u64) -> HamiltonianSpec {
    random_spec(graph, &TermModel::Gaussian { beta: Beta::Unitary }, seed).unwrap()
}

fn eigs(spec: &HamiltonianSpec) -> Vec<f64> {
    dense_spectrum(&assemble_dense(spec, DEFAULT_DENSE_CAP).unwrap(), false).unwrap().eigenvalues
}

#[test]
fn criterion_01_weyl_suite() {
    let start = Instant::now();
    let mut rng = rng_from_seed(2024);
    let mut violations = 0;
    let mut worst_margin = f64::INFINITY;
    for t in 0..200 {
        let h = sample_gaussian_with(40, if t % 2 == 0 { Beta::Unitary } else { Beta::Orthogonal }, &mut rng);
        let scale = 10f64.powf(-3.0 + 3.0 * t as f64 / 199.0);
        let v = sample_gaussian_with(40, Beta::Unitary, &mut rng).scaled(scale);
        let norm = v.operator_norm().unwrap();
        let lh = h.eigenvalues().unwrap();
        let lhv = (&h + &v).eigenvalues().unwrap();
        let slack = 1e-12 * lh.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for j in 0..40 {
            let margin = norm - (lhv[j] - lh[j]).abs();
            worst_margin = worst_margin.min(margin);
            if margin < -slack {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = violations == 0 && elapsed < Duration::from_secs(10);
    report(1, "Weyl suite", pass, &format!("{violations} violations over 8000 eigenvalues, min margin {worst_margin:e}, {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn criterion_02_exact_continuous_plant() {
    let start = Instant::now();
    let spec = scratch("c2.json");
    let spec = spec.to_str().unwrap();
    run(&["plant", "continuous", "--sites", "8", "--d", "2", "--edge", "3,4", "--s", "0.01", "--eps", "0", "--env-gap-floor", "0.5", "--seed", "7", "--out", spec]);
    let rows = csv_rows(&run(&["gap", "--in", spec, "--method", "dense"]));
    let g: f64 = rows[0][2].parse().unwrap();
    let deg: usize = rows[0][3].parse().unwrap();
    let elapsed = start.elapsed();
    let pass = (g - 0.01).abs() <= 1e-9 && deg == 1 && elapsed < Duration::from_secs(30);
    report(2, "exact continuous plant", pass, &format!("gap {g}, |gap - s| {:e}, degeneracy {deg}, {elapsed:.2?}", (g - 0.01).abs()));
    assert!(pass);
}

#[test]
fn criterion_03_perturbed_continuous_plant() {
    let (s, eps) = (0.01, 1e-4);
    let mut ok = 0;
    let mut worst_gap = 0.0f64;
    for seed in 0..100u64 {
        let base = gue(InteractionGraph::chain(8, false, 2).unwrap(), derive_seed(seed, &[1]));
        let params = ContinuousParams { env_gap_floor: 0.5, ..ContinuousParams::new(edge(3, 4), s, eps) };
        let (spec, rec) = plant_continuous_region(&base, &params, seed).unwrap();
        let l = eigs(&spec);
        let g = gap(&l, default_tau(&l)).unwrap().gap;
        let bound = s + 2.0 * eps * (rec.z as f64 + 1.0);
        let cert = certificate_continuous(&spec, &rec, CERTIFICATE_CAP).unwrap();
        worst_gap = worst_gap.max(g);
        if g <= bound && cert.pass && rec.z == 2 {
            ok += 1;
        }
    }
    let pass = ok == 100;
    report(3, "perturbed continuous plant", pass, &format!("{ok}/100 seeds, largest gap {worst_gap} (bound 0.0106)"));
    assert!(pass);
}

#[test]
fn criterion_04_projector_plant() {
    let cases = [(InteractionGraph::chain(5, false, 2).unwrap(), 2usize), (InteractionGraph::lattice(&[2, 3], false, 2).unwrap(), 1)];
    let mut ok = 0;
    let mut total = 0;
    let mut worst_entropy = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for (graph, vertex) in &cases {
        for seed in 0..100u64 {
            total += 1;
            let base = gue(graph.clone(), derive_seed(seed, &[2]));
            let (exact, _) = plant_projector_region(&base, *vertex, 1, 0.0, seed).unwrap();
            let full = dense_spectrum(&assemble_dense(&exact, DEFAULT_DENSE_CAP).unwrap(), true).unwrap();
            let even = cluster_distinct(&full.eigenvalues, 1e-9).iter().all(|c| c.multiplicity % 2 == 0);
            let entropy = schmidt_spectrum(&full.vector(0).unwrap(), &[*vertex], exact.graph()).unwrap().entropy;
            worst_entropy = worst_entropy.max(entropy);

            let (perturbed, rec) = plant_projector_region(&base, *vertex, 1, 1e-4, seed).unwrap();
            let cert = certificate_projector(&perturbed, &rec, &exact, CERTIFICATE_CAP).unwrap();
            worst_ratio = worst_ratio.max(cert.observed / cert.bound);
            if even && entropy < 1e-8 && cert.pass {
                ok += 1;
            }
        }
    }
    let pass = ok == total;
    report(
        4,
        "projector plant",
        pass,
        &format!("{ok}/{total} (chain 5 and 2x3 lattice), max entropy {worst_entropy:e}, max observed/bound {worst_ratio:.3}"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_discrete_plant() {
    let law = DiscreteSpectrumLaw::new(vec![0.0, 1.0, 2.5], vec![0.3, 0.4, 0.3]).unwrap();
    let mut ok = 0;
    let mut worst_entropy = 0.0f64;
    for seed in 0..100u64 {
        let base = gue(InteractionGraph::chain(6, false, 2).unwrap(), derive_seed(seed, &[3]));
        let (spec, _) = plant_discrete_region(&base, edge(2, 3), 2, &law, Beta::Unitary, seed).unwrap();
        let full = dense_spectrum(&assemble_dense(&spec, DEFAULT_DENSE_CAP).unwrap(), true).unwrap();
        let degeneracy = cluster_distinct(&full.eigenvalues, 1e-10)[0].multiplicity;
        let entropy = (0..2)
            .map(|k| schmidt_spectrum(&full.vector(k).unwrap(), &[2, 3], spec.graph()).unwrap().entropy)
            .fold(0.0, f64::max);
        worst_entropy = worst_entropy.max(entropy);
        if degeneracy == 2 && entropy < 1e-8 {
            ok += 1;
        }
    }
    let pass = ok == 100;
    report(5, "discrete plant", pass, &format!("{ok}/100 seeds with degeneracy 2, max entropy {worst_entropy:e}"));
    assert!(pass);
}

#[test]
fn criterion_06_dos_ladder() {
    let start = Instant::now();
    let spec = scratch("c6.json");
    let spec = spec.to_str().unwrap();
    let s = [0.01, 0.02, 0.03];
    run(&["plant", "dos-ladder", "--sites", "10", "--edges", "1-2,4-5,7-8", "--s", "0.01,0.02,0.03", "--eps", "0", "--seed", "11", "--out", spec]);
    let l: Vec<f64> = csv_rows(&run(&["spectrum", "--in", spec])).iter().map(|r| r[1].parse().unwrap()).collect();
    let distances: Vec<f64> =
        s.iter().map(|si| l.iter().map(|x| (x - (l[0] + si)).abs()).fold(f64::INFINITY, f64::min)).collect();
    let elapsed = start.elapsed();
    let pass = distances.iter().all(|&d| d <= 1e-9) && elapsed < Duration::from_secs(120);
    report(6, "continuous-DOS ladder", pass, &format!("distances {distances:?}, {elapsed:.2?}"));
    assert!(pass);
}

/// Composite Simpson rule with `n` (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        acc += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

fn normal_pdf(x: f64, var: f64) -> f64 {
    (-x * x / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
}

/// `P[min_a ||M - aI||_F <= eps]` for 2x2 GOE (diagonal variance 2, off-diagonal
/// variance 1) by 2-D quadrature over `u = M11 - M22` and `c = M12`, where the
/// distance squared is `u^2/2 + 2c^2`.
fn goe2_near_identity(eps: f64) -> f64 {
    let a = std::f64::consts::SQRT_2 * eps;
    simpson(
        |theta| {
            let u = a * theta.sin();
            let b = ((eps * eps - u * u / 2.0).max(0.0) / 2.0).sqrt();
            let inner = if b == 0.0 { 0.0 } else { simpson(|c| normal_pdf(c, 1.0), -b, b, 200) };
            normal_pdf(u, 4.0) * inner * a * theta.cos()
        },
        -std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
        400,
    )
}

/// Same for 2x2 GUE (diagonal variance 1, real and imaginary off-diagonal
/// parts variance 1/2): quadrature over `u` with the disc probability of
/// `(Re M12, Im M12)` in closed form.
fn gue2_near_identity(eps: f64) -> f64 {
    let a = std::f64::consts::SQRT_2 * eps;
    simpson(
        |theta| {
            let u = a * theta.sin();
            let rho2 = (eps * eps - u * u / 2.0).max(0.0) / 2.0;
            normal_pdf(u, 2.0) * (1.0 - (-rho2).exp()) * a * theta.cos()
        },
        -std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
        400,
    )
}

#[test]
fn criterion_07_mc_oracle_agreement() {
    let start = Instant::now();
    let grid = [0.5, 0.35, 0.25, 0.18];
    let trials = 1_000_000u64;
    let mut worst_z = 0.0f64;
    let mut lines = Vec::new();
    for (beta, oracle) in [(Beta::Orthogonal, goe2_near_identity as fn(f64) -> f64), (Beta::Unitary, gue2_near_identity)] {
        let r = mc_near_identity_exponent(2, beta, &grid, trials, 20240, 4).unwrap();
        for (i, &eps) in grid.iter().enumerate() {
            let p = oracle(eps);
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            worst_z = worst_z.max((r.estimates[i] - p).abs() / sigma);
        }
        let fit = r.slope.unwrap();
        let pred = predicted_exponents(2, beta);
        lines.push(format!(
            "beta {beta}: slope {:.3} [{:.3}, {:.3}] vs n^2 = {} / dimension count {}",
            fit.slope, fit.ci_lo, fit.ci_hi, pred.n_squared, pred.dimension_count
        ));
    }
    let elapsed = start.elapsed();
    let pass = worst_z <= 3.0 && elapsed < Duration::from_secs(300);
    report(7, "MC oracle agreement", pass, &format!("max |z| {worst_z:.2}; {}; {elapsed:.2?}", lines.join("; ")));
    assert!(pass);
}

#[test]
fn criterion_08_solver_cross_validation() {
    let mut ok = 0;
    let mut worst = 0.0f64;
    for t in 0..50u64 {
        let n = 4 + (t % 7) as usize;
        let beta = if t % 2 == 0 { Beta::Unitary } else { Beta::Orthogonal };
        let graph = InteractionGraph::chain(n, t % 3 == 0, 2).unwrap();
        let spec = random_spec(graph, &TermModel::Gaussian { beta }, derive_seed(t, &[8])).unwrap();
        let h = assemble_dense(&spec, DEFAULT_DENSE_CAP).unwrap();
        let dense = dense_spectrum(&h, false).unwrap().eigenvalues;
        let opts = LanczosOptions { seed: t, ..LanczosOptions::default() };
        let lanczos = lanczos_lowest(&spec.operator().unwrap(), 4, &opts).unwrap().eigenvalues;
        let dev = lanczos.iter().zip(&dense).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        worst = worst.max(dev);

        let sum: f64 = dense.iter().sum();
        let sum_sq: f64 = dense.iter().map(|x| x * x).sum();
        let fro2 = h.frobenius_norm().powi(2);
        let trace_ok = (sum - h.trace()).abs() <= 1e-8 * h.trace().abs().max(1.0);
        let square_ok = (sum_sq - fro2).abs() <= 1e-6 * fro2.max(1.0);
        if dev <= 1e-8 && trace_ok && square_ok {
            ok += 1;
        }
    }
    let pass = ok == 50;
    report(8, "solver cross-validation", pass, &format!("{ok}/50 chains, max Lanczos deviation {worst:e}"));
    assert!(pass);
}

#[test]
fn criterion_09_scaling_arithmetic() {
    let a = gap_scaling_exponent(2, 2).unwrap();
    let b = gap_scaling_exponent(6, 2).unwrap();
    let cli = csv_rows(&run(&["scaling", "exponent", "--z", "2", "--d", "2"]));
    let pass = a.denominator == 36
        && a.value == 1.0 / 36.0
        && b.denominator == 100
        && b.value == 1.0 / 100.0
        && cli[0][2] == "1/36"
        && cli[0][3].parse::<f64>().unwrap() == 1.0 / 36.0;
    report(9, "scaling arithmetic", pass, &format!("(2,2) -> 1/{} = {}, (6,2) -> 1/{} = {}", a.denominator, a.value, b.denominator, b.value));
    assert!(pass);
}

#[test]
fn criterion_10_worker_determinism() {
    let experiments: [(&str, Vec<&str>); 4] = [
        ("mc-exponent", vec!["ensemble", "mc-exponent", "--n", "2", "--beta", "1", "--eps", "0.5,0.35,0.25,0.18", "--trials", "20000", "--seed", "5"]),
        ("mc-spacing", vec!["ensemble", "mc-spacing", "--n", "3", "--beta", "2", "--eps", "0.8,0.5,0.3,0.2", "--trials", "20000", "--seed", "6"]),
        ("sweep dense", vec!["sweep", "gap-vs-size", "--sizes", "4,6,8", "--trials", "6", "--seed", "7"]),
        ("sweep lanczos", vec!["sweep", "gap-vs-size", "--model", "planted", "--sizes", "6,9", "--trials", "3", "--dense-cap", "128", "--eps", "1e-4", "--seed", "8"]),
    ];
    let mut identical = 0;
    let mut names = Vec::new();
    for (name, args) in &experiments {
        let outputs: Vec<(Vec<u8>, Vec<u8>)> = ["1", "4"]
            .iter()
            .map(|w| {
                let main = scratch(&format!("c10-{}-{w}.csv", name.replace(' ', "-")));
                let side = scratch(&format!("c10-{}-{w}.side.csv", name.replace(' ', "-")));
                let side_flag = if args[0] == "sweep" { "--summary-out" } else { "--slope-out" };
                let mut full: Vec<&str> = args.clone();
                full.extend(["--workers", w, "--out", main.to_str().unwrap(), side_flag, side.to_str().unwrap()]);
                run(&full);
                (std::fs::read(&main).unwrap(), std::fs::read(&side).unwrap())
            })
            .collect();
        if outputs[0] == outputs[1] {
            identical += 1;
        } else {
            names.push(*name);
        }
    }
    let pass = identical == experiments.len();
    report(10, "worker determinism", pass, &format!("{identical}/{} subcommands byte-identical for workers 1 and 4 {names:?}", experiments.len()));
    assert!(pass);
}
