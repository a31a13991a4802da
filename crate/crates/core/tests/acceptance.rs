//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit when
//! any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use schatten_randomizer::experiments::{
    bounded_difference_witness, check_bounded_difference, dn_baseline, estimate_expected_deviation,
    fit_scaling, inequality_oracles, mcdiarmid_tails, minimal_m_sweep, ExperimentConfig, MRange, Mode,
};
use schatten_randomizer::haar::{check_isotropy, sample_haar_unitary, sample_pure_state, PureState, UNITARITY_TOL};
use schatten_randomizer::linalg::hermitian_eigen;
use schatten_randomizer::net::{build_net, verify_covering};
use schatten_randomizer::norms::{norm_from_singular_values, schatten_norm};
use schatten_randomizer::randomizer::{
    certify_epsilon_randomizing, hayden_winter_bound, EvaluationPlan,
};
use schatten_randomizer::report::strip_timestamps;
use schatten_randomizer::{ComplexMatrix, PExponent, RandomizingChannel, Seed, UnitaryEnsemble};

type Outcome = Result<String, String>;

const ALL_P: [PExponent; 5] = [
    PExponent::Finite(1.0),
    PExponent::Finite(1.5),
    PExponent::Finite(2.0),
    PExponent::Finite(3.0),
    PExponent::Infinity,
];

fn p(x: f64) -> PExponent {
    PExponent::finite(x).unwrap()
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<Duration, String> {
    let elapsed = start.elapsed();
    ensure(elapsed < budget, format!("took {elapsed:.1?}, budget {budget:?}"))?;
    Ok(elapsed)
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(f)
}

fn norm_oracles() -> Outcome {
    let start = Instant::now();
    let batch = inequality_oracles(1000, &[2, 4, 8, 16], Seed::new(101, 0)).map_err(|e| e.to_string())?;
    ensure(
        batch.all_pass(),
        format!(
            "oracle failures: interpolation {}, hoelder {}, reverse triangle {}",
            batch.interpolation.failures, batch.hoelder.failures, batch.reverse_triangle.failures
        ),
    )?;

    let diag = ComplexMatrix::from_diag(&[3.0, 4.0]);
    let got: Vec<f64> = [PExponent::ONE, PExponent::TWO, PExponent::Infinity]
        .iter()
        .map(|&q| schatten_norm(&diag, q).unwrap())
        .collect();
    ensure(
        (got[0] - 7.0).abs() < 1e-12 && (got[1] - 5.0).abs() < 1e-12 && (got[2] - 4.0).abs() < 1e-12,
        format!("diag(3, 4) norms {got:?}"),
    )?;

    for d in [2usize, 3, 4, 8, 16] {
        let psi = sample_pure_state(d, Seed::new(102, d as u64)).map_err(|e| e.to_string())?;
        let centered = psi.projector().shift_diagonal(1.0 / d as f64).unwrap();
        let eigen = hermitian_eigen(&centered).map_err(|e| e.to_string())?;
        let moduli: Vec<f64> = eigen.eigenvalues.iter().map(|l| l.abs()).collect();
        let df = d as f64;
        let closed = [
            (PExponent::ONE, 2.0 * (df - 1.0) / df),
            (PExponent::TWO, ((df - 1.0) / df).sqrt()),
            (PExponent::Infinity, (df - 1.0) / df),
        ];
        for (q, expected) in closed {
            let enumerated = norm_from_singular_values(&moduli, q);
            let computed = schatten_norm(&centered, q).unwrap();
            ensure(
                (enumerated - expected).abs() <= 1e-12 && (computed - expected).abs() <= 1e-12,
                format!("d = {d}, p = {q}: closed form {expected}, eigenvalues {enumerated}, norm {computed}"),
            )?;
        }
    }
    let elapsed = within_budget(start, Duration::from_secs(30))?;
    Ok(format!(
        "1000 matrices, {} checks, worst margins {:.1e}/{:.1e}/{:.1e}, fixtures exact, {elapsed:.1?}",
        batch.interpolation.checked + batch.hoelder.checked + batch.reverse_triangle.checked,
        batch.interpolation.worst_margin,
        batch.hoelder.worst_margin,
        batch.reverse_triangle.worst_margin
    ))
}

fn haar_correctness() -> Outcome {
    let start = Instant::now();
    let seed = Seed::new(201, 0);
    let a = UnitaryEnsemble::haar(8, 16, seed).map_err(|e| e.to_string())?;
    let b = UnitaryEnsemble::haar(8, 16, seed).map_err(|e| e.to_string())?;
    let identical = a.members().iter().zip(b.members()).all(|(x, y)| {
        x.entries()
            .iter()
            .zip(y.entries())
            .all(|(u, v)| u.re.to_bits() == v.re.to_bits() && u.im.to_bits() == v.im.to_bits())
    });
    ensure(identical, "same seed produced different ensembles")?;

    let mut worst_residual = 0.0f64;
    for d in [1usize, 2, 3, 4, 8, 16, 32] {
        let e = UnitaryEnsemble::haar(d, 20, Seed::new(202, d as u64)).map_err(|e| e.to_string())?;
        worst_residual = worst_residual.max(e.max_unitarity_residual());
    }
    ensure(worst_residual <= UNITARITY_TOL, format!("unitarity residual {worst_residual:e}"))?;

    let mut iso = Vec::new();
    for d in [2usize, 8, 16] {
        let psi = PureState::basis(d, 0).unwrap();
        let chk = check_isotropy(d, 10_000, &psi, Seed::new(203, d as u64)).map_err(|e| e.to_string())?;
        ensure(chk.pass, format!("isotropy at d = {d}: deviation {} > {}", chk.deviation, chk.tolerance))?;
        iso.push(format!("{:.4}", chk.deviation));
    }

    let n = 100_000u64;
    let draws: Vec<f64> = (0..n)
        .map(|k| sample_haar_unitary(2, Seed::new(204, 0).split(k)).unwrap().get(0, 0).norm_sqr())
        .collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let sigma = (var / n as f64).sqrt();
    ensure((mean - 0.5).abs() <= 3.0 * sigma, format!("E|U11|^2 = {mean} vs 1/2, sigma {sigma:e}"))?;

    let elapsed = within_budget(start, Duration::from_secs(120))?;
    Ok(format!(
        "bit-identical, max residual {worst_residual:.1e}, isotropy deviations {} (tol 0.04), E|U11|^2 = {mean:.5} ({:.2} sigma), {elapsed:.1?}",
        iso.join("/"),
        (mean - 0.5).abs() / sigma
    ))
}

fn complete_randomization() -> Outcome {
    let ch = RandomizingChannel::pauli();
    let mut worst = 0.0f64;
    for k in 0..100 {
        let psi = sample_pure_state(2, Seed::new(301, k)).map_err(|e| e.to_string())?;
        for q in ALL_P {
            worst = worst.max(ch.distance_to_mixed(&psi, q).map_err(|e| e.to_string())?);
        }
    }
    ensure(worst <= 1e-12, format!("max Y = {worst:e}"))?;
    Ok(format!("max Y over 100 states and 5 exponents = {worst:.1e}"))
}

fn expectation_bounds() -> Outcome {
    let start = Instant::now();
    let mut cells = Vec::new();
    for (pv, rv) in [(1.0, 2.0), (2.0, 3.0)] {
        for m in [32usize, 64, 128] {
            let mut cfg = ExperimentConfig::new(16, p(pv), 1.0, MRange::fixed(m), Seed::new(401, m as u64));
            cfg.r = Some(p(rv));
            cfg.trials = 200;
            let res = estimate_expected_deviation(&cfg).map_err(|e| e.to_string())?;
            let bound = res.specialized_bound.ok_or("missing closed form")?;
            ensure(
                res.mean_y <= bound + 2.0 * res.std_error,
                format!("(p, r) = ({pv}, {rv}), m = {m}: mean Y {} > {} + 2 x {}", res.mean_y, bound, res.std_error),
            )?;
            cells.push(format!("({pv},{rv},{m}) {:.3}<={:.3}", res.mean_y, bound));
        }
    }
    let elapsed = within_budget(start, Duration::from_secs(600))?;
    Ok(format!("{}, {elapsed:.1?}", cells.join(", ")))
}

fn bounded_differences() -> Outcome {
    let mut cells = Vec::new();
    for (d, m, pv) in [(2usize, 2usize, 1.0), (8, 32, 1.0), (8, 32, 1.5), (8, 32, 2.0)] {
        let cfg = ExperimentConfig::new(d, p(pv), 1.0, MRange::fixed(m), Seed::new(501, (d * m) as u64 + pv as u64));
        let res = check_bounded_difference(&cfg, 500).map_err(|e| e.to_string())?;
        ensure(
            res.max_delta <= res.bound + 1e-9,
            format!("(d, m, p) = ({d}, {m}, {pv}): max delta {} > {}", res.max_delta, res.bound),
        )?;
        cells.push(format!("({d},{m},{pv}) {:.4}<={:.4}", res.max_delta, res.bound));
    }
    let witness = bounded_difference_witness(PExponent::ONE).map_err(|e| e.to_string())?;
    ensure(
        witness.max_delta >= 0.99 * witness.bound && witness.holds,
        format!("witness delta {} vs bound {}", witness.max_delta, witness.bound),
    )?;
    Ok(format!("{}, witness {:.6}/{:.6}", cells.join(", "), witness.max_delta, witness.bound))
}

fn mcdiarmid() -> Outcome {
    let mut cfg = ExperimentConfig::new(8, PExponent::ONE, 1.0, MRange::fixed(64), Seed::new(601, 0));
    cfg.trials = 2000;
    let tails = mcdiarmid_tails(&cfg, &[0.1, 0.2]).map_err(|e| e.to_string())?;
    let mut cells = Vec::new();
    for t in &tails {
        ensure(
            t.empirical_tail <= t.bound + 3.0 * t.std_error,
            format!("t = {}: tail {} > {} + 3 x {}", t.t, t.empirical_tail, t.bound, t.std_error),
        )?;
        cells.push(format!("t={} tail {:.4}<={:.4}", t.t, t.empirical_tail, t.bound));
    }
    Ok(cells.join(", "))
}

fn nets() -> Outcome {
    let net = build_net(2, 0.5, 5000, Seed::new(701, 0)).map_err(|e| e.to_string())?;
    let covering = verify_covering(&net, 10_000, Seed::new(702, 0)).map_err(|e| e.to_string())?;
    ensure(covering.pass, format!("covering radius {} > 0.5", covering.max_min_distance))?;
    ensure(net.len() as f64 <= 10_000.0, format!("net size {}", net.len()))?;
    let mut worst = f64::NEG_INFINITY;
    for k in 0..1000u64 {
        let ch = RandomizingChannel::haar(2, 1 + (k % 16) as usize, Seed::new(703, k)).map_err(|e| e.to_string())?;
        let probe = sample_pure_state(2, Seed::new(704, k)).map_err(|e| e.to_string())?;
        let (idx, dist) = net.nearest(&probe).map_err(|e| e.to_string())?;
        let diff = ch.apply_pure(&probe).unwrap().sub(&ch.apply_pure(&net.points()[idx]).unwrap()).unwrap();
        for q in ALL_P {
            worst = worst.max(schatten_norm(&diff, q).unwrap() - dist);
        }
    }
    ensure(worst <= 1e-9, format!("soundness violated by {worst:e}"))?;
    Ok(format!(
        "{} points, covering radius {:.4}, soundness margin {worst:.2e}",
        net.len(),
        covering.max_min_distance
    ))
}

fn theorem_shape() -> Outcome {
    let start = Instant::now();
    let eps = 0.8;
    let mut found = Vec::new();
    let mut cells = Vec::new();
    for d in [4usize, 8, 16, 32] {
        let mut cfg = ExperimentConfig::new(d, PExponent::ONE, eps, MRange::geometric(d + 1, d * d), Seed::new(801, d as u64));
        cfg.trials = 20;
        cfg.states_per_trial = 50;
        cfg.mode = Mode::Sample;
        let report = single_threaded(|| minimal_m_sweep(&cfg, 0.9)).map_err(|e| e.to_string())?;
        let m_star = report.m_star.ok_or(format!("no m_star at d = {d}"))?;
        let dn = dn_baseline(d, eps);
        ensure((m_star as f64) <= dn, format!("d = {d}: m_star {m_star} > DN {dn}"))?;
        found.push((d, m_star));
        cells.push(format!("d={d} m*={m_star} (DN {dn:.0})"));
    }
    let fit = fit_scaling(&found, eps, PExponent::ONE).map_err(|e| e.to_string())?;
    ensure(fit.slope > 0.0 && fit.r_squared >= 0.8, format!("slope {} R^2 {}", fit.slope, fit.r_squared))?;
    let elapsed = within_budget(start, Duration::from_secs(1800))?;
    Ok(format!(
        "{}, slope {:.2}, R^2 {:.3}, fitted C {:.2}, fitted c_p {:.3}, {elapsed:.1?} single-threaded",
        cells.join(", "),
        fit.slope,
        fit.r_squared,
        fit.aubrun_c,
        fit.c_p
    ))
}

fn hayden_winter() -> Outcome {
    let mut cells = Vec::new();
    for eps in [0.3, 0.5] {
        for d in [4usize, 8] {
            for q in [PExponent::TWO, PExponent::Infinity] {
                let seed = Seed::new(901, (d as u64) << 8 | (eps * 10.0) as u64).split(q.is_infinite() as u64);
                let mut m = d;
                let ch = loop {
                    let ch = RandomizingChannel::haar(d, m, seed.split(m as u64)).map_err(|e| e.to_string())?;
                    let plan = EvaluationPlan::Samples { count: 500, seed: seed.split(1 << 40) };
                    if certify_epsilon_randomizing(&ch, q, eps, plan).map_err(|e| e.to_string())?.certified {
                        break ch;
                    }
                    ensure(m < 1 << 16, format!("no randomizing channel found at d = {d}, p = {q}, eps = {eps}"))?;
                    m *= 2;
                };
                let chk = hayden_winter_bound(&ch, q, eps, 500, seed.split(1 << 41)).map_err(|e| e.to_string())?;
                ensure(
                    chk.max_norm <= chk.bound + 1e-9,
                    format!("eps = {eps}, d = {d}, p = {q}: {} > {}", chk.max_norm, chk.bound),
                )?;
                cells.push(format!("({eps},{d},{q}) m={m} {:.4}<={:.4}", chk.max_norm, chk.bound));
            }
        }
    }
    let pauli = RandomizingChannel::pauli();
    for q in [PExponent::TWO, p(3.0), PExponent::Infinity] {
        let chk = hayden_winter_bound(&pauli, q, 0.0, 50, Seed::new(902, 0)).map_err(|e| e.to_string())?;
        let expected = 0.5f64.powf(q.conjugate_fraction());
        ensure(
            (chk.max_norm - expected).abs() <= 1e-12 && (chk.bound - expected).abs() <= 1e-12,
            format!("Pauli p = {q}: {} and bound {} vs {expected}", chk.max_norm, chk.bound),
        )?;
    }
    Ok(format!("{}, Pauli saturation exact", cells.join(", ")))
}

fn cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_randomizer");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("certify.toml");
    std::fs::write(&config, "task = \"certify\"\nd = 2\nm = 6\np = 2\nepsilon = 0.9\nmode = \"net\"\nseed = 17\n")
        .map_err(|e| e.to_string())?;
    let config = config.to_str().unwrap().to_string();
    let runs: Vec<Vec<&str>> = vec![
        vec!["sample", "--d", "4", "--m", "8", "--seed", "7"],
        vec!["norms", "--count", "200", "--seed", "3"],
        vec!["randomize", "--d", "4", "--m", "24", "--p", "inf", "--epsilon", "0.9", "--states", "200", "--seed", "5"],
        vec!["net", "--d", "2", "--eta", "0.8", "--seed", "2"],
        vec!["sweep", "--d", "4", "--epsilon", "0.8", "--trials", "12", "--states", "20", "--seed", "8"],
        vec!["sweep", "--d", "4", "--epsilon", "0.8", "--trials", "12", "--states", "20", "--seed", "8", "--format", "csv"],
        vec!["verify", &config],
        vec!["formulas", "--d", "16", "--epsilon", "0.5", "--c-p", "37", "--format", "json"],
    ];
    for args in &runs {
        let mut outputs = Vec::new();
        for threads in ["1", "8", "1", "8"] {
            let o = Command::new(bin)
                .args(args)
                .args(["--threads", threads])
                .env_remove("RANDOMIZER_SEED")
                .output()
                .map_err(|e| e.to_string())?;
            ensure(
                matches!(o.status.code(), Some(0) | Some(1)),
                format!("{args:?} exited with {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr)),
            )?;
            outputs.push(strip_timestamps(&String::from_utf8(o.stdout).map_err(|e| e.to_string())?));
        }
        ensure(outputs.iter().all(|o| o == &outputs[0]), format!("{args:?} differs across runs or thread counts"))?;
        ensure(!outputs[0].is_empty(), format!("{args:?} produced no output"))?;
    }
    Ok(format!("{} commands x 4 runs identical at --threads 1 and 8", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("norm oracle suite", norm_oracles),
        ("Haar correctness", haar_correctness),
        ("complete-randomization fixture", complete_randomization),
        ("expectation bounds", expectation_bounds),
        ("bounded differences", bounded_differences),
        ("McDiarmid tail", mcdiarmid),
        ("net module", nets),
        ("cardinality shape at desk scale", theorem_shape),
        ("output-norm bound", hayden_winter),
        ("end-to-end determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
