//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Tolerances and runtime limits are pinned below.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mnac_core::bounds::{
    birge_bound, converse_joint, detection_budget, gallager_awgn, gaussian_kl, joint_error_lb, ortho_code_bound,
    pr_type_error_ub, TypeErrorQuery,
};
use mnac_core::channel::awgn;
use mnac_core::codebook::{gen_ppm_codebook, gen_signatures, mu_chernoff_lb, mu_exact, mu_monte_carlo};
use mnac_core::decoding::{decode_ppm, BoundParams};
use mnac_core::detection::{detect_ls_exhaustive, detect_pilot, v_cap, ActivityVector, DEFAULT_DETECTION_BUDGET};
use mnac_core::harness::{
    binomial_sigma, sweep, trials_csv, ExperimentConfig, GrowthFamily, RateTarget, SweepOptions,
};
use mnac_core::model::{make_joint_schedule, SystemParams};
use mnac_core::partition::{build_partition, typeclass_probability, verify_partition};
use mnac_core::rng::{fill_normal, mix_seed, stream_rng, uniform, Stream};
use mnac_core::special::q_function;

const SEED: u64 = 20240611;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

type Check = fn() -> Result<Verdict, String>;

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

// 1: mu consistency.
const MU_MC_TRIALS: u64 = 1_000_000;
const MU_MC_TOL: f64 = 0.002;

fn mu_consistency() -> Result<Verdict, String> {
    let target = 1.0 - (-2.0f64).exp();
    let mut rng = stream_rng(SEED, Stream::Auxiliary);
    let mc = mu_monte_carlo(2, MU_MC_TRIALS, &mut rng).map_err(e)?.value;
    let mut worst = f64::INFINITY;
    for len in 1..=512 {
        let gap = mu_exact(len).map_err(e)?.value - mu_chernoff_lb(len).map_err(e)?.value;
        worst = worst.min(gap);
    }
    let pass = (mc - target).abs() <= MU_MC_TOL && worst >= 0.0;
    Ok(verdict(pass, format!("MC mu(2) = {mc:.6} vs {target:.6}; min(exact - chernoff) over 1..512 = {worst:.3e}")))
}

// 2: type-error bound with one user reduces to Gallager's AWGN bound.
const FORMULA_POINTS: usize = 100;
const FORMULA_TOL: f64 = 1e-12;

fn formula_cross_check() -> Result<Verdict, String> {
    let mut rng = stream_rng(SEED, Stream::Auxiliary);
    let mut worst = 0.0f64;
    for _ in 0..FORMULA_POINTS {
        let rho = 0.01 + 0.99 * uniform(&mut rng);
        let m = 2 + (uniform(&mut rng) * 1000.0) as u64;
        let e_msg = 0.5 + 60.0 * uniform(&mut rng);
        let n_msg = 1 + (uniform(&mut rng) * 2000.0) as usize;
        let n0 = 0.25 + 4.0 * uniform(&mut rng);
        let typed = pr_type_error_ub(TypeErrorQuery::new(1, 1).map_err(e)?, rho, m, e_msg, n_msg, n0, 1.0).map_err(e)?;
        let gallager = gallager_awgn(m, n_msg, e_msg / n_msg as f64, n0, rho).map_err(e)?;
        worst = worst.max(rel_err(typed.value, gallager.value));
    }
    Ok(verdict(worst <= FORMULA_TOL, format!("max relative gap over {FORMULA_POINTS} points = {worst:.2e}")))
}

// 3: the two branches of the orthogonal-code bound meet at R = 1/(4 N0).
const CONTINUITY_TOL: f64 = 1e-12;

fn ortho_continuity() -> Result<Verdict, String> {
    let m = 1024u64;
    let mut worst = 0.0f64;
    for n0 in [0.5, 1.0, 2.0, 4.0] {
        let r = 1.0 / (4.0 * n0);
        let low = ortho_code_bound(m, r, n0).map_err(e)?;
        let high = ortho_code_bound(m, f64::from_bits(r.to_bits() + 1), n0).map_err(e)?;
        if low.term("branch") != 1.0 || high.term("branch") != 2.0 {
            return Err(format!("branch selection wrong at N0 = {n0}"));
        }
        // Second-branch formula evaluated exactly at the boundary.
        let gap = ((1.0 / n0).sqrt() - r.sqrt()).powi(2);
        let upper_at_r = (-(m as f64).ln() / r * gap).exp();
        worst = worst.max(rel_err(low.value, upper_at_r)).max(rel_err(low.value, high.value));
    }
    Ok(verdict(worst <= CONTINUITY_TOL, format!("max relative branch gap = {worst:.2e}")))
}

// 4: PPM maximum-likelihood decoding against the orthogonal-code bound.
const PPM_TRIALS: u64 = 100_000;

fn ppm_vs_bound() -> Result<Verdict, String> {
    let (m, n0, r_dot) = (256u32, 2.0, 0.125);
    let pulse_energy = (m as f64).ln() / r_dot;
    let t = 0.5;
    let book = gen_ppm_codebook(m, m as usize + 1, pulse_energy / (1.0 - t), t).map_err(e)?;
    let bound = ortho_code_bound(m as u64, r_dot, n0).map_err(e)?.value;
    let mut rng = stream_rng(SEED, Stream::Noise);
    let mut msg_rng = stream_rng(SEED, Stream::Messages);
    let mut errors = 0u64;
    for _ in 0..PPM_TRIALS {
        let w = mnac_core::rng::uniform_message(&mut msg_rng, m);
        let y = awgn(book.word(w).to_vec(), n0, &mut rng).map_err(e)?;
        if decode_ppm(y.samples(), m).map_err(e)? != w {
            errors += 1;
        }
    }
    let rate = errors as f64 / PPM_TRIALS as f64;
    let limit = bound + 3.0 * binomial_sigma(bound, PPM_TRIALS);
    Ok(verdict(rate <= limit, format!("decode error {rate:.5} vs bound {bound:.5} (+3 sigma = {limit:.5})")))
}

// 5: pilot miss rate.
const PILOT_TRIALS: u64 = 100_000;

fn pilot_detection() -> Result<Verdict, String> {
    let (t, energy, n0): (f64, f64, f64) = (0.5, 8.0, 2.0);
    let target = q_function((t * energy / (2.0 * n0)).sqrt());
    let pilot = (t * energy).sqrt();
    let mut rng = stream_rng(SEED, Stream::Noise);
    let mut noise = vec![0.0; PILOT_TRIALS as usize];
    fill_normal(&mut rng, (n0 / 2.0).sqrt(), &mut noise);
    let misses = noise.iter().filter(|&&z| !detect_pilot(pilot + z, t, energy)).count() as u64;
    let rate = misses as f64 / PILOT_TRIALS as f64;
    let sigma = binomial_sigma(target, PILOT_TRIALS);
    let pass = (rate - target).abs() <= 3.0 * sigma;
    Ok(verdict(pass, format!("miss rate {rate:.5} vs Q(1) = {target:.6} (3 sigma = {:.5})", 3.0 * sigma)))
}

// 6: exhaustive least-squares detection.
const LS_INSTANCES: u64 = 100;
const LS_NOISY_TRIALS: u64 = 300;

fn ls_detector() -> Result<Verdict, String> {
    let (ell, n_sig, v, max_weight) = (12usize, 128usize, 4usize, 3usize);
    let mut recovered = 0;
    for instance in 0..LS_INSTANCES {
        let seed = mix_seed(SEED, instance);
        let sigs = gen_signatures(ell, n_sig, 20.0, &mut stream_rng(seed, Stream::Signatures)).map_err(e)?;
        let mut pick = stream_rng(seed, Stream::Auxiliary);
        let weight = (uniform(&mut pick) * (max_weight + 1) as f64) as usize;
        let mut users: Vec<usize> = (0..ell).collect();
        for i in 0..weight {
            let j = i + (uniform(&mut pick) * (ell - i) as f64) as usize;
            users.swap(i, j);
        }
        let truth = ActivityVector::from_support(ell, &users[..weight]);
        let mut y = vec![0.0; n_sig];
        for &u in &users[..weight] {
            for (acc, s) in y.iter_mut().zip(sigs.column(u)) {
                *acc += s;
            }
        }
        let est = detect_ls_exhaustive(&y, &sigs, v, DEFAULT_DETECTION_BUDGET).map_err(e)?;
        if est.d_hat == truth {
            recovered += 1;
        }
    }

    let params = SystemParams::new(4096, 16, 0.125, 2.0).map_err(e)?;
    let sched = make_joint_schedule(&params, 0.5).map_err(e)?;
    let budget = detection_budget(&params, &sched, &BoundParams::default(), mu_exact(sched.n_sig).map_err(e)?.value)
        .map_err(e)?;
    let v = v_cap(&params, &sched).map_err(e)?;
    let mut wrong = 0u64;
    for trial in 0..LS_NOISY_TRIALS {
        let seed = mix_seed(SEED ^ 0x6, trial);
        let sigs = gen_signatures(params.ell(), sched.n_sig, sched.e_sig, &mut stream_rng(seed, Stream::Signatures))
            .map_err(e)?;
        let mut act = stream_rng(seed, Stream::Messages);
        let truth = ActivityVector((0..params.ell()).map(|_| uniform(&mut act) < params.alpha()).collect());
        let mut clean = vec![0.0; sched.n_sig];
        for u in truth.support() {
            for (acc, s) in clean.iter_mut().zip(sigs.column(u)) {
                *acc += s;
            }
        }
        let y = awgn(clean, params.n0(), &mut stream_rng(seed, Stream::Noise)).map_err(e)?;
        if detect_ls_exhaustive(y.samples(), &sigs, v, DEFAULT_DETECTION_BUDGET).map_err(e)?.d_hat != truth {
            wrong += 1;
        }
    }
    let det_err = wrong as f64 / LS_NOISY_TRIALS as f64;
    let budget_ok = budget.valid && budget.value < 1.0;
    let noisy_pass = if budget_ok {
        det_err <= budget.value + 3.0 * binomial_sigma(budget.value, LS_NOISY_TRIALS)
    } else {
        true
    };
    let noisy = if budget_ok {
        format!("noisy detection error {det_err:.3} vs budget {:.4}", budget.value)
    } else {
        format!("noisy detection error {det_err:.3}; budget {:.4e} is not < 1, bound clause not applicable", budget.value)
    };
    let pass = recovered == LS_INSTANCES && noisy_pass;
    Ok(verdict(pass, format!("noiseless {recovered}/{LS_INSTANCES}; {noisy}")))
}

// 7: two-phase receiver on the tiny config.
const TINY_TRIALS: u64 = 2_000;

fn two_phase_end_to_end() -> Result<Verdict, String> {
    let mut cfg = ExperimentConfig::joint(512, 8, 0.25, RateTarget::Messages(4));
    cfg.seed = SEED;
    cfg.split = Some(0.5);
    cfg.bounds.xi = 8;
    let exp = cfg.resolve().map_err(e)?;
    let records = exp.run_trials(TINY_TRIALS, None).map_err(e)?;
    let overflow = records.iter().filter(|r| r.stats.overflow).count() as f64 / TINY_TRIALS as f64;
    let markov = 1.0 / cfg.bounds.xi as f64;
    let limit = markov + 3.0 * binomial_sigma(markov, TINY_TRIALS);
    let balanced = records.iter().filter(|r| r.active + r.false_alarms == r.detected + r.misses).count() as u64;
    let pass = overflow <= limit && balanced == TINY_TRIALS;
    Ok(verdict(pass, format!("overflow {overflow:.4} <= {limit:.4}; bookkeeping holds in {balanced}/{TINY_TRIALS}")))
}

// 8: partitions of type classes.
const PROB_SUM_TOL: f64 = 1e-12;

fn partition_suite() -> Result<Verdict, String> {
    let mut cases = 0;
    let mut failed = Vec::new();
    let mut worst_sum = 0.0f64;
    for ell in 5..=8 {
        for m in [2u32, 3] {
            for t in 1..=ell {
                cases += 1;
                let p = build_partition(ell, m, t).map_err(e)?;
                if !verify_partition(&p).passed {
                    failed.push(format!("({ell},{m},{t})"));
                }
            }
            for alpha in [0.05, 0.3, 0.5, 0.9] {
                let total: f64 =
                    (0..=ell).map(|t| typeclass_probability(ell, m, t, alpha)).collect::<Result<Vec<_>, _>>().map_err(e)?.iter().sum();
                worst_sum = worst_sum.max((total - 1.0).abs());
            }
        }
    }
    let pass = failed.is_empty() && worst_sum <= PROB_SUM_TOL;
    Ok(verdict(
        pass,
        format!("{}/{cases} partitions verified (failed: {failed:?}); max |sum - 1| = {worst_sum:.2e}", cases - failed.len()),
    ))
}

// 9: Birge's inequality dominates empirical ML success.
const BIRGE_INSTANCES: u64 = 50;
const BIRGE_TRIALS: u64 = 10_000;
const BIRGE_DIM: usize = 4;

fn birge_dominance() -> Result<Verdict, String> {
    let n0 = 1.0;
    let mut violations = 0;
    let mut min_slack = f64::INFINITY;
    for instance in 0..BIRGE_INSTANCES {
        let seed = mix_seed(SEED, instance);
        let mut rng = stream_rng(seed, Stream::Codebooks);
        let hyps = 3 + (uniform(&mut rng) * 6.0) as usize;
        let spread = (0.01 + 0.2 * uniform(&mut rng)).sqrt();
        let means: Vec<Vec<f64>> = (0..hyps)
            .map(|_| {
                let mut x = vec![0.0; BIRGE_DIM];
                fill_normal(&mut rng, spread, &mut x);
                x
            })
            .collect();
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
        let kl: Vec<Vec<f64>> =
            means.iter().map(|a| means.iter().map(|b| gaussian_kl(dist(a, b), n0)).collect::<Result<_, _>>()).collect::<Result<_, _>>().map_err(e)?;
        let bound = birge_bound(&kl).map_err(e)?.value;

        let mut noise_rng = stream_rng(seed, Stream::Noise);
        let mut z = vec![0.0; BIRGE_DIM];
        let mut hits = 0u64;
        for trial in 0..BIRGE_TRIALS {
            let truth = (trial % hyps as u64) as usize;
            fill_normal(&mut noise_rng, (n0 / 2.0).sqrt(), &mut z);
            let y: Vec<f64> = means[truth].iter().zip(&z).map(|(m, z)| m + z).collect();
            let guess = (0..hyps).min_by(|&a, &b| dist(&y, &means[a]).total_cmp(&dist(&y, &means[b]))).unwrap();
            if guess == truth {
                hits += 1;
            }
        }
        let success = hits as f64 / BIRGE_TRIALS as f64;
        min_slack = min_slack.min(bound - success);
        if success > bound {
            violations += 1;
        }
    }
    Ok(verdict(violations == 0, format!("{violations} violations in {BIRGE_INSTANCES} instances; min slack {min_slack:.4}")))
}

// 10: converse trends.
const CONVERSE_TARGET: f64 = 0.085;
const CONVERSE_REL_TOL: f64 = 0.10;
const LB_TARGET: f64 = 0.661;
const LB_TOL: f64 = 0.001;

fn converse_trends() -> Result<Verdict, String> {
    let family = GrowthFamily::sup();
    let mut values = Vec::new();
    for n in [1usize << 10, 1 << 14, 1 << 18] {
        let params = family.point(n).map_err(e)?;
        values.push(converse_joint(&params, (n as f64).ln(), 0.0).map_err(e)?.value);
    }
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let last = values[2];
    let near = (last - CONVERSE_TARGET).abs() <= CONVERSE_REL_TOL * CONVERSE_TARGET;
    let ell = 1_000_000usize;
    let lb = joint_error_lb(0.01, ell, 1.0, 2.0 / ell as f64).map_err(e)?.value;
    let lb_ok = (lb - LB_TARGET).abs() <= LB_TOL;
    Ok(verdict(
        decreasing && near && lb_ok,
        format!(
            "converse {values:.6?} (decreasing: {decreasing}); at 2^18 {last:.6} vs {CONVERSE_TARGET} +/-10%: {near}; joint_error_lb {lb:.4}"
        ),
    ))
}

// 11: phase-transition witness on the sublinear family.
const WITNESS_TRIALS: u64 = 1_000;
const WITNESS_CEILING: f64 = 0.1;

fn phase_transition_witness() -> Result<Verdict, String> {
    let opts = SweepOptions {
        capacity_fraction: 0.25,
        bounds: BoundParams { xi: 3, ..BoundParams::default() },
        trials: WITNESS_TRIALS,
        seed: SEED,
        ..SweepOptions::default()
    };
    let table = sweep(&GrowthFamily::sub(), &[256, 1024, 4096], &opts);
    let mut errs = Vec::new();
    for p in &table.points {
        if !p.errors.is_empty() {
            return Err(format!("n = {}: {}", p.n, p.errors.join("; ")));
        }
        errs.push(p.row.as_ref().and_then(|r| r.joint_err).ok_or("missing simulation")?);
    }
    let pass = errs[2] < errs[0] && errs[2] < WITNESS_CEILING;
    Ok(verdict(pass, format!("joint error at n = 256, 1024, 4096: {errs:.3?}")))
}

// 12: the simulate path twice from the same JSON config.
const DETERMINISM_CONFIG: &str =
    r#"{"scheme":"joint","n":512,"ell":8,"alpha":0.25,"rate":{"messages":4},"trials":200,"seed":77}"#;

fn simulate_csv(threads: usize) -> Result<String, String> {
    let cfg: ExperimentConfig = serde_json::from_str(DETERMINISM_CONFIG).map_err(e)?;
    let exp = cfg.resolve().map_err(e)?;
    Ok(trials_csv(&exp.run_trials(cfg.trials, Some(threads)).map_err(e)?))
}

fn determinism() -> Result<Verdict, String> {
    let (a, b) = (simulate_csv(1)?, simulate_csv(4)?);
    Ok(verdict(a == b && !a.is_empty(), format!("{} bytes, identical: {}", a.len(), a == b)))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, Check, u64); 12] = [
        (1, "mu consistency", mu_consistency, 5),
        (2, "formula cross-check", formula_cross_check, 1),
        (3, "orthogonal-bound continuity", ortho_continuity, 1),
        (4, "PPM decoder vs bound", ppm_vs_bound, 30),
        (5, "pilot detection", pilot_detection, 10),
        (6, "exhaustive LS detector", ls_detector, 300),
        (7, "two-phase end-to-end", two_phase_end_to_end, 300),
        (8, "partition suite", partition_suite, 120),
        (9, "Birge dominance", birge_dominance, 120),
        (10, "converse trends", converse_trends, 1),
        (11, "phase-transition witness", phase_transition_witness, 900),
        (12, "determinism", determinism, 60),
    ];
    let mut failures = 0;
    for (id, name, check, limit_s) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit_s);
        let (pass, detail) = match result {
            Ok(v) => (v.pass && in_time, v.detail),
            Err(err) => (false, format!("error: {err}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {id:2} {}: {name}: {detail} [{:.2}s / {limit_s}s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failures} failed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
