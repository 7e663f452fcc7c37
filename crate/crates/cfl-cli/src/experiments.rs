// SPDX-License-Identifier: Apache-2.0

//! Subcommand drivers. Trials run in parallel chunks; records are appended in
//! trial order, so output is independent of the thread count.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use cfl_attacks::{main_attack, nugget_finder, verify_structure, AdversaryKind, AttackConfig};
use cfl_core::bernoulli::{verify_bernoulli_lemmas, LemmaStatus};
use cfl_core::hoeffding::{halfsample_tail_frequency, hoeffding_halfsample_bound};
use cfl_core::laplace::check_laplace_ratio;
use cfl_core::martingale::{
    check_coupled_u, check_ex_machina, classify, diffs, gap_stats, generators, sum_of_squares, ClassifyOptions, Flavor,
    GAP_PROBABILITY,
};
use cfl_core::sampling::{
    adversarial_instance, check_sigma_tail_bounds, exact_expected_reward, exact_halt_probs, run_lapexp,
    theorem_42_bound, threshold_expected_reward,
};
use cfl_core::stats::{MeanAccumulator, Proportion};
use cfl_core::{BernoulliSeq, Ensemble, Grid, Laplace, SamplingInstance, SeedStream};
use cfl_protocol::protocols::{exact_output_probability, MAX_ENUMERATION_BITS};
use cfl_protocol::{build_protocol, run_honest, Coins, Protocol};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Generator};
use crate::records::{JsonlWriter, TrialRecord};
use crate::summary::{all_pass, read_summary, write_summary, CiMethod, SummaryRow, Verdict};
use crate::{CliError, EXIT_FAIL, EXIT_PASS};

/// Records file name inside the output directory.
pub const RESULTS_FILE: &str = "results.jsonl";
/// Summary file name inside the output directory.
pub const SUMMARY_FILE: &str = "summary.csv";
const CHUNK: u64 = 4096;
/// Standard errors of cushion for one-sided statistical assertions.
const CUSHION: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Attack,
    Nugget,
    Lapexp,
    MartingaleCheck,
    VerifyLemmas,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Attack => "attack",
            Command::Nugget => "nugget",
            Command::Lapexp => "lapexp",
            Command::MartingaleCheck => "martingale-check",
            Command::VerifyLemmas => "verify-lemmas",
            Command::Report => "report",
        }
    }

    fn default_trials(self, cfg: &ExperimentConfig) -> u64 {
        match self {
            Command::Simulate => 10_000,
            Command::Attack => cfg.attack.trials,
            Command::Nugget => 1,
            Command::Lapexp | Command::MartingaleCheck => 100_000,
            Command::VerifyLemmas => 1000,
            Command::Report => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; `None` lets rayon decide.
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub rows: Vec<SummaryRow>,
    /// Lines written to `results.jsonl`.
    pub records: u64,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if all_pass(&self.rows) { EXIT_PASS } else { EXIT_FAIL }
    }
}

/// Runs `cmd`, writing `results.jsonl` and `summary.csv` under `opts.out_dir`.
/// `report` only reads an existing `summary.csv`.
pub fn run_experiment(cmd: Command, cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    if cmd == Command::Report {
        let path = opts.out_dir.join(SUMMARY_FILE);
        let rows = read_summary(File::open(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?)?;
        let records = match fs::read_to_string(opts.out_dir.join(RESULTS_FILE)) {
            Ok(text) => text.lines().count() as u64,
            Err(_) => 0,
        };
        return Ok(RunOutcome { rows, records });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    fs::create_dir_all(&opts.out_dir)?;
    let mut sink = JsonlWriter::create(&opts.out_dir.join(RESULTS_FILE))?;
    let trials = cfg.trials.unwrap_or_else(|| cmd.default_trials(cfg));
    let started = Instant::now();
    let mut rows = if trials == 0 {
        vec![SummaryRow {
            estimator: cmd.name().into(),
            estimate: None,
            se: None,
            ci: None,
            ci_method: CiMethod::None,
            trials: 0,
            bound: None,
            pass: Verdict::Inconclusive,
        }]
    } else {
        let run = Run { cfg, trials, stream: SeedStream::new(cfg.seed), out_dir: &opts.out_dir };
        pool.install(|| match cmd {
            Command::Simulate => run.simulate(&mut sink),
            Command::Attack => run.attack(&mut sink),
            Command::Nugget => run.nugget(&mut sink),
            Command::Lapexp => run.lapexp(&mut sink),
            Command::MartingaleCheck => run.martingale(&mut sink),
            Command::VerifyLemmas => run.lemmas(&mut sink),
            Command::Report => unreachable!("handled above"),
        })?
    };
    if cfg.record_timing {
        rows.push(SummaryRow::exact("wall_seconds", started.elapsed().as_secs_f64(), None, Verdict::Info));
    }
    let mut f = BufWriter::new(File::create(opts.out_dir.join(SUMMARY_FILE))?);
    write_summary(&mut f, &rows)?;
    f.flush()?;
    Ok(RunOutcome { rows, records: sink.lines() })
}

type Sink = JsonlWriter<BufWriter<File>>;

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    trials: u64,
    stream: SeedStream,
    out_dir: &'a std::path::Path,
}

/// Wall time of `f` in nanoseconds when `on`.
fn timed<T>(on: bool, f: impl FnOnce() -> T) -> (T, Option<u64>) {
    if on {
        let t = Instant::now();
        let v = f();
        (v, Some(t.elapsed().as_nanos() as u64))
    } else {
        (f(), None)
    }
}

/// Maps trials `0..trials` in parallel chunks and appends each chunk in order.
fn run_trials<T, F>(trials: u64, sink: &mut Sink, f: F) -> Result<Vec<T>, CliError>
where
    T: Serialize + Send,
    F: Fn(u64) -> Result<T, CliError> + Sync + Send,
{
    let mut all = Vec::with_capacity(trials.min(1 << 20) as usize);
    let mut start = 0;
    while start < trials {
        let end = (start + CHUNK).min(trials);
        let chunk = (start..end).into_par_iter().map(&f).collect::<Result<Vec<T>, CliError>>()?;
        for rec in &chunk {
            sink.append(rec)?;
        }
        all.extend(chunk);
        start = end;
    }
    Ok(all)
}

/// `estimate − 3·SE > bound`.
fn exceeds(bound: f64) -> impl FnOnce(f64, f64) -> bool {
    move |e, se| e - CUSHION * se > bound
}

/// `estimate + 3·SE ≥ bound`.
fn not_below(bound: f64) -> impl FnOnce(f64, f64) -> bool {
    move |e, se| e + CUSHION * se >= bound
}

fn count_row(name: &str, bad: u64, trials: u64) -> SummaryRow {
    SummaryRow { trials, ..SummaryRow::exact(name, bad as f64, Some(0.0), Verdict::from_bool(bad == 0)) }
}

#[derive(Serialize)]
struct SimRecord {
    trial: u64,
    seed_path: Vec<u64>,
    out: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_ns: Option<u64>,
}

#[derive(Serialize)]
struct NuggetRecord {
    trial: u64,
    seed_path: Vec<u64>,
    k: usize,
    k_star: usize,
    rho_star: f64,
    h: Vec<usize>,
    s1_len: usize,
    s0_len: usize,
    degenerate_k1: bool,
    recheck_holds: bool,
    structure_holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_ns: Option<u64>,
}

#[derive(Serialize)]
struct LapExpRecord {
    trial: u64,
    seed_path: Vec<u64>,
    h: usize,
    halt_round: usize,
    reward: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_ns: Option<u64>,
}

#[derive(Serialize)]
struct SequenceRecord {
    trial: u64,
    seed_path: Vec<u64>,
    sum_of_squares: f64,
    max_step: f64,
    last: f64,
}

#[derive(Serialize)]
struct LemmaRecord {
    trial: u64,
    seed_path: Vec<u64>,
    r: usize,
    eps: Option<f64>,
    checked: bool,
    identity_ok: bool,
    survival_ok: bool,
    pointwise_ok: bool,
    aggregate_ok: bool,
}

impl Run<'_> {
    fn protocol(&self) -> Result<std::sync::Arc<dyn Protocol>, CliError> {
        let spec = self.cfg.protocol.as_ref().ok_or_else(|| CliError::Config("this subcommand needs `protocol`".into()))?;
        Ok(build_protocol(spec)?)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        fs::write(self.out_dir.join(name), text)?;
        Ok(())
    }

    fn simulate(&self, sink: &mut Sink) -> Result<Vec<SummaryRow>, CliError> {
        let proto = self.protocol()?;
        let timing = self.cfg.record_timing;
        let recs = run_trials(self.trials, sink, |i| {
            let s = self.stream.child(i);
            let (res, wall_ns) = timed(timing, || {
                let coins = Coins::sample(proto.n(), proto.coin_len(), &mut s.child(0).rng());
                run_honest(proto.as_ref(), &coins)
            });
            Ok(SimRecord { trial: i, seed_path: s.path().to_vec(), out: res?.1, wall_ns })
        })?;
        let ones = Proportion::new(recs.iter().filter(|r| r.out).count() as u64, self.trials);
        let mut row = SummaryRow::proportion("honest_ones", ones, 0.0);
        let mut rows = Vec::new();
        if proto.coin_bits() <= MAX_ENUMERATION_BITS {
            let exact = exact_output_probability(proto.as_ref())?;
            row = row.judged(Some(exact), |e, se| (e - exact).abs() <= CUSHION * se.max(1.0 / self.trials as f64));
            rows.push(SummaryRow::exact("exact_ones", exact, None, Verdict::Info));
        }
        rows.insert(0, row);
        Ok(rows)
    }

    fn attack(&self, sink: &mut Sink) -> Result<Vec<SummaryRow>, CliError> {
        let proto = self.protocol()?;
        let acfg = AttackConfig { trials: self.trials, ..self.cfg.attack.clone() };
        let res = main_attack(proto.as_ref(), &acfg, &self.stream)?;
        for t in &res.records {
            sink.append(&TrialRecord::from(t))?;
        }
        let mut meta = serde_json::to_value(&res).map_err(|e| CliError::Io(e.to_string()))?;
        if let Some(obj) = meta.as_object_mut() {
            obj.remove("records");
        }
        self.write_json("attack.json", &meta)?;

        // The dispatched lemma lower-bounds the bias; fail only when the
        // estimate lies significantly below it.
        let bias = SummaryRow::proportion("bias", res.hits, 0.5);
        let bias = match res.bound {
            Some(b) if res.kind != AdversaryKind::Null => bias.judged(Some(b), not_below(b)),
            _ => bias,
        };
        let z = res.bias.value / res.bias.se;
        let z_row = SummaryRow {
            trials: res.trials,
            ..SummaryRow::exact("bias_standard_errors", z, None, Verdict::Info)
        };
        let shift = SummaryRow {
            estimator: "paired_shift".into(),
            estimate: Some(res.paired_shift.value),
            se: Some(res.paired_shift.se),
            ci: Some(res.paired_shift.ci),
            ci_method: CiMethod::Normal,
            trials: res.trials,
            bound: None,
            pass: Verdict::Info,
        };
        let aborts = Proportion::new(res.records.iter().filter(|t| t.abort_round.is_some()).count() as u64, res.trials);
        Ok(vec![
            bias,
            z_row,
            shift,
            SummaryRow::proportion("abort_rate", aborts, 0.0),
            count_row("coupling_mismatches", res.coupling.mismatches, res.coupling.trials),
        ])
    }

    fn nugget(&self, sink: &mut Sink) -> Result<Vec<SummaryRow>, CliError> {
        let proto = self.protocol()?;
        let timing = self.cfg.record_timing;
        let mut first = None;
        let mut recs = Vec::new();
        // Sequential: each finder already parallelises internally.
        for i in 0..self.trials {
            let s = self.stream.child(i);
            let (res, wall_ns) = timed(timing, || nugget_finder(proto.as_ref(), &self.cfg.attack.nugget, &s));
            let res = res?;
            let rep = verify_structure(&res);
            let rec = NuggetRecord {
                trial: i,
                seed_path: s.path().to_vec(),
                k: res.k,
                k_star: res.k_star,
                rho_star: res.rho_star,
                h: res.h.clone(),
                s1_len: res.s1.len(),
                s0_len: res.s0.len(),
                degenerate_k1: res.provenance.degenerate_k1,
                recheck_holds: res.recheck.holds,
                structure_holds: rep.all_hold(),
                wall_ns,
            };
            sink.append(&rec)?;
            recs.push(rec);
            if first.is_none() {
                first = Some((res, rep));
            }
        }
        if let Some((res, rep)) = &first {
            self.write_json("nugget.json", &serde_json::json!({ "nugget": res, "structure": rep }))?;
        }
        let broken = recs.iter().filter(|r| !r.structure_holds).count() as u64;
        let recheck = Proportion::new(recs.iter().filter(|r| r.recheck_holds).count() as u64, self.trials);
        let mut k_star = MeanAccumulator::default();
        for r in &recs {
            k_star.push(r.k_star as f64);
        }
        Ok(vec![
            count_row("structure_violations", broken, self.trials),
            SummaryRow::proportion("recheck_holds", recheck, 0.0),
            SummaryRow::mean("k_star", &k_star),
        ])
    }

    fn lapexp(&self, sink: &mut Sink) -> Result<Vec<SummaryRow>, CliError> {
        let l = &self.cfg.lapexp;
        let mut inst: SamplingInstance = adversarial_instance(l.r, l.tsh, l.sigma, l.gamma)?;
        if let Some(lambda) = l.lambda {
            inst = inst.with_lambda(lambda)?;
        }
        if let Some(p) = l.p {
            inst = inst.with_p(p)?;
        }
        let timing = self.cfg.record_timing;
        let runs = self.stream.child(0);
        let recs = run_trials(self.trials, sink, |i| {
            let s = runs.child(i);
            let (o, wall_ns) = timed(timing, || run_lapexp(&inst, &mut s.rng()));
            Ok(LapExpRecord { trial: i, seed_path: s.path().to_vec(), h: o.chosen_h, halt_round: o.halt_round, reward: o.reward, wall_ns })
        })?;
        let mut reward = MeanAccumulator::default();
        for r in &recs {
            reward.push(r.reward);
        }
        let baseline = l.tsh - l.sigma;
        let threshold = threshold_expected_reward(&inst, l.tsh, true);
        let bound = theorem_42_bound(&inst, &exact_halt_probs(&inst))?;
        let tails = self.sigma_tails(&inst)?;
        Ok(vec![
            SummaryRow::exact(
                "threshold_reward",
                threshold,
                Some(baseline),
                Verdict::from_bool((threshold - baseline).abs() <= 1e-12),
            ),
            SummaryRow::mean("lapexp_reward", &reward).judged(Some(bound.lower_bound), not_below(bound.lower_bound)),
            SummaryRow::mean("lapexp_reward_vs_threshold", &reward).judged(Some(baseline), exceeds(baseline)),
            SummaryRow::exact("lapexp_exact_reward", exact_expected_reward(&inst), None, Verdict::Info),
            count_row("sigma_tail_violations", tails.0, tails.1),
            SummaryRow { trials: tails.1, ..SummaryRow::exact("sigma_tail_skipped", tails.2 as f64, None, Verdict::Info) },
        ])
    }

    /// Checks the similarity-gap tail sums on random distributions that meet
    /// the tail hypothesis by construction. Returns (violations, checked, skipped).
    fn sigma_tails(&self, inst: &SamplingInstance) -> Result<(u64, u64, u64), CliError> {
        let (lambda, p) = (inst.lambda(), inst.p());
        let theta = (1.0 - p) * lambda / p;
        let stream = self.stream.child(1);
        let reports = (0..self.cfg.lapexp.tail_checks)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.child(i).rng();
                let alpha = rng.random_range(1e-3..=(theta / 2.0).min(1.0));
                let beta: f64 = rng.random_range(0.0..=1.0);
                let atoms = random_tail_atoms(alpha, beta, &mut rng);
                check_sigma_tail_bounds(&atoms, alpha, beta, lambda, p)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut out = (0, 0, 0);
        for rep in &reports {
            if rep.precondition_ok {
                out.1 += 1;
                out.0 += u64::from(rep.outlier_ok != Some(true) || rep.exsquared_ok != Some(true));
            } else {
                out.2 += 1;
            }
        }
        Ok(out)
    }

    fn martingale(&self, sink: &mut Sink) -> Result<Vec<SummaryRow>, CliError> {
        let m = &self.cfg.martingale;
        let count = usize::try_from(self.trials).map_err(|_| CliError::Config("too many trials".into()))?;
        let gen = self.stream.child(0);
        let mut ens: Ensemble = match m.generator {
            Generator::MajorityDoob => generators::majority_doob(m.r, count, &gen)?,
            Generator::Drifting => generators::drifting(m.r, m.drift, m.noise, 0.5, count, &gen)?,
            Generator::Constant => generators::constant(m.r, 0.5, count),
        };
        if m.corrupt_fraction > 0.0 {
            ens = generators::inject_smooth(ens, m.corrupt_fraction, &self.stream.child(1))?;
        }
        let seqs = ens.sequences();
        run_trials(self.trials, sink, |i| {
            let s = &seqs[i as usize];
            let max_step = diffs(s).y().iter().fold(0.0f64, |a, y| a.max(y.abs()));
            Ok(SequenceRecord {
                trial: i,
                seed_path: gen.child(i).path().to_vec(),
                sum_of_squares: sum_of_squares(s),
                max_step,
                last: s.last(),
            })
        })?;
        let gap = gap_stats(&ens);
        let ex = check_ex_machina(&ens, m.delta);
        let u = check_coupled_u(&ens, m.delta);
        let cls = classify(&ens, &Grid::game_value(m.r), Flavor::SosWeak, ClassifyOptions::new(m.delta));
        let paired = |name: &str, est: f64, se: f64, bound: f64, ok: bool| SummaryRow {
            estimator: name.into(),
            estimate: Some(est),
            se: Some(se),
            ci: Some((est - cfl_core::stats::Z95 * se, est + cfl_core::stats::Z95 * se)),
            ci_method: CiMethod::Normal,
            trials: self.trials,
            bound: Some(bound),
            pass: Verdict::from_bool(ok),
        };
        Ok(vec![
            SummaryRow::proportion("p_sos", gap.sos, 0.0).judged(Some(GAP_PROBABILITY), exceeds(GAP_PROBABILITY)),
            SummaryRow::proportion("p_jump", gap.jump, 0.0).judged(Some(GAP_PROBABILITY), exceeds(GAP_PROBABILITY)),
            SummaryRow { trials: self.trials, ..SummaryRow::exact("endpoint_violators", gap.endpoint_violators as f64, None, Verdict::Info) },
            paired("ex_machina_gap", ex.gap, ex.gap_se, ex.slack, ex.holds),
            paired("ex_machina_lhs", ex.lhs, ex.lhs_se, ex.rhs, (ex.lhs - ex.rhs).abs() <= ex.slack + CUSHION * ex.gap_se),
            paired("coupled_u_upper", u.e_ur2 - 0.25, u.e_ur2_se, u.upper_bound, u.upper_ok),
            paired("coupled_u_lower", u.e_ur2, u.e_ur2_se + u.p_sos_se, u.lower_bound, u.lower_ok),
            SummaryRow {
                trials: self.trials,
                ..SummaryRow::exact("delta_hat", cls.delta_hat, Some(m.delta), Verdict::Info)
            },
        ])
    }

    fn lemmas(&self, sink: &mut Sink) -> Result<Vec<SummaryRow>, CliError> {
        let lc = &self.cfg.lemmas;
        let pairs = self.stream.child(0);
        let recs = run_trials(self.trials, sink, |i| {
            let s = pairs.child(i);
            let mut rng = s.rng();
            let r = rng.random_range(1..=lc.max_r);
            let eps = rng.random_range(0.0..=lc.max_eps);
            let mut p: Vec<f64> = (0..r).map(|_| rng.random_range(0.0..=1.0)).collect();
            p[r - 1] = 1.0;
            let mut pp: Vec<f64> = p.iter().map(|&x| perturb_within(x, eps, &mut rng)).collect();
            pp[r - 1] = 1.0;
            let rep = verify_bernoulli_lemmas(&BernoulliSeq::new(p)?, &BernoulliSeq::new(pp)?)?;
            Ok(LemmaRecord {
                trial: i,
                seed_path: s.path().to_vec(),
                r,
                eps: rep.eps,
                checked: rep.status == LemmaStatus::Checked,
                identity_ok: rep.identity_ok,
                survival_ok: rep.survival_ok,
                pointwise_ok: rep.pointwise_ok,
                aggregate_ok: rep.aggregate_ok,
            })
        })?;
        let identity_bad = recs.iter().filter(|r| !r.identity_ok).count() as u64;
        let bound_bad = recs.iter().filter(|r| !(r.survival_ok && r.pointwise_ok && r.aggregate_ok)).count() as u64;
        let skipped = recs.iter().filter(|r| !r.checked).count() as u64;
        let mut rows = vec![
            count_row("bernoulli_identity_violations", identity_bad, self.trials),
            count_row("bernoulli_bound_violations", bound_bad, self.trials),
            SummaryRow { trials: self.trials, ..SummaryRow::exact("bernoulli_skipped", skipped as f64, None, Verdict::Info) },
        ];
        rows.extend(self.laplace_rows()?);
        rows.push(self.laplace_ratio_row()?);
        rows.push(self.hoeffding_row()?);
        Ok(rows)
    }

    /// Empirical `Pr[Lap(λ) ≥ λ|x|]` against `½·e^{−|x|}` and
    /// `Pr[Lap(λ) ≥ −λ|x|]` against `1 − ½·e^{−|x|}`.
    fn laplace_rows(&self) -> Result<Vec<SummaryRow>, CliError> {
        let lc = &self.cfg.lemmas;
        if lc.laplace_samples == 0 {
            return Ok(Vec::new());
        }
        let thresholds: Vec<f64> = lc.laplace_points.iter().flat_map(|&x| [x.abs(), -x.abs()]).collect();
        let mut rows = Vec::new();
        for (j, &lambda) in lc.laplace_lambdas.iter().enumerate() {
            let lap = Laplace::new(lambda)?;
            let base = self.stream.child(1).child(j as u64);
            let shards = lc.laplace_samples.div_ceil(CHUNK);
            let counts = (0..shards)
                .into_par_iter()
                .map(|c| {
                    let mut rng = base.child(c).rng();
                    let len = CHUNK.min(lc.laplace_samples - c * CHUNK);
                    let mut hits = vec![0u64; thresholds.len()];
                    for _ in 0..len {
                        let v = lap.sample(&mut rng);
                        for (h, &t) in hits.iter_mut().zip(&thresholds) {
                            *h += u64::from(v >= lambda * t);
                        }
                    }
                    hits
                })
                .reduce(|| vec![0; thresholds.len()], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
            for (&x, hits) in lc.laplace_points.iter().zip(counts.chunks(2)) {
                let upper = 0.5 * (-x.abs()).exp();
                let tol = lc.laplace_tolerance;
                for (name, closed, h) in [("laplace_tail", upper, hits[0]), ("laplace_tail_mirror", 1.0 - upper, hits[1])] {
                    rows.push(
                        SummaryRow::proportion(
                            &format!("{name}[lambda={lambda};x={x}]"),
                            Proportion::new(h, lc.laplace_samples),
                            0.0,
                        )
                        .judged(Some(closed), move |e, _| (e - closed).abs() <= tol),
                    );
                }
            }
        }
        Ok(rows)
    }

    /// Ratio of noisy-threshold probabilities on a grid of shifts `|γ′ − γ| ≤ 1`.
    fn laplace_ratio_row(&self) -> Result<SummaryRow, CliError> {
        let mut bad = 0;
        let mut checked = 0;
        for &lambda in &self.cfg.lemmas.laplace_lambdas {
            let lap = Laplace::new(lambda)?;
            for a in -20..=20 {
                for d in 0..=10 {
                    let gamma = f64::from(a) / 4.0;
                    let rep = check_laplace_ratio(gamma, gamma + f64::from(d) / 10.0, lap);
                    checked += 1;
                    bad += u64::from(rep.ratio_ok != Some(true));
                }
            }
        }
        Ok(count_row("laplace_ratio_violations", bad, checked))
    }

    /// Half-sample deviation frequency on fair bits against `2·e^{−ε²}`.
    fn hoeffding_row(&self) -> Result<SummaryRow, CliError> {
        const N: usize = 1000;
        const EPS: f64 = 2.0;
        let mut rng = self.stream.child(2).rng();
        let values: Vec<f64> = (0..N).map(|_| f64::from(u8::from(rng.random::<bool>()))).collect();
        let freq = halfsample_tail_frequency(&values, EPS, self.cfg.lemmas.hoeffding_subsamples, &mut rng)?;
        let bound = hoeffding_halfsample_bound::<f64>(N, EPS)?.clamped;
        Ok(SummaryRow::proportion("hoeffding_halfsample", freq, 0.0).judged(Some(bound), move |e, se| e - CUSHION * se <= bound))
    }
}

/// A value `p′` whose four ratios to `p` stay within `1 ± ε`.
fn perturb_within<R: Rng>(p: f64, eps: f64, rng: &mut R) -> f64 {
    let lo = (p / (1.0 + eps)).max(1.0 - (1.0 - p) * (1.0 + eps)).max(0.0);
    let hi = (p * (1.0 + eps)).min(1.0 - (1.0 - p) / (1.0 + eps)).min(1.0);
    if lo < hi { rng.random_range(lo..=hi) } else { p }
}

/// Atoms `(σ, Pr[σ])` on `[0,2]` with `Pr[σ ≥ v] ≤ βα/v` for every `v ≥ α`.
fn random_tail_atoms<R: Rng>(alpha: f64, beta: f64, rng: &mut R) -> Vec<(f64, f64)> {
    let m = rng.random_range(1..=8);
    let mut values: Vec<f64> = (0..m).map(|_| rng.random_range(alpha..=2.0f64.max(alpha))).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let mut atoms = Vec::with_capacity(m + 1);
    let mut mass = 0.0;
    for v in values {
        let room = (beta * alpha / v - mass).max(0.0);
        let q = room * rng.random_range(0.0..=1.0);
        mass += q;
        atoms.push((v, q));
    }
    atoms.push((rng.random_range(0.0..alpha), 1.0 - mass));
    atoms
}
