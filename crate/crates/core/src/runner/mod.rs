//! Seeded multi-trial experiments.
//!
//! Every trial samples its own instance and noise from streams derived from
//! `(master_seed, trial)`, so all algorithms run with the same trial index
//! face the same arms, parameter and noise sequence.

mod config;
mod io;
mod stats;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

pub use config::{Algorithm, ExperimentConfig, NoiseConfig, NoiseKind};
pub use io::{
    read_compare, read_rounds, read_summary, write_compare, write_rounds, write_rounds_to, write_summary,
    write_summary_to, CompareRow, RoundTrace, SummaryRow, COMPARE_HEADER, ROUNDS_HEADER, SUMMARY_HEADER,
};
pub use stats::{linear_trend, mean_std, LinearTrend};

use crate::baselines::{AhrUcb, Oful};
use crate::env::{sample_instance, TrialStreams};
use crate::error::{Error, Result};
use crate::estimator::{HvtUcb, SigmaBranch};
use crate::policy::BanditPolicy;

const SCHEDULE_BOUND: f64 = 0.125 + 1e-10;

/// Per-trial checks of the confidence set and schedule, computed outside
/// the timed region.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialDiagnostics {
    /// Rounds with `‖θ̂_t - θ*‖_{V_{t-1}} > β_{t-1}`.
    pub coverage_violations: u64,
    pub first_coverage_violation: Option<u64>,
    /// Rounds where the confidence term set `σ_t`.
    pub confidence_branch_rounds: u64,
    /// Of those, rounds with `α w_t² > 1/8`.
    pub schedule_violations: u64,
    pub max_alpha_w_sq: f64,
    /// Covered rounds where `|X_tᵀ(θ̂_t - θ*)/σ_t| > τ_t/2`.
    pub kink_violations: u64,
    pub solver_warnings: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutput {
    pub trial: u64,
    pub rounds: Vec<RoundTrace>,
    pub diagnostics: TrialDiagnostics,
}

impl TrialOutput {
    pub fn final_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_regret)
    }
}

enum Learner {
    Hvt(HvtUcb),
    Ahr(AhrUcb),
    Oful(Oful),
}

impl Learner {
    fn build(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(match cfg.algo {
            Algorithm::HvtUcb => {
                Learner::Hvt(HvtUcb::new(cfg.huber_params()?)?.with_inverse_refresh(cfg.inverse_refresh_every))
            }
            Algorithm::HeavyOfulGd => Learner::Ahr(AhrUcb::new(cfg.huber_params()?)?),
            Algorithm::Oful => Learner::Oful(Oful::new(cfg.oful_config())?),
        })
    }
}

/// Run `config.horizon` rounds of `config.algo` for one trial.
///
/// Per-round time covers arm selection and the learner update; drawing the
/// reward and all bookkeeping are excluded.
pub fn run_trial(config: &ExperimentConfig, trial: u64) -> Result<TrialOutput> {
    config.validate()?;
    match Learner::build(config)? {
        Learner::Hvt(p) => drive(p, config, trial),
        Learner::Ahr(p) => drive(p, config, trial),
        Learner::Oful(p) => drive(p, config, trial),
    }
}

trait SolverWarnings {
    fn solver_warnings(&self) -> u64 {
        0
    }
}
impl SolverWarnings for HvtUcb {}
impl SolverWarnings for Oful {}
impl SolverWarnings for AhrUcb {
    fn solver_warnings(&self) -> u64 {
        self.budget_exhausted() as u64
    }
}

fn drive<P: BanditPolicy + SolverWarnings>(mut policy: P, cfg: &ExperimentConfig, trial: u64) -> Result<TrialOutput> {
    let mut streams = TrialStreams::new(cfg.master_seed, trial);
    let noise = cfg.noise_spec()?;
    let sampler = noise.sampler();
    let mut instance = sample_instance(cfg.d, cfg.n, cfg.s, cfg.l, noise, &mut streams.instance)?;
    let alpha = cfg.alpha;

    let mut rounds = Vec::with_capacity(cfg.horizon as usize);
    let mut diag = TrialDiagnostics::default();
    let mut cum_regret = 0.0;

    for t in 1..=cfg.horizon {
        let wrap = |e: Error| Error::Trial { trial, round: t, source: Box::new(e) };
        if cfg.resample_arms {
            instance = instance.redraw_arms(&mut streams.arms);
        }

        let err = policy.theta_hat() - instance.theta_star();
        let covered = {
            let (v, beta) = policy.confidence();
            v.norm(&err).map_err(wrap)? <= beta
        };
        if !covered {
            diag.coverage_violations += 1;
            diag.first_coverage_violation.get_or_insert(t);
        }

        let start = Instant::now();
        let idx = policy.select_arm(instance.arms()).map_err(wrap)?;
        let select_ns = start.elapsed().as_nanos() as u64;

        let (reward, nu) = instance.play(idx, &sampler, &mut streams.noise).map_err(wrap)?;
        let x = &instance.arms()[idx];

        let start = Instant::now();
        let sched = policy.observe(x, reward, nu).map_err(wrap)?;
        let update_ns = start.elapsed().as_nanos() as u64;

        if let Some(s) = sched {
            let aw2 = s.alpha_w_sq(alpha);
            if s.branch == SigmaBranch::Confidence {
                diag.confidence_branch_rounds += 1;
                diag.max_alpha_w_sq = diag.max_alpha_w_sq.max(aw2);
                if aw2 > SCHEDULE_BOUND {
                    diag.schedule_violations += 1;
                }
            }
            if covered && (x.dot(&err) / s.sigma).abs() > s.tau / 2.0 + 1e-10 {
                diag.kink_violations += 1;
            }
        }

        let inst_regret = instance.regret_increment(idx).map_err(wrap)?;
        cum_regret += inst_regret;
        rounds.push(RoundTrace {
            trial,
            t,
            arm_index: idx as u64,
            reward,
            inst_regret,
            cum_regret,
            round_time_ns: select_ns + update_ns,
        });
    }
    diag.solver_warnings = policy.solver_warnings();
    Ok(TrialOutput { trial, rounds, diagnostics: diag })
}

/// `k·T/100` rounded up, for `k = 1..=100`, deduplicated.
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = (1..=100u64).map(|k| (k * horizon).div_ceil(100)).filter(|&t| t > 0).collect();
    out.dedup();
    out
}

/// Mean and population standard deviation across trials at each checkpoint.
/// Trials are aggregated in trial-index order.
pub fn summarize(trials: &[TrialOutput], horizon: u64) -> Vec<SummaryRow> {
    let mut sorted: Vec<&TrialOutput> = trials.iter().collect();
    sorted.sort_by_key(|t| t.trial);
    let cum_time: Vec<Vec<f64>> = sorted
        .iter()
        .map(|tr| {
            let mut acc = 0u64;
            tr.rounds
                .iter()
                .map(|r| {
                    acc += r.round_time_ns;
                    acc as f64
                })
                .collect()
        })
        .collect();
    checkpoints(horizon)
        .into_iter()
        .filter(|&t| sorted.iter().all(|tr| tr.rounds.len() as u64 >= t))
        .map(|t| {
            let i = (t - 1) as usize;
            let regrets: Vec<f64> = sorted.iter().map(|tr| tr.rounds[i].cum_regret).collect();
            let times: Vec<f64> = cum_time.iter().map(|c| c[i]).collect();
            let (mean_cum_regret, std_cum_regret) = mean_std(&regrets);
            let (mean_cum_time_ns, std_cum_time_ns) = mean_std(&times);
            SummaryRow { checkpoint_t: t, mean_cum_regret, std_cum_regret, mean_cum_time_ns, std_cum_time_ns }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub algo: Algorithm,
    pub rows: Vec<SummaryRow>,
    pub trials: Vec<TrialOutput>,
    pub rounds_path: PathBuf,
    pub summary_path: PathBuf,
}

impl ExperimentSummary {
    pub fn mean_final_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.mean_cum_regret)
    }

    pub fn mean_total_time_ns(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.mean_cum_time_ns)
    }

    pub fn diagnostics(&self) -> impl Iterator<Item = &TrialDiagnostics> {
        self.trials.iter().map(|t| &t.diagnostics)
    }
}

pub fn rounds_path(out_dir: &Path, algo: Algorithm) -> PathBuf {
    out_dir.join(format!("{algo}_rounds.csv"))
}

pub fn summary_path(out_dir: &Path, algo: Algorithm) -> PathBuf {
    out_dir.join(format!("{algo}_summary.csv"))
}

/// Run every trial, then write `<algo>_rounds.csv` and `<algo>_summary.csv`
/// under `out_dir`. Both files are created before any trial starts so an
/// unwritable directory fails fast.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let rounds_path = rounds_path(&config.out_dir, config.algo);
    let summary_path = summary_path(&config.out_dir, config.algo);
    let rounds_file = io::create(&rounds_path)?;
    let summary_file = io::create(&summary_path)?;

    let trials: Vec<TrialOutput> = if config.sequential {
        (0..config.trials).map(|k| run_trial(config, k)).collect::<Result<_>>()?
    } else {
        (0..config.trials).into_par_iter().map(|k| run_trial(config, k)).collect::<Result<_>>()?
    };

    let all_rounds: Vec<RoundTrace> = trials.iter().flat_map(|t| t.rounds.iter().cloned()).collect();
    write_rounds_to(rounds_file, &all_rounds)?;
    let rows = summarize(&trials, config.horizon);
    write_summary_to(summary_file, &rows)?;

    Ok(ExperimentSummary { algo: config.algo, rows, trials, rounds_path, summary_path })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuntimeProfile {
    pub total_time_ns: f64,
    pub mean_round_time_ns: f64,
    /// OLS slope of per-round time against `t`, in ns per round.
    pub trend: LinearTrend,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RuntimeComparison {
    pub a: RuntimeProfile,
    pub b: RuntimeProfile,
    /// `total(b) / total(a)`: how many times faster `a` is.
    pub ratio_b_over_a: f64,
}

impl RuntimeComparison {
    pub fn to_rows(&self) -> Vec<CompareRow> {
        [("a", &self.a), ("b", &self.b)]
            .into_iter()
            .map(|(name, p)| CompareRow {
                series: name.to_string(),
                total_time_ns: p.total_time_ns,
                mean_round_time_ns: p.mean_round_time_ns,
                round_time_slope: p.trend.slope,
                slope_p_value: p.trend.p_value,
                time_ratio_b_over_a: self.ratio_b_over_a,
            })
            .collect()
    }
}

/// Per-round times recovered from cumulative checkpoint times, placed at
/// each interval's midpoint.
fn runtime_profile(rows: &[SummaryRow]) -> Result<RuntimeProfile> {
    let mut xs = Vec::with_capacity(rows.len());
    let mut ys = Vec::with_capacity(rows.len());
    let (mut prev_t, mut prev_c) = (0u64, 0.0);
    for r in rows {
        let dt = r.checkpoint_t - prev_t;
        xs.push(prev_t as f64 + 0.5 * (dt as f64 + 1.0));
        ys.push((r.mean_cum_time_ns - prev_c) / dt as f64);
        prev_t = r.checkpoint_t;
        prev_c = r.mean_cum_time_ns;
    }
    let last = rows.last().ok_or_else(|| Error::invalid("empty summary"))?;
    Ok(RuntimeProfile {
        total_time_ns: last.mean_cum_time_ns,
        mean_round_time_ns: last.mean_cum_time_ns / last.checkpoint_t as f64,
        trend: linear_trend(&xs, &ys)?,
    })
}

pub fn compare_runtimes(a: &[SummaryRow], b: &[SummaryRow]) -> Result<RuntimeComparison> {
    let grid = |rows: &[SummaryRow]| rows.iter().map(|r| r.checkpoint_t).collect::<Vec<_>>();
    let (ga, gb) = (grid(a), grid(b));
    if ga.last() != gb.last() {
        return Err(Error::invalid(format!("summaries cover different horizons ({:?} vs {:?})", ga.last(), gb.last())));
    }
    if ga != gb {
        return Err(Error::invalid("summaries use different checkpoint grids"));
    }
    let pa = runtime_profile(a)?;
    let pb = runtime_profile(b)?;
    Ok(RuntimeComparison { a: pa, b: pb, ratio_b_over_a: pb.total_time_ns / pa.total_time_ns })
}
