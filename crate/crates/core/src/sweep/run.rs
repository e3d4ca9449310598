use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::codes::{build_code, simulation_cutoff, Code, CodeFamily, CodeParams, CodeSeeds};
use crate::error::{Error, Result};
use crate::metrics::{channel_fidelity, compose_logical_channel};
use crate::noise::{loss_dephasing_channel, ChannelCache, NoisePoint};
use crate::recovery::{build_recovery_problem_with, solve_optimal_recovery, SUPPORT_THRESHOLD};
use crate::sdp::{SdpSettings, SolverStatus};

use super::cache::{cache_key, ResultCache};
use super::config::SweepConfig;
use super::record::{floored_infidelity, fmt_f64, write_records, SweepRecord, INFIDELITY_FLOOR};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Evaluate one code at one noise point with the default solver settings.
pub fn evaluate_point(code: &Code, noise: NoisePoint) -> Result<SweepRecord> {
    evaluate_point_with(code, noise, &SdpSettings::default(), None)
}

/// Optimal-recovery fidelity of `code` under `noise`. Solver problems are
/// reported through `solver_status`; only invalid inputs return an error.
pub fn evaluate_point_with(
    code: &Code,
    noise: NoisePoint,
    settings: &SdpSettings,
    channels: Option<&ChannelCache>,
) -> Result<SweepRecord> {
    noise.validate()?;
    let start = Instant::now();
    let dim = code.dim();
    let outcome = (|| -> Result<(f64, SolverStatus)> {
        let channel = match channels {
            Some(cache) => cache.get(noise, dim)?,
            None => Arc::new(loss_dephasing_channel(noise, dim)?),
        };
        let problem = build_recovery_problem_with(code, &channel, *settings)?;
        let sol = solve_optimal_recovery(&problem)?;
        let full = problem.lift(&sol.recovery_choi)?;
        let f = channel_fidelity(&compose_logical_channel(code, &channel, &full)?)?;
        Ok((f, sol.solver_status))
    })();
    let (fidelity, status) = outcome.unwrap_or((f64::NAN, SolverStatus::Failed));
    let seeds = code.seeds();
    Ok(SweepRecord {
        family: code.family(),
        n: code.rotation_order(),
        param: code.params().descriptor(),
        seed0: seeds.map(|s| s.zero_stream),
        seed1: seeds.map(|s| s.one_stream),
        kappa_l_t: noise.kappa_l_t,
        kappa_phi_t: noise.kappa_phi_t,
        cutoff_d: dim,
        fidelity,
        infidelity: floored_infidelity(fidelity),
        nbar_code: code.avg_photon(),
        solver_status: status,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// Stream id for one random trial; independent of the noise point, so every
/// point sees the same sample of codes.
pub fn trial_stream(master: u64, family: CodeFamily, n: usize, k: usize, trial: usize, word: &str) -> u64 {
    let text = format!("rotcode-trial|{master}|{family}|{n}|{k}|{trial}|{word}");
    let digest = Sha256::digest(text.as_bytes());
    u64::from_be_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

pub fn trial_seeds(master: u64, family: CodeFamily, n: usize, k: usize, trial: usize) -> CodeSeeds {
    let zero_stream = trial_stream(master, family, n, k, trial, "zero");
    let one_stream = match family {
        CodeFamily::Rand2 => trial_stream(master, family, n, k, trial, "one"),
        _ => zero_stream,
    };
    CodeSeeds { master, zero_stream, one_stream }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Task {
    pub point: usize,
    pub noise: NoisePoint,
    pub family: CodeFamily,
    pub n: usize,
    pub params: CodeParams,
    /// Position in the family's parameter list (parameter-major, then trial).
    pub index: usize,
    pub seeds: Option<CodeSeeds>,
}

impl Task {
    pub fn code(&self, extra_levels: usize) -> Result<Code> {
        let code = build_code(self.family, self.n, self.params, self.seeds)?;
        if extra_levels == 0 {
            Ok(code)
        } else {
            code.embedded(code.dim() + extra_levels)
        }
    }

    pub fn dim(&self, extra_levels: usize) -> Result<usize> {
        Ok(simulation_cutoff(self.family, self.n, self.params)? + extra_levels)
    }
}

/// Every `(family, N, params, seeds)` the configuration asks for, in table order.
pub fn family_members(config: &SweepConfig, family: CodeFamily, n: usize) -> Vec<(CodeParams, Option<CodeSeeds>)> {
    match family {
        CodeFamily::Triv => vec![(CodeParams::None, None)],
        CodeFamily::Bin => config.bin_k.iter().map(|&k| (CodeParams::K(k), None)).collect(),
        CodeFamily::Cat => config.cat_alpha.iter().map(|&a| (CodeParams::Alpha(a), None)).collect(),
        CodeFamily::Rand1 | CodeFamily::Rand2 => config
            .rand_k
            .iter()
            .flat_map(|&k| {
                (0..config.trials)
                    .map(move |t| (CodeParams::K(k), Some(trial_seeds(config.master_seed, family, n, k, t))))
            })
            .collect(),
    }
}

fn orders_for(config: &SweepConfig, family: CodeFamily) -> Vec<usize> {
    if family == CodeFamily::Triv {
        vec![1]
    } else {
        config.n_set.clone()
    }
}

pub fn build_tasks(config: &SweepConfig) -> Result<Vec<Task>> {
    config.validate()?;
    let points = config.grid.points()?;
    let mut families = config.families.clone();
    families.sort();
    let mut orders = config.n_set.clone();
    orders.sort_unstable();
    orders.dedup();
    let cfg = SweepConfig { n_set: orders, ..config.clone() };
    let mut tasks = Vec::new();
    for (point, &noise) in points.iter().enumerate() {
        for &family in &families {
            for n in orders_for(&cfg, family) {
                for (index, (params, seeds)) in family_members(&cfg, family, n).into_iter().enumerate() {
                    tasks.push(Task { point, noise, family, n, params, index, seeds });
                }
            }
        }
    }
    Ok(tasks)
}

#[derive(Clone, Debug, Serialize)]
pub struct Plan {
    pub noise_points: usize,
    pub tasks: usize,
    pub max_cutoff: usize,
    pub noise_axis: Vec<f64>,
}

pub fn plan(config: &SweepConfig) -> Result<Plan> {
    let tasks = build_tasks(config)?;
    let mut max_cutoff = 0;
    for t in &tasks {
        max_cutoff = max_cutoff.max(t.dim(config.extra_levels)?);
    }
    let axis = match config.grid.mode {
        super::config::GridMode::Points { .. } => Vec::new(),
        _ => config.grid.axis()?,
    };
    Ok(Plan { noise_points: config.grid.points()?.len(), tasks: tasks.len(), max_cutoff, noise_axis: axis })
}

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub jobs: usize,
    pub cache_path: Option<PathBuf>,
    pub verbose: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { jobs: 1, cache_path: None, verbose: false }
    }
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub tasks: Vec<Task>,
    pub records: Vec<SweepRecord>,
    pub cache_hits: usize,
    pub evaluated: usize,
}

/// Evaluate every task. Noise points are processed one after another so the
/// per-point channel cache stays small; tasks within a point run on the pool.
pub fn run_sweep(config: &SweepConfig, options: &RunOptions) -> Result<SweepResult> {
    let tasks = build_tasks(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;
    let cache = match &options.cache_path {
        Some(p) => ResultCache::open(p)?,
        None => ResultCache::in_memory(),
    };
    if options.verbose && cache.skipped_lines() > 0 {
        eprintln!("cache: skipped {} malformed lines", cache.skipped_lines());
    }
    let n_points = tasks.last().map_or(0, |t| t.point + 1);
    let mut records: Vec<SweepRecord> = Vec::with_capacity(tasks.len());
    let mut cache_hits = 0;
    let mut evaluated = 0;
    let mut start = 0;
    for point in 0..n_points {
        let end = tasks[start..].iter().position(|t| t.point != point).map_or(tasks.len(), |k| start + k);
        let chunk = &tasks[start..end];
        start = end;
        let channels = ChannelCache::new();
        let results: Vec<Result<(SweepRecord, bool)>> = pool.install(|| {
            chunk
                .par_iter()
                .map(|task| {
                    let dim = task.dim(config.extra_levels)?;
                    let key = cache_key(
                        task.family,
                        task.n,
                        &task.params.descriptor(),
                        task.seeds,
                        task.noise,
                        dim,
                        &config.solver,
                    );
                    if let Some(hit) = cache.get(&key) {
                        return Ok((hit.clone(), true));
                    }
                    let code = task.code(config.extra_levels)?;
                    let rec = evaluate_point_with(&code, task.noise, &config.solver, Some(&channels))?;
                    if !rec.is_failed() {
                        cache.append(&key, &rec)?;
                    }
                    Ok((rec, false))
                })
                .collect()
        });
        let mut hits_here = 0;
        for r in results {
            let (rec, hit) = r?;
            if hit {
                hits_here += 1;
            } else {
                evaluated += 1;
            }
            records.push(rec);
        }
        cache_hits += hits_here;
        if options.verbose {
            let p = chunk.first().map(|t| t.noise).unwrap_or(NoisePoint::noiseless());
            eprintln!(
                "point {}/{} (kl={:.3e}, kphi={:.3e}): {} tasks, {} cache hits",
                point + 1,
                n_points,
                p.kappa_l_t,
                p.kappa_phi_t,
                chunk.len(),
                hits_here
            );
        }
    }
    if options.verbose {
        eprintln!("cache hits: {cache_hits} of {} tasks; evaluated {evaluated}", tasks.len());
    }
    Ok(SweepResult { tasks, records, cache_hits, evaluated })
}

/// Ordering for "better record": usable before failed, then lower floored
/// infidelity, then lower photon number. Equal records keep input order.
fn rank(a: &SweepRecord, b: &SweepRecord) -> Ordering {
    a.is_failed()
        .cmp(&b.is_failed())
        .then_with(|| a.infidelity.total_cmp(&b.infidelity))
        .then_with(|| a.nbar_code.total_cmp(&b.nbar_code))
}

fn rank_families(a: &SweepRecord, b: &SweepRecord) -> Ordering {
    a.is_failed().cmp(&b.is_failed()).then_with(|| a.infidelity.total_cmp(&b.infidelity))
}

/// Best record of a candidate list given in parameter order.
pub fn select_best<'a, I: IntoIterator<Item = &'a SweepRecord>>(records: I) -> Option<&'a SweepRecord> {
    records.into_iter().fold(None, |best: Option<&SweepRecord>, r| match best {
        Some(b) if rank(r, b) != Ordering::Less => Some(b),
        _ => Some(r),
    })
}

/// Best member of one family at fixed `N` and noise point.
pub fn optimize_family(family: CodeFamily, n: usize, noise: NoisePoint, config: &SweepConfig) -> Result<SweepRecord> {
    let n = if family == CodeFamily::Triv { 1 } else { n };
    let members = family_members(config, family, n);
    let channels = ChannelCache::new();
    let records: Vec<SweepRecord> = members
        .par_iter()
        .map(|(params, seeds)| {
            let task = Task { point: 0, noise, family, n, params: *params, index: 0, seeds: *seeds };
            evaluate_point_with(&task.code(config.extra_levels)?, noise, &config.solver, Some(&channels))
        })
        .collect::<Result<_>>()?;
    select_best(&records).cloned().ok_or_else(|| Error::InvalidConfig(format!("family {family} has no members")))
}

/// `(F_a - F_b) / max(F_a, F_b)`.
pub fn relative_difference(fa: f64, fb: f64) -> f64 {
    let m = fa.max(fb);
    if m > 0.0 {
        (fa - fb) / m
    } else {
        0.0
    }
}

#[derive(Clone, Debug)]
pub struct PointSummary {
    pub noise: NoisePoint,
    /// Best record per `(family, N)`.
    pub family_order_best: BTreeMap<(CodeFamily, usize), SweepRecord>,
    /// Best record per family over all `N`.
    pub family_best: BTreeMap<CodeFamily, SweepRecord>,
    pub winner: SweepRecord,
    /// `None` when the trivial code was not part of the sweep.
    pub trivial_wins: Option<bool>,
}

impl PointSummary {
    pub fn pairwise(&self, a: CodeFamily, b: CodeFamily) -> Option<f64> {
        let fa = self.family_best.get(&a)?.fidelity;
        let fb = self.family_best.get(&b)?.fidelity;
        Some(relative_difference(fa, fb))
    }

    /// The winner's floored fidelity is at least every family's.
    pub fn dominance_holds(&self) -> bool {
        self.family_best.values().filter(|r| !r.is_failed()).all(|r| self.winner.infidelity <= r.infidelity)
    }
}

#[derive(Clone, Debug)]
pub struct PhaseDiagram {
    pub points: Vec<PointSummary>,
}

pub fn summarize(result: &SweepResult) -> Result<PhaseDiagram> {
    let mut points: Vec<PointSummary> = Vec::new();
    let mut start = 0;
    let tasks = &result.tasks;
    while start < tasks.len() {
        let point = tasks[start].point;
        let end = tasks[start..].iter().position(|t| t.point != point).map_or(tasks.len(), |k| start + k);
        let recs = &result.records[start..end];
        let mut groups: BTreeMap<(CodeFamily, usize), Vec<&SweepRecord>> = BTreeMap::new();
        for r in recs {
            groups.entry((r.family, r.n)).or_default().push(r);
        }
        let family_order_best: BTreeMap<(CodeFamily, usize), SweepRecord> = groups
            .iter()
            .map(|(k, v)| (*k, select_best(v.iter().copied()).expect("group is non-empty").clone()))
            .collect();
        let mut family_best: BTreeMap<CodeFamily, SweepRecord> = BTreeMap::new();
        for ((fam, _), rec) in &family_order_best {
            match family_best.get(fam) {
                Some(cur) if rank(rec, cur) != Ordering::Less => {}
                _ => {
                    family_best.insert(*fam, rec.clone());
                }
            }
        }
        // across families, equal infidelities go to the simpler family
        let winner = family_best
            .values()
            .fold(None, |best: Option<&SweepRecord>, r| match best {
                Some(b) if rank_families(r, b) != Ordering::Less => Some(b),
                _ => Some(r),
            })
            .ok_or_else(|| Error::InvalidConfig("noise point without records".into()))?
            .clone();
        let trivial_wins = family_best.get(&CodeFamily::Triv).map(|triv| {
            family_best
                .iter()
                .filter(|(f, _)| **f != CodeFamily::Triv)
                .all(|(_, r)| r.is_failed() || r.infidelity >= triv.infidelity)
        });
        let summary = PointSummary { noise: tasks[start].noise, family_order_best, family_best, winner, trivial_wins };
        if !summary.dominance_holds() {
            return Err(Error::InvalidConfig("winner selection violated dominance".into()));
        }
        points.push(summary);
        start = end;
    }
    Ok(PhaseDiagram { points })
}

/// Run the sweep in memory and reduce it to per-point winners.
pub fn phase_diagram(config: &SweepConfig, jobs: usize) -> Result<PhaseDiagram> {
    let result = run_sweep(config, &RunOptions { jobs, ..RunOptions::default() })?;
    summarize(&result)
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    config: &'a SweepConfig,
    noise_axis: Vec<f64>,
    noise_points: usize,
    tasks: usize,
    evaluated: usize,
    cache_hits: usize,
    failed: usize,
    support_threshold: f64,
    infidelity_floor: f64,
    float_format: &'static str,
    files: BTreeMap<&'static str, &'static str>,
}

pub const RECORDS_FILE: &str = "records.csv";
pub const BEST_FILE: &str = "best.csv";
pub const PHASE_FILE: &str = "phase.csv";
pub const DIFFS_FILE: &str = "diffs.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CACHE_FILE: &str = "cache.jsonl";

fn flag(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

/// Write records, per-(family, N) bests, per-point phase table, pairwise
/// differences and the run manifest into `dir`.
pub fn write_outputs(dir: &Path, config: &SweepConfig, result: &SweepResult, phase: &PhaseDiagram) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_records(File::create(dir.join(RECORDS_FILE))?, &result.records)?;

    let best: Vec<SweepRecord> = phase.points.iter().flat_map(|p| p.family_order_best.values().cloned()).collect();
    write_records(File::create(dir.join(BEST_FILE))?, &best)?;

    let mut w = csv::Writer::from_writer(File::create(dir.join(PHASE_FILE))?);
    w.write_record([
        "kappa_l_t",
        "kappa_phi_t",
        "family",
        "N",
        "param",
        "seed0",
        "seed1",
        "fidelity",
        "infidelity",
        "nbar_code",
        "solver_status",
        "is_winner",
        "trivial_wins",
    ])?;
    for p in &phase.points {
        for r in p.family_best.values() {
            let f = r.csv_fields();
            let is_winner = r.family == p.winner.family;
            w.write_record([
                f[5].clone(),
                f[6].clone(),
                f[0].clone(),
                f[1].clone(),
                f[2].clone(),
                f[3].clone(),
                f[4].clone(),
                f[8].clone(),
                f[9].clone(),
                f[10].clone(),
                f[11].clone(),
                is_winner.to_string(),
                flag(p.trivial_wins),
            ])?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_writer(File::create(dir.join(DIFFS_FILE))?);
    w.write_record([
        "kappa_l_t",
        "kappa_phi_t",
        "family_a",
        "family_b",
        "fidelity_a",
        "fidelity_b",
        "rel_diff",
        "trivial_wins",
    ])?;
    for p in &phase.points {
        let fams: Vec<CodeFamily> = p.family_best.keys().copied().collect();
        for (i, &a) in fams.iter().enumerate() {
            for &b in &fams[i + 1..] {
                let (ra, rb) = (&p.family_best[&a], &p.family_best[&b]);
                w.write_record([
                    fmt_f64(p.noise.kappa_l_t),
                    fmt_f64(p.noise.kappa_phi_t),
                    a.to_string(),
                    b.to_string(),
                    fmt_f64(ra.fidelity),
                    fmt_f64(rb.fidelity),
                    fmt_f64(relative_difference(ra.fidelity, rb.fidelity)),
                    flag(p.trivial_wins),
                ])?;
            }
        }
    }
    w.flush()?;

    let axis = match config.grid.mode {
        super::config::GridMode::Points { .. } => Vec::new(),
        _ => config.grid.axis()?,
    };
    let files =
        BTreeMap::from([("records", RECORDS_FILE), ("best", BEST_FILE), ("phase", PHASE_FILE), ("diffs", DIFFS_FILE)]);
    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config,
        noise_axis: axis,
        noise_points: phase.points.len(),
        tasks: result.tasks.len(),
        evaluated: result.evaluated,
        cache_hits: result.cache_hits,
        failed: result.records.iter().filter(|r| r.is_failed()).count(),
        support_threshold: SUPPORT_THRESHOLD,
        infidelity_floor: INFIDELITY_FLOOR,
        float_format: "17 significant digits",
        files,
    };
    let mut f = File::create(dir.join(MANIFEST_FILE))?;
    f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}
