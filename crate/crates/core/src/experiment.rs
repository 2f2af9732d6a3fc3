//! Experiment harness behind the `shsade` binary: multi-seed runs that write
//! one trace CSV per seed plus a summary, trace-directory comparison, and
//! brute-force ranking of surrogate spaces.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{regularized_ea_run, vanilla_de_run, RegularizedEaConfig, VanillaDeConfig};
use crate::codec::DiscreteSpace;
use crate::nas::{brute_force_optimum, nas_evolve, BiObjectiveConfig, NasConfig};
use crate::objectives::{BenchmarkFunction, BenchmarkKind, TabularSurrogate};
use crate::seeded_rng;
use crate::shsade::{self, CrossoverTarget, ShsadeConfig, Termination};
use crate::trace::{SearchTrace, TraceMeta};

/// Environment variable naming the directory relative output paths resolve against.
pub const OUTPUT_ROOT_ENV: &str = "SHSADE_OUTPUT_ROOT";

pub const SUMMARY_FILE: &str = "summary.json";

/// NAS comparisons are sampled at multiples of this many evaluations.
pub const NAS_CHECKPOINT_STEP: u64 = 25;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    /// Bad or inconsistent input; nothing was written.
    #[error("configuration error: {0}")]
    Config(String),
    /// Failure while running or writing; partial outputs were removed.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl ExperimentError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            ExperimentError::Runtime(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Benchmark,
    Nas,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Benchmark => "benchmark",
            Task::Nas => "nas",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Shsade,
    VanillaDe,
    RegularizedEa,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Shsade => "shsade",
            Algorithm::VanillaDe => "vanilla_de",
            Algorithm::RegularizedEa => "regularized_ea",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkSpec {
    pub name: BenchmarkKind,
    pub dimension: usize,
}

/// Search-loop knobs of the SHSADE architecture search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NasOptions {
    pub sigma_init_noise: f64,
    pub noise_each_generation: bool,
    pub mutate_fraction: f64,
    pub crossover_target: CrossoverTarget,
    pub generation_cap: usize,
    pub runs: Option<usize>,
}

impl Default for NasOptions {
    fn default() -> Self {
        let d = NasConfig::new(BiObjectiveConfig {
            cost_budget: 1.0,
            omega: 1.0,
        });
        Self {
            sigma_init_noise: d.sigma_init_noise,
            noise_each_generation: d.noise_each_generation,
            mutate_fraction: d.mutate_fraction,
            crossover_target: d.crossover_target,
            generation_cap: d.generation_cap,
            runs: d.runs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub algorithm: Algorithm,
    /// Benchmark task: which function.
    #[serde(default)]
    pub objective: Option<BenchmarkSpec>,
    #[serde(default)]
    pub termination: Termination,
    /// NAS task: search-space JSON, relative to the config file.
    #[serde(default)]
    pub space: Option<PathBuf>,
    #[serde(default)]
    pub surrogate_seed: Option<u64>,
    #[serde(default)]
    pub biobjective: Option<BiObjectiveConfig>,
    /// NAS task: distinct architectures per run.
    #[serde(default)]
    pub budget: Option<usize>,
    /// Defaults depend on the task.
    #[serde(default)]
    pub shsade: Option<ShsadeConfig>,
    #[serde(default)]
    pub nas: NasOptions,
    #[serde(default)]
    pub vanilla_de: VanillaDeConfig,
    #[serde(default)]
    pub regularized_ea: RegularizedEaConfig,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
}

/// A parsed config plus everything it references, ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub output_dir: PathBuf,
    plan: Plan,
}

#[derive(Debug, Clone)]
enum Plan {
    Shsade(ShsadeConfig, BenchmarkKind, usize),
    VanillaDe(VanillaDeConfig, BenchmarkKind, usize),
    NasShsade(Box<NasConfig>, TabularSurrogate),
    NasRegEa(RegularizedEaConfig, BiObjectiveConfig, TabularSurrogate),
}

fn config_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

impl Experiment {
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_config(config, base)
    }

    /// `base_dir` anchors the relative space path.
    pub fn from_config(config: ExperimentConfig, base_dir: &Path) -> Result<Self, ExperimentError> {
        if config.seeds.is_empty() {
            return Err(config_err("seeds must not be empty"));
        }
        let mut sorted = config.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(config_err("seeds must be distinct"));
        }
        let mut hasher = Sha256::new();
        hasher.update(serde_json::to_vec(&config).map_err(|e| config_err(e.to_string()))?);

        let plan = match config.task {
            Task::Benchmark => {
                let spec = config
                    .objective
                    .as_ref()
                    .ok_or_else(|| config_err("benchmark task needs an `objective`"))?;
                BenchmarkFunction::new(spec.name, spec.dimension)
                    .map_err(|e| config_err(e.to_string()))?;
                match config.algorithm {
                    Algorithm::Shsade => {
                        let cfg = config.shsade.clone().unwrap_or_default();
                        cfg.validate().map_err(|e| config_err(e.to_string()))?;
                        Plan::Shsade(cfg, spec.name, spec.dimension)
                    }
                    Algorithm::VanillaDe => {
                        config
                            .vanilla_de
                            .validate()
                            .map_err(|e| config_err(e.to_string()))?;
                        Plan::VanillaDe(config.vanilla_de.clone(), spec.name, spec.dimension)
                    }
                    Algorithm::RegularizedEa => {
                        return Err(config_err("regularized_ea only runs on the nas task"))
                    }
                }
            }
            Task::Nas => {
                let rel = config
                    .space
                    .as_ref()
                    .ok_or_else(|| config_err("nas task needs a `space` file"))?;
                let space_path = base_dir.join(rel);
                let space_text = fs::read_to_string(&space_path).map_err(|e| {
                    config_err(format!("cannot read {}: {e}", space_path.display()))
                })?;
                let space = DiscreteSpace::from_json(&space_text)
                    .map_err(|e| config_err(format!("{}: {e}", space_path.display())))?;
                hasher.update(space.to_json().as_bytes());
                let seed = config
                    .surrogate_seed
                    .ok_or_else(|| config_err("nas task needs a `surrogate_seed`"))?;
                let bi = config
                    .biobjective
                    .ok_or_else(|| config_err("nas task needs a `biobjective` block"))?;
                bi.validate().map_err(|e| config_err(e.to_string()))?;
                let surrogate = TabularSurrogate::new(space, seed);
                match config.algorithm {
                    Algorithm::Shsade => {
                        let mut nas = NasConfig::new(bi);
                        if let Some(s) = &config.shsade {
                            nas.shsade = s.clone();
                        }
                        if let Some(b) = config.budget {
                            nas.budget = b;
                        }
                        nas.sigma_init_noise = config.nas.sigma_init_noise;
                        nas.noise_each_generation = config.nas.noise_each_generation;
                        nas.mutate_fraction = config.nas.mutate_fraction;
                        nas.crossover_target = config.nas.crossover_target;
                        nas.generation_cap = config.nas.generation_cap;
                        nas.runs = config.nas.runs;
                        nas.validate().map_err(|e| config_err(e.to_string()))?;
                        Plan::NasShsade(Box::new(nas), surrogate)
                    }
                    Algorithm::RegularizedEa => {
                        let mut cfg = config.regularized_ea.clone();
                        if let Some(b) = config.budget {
                            cfg.budget = b;
                        }
                        cfg.validate().map_err(|e| config_err(e.to_string()))?;
                        Plan::NasRegEa(cfg, bi, surrogate)
                    }
                    Algorithm::VanillaDe => {
                        return Err(config_err("vanilla_de only runs on the benchmark task"))
                    }
                }
            }
        };

        let output_dir = resolve_output(&config.output);
        let digest = hasher.finalize();
        let config_hash = digest.iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        });
        Ok(Self {
            config,
            config_hash,
            output_dir,
            plan,
        })
    }

    fn run_seed(&self, seed: u64) -> crate::Result<SeedOutcome> {
        let mut rng = seeded_rng(seed);
        let term = self.config.termination;
        Ok(match &self.plan {
            Plan::Shsade(cfg, kind, dim) => {
                let mut f = BenchmarkFunction::new(*kind, *dim)?;
                let r = shsade::run(cfg, &mut f, term, &mut rng)?;
                SeedOutcome::benchmark(seed, r.best.fitness, r.best.x, r.evaluations, r.trace)
            }
            Plan::VanillaDe(cfg, kind, dim) => {
                let mut f = BenchmarkFunction::new(*kind, *dim)?;
                let r = vanilla_de_run(cfg, &mut f, term, &mut rng)?;
                SeedOutcome::benchmark(seed, r.best.fitness, r.best.x, r.evaluations, r.trace)
            }
            Plan::NasShsade(cfg, s) => {
                let r = nas_evolve(s.space(), s, cfg, &mut rng)?;
                SeedOutcome::nas(
                    seed,
                    r.to_json(s.space()),
                    r.best_score,
                    r.evaluations,
                    r.trace,
                )
            }
            Plan::NasRegEa(cfg, bi, s) => {
                let r = regularized_ea_run(s.space(), s, cfg, bi, &mut rng)?;
                SeedOutcome::nas(
                    seed,
                    r.to_json(s.space()),
                    r.best_score,
                    r.evaluations,
                    r.trace,
                )
            }
        })
    }

    pub fn trace_file_name(seed: u64) -> String {
        format!("trace_seed{seed}.csv")
    }

    /// Runs all seeds (up to `threads` at a time) and writes the outputs.
    pub fn run(&self, threads: Option<usize>) -> Result<ExperimentReport, ExperimentError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.unwrap_or(0))
            .build()
            .map_err(|e| ExperimentError::Runtime(e.to_string()))?;
        let outcomes: Vec<crate::Result<SeedOutcome>> = pool.install(|| {
            self.config
                .seeds
                .par_iter()
                .map(|&s| self.run_seed(s))
                .collect()
        });
        let outcomes = outcomes
            .into_iter()
            .zip(&self.config.seeds)
            .map(|(o, seed)| o.map_err(|e| ExperimentError::Runtime(format!("seed {seed}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;

        let mut written = Vec::new();
        let result = self.write_outputs(&outcomes, &mut written);
        if let Err(e) = result {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(ExperimentError::Runtime(e.to_string()));
        }
        let finals: Vec<f64> = outcomes.iter().map(|o| o.final_best).collect();
        Ok(ExperimentReport {
            files: written,
            final_best: finals,
        })
    }

    fn write_outputs(
        &self,
        outcomes: &[SeedOutcome],
        written: &mut Vec<PathBuf>,
    ) -> std::io::Result<()> {
        fs::create_dir_all(&self.output_dir)?;
        for o in outcomes {
            let meta = TraceMeta {
                algorithm: self.config.algorithm.name().to_string(),
                task: self.config.task.name().to_string(),
                seed: o.seed,
                config_hash: self.config_hash.clone(),
            };
            let path = self.output_dir.join(Self::trace_file_name(o.seed));
            fs::write(&path, o.trace.to_csv(&meta))?;
            written.push(path);
        }
        let path = self.output_dir.join(SUMMARY_FILE);
        let text = serde_json::to_string_pretty(&self.summary(outcomes))?;
        fs::write(&path, text + "\n")?;
        written.push(path);
        Ok(())
    }

    fn summary(&self, outcomes: &[SeedOutcome]) -> serde_json::Value {
        let mut finals: Vec<f64> = outcomes.iter().map(|o| o.final_best).collect();
        finals.sort_by(f64::total_cmp);
        let (q1, median, q3) = (
            quantile(&finals, 0.25),
            quantile(&finals, 0.5),
            quantile(&finals, 0.75),
        );
        serde_json::json!({
            "algorithm": self.config.algorithm.name(),
            "task": self.config.task.name(),
            "config_hash": self.config_hash,
            "seeds": self.config.seeds,
            "runs": outcomes.iter().map(|o| o.detail.clone()).collect::<Vec<_>>(),
            "median_final_best": median,
            "q1_final_best": q1,
            "q3_final_best": q3,
            "iqr_final_best": q3 - q1,
        })
    }
}

fn resolve_output(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(path),
        _ => path.to_path_buf(),
    }
}

struct SeedOutcome {
    seed: u64,
    final_best: f64,
    trace: SearchTrace,
    detail: serde_json::Value,
}

impl SeedOutcome {
    fn benchmark(seed: u64, best: f64, x: Vec<f64>, evaluations: u64, trace: SearchTrace) -> Self {
        Self {
            seed,
            final_best: best,
            detail: serde_json::json!({
                "seed": seed,
                "final_best": best,
                "evaluations": evaluations,
                "best_x": x,
            }),
            trace,
        }
    }

    fn nas(
        seed: u64,
        result: serde_json::Value,
        best: f64,
        _evaluations: u64,
        trace: SearchTrace,
    ) -> Self {
        let mut detail = serde_json::json!({ "seed": seed, "final_best": best });
        if let (Some(d), serde_json::Value::Object(r)) = (detail.as_object_mut(), result) {
            d.extend(r);
        }
        Self {
            seed,
            final_best: best,
            detail,
            trace,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub files: Vec<PathBuf>,
    /// Per seed, in config order.
    pub final_best: Vec<f64>,
}

/// Parses, validates and runs the experiment described by `config_path`.
pub fn run_experiment(
    config_path: &Path,
    threads: Option<usize>,
) -> Result<ExperimentReport, ExperimentError> {
    Experiment::load(config_path)?.run(threads)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// All traces of one directory.
#[derive(Debug, Clone)]
pub struct TraceSet {
    pub label: String,
    pub task: String,
    pub traces: Vec<SearchTrace>,
}

impl TraceSet {
    pub fn load(dir: &Path) -> Result<Self, ExperimentError> {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| config_err(format!("cannot read {}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(config_err(format!(
                "{} contains no trace files",
                dir.display()
            )));
        }
        let mut label: Option<String> = None;
        let mut task: Option<String> = None;
        let mut traces = Vec::new();
        for f in files {
            let text =
                fs::read_to_string(&f).map_err(|e| config_err(format!("{}: {e}", f.display())))?;
            let (meta, trace) = SearchTrace::from_csv(&text)
                .map_err(|e| config_err(format!("{}: {e}", f.display())))?;
            for (slot, value, what) in [
                (&mut label, &meta.algorithm, "algorithm"),
                (&mut task, &meta.task, "task"),
            ] {
                match slot {
                    Some(v) if v != value => {
                        return Err(config_err(format!(
                            "{}: mixed {what} values `{v}` and `{value}`",
                            dir.display()
                        )))
                    }
                    Some(_) => {}
                    None => *slot = Some(value.clone()),
                }
            }
            if trace.is_empty() {
                return Err(config_err(format!("{}: empty trace", f.display())));
            }
            traces.push(trace);
        }
        Ok(Self {
            label: label.unwrap_or_default(),
            task: task.unwrap_or_default(),
            traces,
        })
    }

    fn median_at(&self, evaluations: u64) -> f64 {
        let vals: Vec<f64> = self
            .traces
            .iter()
            .map(|t| t.best_at(evaluations).unwrap_or(f64::INFINITY))
            .collect();
        median(&vals)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    A,
    B,
    Tie,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub label_a: String,
    pub label_b: String,
    /// `(evaluations, median best of a, median best of b)`.
    pub rows: Vec<(u64, f64, f64)>,
    pub verdict: Verdict,
}

impl Comparison {
    pub fn verdict_label(&self) -> &str {
        match self.verdict {
            Verdict::A => &self.label_a,
            Verdict::B => &self.label_b,
            Verdict::Tie => "tie",
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# a: {}\n# b: {}\nevaluations,median_best_a,median_best_b\n",
            self.label_a, self.label_b
        );
        for (e, a, b) in &self.rows {
            let _ = writeln!(out, "{e},{a:?},{b:?}");
        }
        out
    }
}

/// Aligns two trace directories on common evaluation checkpoints and
/// compares their median best-so-far curves.
pub fn compare(dir_a: &Path, dir_b: &Path) -> Result<Comparison, ExperimentError> {
    let a = TraceSet::load(dir_a)?;
    let b = TraceSet::load(dir_b)?;
    if a.task != b.task {
        return Err(config_err(format!(
            "schema mismatch: `{}` traces vs `{}` traces",
            a.task, b.task
        )));
    }
    let last = a
        .traces
        .iter()
        .chain(&b.traces)
        .filter_map(|t| t.last().map(|r| r.evaluations))
        .max()
        .unwrap_or(0);
    let checkpoints: Vec<u64> = if a.task == Task::Nas.name() {
        let mut c: Vec<u64> = (1..=last / NAS_CHECKPOINT_STEP)
            .map(|k| k * NAS_CHECKPOINT_STEP)
            .collect();
        if c.last() != Some(&last) {
            c.push(last);
        }
        c
    } else {
        let mut c: Vec<u64> = a
            .traces
            .iter()
            .chain(&b.traces)
            .flat_map(|t| t.rows().iter().map(|r| r.evaluations))
            .collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    let rows: Vec<(u64, f64, f64)> = checkpoints
        .iter()
        .map(|&c| (c, a.median_at(c), b.median_at(c)))
        .collect();
    let verdict = match rows.last() {
        Some(&(_, ma, mb)) if ma < mb => Verdict::A,
        Some(&(_, ma, mb)) if mb < ma => Verdict::B,
        _ => Verdict::Tie,
    };
    let (mut label_a, mut label_b) = (a.label, b.label);
    if label_a == label_b {
        label_a = dir_a.display().to_string();
        label_b = dir_b.display().to_string();
    }
    Ok(Comparison {
        label_a,
        label_b,
        rows,
        verdict,
    })
}

/// Brute-force ranking of a surrogate space as CSV, best first.
pub fn oracle_csv(
    space: &DiscreteSpace,
    surrogate_seed: u64,
    bi: &BiObjectiveConfig,
    top: Option<usize>,
) -> crate::Result<String> {
    let surrogate = TabularSurrogate::new(space.clone(), surrogate_seed);
    let (_, ranking) = brute_force_optimum(space, &surrogate, bi)?;
    let mut out = String::from("rank,score,accuracy,cost");
    for a in space.axes() {
        out.push(',');
        out.push_str(&a.name);
    }
    out.push('\n');
    for (rank, r) in ranking.iter().take(top.unwrap_or(usize::MAX)).enumerate() {
        let _ = write!(
            out,
            "{},{:?},{:?},{:?}",
            rank + 1,
            r.score,
            r.accuracy,
            r.cost
        );
        for v in &r.genotype.choices {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&[5.0], 0.75), 5.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    }

    fn base_config() -> ExperimentConfig {
        serde_json::from_str(
            r#"{"task": "benchmark", "algorithm": "shsade",
                "objective": {"name": "sphere", "dimension": 3},
                "seeds": [1, 2], "output": "out"}"#,
        )
        .unwrap()
    }

    #[test]
    fn config_hash_tracks_fields() {
        let a = Experiment::from_config(base_config(), Path::new(".")).unwrap();
        let b = Experiment::from_config(base_config(), Path::new(".")).unwrap();
        assert_eq!(a.config_hash, b.config_hash);
        let mut changed = base_config();
        changed.termination.max_generations = Some(5);
        let c = Experiment::from_config(changed, Path::new(".")).unwrap();
        assert_ne!(a.config_hash, c.config_hash);
    }

    #[test]
    fn config_validation_errors() {
        let mut dup = base_config();
        dup.seeds = vec![3, 3];
        assert!(matches!(
            Experiment::from_config(dup, Path::new(".")),
            Err(ExperimentError::Config(_))
        ));
        let mut empty = base_config();
        empty.seeds.clear();
        assert!(Experiment::from_config(empty, Path::new(".")).is_err());
        let mut wrong = base_config();
        wrong.algorithm = Algorithm::RegularizedEa;
        assert!(Experiment::from_config(wrong, Path::new(".")).is_err());
        let mut nas = base_config();
        nas.task = Task::Nas;
        assert!(Experiment::from_config(nas, Path::new(".")).is_err());
    }
}
