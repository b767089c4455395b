use std::fmt;
use std::path::Path;

use convlab_core::analysis::{
    collective_bias, consensus_time_stats, determine_strong_word, validate_counts, ObservedCounts,
};
use convlab_core::baseline::{baseline_bias_curve, BaselineConfig};
use convlab_core::meanfield::{integrate, stability_report, IntegrateOptions, StateDistribution};
use convlab_core::sim::derive_seed;
use convlab_core::state::enumerate_states;
use convlab_core::{
    run_batch, state_count, synth_policy, Error, PolicyTable, SimConfig, StateIndex, SynthKind,
    TransitionTable, Word,
};

use crate::table::{Cell, Table};
use crate::{
    BaselineArgs, Format, MeanfieldArgs, SimulateArgs, SweepArgs, SynthArgs, SynthName,
    ValidateArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::IntegratorBlowUp { .. }
            | Error::NonFinite
            | Error::NoConvergence(_)
            | Error::NoConsensus => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

type CliResult = Result<(), CliError>;

pub struct Output<'a> {
    pub path: Option<&'a Path>,
    pub format: Option<Format>,
}

impl Output<'_> {
    fn format(&self) -> Format {
        self.format.unwrap_or(Format::Csv)
    }

    fn emit(&self, table: &Table) -> CliResult {
        write_table(table, self.path, self.format())
    }
}

fn render(table: &Table, format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => table.to_csv().map_err(|e| CliError::Input(e.to_string())),
        Format::StructuredText => {
            let mut s = serde_json::to_string_pretty(&table.to_json_value())
                .map_err(|e| CliError::Input(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

fn write_text(text: &str, path: Option<&Path>) -> CliResult {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_table(table: &Table, path: Option<&Path>, format: Format) -> CliResult {
    write_text(&render(table, format)?, path)
}

fn load_policy(path: &Path) -> Result<PolicyTable, CliError> {
    Ok(PolicyTable::load(path)?)
}

fn positive(name: &str, v: usize) -> CliResult {
    if v == 0 {
        Err(CliError::Usage(format!("--{name} must be >= 1")))
    } else {
        Ok(())
    }
}

pub fn states(h: usize, enumerate: bool, out: &Output) -> CliResult {
    if h > convlab_core::state::MAX_HISTORY_LEN {
        return Err(CliError::Usage(format!(
            "--H must be at most {}",
            convlab_core::state::MAX_HISTORY_LEN
        )));
    }
    if !enumerate {
        let mut t = Table::new(&["H", "state_count"]);
        t.push(vec![Cell::int(h), Cell::int(state_count(h))]);
        return match out.format() {
            Format::Csv => write_text(&format!("{}\n", state_count(h)), out.path),
            Format::StructuredText => out.emit(&t),
        };
    }
    let mut t = Table::new(&["state_index", "state"]);
    for (idx, m) in enumerate_states(h) {
        t.push(vec![Cell::int(idx.get()), Cell::text(m.to_string())]);
    }
    out.emit(&t)
}

fn batch_table(results: &[convlab_core::RunResult]) -> Table {
    let mut t = Table::new(&["run_id", "seed", "outcome", "consensus_time", "rounds_executed"]);
    for (k, r) in results.iter().enumerate() {
        t.push(vec![
            Cell::int(k),
            Cell::text(r.seed.to_string()),
            Cell::text(r.outcome.label()),
            r.consensus_time.map_or(Cell::Empty, Cell::int),
            Cell::int(r.rounds_executed),
        ]);
    }
    t
}

pub fn simulate(a: &SimulateArgs, seed: u64, out: &Output) -> CliResult {
    positive("runs", a.runs)?;
    positive("max-rounds", a.max_rounds)?;
    let policy = load_policy(&a.policy)?;
    let mut config = SimConfig::new(a.population, seed);
    config.max_rounds = a.max_rounds;
    config.record_trajectory = a.trajectories.is_some();
    let results = run_batch(&config, &policy, a.runs)?;
    out.emit(&batch_table(&results))?;

    if let Some(path) = &a.trajectories {
        let mut t = Table::new(&["run_id", "round", "frac_a"]);
        for (k, r) in results.iter().enumerate() {
            for (round, f) in r.trajectory.iter().flatten().enumerate() {
                t.push(vec![Cell::int(k), Cell::int(round + 1), Cell::prob(*f)]);
            }
        }
        write_table(&t, Some(path), out.format())?;
    }
    if let Some(path) = &a.pdf {
        let mut t = Table::new(&["round", "count_strong", "count_weak"]);
        // An empty histogram is still a valid (header-only) table.
        if let Ok(pdf) = consensus_time_stats(&results) {
            let strong = if pdf.total(Word::B) > pdf.total(Word::A) {
                Word::B
            } else {
                Word::A
            };
            for (round, s, w) in pdf.rows(strong) {
                t.push(vec![Cell::int(round), Cell::int(s), Cell::int(w)]);
            }
        }
        write_table(&t, Some(path), out.format())?;
    }
    Ok(())
}

pub fn sweep(a: &SweepArgs, seed: u64, out: &Output) -> CliResult {
    positive("runs", a.runs)?;
    positive("max-rounds", a.max_rounds)?;
    if a.sizes.is_empty() {
        return Err(CliError::Usage("--sizes must list at least one size".into()));
    }
    let policy = load_policy(&a.policy)?;
    let mut t = Table::new(&["N", "fraction_a", "sem", "n_consensus", "n_no_consensus"]);
    t.push(vec![
        Cell::int(1),
        Cell::prob(policy.prob_a(StateIndex::EMPTY)),
        Cell::prob(0.0),
        Cell::int(0),
        Cell::int(0),
    ]);
    let mut sweep = Vec::with_capacity(a.sizes.len());
    for (i, &n) in a.sizes.iter().enumerate() {
        let mut config = SimConfig::new(n, derive_seed(seed, i as u64));
        config.max_rounds = a.max_rounds;
        let est = collective_bias(&run_batch(&config, &policy, a.runs)?)?;
        t.push(vec![
            Cell::int(n),
            Cell::prob(est.fraction_a),
            Cell::prob(est.sem),
            Cell::int(est.n_consensus),
            Cell::int(est.n_no_consensus),
        ]);
        sweep.push((n, est));
    }
    out.emit(&t)?;
    if let Ok(strong) = determine_strong_word(&sweep) {
        eprintln!(
            "strong word: {} (N={}, fraction_a={:.6}{})",
            policy.word_pair().label(strong.word),
            strong.population,
            strong.fraction_a,
            if strong.ambiguous { ", ambiguous" } else { "" }
        );
    }
    Ok(())
}

pub fn meanfield(a: &MeanfieldArgs, out: &Output) -> CliResult {
    if !(a.dt > 0.0 && a.tmax > 0.0) {
        return Err(CliError::Usage("--dt and --tmax must be positive".into()));
    }
    positive("every", a.every)?;
    let policy = load_policy(&a.policy)?;
    let trans = TransitionTable::build(policy.history_len())?;
    let x0 = StateDistribution::delta(StateIndex::EMPTY, policy.state_count());
    let opts = IntegrateOptions {
        dt: a.dt,
        t_max: a.tmax,
        record_every: a.every,
        ..Default::default()
    };
    let run = integrate(&x0, &policy, &trans, &opts)?;
    let mut t = Table::new(&["t", "s", "mass_all_a", "mass_all_b", "sum_x"]);
    for s in &run.samples {
        t.push(vec![
            Cell::Num(format!("{:.6}", s.t)),
            Cell::prob(s.production),
            Cell::prob(s.mass_all_a),
            Cell::prob(s.mass_all_b),
            Cell::Num(format!("{:.12}", s.total_mass)),
        ]);
    }
    out.emit(&t)?;
    if !run.steady {
        eprintln!(
            "warning: not stationary at t={:.6} (max rate {:.3e})",
            run.t_end, run.final_rate
        );
    }
    Ok(())
}

pub fn stability(policy: &Path, out: &Output) -> CliResult {
    let policy = load_policy(policy)?;
    let r = stability_report(&policy)?;
    let mut t = Table::new(&[
        "word_a",
        "word_b",
        "H",
        "residual_a",
        "residual_b",
        "lambda_a_re",
        "lambda_a_im",
        "lambda_b_re",
        "lambda_b_im",
        "class_a",
        "class_b",
    ]);
    t.push(vec![
        Cell::text(r.word_pair.word_a()),
        Cell::text(r.word_pair.word_b()),
        Cell::int(r.history_len),
        Cell::sig6(r.all_a.residual),
        Cell::sig6(r.all_b.residual),
        Cell::sig6(r.all_a.lambda_max.re),
        Cell::sig6(r.all_a.lambda_max.im),
        Cell::sig6(r.all_b.lambda_max.re),
        Cell::sig6(r.all_b.lambda_max.im),
        Cell::text(r.all_a.class.as_str()),
        Cell::text(r.all_b.class.as_str()),
    ]);
    out.emit(&t)
}

pub fn baseline(a: &BaselineArgs, seed: u64, out: &Output) -> CliResult {
    positive("runs", a.runs)?;
    positive("max-rounds", a.max_rounds)?;
    let template = BaselineConfig {
        max_rounds: a.max_rounds,
        ..BaselineConfig::new(a.population, 0.5, a.runs, seed)
    };
    let curve = baseline_bias_curve(&template, &a.bias)?;
    let mut t = Table::new(&["p", "N", "runs", "bias", "sem", "mean_consensus_rounds"]);
    for point in curve {
        t.push(vec![
            Cell::prob(point.bias),
            Cell::int(a.population),
            Cell::int(a.runs),
            Cell::prob(point.estimate.fraction_a),
            Cell::prob(point.estimate.sem),
            Cell::prob(point.mean_consensus_rounds),
        ]);
    }
    out.emit(&t)
}

pub fn validate(a: &ValidateArgs, out: &Output) -> CliResult {
    if !(0.0..=1.0).contains(&a.alpha) {
        return Err(CliError::Usage("--alpha must lie in [0, 1]".into()));
    }
    let policy = load_policy(&a.policy)?;
    let mut reader = csv::Reader::from_path(&a.counts)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.counts.display())))?;
    let parsed: Vec<Result<ObservedCounts, String>> = reader
        .deserialize()
        .map(|r: Result<ObservedCounts, csv::Error>| r.map_err(|e| e.to_string()))
        .collect();
    let good: Vec<ObservedCounts> = parsed.iter().filter_map(|r| r.clone().ok()).collect();
    let mut tested = validate_counts(&policy, &good, a.alpha).into_iter();

    let mut t = Table::new(&[
        "state_index",
        "expected_p",
        "observed_k",
        "n",
        "p_value",
        "pass",
        "error",
    ]);
    let mut errors = 0;
    for row in &parsed {
        let outcome = match row {
            Ok(c) => tested
                .next()
                .expect("one test per parsed row")
                .map_err(|e| (Some(*c), e)),
            Err(e) => Err((None, e.clone())),
        };
        match outcome {
            Ok(v) => t.push(vec![
                Cell::int(v.state_index),
                Cell::prob(v.expected_p),
                Cell::Int(v.observed_k as i64),
                Cell::Int(v.n as i64),
                Cell::prob(v.p_value),
                Cell::Bool(v.pass),
                Cell::Empty,
            ]),
            Err((c, msg)) => {
                errors += 1;
                t.push(vec![
                    c.map_or(Cell::Empty, |c| Cell::int(c.state_index)),
                    Cell::Empty,
                    c.map_or(Cell::Empty, |c| Cell::Int(c.observed_k as i64)),
                    c.map_or(Cell::Empty, |c| Cell::Int(c.n as i64)),
                    Cell::Empty,
                    Cell::Bool(false),
                    Cell::text(msg),
                ]);
            }
        }
    }
    out.emit(&t)?;
    if errors > 0 {
        eprintln!("warning: {errors} row(s) could not be tested");
        if a.strict {
            return Err(CliError::Input(format!("{errors} invalid count row(s)")));
        }
    }
    Ok(())
}

pub fn synth(a: &SynthArgs, seed: u64, out: &Output) -> CliResult {
    let kind = match a.kind {
        SynthName::Uniform => SynthKind::Uniform,
        SynthName::Constant => SynthKind::Constant(a.q),
        SynthName::BiasedEmpty => SynthKind::BiasedEmpty(a.q),
        SynthName::WordSwapSymmetric => SynthKind::WordSwapSymmetric { seed },
        SynthName::Random => SynthKind::Random { seed },
        SynthName::Majority => SynthKind::Majority { tie: a.q },
    };
    let policy = synth_policy(kind, a.h)?;
    match out.format.unwrap_or(Format::StructuredText) {
        Format::StructuredText => {
            let mut text = policy.to_json()?;
            text.push('\n');
            write_text(&text, out.path)
        }
        Format::Csv => {
            let mut buf = Vec::new();
            policy.write_csv(&mut buf)?;
            write_text(&String::from_utf8_lossy(&buf), out.path)
        }
    }
}
