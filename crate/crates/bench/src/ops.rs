//! The experiment operations behind each subcommand.

use std::path::PathBuf;

use rayon::prelude::*;

use coarse_sbm::bounds::{
    canonical_rows, ch_divergence, classify_regime, map_failure_report,
    recovery_threshold_constants, renyi_counting_bound, BoundReport, CanonicalRow,
    RegimeConstants, RegimeFamily, RegimeVerdict,
};
use coarse_sbm::coarsen::{sample_coarse_direct, sample_profile_matrix};
use coarse_sbm::dist::{pb_tail, renyi_half_binomial, PoissonBinomialSpec, TailMethod};
use coarse_sbm::extended::{binarize, build_extended_sbm, ExtendedSbm, PriorSpec};
use coarse_sbm::recovery::{
    evaluate, map_exhaustive, spectral_baseline, EvalResult, DEFAULT_ENUMERATION_CAP,
};
use coarse_sbm::rng::derive_seed;
use coarse_sbm::sbm::SsbmParams;
use coarse_sbm::{Error, Result};

use crate::config::{ExperimentConfig, SweptParam};
use crate::csvout::{Cell, CsvTable};

const TAG_MC: u64 = 0x4d435452;
const TAG_GEN: u64 = 0x47454e31;

/// Columns common to every experiment row: the complete parameter tuple,
/// so each CSV row is self-describing.
const ECHO_HEADER: &[&str] = &[
    "swept_param",
    "swept_value",
    "n",
    "k_communities",
    "alpha",
    "beta",
    "rho",
    "l",
    "coverage",
    "nu",
    "tau",
    "prior_kind",
    "k_nu",
    "p",
    "q",
    "exact_path",
];

fn swept_name(config: &ExperimentConfig) -> &'static str {
    match config.swept() {
        SweptParam::L => "l",
        SweptParam::Coverage => "coverage",
        SweptParam::None => "none",
    }
}

fn prior_kind(config: &ExperimentConfig) -> &'static str {
    match config.prior {
        PriorSpec::Uniform => "uniform",
        PriorSpec::Custom(_) => "custom",
    }
}

fn echo_cells(config: &ExperimentConfig, l: u64, coverage: u32, model: &ExtendedSbm) -> Vec<Cell> {
    let swept_value = match config.swept() {
        SweptParam::Coverage => u64::from(coverage),
        _ => l,
    };
    vec![
        Cell::Text(swept_name(config).to_string()),
        Cell::UInt(swept_value),
        Cell::UInt(config.n as u64),
        Cell::UInt(u64::from(config.k_communities)),
        Cell::Float(config.alpha),
        Cell::Float(config.beta),
        Cell::Float(config.rho),
        Cell::UInt(l),
        Cell::UInt(u64::from(coverage)),
        Cell::UInt(u64::from(config.nu)),
        Cell::Float(config.tau),
        Cell::Text(prior_kind(config).to_string()),
        Cell::UInt(model.k_nu() as u64),
        Cell::Float(config.p()),
        Cell::Float(config.q()),
        Cell::UInt(u64::from(model.exact_path())),
    ]
}

fn build_model(config: &ExperimentConfig, coverage: u32) -> Result<ExtendedSbm> {
    build_extended_sbm(
        config.k_communities,
        coverage,
        config.nu,
        config.p(),
        config.q(),
        config.tau,
        &config.prior,
        config.exact_cap,
    )
}

fn check_supports_fit(config: &ExperimentConfig, l: u64, coverage: u32) -> Result<()> {
    let needed = l.saturating_mul(u64::from(coverage));
    if needed > config.n as u64 {
        return Err(Error::Infeasible(format!(
            "{l} disjoint supports of size {coverage} need {needed} fine nodes, model.n = {}",
            config.n
        )));
    }
    Ok(())
}

/// Computes the failure bound for every sweep point, all three
/// connectivity variants labeled, plus the enveloping band used for
/// plotting: `bound_lower`/`bound_upper` are the smallest and largest of
/// the three variant evaluations, `bound_mean` the midpoint variant's.
pub fn run_bound_sweep(config: &ExperimentConfig) -> Result<CsvTable> {
    let mut header: Vec<&str> = ECHO_HEADER.to_vec();
    header.extend_from_slice(&[
        "raw_u_mean",
        "raw_u_lower",
        "raw_u_upper",
        "bound_u_mean",
        "bound_u_lower",
        "bound_u_upper",
        "bound_mean",
        "bound_lower",
        "bound_upper",
    ]);
    let mut table = CsvTable::new(&header);

    for (l, coverage) in config.sweep_points() {
        check_supports_fit(config, l, coverage)?;
        let model = build_model(config, coverage)?;
        let report: BoundReport = map_failure_report(&model, l)?;
        let envelope_lower = report
            .bound_mean
            .min(report.bound_lower)
            .min(report.bound_upper);
        let envelope_upper = report
            .bound_mean
            .max(report.bound_lower)
            .max(report.bound_upper);
        let mut row = echo_cells(config, l, coverage, &model);
        row.extend([
            Cell::Float(report.raw_mean),
            Cell::Float(report.raw_lower),
            Cell::Float(report.raw_upper),
            Cell::Float(report.bound_mean),
            Cell::Float(report.bound_lower),
            Cell::Float(report.bound_upper),
            Cell::Float(report.bound_mean),
            Cell::Float(envelope_lower),
            Cell::Float(envelope_upper),
        ]);
        table.push(row);
    }
    Ok(table)
}

struct TrialOutcome {
    map: Option<EvalResult>,
    spectral: Option<EvalResult>,
}

struct AlgorithmSummary {
    ran: bool,
    failures: u64,
    node_error_sum: f64,
    samples: u64,
}

impl AlgorithmSummary {
    fn collect<'a>(outcomes: impl Iterator<Item = Option<&'a EvalResult>>) -> Self {
        let mut summary = AlgorithmSummary {
            ran: false,
            failures: 0,
            node_error_sum: 0.0,
            samples: 0,
        };
        for outcome in outcomes.flatten() {
            summary.ran = true;
            summary.samples += 1;
            if !outcome.exact_recovery {
                summary.failures += 1;
            }
            summary.node_error_sum += outcome.node_error_rate;
        }
        summary
    }

    fn cells(&self) -> Vec<Cell> {
        if !self.ran {
            return vec![
                Cell::UInt(0),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
            ];
        }
        let trials = self.samples as f64;
        let rate = self.failures as f64 / trials;
        let ci = 1.96 * (rate * (1.0 - rate) / trials).sqrt();
        vec![
            Cell::UInt(1),
            Cell::UInt(self.failures),
            Cell::Float(rate),
            Cell::Float(ci),
            Cell::Float(self.node_error_sum / trials),
        ]
    }
}

/// Monte Carlo experiment: per sweep point, samples coarse graphs through
/// the direct edge law, binarizes, runs the exhaustive search (when the
/// labeling count fits the enumeration cap) and the spectral baseline
/// (when `L >= K_nu`), and reports failure frequencies with normal CIs.
/// Trials parallelize freely because every trial's seed is derived from
/// (master seed, sweep index, trial index).
pub fn run_mc_experiment(config: &ExperimentConfig) -> Result<CsvTable> {
    let mut header: Vec<&str> = ECHO_HEADER.to_vec();
    header.extend_from_slice(&[
        "trials",
        "seed",
        "map_ran",
        "map_failures",
        "map_failure_rate",
        "map_failure_ci",
        "map_node_error_mean",
        "spectral_ran",
        "spectral_failures",
        "spectral_failure_rate",
        "spectral_failure_ci",
        "spectral_node_error_mean",
    ]);
    let mut table = CsvTable::new(&header);
    if config.trials == 0 {
        return Ok(table);
    }

    let params = SsbmParams::new(
        config.n,
        config.k_communities,
        config.alpha,
        config.beta,
        config.rho,
    )?;

    for (sweep_idx, (l, coverage)) in config.sweep_points().into_iter().enumerate() {
        check_supports_fit(config, l, coverage)?;
        let model = build_model(config, coverage)?;
        let prior = model.prior().to_vec();
        let profiles = model.profiles().to_vec();
        let map_feasible = (model.k_nu() as u128)
            .checked_pow(l as u32)
            .is_some_and(|count| count <= u128::from(DEFAULT_ENUMERATION_CAP));
        let spectral_feasible = l as usize >= model.k_nu();

        let outcomes: Vec<TrialOutcome> = (0..config.trials)
            .into_par_iter()
            .map(|trial| -> Result<TrialOutcome> {
                let seed = derive_seed(config.seed, TAG_MC ^ sweep_idx as u64, trial);
                let profile = sample_profile_matrix(
                    config.k_communities,
                    coverage,
                    config.nu,
                    l as usize,
                    &prior,
                    seed,
                )?;
                let coarse = sample_coarse_direct(&params, &profile, seed)?;
                let graph = binarize(&coarse, config.p(), config.q(), config.tau)?;
                let map = if map_feasible {
                    let estimate = map_exhaustive(&graph, &model)?;
                    Some(evaluate(&estimate, &profile, &profiles)?)
                } else {
                    None
                };
                let spectral = if spectral_feasible {
                    let estimate = spectral_baseline(&graph, &model)?;
                    Some(evaluate(&estimate, &profile, &profiles)?)
                } else {
                    None
                };
                Ok(TrialOutcome { map, spectral })
            })
            .collect::<Result<_>>()?;

        let map_summary = AlgorithmSummary::collect(outcomes.iter().map(|o| o.map.as_ref()));
        let spectral_summary =
            AlgorithmSummary::collect(outcomes.iter().map(|o| o.spectral.as_ref()));

        let mut row = echo_cells(config, l, coverage, &model);
        row.push(Cell::UInt(config.trials));
        row.push(Cell::UInt(config.seed));
        row.extend(map_summary.cells());
        row.extend(spectral_summary.cells());
        table.push(row);
    }
    Ok(table)
}

fn verdict_cells(verdict: &RegimeVerdict) -> (String, String) {
    match verdict {
        RegimeVerdict::Impossible => ("impossible".to_string(), String::new()),
        RegimeVerdict::PossibleIf(conditions) => {
            let rendered: Vec<String> = conditions
                .iter()
                .map(|c| match c.satisfied {
                    None => c.text.clone(),
                    Some(true) => format!("{} (holds)", c.text),
                    Some(false) => format!("{} (fails)", c.text),
                })
                .collect();
            ("possible_if".to_string(), rendered.join("; "))
        }
    }
}

/// Classifies the canonical scaling grid of both constraint families,
/// optionally evaluating the magnitude conditions at a concrete parameter
/// point taken from `config` (rates, community count, and the threshold
/// constant derived at the configured density cap).
pub fn run_regime_report(
    config: Option<&ExperimentConfig>,
) -> Result<(CsvTable, serde_json::Value)> {
    let constants = config.and_then(|c| {
        let delta =
            recovery_threshold_constants(c.alpha, c.beta, c.nu, c.tau, c.rho).ok()?;
        Some(RegimeConstants {
            alpha: c.alpha,
            beta: c.beta,
            k_communities: c.k_communities,
            delta: delta.delta,
        })
    });

    let mut table = CsvTable::new(&[
        "family",
        "rho_scaling",
        "coverage_scaling",
        "classic_verdict",
        "verdict",
        "conditions",
    ]);
    let mut json_rows = Vec::new();

    for family in [RegimeFamily::MultiOverlap, RegimeFamily::SingleOverlap] {
        let family_name = match family {
            RegimeFamily::MultiOverlap => "multi_overlap",
            RegimeFamily::SingleOverlap => "single_overlap",
        };
        for row in canonical_rows(family) {
            let CanonicalRow {
                rho_label,
                coverage_label,
                classic,
                rho,
                coverage,
            } = row;
            let verdict = classify_regime(rho, coverage, family, constants.as_ref())?;
            let (verdict_text, conditions_text) = verdict_cells(&verdict);
            table.push(vec![
                Cell::Text(family_name.to_string()),
                Cell::Text(rho_label.to_string()),
                Cell::Text(coverage_label.to_string()),
                Cell::Text(classic.to_string()),
                Cell::Text(verdict_text.clone()),
                Cell::Text(conditions_text),
            ]);
            json_rows.push(serde_json::json!({
                "family": family_name,
                "rho_scaling": rho_label,
                "coverage_scaling": coverage_label,
                "classic_verdict": classic,
                "verdict": verdict,
            }));
        }
    }
    let json = serde_json::json!({
        "constants": constants.as_ref().map(|c| serde_json::json!({
            "alpha": c.alpha,
            "beta": c.beta,
            "k_communities": c.k_communities,
            "delta": c.delta,
        })),
        "rows": json_rows,
    });
    Ok((table, json))
}

/// Samples one instance through the direct coarse edge law and writes it
/// to the output directory: the weighted coarse graph as CSV, its metadata
/// (including the generating profile matrix) as JSON, and the extended
/// model as JSON. Returns the written paths.
pub fn run_gen(config: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let (l, coverage) = config.sweep_points()[0];
    if config.swept() != SweptParam::None {
        return Err(Error::Parse(
            "gen needs fixed coarse.l and coarse.coverage, not a sweep".into(),
        ));
    }
    check_supports_fit(config, l, coverage)?;
    let model = build_model(config, coverage)?;
    let params = SsbmParams::new(
        config.n,
        config.k_communities,
        config.alpha,
        config.beta,
        config.rho,
    )?;
    let seed = derive_seed(config.seed, TAG_GEN, 0);
    let profile = sample_profile_matrix(
        config.k_communities,
        coverage,
        config.nu,
        l as usize,
        model.prior(),
        seed,
    )?;
    let coarse = sample_coarse_direct(&params, &profile, seed)?;

    std::fs::create_dir_all(&config.out_dir)?;
    let coarse_path = config.out_dir.join("coarse.csv");
    let meta_path = config.out_dir.join("coarse.meta.json");
    let model_path = config.out_dir.join("model.json");
    let mut coarse_file = std::fs::File::create(&coarse_path)?;
    coarse.write_csv(&mut coarse_file)?;
    std::fs::write(&meta_path, coarse.sidecar_json())?;
    std::fs::write(&model_path, model.to_json())?;
    Ok(vec![coarse_path, meta_path, model_path])
}

/// Fast built-in consistency battery: a few frozen identities checked at
/// runtime. Returns the list of check names; errors on the first failure.
pub fn run_selftest() -> Result<Vec<&'static str>> {
    let mut passed = Vec::new();

    // Tail probabilities: exact path brackets itself, normal path brackets
    // the exact value.
    let spec = PoissonBinomialSpec::new(40, 100, 0.7, 0.2)?;
    let exact = pb_tail(&spec, 55.0, 4096);
    let approx = pb_tail(&spec, 55.0, 0);
    if exact.method != TailMethod::ExactDp || approx.method != TailMethod::NormalApprox {
        return Err(Error::Domain("tail evaluation chose the wrong path".into()));
    }
    if !(approx.lower <= exact.mean && exact.mean <= approx.upper) {
        return Err(Error::Domain(
            "normal-approximation band missed the exact tail".into(),
        ));
    }
    passed.push("tail band brackets exact value");

    // Order-1/2 divergence: the closed form vanishes at equal rates and is
    // positive otherwise.
    if renyi_half_binomial(4, 0.3, 0.3)?.abs() > 1e-15
        || renyi_half_binomial(4, 0.7, 0.2)? <= 0.0
    {
        return Err(Error::Domain("divergence closed form misbehaved".into()));
    }
    passed.push("binomial divergence sanity");

    // Frozen single-cell divergence value.
    let ch = ch_divergence(&[0.9], &[0.1], &[1.0])?;
    if (ch.value - 0.206_405_703_456_127_7).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "single-cell divergence drifted: {}",
            ch.value
        )));
    }
    passed.push("frozen divergence cell");

    // Frozen counting-bound value.
    let counting = renyi_counting_bound(20, 2, 1.0)?;
    if (counting.raw_mean - 1.918_498_726_843_085_2).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "counting bound drifted: {}",
            counting.raw_mean
        )));
    }
    passed.push("frozen counting bound");

    // Determinism: the direct sampler repeats bit-for-bit.
    let params = SsbmParams::new(100, 2, 0.9, 0.05, 1.0)?;
    let profile = sample_profile_matrix(2, 4, 1, 5, &[0.5, 0.5], 7)?;
    let a = sample_coarse_direct(&params, &profile, 99)?;
    let b = sample_coarse_direct(&params, &profile, 99)?;
    if a != b {
        return Err(Error::Domain("direct sampler is not deterministic".into()));
    }
    passed.push("sampler determinism");

    Ok(passed)
}
