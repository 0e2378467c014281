//! Command-line front end.
//!
//! ```text
//! counterbalance authority     --trade T.csv --gdp G.csv [--aggregate A.toml] [--ratios]
//! counterbalance tradewar      --trade T.csv --gdp G.csv --actor USA --target CHN [--lambda gdp]
//! counterbalance globalization --trade T.csv --gdp G.csv --country CHN
//! counterbalance verify        [--trade T.csv --gdp G.csv] [--seeds 20]
//! ```
//!
//! Exit codes: 0 ok, 2 ingestion, 3 solver, 4 unknown country code,
//! 5 verification failure.

mod render;
mod report;

pub use render::{render, Format};
pub use report::{
    AuthorityReport, AuthorityRow, GlobalizationReport, RatioRow, Report, SkippedCase,
    TradeWarReport, VerifyReport,
};

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::authority::{solve, AuthorityVector};
use crate::oracle::{self, VerifyOptions, SWEEP_RULES};
use crate::policy::{
    globalization_stance, midpoint_resolution, rank_targets, side_effects, SideEffectReport,
    GLOBALIZATION_THRESHOLD, TRADE_WAR_THRESHOLD,
};
use crate::sensitivity::{ReactionRule, SensitivityEngine};
use crate::trade_matrix::{
    aggregate_regions, build_matrix, check_connectivity, load_gdp_path, load_trade_flows_path,
    AggregationMap, ConnectivityReport, CountryCode, CountryIndex, FlowSchema, MirrorPolicy,
    TradeMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Ok = 0,
    Ingestion = 2,
    Solver = 3,
    UnknownCode = 4,
    Verification = 5,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl CliError {
    fn new(code: ExitCode, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "counterbalance",
    version,
    about = "Authority distribution of trade networks and its sensitivities"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Equilibrium authority of every country.
    Authority {
        #[command(flatten)]
        common: CommonArgs,
        /// Also print the pi_j/pi_i and gdp_j/gdp_i grid.
        #[arg(long)]
        ratios: bool,
    },
    /// Elasticities of a trade war of ACTOR on imports from TARGET.
    Tradewar {
        #[command(flatten)]
        common: CommonArgs,
        /// Country cutting its imports.
        #[arg(long)]
        actor: String,
        /// Country whose exports are cut.
        #[arg(long)]
        target: String,
    },
    /// Elasticities of a change in COUNTRY's non-exported GDP share.
    Globalization {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        country: String,
    },
    /// Check analytic derivatives against finite differences.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Random fixtures per size.
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Fixture sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [3usize, 5, 10])]
        sizes: Vec<usize>,
        #[arg(long, hide = true)]
        corrupt_analytic: bool,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Bilateral export CSV.
    #[arg(long)]
    pub trade: Option<PathBuf>,
    /// GDP CSV.
    #[arg(long)]
    pub gdp: Option<PathBuf>,
    /// Region aggregation TOML.
    #[arg(long)]
    pub aggregate: Option<PathBuf>,
    /// Expected data year; ingestion fails if the files say otherwise.
    #[arg(long)]
    pub year: Option<i32>,
    /// gdp | authority | midpoint | a non-negative number.
    #[arg(long)]
    pub lambda: Option<ReactionRule>,
    /// Stance threshold on log-elasticities [default: 0.05 for tradewar, 0.01 for globalization]
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Decimal places in tables.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=12))]
    pub decimals: Option<u8>,
    /// Row order, comma separated ISO-3 codes; others follow alphabetically.
    #[arg(long, value_delimiter = ',')]
    pub order: Option<Vec<String>>,
    /// Name of a partner-declared value column to average with reporter exports.
    #[arg(long)]
    pub mirror: Option<String>,
    /// Proceed even if the network is not strongly connected.
    #[arg(long)]
    pub force: bool,
    /// TOML file with any of the options above; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Contents of a `--config` file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub trade: Option<PathBuf>,
    pub gdp: Option<PathBuf>,
    pub aggregate: Option<PathBuf>,
    pub year: Option<i32>,
    pub lambda: Option<String>,
    pub threshold: Option<f64>,
    pub format: Option<String>,
    pub decimals: Option<u8>,
    pub order: Option<Vec<String>>,
    pub force: Option<bool>,
    pub schema: Option<FlowSchema>,
}

/// Resolved options of one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub trade_path: Option<PathBuf>,
    pub gdp_path: Option<PathBuf>,
    pub aggregation_path: Option<PathBuf>,
    pub year: Option<i32>,
    /// `None` when neither flag nor config chose a rule.
    pub lambda: Option<ReactionRule>,
    pub threshold: Option<f64>,
    pub format: Format,
    pub decimals: usize,
    pub order: Vec<String>,
    pub force: bool,
    pub schema: FlowSchema,
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, CliError> {
        let file = match &args.config {
            Some(path) => read_config(path)?,
            None => ConfigFile::default(),
        };
        let lambda = match (&args.lambda, &file.lambda) {
            (Some(rule), _) => Some(*rule),
            (None, Some(text)) => Some(
                text.parse()
                    .map_err(|e: String| CliError::new(ExitCode::Ingestion, e))?,
            ),
            (None, None) => None,
        };
        let format = match (args.format, &file.format) {
            (Some(f), _) => f,
            (None, Some(text)) => <Format as clap::ValueEnum>::from_str(text, true)
                .map_err(|e| CliError::new(ExitCode::Ingestion, format!("config format: {e}")))?,
            (None, None) => Format::Table,
        };
        let decimals = args.decimals.or(file.decimals).unwrap_or(4);
        if !(1..=12).contains(&decimals) {
            return Err(CliError::new(
                ExitCode::Ingestion,
                format!("decimals must be in 1..=12, got {decimals}"),
            ));
        }
        let threshold = args.threshold.or(file.threshold);
        if let Some(t) = threshold {
            if !(t.is_finite() && t >= 0.0) {
                return Err(CliError::new(
                    ExitCode::Ingestion,
                    format!("threshold must be non-negative, got {t}"),
                ));
            }
        }
        let mut schema = file.schema.unwrap_or_default();
        if let Some(col) = &args.mirror {
            schema.mirror = Some(col.clone());
            schema.mirror_policy = MirrorPolicy::Average;
        }
        Ok(RunConfig {
            trade_path: args.trade.clone().or(file.trade),
            gdp_path: args.gdp.clone().or(file.gdp),
            aggregation_path: args.aggregate.clone().or(file.aggregate),
            year: args.year.or(file.year),
            lambda,
            threshold,
            format,
            decimals: decimals as usize,
            order: args.order.clone().or(file.order).unwrap_or_default(),
            force: args.force || file.force.unwrap_or(false),
            schema,
        })
    }

    pub fn has_data(&self) -> bool {
        self.trade_path.is_some() || self.gdp_path.is_some()
    }
}

fn read_config(path: &Path) -> Result<ConfigFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::new(
            ExitCode::Ingestion,
            format!("cannot read {}: {e}", path.display()),
        )
    })?;
    toml::from_str(&text)
        .map_err(|e| CliError::new(ExitCode::Ingestion, format!("{}: {e}", path.display())))
}

/// Matrix, equilibrium and diagnostics for one dataset.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub matrix: TradeMatrix,
    pub pi: AuthorityVector,
    pub connectivity: ConnectivityReport,
    pub year: Option<i32>,
}

fn ingestion(e: impl std::fmt::Display) -> CliError {
    CliError::new(ExitCode::Ingestion, e.to_string())
}

pub fn load(cfg: &RunConfig, err: &mut dyn Write) -> Result<Loaded, CliError> {
    let trade = cfg
        .trade_path
        .as_deref()
        .ok_or_else(|| ingestion("missing --trade FILE"))?;
    let gdp_path = cfg
        .gdp_path
        .as_deref()
        .ok_or_else(|| ingestion("missing --gdp FILE"))?;
    let mut flows = load_trade_flows_path(trade, &cfg.schema).map_err(ingestion)?;
    let mut gdp = load_gdp_path(gdp_path).map_err(ingestion)?;
    if let Some(path) = &cfg.aggregation_path {
        let map = AggregationMap::from_path(path).map_err(ingestion)?;
        let out = aggregate_regions(&flows, &gdp, &map).map_err(ingestion)?;
        for m in &out.missing_members {
            let _ = writeln!(
                err,
                "warning: aggregation member {m} not found in the data, skipped"
            );
        }
        flows = out.flows;
        gdp = out.gdp;
    }
    let year = flows.period.or(gdp.period);
    if let (Some(expected), Some(found)) = (cfg.year, year) {
        if expected != found {
            return Err(ingestion(format!(
                "data is for {found}, --year asks for {expected}"
            )));
        }
    }
    let index = CountryIndex::from_tables(&flows, &gdp);
    let matrix = build_matrix(&flows, &gdp, &index).map_err(ingestion)?;
    let connectivity = check_connectivity(&matrix);
    if !connectivity.well_connected() {
        let msg = connectivity_message(&connectivity);
        if !cfg.force {
            return Err(CliError::new(
                ExitCode::Solver,
                format!("{msg}; rerun with --force to try anyway"),
            ));
        }
        let _ = writeln!(err, "warning: {msg}");
    }
    let pi = solve(&matrix).map_err(|e| CliError::new(ExitCode::Solver, e.to_string()))?;
    Ok(Loaded {
        matrix,
        pi,
        connectivity,
        year: year.or(cfg.year),
    })
}

fn connectivity_message(c: &ConnectivityReport) -> String {
    let list = |v: &[CountryCode]| {
        v.iter()
            .map(CountryCode::as_str)
            .collect::<Vec<_>>()
            .join(" ")
    };
    if !c.strongly_connected {
        let mut msg = format!(
            "trade network is not strongly connected ({} components)",
            c.components.len()
        );
        if !c.isolated.is_empty() {
            msg += &format!("; isolated: {}", list(&c.isolated));
        }
        if !c.unreachable_from_giant.is_empty() {
            msg += &format!(
                "; unreachable from main component: {}",
                list(&c.unreachable_from_giant)
            );
        }
        if !c.not_reaching_giant.is_empty() {
            msg += &format!(
                "; not reaching main component: {}",
                list(&c.not_reaching_giant)
            );
        }
        msg
    } else {
        "trade network is periodic (no country keeps any GDP at home)".into()
    }
}

fn lookup(index: &CountryIndex, code: &str) -> Result<usize, CliError> {
    index.position_of(code).ok_or_else(|| {
        CliError::new(
            ExitCode::UnknownCode,
            format!("unknown country code {code:?}"),
        )
    })
}

fn order_codes(index: &CountryIndex, order: &[String]) -> Result<Vec<CountryCode>, CliError> {
    order
        .iter()
        .map(|c| lookup(index, c).map(|k| index.code(k)))
        .collect()
}

fn solver(e: impl std::fmt::Display) -> CliError {
    CliError::new(ExitCode::Solver, e.to_string())
}

pub fn cmd_authority(
    cfg: &RunConfig,
    with_ratios: bool,
    err: &mut dyn Write,
) -> Result<Report, CliError> {
    let data = load(cfg, err)?;
    let order = order_codes(data.matrix.index(), &cfg.order)?;
    Ok(Report::Authority(AuthorityReport::build(
        &data,
        with_ratios,
        &order,
    )))
}

pub fn cmd_tradewar(
    cfg: &RunConfig,
    actor: &str,
    target: &str,
    err: &mut dyn Write,
) -> Result<Report, CliError> {
    let data = load(cfg, err)?;
    let index = data.matrix.index();
    let (i, j) = (lookup(index, actor)?, lookup(index, target)?);
    if i == j {
        return Err(CliError::new(
            ExitCode::UnknownCode,
            format!("actor and target are both {actor}"),
        ));
    }
    let order = order_codes(index, &cfg.order)?;
    let rule = cfg.lambda.unwrap_or(ReactionRule::GdpRatio);
    let threshold = cfg.threshold.unwrap_or(TRADE_WAR_THRESHOLD);
    let engine = SensitivityEngine::new(&data.matrix, &data.pi);
    let targets = rank_targets(&engine, i, rule, threshold).map_err(solver)?;
    let classification = targets
        .iter()
        .find(|c| c.partner == index.code(j))
        .cloned()
        .expect("every partner ranked");
    let mut effects = side_effects(&engine, i, j, rule).map_err(solver)?;
    report::reorder(&mut effects.rows, |r| r.country, &order);
    let midpoint = midpoint_resolution(&engine, i, j).map_err(solver)?;
    Ok(Report::TradeWar(TradeWarReport {
        year: data.year,
        actor: index.code(i),
        target: index.code(j),
        rule,
        lambda: classification.lambda,
        threshold,
        classification,
        side_effects: effects,
        midpoint,
        targets,
    }))
}

pub fn cmd_globalization(
    cfg: &RunConfig,
    country: &str,
    err: &mut dyn Write,
) -> Result<Report, CliError> {
    let data = load(cfg, err)?;
    let index = data.matrix.index();
    let i = lookup(index, country)?;
    let order = order_codes(index, &cfg.order)?;
    let threshold = cfg.threshold.unwrap_or(GLOBALIZATION_THRESHOLD);
    let engine = SensitivityEngine::new(&data.matrix, &data.pi);
    let stance = globalization_stance(&engine, i, threshold).map_err(solver)?;
    let effects = |rule| -> Result<SideEffectReport, CliError> {
        let r = engine.globalization(i, rule).map_err(solver)?;
        let mut rep = SideEffectReport::from_result(&engine, &r);
        report::reorder(&mut rep.rows, |r| r.country, &order);
        Ok(rep)
    };
    let requested = match cfg.lambda {
        None | Some(ReactionRule::GdpRatio) | Some(ReactionRule::AuthorityRatio) => None,
        Some(rule) => Some(effects(rule)?),
    };
    Ok(Report::Globalization(GlobalizationReport {
        year: data.year,
        country: index.code(i),
        threshold,
        stance,
        authority_rule: effects(ReactionRule::AuthorityRatio)?,
        gdp_rule: effects(ReactionRule::GdpRatio)?,
        requested,
    }))
}

pub fn cmd_verify(
    cfg: &RunConfig,
    sizes: &[usize],
    seeds: u64,
    corrupt_analytic: bool,
    err: &mut dyn Write,
) -> Result<Report, CliError> {
    let opts = VerifyOptions {
        corrupt_analytic,
        ..VerifyOptions::default()
    };
    let rules: Vec<ReactionRule> = match cfg.lambda {
        Some(rule) => vec![rule],
        None => SWEEP_RULES.to_vec(),
    };
    if sizes.iter().any(|&n| n < 2) {
        return Err(ingestion("fixture sizes must be at least 2"));
    }
    let fixtures = oracle::verify_random(sizes, 0..seeds, &rules, &opts);
    let loaded = if cfg.has_data() {
        let data = load(cfg, err)?;
        Some(oracle::verify_all(&data.matrix, &rules, &opts))
    } else {
        None
    };
    Ok(Report::Verify(VerifyReport::build(
        &fixtures,
        loaded.as_deref(),
    )))
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<ExitCode, CliError> {
    let (common, report) = match &cli.command {
        Command::Authority { common, ratios } => {
            let cfg = RunConfig::resolve(common)?;
            (cfg.clone(), cmd_authority(&cfg, *ratios, err)?)
        }
        Command::Tradewar {
            common,
            actor,
            target,
        } => {
            let cfg = RunConfig::resolve(common)?;
            (cfg.clone(), cmd_tradewar(&cfg, actor, target, err)?)
        }
        Command::Globalization { common, country } => {
            let cfg = RunConfig::resolve(common)?;
            (cfg.clone(), cmd_globalization(&cfg, country, err)?)
        }
        Command::Verify {
            common,
            seeds,
            sizes,
            corrupt_analytic,
        } => {
            let cfg = RunConfig::resolve(common)?;
            (
                cfg.clone(),
                cmd_verify(&cfg, sizes, *seeds, *corrupt_analytic, err)?,
            )
        }
    };
    let text =
        render(&report, common.format, common.decimals).map_err(|e| ingestion(e.to_string()))?;
    out.write_all(text.as_bytes())
        .map_err(|e| ingestion(e.to_string()))?;
    match &report {
        Report::Verify(v) if !v.passed => Ok(ExitCode::Verification),
        _ => Ok(ExitCode::Ok),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                ExitCode::Ingestion
            } else {
                ExitCode::Ok
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(text.as_bytes())
            } else {
                out.write_all(text.as_bytes())
            };
            return code as i32;
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code as i32,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code as i32
        }
    }
}
