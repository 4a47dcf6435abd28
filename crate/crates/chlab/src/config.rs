//! Flags and `--config` files, merged into a validated [`RunConfig`].
//!
//! Precedence for every field is flag, then config file, then default. The
//! one exception is `max_nodes`, where `CHLAB_MAX_NODES` sits between the flag
//! and the file.

use std::path::{Path, PathBuf};

use chlab_core::bounds::{near_p_minus, near_p_plus};
use chlab_core::operators::{Operator, WeightSpec};
use chlab_core::{FunctionSpec, OperatorParams, QuadratureSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;
use crate::io::{FunctionJson, FunctionRef, PsiJson, QuadJson};

pub const MAX_NODES_ENV: &str = "CHLAB_MAX_NODES";

#[derive(Debug, Parser)]
#[command(name = "chlab", version, about = "Generalized Cesaro-Hardy operator laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Print kappa and the critical exponents
    Params(Opts),
    /// Evaluate U f or W f at points --x
    Apply(Opts),
    /// L_p norms of f (or of its image with --image)
    Norm(Opts),
    /// Grand Lebesgue norm of f; with --transfer also of U f under psi_K
    GlsNorm(Opts),
    /// Ratio sweep |T f|_q / |f|_p with the Gamma upper bound
    Sweep(Opts),
    /// Fit ratio ~ C |p - endpoint|^e from a sweep CSV or a fresh sweep
    FitBlowup(Opts),
    /// Compare |U[f(g.)]|_q / |U f|_q with g^(kappa-1-1/q)
    VerifyScaling(Opts),
    /// Convolution ratio |V_S f|_p / |f|_p against L p^2/(p-1)
    HardyCheck(Opts),
    /// Ratio sweep of the conjugate operator towards p_+
    ConjugateSweep(Opts),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Params,
    Apply,
    Norm,
    GlsNorm,
    Sweep,
    FitBlowup,
    VerifyScaling,
    HardyCheck,
    ConjugateSweep,
}

impl CommandArgs {
    pub fn split(self) -> (Command, Opts) {
        match self {
            CommandArgs::Params(o) => (Command::Params, o),
            CommandArgs::Apply(o) => (Command::Apply, o),
            CommandArgs::Norm(o) => (Command::Norm, o),
            CommandArgs::GlsNorm(o) => (Command::GlsNorm, o),
            CommandArgs::Sweep(o) => (Command::Sweep, o),
            CommandArgs::FitBlowup(o) => (Command::FitBlowup, o),
            CommandArgs::VerifyScaling(o) => (Command::VerifyScaling, o),
            CommandArgs::HardyCheck(o) => (Command::HardyCheck, o),
            CommandArgs::ConjugateSweep(o) => (Command::ConjugateSweep, o),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum OpName {
    #[value(name = "U", alias = "u")]
    U,
    #[value(name = "W", alias = "w")]
    W,
}

impl From<OpName> for Operator {
    fn from(o: OpName) -> Self {
        match o {
            OpName::U => Operator::U,
            OpName::W => Operator::W,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    /// JSON config file; flags override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Built-in function: f0, fdeltatheta[:theta], gplus, indicator[:lo:hi], power:a, powerlog:a:theta
    #[arg(long = "f")]
    pub function: Option<String>,
    /// Function as JSON, inline or a path to a file
    #[arg(long)]
    pub f_json: Option<String>,
    /// Psi weight as JSON, inline or a path to a file
    #[arg(long)]
    pub psi: Option<String>,
    /// Exponents p, comma-separated
    #[arg(long = "p", value_delimiter = ',', allow_negative_numbers = true)]
    pub p_values: Option<Vec<f64>>,
    /// Use p = p_- + 10^-k, k = 1..N
    #[arg(long)]
    pub p_near_pminus: Option<u32>,
    /// Use p = p_+ - 10^-k, k = 1..N
    #[arg(long)]
    pub p_near_pplus: Option<u32>,
    /// Evaluation points for apply
    #[arg(long = "x", value_delimiter = ',')]
    pub x_values: Option<Vec<f64>>,
    /// Dilation factors for verify-scaling
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub op: Option<OpName>,
    /// For norm: take the norm of T f at q(p)
    #[arg(long, value_enum)]
    pub image: Option<OpName>,
    /// For gls-norm: also compute the norm of U f under the transferred weight
    #[arg(long)]
    pub transfer: bool,
    /// Convolution weight: constant or power:e
    #[arg(long)]
    pub weight: Option<String>,
    /// Endpoint for fit-blowup (default p_- for U, p_+ for W)
    #[arg(long)]
    pub endpoint: Option<f64>,
    /// Sweep CSV to fit
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Output file (default stdout)
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Exponent grid size for GLS norms
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub abs_tol: Option<f64>,
    #[arg(long)]
    pub max_nodes: Option<usize>,
    #[arg(long)]
    pub tail_cut: Option<f64>,
    /// Write a plotting script next to the output file
    #[arg(long)]
    pub emit_plot_script: bool,
}

/// Everything a run can be configured with; also the config-file schema and
/// the echo in JSON output.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<FunctionRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<PsiJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_near_pminus: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_near_pplus: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op: Option<OpName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<OpName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_format: Option<OutputFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emit_plot_script: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad: Option<QuadJson>,
}

/// Inline JSON if it looks like an object, otherwise a file path.
fn inline_or_file(arg: &str) -> Result<String, CliError> {
    if arg.trim_start().starts_with('{') {
        Ok(arg.to_string())
    } else {
        std::fs::read_to_string(arg).map_err(|e| CliError::Config(format!("cannot read {arg}: {e}")))
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(what: &str, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid {what}: {e}")))
}

pub fn read_config_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    parse_json("config file", &text)
}

/// Overlay flags on a file config.
pub fn merge(command: Command, opts: &Opts, env_max_nodes: Option<&str>) -> Result<FileConfig, CliError> {
    let mut c = match &opts.config {
        Some(path) => read_config_file(path)?,
        None => FileConfig::default(),
    };
    if let Some(cmd) = c.command {
        if cmd != command {
            return Err(CliError::Config(format!(
                "config file is for command {cmd:?}, but {command:?} was requested"
            )));
        }
    }
    c.command = Some(command);
    macro_rules! over {
        ($($field:ident <- $flag:expr),* $(,)?) => {
            $(if let Some(v) = $flag.clone() { c.$field = Some(v); })*
        };
    }
    over!(
        alpha <- opts.alpha,
        beta <- opts.beta,
        lambda <- opts.lambda,
        p_values <- opts.p_values,
        p_near_pminus <- opts.p_near_pminus,
        p_near_pplus <- opts.p_near_pplus,
        x_values <- opts.x_values,
        gamma <- opts.gamma,
        op <- opts.op,
        image <- opts.image,
        weight <- opts.weight,
        endpoint <- opts.endpoint,
        input <- opts.input,
        output_path <- opts.output,
        output_format <- opts.format,
        grid <- opts.grid,
    );
    if opts.function.is_some() && opts.f_json.is_some() {
        return Err(CliError::Config("give either --f or --f-json, not both".into()));
    }
    if let Some(name) = &opts.function {
        c.function = Some(FunctionRef::Name(name.clone()));
    }
    if let Some(arg) = &opts.f_json {
        let j: FunctionJson = parse_json("--f-json", &inline_or_file(arg)?)?;
        c.function = Some(FunctionRef::Spec(j));
    }
    if let Some(arg) = &opts.psi {
        c.psi = Some(parse_json("--psi", &inline_or_file(arg)?)?);
    }
    // a flag-level p source replaces every p source of the file
    if opts.p_values.is_some() || opts.p_near_pminus.is_some() || opts.p_near_pplus.is_some() {
        if opts.p_values.is_none() {
            c.p_values = None;
        }
        if opts.p_near_pminus.is_none() {
            c.p_near_pminus = None;
        }
        if opts.p_near_pplus.is_none() {
            c.p_near_pplus = None;
        }
    }
    if opts.transfer {
        c.transfer = Some(true);
    }
    if opts.emit_plot_script {
        c.emit_plot_script = Some(true);
    }
    let mut quad = c.quad.take().unwrap_or_default();
    if let Some(env) = env_max_nodes {
        let n = env
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{MAX_NODES_ENV} must be a positive integer, got '{env}'")))?;
        quad.max_nodes = Some(n);
    }
    over_quad(&mut quad, opts);
    if quad != QuadJson::default() {
        c.quad = Some(quad);
    }
    Ok(c)
}

fn over_quad(q: &mut QuadJson, opts: &Opts) {
    if opts.rel_tol.is_some() {
        q.rel_tol = opts.rel_tol;
    }
    if opts.abs_tol.is_some() {
        q.abs_tol = opts.abs_tol;
    }
    if opts.max_nodes.is_some() {
        q.max_nodes = opts.max_nodes;
    }
    if opts.tail_cut.is_some() {
        q.tail_cut = opts.tail_cut;
    }
}

#[derive(Debug, Clone)]
pub enum WeightChoice {
    Constant,
    Power(f64),
}

impl WeightChoice {
    pub fn to_spec(&self) -> Result<WeightSpec, CliError> {
        Ok(match self {
            WeightChoice::Constant => WeightSpec::constant(),
            WeightChoice::Power(e) => WeightSpec::power(*e)?,
        })
    }
}

fn parse_weight(s: &str) -> Result<WeightChoice, CliError> {
    match s.split_once(':') {
        None if s == "constant" => Ok(WeightChoice::Constant),
        Some(("power", e)) => e
            .parse()
            .map(WeightChoice::Power)
            .map_err(|_| CliError::Config(format!("weight power '{e}' is not a number"))),
        _ => Err(CliError::Config(format!("unknown weight '{s}'; expected constant or power:e"))),
    }
}

/// A validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub params: OperatorParams,
    pub function: Option<FunctionSpec>,
    pub psi: Option<PsiJson>,
    pub p_values: Option<Vec<f64>>,
    pub x_values: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    pub op: Operator,
    pub image: Option<Operator>,
    pub transfer: bool,
    pub weight: WeightChoice,
    pub endpoint: Option<f64>,
    pub input: Option<PathBuf>,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub grid: usize,
    pub emit_plot_script: bool,
    pub quad: QuadratureSpec,
    /// The merged configuration, echoed in JSON output.
    pub echo: Value,
}

fn missing(command: Command, what: &str) -> CliError {
    CliError::Config(format!("{} needs {what}", serde_json::to_value(command).unwrap_or_default()))
}

impl RunConfig {
    pub fn from_file_config(c: &FileConfig) -> Result<Self, CliError> {
        let command = c.command.ok_or_else(|| CliError::Config("no command given".into()))?;
        let (Some(alpha), Some(beta), Some(lambda)) = (c.alpha, c.beta, c.lambda) else {
            return Err(missing(command, "--alpha, --beta and --lambda"));
        };
        let params = OperatorParams::new(alpha, beta, lambda).map_err(|e| CliError::Config(e.to_string()))?;
        let quad = c
            .quad
            .clone()
            .unwrap_or_default()
            .to_spec()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let function = match &c.function {
            Some(r) => Some(r.resolve(&params).map_err(|e| match e {
                CliError::Compute(e) => CliError::Config(format!("function: {e}")),
                other => other,
            })?),
            None => None,
        };
        let sources = [c.p_values.is_some(), c.p_near_pminus.is_some(), c.p_near_pplus.is_some()];
        if sources.iter().filter(|s| **s).count() > 1 {
            return Err(CliError::Config(
                "give only one of --p, --p-near-pminus, --p-near-pplus".into(),
            ));
        }
        let p_values = match (&c.p_values, c.p_near_pminus, c.p_near_pplus) {
            (Some(v), _, _) => Some(v.clone()),
            (_, Some(n), _) => Some(near_p_minus(&params, n)),
            (_, _, Some(n)) => Some(near_p_plus(&params, n)),
            _ => None,
        };
        if p_values.as_ref().is_some_and(|v| v.is_empty()) {
            return Err(CliError::Config("the p list is empty".into()));
        }
        let weight = match &c.weight {
            Some(w) => parse_weight(w)?,
            None => WeightChoice::Constant,
        };
        let default_format = match command {
            Command::Params | Command::FitBlowup => OutputFormat::Json,
            _ => OutputFormat::Csv,
        };
        let grid = c.grid.unwrap_or(chlab_core::norms::DEFAULT_GRID);
        if grid < 2 {
            return Err(CliError::Config("--grid must be at least 2".into()));
        }
        let emit_plot_script = c.emit_plot_script.unwrap_or(false);
        if emit_plot_script && c.output_path.is_none() {
            return Err(CliError::Config("--emit-plot-script needs --output".into()));
        }
        let cfg = RunConfig {
            command,
            params,
            function,
            psi: c.psi.clone(),
            p_values,
            x_values: c.x_values.clone(),
            gamma: c.gamma.clone(),
            op: c.op.map_or(Operator::U, Operator::from),
            image: c.image.map(Operator::from),
            transfer: c.transfer.unwrap_or(false),
            weight,
            endpoint: c.endpoint,
            input: c.input.clone(),
            output_path: c.output_path.clone(),
            output_format: c.output_format.unwrap_or(default_format),
            grid,
            emit_plot_script,
            quad,
            echo: serde_json::to_value(c).unwrap_or_default(),
        };
        cfg.check_required()?;
        Ok(cfg)
    }

    /// Per-command required fields, checked before any computation.
    fn check_required(&self) -> Result<(), CliError> {
        let cmd = self.command;
        let need_f = || self.function.is_some().then_some(()).ok_or_else(|| missing(cmd, "a function (--f or --f-json)"));
        let need_p = || self.p_values.is_some().then_some(()).ok_or_else(|| missing(cmd, "exponents (--p or --p-near-pminus)"));
        match cmd {
            Command::Params => {}
            Command::Apply => {
                need_f()?;
                if self.x_values.as_ref().is_none_or(|x| x.is_empty()) {
                    return Err(missing(cmd, "points --x"));
                }
            }
            Command::Norm | Command::Sweep | Command::HardyCheck => {
                need_f()?;
                need_p()?;
            }
            Command::GlsNorm => {
                need_f()?;
                if self.psi.is_none() {
                    return Err(missing(cmd, "a weight --psi"));
                }
            }
            Command::FitBlowup => {
                if self.input.is_none() {
                    need_f()?;
                    need_p()?;
                }
            }
            Command::VerifyScaling => {
                need_f()?;
                need_p()?;
                if self.gamma.as_ref().is_none_or(|g| g.is_empty()) {
                    return Err(missing(cmd, "dilation factors --gamma"));
                }
            }
            Command::ConjugateSweep => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> Opts {
        Opts {
            alpha: Some(0.3),
            beta: Some(0.2),
            lambda: Some(0.2),
            ..Default::default()
        }
    }

    #[test]
    fn required_fields() {
        let c = merge(Command::Sweep, &opts(), None).unwrap();
        assert!(matches!(RunConfig::from_file_config(&c), Err(CliError::Config(_))));
        let mut o = opts();
        o.function = Some("f0".into());
        o.p_near_pminus = Some(4);
        let c = merge(Command::Sweep, &o, None).unwrap();
        let r = RunConfig::from_file_config(&c).unwrap();
        assert_eq!(r.p_values.unwrap().len(), 4);
        assert_eq!(r.output_format, OutputFormat::Csv);
    }

    #[test]
    fn bad_params_are_config_errors() {
        let mut o = opts();
        o.alpha = Some(0.7);
        let c = merge(Command::Params, &o, None).unwrap();
        assert!(matches!(RunConfig::from_file_config(&c), Err(CliError::Config(_))));
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(
            &path,
            r#"{"alpha":0.5,"beta":0.2,"lambda":0.2,"p_near_pminus":3,"function":"f0","quad":{"max_nodes":512}}"#,
        )
        .unwrap();
        let mut o = Opts {
            config: Some(path),
            alpha: Some(0.3),
            p_values: Some(vec![1.6, 1.8]),
            ..Default::default()
        };
        let c = merge(Command::Sweep, &o, Some("1024")).unwrap();
        let r = RunConfig::from_file_config(&c).unwrap();
        assert_eq!(r.params.alpha(), 0.3);
        assert_eq!(r.params.beta(), 0.2);
        assert_eq!(r.p_values.unwrap(), vec![1.6, 1.8]);
        assert_eq!(r.quad.max_nodes, 1024);
        o.max_nodes = Some(64);
        let c = merge(Command::Sweep, &o, Some("1024")).unwrap();
        assert_eq!(RunConfig::from_file_config(&c).unwrap().quad.max_nodes, 64);
        assert!(merge(Command::Sweep, &o, Some("lots")).is_err());
    }

    #[test]
    fn unknown_file_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"alpha":0.3,"colour":"red"}"#).unwrap();
        let o = Opts {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(merge(Command::Params, &o, None), Err(CliError::Config(_))));
    }

    #[test]
    fn weights() {
        assert!(matches!(parse_weight("constant"), Ok(WeightChoice::Constant)));
        assert!(matches!(parse_weight("power:-0.5"), Ok(WeightChoice::Power(e)) if e == -0.5));
        assert!(parse_weight("power").is_err());
    }
}
