use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secure_regen::{
    init_system, Construction, FieldElement, NestedMdsCode, PlacementMap, PrimeField,
    SystemHistory, SystemParams,
};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum ConstructionArg {
    #[default]
    Vandermonde,
    SystematicParity,
}

impl From<ConstructionArg> for Construction {
    fn from(c: ConstructionArg) -> Self {
        match c {
            ConstructionArg::Vandermonde => Construction::Vandermonde,
            ConstructionArg::SystematicParity => Construction::SystematicParity,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ParamArgs {
    /// Number of nodes.
    #[arg(short = 'n', default_value_t = 4)]
    pub n: usize,
    /// Nodes a collector contacts.
    #[arg(short = 'k', default_value_t = 3)]
    pub k: usize,
    /// Helpers per repair [default: n - 1].
    #[arg(short = 'd')]
    pub d: Option<usize>,
    /// Eavesdropper budget.
    #[arg(short = 'l', long = "ell", default_value_t = 2)]
    pub ell: usize,
    /// Symbols per helper per repair [default: Gamma / d, else 1].
    #[arg(long)]
    pub beta: Option<usize>,
    /// Symbols per node [default: Gamma].
    #[arg(long)]
    pub alpha: Option<usize>,
    /// Repair bandwidth cap [default: d * beta].
    #[arg(long)]
    pub gamma: Option<usize>,
    /// Field size, a prime [default: smallest prime >= n(n-1)/2].
    #[arg(short = 'q')]
    pub q: Option<u64>,
    #[arg(long, value_enum, default_value_t)]
    pub construction: ConstructionArg,
}

impl ParamArgs {
    pub fn resolve(&self) -> Result<SystemParams, CliError> {
        let n = self.n;
        let d = self.d.unwrap_or(n.saturating_sub(1));
        let beta = match (self.beta, self.gamma) {
            (Some(b), _) => b,
            (None, Some(g)) if d > 0 && g % d == 0 => g / d,
            (None, Some(g)) => {
                return Err(CliError::Validation(format!(
                    "parameter violation: Gamma = {g} is not a multiple of d = {d}"
                )))
            }
            (None, None) => 1,
        };
        let cap = self.gamma.unwrap_or(d * beta);
        let mut params = SystemParams {
            n,
            k: self.k,
            d,
            ell: self.ell,
            beta,
            alpha: self.alpha.unwrap_or(cap),
            gamma: d * beta,
            bandwidth_cap: cap,
            q: 2,
        };
        params.validate()?;
        params.q = match self.q {
            Some(q) => PrimeField::new(q)?.modulus(),
            None => PrimeField::smallest_at_least((n * (n - 1) / 2).max(2) as u64)?.modulus(),
        };
        Ok(params)
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stripes per file; must equal beta [default: beta].
    #[arg(long)]
    pub stripes: Option<usize>,
    /// Vertices to fail in order: inline "4,4,1", a JSON array, or a file
    /// holding either or {"trace": [...]}.
    #[arg(long)]
    pub trace: Option<String>,
    /// Secret as comma-separated hex field elements, or @path to a file of
    /// them [default: random from the seed].
    #[arg(long)]
    pub secret: Option<String>,
}

/// Fully validated inputs of a run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: SystemParams,
    pub construction: Construction,
    pub seed: u64,
    pub stripes: usize,
    pub trace: Vec<usize>,
    pub secret: Vec<FieldElement>,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let params = args.params.resolve()?;
        params.check_secure_construction()?;
        let stripes = args.stripes.unwrap_or(params.beta);
        if stripes != params.beta {
            return Err(CliError::Validation(format!(
                "parameter violation: stripes = {stripes} must equal beta = {}",
                params.beta
            )));
        }
        let trace = match &args.trace {
            Some(t) => parse_trace(t)?,
            None => Vec::new(),
        };
        if let Some(&bad) = trace.iter().find(|&&v| v == 0 || v > params.n) {
            return Err(CliError::Validation(format!(
                "trace vertex {bad} outside 1..={}",
                params.n
            )));
        }
        let field = PrimeField::new(params.q)?;
        let r = secure_regen::CodeParams::new(params.n, params.k, params.ell)?.r;
        let secret = match &args.secret {
            Some(s) => parse_secret(s, field)?,
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x5EC2E7);
                (0..r * stripes)
                    .map(|_| field.elem(rng.gen_range(0..field.modulus())))
                    .collect()
            }
        };
        Ok(RunConfig {
            params,
            construction: args.params.construction.into(),
            seed: args.seed,
            stripes,
            trace,
            secret,
        })
    }

    pub fn code(&self) -> Result<NestedMdsCode, CliError> {
        let p = &self.params;
        Ok(NestedMdsCode::build(
            self.construction,
            p.n,
            p.k,
            p.ell,
            p.q,
        )?)
    }

    /// Fresh system with the configured secret, before any failure.
    pub fn init(&self) -> Result<SystemHistory, CliError> {
        Ok(init_system(
            self.params,
            self.code()?,
            PlacementMap::new(self.params.n)?,
            &self.secret,
            self.seed,
        )?)
    }

    pub fn run(&self) -> Result<SystemHistory, CliError> {
        let mut h = self.init()?;
        for &v in &self.trace {
            h.fail_and_repair(v)?;
        }
        Ok(h)
    }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TraceFile {
    List(Vec<usize>),
    Object { trace: Vec<usize> },
}

pub fn parse_trace(arg: &str) -> Result<Vec<usize>, CliError> {
    let path = PathBuf::from(arg);
    let text = if !arg.is_empty() && path.is_file() {
        read_file(&path)?
    } else {
        arg.to_string()
    };
    let text = text.trim();
    if text.starts_with('[') || text.starts_with('{') {
        let parsed: TraceFile = serde_json::from_str(text)
            .map_err(|e| CliError::Validation(format!("bad trace: {e}")))?;
        return Ok(match parsed {
            TraceFile::List(t) | TraceFile::Object { trace: t } => t,
        });
    }
    parse_list(text, |tok| tok.parse::<usize>().ok(), "trace vertex")
}

pub fn parse_ids(arg: &str) -> Result<Vec<usize>, CliError> {
    parse_list(
        arg,
        |tok| tok.trim_start_matches('v').parse().ok(),
        "node id",
    )
}

pub fn parse_secret(arg: &str, field: PrimeField) -> Result<Vec<FieldElement>, CliError> {
    let text = match arg.strip_prefix('@') {
        Some(path) => read_file(Path::new(path))?,
        None => arg.to_string(),
    };
    let q = field.modulus();
    let values = parse_list(
        text.trim(),
        |tok| {
            let digits = tok.trim_start_matches("0x").trim_start_matches("0X");
            u64::from_str_radix(digits, 16).ok()
        },
        "hex symbol",
    )?;
    if values.is_empty() {
        return Err(CliError::Validation("empty secret".into()));
    }
    if let Some(v) = values.iter().find(|&&v| v >= q) {
        return Err(CliError::Validation(format!(
            "secret symbol {v:#x} is not below q = {q}"
        )));
    }
    Ok(field.vector(&values))
}

fn parse_list<T>(
    text: &str,
    parse: impl Fn(&str) -> Option<T>,
    what: &str,
) -> Result<Vec<T>, CliError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|tok| parse(tok).ok_or_else(|| CliError::Validation(format!("bad {what} {tok:?}"))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(n: usize, k: usize, ell: usize) -> ParamArgs {
        ParamArgs {
            n,
            k,
            d: None,
            ell,
            beta: None,
            alpha: None,
            gamma: None,
            q: None,
            construction: ConstructionArg::Vandermonde,
        }
    }

    #[test]
    fn defaults_give_the_secure_operating_point() {
        let p = args(4, 3, 2).resolve().unwrap();
        assert_eq!(
            (p.d, p.beta, p.alpha, p.bandwidth_cap, p.q),
            (3, 1, 3, 3, 7)
        );
        let mut a = args(5, 3, 1);
        a.gamma = Some(8);
        let p = a.resolve().unwrap();
        assert_eq!((p.beta, p.alpha, p.q), (2, 8, 11));
        a.gamma = Some(7);
        assert!(a.resolve().is_err());
        let mut a = args(4, 3, 2);
        a.q = Some(8);
        assert!(a.resolve().is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_trace("4, 4,1").unwrap(), vec![4, 4, 1]);
        assert_eq!(parse_trace("[2,3]").unwrap(), vec![2, 3]);
        assert_eq!(parse_trace(r#"{"trace":[1]}"#).unwrap(), vec![1]);
        assert_eq!(parse_trace("").unwrap(), Vec::<usize>::new());
        assert!(parse_trace("1,x").is_err());
        assert_eq!(parse_ids("v5,6").unwrap(), vec![5, 6]);
        let f = PrimeField::new(65521).unwrap();
        assert_eq!(
            parse_secret("0x1f, a,0", f).unwrap(),
            f.vector(&[31, 10, 0])
        );
        assert!(parse_secret("fff1", f).is_err());
        assert!(parse_secret("", f).is_err());
    }
}
