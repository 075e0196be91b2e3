//! Spec files: the representative format plus experiment lines.
//!
//! ```text
//! params depth=4 power-max=15 tol=1e-6 n-max=20 seed=7
//! alpha  c
//! sample c ; d ; c d'
//! ```
//!
//! These lines are blanked before the representative is parsed so that parse
//! errors keep their line numbers.

use anyhow::{anyhow, bail, Result};
use reltrack::graphmap::{parse_rep, GraphMapRep};

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Params {
    pub depth: Option<usize>,
    pub power_max: Option<usize>,
    pub n_max: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct SpecFile {
    pub rep: GraphMapRep,
    pub params: Params,
    pub alpha: Option<String>,
    pub sample: Vec<String>,
}

fn number<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| anyhow!("line {line}: `{key}` expects a number, got `{v}`"))
}

fn parse_params(rest: &str, line: usize, p: &mut Params) -> Result<()> {
    for item in rest.split_whitespace() {
        let (k, v) = item.split_once('=').ok_or_else(|| anyhow!("line {line}: expected key=value, got `{item}`"))?;
        match k {
            "depth" => p.depth = Some(number(line, k, v)?),
            "power-max" => p.power_max = Some(number(line, k, v)?),
            "n-max" => p.n_max = Some(number(line, k, v)?),
            "tol" => p.tol = Some(number(line, k, v)?),
            "seed" => p.seed = Some(number(line, k, v)?),
            other => bail!("line {line}: unknown params key `{other}`"),
        }
    }
    Ok(())
}

pub fn parse(text: &str) -> Result<SpecFile> {
    let mut params = Params::default();
    let mut alpha = None;
    let mut sample = Vec::new();
    let mut seen = [false; 3];
    let mut rest_lines = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let (keyword, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
        let slot = match keyword {
            "params" => 0,
            "alpha" => 1,
            "sample" => 2,
            _ => {
                rest_lines.push(raw);
                continue;
            }
        };
        if std::mem::replace(&mut seen[slot], true) {
            bail!("line {line}: duplicate `{keyword}` line");
        }
        let rest = rest.trim();
        match slot {
            0 => parse_params(rest, line, &mut params)?,
            1 if rest.is_empty() => bail!("line {line}: `alpha` needs a word"),
            1 => alpha = Some(rest.to_string()),
            _ => sample = split_sample(rest),
        }
        rest_lines.push("");
    }
    let rep = parse_rep(&rest_lines.join("\n")).map_err(|e| anyhow!("{e}"))?;
    Ok(SpecFile { rep, params, alpha, sample })
}

/// Splits `w1 ; w2 ; ...`, dropping empty entries.
pub fn split_sample(text: &str) -> Vec<String> {
    text.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}
