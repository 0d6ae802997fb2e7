use std::fmt;
use std::str::FromStr;

use fsbench_core::{Method, Pipeline};

use crate::error::CliError;

/// A method named on the command line or in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MethodSpec {
    Classical(Method),
    /// `llm:<provider>[/<model>][/<pipeline>]`; the pipeline defaults to
    /// hybrid and the model to the provider's configured one.
    Llm {
        provider: String,
        model: Option<String>,
        pipeline: Pipeline,
    },
}

/// Shorthands for common mock runs.
const ALIASES: [(&str, &str); 2] = [("mock-rf-hybrid", "llm:mock-rf/hybrid"), ("mock-rf-direct", "llm:mock-rf/direct")];

pub fn supported() -> String {
    format!(
        "{}, llm:<provider>[/<model>][/<direct|hybrid>], {}",
        Method::expected_names(),
        ALIASES.map(|a| a.0).join(", ")
    )
}

fn unknown(s: &str) -> CliError {
    CliError::config(format!("unknown method `{s}`; supported: {}", supported()))
}

impl FromStr for MethodSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = ALIASES.iter().find(|a| a.0 == s).map_or(s, |a| a.1);
        let Some(rest) = s.strip_prefix("llm:") else {
            return s.parse().map(MethodSpec::Classical).map_err(|_| unknown(s));
        };
        let mut parts: Vec<&str> = rest.split('/').collect();
        if parts.iter().any(|p| p.is_empty()) || parts.len() > 3 {
            return Err(unknown(s));
        }
        let pipeline = match parts.last().map(|p| p.parse::<Pipeline>()) {
            Some(Ok(p)) if parts.len() > 1 => {
                parts.pop();
                p
            }
            _ if parts.len() == 3 => return Err(unknown(s)),
            _ => Pipeline::Hybrid,
        };
        Ok(MethodSpec::Llm {
            provider: parts[0].to_string(),
            model: parts.get(1).map(|m| m.to_string()),
            pipeline,
        })
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Classical(m) => write!(f, "{m}"),
            MethodSpec::Llm { provider, model, pipeline } => {
                write!(f, "llm:{provider}")?;
                if let Some(m) = model {
                    write!(f, "/{m}")?;
                }
                write!(f, "/{pipeline}")
            }
        }
    }
}
