use std::path::PathBuf;

use calabi_bergman::profile::ProfileParams;
use calabi_bergman::riemann_roch::GeometryData;
use clap::Args;

use crate::table::Format;
use crate::CliError;

#[derive(Args, Debug, Clone)]
pub struct Flags {
    /// Complex dimension of D.
    #[arg(long, global = true, default_value_t = 1)]
    pub n: u32,
    /// Scalar curvature S_M (negative); excludes --genus/--degree.
    #[arg(long = "s-m", global = true, allow_hyphen_values = true)]
    pub s_m: Option<f64>,
    /// Genus of the curve D (n = 1).
    #[arg(long, global = true)]
    pub genus: Option<i64>,
    /// Degree of L on the curve D (n = 1).
    #[arg(long, global = true)]
    pub degree: Option<i64>,
    /// Power k of the line bundle (real valued).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub k: Option<f64>,
    /// Comma separated list of k values.
    #[arg(long = "k-list", global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub k_list: Option<Vec<f64>>,
    /// First band index to report.
    #[arg(long = "a-min", global = true)]
    pub a_min: Option<usize>,
    /// Last band index to report.
    #[arg(long = "a-max", global = true)]
    pub a_max: Option<usize>,
    /// Relative tolerance of band quadratures.
    #[arg(long = "quad-tol", global = true, default_value_t = 1e-10)]
    pub quad_tol: f64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Shorthand for --format json.
    #[arg(long, global = true)]
    pub json: bool,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    /// Seed of the sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ProfileParams,
    pub geometry: GeometryData,
    pub k: Option<f64>,
    pub k_list: Option<Vec<f64>>,
    pub a_min: Option<usize>,
    pub a_max: Option<usize>,
    pub quad_tol: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: usize,
    pub seed: u64,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

/// Smallest `L^n <= 10^4` making `L^(n-1).K_D = -S_M L^n / n` an integer.
fn geometry_for_curvature(n: u32, s_m: f64) -> Result<GeometryData, CliError> {
    for ln in 1..=10_000i64 {
        let lk = -s_m * ln as f64 / n as f64;
        let r = lk.round();
        if (lk - r).abs() <= 1e-9 * r.abs().max(1.0) {
            return GeometryData::new(n, ln, r as i64).map_err(CliError::from);
        }
    }
    Err(invalid(format!("no integral intersection data with L^n <= 10000 realizes S_M = {s_m}")))
}

impl RunConfig {
    pub fn from_flags(f: &Flags) -> Result<Self, CliError> {
        if f.threads == 0 {
            return Err(invalid("--threads must be at least 1"));
        }
        if !(f.quad_tol > 0.0 && f.quad_tol < 1e-2) {
            return Err(invalid("--quad-tol must lie in (0, 0.01)"));
        }
        let geometry = match (f.s_m, f.genus, f.degree) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(invalid("give either --s-m or --genus/--degree, not both"));
            }
            (Some(s), None, None) => {
                // Validates the sign before the search.
                ProfileParams::new(f.n, s)?;
                geometry_for_curvature(f.n, s)?
            }
            (None, Some(g), Some(d)) => {
                if f.n != 1 {
                    return Err(invalid("--genus/--degree describe a curve and need --n 1"));
                }
                GeometryData::curve(g, d)?
            }
            (None, None, None) => {
                if f.n != 1 {
                    return Err(invalid("--n > 1 needs --s-m"));
                }
                GeometryData::curve(2, 2)?
            }
            _ => return Err(invalid("--genus and --degree must be given together")),
        };
        let params = match f.s_m {
            Some(s) => ProfileParams::new(f.n, s)?,
            None => geometry.profile_params()?,
        };
        let check_k = |k: f64| {
            if k >= 1.0 && k.is_finite() {
                Ok(k)
            } else {
                Err(invalid(format!("k must be a finite value >= 1 (got {k})")))
            }
        };
        if let Some(k) = f.k {
            check_k(k)?;
        }
        if let Some(list) = &f.k_list {
            if list.is_empty() {
                return Err(invalid("--k-list is empty"));
            }
            for &k in list {
                check_k(k)?;
            }
        }
        if let (Some(lo), Some(hi)) = (f.a_min, f.a_max) {
            if lo > hi {
                return Err(invalid("--a-min exceeds --a-max"));
            }
        }
        if f.a_min == Some(0) {
            return Err(invalid("band indices start at 1"));
        }
        Ok(RunConfig {
            params,
            geometry,
            k: f.k,
            k_list: f.k_list.clone(),
            a_min: f.a_min,
            a_max: f.a_max,
            quad_tol: f.quad_tol,
            out: f.out.clone(),
            format: if f.json { Format::Json } else { f.format },
            threads: f.threads,
            seed: f.seed,
        })
    }

    /// Single k for commands working at one level.
    pub fn single_k(&self, default: f64) -> Result<f64, CliError> {
        match (&self.k, &self.k_list) {
            (Some(_), Some(_)) => Err(invalid("give --k or --k-list, not both")),
            (Some(k), None) => Ok(*k),
            (None, Some(list)) if list.len() == 1 => Ok(list[0]),
            (None, Some(_)) => Err(invalid("this command takes a single k")),
            (None, None) => Ok(default),
        }
    }

    pub fn k_values(&self, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match (&self.k, &self.k_list) {
            (Some(_), Some(_)) => Err(invalid("give --k or --k-list, not both")),
            (Some(k), None) => Ok(vec![*k]),
            (None, Some(list)) => Ok(list.clone()),
            (None, None) => Ok(default.to_vec()),
        }
    }

    /// Requested band range clipped to `1..=count`.
    pub fn band_range(&self, count: usize) -> std::ops::RangeInclusive<usize> {
        let lo = self.a_min.unwrap_or(1).max(1);
        let hi = self.a_max.unwrap_or(count).min(count);
        lo..=hi
    }
}
