//! Kernel menus, resolved per data set because Gaussian bandwidths scale with
//! the median heuristic.

use crate::error::{Error, Result};
use crate::kernels::{median_heuristic, KernelSpec, Sample, MEDIAN_HEURISTIC_CAP};
use std::fmt;
use std::str::FromStr;

const D6_MULTIPLIERS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Debug, Clone, PartialEq)]
pub enum MenuItem {
    Fixed(KernelSpec),
    /// Gaussian with bandwidth `multiplier · σ̃`.
    GaussianMedian(f64),
}

impl fmt::Display for MenuItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MenuItem::Fixed(k) => write!(f, "{k}"),
            MenuItem::GaussianMedian(m) => write!(f, "gaussian_median:{m}"),
        }
    }
}

impl FromStr for MenuItem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(m) = s.strip_prefix("gaussian_median:") {
            let m: f64 = m
                .parse()
                .map_err(|_| Error::domain(format!("bad bandwidth multiplier in '{s}'")))?;
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::domain(format!("multiplier must be positive in '{s}'")));
            }
            return Ok(MenuItem::GaussianMedian(m));
        }
        if s == "gaussian_median" {
            return Ok(MenuItem::GaussianMedian(1.0));
        }
        Ok(MenuItem::Fixed(s.parse()?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum KernelMenuSpec {
    /// `[k_σ̃]`
    D1,
    /// `[k_σ̃, k_lin]`
    D2,
    /// Gaussians at `(0.25, 0.5, 1, 2, 4)·σ̃` and `k_lin`.
    D6,
    /// Homogeneous polynomials of degrees `1..=d`.
    Poly(u32),
    Explicit(Vec<MenuItem>),
}

impl KernelMenuSpec {
    pub fn items(&self) -> Vec<MenuItem> {
        let lin = MenuItem::Fixed(KernelSpec::Linear);
        match self {
            KernelMenuSpec::D1 => vec![MenuItem::GaussianMedian(1.0)],
            KernelMenuSpec::D2 => vec![MenuItem::GaussianMedian(1.0), lin],
            KernelMenuSpec::D6 => D6_MULTIPLIERS
                .iter()
                .map(|&m| MenuItem::GaussianMedian(m))
                .chain(std::iter::once(lin))
                .collect(),
            KernelMenuSpec::Poly(d) => (1..=*d)
                .map(|p| MenuItem::Fixed(KernelSpec::HomogeneousPolynomial { degree: p }))
                .collect(),
            KernelMenuSpec::Explicit(items) => items.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.items().len()
    }

    pub fn is_empty(&self) -> bool {
        self.items().is_empty()
    }

    pub fn needs_median(&self) -> bool {
        self.items()
            .iter()
            .any(|i| matches!(i, MenuItem::GaussianMedian(_)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::domain("kernel menu is empty"));
        }
        for item in self.items() {
            if let MenuItem::Fixed(k) = item {
                k.validate()?;
            }
        }
        Ok(())
    }

    /// Concrete kernels for this pair of samples. The median heuristic runs
    /// on the pooled sample with `X` and `Y` interleaved, so a cap keeps
    /// points from both.
    pub fn resolve(&self, x: &Sample, y: &Sample) -> Result<Vec<KernelSpec>> {
        self.validate()?;
        let sigma = if self.needs_median() {
            Some(median_heuristic(&interleave(x, y)?, MEDIAN_HEURISTIC_CAP)?)
        } else {
            None
        };
        self.items()
            .into_iter()
            .map(|item| match item {
                MenuItem::Fixed(k) => Ok(k),
                MenuItem::GaussianMedian(m) => KernelSpec::gaussian(m * sigma.unwrap_or(1.0)),
            })
            .collect()
    }
}

fn interleave(x: &Sample, y: &Sample) -> Result<Sample> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(x.dim(), y.dim()));
    }
    let mut data = Vec::with_capacity(x.as_flat().len() + y.as_flat().len());
    let m = x.len().max(y.len());
    for i in 0..m {
        if i < x.len() {
            data.extend_from_slice(x.point(i));
        }
        if i < y.len() {
            data.extend_from_slice(y.point(i));
        }
    }
    Sample::new(x.dim(), data)
}

impl fmt::Display for KernelMenuSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelMenuSpec::D1 => f.write_str("d1"),
            KernelMenuSpec::D2 => f.write_str("d2"),
            KernelMenuSpec::D6 => f.write_str("d6"),
            KernelMenuSpec::Poly(d) => write!(f, "poly{d}"),
            KernelMenuSpec::Explicit(items) => {
                let parts: Vec<String> = items.iter().map(|i| i.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl FromStr for KernelMenuSpec {
    type Err = Error;

    /// `d1`, `d2`, `d6`, `poly<d>` or a comma-separated list of kernels such
    /// as `gaussian:0.5,linear,gaussian_median:2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "d1" => return Ok(KernelMenuSpec::D1),
            "d2" => return Ok(KernelMenuSpec::D2),
            "d6" => return Ok(KernelMenuSpec::D6),
            _ => {}
        }
        if let Some(d) = s.strip_prefix("poly") {
            if let Ok(d) = d.trim_start_matches(['(', ':']).trim_end_matches(')').parse::<u32>() {
                if d == 0 {
                    return Err(Error::domain("poly menu needs at least one kernel"));
                }
                return Ok(KernelMenuSpec::Poly(d));
            }
        }
        let items = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<MenuItem>>>()?;
        let menu = KernelMenuSpec::Explicit(items);
        menu.validate()?;
        Ok(menu)
    }
}
