//! Canonical feature names.
//!
//! ```text
//! axis feature    [sg_filter_]Acc{X|Y|Z}[_{A|D1|D2|D3}][_stat][_lag_k]
//! global feature  {SMA|VM|MovVar|Energy|Entropy|Roll|Pitch}[_lag_k]
//! ```
//!
//! e.g. `AccY_D3_mean`, `AccX_A_var_lag_2`, `sg_filter_AccX_lag_5`,
//! `Entropy_lag_3`, `Pitch`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn column(self) -> &'static str {
        match self {
            Axis::X => "AccX",
            Axis::Y => "AccY",
            Axis::Z => "AccZ",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    A,
    D1,
    D2,
    D3,
}

impl Band {
    pub const ALL: [Band; 4] = [Band::A, Band::D1, Band::D2, Band::D3];

    fn as_str(self) -> &'static str {
        match self {
            Band::A => "A",
            Band::D1 => "D1",
            Band::D2 => "D2",
            Band::D3 => "D3",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Global {
    Sma,
    Vm,
    MovVar,
    Energy,
    Entropy,
    Roll,
    Pitch,
}

impl Global {
    pub const ALL: [Global; 7] = [
        Global::Sma,
        Global::Vm,
        Global::MovVar,
        Global::Energy,
        Global::Entropy,
        Global::Roll,
        Global::Pitch,
    ];

    fn as_str(self) -> &'static str {
        match self {
            Global::Sma => "SMA",
            Global::Vm => "VM",
            Global::MovVar => "MovVar",
            Global::Energy => "Energy",
            Global::Entropy => "Entropy",
            Global::Roll => "Roll",
            Global::Pitch => "Pitch",
        }
    }
}

/// Window statistics, in emission order.
pub const STAT_NAMES: [&str; 13] = [
    "mean", "std", "sum", "var", "mad", "median", "min", "max", "quan_25", "quan_50", "quan_75",
    "kurt", "skew",
];

/// Per-band wavelet coefficient statistics, in emission order.
pub const WAVELET_STAT_NAMES: [&str; 4] = ["mean", "var", "std", "energy"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Raw acceleration at the window's last sample.
    Raw,
    /// Savitzky-Golay filtered acceleration at the window's last sample.
    SgFilter,
    /// Window statistic of one axis.
    Stat,
    /// Statistic of one wavelet band of one axis.
    Wavelet(Band),
    Global(Global),
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Raw => f.write_str("raw"),
            Family::SgFilter => f.write_str("sg_filter"),
            Family::Stat => f.write_str("stat"),
            Family::Wavelet(b) => write!(f, "wavelet-{}", b.as_str()),
            Family::Global(g) => f.write_str(g.as_str()),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(band) = s.strip_prefix("wavelet-") {
            return Band::ALL
                .iter()
                .find(|b| b.as_str() == band)
                .map(|b| Family::Wavelet(*b))
                .ok_or_else(|| Error::Naming(format!("unknown wavelet band {band:?}")));
        }
        match s {
            "raw" => Ok(Family::Raw),
            "sg_filter" => Ok(Family::SgFilter),
            "stat" => Ok(Family::Stat),
            other => Global::ALL
                .iter()
                .find(|g| g.as_str() == other)
                .map(|g| Family::Global(*g))
                .ok_or_else(|| Error::Naming(format!("unknown feature family {other:?}"))),
        }
    }
}

pub fn feature_name(
    axis: Option<Axis>,
    family: Family,
    stat: Option<&str>,
    lag: Option<usize>,
) -> Result<String> {
    let mut name = match (family, axis, stat) {
        (Family::Raw, Some(a), None) => a.column().to_string(),
        (Family::SgFilter, Some(a), None) => format!("sg_filter_{}", a.column()),
        (Family::Stat, Some(a), Some(s)) if STAT_NAMES.contains(&s) => {
            format!("{}_{s}", a.column())
        }
        (Family::Wavelet(b), Some(a), Some(s)) if WAVELET_STAT_NAMES.contains(&s) => {
            format!("{}_{}_{s}", a.column(), b.as_str())
        }
        (Family::Global(g), None, None) => g.as_str().to_string(),
        _ => {
            return Err(Error::Naming(format!(
                "invalid combination: axis {axis:?}, family {family}, stat {stat:?}"
            )))
        }
    };
    match lag {
        None => {}
        Some(0) => return Err(Error::Naming("lag must be at least 1".into())),
        Some(k) => name.push_str(&format!("_lag_{k}")),
    }
    Ok(name)
}

pub fn lagged_name(base: &str, lag: usize) -> String {
    format!("{base}_lag_{lag}")
}

/// The 100 per-window columns in emission order: raw and filtered axes,
/// global features, 13 statistics per axis, then 4 statistics for each of the
/// A, D1, D2, D3 bands per axis.
pub fn base_column_names() -> Vec<String> {
    let mut names = Vec::with_capacity(100);
    for a in Axis::ALL {
        names.push(feature_name(Some(a), Family::Raw, None, None).unwrap());
    }
    for a in Axis::ALL {
        names.push(feature_name(Some(a), Family::SgFilter, None, None).unwrap());
    }
    for g in Global::ALL {
        names.push(feature_name(None, Family::Global(g), None, None).unwrap());
    }
    for a in Axis::ALL {
        for s in STAT_NAMES {
            names.push(feature_name(Some(a), Family::Stat, Some(s), None).unwrap());
        }
    }
    for a in Axis::ALL {
        for b in Band::ALL {
            for s in WAVELET_STAT_NAMES {
                names.push(feature_name(Some(a), Family::Wavelet(b), Some(s), None).unwrap());
            }
        }
    }
    names
}
