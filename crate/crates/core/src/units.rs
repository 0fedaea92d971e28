//! Denominations and simulated time.
//!
//! All ledger arithmetic is carried out in integer Wei. Floating point never
//! touches a balance or a fee.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Gas units.
pub type Gas = u64;

pub const WEI_PER_GWEI: u128 = 1_000_000_000;
pub const WEI_PER_ETHER: u128 = 1_000_000_000_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("fee arithmetic overflowed")]
pub struct FeeOverflow;

/// An amount of Ether expressed in Wei.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct WeiAmount(u128);

impl WeiAmount {
    pub const ZERO: WeiAmount = WeiAmount(0);

    pub const fn from_wei(wei: u128) -> Self {
        WeiAmount(wei)
    }

    pub const fn from_gwei(gwei: u64) -> Self {
        WeiAmount(gwei as u128 * WEI_PER_GWEI)
    }

    pub const fn from_ether(ether: u64) -> Self {
        WeiAmount(ether as u128 * WEI_PER_ETHER)
    }

    pub const fn wei(self) -> u128 {
        self.0
    }

    pub fn checked_add(self, rhs: WeiAmount) -> Option<WeiAmount> {
        self.0.checked_add(rhs.0).map(WeiAmount)
    }

    pub fn checked_sub(self, rhs: WeiAmount) -> Option<WeiAmount> {
        self.0.checked_sub(rhs.0).map(WeiAmount)
    }

    pub fn checked_mul_gas(self, gas: Gas) -> Option<WeiAmount> {
        self.0.checked_mul(u128::from(gas)).map(WeiAmount)
    }

    /// Exact decimal rendering in Ether, trailing zeros trimmed.
    pub fn to_ether_string(self) -> String {
        let whole = self.0 / WEI_PER_ETHER;
        let frac = self.0 % WEI_PER_ETHER;
        if frac == 0 {
            return whole.to_string();
        }
        let frac = format!("{frac:018}");
        format!("{whole}.{}", frac.trim_end_matches('0'))
    }

    /// Parses a decimal Ether amount such as `0.004` exactly.
    pub fn parse_ether(text: &str) -> Option<WeiAmount> {
        let (whole, frac) = match text.split_once('.') {
            Some((w, f)) => (w, f),
            None => (text, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return None;
        }
        if frac.len() > 18 || !all_digits(whole) || !all_digits(frac) {
            return None;
        }
        let whole: u128 = if whole.is_empty() { 0 } else { whole.parse().ok()? };
        let frac_wei: u128 = if frac.is_empty() {
            0
        } else {
            format!("{frac:0<18}").parse().ok()?
        };
        whole
            .checked_mul(WEI_PER_ETHER)?
            .checked_add(frac_wei)
            .map(WeiAmount)
    }
}

fn all_digits(s: &str) -> bool {
    s.bytes().all(|b| b.is_ascii_digit())
}

/// Transaction fee: gas used times gas price, exact in Wei.
pub fn compute_fee(gas_used: Gas, gas_price: WeiAmount) -> Result<WeiAmount, FeeOverflow> {
    gas_price.checked_mul_gas(gas_used).ok_or(FeeOverflow)
}

impl fmt::Display for WeiAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid decimal Wei amount `{0}`")]
pub struct ParseWeiError(String);

impl FromStr for WeiAmount {
    type Err = ParseWeiError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || !all_digits(s) {
            return Err(ParseWeiError(s.to_owned()));
        }
        s.parse::<u128>()
            .map(WeiAmount)
            .map_err(|_| ParseWeiError(s.to_owned()))
    }
}

impl Serialize for WeiAmount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WeiAmount {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Simulated chain time with millisecond resolution.
///
/// Text form is decimal seconds with exactly three fractional digits.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1000)
    }

    pub const fn as_millis(self) -> u64 {
        self.0
    }

    pub fn checked_add(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_add(rhs.0).map(SimTime)
    }

    pub fn checked_sub(self, rhs: SimTime) -> Option<SimTime> {
        self.0.checked_sub(rhs.0).map(SimTime)
    }

    pub fn checked_mul(self, n: u64) -> Option<SimTime> {
        self.0.checked_mul(n).map(SimTime)
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:03}", self.0 / 1000, self.0 % 1000)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid time in seconds `{0}` (at most 3 decimals)")]
pub struct ParseTimeError(String);

impl FromStr for SimTime {
    type Err = ParseTimeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseTimeError(s.to_owned());
        let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
        if whole.is_empty() || !all_digits(whole) || !all_digits(frac) || frac.len() > 3 {
            return Err(err());
        }
        if s.contains('.') && frac.is_empty() {
            return Err(err());
        }
        let whole: u64 = whole.parse().map_err(|_| err())?;
        let frac: u64 = if frac.is_empty() {
            0
        } else {
            format!("{frac:0<3}").parse().map_err(|_| err())?
        };
        whole
            .checked_mul(1000)
            .and_then(|ms| ms.checked_add(frac))
            .map(SimTime)
            .ok_or_else(err)
    }
}

impl Serialize for SimTime {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SimTime {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
