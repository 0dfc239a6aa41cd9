//! Fault-space sizes for the three injection methods and SFI sample plans.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ffsets::SetCollection;

pub const DEFAULT_MARGINS: [f64; 3] = [0.05, 0.01, 0.001];
/// Worst-case failure proportion.
pub const DEFAULT_P: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Static fan-in cone sets, no propagation analysis.
    Static,
    /// Sets reduced to achievable upset patterns.
    Propagated,
    /// Every nonempty combination of all flip-flops.
    Random,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Static, Method::Propagated, Method::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Static => "static",
            Method::Propagated => "propagated",
            Method::Random => "random",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Confidence {
    #[serde(rename = "90%")]
    P90,
    #[default]
    #[serde(rename = "95%")]
    P95,
    #[serde(rename = "99.8%")]
    P99_8,
}

impl Confidence {
    /// Two-sided normal cut-off.
    pub fn t(self) -> f64 {
        match self {
            Confidence::P90 => 1.645,
            Confidence::P95 => 1.96,
            Confidence::P99_8 => 3.09,
        }
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Confidence::P90 => "90%",
            Confidence::P95 => "95%",
            Confidence::P99_8 => "99.8%",
        })
    }
}

impl FromStr for Confidence {
    type Err = CampaignError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().trim_end_matches('%') {
            "90" | "0.90" | "0.9" => Ok(Confidence::P90),
            "95" | "0.95" => Ok(Confidence::P95),
            "99.8" | "0.998" => Ok(Confidence::P99_8),
            _ => Err(CampaignError::Confidence(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CampaignError {
    #[error("population must be at least 1")]
    EmptyPopulation,
    #[error("margin {0} outside (0, 1)")]
    Margin(f64),
    #[error("cut-off t = {0} must be positive")]
    CutOff(f64),
    #[error("proportion p = {0} outside (0, 1)")]
    Proportion(f64),
    #[error("unsupported confidence level `{0}` (use 90, 95 or 99.8)")]
    Confidence(String),
}

/// Big integers serialized as decimal strings.
pub mod decimal {
    use num_bigint::BigUint;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_str_radix(10))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        BigUint::parse_bytes(s.as_bytes(), 10).ok_or_else(|| D::Error::custom(format!("not a decimal integer: {s}")))
    }
}

/// Number of nonempty injection combinations of a set of `k` flip-flops.
pub fn set_combinations(k: usize) -> BigUint {
    (BigUint::one() << k) - BigUint::one()
}

/// Sum of `2^k − 1` over the unique sets.
pub fn fault_space_total(s: &SetCollection) -> BigUint {
    s.unique()
        .iter()
        .map(|set| set_combinations(set.multiplicity()))
        .sum()
}

pub fn random_multibit_space(num_ffs: usize) -> BigUint {
    set_combinations(num_ffs)
}

/// Finite-population sample size, rounded half up and clamped to `[1, N]`.
pub fn sfi_sample_size(n_pop: &BigUint, e: f64, t: f64, p: f64) -> Result<BigUint, CampaignError> {
    if n_pop.is_zero() {
        return Err(CampaignError::EmptyPopulation);
    }
    if !(e > 0.0 && e < 1.0) {
        return Err(CampaignError::Margin(e));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(CampaignError::CutOff(t));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(CampaignError::Proportion(p));
    }
    let c = t * t * p * (1.0 - p);
    let big_n = n_pop.to_f64().unwrap_or(f64::INFINITY);
    let n = if big_n.is_finite() {
        big_n / (1.0 + e * e * (big_n - 1.0) / c)
    } else {
        c / (e * e)
    };
    let rounded = BigUint::from((n + 0.5).floor().max(1.0) as u64);
    Ok(rounded.min(n_pop.clone()))
}

/// Three significant digits, e.g. `4.14E+03`.
pub fn sci3(v: &BigUint) -> String {
    let digits = v.to_str_radix(10);
    if v.is_zero() {
        return "0.00E+00".to_string();
    }
    let mut exp = digits.len() as i32 - 1;
    let mut head: u32 = digits.bytes().take(3).fold(0, |a, b| a * 10 + (b - b'0') as u32);
    for _ in digits.len()..3 {
        head *= 10;
    }
    if digits.as_bytes().get(3).is_some_and(|&b| b >= b'5') {
        head += 1;
        if head == 1000 {
            head = 100;
            exp += 1;
        }
    }
    format!("{}.{:02}E{}{:02}", head / 100, head % 100, if exp < 0 { '-' } else { '+' }, exp.abs())
}

/// Random-method total in table style: `2^N` rounded, then ` - 1`.
pub fn random_display(num_ffs: usize) -> String {
    format!("{} - 1", sci3(&(BigUint::one() << num_ffs)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultSpaceReport {
    pub method: Method,
    pub num_sets: usize,
    pub num_unique: usize,
    pub max_multiplicity: usize,
    #[serde(with = "decimal")]
    pub total_faults: BigUint,
    pub total_faults_sci: String,
}

impl FaultSpaceReport {
    pub fn from_collection(method: Method, s: &SetCollection) -> Self {
        let total = fault_space_total(s);
        Self {
            method,
            num_sets: s.num_sets(),
            num_unique: s.num_unique(),
            max_multiplicity: s.max_multiplicity(),
            total_faults_sci: sci3(&total),
            total_faults: total,
        }
    }

    /// The random method treated as one set holding every flip-flop.
    pub fn random(num_ffs: usize) -> Self {
        let sets = usize::from(num_ffs > 0);
        Self {
            method: Method::Random,
            num_sets: sets,
            num_unique: sets,
            max_multiplicity: num_ffs,
            total_faults: random_multibit_space(num_ffs),
            total_faults_sci: random_display(num_ffs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SfiPlan {
    pub method: Method,
    #[serde(with = "decimal")]
    pub population: BigUint,
    pub confidence: Confidence,
    pub t: f64,
    pub margin: f64,
    pub p: f64,
    /// Absent when the population is empty.
    pub sample: Option<u64>,
}

pub fn plan(method: Method, population: &BigUint, margin: f64, confidence: Confidence) -> Result<SfiPlan, CampaignError> {
    let sample = if population.is_zero() {
        if !(margin > 0.0 && margin < 1.0) {
            return Err(CampaignError::Margin(margin));
        }
        None
    } else {
        sfi_sample_size(population, margin, confidence.t(), DEFAULT_P)?.to_u64()
    };
    Ok(SfiPlan {
        method,
        population: population.clone(),
        confidence,
        t: confidence.t(),
        margin,
        p: DEFAULT_P,
        sample,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub num_ffs: usize,
    pub confidence: Confidence,
    pub margins: Vec<f64>,
    pub methods: Vec<FaultSpaceReport>,
    pub plans: Vec<SfiPlan>,
    pub static_over_propagated: Option<f64>,
    pub random_over_propagated: Option<f64>,
    /// Propagated total does not exceed the static total.
    pub monotone: bool,
}

impl CampaignReport {
    pub fn method(&self, m: Method) -> &FaultSpaceReport {
        self.methods.iter().find(|r| r.method == m).expect("all methods present")
    }

    pub fn plan(&self, m: Method, margin: f64) -> Option<&SfiPlan> {
        self.plans.iter().find(|p| p.method == m && p.margin == margin)
    }
}

fn ratio(a: &BigUint, b: &BigUint) -> Option<f64> {
    if b.is_zero() {
        return None;
    }
    Some(a.to_f64()? / b.to_f64()?)
}

pub fn compare_methods(
    num_ffs: usize,
    static_sets: &SetCollection,
    optimized: &SetCollection,
    margins: &[f64],
    confidence: Confidence,
) -> Result<CampaignReport, CampaignError> {
    let methods = vec![
        FaultSpaceReport::from_collection(Method::Static, static_sets),
        FaultSpaceReport::from_collection(Method::Propagated, optimized),
        FaultSpaceReport::random(num_ffs),
    ];
    let mut plans = Vec::new();
    for r in &methods {
        for &m in margins {
            plans.push(plan(r.method, &r.total_faults, m, confidence)?);
        }
    }
    let (s, p, r) = (&methods[0].total_faults, &methods[1].total_faults, &methods[2].total_faults);
    Ok(CampaignReport {
        num_ffs,
        confidence,
        margins: margins.to_vec(),
        static_over_propagated: ratio(s, p),
        random_over_propagated: ratio(r, p),
        monotone: p <= s,
        plans,
        methods,
    })
}
