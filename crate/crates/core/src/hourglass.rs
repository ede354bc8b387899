//! Hourglass emotion categorization: the activation curve, sentic levels,
//! compound emotions and polarity.
//!
//! Each of the four affective dimensions carries an activation in `[-1, 1]`.
//! Activations are split into six named levels plus a neutral band:
//!
//! | band | Pleasantness | Attention    | Sensitivity  | Aptitude   |
//! |------|--------------|--------------|--------------|------------|
//! | +3   | ecstasy      | vigilance    | rage         | admiration |
//! | +2   | joy          | anticipation | anger        | trust      |
//! | +1   | serenity     | interest     | annoyance    | acceptance |
//! | −1   | pensiveness  | distraction  | apprehension | boredom    |
//! | −2   | sadness      | surprise     | fear         | disgust    |
//! | −3   | grief        | amazement    | terror       | loathing   |
//!
//! Band boundaries sit on the raw activation at `±1/3` and `±2/3`, closed on
//! the outer edge: `(δ, 1/3] → 1`, `(1/3, 2/3] → 2`, `(2/3, 1] → 3`, and
//! `|x| ≤ δ` is neutral.

use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

pub const DEFAULT_NEUTRAL_DELTA: f64 = 0.05;

const ONE_THIRD: f64 = 1.0 / 3.0;
const TWO_THIRDS: f64 = 2.0 / 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum HourglassError {
    #[error("activation {0} is outside [-1, 1]")]
    OutOfRange(f64),
    #[error("neutral band width must lie in [0, 1/3), got {0}")]
    InvalidNeutralBand(f64),
    #[error("sentic components must be finite")]
    NonFinite,
    #[error("curve width must be finite and positive, got {0}")]
    InvalidSigma(f64),
    #[error("polarity needs at least one sentic vector")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AffectiveDimension {
    Pleasantness,
    Attention,
    Sensitivity,
    Aptitude,
}

impl AffectiveDimension {
    pub const ALL: [AffectiveDimension; 4] = [
        AffectiveDimension::Pleasantness,
        AffectiveDimension::Attention,
        AffectiveDimension::Sensitivity,
        AffectiveDimension::Aptitude,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AffectiveDimension::Pleasantness => "pleasantness",
            AffectiveDimension::Attention => "attention",
            AffectiveDimension::Sensitivity => "sensitivity",
            AffectiveDimension::Aptitude => "aptitude",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(name.trim()))
    }
}

impl fmt::Display for AffectiveDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Level names indexed by dimension, then by band `+3, +2, +1, −1, −2, −3`.
pub const LEVEL_LABELS: [[&str; 6]; 4] = [
    [
        "ecstasy",
        "joy",
        "serenity",
        "pensiveness",
        "sadness",
        "grief",
    ],
    [
        "vigilance",
        "anticipation",
        "interest",
        "distraction",
        "surprise",
        "amazement",
    ],
    [
        "rage",
        "anger",
        "annoyance",
        "apprehension",
        "fear",
        "terror",
    ],
    [
        "admiration",
        "trust",
        "acceptance",
        "boredom",
        "disgust",
        "loathing",
    ],
];

pub const NEUTRAL_LABEL: &str = "neutral";

/// Alternative spellings accepted when reading level names.
const LEVEL_ALIASES: [(&str, &str); 2] =
    [("frustration", "annoyance"), ("distinction", "distraction")];

/// Name of `(dimension, band)`; band 0 is neutral.
///
/// # Panics
/// If `band` is outside `-3..=3`.
pub fn level_label(dimension: AffectiveDimension, band: i8) -> &'static str {
    let slot = match band {
        0 => return NEUTRAL_LABEL,
        3 => 0,
        2 => 1,
        1 => 2,
        -1 => 3,
        -2 => 4,
        -3 => 5,
        _ => panic!("band {band} outside -3..=3"),
    };
    LEVEL_LABELS[dimension.index()][slot]
}

/// Looks up a level by name (case-insensitive, aliases included). The
/// neutral label is ambiguous across dimensions and yields `None`.
pub fn level_from_name(name: &str) -> Option<(AffectiveDimension, i8)> {
    let lower = name.trim().to_lowercase();
    let canonical = LEVEL_ALIASES
        .iter()
        .find(|(alias, _)| *alias == lower)
        .map_or(lower.as_str(), |(_, target)| *target);
    for dim in AffectiveDimension::ALL {
        for (slot, label) in LEVEL_LABELS[dim.index()].iter().enumerate() {
            if *label == canonical {
                let band = [3, 2, 1, -1, -2, -3][slot];
                return Some((dim, band));
            }
        }
    }
    None
}

/// Activation of the four dimensions, each clamped to `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SenticVector {
    pub pleasantness: f64,
    pub attention: f64,
    pub sensitivity: f64,
    pub aptitude: f64,
}

impl SenticVector {
    pub const ZERO: SenticVector = SenticVector {
        pleasantness: 0.0,
        attention: 0.0,
        sensitivity: 0.0,
        aptitude: 0.0,
    };

    pub fn new(
        pleasantness: f64,
        attention: f64,
        sensitivity: f64,
        aptitude: f64,
    ) -> Result<Self, HourglassError> {
        Self::from_array([pleasantness, attention, sensitivity, aptitude])
    }

    pub fn from_array(values: [f64; 4]) -> Result<Self, HourglassError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HourglassError::NonFinite);
        }
        let [p, a, s, ap] = values.map(|v| v.clamp(-1.0, 1.0));
        Ok(SenticVector {
            pleasantness: p,
            attention: a,
            sensitivity: s,
            aptitude: ap,
        })
    }

    pub fn to_array(self) -> [f64; 4] {
        [
            self.pleasantness,
            self.attention,
            self.sensitivity,
            self.aptitude,
        ]
    }

    pub fn get(self, dimension: AffectiveDimension) -> f64 {
        self.to_array()[dimension.index()]
    }
}

/// A quantized activation: dimension, band in `-3..=3` and its name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SenticLevel {
    pub dimension: AffectiveDimension,
    pub band: i8,
    pub label: &'static str,
}

/// Width of the activation curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussParams {
    sigma: f64,
}

impl GaussParams {
    pub fn new(sigma: f64) -> Result<Self, HourglassError> {
        if sigma.is_finite() && sigma > 0.0 {
            Ok(GaussParams { sigma })
        } else {
            Err(HourglassError::InvalidSigma(sigma))
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Default for GaussParams {
    /// `σ = 1/√(2π)`, which puts the curve's extremum at `-1`.
    fn default() -> Self {
        GaussParams {
            sigma: 1.0 / (2.0 * PI).sqrt(),
        }
    }
}

/// `G(x) = −1/(σ√(2π)) · exp(−x²/(2σ²))`, sign included.
pub fn gaussian_g(x: f64, params: GaussParams) -> f64 {
    let sigma = params.sigma;
    let scale = 1.0 / (sigma * (2.0 * PI).sqrt());
    -scale * (-(x * x) / (2.0 * sigma * sigma)).exp()
}

fn check_delta(neutral_delta: f64) -> Result<(), HourglassError> {
    if (0.0..ONE_THIRD).contains(&neutral_delta) {
        Ok(())
    } else {
        Err(HourglassError::InvalidNeutralBand(neutral_delta))
    }
}

fn band_of(x: f64, neutral_delta: f64) -> i8 {
    let mag = x.abs();
    let level = if mag <= neutral_delta {
        0
    } else if mag <= ONE_THIRD {
        1
    } else if mag <= TWO_THIRDS {
        2
    } else {
        3
    };
    if x < 0.0 {
        -level
    } else {
        level
    }
}

/// Maps an activation to its sentic level.
pub fn quantize(
    dimension: AffectiveDimension,
    x: f64,
    neutral_delta: f64,
) -> Result<SenticLevel, HourglassError> {
    check_delta(neutral_delta)?;
    if !(-1.0..=1.0).contains(&x) {
        return Err(HourglassError::OutOfRange(x));
    }
    let band = band_of(x, neutral_delta);
    Ok(SenticLevel {
        dimension,
        band,
        label: level_label(dimension, band),
    })
}

/// Quantizes all four components of `v`.
pub fn quantize_vector(
    v: SenticVector,
    neutral_delta: f64,
) -> Result<[SenticLevel; 4], HourglassError> {
    let mut out = [SenticLevel {
        dimension: AffectiveDimension::Pleasantness,
        band: 0,
        label: NEUTRAL_LABEL,
    }; 4];
    for (slot, dim) in out.iter_mut().zip(AffectiveDimension::ALL) {
        *slot = quantize(dim, v.get(dim), neutral_delta)?;
    }
    Ok(out)
}

/// `Σᵢ (P + |A| − |S| + Ap) / 3N`.
pub fn polarity(concepts: &[SenticVector]) -> Result<f64, HourglassError> {
    if concepts.is_empty() {
        return Err(HourglassError::EmptyInput);
    }
    let mut terms: Vec<f64> = concepts
        .iter()
        .map(|c| c.pleasantness + c.attention.abs() - c.sensitivity.abs() + c.aptitude)
        .collect();
    // Sorted so the sum, and therefore the result, ignores input order.
    terms.sort_by(f64::total_cmp);
    let total: f64 = terms.iter().sum();
    Ok(total / (3.0 * concepts.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompoundEmotion {
    /// joy + trust with minor attention and sensitivity
    Love,
    /// joy + trust + anger
    Jealousy,
}

impl CompoundEmotion {
    pub fn name(self) -> &'static str {
        match self {
            CompoundEmotion::Love => "love",
            CompoundEmotion::Jealousy => "jealousy",
        }
    }
}

/// Named compound emotions expressed by `v`.
pub fn detect_compound(
    v: SenticVector,
    neutral_delta: f64,
) -> Result<Vec<CompoundEmotion>, HourglassError> {
    check_delta(neutral_delta)?;
    let joy = band_of(v.pleasantness, neutral_delta) == 2;
    let trust = band_of(v.aptitude, neutral_delta) == 2;
    let anger = band_of(v.sensitivity, neutral_delta) == 2;
    let mut found = Vec::new();
    if joy && trust && v.attention.abs() <= ONE_THIRD && v.sensitivity.abs() <= ONE_THIRD {
        found.push(CompoundEmotion::Love);
    }
    if joy && trust && anger {
        found.push(CompoundEmotion::Jealousy);
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use AffectiveDimension::*;

    fn sv(p: f64, a: f64, s: f64, ap: f64) -> SenticVector {
        SenticVector::new(p, a, s, ap).unwrap()
    }

    #[test]
    fn curve_at_origin_is_minus_one() {
        assert_eq!(gaussian_g(0.0, GaussParams::default()), -1.0);
        let g = gaussian_g(1.0 / 3.0, GaussParams::default());
        assert!((g - (-(-PI / 9.0).exp())).abs() < 1e-15);
        assert!((g - -0.705_346_7).abs() < 1e-6);
        let p = GaussParams::default();
        assert_eq!(gaussian_g(0.37, p), gaussian_g(-0.37, p));
        assert!(GaussParams::new(0.0).is_err());
    }

    #[test]
    fn quantize_examples() {
        let l = quantize(Pleasantness, 0.9, 0.05).unwrap();
        assert_eq!((l.band, l.label), (3, "ecstasy"));
        let l = quantize(Pleasantness, 0.02, 0.05).unwrap();
        assert_eq!((l.band, l.label), (0, "neutral"));
        let l = quantize(Sensitivity, -0.5, 0.05).unwrap();
        assert_eq!((l.band, l.label), (-2, "fear"));
        assert_eq!(
            quantize(Aptitude, 1.5, 0.05),
            Err(HourglassError::OutOfRange(1.5))
        );
        assert_eq!(
            quantize(Aptitude, 0.5, 0.4),
            Err(HourglassError::InvalidNeutralBand(0.4))
        );
    }

    #[test]
    fn band_edges_close_outward() {
        let at = |x: f64| quantize(Attention, x, 0.05).unwrap().band;
        assert_eq!(at(0.05), 0);
        assert_eq!(at(1.0 / 3.0), 1);
        assert_eq!(at(2.0 / 3.0), 2);
        assert_eq!(at(1.0), 3);
        assert_eq!(at(-1.0 / 3.0), -1);
        assert_eq!(at(-1.0), -3);
        assert_eq!(quantize(Attention, -0.9, 0.05).unwrap().label, "amazement");
    }

    #[test]
    fn level_names_and_aliases() {
        assert_eq!(level_from_name("Frustration"), Some((Sensitivity, 1)));
        assert_eq!(level_from_name("Distinction"), Some((Attention, -1)));
        assert_eq!(level_from_name("Trust"), Some((Aptitude, 2)));
        assert_eq!(level_from_name("neutral"), None);
        assert_eq!(level_label(Aptitude, -3), "loathing");
    }

    #[test]
    fn polarity_examples() {
        assert_eq!(polarity(&[sv(0.0, 0.0, 0.0, 0.0)]).unwrap(), 0.0);
        assert_eq!(polarity(&[sv(1.0, 0.0, 0.0, 1.0)]).unwrap(), 2.0 / 3.0);
        assert_eq!(
            polarity(&[sv(1.0, 1.0, 0.0, 1.0), sv(0.0, 0.0, 1.0, 0.0)]).unwrap(),
            1.0 / 3.0
        );
        assert_eq!(polarity(&[]), Err(HourglassError::EmptyInput));
    }

    #[test]
    fn polarity_extremes() {
        assert_eq!(polarity(&[sv(1.0, -1.0, 0.0, 1.0)]).unwrap(), 1.0);
        assert_eq!(polarity(&[sv(-1.0, 0.0, 1.0, -1.0)]).unwrap(), -1.0);
    }

    #[test]
    fn compound_examples() {
        assert_eq!(
            detect_compound(sv(0.5, 0.1, 0.0, 0.5), 0.05).unwrap(),
            vec![CompoundEmotion::Love]
        );
        assert_eq!(
            detect_compound(sv(0.5, 0.1, 0.5, 0.5), 0.05).unwrap(),
            vec![CompoundEmotion::Jealousy]
        );
        assert!(detect_compound(SenticVector::ZERO, 0.05)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn sentic_vectors_clamp_and_reject_nan() {
        assert_eq!(sv(1.5, -2.0, 0.0, 0.0).to_array(), [1.0, -1.0, 0.0, 0.0]);
        assert_eq!(
            SenticVector::new(f64::NAN, 0.0, 0.0, 0.0),
            Err(HourglassError::NonFinite)
        );
    }
}
