//! 8-bit RGB colors and banded value color maps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const BLACK: Rgb = Rgb(0, 0, 0);
    pub const WHITE: Rgb = Rgb(255, 255, 255);
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

impl FromStr for Rgb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let hex = s.strip_prefix('#').unwrap_or(s);
        if hex.len() != 6 || !hex.is_ascii() {
            return Err(Error::InvalidColorMap(format!("bad color {s:?}")));
        }
        let byte = |i: usize| {
            u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| Error::InvalidColorMap(format!("bad color {s:?}")))
        };
        Ok(Rgb(byte(0)?, byte(2)?, byte(4)?))
    }
}

impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorStop {
    /// Lower edge of the band, in measure units.
    pub threshold: f64,
    pub color: Rgb,
}

/// Discrete banded scale: a value takes the color of the last stop whose
/// threshold it reaches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColorMap {
    pub name: String,
    stops: Vec<ColorStop>,
}

#[derive(Deserialize)]
struct RawColorMap {
    name: String,
    stops: Vec<ColorStop>,
}

impl<'de> Deserialize<'de> for ColorMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawColorMap::deserialize(d)?;
        ColorMap::new(raw.name, raw.stops).map_err(serde::de::Error::custom)
    }
}

impl ColorMap {
    pub fn new(name: impl Into<String>, stops: Vec<ColorStop>) -> Result<Self> {
        if stops.len() < 2 {
            return Err(Error::InvalidColorMap("need at least 2 stops".into()));
        }
        if stops.iter().any(|s| !s.threshold.is_finite()) {
            return Err(Error::InvalidColorMap("thresholds must be finite".into()));
        }
        if stops.windows(2).any(|w| w[0].threshold >= w[1].threshold) {
            return Err(Error::InvalidColorMap("thresholds must be strictly increasing".into()));
        }
        Ok(Self { name: name.into(), stops })
    }

    pub fn stops(&self) -> &[ColorStop] {
        &self.stops
    }

    /// Air-temperature bands in degrees Celsius, blue through red.
    ///
    /// An approximation of public forecast temperature keys, not an official
    /// palette.
    pub fn temperature_approx() -> Self {
        let stops = [
            (-10.0, Rgb(0x1c, 0x2f, 0x8c)),
            (-5.0, Rgb(0x2b, 0x5c, 0xc4)),
            (0.0, Rgb(0x4a, 0x90, 0xe2)),
            (5.0, Rgb(0x7f, 0xc4, 0xe8)),
            (10.0, Rgb(0xb8, 0xe0, 0xa8)),
            (15.0, Rgb(0xf6, 0xe7, 0x6b)),
            (20.0, Rgb(0xf9, 0xb2, 0x3c)),
            (25.0, Rgb(0xf0, 0x6e, 0x2a)),
            (30.0, Rgb(0xd7, 0x30, 0x1f)),
            (35.0, Rgb(0x8e, 0x0b, 0x1c)),
        ]
        .into_iter()
        .map(|(threshold, color)| ColorStop { threshold, color })
        .collect();
        Self::new("temperature (approximate forecast bands)", stops).expect("bundled map is valid")
    }
}

impl Default for ColorMap {
    fn default() -> Self {
        Self::temperature_approx()
    }
}

/// Band color for `v`; values outside the stops clamp to the end colors.
pub fn value_to_color(v: f64, map: &ColorMap) -> Rgb {
    // NaN falls through to the first band
    map.stops
        .iter()
        .rev()
        .find(|s| v >= s.threshold)
        .unwrap_or(&map.stops[0])
        .color
}
