//! Polar outlines and the layered target glyph.
//!
//! Model coordinates put the glyph centre at the origin with `y` up; angles
//! run counter-clockwise from the positive `x` axis.

use serde::{Deserialize, Serialize};

use crate::color::Rgb;
use crate::entropy::{generate_message, Signal};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scale::GlyphLevel;

/// Relative sizes of the glyph layers, as fractions of the diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct GlyphProportions<T = f64> {
    /// Overall diameter in model units.
    pub diameter: T,
    /// Radial share of the two outer rings on each side, split evenly
    /// between dark and light.
    pub ring_band: T,
    pub wave_mean_radius: T,
    pub wave_amplitude: T,
    pub disc_radius: T,
}

impl<T: Scalar> Default for GlyphProportions<T> {
    fn default() -> Self {
        Self {
            diameter: T::lit(100.0),
            ring_band: T::lit(0.20),
            wave_mean_radius: T::lit(0.40),
            wave_amplitude: T::lit(0.05),
            disc_radius: T::lit(0.30),
        }
    }
}

impl<T: Scalar> GlyphProportions<T> {
    pub fn with_diameter(mut self, diameter: T) -> Self {
        self.diameter = diameter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diameter > T::zero()) || !self.diameter.is_finite() {
            return Err(Error::InvalidProportions(format!("diameter {}", self.diameter)));
        }
        let half = T::lit(0.5);
        for (name, f) in [
            ("ring_band", self.ring_band),
            ("wave_mean_radius", self.wave_mean_radius),
            ("wave_amplitude", self.wave_amplitude),
            ("disc_radius", self.disc_radius),
        ] {
            if !(f > T::zero() && f <= half) {
                return Err(Error::InvalidProportions(format!("{name} = {f} not in (0, 0.5]")));
            }
        }
        if self.wave_mean_radius + self.wave_amplitude > half {
            return Err(Error::InvalidProportions("wave extends past the dark ring".into()));
        }
        if self.wave_amplitude >= self.wave_mean_radius {
            return Err(Error::InvalidProportions("wave amplitude reaches the centre".into()));
        }
        Ok(())
    }

    pub fn outer_radius(&self) -> T {
        self.diameter * T::lit(0.5)
    }
}

/// Ink used for the two rings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingPalette {
    pub dark: Rgb,
    pub light: Rgb,
}

impl Default for RingPalette {
    fn default() -> Self {
        Self { dark: Rgb(0x1a, 0x1a, 0x1a), light: Rgb::WHITE }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarOutline<T = f64> {
    pub vertices: Vec<(T, T)>,
    pub closed: bool,
}

impl<T: Scalar> PolarOutline<T> {
    pub fn radii(&self) -> impl Iterator<Item = T> + '_ {
        self.vertices.iter().map(|&(x, y)| x.hypot(y))
    }
}

/// Wraps a message around a circle of radius `base_radius`, one vertex per
/// sample, starting at angle 0 and turning counter-clockwise.
pub fn encode_polar<T: Scalar>(signal: &Signal<T>, base_radius: T) -> Result<PolarOutline<T>> {
    let samples = signal.samples();
    let min = samples.iter().copied().fold(T::infinity(), T::min);
    if !(base_radius + min > T::zero()) {
        return Err(Error::RadiusUnderflow { radius: base_radius.as_f64(), min_sample: min.as_f64() });
    }
    let n = T::from_usize_exact(samples.len());
    let vertices = samples
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let theta = T::TAU() * T::from_usize_exact(i) / n;
            let r = base_radius + s;
            (r * theta.cos(), r * theta.sin())
        })
        .collect();
    Ok(PolarOutline { vertices, closed: true })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle<T = f64> {
    pub cx: T,
    pub cy: T,
    pub r: T,
}

impl<T: Scalar> Circle<T> {
    fn centred(r: T) -> Self {
        Self { cx: T::zero(), cy: T::zero(), r }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T = f64> {
    pub x: T,
    pub y: T,
    pub width: T,
    pub height: T,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LightLayer<T = f64> {
    Circle(Circle<T>),
    Wave(PolarOutline<T>),
}

/// Exclamation mark drawn over the value disc when uncertainty is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct NullMarker<T = f64> {
    /// Upright bar; `y` is its lower edge.
    pub bar: Rect<T>,
    pub dot: Circle<T>,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphGeometry<T = f64> {
    pub diameter: T,
    pub dark_disc: Circle<T>,
    pub dark_color: Rgb,
    pub light_layer: LightLayer<T>,
    pub light_color: Rgb,
    pub value_disc: Circle<T>,
    pub value_color: Rgb,
    pub label: Option<String>,
    pub null_marker: Option<NullMarker<T>>,
    /// Scale level this glyph shows; `None` for the null glyph.
    pub level: Option<usize>,
}

impl<T: Scalar> GlyphGeometry<T> {
    pub fn is_null(&self) -> bool {
        self.null_marker.is_some()
    }
}

/// What the light layer should show.
#[derive(Debug, Clone, Copy)]
pub enum GlyphSource<'a, T = f64> {
    Level(&'a GlyphLevel<T>),
    Null,
}

pub fn assemble_glyph<T: Scalar>(
    source: GlyphSource<'_, T>,
    value_color: Rgb,
    label: Option<&str>,
    prop: &GlyphProportions<T>,
) -> Result<GlyphGeometry<T>> {
    assemble_glyph_with(source, value_color, label, prop, &RingPalette::default())
}

pub fn assemble_glyph_with<T: Scalar>(
    source: GlyphSource<'_, T>,
    value_color: Rgb,
    label: Option<&str>,
    prop: &GlyphProportions<T>,
    palette: &RingPalette,
) -> Result<GlyphGeometry<T>> {
    prop.validate()?;
    let d = prop.diameter;
    let mean_radius = prop.wave_mean_radius * d;
    let (light_layer, null_marker, level) = match source {
        GlyphSource::Null => (LightLayer::Circle(Circle::centred(mean_radius)), Some(null_marker(prop, palette.dark)), None),
        GlyphSource::Level(l) if l.frequency == T::zero() => (LightLayer::Circle(Circle::centred(mean_radius)), None, Some(l.index)),
        GlyphSource::Level(l) => {
            let sample_count = l.signal.meta().map(|m| m.sample_count).unwrap_or(l.signal.len());
            let wave = generate_message(l.frequency, prop.wave_amplitude * d, sample_count)?;
            (LightLayer::Wave(encode_polar(&wave, mean_radius)?), None, Some(l.index))
        }
    };
    Ok(GlyphGeometry {
        diameter: d,
        dark_disc: Circle::centred(prop.outer_radius()),
        dark_color: palette.dark,
        light_layer,
        light_color: palette.light,
        value_disc: Circle::centred(prop.disc_radius * d),
        value_color,
        label: label.map(str::to_owned),
        null_marker,
        level,
    })
}

/// Glyph for a value whose uncertainty is unknown.
///
/// The value disc keeps the data color; the marker uses the dark ring ink.
pub fn null_glyph<T: Scalar>(value_color: Rgb, prop: &GlyphProportions<T>) -> Result<GlyphGeometry<T>> {
    assemble_glyph(GlyphSource::Null, value_color, None, prop)
}

fn null_marker<T: Scalar>(prop: &GlyphProportions<T>, color: Rgb) -> NullMarker<T> {
    let rho = prop.disc_radius * prop.diameter;
    let width = T::lit(0.22) * rho;
    NullMarker {
        bar: Rect { x: -width / T::lit(2.0), y: T::lit(-0.2) * rho, width, height: T::lit(0.85) * rho },
        dot: Circle { cx: T::zero(), cy: T::lit(-0.5) * rho, r: T::lit(0.14) * rho },
        color,
    }
}

/// Viewing set-up used to bound the highest usable wave frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct DisplayGeometry<T = f64> {
    /// Physical pixel size, mm.
    pub pixel_pitch: T,
    /// Eye to screen, mm.
    pub viewing_distance: T,
    /// On-screen diameter of the wave's mean circle, pixels.
    pub glyph_wave_diameter_px: T,
    /// Cycles per degree.
    #[serde(default = "default_acuity")]
    pub acuity_limit: T,
}

fn default_acuity<T: Scalar>() -> T {
    T::lit(10.0)
}

impl<T: Scalar> DisplayGeometry<T> {
    pub fn new(pixel_pitch: T, viewing_distance: T, glyph_wave_diameter_px: T) -> Result<Self> {
        let d = Self { pixel_pitch, viewing_distance, glyph_wave_diameter_px, acuity_limit: default_acuity() };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("pixel_pitch", self.pixel_pitch),
            ("viewing_distance", self.viewing_distance),
            ("glyph_wave_diameter_px", self.glyph_wave_diameter_px),
            ("acuity_limit", self.acuity_limit),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Visual angle subtended by the wave circle, degrees.
    pub fn angular_diameter_deg(&self) -> T {
        let size = self.glyph_wave_diameter_px * self.pixel_pitch;
        (T::lit(2.0) * (size / (T::lit(2.0) * self.viewing_distance)).atan()).to_degrees()
    }
}

/// Highest wave frequency (cycles per revolution) whose cycles stay at or
/// below the acuity limit along the mean-radius contour.
pub fn max_cycles<T: Scalar>(d: &DisplayGeometry<T>) -> T {
    d.acuity_limit * T::PI() * d.angular_diameter_deg()
}

/// Wave-circle diameter in pixels at which `cycles` sits exactly at the
/// acuity limit.
pub fn wave_diameter_for_cycles<T: Scalar>(cycles: T, pixel_pitch: T, viewing_distance: T, acuity_limit: T) -> T {
    let angle = (cycles / (acuity_limit * T::PI())).to_radians();
    T::lit(2.0) * viewing_distance * (angle / T::lit(2.0)).tan() / pixel_pitch
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::UncertaintyScale;

    fn local_maxima(radii: &[f64]) -> usize {
        let n = radii.len();
        (0..n)
            .filter(|&i| radii[i] > radii[(i + n - 1) % n] && radii[i] >= radii[(i + 1) % n])
            .count()
    }

    #[test]
    fn circle_from_zero_message() {
        let o = encode_polar(&generate_message(0.0_f64, 1.0, 360).unwrap(), 10.0).unwrap();
        assert_eq!(o.vertices.len(), 360);
        assert!(o.closed);
        assert!(o.radii().all(|r| (r - 10.0).abs() < 1e-12));
    }

    #[test]
    fn six_lobes() {
        let o = encode_polar(&generate_message(6.0, 1.0, 360).unwrap(), 10.0).unwrap();
        let radii: Vec<f64> = o.radii().collect();
        assert_eq!(local_maxima(&radii), 6);
        assert!(radii.iter().all(|&r| (9.0 - 1e-9..=11.0 + 1e-9).contains(&r)));
    }

    #[test]
    fn starts_on_x_axis() {
        let s = Signal::from_samples(vec![0.5_f64, 1.0, -0.25, 0.0]).unwrap();
        let o = encode_polar(&s, 3.0).unwrap();
        assert_eq!(o.vertices[0], (3.5, 0.0));
        // second vertex a quarter turn counter-clockwise
        assert!(o.vertices[1].0.abs() < 1e-12 && (o.vertices[1].1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn radius_underflow() {
        let s = generate_message(3.0, 2.0, 360).unwrap();
        assert!(matches!(encode_polar(&s, 2.0), Err(Error::RadiusUnderflow { .. })));
        assert!(encode_polar(&s, 2.5).is_ok());
    }

    #[test]
    fn level_zero_defaults() {
        let scale = UncertaintyScale::<f64>::seven_level().unwrap();
        let g = assemble_glyph(GlyphSource::Level(&scale.levels()[0]), Rgb::WHITE, None, &GlyphProportions::default()).unwrap();
        assert_eq!(g.dark_disc.r, 50.0);
        assert_eq!(g.value_disc.r, 30.0);
        match g.light_layer {
            LightLayer::Circle(c) => assert_eq!(c.r, 40.0),
            other => panic!("expected circle, got {other:?}"),
        }
        assert!(g.null_marker.is_none());
        assert_eq!(g.level, Some(0));
    }

    #[test]
    fn wave_band() {
        let scale = UncertaintyScale::<f64>::seven_level().unwrap();
        let level = scale.levels().iter().find(|l| l.frequency == 12.0).unwrap();
        let g = assemble_glyph(GlyphSource::Level(level), Rgb::WHITE, Some("13.5"), &GlyphProportions::default()).unwrap();
        let LightLayer::Wave(o) = &g.light_layer else { panic!("expected wave") };
        let radii: Vec<f64> = o.radii().collect();
        let lo = radii.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // peaks fall between samples, so the extremes are approached, not hit
        assert!(lo >= 35.0 - 1e-9 && hi <= 45.0 + 1e-9, "{lo} {hi}");
        assert!(lo < 35.05 && hi > 44.95, "{lo} {hi}");
        assert_eq!(local_maxima(&radii), 12);
        assert_eq!(g.label.as_deref(), Some("13.5"));
    }

    #[test]
    fn null_glyph_contract() {
        let color = Rgb(200, 10, 10);
        for d in [10.0, 100.0, 640.0] {
            let g = null_glyph(color, &GlyphProportions::default().with_diameter(d)).unwrap();
            let marker = g.null_marker.as_ref().expect("marker");
            assert_eq!(marker.color, g.dark_color);
            assert_eq!(g.value_color, color);
            assert!(matches!(g.light_layer, LightLayer::Circle(_)));
            assert!(g.level.is_none());
        }
    }

    #[test]
    fn proportions_validation() {
        let bad = GlyphProportions { wave_mean_radius: 0.48, ..GlyphProportions::<f64>::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidProportions(_))));
        let bad = GlyphProportions { disc_radius: 0.0, ..GlyphProportions::<f64>::default() };
        assert!(bad.validate().is_err());
        let bad = GlyphProportions::<f64>::default().with_diameter(-1.0);
        assert!(null_glyph(Rgb::BLACK, &bad).is_err());
    }

    #[test]
    fn cycles_for_one_degree() {
        // pick a diameter that subtends exactly one degree
        let px = wave_diameter_for_cycles(10.0 * std::f64::consts::PI, 0.1, 500.0, 10.0);
        let d = DisplayGeometry::new(0.1, 500.0, px).unwrap();
        assert!((d.angular_diameter_deg() - 1.0).abs() < 1e-12);
        assert!((max_cycles(&d) - 31.4159).abs() < 1e-3);
    }

    #[test]
    fn small_angle_doubling() {
        let a = DisplayGeometry::new(0.094_f64, 500.0, 40.0).unwrap();
        let b = DisplayGeometry::new(0.094, 500.0, 80.0).unwrap();
        let ratio = max_cycles(&b) / max_cycles(&a);
        assert!((ratio - 2.0).abs() / 2.0 < 0.005);
        assert!(DisplayGeometry::new(0.0, 500.0, 40.0).is_err());
    }
}
