//! Corruption recipe: tuning knobs plus optional pinned parameter values.
//!
//! The file format is one `key = value` per line; `#` starts a comment.
//!
//! ```text
//! # knobs
//! jitter_fraction = 0.1
//! r_occ_factor = 2.0
//! # pinned parameters
//! tr.theta = 0, 0, 0
//! rcc.subset = is, tr
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::spec::{CorruptionKind, CorruptionParams, Fraction};

/// Tuning knobs for how corruptions are realized.
#[derive(Debug, Clone, PartialEq)]
pub struct Knobs {
    /// Fraction of points displaced by D_JT.
    pub jitter_fraction: f64,
    /// Occlusion radius as a multiple of the object's mean NN distance.
    pub r_occ_factor: f64,
    /// Absolute occlusion radius; overrides `r_occ_factor` when set.
    pub r_occ: Option<f64>,
    /// Primitive size relative to the object's largest AABB extent.
    pub primitive_scale: f64,
    /// Wall/floor density relative to the object's mean density.
    pub wall_density: f64,
    /// Floor patch margin, as a fraction of the footprint extent per side.
    pub floor_margin: f64,
    /// Vertical range whose bottom quarter gates BI_F. `None` means the
    /// normalized frame `[-0.5, 0.5]`.
    pub floor_reference: Option<(f64, f64)>,
    /// Samples drawn per O_BOO occluder shape.
    pub occluder_samples: usize,
}

impl Default for Knobs {
    fn default() -> Self {
        Self {
            jitter_fraction: 0.1,
            r_occ_factor: 2.0,
            r_occ: None,
            primitive_scale: 0.25,
            wall_density: 1.0,
            floor_margin: 0.1,
            floor_reference: None,
            occluder_samples: 256,
        }
    }
}

impl Knobs {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(format!("recipe: {what}")))
            }
        };
        check(
            (0.0..=1.0).contains(&self.jitter_fraction),
            "jitter_fraction must be in [0, 1]",
        )?;
        check(
            self.r_occ_factor >= 0.0 && self.r_occ_factor.is_finite(),
            "r_occ_factor must be >= 0",
        )?;
        check(
            self.r_occ.is_none_or(|r| r >= 0.0 && r.is_finite()),
            "r_occ must be >= 0",
        )?;
        check(
            self.primitive_scale > 0.0 && self.primitive_scale.is_finite(),
            "primitive_scale must be > 0",
        )?;
        check(
            self.wall_density > 0.0 && self.wall_density.is_finite(),
            "wall_density must be > 0",
        )?;
        check(
            self.floor_margin >= 0.0 && self.floor_margin.is_finite(),
            "floor_margin must be >= 0",
        )?;
        check(
            self.floor_reference.is_none_or(|(lo, hi)| lo < hi),
            "floor reference needs min < max",
        )?;
        check(self.occluder_samples >= 1, "occluder_samples must be >= 1")
    }
}

const PIN_KEYS: &[&str] = &[
    "eoi.objects",
    "eoi.points",
    "eoi.distance",
    "biw.distance",
    "oboo.objects",
    "oboo.points",
    "oboo.distance",
    "djt.jitter",
    "djt.trail",
    "tr.theta",
    "tr.theta_x",
    "tr.theta_y",
    "tr.theta_z",
    "is.scale",
    "rcc.subset",
];

/// Knobs plus pinned parameter values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Recipe {
    pub knobs: Knobs,
    pins: BTreeMap<String, String>,
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::invalid(format!("recipe: {key} expects a number, got {v:?}")))
}

impl Recipe {
    pub fn parse(text: &str) -> Result<Self> {
        let mut recipe = Recipe::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("recipe line {}: expected key = value", lineno + 1)))?;
            recipe.set(k.trim(), v.trim())?;
        }
        recipe.knobs.validate()?;
        Ok(recipe)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Sets one knob or pin. Pins are checked when applied.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let k = &mut self.knobs;
        match key {
            "jitter_fraction" | "phi" => k.jitter_fraction = parse_f64(key, value)?,
            "r_occ_factor" => k.r_occ_factor = parse_f64(key, value)?,
            "r_occ" => k.r_occ = Some(parse_f64(key, value)?),
            "primitive_scale" => k.primitive_scale = parse_f64(key, value)?,
            "wall_density" => k.wall_density = parse_f64(key, value)?,
            "floor_margin" => k.floor_margin = parse_f64(key, value)?,
            "floor_ref_min" => {
                let hi = k.floor_reference.map_or(0.5, |r| r.1);
                k.floor_reference = Some((parse_f64(key, value)?, hi));
            }
            "floor_ref_max" => {
                let lo = k.floor_reference.map_or(-0.5, |r| r.0);
                k.floor_reference = Some((lo, parse_f64(key, value)?));
            }
            "occluder_samples" => {
                k.occluder_samples = value
                    .parse()
                    .map_err(|_| Error::invalid(format!("recipe: {key} expects an integer")))?
            }
            pin if PIN_KEYS.contains(&pin) => {
                self.pins.insert(pin.to_string(), value.to_string());
            }
            other => return Err(Error::invalid(format!("recipe: unknown key {other:?}"))),
        }
        Ok(())
    }

    pub fn has_pins(&self) -> bool {
        !self.pins.is_empty()
    }

    fn pin(&self, key: &str) -> Option<&str> {
        self.pins.get(key).map(String::as_str)
    }

    fn pin_f64(&self, key: &str) -> Result<Option<f64>> {
        self.pin(key).map(|v| parse_f64(key, v)).transpose()
    }

    fn pin_u32(&self, key: &str) -> Result<Option<u32>> {
        self.pin(key)
            .map(|v| {
                v.trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("recipe: {key} expects an integer")))
            })
            .transpose()
    }

    fn pin_fraction(&self, key: &str) -> Result<Option<Fraction>> {
        self.pin(key).map(str::parse).transpose()
    }

    /// The pinned combination subset, if any.
    pub fn pinned_subset(&self) -> Result<Option<Vec<CorruptionKind>>> {
        let Some(v) = self.pin("rcc.subset") else {
            return Ok(None);
        };
        let kinds = v
            .split([',', '+'])
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse::<CorruptionKind>)
            .collect::<Result<Vec<_>>>()?;
        if kinds.contains(&CorruptionKind::Rcc) {
            return Err(Error::invalid("recipe: rcc.subset cannot contain R_CC"));
        }
        Ok(Some(kinds))
    }

    /// Overrides pinned values in `params` (recursing into combinations).
    pub fn apply_pins(&self, params: &mut CorruptionParams) -> Result<()> {
        match params {
            CorruptionParams::Eoi {
                objects,
                points,
                distance,
                ..
            } => {
                if let Some(v) = self.pin_u32("eoi.objects")? {
                    *objects = v;
                }
                if let Some(v) = self.pin_fraction("eoi.points")? {
                    *points = v;
                }
                if let Some(v) = self.pin_f64("eoi.distance")? {
                    *distance = v;
                }
            }
            CorruptionParams::Biw { distance } => {
                if let Some(v) = self.pin_f64("biw.distance")? {
                    *distance = v;
                }
            }
            CorruptionParams::Bif => {}
            CorruptionParams::Oboo {
                objects,
                points,
                distance,
                ..
            } => {
                if let Some(v) = self.pin_u32("oboo.objects")? {
                    *objects = v;
                }
                if let Some(v) = self.pin_fraction("oboo.points")? {
                    *points = v;
                }
                if let Some(v) = self.pin_f64("oboo.distance")? {
                    *distance = v;
                }
            }
            CorruptionParams::Djt { jitter, trail } => {
                if let Some(v) = self.pin_f64("djt.jitter")? {
                    *jitter = v;
                }
                if let Some(v) = self.pin_f64("djt.trail")? {
                    *trail = v;
                }
            }
            CorruptionParams::Tr { degrees } => {
                if let Some(v) = self.pin("tr.theta") {
                    let parts: Vec<f64> = v.split(',').map(|s| parse_f64("tr.theta", s)).collect::<Result<_>>()?;
                    if parts.len() != 3 {
                        return Err(Error::invalid("recipe: tr.theta expects three angles"));
                    }
                    degrees.copy_from_slice(&parts);
                }
                for (i, key) in ["tr.theta_x", "tr.theta_y", "tr.theta_z"].iter().enumerate() {
                    if let Some(v) = self.pin_f64(key)? {
                        degrees[i] = v;
                    }
                }
            }
            CorruptionParams::Is { scale } => {
                if let Some(v) = self.pin_f64("is.scale")? {
                    *scale = v;
                }
            }
            CorruptionParams::Rcc { members } => {
                for m in members {
                    self.apply_pins(m)?;
                }
            }
        }
        Ok(())
    }
}
