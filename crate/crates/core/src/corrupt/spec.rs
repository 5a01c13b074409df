//! Corruption kinds, their parameter domains, and parameter sampling.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{RngStream, StreamKey};

use super::recipe::Recipe;

/// The eight corruption categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CorruptionKind {
    /// External object interference.
    Eoi,
    /// Background wall.
    Biw,
    /// Background floor.
    Bif,
    /// Occlusion by other objects.
    Oboo,
    /// Dynamic jitter with trajectory.
    Djt,
    /// Triaxial rotation.
    Tr,
    /// Isometric scaling.
    Is,
    /// Random combination of the seven kinds above.
    Rcc,
}

impl CorruptionKind {
    /// Table order: the column order of reports.
    pub const ALL: [CorruptionKind; 8] = [
        CorruptionKind::Eoi,
        CorruptionKind::Biw,
        CorruptionKind::Bif,
        CorruptionKind::Oboo,
        CorruptionKind::Djt,
        CorruptionKind::Tr,
        CorruptionKind::Is,
        CorruptionKind::Rcc,
    ];

    /// Kinds that may appear inside a combination.
    pub const COMBINABLE: [CorruptionKind; 7] = [
        CorruptionKind::Eoi,
        CorruptionKind::Biw,
        CorruptionKind::Bif,
        CorruptionKind::Oboo,
        CorruptionKind::Djt,
        CorruptionKind::Tr,
        CorruptionKind::Is,
    ];

    /// Order in which a combination applies its members: geometric
    /// transforms first, then removal, then added clutter.
    pub const COMBINATION_ORDER: [CorruptionKind; 7] = [
        CorruptionKind::Is,
        CorruptionKind::Tr,
        CorruptionKind::Djt,
        CorruptionKind::Oboo,
        CorruptionKind::Eoi,
        CorruptionKind::Biw,
        CorruptionKind::Bif,
    ];

    /// Canonical tag, also used as the random-stream kind tag.
    pub fn tag(self) -> &'static str {
        match self {
            CorruptionKind::Eoi => "E_OI",
            CorruptionKind::Biw => "BI_W",
            CorruptionKind::Bif => "BI_F",
            CorruptionKind::Oboo => "O_BOO",
            CorruptionKind::Djt => "D_JT",
            CorruptionKind::Tr => "T_R",
            CorruptionKind::Is => "I_S",
            CorruptionKind::Rcc => "R_CC",
        }
    }

    /// Lowercase short name used on the command line and in directory names.
    pub fn short(self) -> &'static str {
        match self {
            CorruptionKind::Eoi => "eoi",
            CorruptionKind::Biw => "biw",
            CorruptionKind::Bif => "bif",
            CorruptionKind::Oboo => "oboo",
            CorruptionKind::Djt => "djt",
            CorruptionKind::Tr => "tr",
            CorruptionKind::Is => "is",
            CorruptionKind::Rcc => "rcc",
        }
    }

    fn combination_rank(self) -> usize {
        Self::COMBINATION_ORDER
            .iter()
            .position(|&k| k == self)
            .unwrap_or(usize::MAX)
    }
}

impl fmt::Display for CorruptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for CorruptionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .collect::<String>()
            .to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|k| k.short() == norm)
            .ok_or_else(|| Error::invalid(format!("unknown corruption kind {s:?}")))
    }
}

/// An exact fraction such as 1/16.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fraction {
    pub num: u32,
    pub den: u32,
}

impl Fraction {
    pub const fn new(num: u32, den: u32) -> Self {
        Self { num, den }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `round(self * n)` with halves rounded up, in exact integer arithmetic.
    pub fn of_count(self, n: usize) -> usize {
        let (num, den) = (self.num as u128, self.den as u128);
        ((2 * n as u128 * num + den) / (2 * den)) as usize
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("expected a fraction like 1/8, got {s:?}"));
        let (n, d) = s.trim().split_once('/').ok_or_else(bad)?;
        let num = n.trim().parse().map_err(|_| bad())?;
        let den: u32 = d.trim().parse().map_err(|_| bad())?;
        if den == 0 {
            return Err(bad());
        }
        Ok(Self { num, den })
    }
}

/// Parameter domains.
pub mod domain {
    use super::Fraction;

    pub const EOI_OBJECTS: [u32; 3] = [1, 2, 3];
    pub const EOI_POINTS: [Fraction; 4] = [
        Fraction::new(1, 16),
        Fraction::new(1, 12),
        Fraction::new(1, 8),
        Fraction::new(1, 4),
    ];
    pub const OBOO_OBJECTS: [u32; 4] = [1, 2, 3, 4];
    pub const OBOO_POINTS: [Fraction; 6] = [
        Fraction::new(1, 8),
        Fraction::new(1, 7),
        Fraction::new(1, 6),
        Fraction::new(1, 5),
        Fraction::new(1, 4),
        Fraction::new(1, 3),
    ];
    /// Size of the basic-shape set.
    pub const SHAPES: u32 = 12;
    pub const OBJECT_DISTANCE: (f64, f64) = (0.05, 0.2);
    pub const WALL_DISTANCE: (f64, f64) = (0.01, 0.05);
    pub const JITTER: (f64, f64) = (0.01, 0.05);
    pub const TRAIL: (f64, f64) = (0.02, 0.04);
    /// Degrees, per axis.
    pub const ANGLE: (f64, f64) = (0.0, 10.0);
    pub const SCALE: (f64, f64) = (0.25, 2.0);
    pub const COMBINATION_SIZE: (usize, usize) = (2, 7);
}

/// Resolved parameters of one corruption.
#[derive(Debug, Clone, PartialEq)]
pub enum CorruptionParams {
    Eoi {
        objects: u32,
        points: Fraction,
        shapes: u32,
        distance: f64,
    },
    Biw {
        distance: f64,
    },
    Bif,
    Oboo {
        objects: u32,
        points: Fraction,
        shapes: u32,
        distance: f64,
    },
    Djt {
        jitter: f64,
        trail: f64,
    },
    Tr {
        degrees: [f64; 3],
    },
    Is {
        scale: f64,
    },
    /// Members in application order.
    Rcc {
        members: Vec<CorruptionParams>,
    },
}

fn in_range(v: f64, (lo, hi): (f64, f64)) -> bool {
    v >= lo && v <= hi
}

impl CorruptionParams {
    pub fn kind(&self) -> CorruptionKind {
        match self {
            CorruptionParams::Eoi { .. } => CorruptionKind::Eoi,
            CorruptionParams::Biw { .. } => CorruptionKind::Biw,
            CorruptionParams::Bif => CorruptionKind::Bif,
            CorruptionParams::Oboo { .. } => CorruptionKind::Oboo,
            CorruptionParams::Djt { .. } => CorruptionKind::Djt,
            CorruptionParams::Tr { .. } => CorruptionKind::Tr,
            CorruptionParams::Is { .. } => CorruptionKind::Is,
            CorruptionParams::Rcc { .. } => CorruptionKind::Rcc,
        }
    }

    /// Checks every value against its domain.
    pub fn validate(&self) -> Result<()> {
        let fail = |what: &str| Err(Error::invalid(format!("{}: {what} outside its domain", self.kind())));
        match self {
            CorruptionParams::Eoi {
                objects,
                points,
                shapes,
                distance,
            } => {
                if !domain::EOI_OBJECTS.contains(objects) {
                    return fail("N_o");
                }
                if !domain::EOI_POINTS.contains(points) {
                    return fail("N_p");
                }
                if *shapes != domain::SHAPES {
                    return fail("N_s");
                }
                if !in_range(*distance, domain::OBJECT_DISTANCE) {
                    return fail("N_d");
                }
            }
            CorruptionParams::Biw { distance } => {
                if !in_range(*distance, domain::WALL_DISTANCE) {
                    return fail("N_d");
                }
            }
            CorruptionParams::Bif => {}
            CorruptionParams::Oboo {
                objects,
                points,
                shapes,
                distance,
            } => {
                if !domain::OBOO_OBJECTS.contains(objects) {
                    return fail("N_o");
                }
                if !domain::OBOO_POINTS.contains(points) {
                    return fail("N_p");
                }
                if *shapes != domain::SHAPES {
                    return fail("N_s");
                }
                if !in_range(*distance, domain::OBJECT_DISTANCE) {
                    return fail("N_d");
                }
            }
            CorruptionParams::Djt { jitter, trail } => {
                if !in_range(*jitter, domain::JITTER) {
                    return fail("J_a");
                }
                if !in_range(*trail, domain::TRAIL) {
                    return fail("T_d");
                }
            }
            CorruptionParams::Tr { degrees } => {
                if !degrees.iter().all(|&a| in_range(a, domain::ANGLE)) {
                    return fail("theta");
                }
            }
            CorruptionParams::Is { scale } => {
                if !in_range(*scale, domain::SCALE) {
                    return fail("s");
                }
            }
            CorruptionParams::Rcc { members } => {
                let (lo, hi) = domain::COMBINATION_SIZE;
                if members.len() < lo || members.len() > hi {
                    return fail("|S|");
                }
                let ranks: Vec<usize> = members.iter().map(|m| m.kind().combination_rank()).collect();
                if ranks.contains(&usize::MAX) {
                    return fail("S (nested combination)");
                }
                if ranks.windows(2).any(|w| w[0] >= w[1]) {
                    return fail("S (duplicate or out of order)");
                }
                for m in members {
                    m.validate()?;
                }
            }
        }
        Ok(())
    }

    /// `key=value` pairs joined by `;`. Combination members are prefixed
    /// with their tag.
    pub fn to_kv(&self) -> String {
        let mut out = Vec::new();
        self.push_kv("", &mut out);
        out.join(";")
    }

    fn push_kv(&self, prefix: &str, out: &mut Vec<String>) {
        let mut kv = |k: &str, v: String| out.push(format!("{prefix}{k}={v}"));
        match self {
            CorruptionParams::Eoi {
                objects,
                points,
                shapes,
                distance,
            }
            | CorruptionParams::Oboo {
                objects,
                points,
                shapes,
                distance,
            } => {
                kv("N_o", objects.to_string());
                kv("N_p", points.to_string());
                kv("N_s", shapes.to_string());
                kv("N_d", distance.to_string());
            }
            CorruptionParams::Biw { distance } => kv("N_d", distance.to_string()),
            CorruptionParams::Bif => {}
            CorruptionParams::Djt { jitter, trail } => {
                kv("J_a", jitter.to_string());
                kv("T_d", trail.to_string());
            }
            CorruptionParams::Tr { degrees } => {
                kv("theta_x", degrees[0].to_string());
                kv("theta_y", degrees[1].to_string());
                kv("theta_z", degrees[2].to_string());
            }
            CorruptionParams::Is { scale } => kv("s", scale.to_string()),
            CorruptionParams::Rcc { members } => {
                let tags: Vec<&str> = members.iter().map(|m| m.kind().tag()).collect();
                kv("S", tags.join("+"));
                for m in members {
                    m.push_kv(&format!("{prefix}{}.", m.kind().tag()), out);
                }
            }
        }
    }
}

/// A corruption kind with fully resolved parameters and the key of the
/// random stream it is applied with.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionSpec {
    pub params: CorruptionParams,
    pub key: StreamKey,
}

impl CorruptionSpec {
    pub fn kind(&self) -> CorruptionKind {
        self.params.kind()
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    rng.random_range(lo..=hi)
}

fn pick<T: Copy, R: Rng + ?Sized>(rng: &mut R, set: &[T]) -> T {
    set[rng.random_range(0..set.len())]
}

fn draw<R: Rng + ?Sized>(kind: CorruptionKind, rng: &mut R) -> CorruptionParams {
    match kind {
        CorruptionKind::Eoi => CorruptionParams::Eoi {
            objects: pick(rng, &domain::EOI_OBJECTS),
            points: pick(rng, &domain::EOI_POINTS),
            shapes: domain::SHAPES,
            distance: uniform(rng, domain::OBJECT_DISTANCE),
        },
        CorruptionKind::Biw => CorruptionParams::Biw {
            distance: uniform(rng, domain::WALL_DISTANCE),
        },
        CorruptionKind::Bif => CorruptionParams::Bif,
        CorruptionKind::Oboo => CorruptionParams::Oboo {
            objects: pick(rng, &domain::OBOO_OBJECTS),
            points: pick(rng, &domain::OBOO_POINTS),
            shapes: domain::SHAPES,
            distance: uniform(rng, domain::OBJECT_DISTANCE),
        },
        CorruptionKind::Djt => CorruptionParams::Djt {
            jitter: uniform(rng, domain::JITTER),
            trail: uniform(rng, domain::TRAIL),
        },
        CorruptionKind::Tr => CorruptionParams::Tr {
            degrees: [
                uniform(rng, domain::ANGLE),
                uniform(rng, domain::ANGLE),
                uniform(rng, domain::ANGLE),
            ],
        },
        CorruptionKind::Is => CorruptionParams::Is {
            scale: uniform(rng, domain::SCALE),
        },
        CorruptionKind::Rcc => {
            let (lo, hi) = domain::COMBINATION_SIZE;
            let size = rng.random_range(lo..=hi);
            let chosen: Vec<CorruptionKind> = index::sample(rng, CorruptionKind::COMBINABLE.len(), size)
                .into_iter()
                .map(|i| CorruptionKind::COMBINABLE[i])
                .collect();
            combination(chosen, rng)
        }
    }
}

/// Draws member parameters for the given subset, in application order.
fn combination<R: Rng + ?Sized>(mut subset: Vec<CorruptionKind>, rng: &mut R) -> CorruptionParams {
    subset.sort_by_key(|k| k.combination_rank());
    subset.dedup();
    CorruptionParams::Rcc {
        members: subset.into_iter().map(|k| draw(k, rng)).collect(),
    }
}

/// Draws parameters for `kind` uniformly from their domains: discrete
/// values from their listed sets, continuous values from their intervals,
/// and a combination's size uniformly in 2..=7 then its members uniformly.
pub fn sample_params(kind: CorruptionKind, rng: &mut RngStream) -> CorruptionSpec {
    CorruptionSpec {
        params: draw(kind, rng),
        key: rng.key().clone(),
    }
}

/// Like [`sample_params`], then overrides any values pinned by `recipe`.
/// Pinned values are validated against their domains.
pub fn sample_params_with(kind: CorruptionKind, recipe: &Recipe, rng: &mut RngStream) -> Result<CorruptionSpec> {
    let mut spec = sample_params(kind, rng);
    if let CorruptionParams::Rcc { members } = &spec.params {
        if let Some(subset) = recipe.pinned_subset()? {
            let (lo, hi) = domain::COMBINATION_SIZE;
            if subset.len() < lo || subset.len() > hi {
                return Err(Error::invalid(format!(
                    "pinned R_CC subset has {} members, expected {lo}..={hi}",
                    subset.len()
                )));
            }
            let keep_existing = members.iter().map(|m| m.kind()).collect::<Vec<_>>();
            if !same_set(&keep_existing, &subset) {
                spec.params = combination(subset, rng);
            }
        }
    }
    recipe.apply_pins(&mut spec.params)?;
    spec.params.validate()?;
    Ok(spec)
}

fn same_set(a: &[CorruptionKind], b: &[CorruptionKind]) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort();
    b.sort();
    a.dedup();
    b.dedup();
    a == b
}
