//! The eight point-cloud corruptions and the seeded dataset builder.
//!
//! External corruptions (`E_OI`, `BI_W`, `BI_F`) append points labeled
//! [`Label::Added`](crate::geom::Label) and never touch the input points.
//! `O_BOO` only removes object points. `D_JT`, `T_R` and `I_S` move points
//! and keep the count. `R_CC` threads the cloud through a subset of the
//! others in a fixed order.

mod dataset;
mod external;
mod internal;
mod placement;
mod recipe;
mod spec;

pub use dataset::{build_dataset, BuildOptions, DatasetManifest, ManifestEntry, Split};
pub use external::{apply_bif, apply_biw, apply_eoi, floor_reference, wall_layout, WallLayout};
pub use internal::{apply_djt, apply_is, apply_oboo, apply_tr};
pub use recipe::{Knobs, Recipe};
pub use spec::{domain, sample_params, sample_params_with, CorruptionKind, CorruptionParams, CorruptionSpec, Fraction};

use crate::error::{Error, Result};
use crate::geom::{PointCloud, RngStream};

/// Point bookkeeping for one corruption.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorruptionStats {
    pub added: usize,
    pub removed: usize,
    pub displaced: usize,
}

impl std::ops::Add for CorruptionStats {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            added: self.added + o.added,
            removed: self.removed + o.removed,
            displaced: self.displaced + o.displaced,
        }
    }
}

/// A corrupted cloud together with what produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CorruptionResult {
    /// Output cloud; always carries labels.
    pub cloud: PointCloud,
    pub spec: CorruptionSpec,
    pub stats: CorruptionStats,
}

/// Applies any corruption, dispatching on the spec's kind.
pub fn apply(
    cloud: &PointCloud,
    spec: &CorruptionSpec,
    knobs: &Knobs,
    rng: &mut RngStream,
) -> Result<CorruptionResult> {
    spec.params.validate()?;
    let labeled = cloud.clone().labeled();
    let mut result = match spec.kind() {
        CorruptionKind::Eoi => apply_eoi(&labeled, spec, knobs, rng),
        CorruptionKind::Biw => apply_biw(&labeled, spec, knobs, rng),
        CorruptionKind::Bif => apply_bif(&labeled, spec, knobs, rng),
        CorruptionKind::Oboo => apply_oboo(&labeled, spec, knobs, rng),
        CorruptionKind::Djt => apply_djt(&labeled, spec, knobs, rng),
        CorruptionKind::Tr => apply_tr(&labeled, spec),
        CorruptionKind::Is => apply_is(&labeled, spec),
        CorruptionKind::Rcc => apply_rcc(&labeled, spec, knobs, rng),
    }?;
    result.cloud = result.cloud.labeled();
    Ok(result)
}

/// Sub-spec of a combination member: same parameters, child stream key.
pub fn member_spec(parent: &CorruptionSpec, member: &CorruptionParams) -> CorruptionSpec {
    CorruptionSpec {
        params: member.clone(),
        key: parent.key.child(member.kind().tag()),
    }
}

/// Random combined corruption: applies each member in order, each with its
/// own child stream of `rng`.
pub fn apply_rcc(
    cloud: &PointCloud,
    spec: &CorruptionSpec,
    knobs: &Knobs,
    rng: &mut RngStream,
) -> Result<CorruptionResult> {
    let CorruptionParams::Rcc { members } = &spec.params else {
        return Err(Error::invalid(format!("expected a R_CC spec, got {}", spec.kind())));
    };
    let (lo, hi) = domain::COMBINATION_SIZE;
    if members.len() < lo || members.len() > hi {
        return Err(Error::invalid(format!(
            "R_CC needs {lo}..={hi} members, got {}",
            members.len()
        )));
    }
    cloud.ensure_nonempty()?;
    let mut current = cloud.clone().labeled();
    let mut stats = CorruptionStats::default();
    for member in members {
        let sub = member_spec(spec, member);
        let mut sub_rng = rng.child(member.kind().tag());
        let step = apply(&current, &sub, knobs, &mut sub_rng)?;
        current = step.cloud;
        stats = stats + step.stats;
    }
    Ok(CorruptionResult {
        cloud: current,
        spec: spec.clone(),
        stats,
    })
}
