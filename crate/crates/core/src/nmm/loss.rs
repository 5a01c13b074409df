//! Feature normalization and the contrastive losses.

use ndarray::{Array2, Array3, Axis};

use crate::error::{Error, Result};

use super::layers::{flat, unflat};

/// Lower bound on the norm used when normalizing, so zero vectors map to zero.
pub const NORM_FLOOR: f64 = 1e-12;

/// Scales every length-`D` vector to unit Euclidean norm.
pub fn normalize(x: &Array3<f64>) -> Array3<f64> {
    let mut y = x.clone();
    for mut v in y.lanes_mut(Axis(2)) {
        let n = v.dot(&v).sqrt().max(NORM_FLOOR);
        v /= n;
    }
    y
}

/// Gradient through [`normalize`] given the input `x`, output `y` and upstream `dy`.
pub fn normalize_backward(x: &Array3<f64>, y: &Array3<f64>, dy: &Array3<f64>) -> Array3<f64> {
    let mut dx = dy.clone();
    for ((mut g, xv), yv) in dx
        .lanes_mut(Axis(2))
        .into_iter()
        .zip(x.lanes(Axis(2)))
        .zip(y.lanes(Axis(2)))
    {
        let norm = xv.dot(&xv).sqrt();
        if norm > NORM_FLOOR {
            let proj = yv.dot(&g);
            g.zip_mut_with(&yv, |gi, &yi| *gi -= yi * proj);
            g /= norm;
        } else {
            g /= NORM_FLOOR;
        }
    }
    dx
}

fn same_shape(a: &Array3<f64>, b: &Array3<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!(
            "feature shapes differ: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// Mean cosine similarity of corresponding vectors.
pub fn mean_cosine(a: &Array3<f64>, b: &Array3<f64>) -> Result<f64> {
    same_shape(a, b)?;
    let (na, nb) = (normalize(a), normalize(b));
    let m = (a.len() / a.dim().2.max(1)) as f64;
    Ok((&na * &nb).sum() / m)
}

/// Negative mean inner product of corresponding (normalized) vectors, with
/// its gradient with respect to `clean`.
pub fn positive_loss_grad(clean: &Array3<f64>, target: &Array3<f64>) -> Result<(f64, Array3<f64>)> {
    same_shape(clean, target)?;
    let m = (clean.dim().0 * clean.dim().1) as f64;
    let loss = -(clean * target).sum() / m;
    let grad = target * (-1.0 / m);
    Ok((loss, grad))
}

/// Positive loss: `-(1/M) sum <clean_m, target_m>`.
pub fn positive_loss(clean: &Array3<f64>, target: &Array3<f64>) -> Result<f64> {
    same_shape(clean, target)?;
    let m = (clean.dim().0 * clean.dim().1) as f64;
    Ok(-(clean * target).sum() / m)
}

/// Negative loss and its gradients with respect to `clean` and `noisy`.
///
/// `t * log sum_{i != j} exp(<clean_i, noisy_j> / t)` over all `M = B*L`
/// flattened vectors, computed with max-subtraction.
pub fn negative_loss_grad(clean: &Array3<f64>, noisy: &Array3<f64>, t: f64) -> Result<(f64, Array3<f64>, Array3<f64>)> {
    same_shape(clean, noisy)?;
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::invalid(format!("temperature must be positive, got {t}")));
    }
    let (b, l, _) = clean.dim();
    let m = b * l;
    if m < 2 {
        return Err(Error::invalid(format!(
            "negative loss needs at least 2 vectors, got {m}"
        )));
    }
    let (c, n) = (flat(clean), flat(noisy));
    let sims = c.dot(&n.t());
    let mut max = f64::NEG_INFINITY;
    for ((i, j), &s) in sims.indexed_iter() {
        if i != j {
            max = max.max(s / t);
        }
    }
    let mut w = Array2::zeros((m, m));
    let mut total = 0.0;
    for ((i, j), &s) in sims.indexed_iter() {
        if i != j {
            let e = (s / t - max).exp();
            w[[i, j]] = e;
            total += e;
        }
    }
    let loss = t * (max + total.ln());
    w /= total;
    let dc = unflat(w.dot(&n), b, l);
    let dn = unflat(w.t().dot(&c), b, l);
    Ok((loss, dc, dn))
}

/// Negative loss value; see [`negative_loss_grad`].
pub fn negative_loss(clean: &Array3<f64>, noisy: &Array3<f64>, t: f64) -> Result<f64> {
    Ok(negative_loss_grad(clean, noisy, t)?.0)
}

/// `l_pos + l_neg`.
pub fn nmm_loss(l_pos: f64, l_neg: f64) -> f64 {
    l_pos + l_neg
}

/// `l_completion + l_nmm`.
pub fn total_loss(l_completion: f64, l_nmm: f64) -> f64 {
    l_completion + l_nmm
}

/// All loss terms of one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub l_pos: f64,
    pub l_neg: f64,
    pub l_nmm: f64,
    pub l_completion: f64,
    pub l_total: f64,
}

impl LossBreakdown {
    pub fn new(l_pos: f64, l_neg: f64, l_completion: f64) -> Self {
        let l_nmm = nmm_loss(l_pos, l_neg);
        Self {
            l_pos,
            l_neg,
            l_nmm,
            l_completion,
            l_total: total_loss(l_completion, l_nmm),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.l_pos, self.l_neg, self.l_nmm, self.l_completion, self.l_total]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(rows: &[usize], d: usize, sign: f64) -> Array3<f64> {
        let mut x = Array3::zeros((1, rows.len(), d));
        for (l, &r) in rows.iter().enumerate() {
            x[[0, l, r]] = sign;
        }
        x
    }

    #[test]
    fn positive_loss_analytic() {
        let a = basis(&[0, 1], 4, 1.0);
        assert_eq!(positive_loss(&a, &a).unwrap(), -1.0);
        assert_eq!(positive_loss(&a, &basis(&[2, 3], 4, 1.0)).unwrap(), 0.0);
        assert_eq!(positive_loss(&a, &basis(&[0, 1], 4, -1.0)).unwrap(), 1.0);
    }

    #[test]
    fn negative_loss_analytic() {
        let c = basis(&[0, 1, 2, 3], 8, 1.0);
        let n = basis(&[4, 5, 6, 7], 8, 1.0);
        assert!((negative_loss(&c, &n, 1.0).unwrap() - 12f64.ln()).abs() < 1e-15);
        let ones = Array3::from_elem((1, 3, 1), 1.0);
        assert!((negative_loss(&ones, &ones, 1.0).unwrap() - (1.0 + 6f64.ln())).abs() < 1e-15);
        assert!(negative_loss(&ones, &ones, 0.0).is_err());
        assert!(negative_loss(&basis(&[0], 2, 1.0), &basis(&[1], 2, 1.0), 1.0).is_err());
    }

    #[test]
    fn normalize_is_idempotent_and_zero_safe() {
        let x = Array3::from_shape_fn((2, 3, 4), |(a, b, c)| (a + 2 * b) as f64 - c as f64 * 0.7);
        let y = normalize(&x);
        let z = normalize(&y);
        assert!(y.iter().zip(z.iter()).all(|(a, b)| (a - b).abs() < 1e-12));
        let zero = Array3::zeros((1, 2, 3));
        assert!(normalize(&zero).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn breakdown_sums() {
        let b = LossBreakdown::new(-1.0, 2.4849, 0.0);
        assert_eq!(b.l_nmm, -1.0 + 2.4849);
        assert_eq!(b.l_total, b.l_nmm);
    }
}
