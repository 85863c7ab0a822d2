use crate::error::{Error, Result};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b) / (dot(a, a).sqrt() * dot(b, b).sqrt())
}

fn partner(i: usize) -> usize {
    i ^ 1
}

fn check(z: &[Vec<f64>]) -> Result<()> {
    if z.is_empty() || z.len() % 2 != 0 {
        return Err(Error::BatchShape { len: z.len() });
    }
    Ok(())
}

/// NT-Xent over `2N` projections where `z[2k]` and `z[2k+1]` are the two
/// views of sample `k`: the mean over anchors of
/// `-log(exp(s_ip/τ) / Σ_{k≠i} exp(s_ik/τ))` with cosine `s`.
pub fn nt_xent(z: &[Vec<f64>], tau: f64) -> Result<f64> {
    check(z)?;
    let n = z.len();
    let mut total = 0.0;
    for i in 0..n {
        let logits: Vec<f64> = (0..n)
            .filter(|&k| k != i)
            .map(|k| cosine(&z[i], &z[k]) / tau)
            .collect();
        let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
        total += lse - cosine(&z[i], &z[partner(i)]) / tau;
    }
    Ok(total / n as f64)
}

/// Loss and its gradient with respect to each projection, for unit-norm
/// inputs (similarity is then the plain dot product).
pub fn nt_xent_grad(z: &[Vec<f64>], tau: f64) -> Result<(f64, Vec<Vec<f64>>)> {
    check(z)?;
    let n = z.len();
    let d = z[0].len();
    let sim: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|k| dot(&z[i], &z[k])).collect())
        .collect();
    let mut grad = vec![vec![0.0; d]; n];
    let mut total = 0.0;
    let scale = 1.0 / (n as f64 * tau);
    for i in 0..n {
        let m = (0..n)
            .filter(|&k| k != i)
            .map(|k| sim[i][k] / tau)
            .fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = (0..n)
            .map(|k| {
                if k == i {
                    0.0
                } else {
                    (sim[i][k] / tau - m).exp()
                }
            })
            .collect();
        let denom: f64 = weights.iter().sum();
        total += m + denom.ln() - sim[i][partner(i)] / tau;
        for k in 0..n {
            if k == i {
                continue;
            }
            // d/ds_ik of the anchor loss, times 1/τ
            let c = weights[k] / denom - if k == partner(i) { 1.0 } else { 0.0 };
            for j in 0..d {
                grad[i][j] += scale * c * z[k][j];
                grad[k][j] += scale * c * z[i][j];
            }
        }
    }
    Ok((total / n as f64, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_pair_is_exactly_zero() {
        let z = vec![vec![0.6, 0.8], vec![1.0, 0.0]];
        assert_eq!(nt_xent(&z, 0.1).unwrap(), 0.0);
        assert_eq!(nt_xent_grad(&z, 0.1).unwrap().0, 0.0);
    }

    #[test]
    fn orthogonal_negatives() {
        let z = vec![
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        ];
        let want = (1.0 + 2.0 * (-10f64).exp()).ln();
        assert!((nt_xent(&z, 0.1).unwrap() - want).abs() < 1e-15);
        assert!((want - 9.08e-5).abs() < 1e-7);
    }

    #[test]
    fn identical_views() {
        let z = vec![vec![0.0, 1.0]; 4];
        assert!((nt_xent(&z, 0.1).unwrap() - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn odd_batch_rejected() {
        assert!(matches!(
            nt_xent(&vec![vec![1.0]; 3], 0.1),
            Err(Error::BatchShape { len: 3 })
        ));
        assert!(nt_xent(&[], 0.1).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let raw = [
            [0.3, -0.2, 0.9],
            [0.1, 0.5, -0.4],
            [-0.7, 0.2, 0.1],
            [0.4, 0.4, 0.4],
            [0.0, -1.0, 0.2],
            [0.6, 0.1, -0.3],
        ];
        let unit = |v: &[f64; 3]| {
            let n = dot(v, v).sqrt();
            v.iter().map(|x| x / n).collect::<Vec<f64>>()
        };
        let z: Vec<Vec<f64>> = raw.iter().map(unit).collect();
        let (_, g) = nt_xent_grad(&z, 0.5).unwrap();
        // the loss through dot products, without re-normalizing
        let f = |z: &[Vec<f64>]| {
            let n = z.len();
            (0..n)
                .map(|i| {
                    let den: f64 = (0..n)
                        .filter(|&k| k != i)
                        .map(|k| (dot(&z[i], &z[k]) / 0.5).exp())
                        .sum();
                    den.ln() - dot(&z[i], &z[i ^ 1]) / 0.5
                })
                .sum::<f64>()
                / n as f64
        };
        let eps = 1e-6;
        for i in 0..z.len() {
            for j in 0..3 {
                let mut zp = z.clone();
                zp[i][j] += eps;
                let mut zm = z.clone();
                zm[i][j] -= eps;
                let fd = (f(&zp) - f(&zm)) / (2.0 * eps);
                assert!((fd - g[i][j]).abs() < 1e-7, "{fd} vs {}", g[i][j]);
            }
        }
    }
}
