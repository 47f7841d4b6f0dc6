use super::{Tape, Tensor};
use crate::error::Result;

/// Outcome of comparing tape gradients with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_err: f64,
    /// `(input, element)` with the largest error.
    pub worst: (usize, usize),
    pub checked: usize,
}

/// Relative error with a denominator floor, so entries whose true gradient
/// is (numerically) zero are judged on absolute error `floor`-scaled.
pub fn rel_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Checks `∂f/∂inputs` at the listed `(input, element)` positions, or at
/// every element when `picks` is `None`. `f` must return a scalar.
pub fn check_gradients<F>(
    inputs: &[Tensor<f64>],
    picks: Option<&[(usize, usize)]>,
    eps: f64,
    floor: f64,
    f: F,
) -> Result<GradCheck>
where
    F: Fn(&Tape<f64>, &[Tensor<f64>]) -> Result<Tensor<f64>>,
{
    let tape = Tape::new();
    let watched: Vec<Tensor<f64>> = inputs.iter().map(|t| tape.watch(t)).collect();
    let loss = f(&tape, &watched)?;
    let grads = tape.backward(&loss)?;
    let analytic: Vec<Tensor<f64>> = watched.iter().map(|t| grads.get_or_zeros(t)).collect();

    let all: Vec<(usize, usize)>;
    let picks = match picks {
        Some(p) => p,
        None => {
            all = inputs
                .iter()
                .enumerate()
                .flat_map(|(i, t)| (0..t.numel()).map(move |j| (i, j)))
                .collect();
            &all
        }
    };
    let eval = |i: usize, j: usize, delta: f64| -> Result<f64> {
        let mut moved = inputs.to_vec();
        let mut data = moved[i].data().to_vec();
        data[j] += delta;
        moved[i] = Tensor::new(moved[i].shape().to_vec(), data)?;
        f(&Tape::new(), &moved)?.item()
    };
    let mut out = GradCheck {
        max_rel_err: 0.0,
        worst: (0, 0),
        checked: 0,
    };
    for &(i, j) in picks {
        let numeric = (eval(i, j, eps)? - eval(i, j, -eps)?) / (2.0 * eps);
        let e = rel_err(analytic[i].data()[j], numeric, floor);
        if e > out.max_rel_err || out.checked == 0 {
            out.max_rel_err = e;
            out.worst = (i, j);
        }
        out.checked += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_passes() {
        let x = Tensor::new([3], vec![0.5, -1.0, 2.0]).unwrap();
        let r = check_gradients(&[x], None, 1e-4, 1e-3, |t, v| {
            let sq = t.mul(&v[0], &v[0])?;
            t.sum(&sq)
        })
        .unwrap();
        assert_eq!(r.checked, 3);
        assert!(r.max_rel_err < 1e-8);
    }

    #[test]
    fn wrong_gradient_is_caught() {
        // relu at exactly zero has a one-sided derivative the FD cannot see
        let x = Tensor::new([1], vec![0.0]).unwrap();
        let r = check_gradients(&[x], None, 1e-4, 1e-3, |t, v| {
            let y = t.relu(&v[0])?;
            t.sum(&y)
        })
        .unwrap();
        assert!(r.max_rel_err > 0.1);
    }
}
