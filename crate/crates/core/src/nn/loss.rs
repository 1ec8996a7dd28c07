use super::NnError;

fn check(pred: &[f64], gt: &[f64]) -> Result<(), NnError> {
    if pred.len() != gt.len() || pred.is_empty() {
        return Err(NnError::ShapeMismatch(format!("{} predictions for {} targets", pred.len(), gt.len())));
    }
    Ok(())
}

pub fn mse(pred: &[f64], gt: &[f64]) -> Result<f64, NnError> {
    check(pred, gt)?;
    Ok(pred.iter().zip(gt).map(|(p, g)| (p - g) * (p - g)).sum::<f64>() / pred.len() as f64)
}

pub fn mae(pred: &[f64], gt: &[f64]) -> Result<f64, NnError> {
    check(pred, gt)?;
    Ok(pred.iter().zip(gt).map(|(p, g)| (p - g).abs()).sum::<f64>() / pred.len() as f64)
}

/// d(mse)/d(pred).
pub fn mse_grad(pred: &[f64], gt: &[f64]) -> Vec<f64> {
    let s = 2.0 / pred.len() as f64;
    pred.iter().zip(gt).map(|(p, g)| s * (p - g)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn by_hand() {
        assert_eq!(mse(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_eq!(mae(&[0.3, 0.4], &[0.3, 0.4]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 1.0], &[0.0, 2.0]).unwrap(), 1.0);
        assert_eq!(mae(&[1.0, 1.0], &[0.0, 2.0]).unwrap(), 1.0);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn mae_bounded_by_rmse(v in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..50)) {
            let (p, g): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            prop_assert!(mae(&p, &g).unwrap() <= mse(&p, &g).unwrap().sqrt() + 1e-12);
        }
    }
}
