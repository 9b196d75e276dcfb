use rayon::prelude::*;

use crate::error::{Error, Result};

/// Max over probes of the Euclidean distance to the nearest cover point.
pub fn covering_radius(cover: &[Vec<f64>], probes: &[Vec<f64>]) -> Result<f64> {
    if cover.is_empty() || probes.is_empty() {
        return Err(Error::Input("covering radius needs nonempty cover and probe sets".into()));
    }
    let dim = cover[0].len();
    if let Some(v) = cover.iter().chain(probes).find(|v| v.len() != dim) {
        return Err(Error::Shape(format!("point of dimension {} among dimension {dim}", v.len())));
    }
    let worst = probes
        .par_iter()
        .map(|q| {
            cover
                .iter()
                .map(|c| c.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let pts = vec![vec![0.0, 1.0], vec![2.0, 3.0]];
        assert_eq!(covering_radius(&pts, &pts[..1]).unwrap(), 0.0);
        let probes = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![0.0, -3.0]];
        assert_eq!(covering_radius(&[vec![0.0, 0.0]], &probes).unwrap(), 3.0);
        assert!(matches!(covering_radius(&[], &probes), Err(Error::Input(_))));
        assert!(matches!(covering_radius(&[vec![0.0]], &probes), Err(Error::Shape(_))));
    }

    proptest! {
        #[test]
        fn superset_never_increases(
            cover in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..10),
            extra in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 0..10),
            probes in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..10),
        ) {
            let base = covering_radius(&cover, &probes).unwrap();
            let mut sup = cover.clone();
            sup.extend(extra);
            prop_assert!(covering_radius(&sup, &probes).unwrap() <= base);
        }
    }
}
