//! Modified band depth of a curve within a window of curves, and the rolling
//! depth series built from it.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether a coordinate on the boundary of a band counts as inside.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMode {
    #[default]
    Closed,
    Open,
}

impl std::str::FromStr for IntervalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed" => Ok(IntervalMode::Closed),
            "open" => Ok(IntervalMode::Open),
            other => Err(Error::invalid(format!("unknown interval mode `{other}`"))),
        }
    }
}

/// Curves of equal length; at least two.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveWindow<'a> {
    curves: Vec<&'a [f64]>,
}

impl<'a> CurveWindow<'a> {
    pub fn new(curves: Vec<&'a [f64]>) -> Result<Self> {
        if curves.len() < 2 {
            return Err(Error::invalid("a depth window needs at least two curves"));
        }
        let len = curves[0].len();
        if let Some(bad) = curves.iter().find(|c| c.len() != len) {
            return Err(Error::LengthMismatch {
                expected: len,
                got: bad.len(),
            });
        }
        Ok(Self { curves })
    }

    pub fn size(&self) -> usize {
        self.curves.len()
    }

    pub fn curve_len(&self) -> usize {
        self.curves[0].len()
    }
}

/// Average over all curve pairs of the fraction of coordinates at which
/// `target` lies inside the pair's pointwise band.
pub fn mbd(target: &[f64], window: &CurveWindow<'_>, mode: IntervalMode) -> Result<f64> {
    let len = window.curve_len();
    if target.len() != len {
        return Err(Error::LengthMismatch {
            expected: len,
            got: target.len(),
        });
    }
    if len == 0 {
        return Err(Error::invalid("curves must have at least one coordinate"));
    }
    let w = window.size();
    let mut inside = 0usize;
    for s in 0..w {
        for m in s + 1..w {
            let (x, y) = (window.curves[s], window.curves[m]);
            inside += target
                .iter()
                .enumerate()
                .filter(|&(i, &v)| {
                    let (a, b) = (x[i].min(y[i]), x[i].max(y[i]));
                    match mode {
                        IntervalMode::Closed => a <= v && v <= b,
                        IntervalMode::Open => a < v && v < b,
                    }
                })
                .count();
        }
    }
    let pairs = w * (w - 1) / 2;
    Ok(inside as f64 / (pairs * len) as f64)
}

/// Depth of each curve within the trailing window of `w` curves ending at
/// it; the first `w − 1` entries are undefined.
pub fn rolling_depth(series: &[Vec<f64>], w: usize, mode: IntervalMode) -> Result<Vec<Option<f64>>> {
    if w < 2 {
        return Err(Error::invalid("window size must be at least 2"));
    }
    if series.len() < w {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            need: w,
        });
    }
    let mut out = vec![None; w - 1];
    for t in w - 1..series.len() {
        let window = CurveWindow::new(series[t + 1 - w..=t].iter().rev().map(Vec::as_slice).collect())?;
        out.push(Some(mbd(&series[t], &window, mode)?));
    }
    Ok(out)
}

/// Writes `date,dim,depth` rows; undefined depths become empty fields.
pub fn write_depth_csv<W: Write>(rows: &[(String, usize, Option<f64>)], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "dim", "depth"])?;
    for (date, dim, depth) in rows {
        w.write_record([
            date.clone(),
            dim.to_string(),
            depth.map(|d| d.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn window(curves: &[Vec<f64>]) -> CurveWindow<'_> {
        CurveWindow::new(curves.iter().map(Vec::as_slice).collect()).unwrap()
    }

    #[test]
    fn identical_curves() {
        let curves = vec![vec![0.3, 1.0, 2.0]; 5];
        let win = window(&curves);
        assert_eq!(mbd(&curves[0], &win, IntervalMode::Closed).unwrap(), 1.0);
        assert_eq!(mbd(&curves[0], &win, IntervalMode::Open).unwrap(), 0.0);
    }

    #[test]
    fn three_scalar_curves() {
        let curves = vec![vec![-1.0], vec![1.0], vec![0.0]];
        assert_eq!(mbd(&[0.0], &window(&curves), IntervalMode::Closed).unwrap(), 1.0);
        // only the (-1, 1) band contains 0 strictly
        assert_eq!(mbd(&[0.0], &window(&curves), IntervalMode::Open).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn errors() {
        let curves = vec![vec![0.0, 1.0], vec![1.0, 2.0]];
        assert!(matches!(
            mbd(&[0.0], &window(&curves), IntervalMode::Closed),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(CurveWindow::new(vec![&[0.0][..]]).is_err());
        assert!(CurveWindow::new(vec![&[0.0][..], &[0.0, 1.0][..]]).is_err());
        assert!(matches!(
            rolling_depth(&curves, 3, IntervalMode::Closed),
            Err(Error::SeriesTooShort { len: 2, need: 3 })
        ));
        assert!(rolling_depth(&curves, 1, IntervalMode::Closed).is_err());
    }

    #[test]
    fn rolling_cases() {
        let constant = vec![vec![1.0, 2.0]; 10];
        let depths = rolling_depth(&constant, 7, IntervalMode::Closed).unwrap();
        assert_eq!(depths[..6], [None; 6]);
        assert!(depths[6..].iter().all(|d| *d == Some(1.0)));

        let exact = vec![vec![0.0]; 7];
        let depths = rolling_depth(&exact, 7, IntervalMode::Closed).unwrap();
        assert_eq!(depths.iter().filter(|d| d.is_some()).count(), 1);

        let mut spike = vec![vec![0.0]; 6];
        spike.push(vec![10.0]);
        let depths = rolling_depth(&spike, 7, IntervalMode::Closed).unwrap();
        assert_eq!(depths[6], Some(6.0 / 21.0));
    }

    #[test]
    fn csv_output() {
        let mut buf = Vec::new();
        write_depth_csv(
            &[("2018-01-01".into(), 0, None), ("2018-01-02".into(), 1, Some(0.5))],
            &mut buf,
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "date,dim,depth\n2018-01-01,0,\n2018-01-02,1,0.5\n"
        );
    }

    #[test]
    fn depth_decreases_as_a_curve_moves_away() {
        let base: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let mut last = f64::INFINITY;
        for step in 0..20 {
            let shift = step as f64 * 0.1;
            let mut series = vec![base.clone(); 6];
            series.push(base.iter().map(|x| x + shift).collect());
            let depth = rolling_depth(&series, 7, IntervalMode::Closed).unwrap()[6].unwrap();
            if step == 0 {
                assert_eq!(depth, 1.0);
            }
            assert!(depth <= last);
            last = depth;
        }
    }

    /// Values on a 1/64 lattice so that the affine maps below are exact.
    fn arb_window() -> impl Strategy<Value = (Vec<f64>, Vec<Vec<f64>>)> {
        let coord = (-320i32..320).prop_map(|k| k as f64 / 64.0);
        (2usize..8, 1usize..10).prop_flat_map(move |(w, len)| {
            (
                proptest::collection::vec(coord.clone(), len),
                proptest::collection::vec(proptest::collection::vec(coord.clone(), len), w),
            )
        })
    }

    proptest! {
        #[test]
        fn depth_properties((target, curves) in arb_window(), a in 0.1..10.0f64, b in -3.0..3.0f64, seed in any::<u64>()) {
            let win = window(&curves);
            let closed = mbd(&target, &win, IntervalMode::Closed).unwrap();
            let open = mbd(&target, &win, IntervalMode::Open).unwrap();
            prop_assert!((0.0..=1.0).contains(&closed));
            prop_assert!((0.0..=1.0).contains(&open));
            prop_assert!(closed >= open);

            // coordinate permutation
            let len = target.len();
            let mut perm: Vec<usize> = (0..len).collect();
            perm.sort_by_key(|&i| (i as u64).wrapping_mul(seed | 1).rotate_left(17));
            let permute = |v: &Vec<f64>| perm.iter().map(|&i| v[i]).collect::<Vec<f64>>();
            let pcurves: Vec<Vec<f64>> = curves.iter().map(permute).collect();
            let p = mbd(&permute(&target), &window(&pcurves), IntervalMode::Closed).unwrap();
            prop_assert_eq!(p, closed);

            // power-of-two scale and integer shift keep lattice values exact
            let scale = 2f64.powi((a.log2().round()) as i32);
            let shift = b.round();
            let affine = |v: &Vec<f64>| v.iter().map(|x| scale * x + shift).collect::<Vec<f64>>();
            let acurves: Vec<Vec<f64>> = curves.iter().map(affine).collect();
            let s = mbd(&affine(&target), &window(&acurves), IntervalMode::Closed).unwrap();
            prop_assert_eq!(s, closed);
        }
    }
}
