//! Training-curve CSV: `episode,episode_return,eval_success` with the
//! evaluation column empty on non-evaluation episodes.

use std::path::Path;

use super::AnalysisError;
use crate::marl::CurvePoint;

pub fn write_curve_csv(points: &[CurvePoint], path: &Path) -> Result<(), AnalysisError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["episode", "episode_return", "eval_success"])?;
    for p in points {
        w.write_record([
            p.episode.to_string(),
            format!("{:.6}", p.episode_return),
            p.eval_success.map(|s| format!("{s:.6}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurvePoint>, AnalysisError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| record.get(i).unwrap_or_default();
        out.push(CurvePoint {
            episode: get(0).parse().map_err(|_| AnalysisError::BadField("episode"))?,
            episode_return: get(1)
                .parse()
                .map_err(|_| AnalysisError::BadField("episode_return"))?,
            eval_success: if get(2).is_empty() {
                None
            } else {
                Some(get(2).parse().map_err(|_| AnalysisError::BadField("eval_success"))?)
            },
        });
    }
    Ok(out)
}
