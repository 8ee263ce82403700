//! Path export: a flat CSV for plotting and a JSON document that round-trips exactly.
//!
//! CSV columns are `t`, `lambda_r`, one `player.sequence` column per realization-plan entry
//! (empty sequences included) and one `player.{strategy}` column per reduced pure strategy.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::system::{Homotopy, PathPoint};
use super::tracer::{TraceResult, TraceStatus, TracerConfig};
use super::transform::TransformParams;
use crate::error::{Error, Result};
use crate::sequence::{MixedProfile, RealizationProfile, ReducedStrategy, SequenceSpace};

pub const PATH_FORMAT_TAG: &str = "qrepath-path v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathFormat {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathExport {
    pub format: String,
    pub players: Vec<String>,
    pub config: TracerConfig,
    pub params: TransformParams,
    pub anchor: RealizationProfile,
    pub points: Vec<PathPoint>,
    pub status: TraceStatus,
    pub nash_gap: f64,
    pub payoffs: Vec<f64>,
    pub final_gamma: RealizationProfile,
    pub final_sigma: Option<MixedProfile>,
}

fn mixed_from_behavior(strategies: &[Vec<ReducedStrategy>], behavior: &[Vec<Vec<f64>>]) -> Vec<f64> {
    strategies
        .iter()
        .zip(behavior)
        .flat_map(|(list, b)| {
            list.iter().map(move |s| {
                s.choices
                    .iter()
                    .enumerate()
                    .filter_map(|(j, c)| c.map(|a| b[j][a]))
                    .product::<f64>()
            })
        })
        .collect()
}

fn write_csv(space: &SequenceSpace, res: &TraceResult, out: &mut dyn Write) -> Result<()> {
    let h = Homotopy::new(space, res.anchor.clone(), res.params.clone())?;
    let strategies: Option<Vec<Vec<ReducedStrategy>>> = (0..space.num_players())
        .map(|i| space.reduced_strategies(i).ok())
        .collect();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string(), "lambda_r".to_string()];
    for p in space.players() {
        header.extend(p.labels.iter().map(|l| format!("{}.{l}", p.name)));
    }
    if let Some(strategies) = &strategies {
        for (i, list) in strategies.iter().enumerate() {
            let name = &space.player(i).name;
            header.extend(list.iter().map(|s| format!("{name}.{}", space.strategy_label(i, s))));
        }
    }
    w.write_record(&header)?;
    for point in &res.path {
        let mut record = vec![point.t.to_string(), point.lambda_r().to_string()];
        record.extend(h.gamma(point).plans.iter().flatten().map(f64::to_string));
        if let Some(strategies) = &strategies {
            let sigma = mixed_from_behavior(strategies, &h.behavior(point));
            record.extend(sigma.iter().map(f64::to_string));
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Write a trace in `format`. The JSON form carries every path point, the configuration and
/// the perturbation, and reads back with [`read_path_json`].
pub fn export_path(
    space: &SequenceSpace,
    res: &TraceResult,
    cfg: &TracerConfig,
    format: PathFormat,
    out: &mut dyn Write,
) -> Result<()> {
    if res.path.is_empty() {
        return Err(Error::EmptyPath);
    }
    match format {
        PathFormat::Csv => write_csv(space, res, out),
        PathFormat::Json => {
            let doc = PathExport {
                format: PATH_FORMAT_TAG.into(),
                players: space.players().iter().map(|p| p.name.clone()).collect(),
                config: cfg.clone(),
                params: res.params.clone(),
                anchor: res.anchor.clone(),
                points: res.path.clone(),
                status: res.status,
                nash_gap: res.nash_gap,
                payoffs: res.payoffs.clone(),
                final_gamma: res.final_gamma.clone(),
                final_sigma: res.final_sigma.clone(),
            };
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}

pub fn read_path_json(input: &mut dyn Read) -> Result<PathExport> {
    let doc: PathExport = serde_json::from_reader(input)?;
    if doc.format != PATH_FORMAT_TAG {
        return Err(Error::Config(format!("unsupported path format {:?}", doc.format)));
    }
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::homotopy::{random_anchor, trace};
    use crate::sequence::compile;

    fn selten_trace() -> (SequenceSpace, TraceResult) {
        let s = compile(&catalog::selten()).unwrap();
        let res = trace(
            &s,
            &random_anchor(&s, 3),
            &TransformParams::seeded(8, 1e-2, 3),
            &TracerConfig::default(),
        )
        .unwrap();
        (s, res)
    }

    #[test]
    fn csv_columns() {
        let (s, res) = selten_trace();
        let mut buf = Vec::new();
        export_path(&s, &res, &TracerConfig::default(), PathFormat::Csv, &mut buf).unwrap();
        let mut r = csv::Reader::from_reader(buf.as_slice());
        let header = r.headers().unwrap().clone();
        assert_eq!(header.len(), 1 + 1 + 11 + 7);
        assert_eq!(&header[2], "1.∅");
        assert_eq!(&header[6], "1.L/r");
        assert_eq!(&header[13], "1.{L+l}");
        assert_eq!(r.records().count(), res.path.len());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (s, res) = selten_trace();
        let mut buf = Vec::new();
        export_path(&s, &res, &TracerConfig::default(), PathFormat::Json, &mut buf).unwrap();
        let doc = read_path_json(&mut buf.as_slice()).unwrap();
        assert_eq!(doc.points, res.path);
        assert_eq!(doc.params, res.params);
        assert_eq!(doc.players, vec!["1", "2", "3"]);
    }

    #[test]
    fn empty_path_is_an_error() {
        let (s, mut res) = selten_trace();
        res.path.clear();
        let err = export_path(&s, &res, &TracerConfig::default(), PathFormat::Csv, &mut Vec::new());
        assert!(matches!(err, Err(Error::EmptyPath)));
    }
}
