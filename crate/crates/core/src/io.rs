//! CSV interchange formats: logged collection data, AIPW score matrices and
//! experiment results.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! read back reproduces the in-memory values bit for bit.

use std::io::{Read, Write};
use std::path::Path;

use crate::agent::LoggedSample;
use crate::error::{Error, Result};

/// Writes `t,x_1..x_p,action,reward,propensity`, one row per sample.
pub fn write_logged<W: Write>(writer: W, samples: &[LoggedSample], p: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_owned()];
    header.extend((1..=p).map(|j| format!("x_{j}")));
    header.extend(["action", "reward", "propensity"].map(String::from));
    w.write_record(&header)?;
    for s in samples {
        let mut rec = vec![s.t.to_string()];
        rec.extend(s.x.iter().map(|v| v.to_string()));
        rec.push(s.w.to_string());
        rec.push(s.y.to_string());
        rec.push(s.e.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<logged csv>", e))?;
    Ok(())
}

/// Parses a logged-data CSV, validating every row. Returns the samples and
/// the context dimension.
pub fn parse_logged<R: Read>(reader: R) -> Result<(Vec<LoggedSample>, usize)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let n = header.len();
    let well_formed = n >= 5
        && header[0] == "t"
        && header[n - 3] == "action"
        && header[n - 2] == "reward"
        && header[n - 1] == "propensity"
        && header[1..n - 3]
            .iter()
            .enumerate()
            .all(|(j, h)| *h == format!("x_{}", j + 1));
    if !well_formed {
        return Err(Error::BadRow {
            row: 0,
            message: "header must be t,x_1..x_p,action,reward,propensity".into(),
        });
    }
    let p = n - 4;
    let mut samples = Vec::new();
    let mut last_t = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let bad = |message: String| Error::BadRow { row, message };
        if rec.len() != n {
            return Err(bad(format!("expected {n} fields, found {}", rec.len())));
        }
        let t: usize = rec[0]
            .parse()
            .map_err(|_| bad(format!("bad time index {:?}", &rec[0])))?;
        if t <= last_t {
            return Err(bad(format!("time index {t} does not increase (previous {last_t})")));
        }
        last_t = t;
        let float = |j: usize| -> Result<f64> {
            rec[j]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad(format!("non-numeric {} value {:?}", header[j], &rec[j])))
        };
        let x = (1..=p).map(float).collect::<Result<Vec<f64>>>()?;
        let w: usize = rec[n - 3]
            .parse()
            .map_err(|_| bad(format!("bad action {:?}", &rec[n - 3])))?;
        let y = float(n - 2)?;
        let e = float(n - 1)?;
        if !(e > 0.0 && e <= 1.0) {
            return Err(bad(format!("propensity {e} outside (0, 1]")));
        }
        samples.push(LoggedSample { t, x, w, y, e });
    }
    Ok((samples, p))
}

pub fn read_logged(path: &Path) -> Result<(Vec<LoggedSample>, usize)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_logged(std::io::BufReader::new(file))
}

/// Writes `t,score_1..score_K` rows for a matrix of AIPW elements.
pub fn write_scores<W: Write>(writer: W, gamma: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let k = gamma.first().map_or(0, Vec::len);
    let mut header = vec!["t".to_owned()];
    header.extend((1..=k).map(|j| format!("score_{j}")));
    w.write_record(&header)?;
    for (t, row) in gamma.iter().enumerate() {
        let mut rec = vec![(t + 1).to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<score csv>", e))?;
    Ok(())
}

/// One line of the results file.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub env: String,
    pub horizon: usize,
    pub scheme: String,
    pub rep: usize,
    pub regret: f64,
    pub agent_regret: f64,
    pub wall_ms: u64,
}

pub const RESULTS_HEADER: [&str; 7] = ["env", "T", "scheme", "rep", "regret", "agent_regret", "wall_ms"];

pub fn write_results<W: Write>(writer: W, rows: &[ResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            r.env.clone(),
            r.horizon.to_string(),
            r.scheme.clone(),
            r.rep.to_string(),
            r.regret.to_string(),
            r.agent_regret.to_string(),
            r.wall_ms.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<results csv>", e))?;
    Ok(())
}

/// Writes the results file at `path`.
pub fn emit_results(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_results(std::io::BufWriter::new(file), rows).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_results<R: Read>(reader: R) -> Result<Vec<ResultRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    if rdr.headers()?.iter().ne(RESULTS_HEADER) {
        return Err(Error::BadRow {
            row: 0,
            message: format!("results header must be {}", RESULTS_HEADER.join(",")),
        });
    }
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let bad = |what: &str| Error::BadRow {
                row: i + 1,
                message: format!("bad {what}"),
            };
            if rec.len() != RESULTS_HEADER.len() {
                return Err(bad("field count"));
            }
            Ok(ResultRow {
                env: rec[0].to_owned(),
                horizon: rec[1].parse().map_err(|_| bad("T"))?,
                scheme: rec[2].to_owned(),
                rep: rec[3].parse().map_err(|_| bad("rep"))?,
                regret: rec[4].parse().map_err(|_| bad("regret"))?,
                agent_regret: rec[5].parse().map_err(|_| bad("agent_regret"))?,
                wall_ms: rec[6].parse().map_err(|_| bad("wall_ms"))?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: usize, e: f64) -> LoggedSample {
        LoggedSample {
            t,
            x: vec![0.1 * t as f64, -1.0 / 3.0],
            w: t % 2,
            y: std::f64::consts::PI * t as f64,
            e,
        }
    }

    #[test]
    fn logged_round_trip_is_exact() {
        let samples: Vec<_> = (1..=5).map(|t| sample(t, 0.3 + 0.1 * t as f64)).collect();
        let mut buf = Vec::new();
        write_logged(&mut buf, &samples, 2).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t,x_1,x_2,action,reward,propensity\n"));
        let (back, p) = parse_logged(buf.as_slice()).unwrap();
        assert_eq!(p, 2);
        assert_eq!(back, samples);
    }

    #[test]
    fn logged_validation_names_the_row() {
        let text = "t,x_1,action,reward,propensity\n1,0.5,0,1.0,0.5\n2,0.5,1,1.0,0\n";
        match parse_logged(text.as_bytes()) {
            Err(Error::BadRow { row, message }) => {
                assert_eq!(row, 2);
                assert!(message.contains("propensity"));
            }
            other => panic!("{other:?}"),
        }
        let text = "t,x_1,action,reward,propensity\n2,0.5,0,1.0,0.5\n2,0.5,1,1.0,0.5\n";
        assert!(matches!(
            parse_logged(text.as_bytes()),
            Err(Error::BadRow { row: 2, .. })
        ));
        let text = "t,x_2,action,reward,propensity\n";
        assert!(parse_logged(text.as_bytes()).is_err());
        let text = "t,x_1,action,reward,propensity\n1,abc,0,1.0,0.5\n";
        assert!(parse_logged(text.as_bytes()).is_err());
    }

    #[test]
    fn results_round_trip() {
        let rows = vec![ResultRow {
            env: "synthetic".into(),
            horizon: 1000,
            scheme: "pow:0.5".into(),
            rep: 3,
            regret: 0.0123456789,
            agent_regret: 0.9,
            wall_ms: 17,
        }];
        let mut buf = Vec::new();
        write_results(&mut buf, &rows).unwrap();
        assert_eq!(parse_results(buf.as_slice()).unwrap(), rows);

        let mut empty = Vec::new();
        write_results(&mut empty, &[]).unwrap();
        assert_eq!(
            String::from_utf8(empty).unwrap(),
            "env,T,scheme,rep,regret,agent_regret,wall_ms\n"
        );
    }

    #[test]
    fn emit_results_reports_path() {
        let err = emit_results(&[], Path::new("/nonexistent-dir/out.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }

    #[test]
    fn scores_csv_layout() {
        let mut buf = Vec::new();
        write_scores(&mut buf, &[vec![1.0, 2.5], vec![-0.5, 0.0]]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,score_1,score_2\n1,1,2.5\n2,-0.5,0\n"
        );
    }
}
