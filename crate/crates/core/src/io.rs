//! CSV import and export for grids, samples, models, argmax laws and replication streams.
//!
//! Writers accept an optional comment line (written as `# ...`); readers skip such lines.

use std::io::{Read, Write};

use crate::argmax::ArgmaxDistribution;
use crate::criterion::Observation;
use crate::error::{invalid, Error, Result};
use crate::gaussian::GaussianModel;
use crate::grid::ParameterGrid;
use crate::sample::SampleSet;

fn writer<W: Write>(mut out: W, comment: Option<&str>) -> Result<csv::Writer<W>> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    Ok(csv::Writer::from_writer(out))
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(input)
}

fn fmt(x: f64) -> String {
    format!("{x:?}")
}

fn parse(field: &str) -> Result<f64> {
    field.parse::<f64>().map_err(|_| invalid(format!("not a number: {field:?}")))
}

/// One row per grid point; the header holds the axis labels.
pub fn write_grid<W: Write>(out: W, grid: &ParameterGrid, comment: Option<&str>) -> Result<()> {
    let mut w = writer(out, comment)?;
    w.write_record(grid.labels())?;
    for p in grid.points() {
        w.write_record(p.iter().map(|&x| fmt(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_grid<R: Read>(input: R) -> Result<ParameterGrid> {
    let mut r = reader(input);
    let labels: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut points = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        points.push(rec.iter().map(parse).collect::<Result<Vec<f64>>>()?);
    }
    ParameterGrid::from_points(points, labels)
}

/// Scalars are written under `z`, pairs under `x,y`, column indices under `column`.
pub fn write_samples<W: Write>(out: W, samples: &SampleSet, comment: Option<&str>) -> Result<()> {
    let mut w = writer(out, comment)?;
    match samples.observations()[0] {
        Observation::Scalar(_) => w.write_record(["z"])?,
        Observation::Pair { .. } => w.write_record(["x", "y"])?,
        Observation::Index(_) => w.write_record(["column"])?,
    }
    for obs in samples.observations() {
        match *obs {
            Observation::Scalar(z) => w.write_record([fmt(z)])?,
            Observation::Pair { x, y } => w.write_record([fmt(x), fmt(y)])?,
            Observation::Index(i) => w.write_record([i.to_string()])?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples<R: Read>(input: R) -> Result<SampleSet> {
    let mut r = reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let mut obs = Vec::new();
    let names: Vec<&str> = header.iter().map(String::as_str).collect();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or(Error::ObservationMismatch("short CSV record"));
        obs.push(match names.as_slice() {
            ["z"] => Observation::Scalar(parse(field(0)?)?),
            ["x", "y"] => Observation::Pair { x: parse(field(0)?)?, y: parse(field(1)?)? },
            ["y", "x"] => Observation::Pair { x: parse(field(1)?)?, y: parse(field(0)?)? },
            ["column"] => Observation::Index(
                field(0)?.parse().map_err(|_| invalid(format!("not a column index: {:?}", field(0))))?,
            ),
            _ => return Err(invalid(format!("unrecognised sample header {header:?}"))),
        });
    }
    SampleSet::new(obs)
}

/// Columns `index, mean, cov_0 .. cov_{M-1}`.
pub fn write_model<W: Write>(out: W, model: &GaussianModel, comment: Option<&str>) -> Result<()> {
    let mut w = writer(out, comment)?;
    let m = model.len();
    let mut header = vec!["index".to_string(), "mean".to_string()];
    header.extend((0..m).map(|j| format!("cov_{j}")));
    w.write_record(&header)?;
    for i in 0..m {
        let mut row = vec![i.to_string(), fmt(model.mean()[i])];
        row.extend((0..m).map(|j| fmt(model.cov()[(i, j)])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `index, <axis labels>, mass[, count]`.
pub fn write_distribution<W: Write>(out: W, dist: &ArgmaxDistribution, comment: Option<&str>) -> Result<()> {
    let mut w = writer(out, comment)?;
    let grid = dist.grid();
    let mut header = vec!["index".to_string()];
    header.extend(grid.labels().iter().cloned());
    header.push("mass".into());
    if dist.counts().is_some() {
        header.push("count".into());
    }
    w.write_record(&header)?;
    for (j, &mass) in dist.masses().iter().enumerate() {
        let mut row = vec![j.to_string()];
        row.extend(grid.point(j).iter().map(|&x| fmt(x)));
        row.push(fmt(mass));
        if let Some(c) = dist.counts() {
            row.push(c[j].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns `replication, index, <axis labels>`.
pub fn write_replications<W: Write>(out: W, indices: &[usize], grid: &ParameterGrid, comment: Option<&str>) -> Result<()> {
    let mut w = writer(out, comment)?;
    let mut header = vec!["replication".to_string(), "index".to_string()];
    header.extend(grid.labels().iter().cloned());
    w.write_record(&header)?;
    for (r, &j) in indices.iter().enumerate() {
        if j >= grid.len() {
            return Err(invalid(format!("index {j} outside a grid of {} points", grid.len())));
        }
        let mut row = vec![r.to_string(), j.to_string()];
        row.extend(grid.point(j).iter().map(|&x| fmt(x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_replications<R: Read>(input: R) -> Result<Vec<usize>> {
    let mut r = reader(input);
    r.headers()?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            let f = rec.get(1).ok_or(Error::ObservationMismatch("short CSV record"))?;
            f.parse().map_err(|_| invalid(format!("not an index: {f:?}")))
        })
        .collect()
}
