//! Evaluation reports as aligned text and CSV.

use std::io::Write;

use carpipe_core::eval::{MetricReport, Metrics, Stratum};
use carpipe_core::facets::{FrequencyBin, OccurrenceStat};

use crate::error::{Error, Result};

fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}

pub fn write_report_text(w: &mut dyn Write, report: &MetricReport) -> Result<()> {
    writeln!(w, "mode: {} unjudged", report.mode.name())?;
    writeln!(
        w,
        "queries: {} evaluated, {} without relevant judgments",
        report.n_queries(),
        report.skipped.len()
    )?;
    for (name, v) in Metrics::NAMES.iter().zip(report.mean.values()) {
        writeln!(w, "{name:<8}{v:>10.4}")?;
    }
    Ok(())
}

/// `metric,query,value` rows for every evaluated query.
pub fn write_report_csv(w: &mut dyn Write, report: &MetricReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["metric", "query", "value"]).map_err(csv_err)?;
    for (i, name) in Metrics::NAMES.iter().enumerate() {
        for (qid, m) in &report.per_query {
            out.write_record([*name, qid.as_str(), &m.values()[i].to_string()])
                .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `metric,mean` rows.
pub fn write_means_csv(w: &mut dyn Write, report: &MetricReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["metric", "mean"]).map_err(csv_err)?;
    for (name, v) in Metrics::NAMES.iter().zip(report.mean.values()) {
        out.write_record([*name, &v.to_string()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_strata_text(w: &mut dyn Write, strata: &[Stratum]) -> Result<()> {
    writeln!(w, "{:<10}{:>8}{:>10}", "stratum", "queries", "map")?;
    for s in strata {
        let map = s.map.map_or_else(|| "-".to_string(), |m| format!("{m:.4}"));
        writeln!(w, "{:<10}{:>8}{:>10}", s.label, s.count, map)?;
    }
    Ok(())
}

/// `stratum,count,map`; the map field is empty for empty strata.
pub fn write_strata_csv(w: &mut dyn Write, strata: &[Stratum]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["stratum", "count", "map"]).map_err(csv_err)?;
    for s in strata {
        let map = s.map.map(|m| m.to_string()).unwrap_or_default();
        out.write_record([s.label, &s.count.to_string(), &map])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Per-query rows back from a report CSV, for round-trip checks.
pub fn parse_report_csv<R: std::io::Read>(reader: R) -> Result<Vec<(String, String, f64)>> {
    let mut rows = Vec::new();
    for (i, rec) in csv::Reader::from_reader(reader).records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let value = rec[2]
            .parse()
            .map_err(|_| Error::parse(i + 2, format!("bad value `{}`", &rec[2])))?;
        rows.push((rec[0].to_string(), rec[1].to_string(), value));
    }
    Ok(rows)
}

/// `heading,freq,occ,support` for pooled main headings.
pub fn write_occurrence_csv(w: &mut dyn Write, rows: &[(u32, OccurrenceStat)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["heading", "freq", "occ", "support"])
        .map_err(csv_err)?;
    for (freq, s) in rows {
        out.write_record([
            s.heading.as_str(),
            &freq.to_string(),
            &s.occ.to_string(),
            &s.support.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// `x,density,series` with one curve per heading role.
pub fn write_kde_csv(w: &mut dyn Write, curves: &[(&str, Vec<f64>, Vec<f64>)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "density", "series"]).map_err(csv_err)?;
    for (series, xs, ys) in curves {
        for (x, y) in xs.iter().zip(ys) {
            out.write_record([&x.to_string(), &y.to_string(), *series])
                .map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// `center,mean_occ,support` per frequency bin.
pub fn write_bins_csv(w: &mut dyn Write, bins: &[FrequencyBin]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["center", "mean_occ", "support"]).map_err(csv_err)?;
    for b in bins {
        out.write_record([&b.center.to_string(), &b.mean_occ.to_string(), &b.support.to_string()])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}
