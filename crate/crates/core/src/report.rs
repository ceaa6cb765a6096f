//! Result files: the per-point results table, design schedules, the
//! heterogeneous ROC table and a small SVG scatter.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::net_model::MobilityGraph;
use crate::scenario::{highlights, HeteroRow, RunRecord};

/// `x` with six significant digits, in the shorter of fixed and
/// scientific notation. Deterministic across platforms.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn optional(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".into(), sig6)
}

/// Column names for a results table over `horizon` years.
pub fn results_header(horizon: u32) -> Vec<String> {
    let mut h: Vec<String> = vec!["scenario".into(), "seed".into(), "mu".into()];
    let per_year = [
        "beta1", "beta2", "accepted", "converged", "F_1", "F_2", "F1_1", "F1_2", "F2", "q_1", "q_2", "v_1", "v_2",
    ];
    for t in 1..=horizon {
        h.extend(per_year.iter().map(|c| format!("{c}_y{t}")));
    }
    h.extend(
        ["years_cooperated", "delta_F_co", "CIR", "ROC", "delta_emissions", "delta_travel_cost", "delta_profit"]
            .map(String::from),
    );
    h
}

fn result_row(r: &RunRecord, mu: f64) -> Vec<String> {
    let mut row = vec![r.name.clone(), r.seed.to_string(), sig6(mu)];
    for y in &r.years {
        row.extend([sig6(y.betas[0]), sig6(y.betas[1]), y.accepted.to_string(), y.converged.to_string()]);
        row.extend(
            [y.no_mech[0], y.no_mech[1], y.stage1[0], y.stage1[1], y.pool, y.shares[0], y.shares[1], y.payoffs[0], y.payoffs[1]]
                .map(sig6),
        );
    }
    row.extend([
        r.years_cooperated().to_string(),
        sig6(r.delta_f),
        sig6(r.cir),
        optional(r.roc),
        sig6(r.delta.emissions),
        sig6(r.delta.travel_cost),
        sig6(r.delta.profit),
    ]);
    row
}

/// Results table of `records` (all over the same horizon) as CSV bytes.
pub fn results_csv(records: &[RunRecord], mu: f64) -> Result<Vec<u8>> {
    let horizon = records.first().map_or(0, |r| r.years.len() as u32);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(results_header(horizon))?;
    for r in records {
        if r.years.len() as u32 != horizon {
            return Err(Error::Config("records span different horizons".into()));
        }
        w.write_record(result_row(r, mu))?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))
}

/// Design schedules of every record, one row per build/upgrade step.
pub fn schedule_csv(records: &[RunRecord], graph: &MobilityGraph) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["point", "scenario", "year", "stage", "authority", "edge", "tail", "head", "build", "upgrade"])?;
    for (i, r) in records.iter().enumerate() {
        for s in r.schedule() {
            let e = graph.edge(s.edge);
            let site = |n| graph.node(n).site.to_string();
            w.write_record([
                i.to_string(),
                r.name.clone(),
                s.year.to_string(),
                s.stage.to_string(),
                s.authority.map_or_else(|| "joint".into(), |a| a.number().to_string()),
                s.edge.to_string(),
                site(e.tail),
                site(e.head),
                u8::from(s.build).to_string(),
                s.upgrade.to_string(),
            ])?;
        }
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))
}

/// One ROC distribution row per heterogeneous scenario.
pub fn hetero_csv(rows: &[HeteroRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "budget_ratio", "demand_ratio", "points", "roc_min", "roc_q1", "roc_median", "roc_q3", "roc_max"])?;
    for row in rows {
        let ratio = |(a, b): (f64, f64)| format!("{}:{}", sig6(a), sig6(b));
        let d = row.roc;
        w.write_record([
            row.name.clone(),
            ratio(row.budget_ratio),
            ratio(row.intra_ratio),
            d.map_or(0, |d| d.count).to_string(),
            optional(d.map(|d| d.min)),
            optional(d.map(|d| d.q1)),
            optional(d.map(|d| d.median)),
            optional(d.map(|d| d.q3)),
            optional(d.map(|d| d.max)),
        ])?;
    }
    w.into_inner().map_err(|e| Error::Config(format!("csv buffer: {e}")))
}

/// Scatter of (CIR, ΔF^co) over sweep points. The highest-return point is
/// drawn red and the most investment-efficient one blue.
pub fn scatter_svg(records: &[RunRecord]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const PAD: f64 = 60.0;
    let xs: Vec<f64> = records.iter().map(|r| r.cir).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.delta_f).collect();
    let (x0, x1) = (0.0, xs.iter().copied().fold(1e-9, f64::max));
    let (y0, y1) = (ys.iter().copied().fold(0.0, f64::min), ys.iter().copied().fold(1e-9, f64::max));
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let h = highlights(records);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <line x1=\"{PAD}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{b}\" stroke=\"black\"/>\n\
         <text x=\"{cx}\" y=\"{lx}\" text-anchor=\"middle\">CIR</text>\n\
         <text x=\"16\" y=\"{cy}\" transform=\"rotate(-90 16 {cy})\" text-anchor=\"middle\">delta F co (CHF/day)</text>\n\
         <text x=\"{PAD}\" y=\"{lx0}\" text-anchor=\"middle\">{x0l}</text>\n\
         <text x=\"{r}\" y=\"{lx0}\" text-anchor=\"middle\">{x1l}</text>\n\
         <text x=\"{yl}\" y=\"{b}\" text-anchor=\"end\">{y0l}</text>\n\
         <text x=\"{yl}\" y=\"{PAD}\" text-anchor=\"end\">{y1l}</text>\n",
        b = H - PAD,
        r = W - PAD,
        cx = W / 2.0,
        cy = H / 2.0,
        lx = H - 15.0,
        lx0 = H - PAD + 16.0,
        yl = PAD - 6.0,
        x0l = sig6(x0),
        x1l = sig6(x1),
        y0l = sig6(y0),
        y1l = sig6(y1),
    );
    for (i, r) in records.iter().enumerate() {
        let colour = if Some(i) == h.highest_return {
            "red"
        } else if Some(i) == h.most_efficient {
            "blue"
        } else {
            "grey"
        };
        let radius = if colour == "grey" { 3 } else { 6 };
        s += &format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{radius}\" fill=\"{colour}\" fill-opacity=\"0.7\"/>\n",
            px(r.cir),
            py(r.delta_f)
        );
    }
    s += "</svg>\n";
    s
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(0.5), "0.5");
        assert_eq!(sig6(744636.0931185673), "744636");
        assert_eq!(sig6(-349957.2318890056), "-349957");
        assert_eq!(sig6(2.6591277076070488), "2.65913");
        assert_eq!(sig6(0.03333333333333333), "0.0333333");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(999999.7), "1e6");
        assert_eq!(sig6(1.5e-7), "1.5e-7");
        assert_eq!(sig6(100000.0), "100000");
    }

    #[test]
    fn header_shape() {
        let h = results_header(3);
        assert_eq!(h.len(), 3 + 3 * 13 + 7);
        assert_eq!(h[3], "beta1_y1");
        assert_eq!(h.last().unwrap(), "delta_profit");
    }
}
