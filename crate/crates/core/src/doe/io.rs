use std::io::{Read, Write};

use super::{DesignRun, DoeError, ExperimentDesign, Factor};

/// A design read from disk, with its response column when present.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignTable {
    pub design: ExperimentDesign,
    pub response_name: Option<String>,
    pub responses: Option<Vec<f64>>,
}

const ORDER: &str = "standard_order";
const BLOCK: &str = "block";

/// Writes `standard_order,block,<factor…>[,<response>]` with natural levels.
pub fn write_design<W: Write>(
    design: &ExperimentDesign,
    responses: Option<(&str, &[f64])>,
    sink: W,
) -> Result<(), DoeError> {
    if let Some((_, ys)) = responses {
        if ys.len() != design.n_runs() {
            return Err(DoeError::Design(format!(
                "{} responses for {} runs",
                ys.len(),
                design.n_runs()
            )));
        }
    }
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec![ORDER.to_string(), BLOCK.to_string()];
    header.extend(design.factors().iter().map(|f| f.name.clone()));
    if let Some((name, _)) = responses {
        header.push(name.to_string());
    }
    w.write_record(&header)?;
    for (i, r) in design.runs().iter().enumerate() {
        let mut rec = vec![r.standard_order.to_string(), r.block.to_string()];
        rec.extend(r.natural.iter().map(|v| v.to_string()));
        if let Some((_, ys)) = responses {
            rec.push(ys[i].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn snap(coded: f64) -> f64 {
    let r = coded.round();
    if (coded - r).abs() < 1e-9 {
        r + 0.0
    } else {
        coded
    }
}

/// Reads a design file in the `write_design` layout. Rows may come in any
/// order. Without `factors`, every column other than the order, block and
/// `response` columns is a factor whose low/high are its observed min/max.
pub fn read_design<R: Read>(
    source: R,
    response: Option<&str>,
    factors: Option<&[Factor]>,
) -> Result<DesignTable, DoeError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let fmt = |line: u64, message: String| DoeError::Format { line, message };
    if header.len() < 3 || header[0] != ORDER || header[1] != BLOCK {
        return Err(fmt(
            1,
            format!("header must start with '{ORDER},{BLOCK}' and name at least one factor"),
        ));
    }
    let response_col = match response {
        Some(name) => Some(
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| fmt(1, format!("response column '{name}' not found")))?,
        ),
        None => None,
    };
    let factor_cols: Vec<usize> = (2..header.len())
        .filter(|&c| Some(c) != response_col)
        .collect();
    if factor_cols.is_empty() {
        return Err(fmt(1, "no factor columns".into()));
    }
    if let Some(given) = factors {
        let names: Vec<&str> = factor_cols.iter().map(|&c| header[c].as_str()).collect();
        let expected: Vec<&str> = given.iter().map(|f| f.name.as_str()).collect();
        if names != expected {
            return Err(fmt(
                1,
                format!("factor columns {names:?} do not match {expected:?}"),
            ));
        }
    }

    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(fmt(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let int = |c: usize| {
            rec[c].parse::<usize>().map_err(|_| {
                fmt(
                    line,
                    format!("{}: '{}' is not a whole number", header[c], &rec[c]),
                )
            })
        };
        let real = |c: usize| {
            rec[c]
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    fmt(
                        line,
                        format!("{}: '{}' is not a number", header[c], &rec[c]),
                    )
                })
        };
        let natural = factor_cols
            .iter()
            .map(|&c| real(c))
            .collect::<Result<Vec<_>, _>>()?;
        let y = response_col.map(real).transpose()?;
        rows.push((int(0)?, int(1)?, natural, y));
    }
    if rows.is_empty() {
        return Err(fmt(1, "design file has no runs".into()));
    }
    rows.sort_by_key(|r| r.0);

    let factors = match factors {
        Some(f) => f.to_vec(),
        None => factor_cols
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let lo = rows.iter().map(|r| r.2[j]).fold(f64::INFINITY, f64::min);
                let hi = rows
                    .iter()
                    .map(|r| r.2[j])
                    .fold(f64::NEG_INFINITY, f64::max);
                // keep an observed middle level verbatim rather than recomputing it
                let mid = 0.5 * (lo + hi);
                let center = rows
                    .iter()
                    .map(|r| r.2[j])
                    .find(|v| (v - mid).abs() <= 1e-12 * mid.abs().max(1.0))
                    .unwrap_or(mid);
                Factor::new(header[c].clone(), lo, center, hi)
            })
            .collect::<Result<Vec<_>, _>>()?,
    };
    let mut responses = Vec::with_capacity(rows.len());
    let runs = rows
        .into_iter()
        .map(|(standard_order, block, natural, y)| {
            responses.extend(y);
            DesignRun {
                standard_order,
                block,
                coded: factors
                    .iter()
                    .zip(&natural)
                    .map(|(f, &v)| snap(f.to_coded(v)))
                    .collect(),
                natural,
            }
        })
        .collect();
    Ok(DesignTable {
        design: ExperimentDesign::new(factors, runs)?,
        response_name: response.map(str::to_string),
        responses: response.map(|_| responses),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doe::build_ccf_design;
    use crate::doe::testutil::{table5, TABLE7_RESPONSES};

    #[test]
    fn round_trip_with_inferred_factors() {
        let d = build_ccf_design(&table5(), 3).unwrap();
        let mut buf = Vec::new();
        write_design(
            &d,
            Some(("Textile quality score", &TABLE7_RESPONSES)),
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("standard_order,block,Pigment fastness,"));
        let t = read_design(text.as_bytes(), Some("Textile quality score"), None).unwrap();
        assert_eq!(t.design, d);
        assert_eq!(t.responses.unwrap(), TABLE7_RESPONSES.to_vec());
    }

    #[test]
    fn shuffled_rows_are_sorted() {
        let text = "# comment\nstandard_order,block,a,b,y\n3,2,1,0,5\n1,1,0,-1,3\n2,1,-1,1,4\n";
        let t = read_design(text.as_bytes(), Some("y"), None).unwrap();
        let orders: Vec<usize> = t.design.runs().iter().map(|r| r.standard_order).collect();
        assert_eq!(orders, vec![1, 2, 3]);
        assert_eq!(t.responses.unwrap(), vec![3.0, 4.0, 5.0]);
        assert_eq!(t.design.runs()[0].coded, vec![0.0, -1.0]);
    }

    #[test]
    fn format_errors_name_the_line() {
        let bad = "standard_order,block,a\n1,1,0\n2,x,1\n";
        assert!(matches!(
            read_design(bad.as_bytes(), None, None),
            Err(DoeError::Format { line: 3, .. })
        ));
        let header = "order,block,a\n1,1,0\n";
        assert!(read_design(header.as_bytes(), None, None).is_err());
        let missing = "standard_order,block,a\n1,1,0\n2,1,1\n";
        assert!(read_design(missing.as_bytes(), Some("y"), None).is_err());
        let wrong = "standard_order,block,a\n1,1,0\n2,1,1\n";
        assert!(read_design(wrong.as_bytes(), None, Some(&table5())).is_err());
    }
}
