//! Trace CSV: `chain,iter,mu_1..mu_k,M,scale`, one row per stored draw.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a trace
//! back reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{ChainDraws, McmcTrace};
use crate::error::{Error, Result};

pub fn write_trace<W: Write>(trace: &McmcTrace, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| Error::Schema(format!("trace write failed: {e}"));
    let mut header = vec!["chain".to_string(), "iter".to_string()];
    header.extend(trace.param_names.iter().cloned());
    w.write_record(&header).map_err(to_io)?;
    for chain in &trace.chains {
        for (iter, row) in chain.iterations.iter().zip(&chain.rows) {
            let mut rec = Vec::with_capacity(row.len() + 2);
            rec.push(chain.chain.to_string());
            rec.push(iter.to_string());
            rec.extend(row.iter().map(|v| format!("{v:?}")));
            w.write_record(&rec).map_err(to_io)?;
        }
    }
    w.flush()
        .map_err(|e| Error::Schema(format!("trace write failed: {e}")))?;
    Ok(())
}

pub fn persist_trace(trace: &McmcTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = BufWriter::new(file);
    write_trace(trace, &mut buf)?;
    buf.flush().map_err(|e| Error::io(path, e))
}

fn expected_header(k: usize) -> Vec<String> {
    let mut h = vec!["chain".to_string(), "iter".to_string()];
    h.extend(McmcTrace::param_names_for(k));
    h
}

/// Parse a trace. Row numbers in errors count data rows from 1. A final row
/// without a line terminator is treated as truncated.
pub fn read_trace<R: Read>(mut reader: R) -> Result<McmcTrace> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::Schema(format!("unreadable trace: {e}")))?;
    let complete = text.is_empty() || text.ends_with('\n');
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable trace header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 4 || header != expected_header(header.len() - 4) {
        return Err(Error::Schema(format!(
            "trace header must be `chain,iter,mu_1..mu_k,M,scale`, found `{}`",
            header.join(",")
        )));
    }
    let width = header.len();
    let param_names = header[2..].to_vec();

    let records: Vec<_> = rdr.records().collect();
    let total = records.len();
    let mut chains: Vec<ChainDraws> = Vec::new();
    for (idx, record) in records.into_iter().enumerate() {
        let row = idx + 1;
        let bad = |message: String| Error::Parse {
            row,
            message: format!("{message} (last good row {})", row - 1),
        };
        let record = record.map_err(|e| bad(e.to_string()))?;
        if !complete && row == total {
            return Err(bad("row is truncated (no line terminator)".into()));
        }
        if record.len() != width {
            return Err(bad(format!(
                "expected {width} fields, found {}",
                record.len()
            )));
        }
        let chain: usize = record[0]
            .parse()
            .map_err(|e| bad(format!("chain: {e}")))?;
        let iter: usize = record[1].parse().map_err(|e| bad(format!("iter: {e}")))?;
        let values = record
            .iter()
            .skip(2)
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| bad(format!("value: {e}")))?;
        match chains.last_mut() {
            Some(c) if c.chain == chain => {
                c.iterations.push(iter);
                c.rows.push(values);
            }
            _ => {
                if chains.iter().any(|c| c.chain == chain) {
                    return Err(bad(format!("rows of chain {chain} are not contiguous")));
                }
                chains.push(ChainDraws {
                    chain,
                    iterations: vec![iter],
                    rows: vec![values],
                });
            }
        }
    }
    Ok(McmcTrace {
        param_names,
        chains,
    })
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<McmcTrace> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace(file)
}
