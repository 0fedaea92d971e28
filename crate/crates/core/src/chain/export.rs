//! Chain export: newline-delimited JSON, one block per line, and receipt CSV.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::block::Block;
use super::ledger::Ledger;
use super::receipt::RECEIPT_CSV_HEADER;

#[derive(Debug, Error)]
pub enum ImportError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn export_blocks<W: Write>(ledger: &Ledger, mut out: W) -> io::Result<()> {
    for block in ledger.blocks() {
        serde_json::to_writer(&mut out, block)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn write_block_line<W: Write>(block: &Block, mut out: W) -> io::Result<()> {
    serde_json::to_writer(&mut out, block)?;
    out.write_all(b"\n")
}

pub fn read_blocks<R: BufRead>(input: R) -> Result<Vec<Block>, ImportError> {
    let mut blocks = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let block = serde_json::from_str(&line).map_err(|source| ImportError::Json { line: i + 1, source })?;
        blocks.push(block);
    }
    Ok(blocks)
}

pub fn export_receipts_csv<W: Write>(ledger: &Ledger, mut out: W) -> io::Result<()> {
    writeln!(out, "{RECEIPT_CSV_HEADER}")?;
    for receipt in ledger.receipts() {
        writeln!(out, "{}", receipt.csv_row())?;
    }
    out.flush()
}
