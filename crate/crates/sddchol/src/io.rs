//! Matrix Market read/write, permutation and vector files, and factor
//! archives (directory form, or a single self-describing stream so factors
//! can travel through a shell pipeline together with the matrix).
//!
//! Files are 1-based per the Matrix Market convention; everything in memory
//! is 0-based. Floats are written in shortest round-trip form, so a 64-bit
//! save/load cycle is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::factor::{CholFactor, FactorKind, FactorMeta};
use crate::sparse::{LowerTri, Perm, SparseSym};
use crate::{Error, Result};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn parse_mm_header(line: &str) -> Result<()> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%MatrixMarket" {
        return Err(parse_err("missing %%MatrixMarket header"));
    }
    if fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(parse_err("only coordinate matrices are supported"));
    }
    match fields[3] {
        "real" => {}
        "pattern" => return Err(parse_err("pattern files carry no values; values required")),
        other => return Err(parse_err(format!("unsupported value type {other}"))),
    }
    match fields[4] {
        "symmetric" | "general" => {}
        other => return Err(parse_err(format!("unsupported symmetry {other}"))),
    }
    Ok(())
}

fn next_data_line<'a>(lines: &mut impl Iterator<Item = std::io::Result<String>>, buf: &'a mut String) -> Result<Option<&'a str>> {
    loop {
        match lines.next() {
            None => return Ok(None),
            Some(line) => {
                let line = line?;
                let trimmed = line.trim();
                if trimmed.is_empty() || trimmed.starts_with('%') {
                    continue;
                }
                buf.clear();
                buf.push_str(trimmed);
                return Ok(Some(buf.as_str()));
            }
        }
    }
}

/// Read a coordinate real symmetric/general Matrix Market matrix. A single
/// stored triangle is mirrored; general files are validated for symmetry.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseSym> {
    let mut lines = reader.lines();
    match lines.next() {
        Some(line) => parse_mm_header(&line?)?,
        None => return Err(parse_err("empty file")),
    };
    let mut buf = String::new();
    let size_line = next_data_line(&mut lines, &mut buf)?.ok_or_else(|| parse_err("missing size line"))?;
    let dims: Vec<&str> = size_line.split_whitespace().collect();
    if dims.len() != 3 {
        return Err(parse_err("size line must be `rows cols nnz`"));
    }
    let rows: usize = dims[0].parse().map_err(|_| parse_err("bad row count"))?;
    let cols: usize = dims[1].parse().map_err(|_| parse_err("bad column count"))?;
    let nnz: usize = dims[2].parse().map_err(|_| parse_err("bad nnz count"))?;
    if rows != cols {
        return Err(parse_err(format!("matrix must be square, got {rows} x {cols}")));
    }
    let mut triples = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let line = next_data_line(&mut lines, &mut buf)?.ok_or_else(|| parse_err("fewer entries than declared"))?;
        let mut it = line.split_whitespace();
        let i: usize = it.next().ok_or_else(|| parse_err("missing row index"))?.parse().map_err(|_| parse_err("bad row index"))?;
        let j: usize = it.next().ok_or_else(|| parse_err("missing column index"))?.parse().map_err(|_| parse_err("bad column index"))?;
        let v: f64 = it.next().ok_or_else(|| parse_err("missing value (pattern entry?)"))?.parse().map_err(|_| parse_err("bad value"))?;
        if i < 1 || j < 1 || i > rows || j > rows {
            return Err(Error::IndexOutOfRange { i: i.wrapping_sub(1), j: j.wrapping_sub(1), n: rows });
        }
        triples.push((i - 1, j - 1, v));
    }
    SparseSym::from_coo(rows, &triples)
}

pub fn read_matrix_market_path(path: impl AsRef<Path>) -> Result<SparseSym> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

/// Write as coordinate real symmetric, storing the lower triangle, 1-based.
pub fn write_matrix_market<W: Write>(a: &SparseSym, mut w: W) -> Result<()> {
    let lower: Vec<(usize, usize, f64)> = a.entries().filter(|&(i, j, _)| i >= j).collect();
    writeln!(w, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(w, "{} {} {}", a.n(), a.n(), lower.len())?;
    for (i, j, v) in lower {
        writeln!(w, "{} {} {:?}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn write_matrix_market_path(a: &SparseSym, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market(a, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Lower-triangular factors are written as coordinate real general.
pub fn write_lower_tri<W: Write>(g: &LowerTri, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", g.n(), g.n(), g.nnz())?;
    for (i, j, v) in g.entries() {
        writeln!(w, "{} {} {:?}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn read_lower_tri<R: BufRead>(reader: R) -> Result<LowerTri> {
    let mut lines = reader.lines();
    match lines.next() {
        Some(line) => {
            parse_mm_header(&line?)?;
        }
        None => return Err(parse_err("empty file")),
    }
    let mut buf = String::new();
    let size_line = next_data_line(&mut lines, &mut buf)?.ok_or_else(|| parse_err("missing size line"))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err("bad size line")))
        .collect::<Result<_>>()?;
    if dims.len() != 3 || dims[0] != dims[1] {
        return Err(parse_err("factor must be square"));
    }
    let (n, nnz) = (dims[0], dims[2]);
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for _ in 0..nnz {
        let line = next_data_line(&mut lines, &mut buf)?.ok_or_else(|| parse_err("fewer entries than declared"))?;
        let mut it = line.split_whitespace();
        let i: usize = it.next().ok_or_else(|| parse_err("missing row"))?.parse().map_err(|_| parse_err("bad row"))?;
        let j: usize = it.next().ok_or_else(|| parse_err("missing col"))?.parse().map_err(|_| parse_err("bad col"))?;
        let v: f64 = it.next().ok_or_else(|| parse_err("missing value"))?.parse().map_err(|_| parse_err("bad value"))?;
        if i < 1 || j < 1 || i > n || j > n || i < j {
            return Err(parse_err(format!("entry ({i},{j}) is not lower-triangular")));
        }
        cols[j - 1].push((i - 1, v));
    }
    let mut col_ptr = vec![0usize];
    let mut row_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    for col in cols.iter_mut() {
        col.sort_unstable_by_key(|&(i, _)| i);
        for &(i, v) in col.iter() {
            row_idx.push(i);
            values.push(v);
        }
        col_ptr.push(row_idx.len());
    }
    LowerTri::from_parts(n, col_ptr, row_idx, values)
}

/// Permutation file: one 1-based original index per line, in elimination
/// order.
pub fn write_perm<W: Write>(p: &Perm, mut w: W) -> Result<()> {
    for k in 0..p.n() {
        writeln!(w, "{}", p.old_of(k) + 1)?;
    }
    Ok(())
}

pub fn read_perm<R: BufRead>(reader: R, n: usize) -> Result<Perm> {
    let mut order = Vec::with_capacity(n);
    for line in reader.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        let idx: usize = t.parse().map_err(|_| parse_err(format!("bad permutation line `{t}`")))?;
        if idx < 1 || idx > n {
            return Err(Error::InvalidPerm(format!("index {idx} out of range 1..={n}")));
        }
        order.push(idx - 1);
    }
    if order.len() != n {
        return Err(Error::InvalidPerm(format!("expected {n} lines, got {}", order.len())));
    }
    Perm::from_inverse(order)
}

/// Plain vector file: one value per line.
pub fn read_vector<R: BufRead>(reader: R) -> Result<Vec<f64>> {
    let mut v = Vec::new();
    for line in reader.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') || t.starts_with('#') {
            continue;
        }
        v.push(t.parse().map_err(|_| parse_err(format!("bad vector entry `{t}`")))?);
    }
    Ok(v)
}

pub fn write_vector<W: Write>(v: &[f64], mut w: W) -> Result<()> {
    for x in v {
        writeln!(w, "{x:?}")?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub n: usize,
    pub seed: u64,
    pub ordering: String,
    #[serde(default)]
    pub nd_levels: Option<u32>,
    pub g_nnz: usize,
    /// twice the stored factor nonzeros
    pub fill: usize,
    pub kind: String,
    pub precision: String,
    #[serde(default)]
    pub dropped_edges: u64,
    #[serde(default)]
    pub final_diag: f64,
    #[serde(default)]
    pub build_seconds: f64,
}

impl ArchiveMeta {
    fn from_factor(f: &CholFactor, f32_storage: bool, build_seconds: f64) -> Self {
        ArchiveMeta {
            n: f.g.n(),
            seed: f.meta.seed,
            ordering: f.meta.ordering.clone(),
            nd_levels: f.meta.nd_levels,
            g_nnz: f.g.nnz(),
            fill: f.fill_nnz(),
            kind: f.kind.as_str().into(),
            precision: if f32_storage { "f32".into() } else { "f64".into() },
            dropped_edges: f.meta.dropped_edges,
            final_diag: f.meta.final_diag,
            build_seconds,
        }
    }
}

fn kind_from_str(s: &str) -> Result<FactorKind> {
    match s {
        "laplacian" => Ok(FactorKind::Laplacian),
        "sddm" => Ok(FactorKind::Sddm),
        other => Err(parse_err(format!("unknown factor kind `{other}`"))),
    }
}

/// Round stored factor values to f32 precision (storage only; solves always
/// run in f64 on the read-back values).
pub fn demote_factor_values(f: &mut CholFactor) {
    for v in f.g.values_mut() {
        *v = *v as f32 as f64;
    }
    if let Some(ext) = f.ext_row.as_mut() {
        for (_, v) in ext.iter_mut() {
            *v = *v as f32 as f64;
        }
    }
}

/// Directory archive: meta.json, G.mtx, perm.txt, ext_row.mtx (optional).
pub fn save_archive_dir(f: &CholFactor, dir: impl AsRef<Path>, f32_storage: bool, build_seconds: f64) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut stored = f.clone();
    if f32_storage {
        demote_factor_values(&mut stored);
    }
    let meta = ArchiveMeta::from_factor(&stored, f32_storage, build_seconds);
    let meta_json = serde_json::to_string_pretty(&meta).map_err(|e| parse_err(e.to_string()))?;
    std::fs::write(dir.join("meta.json"), meta_json)?;

    let mut gw = BufWriter::new(File::create(dir.join("G.mtx"))?);
    write_lower_tri(&stored.g, &mut gw)?;
    gw.flush()?;

    let mut pw = BufWriter::new(File::create(dir.join("perm.txt"))?);
    write_perm(&stored.perm, &mut pw)?;
    pw.flush()?;

    if let Some(ext) = &stored.ext_row {
        let mut ew = BufWriter::new(File::create(dir.join("ext_row.mtx"))?);
        write_ext_row(ext, stored.g.n(), &mut ew)?;
        ew.flush()?;
    }
    Ok(())
}

fn write_ext_row<W: Write>(ext: &[(usize, f64)], n: usize, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "1 {} {}", n, ext.len())?;
    for &(j, v) in ext {
        writeln!(w, "1 {} {:?}", j + 1, v)?;
    }
    Ok(())
}

fn read_ext_row<R: BufRead>(reader: R) -> Result<Vec<(usize, f64)>> {
    let mut lines = reader.lines();
    match lines.next() {
        Some(line) => {
            parse_mm_header(&line?)?;
        }
        None => return Err(parse_err("empty ext_row file")),
    }
    let mut buf = String::new();
    let size_line = next_data_line(&mut lines, &mut buf)?.ok_or_else(|| parse_err("missing size line"))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err("bad size line")))
        .collect::<Result<_>>()?;
    if dims.len() != 3 || dims[0] != 1 {
        return Err(parse_err("extension row must be 1 x n"));
    }
    let mut out = Vec::with_capacity(dims[2]);
    for _ in 0..dims[2] {
        let line = next_data_line(&mut lines, &mut buf)?.ok_or_else(|| parse_err("fewer entries than declared"))?;
        let mut it = line.split_whitespace();
        let _one: usize = it.next().ok_or_else(|| parse_err("missing row"))?.parse().map_err(|_| parse_err("bad row"))?;
        let j: usize = it.next().ok_or_else(|| parse_err("missing col"))?.parse().map_err(|_| parse_err("bad col"))?;
        let v: f64 = it.next().ok_or_else(|| parse_err("missing value"))?.parse().map_err(|_| parse_err("bad value"))?;
        out.push((j - 1, v));
    }
    Ok(out)
}

pub fn load_archive_dir(dir: impl AsRef<Path>) -> Result<(CholFactor, ArchiveMeta)> {
    let dir = dir.as_ref();
    let meta: ArchiveMeta = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)
        .map_err(|e| parse_err(format!("meta.json: {e}")))?;
    let g = read_lower_tri(BufReader::new(File::open(dir.join("G.mtx"))?))?;
    let perm = read_perm(BufReader::new(File::open(dir.join("perm.txt"))?), g.n())?;
    let ext_path = dir.join("ext_row.mtx");
    let ext_row = if ext_path.exists() {
        Some(read_ext_row(BufReader::new(File::open(ext_path)?))?)
    } else {
        None
    };
    let kind = kind_from_str(&meta.kind)?;
    let factor = CholFactor {
        perm,
        g,
        ext_row,
        kind,
        meta: FactorMeta {
            seed: meta.seed,
            ordering: meta.ordering.clone(),
            nd_levels: meta.nd_levels,
            dropped_edges: meta.dropped_edges,
            final_diag: meta.final_diag,
        },
    };
    Ok((factor, meta))
}

pub const ARCHIVE_MAGIC: &str = "%%FactorArchive 1";

/// Single-stream archive for pipelines: meta, permutation, factor, extension
/// row, and the original matrix so `solve` downstream has everything.
pub fn write_archive_stream<W: Write>(
    f: &CholFactor,
    matrix: &SparseSym,
    mut w: W,
    f32_storage: bool,
    build_seconds: f64,
) -> Result<()> {
    let mut stored = f.clone();
    if f32_storage {
        demote_factor_values(&mut stored);
    }
    let meta = ArchiveMeta::from_factor(&stored, f32_storage, build_seconds);
    writeln!(w, "{ARCHIVE_MAGIC}")?;
    writeln!(w, "{}", serde_json::to_string(&meta).map_err(|e| parse_err(e.to_string()))?)?;
    writeln!(w, "%%perm {}", stored.perm.n())?;
    write_perm(&stored.perm, &mut w)?;
    writeln!(w, "%%G")?;
    write_lower_tri(&stored.g, &mut w)?;
    match &stored.ext_row {
        Some(ext) => {
            writeln!(w, "%%ext_row")?;
            write_ext_row(ext, stored.g.n(), &mut w)?;
        }
        None => writeln!(w, "%%no_ext_row")?,
    }
    writeln!(w, "%%matrix")?;
    write_matrix_market(matrix, &mut w)?;
    Ok(())
}

pub fn read_archive_stream<R: BufRead>(mut reader: R) -> Result<(CholFactor, SparseSym, ArchiveMeta)> {
    let mut first = String::new();
    reader.read_line(&mut first)?;
    if first.trim() != ARCHIVE_MAGIC {
        return Err(parse_err("not a factor archive stream"));
    }
    let mut meta_line = String::new();
    reader.read_line(&mut meta_line)?;
    let meta: ArchiveMeta = serde_json::from_str(meta_line.trim()).map_err(|e| parse_err(format!("meta: {e}")))?;

    let mut section = String::new();
    reader.read_line(&mut section)?;
    let section = section.trim();
    if !section.starts_with("%%perm") {
        return Err(parse_err("expected %%perm section"));
    }
    let n: usize = section
        .split_whitespace()
        .nth(1)
        .ok_or_else(|| parse_err("missing perm length"))?
        .parse()
        .map_err(|_| parse_err("bad perm length"))?;
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let idx: usize = line.trim().parse().map_err(|_| parse_err("bad perm line"))?;
        order.push(idx - 1);
    }
    let perm = Perm::from_inverse(order)?;

    let mut tag = String::new();
    reader.read_line(&mut tag)?;
    if tag.trim() != "%%G" {
        return Err(parse_err("expected %%G section"));
    }
    // the factor body: header, size, nnz lines
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let mut size = String::new();
    reader.read_line(&mut size)?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err("bad factor size line")))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(parse_err("bad factor size line"));
    }
    let mut body = format!("{}{} {} {}\n", header, dims[0], dims[1], dims[2]);
    for _ in 0..dims[2] {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        body.push_str(&line);
    }
    let g = read_lower_tri(body.as_bytes())?;

    let mut tag = String::new();
    reader.read_line(&mut tag)?;
    let ext_row = match tag.trim() {
        "%%ext_row" => {
            let mut header = String::new();
            reader.read_line(&mut header)?;
            let mut size = String::new();
            reader.read_line(&mut size)?;
            let dims: Vec<usize> = size
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| parse_err("bad ext_row size line")))
                .collect::<Result<_>>()?;
            if dims.len() != 3 {
                return Err(parse_err("bad ext_row size line"));
            }
            let mut body = format!("{}{} {} {}\n", header, dims[0], dims[1], dims[2]);
            for _ in 0..dims[2] {
                let mut line = String::new();
                reader.read_line(&mut line)?;
                body.push_str(&line);
            }
            Some(read_ext_row(body.as_bytes())?)
        }
        "%%no_ext_row" => None,
        other => return Err(parse_err(format!("expected ext_row section, got `{other}`"))),
    };

    let mut tag = String::new();
    reader.read_line(&mut tag)?;
    if tag.trim() != "%%matrix" {
        return Err(parse_err("expected %%matrix section"));
    }
    let matrix = read_matrix_market(reader)?;

    let kind = kind_from_str(&meta.kind)?;
    let factor = CholFactor {
        perm,
        g,
        ext_row,
        kind,
        meta: FactorMeta {
            seed: meta.seed,
            ordering: meta.ordering.clone(),
            nd_levels: meta.nd_levels,
            dropped_edges: meta.dropped_edges,
            final_diag: meta.final_diag,
        },
    };
    Ok((factor, matrix, meta))
}

/// Peek at the first bytes of an input to decide whether it is a bare matrix
/// or an archive stream.
pub fn sniff_is_archive(first_line: &str) -> bool {
    first_line.trim() == ARCHIVE_MAGIC
}

/// Read everything from a reader, returning either a matrix or a factor
/// archive with its embedded matrix.
pub enum AutoInput {
    Matrix(SparseSym),
    Archive(Box<(CholFactor, SparseSym, ArchiveMeta)>),
}

pub fn read_input_auto<R: Read>(reader: R) -> Result<AutoInput> {
    let mut buf = BufReader::new(reader);
    let peek = {
        let data = buf.fill_buf()?;
        let line_end = data.iter().position(|&b| b == b'\n').unwrap_or(data.len());
        String::from_utf8_lossy(&data[..line_end]).into_owned()
    };
    if sniff_is_archive(&peek) {
        Ok(AutoInput::Archive(Box::new(read_archive_stream(buf)?)))
    } else {
        Ok(AutoInput::Matrix(read_matrix_market(buf)?))
    }
}
