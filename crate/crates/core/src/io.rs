//! Text and binary file formats.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimate::DataRecord;
use crate::grid::{GridField, GridSpec};
use crate::index::{HermitianSeq, IndexSet};
use crate::solve::{Atom, Diagnostics, DualSolution, KktReport, Mode, Refinement};
use crate::weight::WeightMatrix;
use crate::wiener::{Filter, WienerModel};

const TENSOR_MAGIC: &[u8; 8] = b"CVXTNSR1";
const FIELD_MAGIC: &[u8; 8] = b"CVXGRID1";

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn num<T: std::str::FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse().map_err(|_| perr(line, format!("cannot parse {tok:?}")))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty())
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------------------
// Coefficient sequences

/// Writes `d n1 .. nd` followed by `k1 .. kd re im` per exponent.
///
/// For a box index set the header extents describe the set completely; for
/// other sets the listed exponents define it.
pub fn format_coefficients(c: &HermitianSeq) -> String {
    let index = c.index_set();
    let mut out = String::new();
    let ext = index.max_abs();
    let _ = write!(out, "{}", index.dim());
    for n in ext {
        let _ = write!(out, " {n}");
    }
    out.push('\n');
    for (k, v) in index.iter().zip(c.values()) {
        for kj in k {
            let _ = write!(out, "{kj} ");
        }
        let _ = writeln!(out, "{} {}", fmt_f(v.re), fmt_f(v.im));
    }
    out
}

fn parse_coefficient_lines(lines: &[(usize, &str)]) -> Result<HermitianSeq> {
    let Some(&(hl, header)) = lines.first() else {
        return Err(perr(0, "missing coefficient header"));
    };
    let head: Vec<usize> = tokens(header).map(|t| num(t, hl)).collect::<Result<_>>()?;
    let (&d, ext) = head.split_first().ok_or_else(|| perr(hl, "empty header"))?;
    if d == 0 || ext.len() != d {
        return Err(perr(hl, format!("header declares dimension {d} with {} extents", ext.len())));
    }
    let mut exps = Vec::with_capacity(lines.len() - 1);
    let mut vals = Vec::with_capacity(lines.len() - 1);
    for &(ln, l) in &lines[1..] {
        let t: Vec<&str> = tokens(l).collect();
        if t.len() != d + 2 {
            return Err(perr(ln, format!("expected {} fields, found {}", d + 2, t.len())));
        }
        let k: Vec<i64> = t[..d].iter().map(|s| num(s, ln)).collect::<Result<_>>()?;
        if k.iter().zip(ext).any(|(&kj, &n)| kj.unsigned_abs() as usize > n) {
            return Err(perr(ln, format!("exponent {k:?} outside the declared box")));
        }
        exps.push(k);
        vals.push(Complex64::new(num(t[d], ln)?, num(t[d + 1], ln)?));
    }
    // Sort to canonical order, carrying values along.
    let mut order: Vec<usize> = (0..exps.len()).collect();
    order.sort_by(|&a, &b| exps[a].cmp(&exps[b]));
    let exps_sorted: Vec<Vec<i64>> = order.iter().map(|&i| exps[i].clone()).collect();
    let vals_sorted: Vec<Complex64> = order.iter().map(|&i| vals[i]).collect();
    let index = IndexSet::new(d, exps_sorted).map_err(|e| perr(hl, e.to_string()))?;
    HermitianSeq::new(index, vals_sorted).map_err(|e| perr(hl, e.to_string()))
}

pub fn parse_coefficients(text: &str) -> Result<HermitianSeq> {
    parse_coefficient_lines(&content_lines(text))
}

pub fn write_coefficients(path: impl AsRef<Path>, c: &HermitianSeq) -> Result<()> {
    fs::write(path, format_coefficients(c))?;
    Ok(())
}

pub fn read_coefficients(path: impl AsRef<Path>) -> Result<HermitianSeq> {
    parse_coefficients(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Weight matrices

/// `n`, then `n` rows of `re im` pairs.
pub fn format_weight(w: &WeightMatrix) -> String {
    let m = w.matrix();
    let n = m.nrows();
    let mut out = format!("{n}\n");
    for i in 0..n {
        let row: Vec<String> = (0..n)
            .map(|j| format!("{} {}", fmt_f(m[(i, j)].re), fmt_f(m[(i, j)].im)))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

fn parse_weight_lines(lines: &[(usize, &str)]) -> Result<WeightMatrix> {
    let Some(&(hl, header)) = lines.first() else {
        return Err(perr(0, "missing weight header"));
    };
    let n: usize = num(header.trim(), hl)?;
    if lines.len() != n + 1 {
        return Err(perr(hl, format!("expected {n} rows, found {}", lines.len() - 1)));
    }
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for (i, &(ln, l)) in lines[1..].iter().enumerate() {
        let t: Vec<f64> = tokens(l).map(|s| num(s, ln)).collect::<Result<_>>()?;
        if t.len() != 2 * n {
            return Err(perr(ln, format!("expected {} numbers, found {}", 2 * n, t.len())));
        }
        for j in 0..n {
            m[(i, j)] = Complex64::new(t[2 * j], t[2 * j + 1]);
        }
    }
    WeightMatrix::new(m).map_err(|e| perr(hl, e.to_string()))
}

pub fn parse_weight(text: &str) -> Result<WeightMatrix> {
    parse_weight_lines(&content_lines(text))
}

pub fn write_weight(path: impl AsRef<Path>, w: &WeightMatrix) -> Result<()> {
    fs::write(path, format_weight(w))?;
    Ok(())
}

pub fn read_weight(path: impl AsRef<Path>) -> Result<WeightMatrix> {
    parse_weight(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Grid fields

/// CSV with header `theta1,...,thetad,value`, nodes in row-major order.
pub fn format_field_csv(f: &GridField) -> String {
    let spec = f.spec();
    let d = spec.dim();
    let mut out = String::new();
    for a in 1..=d {
        let _ = write!(out, "theta{a},");
    }
    out.push_str("value\n");
    for (j, v) in f.values().iter().enumerate() {
        for th in spec.node(j) {
            let _ = write!(out, "{},", fmt_f(th));
        }
        let _ = writeln!(out, "{}", fmt_f(*v));
    }
    out
}

pub fn write_field_csv(path: impl AsRef<Path>, f: &GridField) -> Result<()> {
    fs::write(path, format_field_csv(f))?;
    Ok(())
}

/// Reads a CSV written by [`format_field_csv`]; the grid shape is recovered
/// from the distinct node angles.
pub fn parse_field_csv(text: &str) -> Result<GridField> {
    let lines = content_lines(text);
    let Some(&(hl, header)) = lines.first() else {
        return Err(perr(0, "empty file"));
    };
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let d = cols.len().checked_sub(1).filter(|&d| d > 0).ok_or_else(|| perr(hl, "bad header"))?;
    if cols[d] != "value" || (0..d).any(|a| cols[a] != format!("theta{}", a + 1)) {
        return Err(perr(hl, "expected header theta1,...,thetad,value"));
    }
    let mut nodes = Vec::with_capacity(lines.len());
    let mut values = Vec::with_capacity(lines.len());
    for &(ln, l) in &lines[1..] {
        let t: Vec<f64> = l.split(',').map(|s| num(s.trim(), ln)).collect::<Result<_>>()?;
        if t.len() != d + 1 {
            return Err(perr(ln, format!("expected {} columns", d + 1)));
        }
        nodes.push(t[..d].to_vec());
        values.push(t[d]);
    }
    // Row-major order: the last axis cycles fastest.
    let mut points = vec![0usize; d];
    let mut stride = 1usize;
    for a in (0..d).rev() {
        let first = nodes.first().map(|n| n[a]).ok_or_else(|| perr(hl, "no rows"))?;
        let mut count = 1;
        while count * stride < nodes.len() && nodes[count * stride][a] != first {
            count += 1;
        }
        points[a] = count;
        stride *= count;
    }
    if stride != nodes.len() {
        return Err(perr(hl, "rows do not form a full grid"));
    }
    let step = 2.0 * std::f64::consts::PI / points[d - 1] as f64;
    let offset = (nodes[0][d - 1] / step - 0.5).abs() < 1e-6;
    let spec = GridSpec::new(points, offset)?;
    GridField::new(spec, values)
}

pub fn read_field_csv(path: impl AsRef<Path>) -> Result<GridField> {
    parse_field_csv(&fs::read_to_string(path)?)
}

/// Binary dump: magic, `u64` dimension, `u64` points per axis, `u8` offset
/// flag, then the values as little-endian `f64`.
pub fn write_field_binary(mut w: impl Write, f: &GridField) -> Result<()> {
    let spec = f.spec();
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&(spec.dim() as u64).to_le_bytes())?;
    for &n in spec.points() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    w.write_all(&[spec.offset() as u8])?;
    for v in f.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_dims(r: &mut impl Read) -> Result<Vec<usize>> {
    let d = read_u64(r)? as usize;
    if d == 0 || d > 16 {
        return Err(perr(0, format!("implausible dimension {d}")));
    }
    let dims: Vec<usize> = (0..d).map(|_| read_u64(r).map(|v| v as usize)).collect::<Result<_>>()?;
    if dims.iter().any(|&n| n == 0) || dims.iter().try_fold(1usize, |a, &n| a.checked_mul(n)).is_none() {
        return Err(perr(0, format!("implausible shape {dims:?}")));
    }
    Ok(dims)
}

pub fn read_field_binary(mut r: impl Read) -> Result<GridField> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(perr(0, "not a grid field dump"));
    }
    let dims = read_dims(&mut r)?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let total: usize = dims.iter().product();
    let vals = (0..total).map(|_| read_f64(&mut r)).collect::<Result<_>>()?;
    GridField::new(GridSpec::new(dims, flag[0] != 0)?, vals)
}

// ---------------------------------------------------------------------------
// Data records

/// Text tensor: header `d N1 .. Nd` (optionally followed by `complex`), then
/// the samples in row-major order, one row of the last axis per line.
pub fn format_record(y: &DataRecord) -> String {
    let complex = !y.is_real();
    let mut out = y.dim().to_string();
    for n in y.dims() {
        let _ = write!(out, " {n}");
    }
    if complex {
        out.push_str(" complex");
    }
    out.push('\n');
    let row = *y.dims().last().expect("nonempty dims");
    for chunk in y.values().chunks(row) {
        let items: Vec<String> = chunk
            .iter()
            .map(|v| if complex { format!("{} {}", fmt_f(v.re), fmt_f(v.im)) } else { fmt_f(v.re) })
            .collect();
        out.push_str(&items.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_record(text: &str) -> Result<DataRecord> {
    let lines = content_lines(text);
    let Some(&(hl, header)) = lines.first() else {
        return Err(perr(0, "empty record"));
    };
    let mut head: Vec<&str> = tokens(header).collect();
    let complex = head.last() == Some(&"complex");
    if complex {
        head.pop();
    }
    let nums: Vec<usize> = head.iter().map(|t| num(t, hl)).collect::<Result<_>>()?;
    let (&d, dims) = nums.split_first().ok_or_else(|| perr(hl, "empty header"))?;
    if dims.len() != d {
        return Err(perr(hl, format!("header declares dimension {d} with {} sizes", dims.len())));
    }
    let mut flat = Vec::new();
    for &(ln, l) in &lines[1..] {
        for t in tokens(l) {
            flat.push(num::<f64>(t, ln)?);
        }
    }
    let total: usize = dims.iter().product();
    let per = if complex { 2 } else { 1 };
    if flat.len() != total * per {
        return Err(perr(hl, format!("expected {} numbers, found {}", total * per, flat.len())));
    }
    let vals = if complex {
        flat.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
    } else {
        flat.into_iter().map(|v| Complex64::new(v, 0.0)).collect()
    };
    DataRecord::new(dims.to_vec(), vals)
}

/// Binary tensor: magic, `u64` dimension, `u64` sizes, `u8` complex flag,
/// then little-endian `f64` samples (real and imaginary parts interleaved
/// when complex).
pub fn write_record_binary(mut w: impl Write, y: &DataRecord) -> Result<()> {
    let complex = !y.is_real();
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&(y.dim() as u64).to_le_bytes())?;
    for &n in y.dims() {
        w.write_all(&(n as u64).to_le_bytes())?;
    }
    w.write_all(&[complex as u8])?;
    for v in y.values() {
        w.write_all(&v.re.to_le_bytes())?;
        if complex {
            w.write_all(&v.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_record_binary(mut r: impl Read) -> Result<DataRecord> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != TENSOR_MAGIC {
        return Err(perr(0, "not a binary tensor"));
    }
    let dims = read_dims(&mut r)?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let total: usize = dims.iter().product();
    let mut vals = Vec::with_capacity(total);
    for _ in 0..total {
        let re = read_f64(&mut r)?;
        let im = if flag[0] != 0 { read_f64(&mut r)? } else { 0.0 };
        vals.push(Complex64::new(re, im));
    }
    DataRecord::new(dims, vals)
}

/// Reads a record in either format, detected from the leading bytes.
pub fn read_record(path: impl AsRef<Path>) -> Result<DataRecord> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(TENSOR_MAGIC) {
        read_record_binary(&bytes[..])
    } else {
        let text = String::from_utf8(bytes).map_err(|_| perr(0, "record is neither text nor binary tensor"))?;
        parse_record(&text)
    }
}

/// Writes text unless the path ends in `.bin`.
pub fn write_record(path: impl AsRef<Path>, y: &DataRecord) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "bin") {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        write_record_binary(&mut f, y)?;
        f.flush()?;
    } else {
        fs::write(path, format_record(y))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sectioned files

/// Splits `[name]` sections; lines before the first section go under "".
fn sections(text: &str) -> Vec<(String, Vec<(usize, &str)>)> {
    let mut out: Vec<(String, Vec<(usize, &str)>)> = vec![(String::new(), Vec::new())];
    for (ln, l) in content_lines(text) {
        if let Some(name) = l.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            out.push((name.trim().to_string(), Vec::new()));
        } else {
            out.last_mut().expect("nonempty").1.push((ln, l));
        }
    }
    out
}

fn section<'a, 'b>(secs: &'b [(String, Vec<(usize, &'a str)>)], name: &str) -> Option<&'b [(usize, &'a str)]> {
    secs.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
}

fn require<'a, 'b>(secs: &'b [(String, Vec<(usize, &'a str)>)], name: &str) -> Result<&'b [(usize, &'a str)]> {
    section(secs, name).ok_or_else(|| perr(0, format!("missing section [{name}]")))
}

/// `key value` pairs of a section.
fn keyed<'a>(lines: &[(usize, &'a str)]) -> Vec<(usize, &'a str, &'a str)> {
    lines
        .iter()
        .map(|&(ln, l)| {
            let mut it = l.splitn(2, char::is_whitespace);
            (ln, it.next().unwrap_or(""), it.next().unwrap_or("").trim())
        })
        .collect()
}

fn lookup<'a>(kv: &[(usize, &'a str, &'a str)], key: &str) -> Result<(usize, &'a str)> {
    kv.iter()
        .find(|(_, k, _)| *k == key)
        .map(|&(ln, _, v)| (ln, v))
        .ok_or_else(|| perr(0, format!("missing key {key:?}")))
}

fn opt_f(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_else(|| "none".into())
}

fn parse_opt_f(s: &str, ln: usize) -> Result<Option<f64>> {
    if s == "none" {
        Ok(None)
    } else {
        num(s, ln).map(Some)
    }
}

/// Solution file: header keys, then `[grid]`, `[q]`, `[r]`, `[chat]`,
/// `[atoms]`, `[kkt]`, `[diagnostics]` and, if given, `[weight]`.
pub fn format_solution(sol: &DualSolution, weight: Option<&WeightMatrix>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "mode {}", sol.mode.name());
    let _ = writeln!(out, "gamma {}", opt_f(sol.gamma));
    let g = &sol.diagnostics.grid;
    let pts: Vec<String> = g.points().iter().map(|n| n.to_string()).collect();
    let _ = writeln!(out, "[grid]\npoints {}\noffset {}", pts.join(" "), g.offset() as u8);
    let _ = write!(out, "[q]\n{}", format_coefficients(&sol.q));
    let _ = write!(out, "[r]\n{}", format_coefficients(&sol.r));
    let _ = write!(out, "[chat]\n{}", format_coefficients(&sol.c_hat));
    out.push_str("[atoms]\n# theta_1 .. theta_d mass\n");
    for a in &sol.atoms {
        let th: Vec<String> = a.theta.iter().map(|&t| fmt_f(t)).collect();
        let _ = writeln!(out, "{} {}", th.join(" "), fmt_f(a.mass));
    }
    let k = &sol.kkt;
    let _ = writeln!(
        out,
        "[kkt]\ndual_feasibility {}\ncomplementarity {}\nmoment_matching {}\nweight_relation {}",
        fmt_f(k.dual_feasibility),
        fmt_f(k.complementarity),
        fmt_f(k.moment_matching),
        opt_f(k.weight_relation)
    );
    let d = &sol.diagnostics;
    let _ = writeln!(
        out,
        "[diagnostics]\niterations {}\ngrad_norm {}\nstalled {}\nmin_q_grid {}\nmax_q_grid {}\nmin_q_refined {}\nrefinement {}",
        d.iterations,
        fmt_f(d.grad_norm),
        d.stalled as u8,
        fmt_f(d.min_q_grid),
        fmt_f(d.max_q_grid),
        fmt_f(d.min_q_refined),
        d.refinement.name()
    );
    if let Some(w) = weight {
        let _ = write!(out, "[weight]\n{}", format_weight(w));
    }
    out
}

fn parse_refinement(s: &str, ln: usize) -> Result<Refinement> {
    Ok(match s {
        "none" => Refinement::None,
        "restricted" => Refinement::Restricted,
        "lifted" => Refinement::Lifted,
        "trivial" => Refinement::Trivial,
        _ => return Err(perr(ln, format!("unknown refinement {s:?}"))),
    })
}

pub fn parse_solution(text: &str) -> Result<(DualSolution, Option<WeightMatrix>)> {
    let secs = sections(text);
    let head = keyed(require(&secs, "")?);
    let (ln, m) = lookup(&head, "mode")?;
    let mode: Mode = m.parse().map_err(|_| perr(ln, format!("unknown mode {m:?}")))?;
    let (ln, g) = lookup(&head, "gamma")?;
    let gamma = parse_opt_f(g, ln)?;

    let grid_kv = keyed(require(&secs, "grid")?);
    let (ln, p) = lookup(&grid_kv, "points")?;
    let points: Vec<usize> = tokens(p).map(|t| num(t, ln)).collect::<Result<_>>()?;
    let (ln, o) = lookup(&grid_kv, "offset")?;
    let grid = GridSpec::new(points, num::<u8>(o, ln)? != 0)?;

    let q = parse_coefficient_lines(require(&secs, "q")?)?;
    let r = parse_coefficient_lines(require(&secs, "r")?)?;
    let c_hat = parse_coefficient_lines(require(&secs, "chat")?)?;
    if r.index_set() != q.index_set() || c_hat.index_set() != q.index_set() {
        return Err(Error::IndexSetMismatch);
    }
    let d = q.index_set().dim();
    let mut atoms = Vec::new();
    for &(ln, l) in require(&secs, "atoms")? {
        let t: Vec<f64> = tokens(l).map(|s| num(s, ln)).collect::<Result<_>>()?;
        if t.len() != d + 1 {
            return Err(perr(ln, format!("atom needs {} numbers", d + 1)));
        }
        atoms.push(Atom { theta: t[..d].to_vec(), mass: t[d] });
    }
    let kv = keyed(require(&secs, "kkt")?);
    let f = |key: &str| -> Result<f64> {
        let (ln, v) = lookup(&kv, key)?;
        num(v, ln)
    };
    let (ln, wr) = lookup(&kv, "weight_relation")?;
    let kkt = KktReport {
        dual_feasibility: f("dual_feasibility")?,
        complementarity: f("complementarity")?,
        moment_matching: f("moment_matching")?,
        weight_relation: parse_opt_f(wr, ln)?,
    };
    let kv = keyed(require(&secs, "diagnostics")?);
    let f = |key: &str| -> Result<f64> {
        let (ln, v) = lookup(&kv, key)?;
        num(v, ln)
    };
    let (iln, it) = lookup(&kv, "iterations")?;
    let (sln, st) = lookup(&kv, "stalled")?;
    let (rln, rf) = lookup(&kv, "refinement")?;
    let diagnostics = Diagnostics {
        grid,
        iterations: num(it, iln)?,
        grad_norm: f("grad_norm")?,
        stalled: num::<u8>(st, sln)? != 0,
        min_q_grid: f("min_q_grid")?,
        max_q_grid: f("max_q_grid")?,
        min_q_refined: f("min_q_refined")?,
        refinement: parse_refinement(rf, rln)?,
    };
    let weight = section(&secs, "weight").map(parse_weight_lines).transpose()?;
    if let Some(w) = &weight {
        if w.size() != q.len() {
            return Err(Error::IndexSetMismatch);
        }
    }
    Ok((DualSolution { mode, q, r, c_hat, gamma, atoms, kkt, diagnostics }, weight))
}

pub fn write_solution(path: impl AsRef<Path>, sol: &DualSolution, weight: Option<&WeightMatrix>) -> Result<()> {
    fs::write(path, format_solution(sol, weight))?;
    Ok(())
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<(DualSolution, Option<WeightMatrix>)> {
    parse_solution(&fs::read_to_string(path)?)
}

/// Texture model file: `tau`, then `[p]`, `[q]`, `[cx]` coefficient blocks
/// and a `[filter]` block (`d N1 .. Nd` and the coefficients row-major).
pub fn format_model(m: &WienerModel) -> String {
    let mut out = format!("tau {}\n", fmt_f(m.tau));
    let _ = write!(out, "[p]\n{}", format_coefficients(&m.p));
    let _ = write!(out, "[q]\n{}", format_coefficients(&m.q));
    let _ = write!(out, "[cx]\n{}", format_coefficients(&m.c_x));
    let _ = write!(out, "[filter]\n{}", m.filter.dims.len());
    for n in &m.filter.dims {
        let _ = write!(out, " {n}");
    }
    out.push('\n');
    for v in &m.filter.coeffs {
        out.push_str(&fmt_f(*v));
        out.push('\n');
    }
    out
}

pub fn parse_model(text: &str) -> Result<WienerModel> {
    let secs = sections(text);
    let head = keyed(require(&secs, "")?);
    let (ln, t) = lookup(&head, "tau")?;
    let tau = num(t, ln)?;
    let p = parse_coefficient_lines(require(&secs, "p")?)?;
    let q = parse_coefficient_lines(require(&secs, "q")?)?;
    let c_x = parse_coefficient_lines(require(&secs, "cx")?)?;
    if p.index_set() != q.index_set() || c_x.index_set() != q.index_set() {
        return Err(Error::IndexSetMismatch);
    }
    let fl = require(&secs, "filter")?;
    let (&(hl, header), rest) = fl.split_first().ok_or_else(|| perr(0, "empty [filter]"))?;
    let nums: Vec<usize> = tokens(header).map(|s| num(s, hl)).collect::<Result<_>>()?;
    let (&d, dims) = nums.split_first().ok_or_else(|| perr(hl, "empty filter header"))?;
    if dims.len() != d || d != q.index_set().dim() || dims.iter().any(|&n| n == 0) {
        return Err(perr(hl, "filter shape does not match the model dimension"));
    }
    let coeffs: Vec<f64> = rest
        .iter()
        .flat_map(|&(ln, l)| tokens(l).map(move |s| num(s, ln)))
        .collect::<Result<_>>()?;
    if coeffs.len() != dims.iter().product::<usize>() {
        return Err(perr(hl, "filter coefficient count does not match its shape"));
    }
    Ok(WienerModel { tau, p, q, c_x, filter: Filter { dims: dims.to_vec(), coeffs } })
}

pub fn write_model(path: impl AsRef<Path>, m: &WienerModel) -> Result<()> {
    fs::write(path, format_model(m))?;
    Ok(())
}

pub fn read_model(path: impl AsRef<Path>) -> Result<WienerModel> {
    parse_model(&fs::read_to_string(path)?)
}

// ---------------------------------------------------------------------------
// Images

/// Reads a grayscale image (PGM, PBM or anything else the decoder knows) as
/// a binary field: pixels above the midpoint of the darkest and brightest
/// value become 1. Rows are the first axis.
pub fn read_binary_image(path: impl AsRef<Path>) -> Result<DataRecord> {
    let img = image::open(path).map_err(|e| Error::Image(e.to_string()))?.to_luma8();
    let (w, h) = img.dimensions();
    let px = img.into_raw();
    let lo = px.iter().copied().min().unwrap_or(0) as f64;
    let hi = px.iter().copied().max().unwrap_or(0) as f64;
    let mid = 0.5 * (lo + hi);
    let vals = px.iter().map(|&v| if (v as f64) > mid { 1.0 } else { 0.0 }).collect();
    DataRecord::from_real(vec![h as usize, w as usize], vals)
}

/// Writes a two-dimensional field as an image: `.pbm` gives a bitmap (P4),
/// anything else a graymap (P5) with values mapped linearly onto `0..=255`.
pub fn write_image(path: impl AsRef<Path>, y: &DataRecord) -> Result<()> {
    use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
    use image::{ExtendedColorType, ImageEncoder};
    let path = path.as_ref();
    if y.dim() != 2 {
        return Err(Error::InvalidArgument("only two-dimensional fields can be written as images".into()));
    }
    let (h, w) = (y.dims()[0] as u32, y.dims()[1] as u32);
    let vals = y.real_values();
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let bitmap = path.extension().is_some_and(|e| e == "pbm");
    let px: Vec<u8> = vals
        .iter()
        .map(|&v| {
            let g = ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8;
            // The bitmap encoder takes 0 (black) and 1 (white).
            if bitmap {
                u8::from(g > 127)
            } else {
                g
            }
        })
        .collect();
    let file = std::io::BufWriter::new(fs::File::create(path)?);
    let subtype = if bitmap {
        PnmSubtype::Bitmap(SampleEncoding::Binary)
    } else {
        PnmSubtype::Graymap(SampleEncoding::Binary)
    };
    PnmEncoder::new(file)
        .with_subtype(subtype)
        .write_image(&px, w, h, ExtendedColorType::L8)
        .map_err(|e| Error::Image(e.to_string()))
}

/// Reads a flat `key = value` configuration; `#` starts a comment.
pub fn parse_config(reader: impl BufRead) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let l = line.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let (k, v) = l
            .split_once('=')
            .ok_or_else(|| perr(i + 1, format!("expected key = value, found {l:?}")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}
