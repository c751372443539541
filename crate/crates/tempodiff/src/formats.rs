//! Text file formats: window CSVs, the quantile-map sidecar, loss curves,
//! plot data and comparison tables.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};
use tempodiff_core::data::{QuantileMap, SequenceWindow};

use crate::error::{CliError, Result};

pub const QUANTILE_MAP_HEADER: &str = "# tempodiff quantile map v1";

/// Hex SHA-256 of the concatenated byte slices.
pub fn sha256_hex<'a>(parts: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    hex::encode(h.finalize())
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// `# key=value` provenance lines.
pub fn comment_block(comments: &[(String, String)]) -> String {
    comments
        .iter()
        .map(|(k, v)| format!("# {k}={v}\n"))
        .collect()
}

/// Reads `# key=value` comment lines from the head of a file.
pub fn read_comments(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map_while(|l| l.strip_prefix('#'))
        .filter_map(|l| l.trim().split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Normalized windows as `seq_id,t,x_0..,label,user,m_0..` rows.
pub fn windows_to_csv(
    windows: &[SequenceWindow],
    channels: usize,
    comments: &[(String, String)],
) -> String {
    let mut s = comment_block(comments);
    s.push_str("seq_id,t");
    (0..channels).for_each(|c| write!(s, ",x_{c}").unwrap());
    s.push_str(",label,user");
    (0..channels).for_each(|c| write!(s, ",m_{c}").unwrap());
    s.push('\n');
    for (i, w) in windows.iter().enumerate() {
        for t in 0..w.len {
            write!(s, "{i},{t}").unwrap();
            for c in 0..channels {
                write!(s, ",{}", w.x0[t * channels + c]).unwrap();
            }
            write!(s, ",{},{}", w.label, w.user).unwrap();
            for c in 0..channels {
                write!(s, ",{}", w.mask[t * channels + c] as u8).unwrap();
            }
            s.push('\n');
        }
    }
    s
}

struct Row {
    seq: usize,
    t: usize,
    values: Vec<f64>,
    label: usize,
    user: u32,
    mask: Vec<f64>,
}

fn parse_field<T: std::str::FromStr>(
    f: Option<&str>,
    what: &str,
    line: usize,
    path: &Path,
) -> Result<T> {
    f.and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| CliError::format(path, format!("line {line}: bad or missing {what}")))
}

fn group_rows(
    rows: Vec<(usize, Row)>,
    channels: usize,
    path: &Path,
) -> Result<Vec<SequenceWindow>> {
    let mut out: Vec<SequenceWindow> = Vec::new();
    for (line, r) in rows {
        if r.seq == out.len() {
            if r.t != 0 {
                return Err(CliError::format(
                    path,
                    format!("line {line}: sequence {} starts at t={}", r.seq, r.t),
                ));
            }
            out.push(SequenceWindow {
                len: 0,
                channels,
                x0: Vec::new(),
                mask: Vec::new(),
                label: r.label,
                user: r.user,
            });
        } else if r.seq + 1 != out.len() {
            return Err(CliError::format(
                path,
                format!("line {line}: sequence ids must be consecutive from 0"),
            ));
        }
        let w = out.last_mut().expect("a sequence was pushed");
        if r.t != w.len || r.label != w.label || r.user != w.user {
            return Err(CliError::format(
                path,
                format!("line {line}: inconsistent row for sequence {}", r.seq),
            ));
        }
        w.len += 1;
        w.x0.extend(r.values);
        w.mask.extend(r.mask);
    }
    if let Some(first) = out.first() {
        if let Some(bad) = out.iter().position(|w| w.len != first.len) {
            return Err(CliError::format(
                path,
                format!("sequence {bad} has a different length"),
            ));
        }
    }
    Ok(out)
}

fn header_channels(text: &str, prefix: &str, path: &Path) -> Result<usize> {
    let (_, header) = data_lines(text)
        .next()
        .ok_or_else(|| CliError::format(path, "missing header"))?;
    let n = header.split(',').filter(|h| h.starts_with(prefix)).count();
    if n == 0 || !header.starts_with("seq_id,t,") {
        return Err(CliError::format(
            path,
            format!("unexpected header {header:?}"),
        ));
    }
    Ok(n)
}

pub fn windows_from_csv(text: &str, path: &Path) -> Result<Vec<SequenceWindow>> {
    let channels = header_channels(text, "x_", path)?;
    let mut rows = Vec::new();
    for (line, l) in data_lines(text).skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 4 + 2 * channels {
            return Err(CliError::format(
                path,
                format!("line {line}: expected {} fields", 4 + 2 * channels),
            ));
        }
        let mut values = Vec::with_capacity(channels);
        let mut mask = Vec::with_capacity(channels);
        for c in 0..channels {
            values.push(parse_field::<f64>(Some(f[2 + c]), "value", line, path)?);
            let m: u8 = parse_field(Some(f[4 + channels + c]), "mask bit", line, path)?;
            if m > 1 {
                return Err(CliError::format(
                    path,
                    format!("line {line}: mask bits must be 0 or 1"),
                ));
            }
            mask.push(f64::from(m));
        }
        rows.push((
            line,
            Row {
                seq: parse_field(Some(f[0]), "seq_id", line, path)?,
                t: parse_field(Some(f[1]), "t", line, path)?,
                values,
                label: parse_field(Some(f[2 + channels]), "label", line, path)?,
                user: parse_field(Some(f[3 + channels]), "user", line, path)?,
                mask,
            },
        ));
    }
    group_rows(rows, channels, path)
}

/// Synthetic sequences in original units as `seq_id,t,channel_0..,label`.
pub fn synth_to_csv(
    windows: &[SequenceWindow],
    map: &QuantileMap,
    comments: &[(String, String)],
) -> Result<String> {
    let channels = map.channels();
    let mut s = comment_block(comments);
    s.push_str("seq_id,t");
    (0..channels).for_each(|c| write!(s, ",channel_{c}").unwrap());
    s.push_str(",label\n");
    for (i, w) in windows.iter().enumerate() {
        let raw = map.inverse(&w.x0)?;
        for t in 0..w.len {
            write!(s, "{i},{t}").unwrap();
            for v in &raw[t * channels..(t + 1) * channels] {
                write!(s, ",{v}").unwrap();
            }
            writeln!(s, ",{}", w.label).unwrap();
        }
    }
    Ok(s)
}

/// Reads a synthetic CSV and maps it back to normalized units.
pub fn synth_from_csv(text: &str, map: &QuantileMap, path: &Path) -> Result<Vec<SequenceWindow>> {
    let channels = header_channels(text, "channel_", path)?;
    if channels != map.channels() {
        return Err(CliError::format(
            path,
            format!(
                "{channels} channels but the quantile map has {}",
                map.channels()
            ),
        ));
    }
    let mut rows = Vec::new();
    for (line, l) in data_lines(text).skip(1) {
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 3 + channels {
            return Err(CliError::format(
                path,
                format!("line {line}: expected {} fields", 3 + channels),
            ));
        }
        let values = (0..channels)
            .map(|c| parse_field::<f64>(Some(f[2 + c]), "value", line, path))
            .collect::<Result<Vec<_>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::format(
                path,
                format!("line {line}: non-finite value"),
            ));
        }
        rows.push((
            line,
            Row {
                seq: parse_field(Some(f[0]), "seq_id", line, path)?,
                t: parse_field(Some(f[1]), "t", line, path)?,
                values,
                label: parse_field(Some(f[2 + channels]), "label", line, path)?,
                user: 0,
                mask: vec![1.0; channels],
            },
        ));
    }
    let mut windows = group_rows(rows, channels, path)?;
    for w in &mut windows {
        w.x0 = map.transform(&w.x0)?;
    }
    Ok(windows)
}

/// One line per channel: the reference count followed by the values.
pub fn quantile_map_to_text(map: &QuantileMap) -> String {
    let mut s = format!("{QUANTILE_MAP_HEADER}\nchannels {}\n", map.channels());
    for r in map.references() {
        write!(s, "{}", r.len()).unwrap();
        for v in r {
            write!(s, " {v:e}").unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn quantile_map_from_text(text: &str, path: &Path) -> Result<QuantileMap> {
    let mut lines = text.lines();
    if lines.next() != Some(QUANTILE_MAP_HEADER) {
        return Err(CliError::format(path, "not a quantile map file"));
    }
    let channels: usize = lines
        .next()
        .and_then(|l| l.strip_prefix("channels "))
        .and_then(|n| n.trim().parse().ok())
        .ok_or_else(|| CliError::format(path, "missing channel count"))?;
    let mut refs = Vec::with_capacity(channels);
    for c in 0..channels {
        let line = lines
            .next()
            .ok_or_else(|| CliError::format(path, format!("missing channel {c}")))?;
        let mut f = line.split_whitespace();
        let n: usize = parse_field(f.next(), "reference count", c + 3, path)?;
        let values = f
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| CliError::format(path, format!("channel {c}: bad value {v:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != n {
            return Err(CliError::format(
                path,
                format!("channel {c}: expected {n} values, found {}", values.len()),
            ));
        }
        refs.push(values);
    }
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(CliError::format(path, "trailing content"));
    }
    Ok(QuantileMap::from_references(refs)?)
}

/// The loss curve as `epoch,train_loss,val_loss`.
pub fn loss_csv(
    history: &[tempodiff_core::model::EpochRecord],
    comments: &[(String, String)],
) -> String {
    let mut s = comment_block(comments);
    s.push_str("epoch,train_loss,val_loss\n");
    for r in history {
        let val = if r.val_loss.is_nan() {
            String::new()
        } else {
            r.val_loss.to_string()
        };
        writeln!(s, "{},{},{val}", r.epoch, r.train_loss).unwrap();
    }
    s
}

/// Left-aligned columns separated by two spaces.
pub fn aligned_table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            rows.iter()
                .filter_map(|r| r.get(c))
                .map(|v| v.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut s = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, v)| format!("{v:<w$}", w = widths[c]))
            .collect();
        s.push_str(line.join("  ").trim_end());
        s.push('\n');
    }
    s
}

pub fn csv_table(rows: &[Vec<String>]) -> String {
    rows.iter().map(|r| r.join(",") + "\n").collect()
}
