//! Persistence: a binary array container, checksummed checkpoints, surface
//! CSV export and `key = value` manifests.
//!
//! Field container layout (all integers little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8 | magic `TWFIELD\0` |
//! | 4 | version (`1`) |
//! | 4 + n | name length, UTF-8 name |
//! | 4 + 8·d | rank `d`, extents |
//! | 1 | element kind (`1` = 8-byte IEEE float) |
//! | 8·Π extents | row-major payload |
//!
//! A checkpoint is `TWCKPT\0\0`, version, a length-prefixed `key = value`
//! header, a field count, the four state fields as containers, and a trailing
//! CRC-32 of every preceding byte.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::equilibrium::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::operators::State;
use crate::spaces::Grid;

pub const FIELD_MAGIC: &[u8; 8] = b"TWFIELD\0";
pub const CHECKPOINT_MAGIC: &[u8; 8] = b"TWCKPT\0\0";
pub const VERSION: u32 = 1;
const KIND_F64: u8 = 1;

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Field {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Format(format!("shape {shape:?} holds {n} values, got {}", data.len())));
        }
        Ok(Field { name: name.into(), shape, data })
    }
}

pub fn write_field<W: Write>(w: &mut W, f: &Field) -> Result<()> {
    let mut buf = Vec::with_capacity(32 + f.name.len() + 8 * (f.shape.len() + f.data.len()));
    encode_field(&mut buf, f);
    w.write_all(&buf).map_err(io_err)
}

fn encode_field(buf: &mut Vec<u8>, f: &Field) {
    buf.extend_from_slice(FIELD_MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(f.name.len() as u32).to_le_bytes());
    buf.extend_from_slice(f.name.as_bytes());
    buf.extend_from_slice(&(f.shape.len() as u32).to_le_bytes());
    for &s in &f.shape {
        buf.extend_from_slice(&(s as u64).to_le_bytes());
    }
    buf.push(KIND_F64);
    for v in &f.data {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated input: {e}")))?;
    Ok(b)
}

fn take_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(take::<4, R>(r)?))
}

fn take_bytes<R: Read>(r: &mut R, n: usize) -> Result<Vec<u8>> {
    let mut b = vec![0u8; n];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated input: {e}")))?;
    Ok(b)
}

pub fn read_field<R: Read>(r: &mut R) -> Result<Field> {
    if &take::<8, R>(r)? != FIELD_MAGIC {
        return Err(Error::Format("not a field container".into()));
    }
    let version = take_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported field version {version}")));
    }
    let nl = take_u32(r)? as usize;
    let name = String::from_utf8(take_bytes(r, nl)?).map_err(|_| Error::Format("field name is not UTF-8".into()))?;
    let rank = take_u32(r)? as usize;
    if rank > 8 {
        return Err(Error::Format(format!("rank {rank} too large")));
    }
    let mut shape = Vec::with_capacity(rank);
    for _ in 0..rank {
        shape.push(u64::from_le_bytes(take::<8, R>(r)?) as usize);
    }
    let kind = take::<1, R>(r)?[0];
    if kind != KIND_F64 {
        return Err(Error::Format(format!("unsupported element kind {kind}")));
    }
    let n = shape.iter().try_fold(1usize, |a, &s| a.checked_mul(s)).ok_or_else(|| Error::Format("shape overflow".into()))?;
    let raw = take_bytes(r, n.checked_mul(8).ok_or_else(|| Error::Format("shape overflow".into()))?)?;
    let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(Field { name, shape, data })
}

pub fn save_field(path: &Path, f: &Field) -> Result<()> {
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    write_field(&mut file, f)
}

pub fn load_field(path: &Path) -> Result<Field> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path).map_err(io_err)?);
    read_field(&mut file)
}

/// The state as four coefficient arrays: slabs are `[N_z, N_x - 1]`,
/// `eta` is `[N_x - 1]`.
pub fn state_fields(grid: &Grid, s: &State) -> Vec<Field> {
    let (nz, nc) = (grid.nz, grid.nc());
    vec![
        Field { name: "q".into(), shape: vec![nz, nc], data: s.q.clone() },
        Field { name: "u1".into(), shape: vec![nz, nc], data: s.u1.clone() },
        Field { name: "u2".into(), shape: vec![nz, nc], data: s.u2.clone() },
        Field { name: "eta".into(), shape: vec![nc], data: s.eta.clone() },
    ]
}

fn state_from_fields(grid: &Grid, fields: Vec<Field>) -> Result<State> {
    let (nz, nc) = (grid.nz, grid.nc());
    let mut st = State::zeros(grid);
    for f in fields {
        let (slot, shape) = match f.name.as_str() {
            "q" => (&mut st.q, vec![nz, nc]),
            "u1" => (&mut st.u1, vec![nz, nc]),
            "u2" => (&mut st.u2, vec![nz, nc]),
            "eta" => (&mut st.eta, vec![nc]),
            other => return Err(Error::Format(format!("unexpected field {other:?}"))),
        };
        if f.shape != shape {
            return Err(Error::Format(format!("field {} has shape {:?}, expected {shape:?}", f.name, f.shape)));
        }
        *slot = f.data;
    }
    Ok(st)
}

/// CRC-32 of the hydrostatic density samples, to detect a profile mismatch
/// on reload.
pub fn profile_hash(p: &EquilibriumProfile) -> u32 {
    let mut h = crc32fast::Hasher::new();
    for v in p.rho.iter().chain(&p.y) {
        h.update(&v.to_le_bytes());
    }
    h.finalize()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub l: f64,
    pub nx: usize,
    pub nz: usize,
    pub b: f64,
    pub gamma: f64,
    /// Free-form forcing description, e.g. `gaussian amplitude=... center=...`.
    pub forcing: String,
    pub profile_hash: u32,
    /// Solver that produced the state.
    pub provenance: String,
    pub state: State,
}

impl Checkpoint {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.l, self.nx, self.nz, self.b)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let grid = self.grid()?;
        let mut header = Manifest::new();
        header.set("l", fmt_f64(self.l));
        header.set("nx", self.nx);
        header.set("nz", self.nz);
        header.set("b", fmt_f64(self.b));
        header.set("gamma", fmt_f64(self.gamma));
        header.set("forcing", &self.forcing);
        header.set("profile_hash", format!("{:08x}", self.profile_hash));
        header.set("provenance", &self.provenance);
        let text = header.to_text();
        let mut buf = Vec::new();
        buf.extend_from_slice(CHECKPOINT_MAGIC);
        buf.extend_from_slice(&VERSION.to_le_bytes());
        buf.extend_from_slice(&(text.len() as u32).to_le_bytes());
        buf.extend_from_slice(text.as_bytes());
        let fields = state_fields(&grid, &self.state);
        buf.extend_from_slice(&(fields.len() as u32).to_le_bytes());
        for f in &fields {
            encode_field(&mut buf, f);
        }
        let crc = crc32fast::hash(&buf);
        buf.extend_from_slice(&crc.to_le_bytes());
        Ok(buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 20 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(Error::Format("not a checkpoint".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(Error::Checksum { stored, computed });
        }
        let mut r = &body[8..];
        let version = take_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let hl = take_u32(&mut r)? as usize;
        let text = String::from_utf8(take_bytes(&mut r, hl)?).map_err(|_| Error::Format("header is not UTF-8".into()))?;
        let header = Manifest::parse(&text)?;
        let num = |k: &str| -> Result<f64> { header.get(k).ok_or_else(|| Error::Format(format!("missing {k}")))?.parse().map_err(|_| Error::Format(format!("bad {k}"))) };
        let int = |k: &str| -> Result<usize> { header.get(k).ok_or_else(|| Error::Format(format!("missing {k}")))?.parse().map_err(|_| Error::Format(format!("bad {k}"))) };
        let (l, nx, nz, b, gamma) = (num("l")?, int("nx")?, int("nz")?, num("b")?, num("gamma")?);
        let profile_hash = u32::from_str_radix(header.get("profile_hash").unwrap_or(""), 16).map_err(|_| Error::Format("bad profile_hash".into()))?;
        let grid = Grid::new(l, nx, nz, b)?;
        let nf = take_u32(&mut r)?;
        let mut fields = Vec::new();
        for _ in 0..nf {
            fields.push(read_field(&mut r)?);
        }
        if !r.is_empty() {
            return Err(Error::Format(format!("{} trailing bytes", r.len())));
        }
        Ok(Checkpoint {
            l,
            nx,
            nz,
            b,
            gamma,
            forcing: header.get("forcing").unwrap_or("").to_string(),
            profile_hash,
            provenance: header.get("provenance").unwrap_or("").to_string(),
            state: state_from_fields(&grid, fields)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).map_err(io_err)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path).map_err(io_err)?)
    }
}

/// Round-trip exact decimal form.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Samples of `eta` at `m` equispaced points, as `x,eta` CSV with header.
pub fn surface_csv(grid: &Grid, eta: &[f64], m: usize) -> String {
    let mut s = String::from("x,eta\n");
    for i in 0..m {
        let x = grid.l * i as f64 / m as f64;
        let _ = writeln!(s, "{:.16e},{:.16e}", x, crate::diagnostics::eval_surface(grid, eta, x));
    }
    s
}

/// Several surfaces sampled on the same abscissae: `x,<label1>,<label2>,...`.
pub fn aligned_surfaces_csv(grid: &Grid, profiles: &[(String, Vec<f64>)], m: usize) -> String {
    let mut s = String::from("x");
    for (name, _) in profiles {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for i in 0..m {
        let x = grid.l * i as f64 / m as f64;
        let _ = write!(s, "{:.16e}", x);
        for (_, eta) in profiles {
            let _ = write!(s, ",{:.16e}", crate::diagnostics::eval_surface(grid, eta, x));
        }
        s.push('\n');
    }
    s
}

/// Ordered `key = value` text. Keys may contain dots for sections.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replace an existing key in place or append it.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let v = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = v,
            None => self.entries.push((key.to_string(), v)),
        }
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string().replace('\n', " ")));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Append every `key = value` line of `text`, keys prefixed.
    pub fn absorb(&mut self, prefix: &str, text: &str) -> Result<()> {
        for (k, v) in Manifest::parse(text)?.entries {
            self.entries.push((format!("{prefix}{k}"), v));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut m = Manifest::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t.split_once(" = ").or_else(|| t.split_once('=')).ok_or_else(|| Error::Format(format!("line {}: expected key = value", i + 1)))?;
            m.entries.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(io_err)
    }

    pub fn append_to(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path).map_err(io_err)?;
        f.write_all(self.to_text().as_bytes()).map_err(io_err)
    }
}
